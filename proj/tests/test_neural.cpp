#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "rte/neural/model.hpp"
#include "rte/rng.hpp"

using namespace rte;
using namespace rte::nn;

namespace {

void randomize(Layer<double>& layer, Rng& rng) {
    for (auto* p : layer.params())
        for (auto& v : p->value) v = rng.uniform(-1.0, 1.0);
}

Tensor<double> random_tensor(const Shape& shape, Rng& rng) {
    Tensor<double> t(shape);
    for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

double contract(const Tensor<double>& a, const Tensor<double>& c) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) s += a.data[k] * c.data[k];
    return s;
}

// Checks input and parameter gradients of L = sum(c * layer(x)) against
// central differences. Returns the worst absolute discrepancy.
double gradient_error(Layer<double>& layer, Tensor<double> x, Rng& rng) {
    const double h = 1e-6;
    Tensor<double> y;
    layer.forward(x, y);
    const Tensor<double> c = random_tensor(y.shape, rng);
    for (auto* p : layer.params()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
    Tensor<double> gin;
    layer.backward(x, y, c, &gin);

    auto loss = [&](const Tensor<double>& in) {
        Tensor<double> out;
        layer.forward(in, out);
        return contract(out, c);
    };
    double worst = 0.0;
    for (std::size_t k = 0; k < x.data.size(); ++k) {
        const double saved = x.data[k];
        x.data[k] = saved + h;
        const double up = loss(x);
        x.data[k] = saved - h;
        const double down = loss(x);
        x.data[k] = saved;
        worst = std::max(worst, std::abs((up - down) / (2 * h) - gin.data[k]));
    }
    for (auto* p : layer.params()) {
        for (std::size_t k = 0; k < p->value.size(); ++k) {
            const double saved = p->value[k];
            p->value[k] = saved + h;
            const double up = loss(x);
            p->value[k] = saved - h;
            const double down = loss(x);
            p->value[k] = saved;
            worst = std::max(worst, std::abs((up - down) / (2 * h) - p->grad[k]));
        }
    }
    return worst;
}

const Samples<double>* const no_validation = nullptr;

Samples<double> line_samples(std::size_t n, double slope) {
    Samples<double> s;
    s.sample_shape = {1};
    s.output_dim = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n - 1);
        s.x.push_back(x);
        s.y.push_back(slope * x);
    }
    return s;
}

}  // namespace

TEST_CASE("dense with identity weights passes inputs through") {
    Dense<double> d(3, 3);
    auto ps = d.params();
    for (std::size_t i = 0; i < 3; ++i) ps[0]->value[i * 3 + i] = 1.0;
    Tensor<double> x({2, 3});
    x.data = {1, 2, 3, -4, 5, -6};
    Tensor<double> y;
    d.forward(x, y);
    CHECK(y.data == x.data);
    ps[1]->value = {1, 0, -1};
    d.forward(x, y);
    CHECK(y.data == std::vector<double>{2, 2, 2, -3, 5, -7});
}

TEST_CASE("elu values") {
    CHECK(elu(0.0) == 0.0);
    CHECK(elu(2.5) == 2.5);
    CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-15));
    CHECK(elu(-50.0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("layer gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        Dense<double> dense(5, 4);
        randomize(dense, rng);
        CHECK(gradient_error(dense, random_tensor({3, 5}, rng), rng) < 1e-5);

        Conv2D<double> conv(2, 2, 2, 3);
        randomize(conv, rng);
        CHECK(gradient_error(conv, random_tensor({2, 2, 6, 8}, rng), rng) < 1e-5);

        Conv2D<double> odd(3, 2, 3, 1);
        randomize(odd, rng);
        CHECK(gradient_error(odd, random_tensor({1, 3, 5, 4}, rng), rng) < 1e-5);

        AvgPool2D<double> pool(2, 3);
        CHECK(gradient_error(pool, random_tensor({2, 2, 5, 7}, rng), rng) < 1e-5);

        Elu<double> act;
        CHECK(gradient_error(act, random_tensor({4, 10}, rng), rng) < 1e-5);
    }
}

TEST_CASE("network parameter gradients match finite differences") {
    NetworkSpec spec = reference_cnn_spec();
    spec.filters = 2;
    spec.dense_nodes = 5;
    spec.pool_h = 2;
    spec.pool_w = 2;
    spec.seed = 3;
    Network<double> net = build_cnn<double>(spec, {3, 5, 6}, 4);
    Rng rng(8);
    const Tensor<double> x = random_tensor({2, 3, 5, 6}, rng);
    const Tensor<double> c = random_tensor({2, 4}, rng);
    net.zero_grad();
    net.forward(x);
    net.backward(c);
    const double h = 1e-6;
    double worst = 0.0;
    for (auto* p : net.params()) {
        for (std::size_t k = 0; k < p->value.size(); ++k) {
            const double saved = p->value[k];
            p->value[k] = saved + h;
            const double up = contract(net.predict(x), c);
            p->value[k] = saved - h;
            const double down = contract(net.predict(x), c);
            p->value[k] = saved;
            worst = std::max(worst, std::abs((up - down) / (2 * h) - p->grad[k]));
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("same-padded all-ones kernel sums neighbourhoods") {
    Conv2D<double> conv(1, 1, 3, 3);
    std::fill(conv.params()[0]->value.begin(), conv.params()[0]->value.end(), 1.0);
    Tensor<double> x({1, 1, 4, 5});
    std::fill(x.data.begin(), x.data.end(), 1.0);
    Tensor<double> y;
    conv.forward(x, y);
    REQUIRE(y.shape == Shape{1, 1, 4, 5});
    CHECK(y.data[1 * 5 + 1] == 9.0);
    CHECK(y.data[2 * 5 + 3] == 9.0);
    CHECK(y.data[0] == 4.0);
    CHECK(y.data[2] == 6.0);

    // Even kernels put the extra tap below and to the right.
    Conv2D<double> even(1, 1, 2, 2);
    even.params()[0]->value = {1, 0, 0, 0};
    Tensor<double> ramp({1, 1, 3, 3});
    for (std::size_t k = 0; k < 9; ++k) ramp.data[k] = static_cast<double>(k);
    even.forward(ramp, y);
    CHECK(y.data == ramp.data);
    even.params()[0]->value = {0, 0, 0, 1};
    even.forward(ramp, y);
    CHECK(y.data == std::vector<double>{4, 5, 0, 7, 8, 0, 0, 0, 0});
}

TEST_CASE("average pooling") {
    Tensor<double> x({1, 1, 2, 2});
    x.data = {1, 2, 3, 4};
    Tensor<double> y;
    AvgPool2D<double>(1, 1).forward(x, y);
    CHECK(y.data == x.data);
    AvgPool2D<double>(2, 2).forward(x, y);
    REQUIRE(y.data.size() == 1);
    CHECK(y.data[0] == 2.5);
    Tensor<double> odd({1, 1, 3, 1});
    odd.data = {1, 2, 6};
    AvgPool2D<double>(2, 1).forward(odd, y);
    CHECK(y.data == std::vector<double>{1.5, 6.0});
}

TEST_CASE("parameter counts and shapes") {
    NetworkSpec mlp = reference_mlp_spec();
    CHECK(build_mlp<float>(mlp, 2960, 280).parameter_count() == 23999885);
    NetworkSpec tiny;
    tiny.kind = NetworkKind::mlp;
    tiny.hidden_layers = 1;
    tiny.nodes = 1;
    CHECK(build_mlp<double>(tiny, 1, 1).parameter_count() == 4);

    NetworkSpec cnn = reference_cnn_spec();
    cnn.dense_nodes = 8;
    const Network<float> net = build_cnn<float>(cnn, {3, 22, 122}, 280);
    const auto shapes = net.activation_shapes();
    CHECK(shapes[1] == Shape{9, 22, 122});
    CHECK(shapes[4] == Shape{24156});
    CHECK(net.output_shape() == Shape{280});
    CHECK(net.parameter_count() == 9 * 3 * 6 + 9 + 24156 * 8 + 8 + 8 * 280 + 280);
    CHECK(input_shape_for(NetworkKind::cnn, FurnaceMesh(120, 20, 12.0, 2.0)) == Shape{3, 22, 122});
    CHECK(input_shape_for(NetworkKind::mlp, FurnaceMesh(120, 20, 12.0, 2.0)) == Shape{2960});
}

TEST_CASE("initialization is deterministic per seed and Glorot bounded") {
    NetworkSpec s;
    s.kind = NetworkKind::mlp;
    s.nodes = 30;
    s.seed = 12;
    const auto a = build_mlp<float>(s, 10, 4);
    const auto b = build_mlp<float>(s, 10, 4);
    s.seed = 13;
    const auto c = build_mlp<float>(s, 10, 4);
    CHECK(a.params()[0]->value == b.params()[0]->value);
    CHECK(a.params()[0]->value != c.params()[0]->value);
    const float limit = std::sqrt(6.0f / 40.0f);
    for (float v : a.params()[0]->value) CHECK(std::abs(v) <= limit);
    for (float v : a.params()[1]->value) CHECK(v == 0.0f);
}

TEST_CASE("adam first step moves by the learning rate") {
    Param<double> p{"kernel", {1}, {1.0}, {5.0}, true};
    TrainConfig cfg;
    Adam<double> adam(cfg, {&p});
    adam.step();
    CHECK(p.value[0] - 1.0 == doctest::Approx(-1e-3).epsilon(1e-6));
    Param<double> q{"kernel", {2}, {0.5, -0.5}, {0.0, 0.0}, true};
    Adam<double> still(cfg, {&q});
    still.step();
    CHECK(q.value == std::vector<double>{0.5, -0.5});
}

TEST_CASE("training a line lowers the loss every epoch") {
    NetworkSpec s;
    s.kind = NetworkKind::mlp;
    s.nodes = 8;
    s.seed = 1;
    Network<double> net = build_mlp<double>(s, 1, 1);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 64;
    cfg.l2 = 0.0;
    cfg.learning_rate = 1e-2;
    const auto hist = train(net, line_samples(64, 2.0), no_validation, cfg);
    REQUIRE(hist.train_loss.size() == 10);
    for (std::size_t e = 1; e < 10; ++e) CHECK(hist.train_loss[e] < hist.train_loss[e - 1]);
}

TEST_CASE("kernel regularization shrinks weights") {
    NetworkSpec s;
    s.kind = NetworkKind::mlp;
    s.nodes = 16;
    s.seed = 2;
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 16;
    cfg.l2 = 0.0;
    Network<double> plain = build_mlp<double>(s, 1, 1);
    train(plain, line_samples(32, 2.0), no_validation, cfg);
    cfg.l2 = 0.05;
    Network<double> shrunk = build_mlp<double>(s, 1, 1);
    train(shrunk, line_samples(32, 2.0), no_validation, cfg);
    CHECK(l2_penalty(shrunk) < l2_penalty(plain));
}

TEST_CASE("full-batch training ignores sample order") {
    NetworkSpec s;
    s.kind = NetworkKind::mlp;
    s.nodes = 6;
    s.seed = 4;
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 1000;
    Network<double> a = build_mlp<double>(s, 1, 1);
    Network<double> b = build_mlp<double>(s, 1, 1);
    cfg.shuffle_seed = 1;
    train(a, line_samples(40, -1.5), no_validation, cfg);
    cfg.shuffle_seed = 99;
    train(b, line_samples(40, -1.5), no_validation, cfg);
    for (std::size_t p = 0; p < a.params().size(); ++p)
        for (std::size_t k = 0; k < a.params()[p]->value.size(); ++k)
            CHECK(a.params()[p]->value[k] == doctest::Approx(b.params()[p]->value[k]).epsilon(1e-12));
}

TEST_CASE("training is reproducible and reports validation") {
    NetworkSpec s;
    s.kind = NetworkKind::mlp;
    s.nodes = 6;
    s.seed = 5;
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 7;
    cfg.val_every = 2;
    const auto data = line_samples(30, 3.0);
    Network<double> a = build_mlp<double>(s, 1, 1);
    Network<double> b = build_mlp<double>(s, 1, 1);
    const auto ha = train(a, data, &data, cfg);
    const auto hb = train(b, data, &data, cfg);
    CHECK(ha.train_loss == hb.train_loss);
    REQUIRE(ha.val_loss.size() == 3);
    CHECK(ha.val_loss.back().first == 6);
    CHECK(ha.val_loss.back().second == doctest::Approx(mean_absolute_error(a, data)));

    Network<double> c = build_mlp<double>(s, 1, 1);
    const auto hc = train(c, data, no_validation, cfg, [](std::size_t epoch, double, std::optional<double>) {
        return epoch < 3;
    });
    CHECK(hc.epochs_run == 3);
    CHECK(hc.stopped_early);
}

TEST_CASE("bad training inputs are rejected") {
    NetworkSpec s;
    s.kind = NetworkKind::mlp;
    s.nodes = 2;
    Network<double> net = build_mlp<double>(s, 1, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    Samples<double> wrong = line_samples(5, 1.0);
    wrong.sample_shape = {2};
    wrong.x.resize(10);
    CHECK_THROWS_AS(train(net, wrong, no_validation, cfg), ShapeError);
    cfg.learning_rate = 0.0;
    CHECK_THROWS(train(net, line_samples(5, 1.0), no_validation, cfg));
    cfg.learning_rate = 1e-3;
    auto bad = line_samples(5, 1.0);
    bad.y[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(train(net, bad, no_validation, cfg), TrainingError);
}

TEST_CASE("spec json round trip") {
    NetworkSpec s = reference_cnn_spec();
    s.seed = 77;
    s.output_dim = 20;
    CHECK(spec_from_json(spec_to_json(s)) == s);
    CHECK_THROWS_AS(parse_kind("rnn"), ConfigError);
}

TEST_CASE("model save and load preserves predictions") {
    NetworkSpec s = reference_cnn_spec();
    s.filters = 3;
    s.dense_nodes = 10;
    s.seed = 9;
    const FurnaceMesh mesh(6, 3, 6.0, 3.0);
    const Shape in = input_shape_for(NetworkKind::cnn, mesh);
    TrainedModel m{s, build_cnn<float>(s, in, 18), {{"target", "all"}}};
    const auto path = std::filesystem::temp_directory_path() / "rte_test_model.rtm";
    save_model(path, m);
    const TrainedModel back = load_model(path);
    CHECK(back.spec == s);
    CHECK(back.metadata == m.metadata);
    Rng rng(1);
    Tensor<float> x(batched(4, in));
    for (auto& v : x.data) v = static_cast<float>(rng.uniform());
    CHECK(back.net.predict(x).data == m.net.predict(x).data);
    CHECK(m.net.predict(x).data == m.net.predict(x).data);

    auto bytes = read_file_bytes(path);
    bytes[bytes.size() - 3] ^= std::byte{0x40};
    write_file_bytes(path, bytes);
    CHECK_THROWS_AS(load_model(path), IoError);

    Samples<float> set;
    set.sample_shape = in;
    set.output_dim = 18;
    set.x = x.data;
    set.y.resize(4 * 18);
    const InferenceTiming t = predict_timed(m.net, set);
    CHECK(t.samples == 4);
    CHECK(t.mean_seconds > 0.0);
    CHECK(t.std_seconds >= 0.0);
}

TEST_CASE("samples slice the output target") {
    const FurnaceMesh mesh(4, 2, 4.0, 2.0);
    NormalizedDataset ds;
    ds.mesh = mesh;
    ds.n_train = 2;
    for (int r = 0; r < 2; ++r) {
        ds.inputs.emplace_back(2 * 12 + 8, 0.1 * (r + 1));
        std::vector<double> h(12);
        for (std::size_t k = 0; k < 12; ++k) h[k] = static_cast<double>(k) + 100.0 * r;
        ds.outputs.push_back(h);
    }
    const auto east = make_samples<double>(ds, 0, 2, NetworkKind::mlp, mesh.wall_range(Wall::east));
    CHECK(east.output_dim == 2);
    CHECK(east.y == std::vector<double>{4, 5, 104, 105});
    const auto img = make_samples<float>(ds, 0, 2, NetworkKind::cnn, {0, 12});
    CHECK(img.sample_shape == Shape{3, 4, 6});
    CHECK(img.x.size() == 2 * 72);
    CHECK_THROWS_AS(make_samples<double>(ds, 0, 2, NetworkKind::mlp, {10, 14}), ShapeError);
}

TEST_CASE("one-node network on ten points improves every epoch at the default rate") {
    NetworkSpec s;
    s.kind = NetworkKind::mlp;
    s.hidden_layers = 1;
    s.nodes = 1;
    Network<double> net = build_mlp<double>(s, 1, 1);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.l2 = 0.0;
    const auto hist = train(net, line_samples(10, 2.0), no_validation, cfg);
    for (std::size_t e = 1; e < 10; ++e) CHECK(hist.train_loss[e] < hist.train_loss[e - 1]);
}

TEST_CASE("exact predictions leave the weights unchanged") {
    NetworkSpec s;
    s.kind = NetworkKind::mlp;
    s.nodes = 4;
    s.seed = 6;
    Network<double> net = build_mlp<double>(s, 1, 1);
    Samples<double> data = line_samples(12, 0.0);
    Tensor<double> x({12, 1});
    x.data = data.x;
    data.y = net.predict(x).data;
    std::vector<std::vector<double>> before;
    for (const auto* p : net.params()) before.push_back(p->value);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 5;
    cfg.l2 = 0.0;
    train(net, data, no_validation, cfg);
    for (std::size_t p = 0; p < before.size(); ++p) CHECK(net.params()[p]->value == before[p]);
}
