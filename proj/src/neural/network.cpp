#include "rte/neural/network.hpp"

#include <sstream>

#include "rte/errors.hpp"

namespace rte::nn {

std::string shape_string(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i];
    os << ')';
    return os.str();
}

std::string kind_name(NetworkKind k) { return k == NetworkKind::mlp ? "mlp" : "cnn"; }

NetworkKind parse_kind(const std::string& s) {
    if (s == "mlp") return NetworkKind::mlp;
    if (s == "cnn") return NetworkKind::cnn;
    throw ConfigError("network kind must be mlp or cnn, got '" + s + "'", "network.kind");
}

NetworkSpec reference_mlp_spec() {
    NetworkSpec s;
    s.kind = NetworkKind::mlp;
    s.hidden_layers = 1;
    s.nodes = 7405;
    return s;
}

NetworkSpec reference_cnn_spec() {
    NetworkSpec s;
    s.kind = NetworkKind::cnn;
    s.conv_layers = 1;
    s.filters = 9;
    s.filter_h = 2;
    s.filter_w = 3;
    s.pool_h = 1;
    s.pool_w = 1;
    s.dense_layers = 1;
    s.dense_nodes = 724;
    return s;
}

nlohmann::json spec_to_json(const NetworkSpec& s) {
    nlohmann::json j{{"kind", kind_name(s.kind)}, {"output_dim", s.output_dim}, {"seed", s.seed},
                     {"activation", "elu"}};
    if (s.kind == NetworkKind::mlp) {
        j["hidden_layers"] = s.hidden_layers;
        j["nodes"] = s.nodes;
    } else {
        j["conv_layers"] = s.conv_layers;
        j["filters"] = s.filters;
        j["filter_size"] = {s.filter_h, s.filter_w};
        j["pool_size"] = {s.pool_h, s.pool_w};
        j["dense_layers"] = s.dense_layers;
        j["dense_nodes"] = s.dense_nodes;
    }
    return j;
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
    NetworkSpec s;
    try {
        s.kind = parse_kind(j.at("kind").get<std::string>());
        s.output_dim = j.value("output_dim", std::size_t{0});
        s.seed = j.value("seed", std::uint64_t{0});
        if (s.kind == NetworkKind::mlp) {
            s.hidden_layers = j.value("hidden_layers", s.hidden_layers);
            s.nodes = j.value("nodes", s.nodes);
        } else {
            s.conv_layers = j.value("conv_layers", s.conv_layers);
            s.filters = j.value("filters", s.filters);
            if (j.contains("filter_size")) {
                s.filter_h = j["filter_size"].at(0).get<std::size_t>();
                s.filter_w = j["filter_size"].at(1).get<std::size_t>();
            }
            if (j.contains("pool_size")) {
                s.pool_h = j["pool_size"].at(0).get<std::size_t>();
                s.pool_w = j["pool_size"].at(1).get<std::size_t>();
            }
            s.dense_layers = j.value("dense_layers", s.dense_layers);
            s.dense_nodes = j.value("dense_nodes", s.dense_nodes);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what(), "network");
    }
    return s;
}

template <class T>
Network<T>::Network(Shape input_shape, std::vector<std::unique_ptr<Layer<T>>> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    Shape s = input_shape_;
    for (const auto& l : layers_) s = l->output_shape(s);
    output_shape_ = s;
    activations_.resize(layers_.size() + 1);
    grads_.resize(layers_.size() + 1);
}

template <class T>
std::vector<Shape> Network<T>::activation_shapes() const {
    std::vector<Shape> out{input_shape_};
    for (const auto& l : layers_) out.push_back(l->output_shape(out.back()));
    return out;
}

template <class T>
std::vector<Param<T>*> Network<T>::params() {
    std::vector<Param<T>*> out;
    for (auto& l : layers_) {
        for (auto* p : l->params()) out.push_back(p);
    }
    return out;
}

template <class T>
std::vector<const Param<T>*> Network<T>::params() const {
    std::vector<const Param<T>*> out;
    for (const auto& l : layers_) {
        for (const auto* p : static_cast<const Layer<T>&>(*l).params()) out.push_back(p);
    }
    return out;
}

template <class T>
std::size_t Network<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : params()) n += p->value.size();
    return n;
}

template <class T>
const Tensor<T>& Network<T>::forward(const Tensor<T>& input) {
    if (input.sample_size() != shape_size(input_shape_)) {
        throw ShapeError("network expects samples of shape " + shape_string(input_shape_) + ", got " +
                         shape_string(input.shape));
    }
    activations_[0] = input;
    activations_[0].shape = batched(input.batch(), input_shape_);
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->forward(activations_[i], activations_[i + 1]);
    return activations_.back();
}

template <class T>
void Network<T>::backward(const Tensor<T>& grad_output) {
    if (grad_output.data.size() != activations_.back().data.size()) {
        throw ShapeError("output gradient shape does not match the last forward pass");
    }
    grads_.back() = grad_output;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        Tensor<T>* gin = i > 0 ? &grads_[i] : nullptr;
        layers_[i]->backward(activations_[i], activations_[i + 1], grads_[i + 1], gin);
    }
}

template <class T>
void Network<T>::zero_grad() {
    for (auto* p : params()) std::fill(p->grad.begin(), p->grad.end(), T{});
}

template <class T>
Tensor<T> Network<T>::predict(const Tensor<T>& input) const {
    if (input.sample_size() != shape_size(input_shape_)) {
        throw ShapeError("network expects samples of shape " + shape_string(input_shape_) + ", got " +
                         shape_string(input.shape));
    }
    Tensor<T> a = input;
    a.shape = batched(input.batch(), input_shape_);
    Tensor<T> b;
    for (const auto& l : layers_) {
        l->forward(a, b);
        std::swap(a, b);
    }
    return a;
}

template <class T>
void glorot_init(Network<T>& net, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        Layer<T>& l = net.layer(i);
        double fan_in = 0.0, fan_out = 0.0;
        if (auto* d = dynamic_cast<Dense<T>*>(&l)) {
            fan_in = static_cast<double>(d->inputs());
            fan_out = static_cast<double>(d->outputs());
        } else if (auto* c = dynamic_cast<Conv2D<T>*>(&l)) {
            const double field = static_cast<double>(c->kernel_h() * c->kernel_w());
            fan_in = static_cast<double>(c->in_channels()) * field;
            fan_out = static_cast<double>(c->filters()) * field;
        } else {
            continue;
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto* p : l.params()) {
            if (p->regularized) {
                for (auto& v : p->value) v = static_cast<T>(rng.uniform(-limit, limit));
            } else {
                std::fill(p->value.begin(), p->value.end(), T{});
            }
            std::fill(p->grad.begin(), p->grad.end(), T{});
        }
    }
}

template <class T>
Network<T> build_mlp(const NetworkSpec& spec, std::size_t input_dim, std::size_t output_dim) {
    if (spec.kind != NetworkKind::mlp) throw ConfigError("build_mlp needs an mlp spec", "network.kind");
    if (input_dim < 1 || output_dim < 1 || spec.nodes < 1) throw ShapeError("mlp dimensions must be positive");
    std::vector<std::unique_ptr<Layer<T>>> layers;
    std::size_t width = input_dim;
    for (std::size_t l = 0; l < spec.hidden_layers; ++l) {
        layers.push_back(std::make_unique<Dense<T>>(width, spec.nodes));
        layers.push_back(std::make_unique<Elu<T>>());
        width = spec.nodes;
    }
    layers.push_back(std::make_unique<Dense<T>>(width, output_dim));
    Network<T> net({input_dim}, std::move(layers));
    glorot_init(net, spec.seed);
    return net;
}

template <class T>
Network<T> build_cnn(const NetworkSpec& spec, const Shape& image_shape, std::size_t output_dim) {
    if (spec.kind != NetworkKind::cnn) throw ConfigError("build_cnn needs a cnn spec", "network.kind");
    if (image_shape.size() != 3) throw ShapeError("cnn input must be (C, H, W)");
    if (output_dim < 1 || spec.filters < 1 || spec.dense_nodes < 1) throw ShapeError("cnn dimensions must be positive");
    std::vector<std::unique_ptr<Layer<T>>> layers;
    Shape s = image_shape;
    for (std::size_t l = 0; l < spec.conv_layers; ++l) {
        layers.push_back(std::make_unique<Conv2D<T>>(s[0], spec.filters, spec.filter_h, spec.filter_w));
        s = layers.back()->output_shape(s);
        layers.push_back(std::make_unique<Elu<T>>());
        layers.push_back(std::make_unique<AvgPool2D<T>>(spec.pool_h, spec.pool_w));
        s = layers.back()->output_shape(s);
    }
    layers.push_back(std::make_unique<Flatten<T>>());
    std::size_t width = shape_size(s);
    for (std::size_t l = 0; l < spec.dense_layers; ++l) {
        layers.push_back(std::make_unique<Dense<T>>(width, spec.dense_nodes));
        layers.push_back(std::make_unique<Elu<T>>());
        width = spec.dense_nodes;
    }
    layers.push_back(std::make_unique<Dense<T>>(width, output_dim));
    Network<T> net(image_shape, std::move(layers));
    glorot_init(net, spec.seed);
    return net;
}

template <class T>
Network<T> build_network(const NetworkSpec& spec, const Shape& input_shape, std::size_t output_dim) {
    if (spec.kind == NetworkKind::mlp) return build_mlp<T>(spec, shape_size(input_shape), output_dim);
    return build_cnn<T>(spec, input_shape, output_dim);
}

template class Network<float>;
template class Network<double>;
template Network<float> build_mlp<float>(const NetworkSpec&, std::size_t, std::size_t);
template Network<double> build_mlp<double>(const NetworkSpec&, std::size_t, std::size_t);
template Network<float> build_cnn<float>(const NetworkSpec&, const Shape&, std::size_t);
template Network<double> build_cnn<double>(const NetworkSpec&, const Shape&, std::size_t);
template Network<float> build_network<float>(const NetworkSpec&, const Shape&, std::size_t);
template Network<double> build_network<double>(const NetworkSpec&, const Shape&, std::size_t);
template void glorot_init<float>(Network<float>&, std::uint64_t);
template void glorot_init<double>(Network<double>&, std::uint64_t);

}  // namespace rte::nn
