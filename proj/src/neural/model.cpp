#include "rte/neural/model.hpp"

#include <chrono>
#include <cmath>
#include <cstring>

#include "rte/errors.hpp"
#include "rte/hash.hpp"

namespace rte::nn {

Shape input_shape_for(NetworkKind kind, const FurnaceMesh& mesh) {
    if (kind == NetworkKind::mlp) return {2 * mesh.boundary_count() + mesh.cell_count()};
    return {3, mesh.ny() + 2, mesh.nx() + 2};
}

template <class T>
std::vector<T> encode_sample(NetworkKind kind, std::span<const double> flat, const FurnaceMesh& mesh) {
    std::vector<T> out;
    if (kind == NetworkKind::mlp) {
        if (flat.size() != 2 * mesh.boundary_count() + mesh.cell_count()) {
            throw ShapeError("flat input length does not match the mesh");
        }
        out.assign(flat.begin(), flat.end());
    } else {
        const Image img = cnn_view_from_flat(flat, mesh);
        out.assign(img.pixels.begin(), img.pixels.end());
    }
    return out;
}

template <class T>
Samples<T> make_samples(const NormalizedDataset& ds, std::span<const std::size_t> rows, NetworkKind kind,
                        IndexRange target) {
    if (target.end > ds.mesh.boundary_count() || target.size() == 0) throw ShapeError("invalid output target range");
    Samples<T> s;
    s.sample_shape = input_shape_for(kind, ds.mesh);
    s.output_dim = target.size();
    s.x.reserve(rows.size() * s.sample_size());
    s.y.reserve(rows.size() * s.output_dim);
    for (std::size_t r : rows) {
        const auto enc = encode_sample<T>(kind, ds.inputs.at(r), ds.mesh);
        s.x.insert(s.x.end(), enc.begin(), enc.end());
        for (std::size_t k = target.begin; k < target.end; ++k) s.y.push_back(static_cast<T>(ds.outputs[r][k]));
    }
    return s;
}

template <class T>
Samples<T> make_samples(const NormalizedDataset& ds, std::size_t begin, std::size_t end, NetworkKind kind,
                        IndexRange target) {
    std::vector<std::size_t> rows;
    for (std::size_t r = begin; r < end; ++r) rows.push_back(r);
    return make_samples<T>(ds, std::span<const std::size_t>(rows), kind, target);
}

template std::vector<float> encode_sample<float>(NetworkKind, std::span<const double>, const FurnaceMesh&);
template std::vector<double> encode_sample<double>(NetworkKind, std::span<const double>, const FurnaceMesh&);
template Samples<float> make_samples<float>(const NormalizedDataset&, std::span<const std::size_t>, NetworkKind,
                                            IndexRange);
template Samples<double> make_samples<double>(const NormalizedDataset&, std::span<const std::size_t>, NetworkKind,
                                              IndexRange);
template Samples<float> make_samples<float>(const NormalizedDataset&, std::size_t, std::size_t, NetworkKind,
                                            IndexRange);
template Samples<double> make_samples<double>(const NormalizedDataset&, std::size_t, std::size_t, NetworkKind,
                                              IndexRange);

namespace {

constexpr char model_magic[8] = {'R', 'T', 'E', 'M', 'O', 'D', 'E', 'L'};

}  // namespace

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
    nlohmann::json header;
    header["format"] = "rte-model/1";
    header["spec"] = spec_to_json(model.spec);
    header["input_shape"] = model.net.input_shape();
    header["output_shape"] = model.net.output_shape();
    header["metadata"] = model.metadata;
    header["params"] = nlohmann::json::array();

    std::vector<std::byte> payload;
    std::size_t index = 0;
    for (const auto* p : model.net.params()) {
        TensorF32 t;
        for (auto d : p->shape) t.dims.push_back(static_cast<std::uint32_t>(d));
        t.data = p->value;
        const auto bytes = encode_tensor(t);
        header["params"].push_back({{"index", index++},
                                    {"name", p->name},
                                    {"shape", p->shape},
                                    {"offset", payload.size()},
                                    {"bytes", bytes.size()},
                                    {"sha256", sha256_hex(bytes)}});
        payload.insert(payload.end(), bytes.begin(), bytes.end());
    }

    const std::string text = header.dump();
    std::vector<std::byte> out;
    out.reserve(16 + text.size() + payload.size());
    for (char c : model_magic) out.push_back(static_cast<std::byte>(c));
    const std::uint64_t len = text.size();
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((len >> (8 * i)) & 0xffu));
    for (char c : text) out.push_back(static_cast<std::byte>(c));
    out.insert(out.end(), payload.begin(), payload.end());
    write_file_bytes(path, out);
}

TrainedModel load_model(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), model_magic, 8) != 0) {
        throw IoError(path.string() + " is not a model file");
    }
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[8 + i]) << (8 * i);
    if (bytes.size() < 16 + len) throw IoError("truncated model header in " + path.string());
    const std::string text(reinterpret_cast<const char*>(bytes.data() + 16), len);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("corrupt model header: ") + e.what());
    }

    const NetworkSpec spec = spec_from_json(header.at("spec"));
    const Shape input_shape = header.at("input_shape").get<Shape>();
    const Shape output_shape = header.at("output_shape").get<Shape>();
    Network<float> net = build_network<float>(spec, input_shape, shape_size(output_shape));

    const std::span<const std::byte> payload(bytes.data() + 16 + len, bytes.size() - 16 - len);
    auto params = net.params();
    const auto& table = header.at("params");
    if (table.size() != params.size()) throw IoError("model parameter count does not match its spec");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto offset = table[i].at("offset").get<std::size_t>();
        const auto size = table[i].at("bytes").get<std::size_t>();
        if (offset + size > payload.size()) throw IoError("model payload truncated");
        const auto section = payload.subspan(offset, size);
        if (sha256_hex(section) != table[i].at("sha256").get<std::string>()) {
            throw IoError("checksum mismatch in model parameter " + std::to_string(i));
        }
        const TensorF32 t = decode_tensor(section);
        if (t.data.size() != params[i]->value.size()) throw IoError("model parameter shape mismatch");
        params[i]->value = t.data;
    }
    return TrainedModel{spec, std::move(net), header.value("metadata", nlohmann::json::object())};
}

InferenceTiming predict_timed(const Network<float>& net, const Samples<float>& set) {
    InferenceTiming out;
    const std::size_t n = set.size();
    if (n == 0) return out;
    std::vector<double> secs;
    secs.reserve(n);
    Tensor<float> x(batched(1, set.sample_shape));
    volatile float sink = 0.0f;
    for (std::size_t s = 0; s < n; ++s) {
        std::copy_n(set.x.begin() + static_cast<std::ptrdiff_t>(s * set.sample_size()), set.sample_size(),
                    x.data.begin());
        const auto t0 = std::chrono::steady_clock::now();
        const Tensor<float> y = net.predict(x);
        const auto t1 = std::chrono::steady_clock::now();
        sink = sink + y.data.front();
        secs.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    double mean = 0.0;
    for (double v : secs) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : secs) var += (v - mean) * (v - mean);
    out.mean_seconds = mean;
    out.std_seconds = std::sqrt(var / static_cast<double>(n));
    out.samples = n;
    return out;
}

}  // namespace rte::nn
