#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "rte/neural/layers.hpp"

namespace rte::nn {

enum class NetworkKind { mlp, cnn };

std::string kind_name(NetworkKind k);
NetworkKind parse_kind(const std::string& s);

struct NetworkSpec {
    NetworkKind kind = NetworkKind::cnn;
    // mlp
    std::size_t hidden_layers = 1;
    std::size_t nodes = 7405;
    // cnn
    std::size_t conv_layers = 1;
    std::size_t filters = 9;
    std::size_t filter_h = 2;
    std::size_t filter_w = 3;
    std::size_t pool_h = 1;
    std::size_t pool_w = 1;
    std::size_t dense_layers = 1;
    std::size_t dense_nodes = 724;

    std::size_t output_dim = 0;  // 0: decided by the builder's caller
    std::uint64_t seed = 0;

    bool operator==(const NetworkSpec&) const = default;
};

// Optimized architectures reported for the all-walls target.
NetworkSpec reference_mlp_spec();
NetworkSpec reference_cnn_spec();

nlohmann::json spec_to_json(const NetworkSpec& s);
NetworkSpec spec_from_json(const nlohmann::json& j);

template <class T>
class Network {
public:
    Network(Shape input_shape, std::vector<std::unique_ptr<Layer<T>>> layers);

    const Shape& input_shape() const noexcept { return input_shape_; }
    const Shape& output_shape() const noexcept { return output_shape_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }
    Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
    // Per-sample shape after every layer, starting with the input.
    std::vector<Shape> activation_shapes() const;

    std::vector<Param<T>*> params();
    std::vector<const Param<T>*> params() const;
    std::size_t parameter_count() const;

    // Training forward: keeps activations for backward().
    const Tensor<T>& forward(const Tensor<T>& input);
    // Accumulates parameter gradients for the last forward().
    void backward(const Tensor<T>& grad_output);
    void zero_grad();

    // Read-only forward, safe to call concurrently.
    Tensor<T> predict(const Tensor<T>& input) const;

private:
    Shape input_shape_;
    Shape output_shape_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<Tensor<T>> activations_;
    std::vector<Tensor<T>> grads_;
};

// input -> [dense + ELU] x hidden_layers -> linear dense(output_dim).
template <class T>
Network<T> build_mlp(const NetworkSpec& spec, std::size_t input_dim, std::size_t output_dim);

// image (C, H, W) -> [conv + ELU + avgpool] x conv_layers -> flatten
// -> [dense + ELU] x dense_layers -> linear dense(output_dim).
template <class T>
Network<T> build_cnn(const NetworkSpec& spec, const Shape& image_shape, std::size_t output_dim);

template <class T>
Network<T> build_network(const NetworkSpec& spec, const Shape& input_shape, std::size_t output_dim);

// Glorot-uniform kernels and zero biases, drawn in layer order from spec.seed.
template <class T>
void glorot_init(Network<T>& net, std::uint64_t seed);

}  // namespace rte::nn
