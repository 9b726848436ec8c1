#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rte/neural/network.hpp"

namespace rte::nn {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 20000;
    std::size_t batch_size = 32;
    double l2 = 0.0011;  // kernel regularizer, weights and filters only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t shuffle_seed = 0;
    std::size_t val_every = 1;  // epochs between validation evaluations
};

// Samples packed row-major: x is n * prod(sample_shape), y is n * output_dim.
template <class T>
struct Samples {
    Shape sample_shape;
    std::size_t output_dim = 0;
    std::vector<T> x;
    std::vector<T> y;

    std::size_t size() const { return output_dim == 0 ? 0 : y.size() / output_dim; }
    std::size_t sample_size() const { return shape_size(sample_shape); }
};

struct TrainHistory {
    std::vector<double> train_loss;                            // mean MAE per epoch
    std::vector<std::pair<std::size_t, double>> val_loss;      // (epoch, MAE)
    std::size_t epochs_run = 0;
    double wall_seconds = 0.0;
    bool stopped_early = false;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Called after every epoch with (epoch, train MAE, validation MAE if evaluated);
// returning false stops training.
using EpochCallback = std::function<bool(std::size_t, double, std::optional<double>)>;

template <class T>
class Adam {
public:
    Adam(const TrainConfig& cfg, std::vector<Param<T>*> params);
    void step();
    std::size_t steps() const noexcept { return t_; }

private:
    TrainConfig cfg_;
    std::vector<Param<T>*> params_;
    std::vector<std::vector<T>> m_;
    std::vector<std::vector<T>> v_;
    std::size_t t_ = 0;
};

// Mini-batch Adam on MAE + l2 * sum(W^2) with a seeded epoch shuffle.
template <class T>
TrainHistory train(Network<T>& net, const Samples<T>& train_set, const Samples<T>* validation, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {});

template <class T>
double mean_absolute_error(const Network<T>& net, const Samples<T>& set, std::size_t batch = 256);

template <class T>
double l2_penalty(const Network<T>& net);

}  // namespace rte::nn
