#include "rte/neural/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "rte/rng.hpp"

namespace rte::nn {

template <class T>
Adam<T>::Adam(const TrainConfig& cfg, std::vector<Param<T>*> params) : cfg_(cfg), params_(std::move(params)) {
    for (auto* p : params_) {
        m_.emplace_back(p->value.size(), T{});
        v_.emplace_back(p->value.size(), T{});
    }
}

template <class T>
void Adam<T>::step() {
    ++t_;
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const T lr = static_cast<T>(cfg_.learning_rate);
    const T eps = static_cast<T>(cfg_.epsilon);
    const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
    const T inv_c1 = static_cast<T>(1.0 / correction1);
    const T inv_c2 = static_cast<T>(1.0 / correction2);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& value = params_[k]->value;
        const auto& grad = params_[k]->grad;
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < value.size(); ++i) {
            const T g = grad[i];
            m[i] = tb1 * m[i] + (T{1} - tb1) * g;
            v[i] = tb2 * v[i] + (T{1} - tb2) * g * g;
            const T mhat = m[i] * inv_c1;
            const T vhat = v[i] * inv_c2;
            value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template <class T>
double l2_penalty(const Network<T>& net) {
    double acc = 0.0;
    for (const auto* p : net.params()) {
        if (!p->regularized) continue;
        for (T v : p->value) acc += static_cast<double>(v) * static_cast<double>(v);
    }
    return acc;
}

namespace {

template <class T>
std::string layer_norms(const Network<T>& net) {
    std::ostringstream os;
    std::size_t k = 0;
    for (const auto* p : net.params()) {
        double s = 0.0;
        for (T v : p->value) s += static_cast<double>(v) * static_cast<double>(v);
        os << (k++ ? ", " : "") << p->name << '=' << std::sqrt(s);
    }
    return os.str();
}

template <class T>
void gather(const Samples<T>& set, const std::vector<std::size_t>& order, std::size_t begin, std::size_t end,
            Tensor<T>& x, Tensor<T>& y) {
    const std::size_t n = end - begin;
    const std::size_t sx = set.sample_size();
    x.resize(batched(n, set.sample_shape));
    y.resize({n, set.output_dim});
    for (std::size_t b = 0; b < n; ++b) {
        const std::size_t s = order[begin + b];
        std::copy_n(set.x.begin() + static_cast<std::ptrdiff_t>(s * sx), sx,
                    x.data.begin() + static_cast<std::ptrdiff_t>(b * sx));
        std::copy_n(set.y.begin() + static_cast<std::ptrdiff_t>(s * set.output_dim), set.output_dim,
                    y.data.begin() + static_cast<std::ptrdiff_t>(b * set.output_dim));
    }
}

}  // namespace

template <class T>
double mean_absolute_error(const Network<T>& net, const Samples<T>& set, std::size_t batch) {
    const std::size_t n = set.size();
    if (n == 0) return 0.0;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    double acc = 0.0;
    Tensor<T> x, y;
    for (std::size_t begin = 0; begin < n; begin += batch) {
        const std::size_t end = std::min(n, begin + batch);
        gather(set, order, begin, end, x, y);
        const Tensor<T> pred = net.predict(x);
        for (std::size_t k = 0; k < pred.data.size(); ++k) {
            acc += std::abs(static_cast<double>(pred.data[k]) - static_cast<double>(y.data[k]));
        }
    }
    return acc / static_cast<double>(n * set.output_dim);
}

template <class T>
TrainHistory train(Network<T>& net, const Samples<T>& train_set, const Samples<T>* validation, const TrainConfig& cfg,
                   const EpochCallback& on_epoch) {
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("epochs and batch size must be >= 1");
    const std::size_t n = train_set.size();
    if (n == 0) throw std::invalid_argument("empty training set");
    if (train_set.sample_shape != net.input_shape() || train_set.output_dim != shape_size(net.output_shape())) {
        throw ShapeError("training samples do not match the network shapes");
    }

    const auto t0 = std::chrono::steady_clock::now();
    TrainHistory hist;
    Adam<T> adam(cfg, net.params());
    Rng rng(cfg.shuffle_seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    const T l2 = static_cast<T>(cfg.l2);
    Tensor<T> x, y, grad;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t begin = 0, batch_index = 0; begin < n; begin += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(n, begin + cfg.batch_size);
            gather(train_set, order, begin, end, x, y);
            net.zero_grad();
            const Tensor<T>& pred = net.forward(x);
            grad.resize(pred.shape);
            const T scale = T{1} / static_cast<T>(pred.data.size());
            double batch_loss = 0.0;
            for (std::size_t k = 0; k < pred.data.size(); ++k) {
                const T diff = pred.data[k] - y.data[k];
                batch_loss += std::abs(static_cast<double>(diff));
                grad.data[k] = diff > T{} ? scale : (diff < T{} ? -scale : T{});
            }
            batch_loss /= static_cast<double>(pred.data.size());
            if (!std::isfinite(batch_loss)) {
                std::ostringstream os;
                os << "non-finite loss at epoch " << epoch << ", batch " << batch_index
                   << "; parameter norms: " << layer_norms(net);
                throw TrainingError(os.str());
            }
            net.backward(grad);
            if (l2 != T{}) {
                for (auto* p : net.params()) {
                    if (!p->regularized) continue;
                    for (std::size_t i = 0; i < p->value.size(); ++i) p->grad[i] += T{2} * l2 * p->value[i];
                }
            }
            adam.step();
            epoch_loss += batch_loss * static_cast<double>(end - begin);
        }
        epoch_loss /= static_cast<double>(n);
        hist.train_loss.push_back(epoch_loss);
        hist.epochs_run = epoch + 1;

        std::optional<double> val;
        const bool last = epoch + 1 == cfg.epochs;
        if (validation != nullptr && validation->size() > 0 && cfg.val_every > 0 &&
            ((epoch + 1) % cfg.val_every == 0 || last)) {
            val = mean_absolute_error(net, *validation);
            hist.val_loss.emplace_back(epoch + 1, *val);
        }
        if (on_epoch && !on_epoch(epoch + 1, epoch_loss, val)) {
            hist.stopped_early = !last;
            break;
        }
    }
    hist.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return hist;
}

template class Adam<float>;
template class Adam<double>;
template TrainHistory train<float>(Network<float>&, const Samples<float>&, const Samples<float>*, const TrainConfig&,
                                   const EpochCallback&);
template TrainHistory train<double>(Network<double>&, const Samples<double>&, const Samples<double>*,
                                    const TrainConfig&, const EpochCallback&);
template double mean_absolute_error<float>(const Network<float>&, const Samples<float>&, std::size_t);
template double mean_absolute_error<double>(const Network<double>&, const Samples<double>&, std::size_t);
template double l2_penalty<float>(const Network<float>&);
template double l2_penalty<double>(const Network<double>&);

}  // namespace rte::nn
