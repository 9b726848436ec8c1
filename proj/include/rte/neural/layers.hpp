#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "rte/neural/tensor.hpp"
#include "rte/rng.hpp"

namespace rte::nn {

template <class T>
struct Param {
    std::string name;
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool regularized = false;  // kernels carry the L2 penalty, biases do not
};

// Layers are stateless between calls apart from their parameters: backward
// receives the forward input and output explicitly.
template <class T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    // Per-sample output shape for a per-sample input shape.
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual void forward(const Tensor<T>& in, Tensor<T>& out) const = 0;
    // Accumulates parameter gradients; writes the input gradient when grad_in is non-null.
    virtual void backward(const Tensor<T>& in, const Tensor<T>& out, const Tensor<T>& grad_out,
                          Tensor<T>* grad_in) = 0;
    virtual std::vector<Param<T>*> params() { return {}; }
    virtual std::vector<const Param<T>*> params() const { return {}; }
};

inline Shape batched(std::size_t n, const Shape& s) {
    Shape out{n};
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

// y = x W + b with W stored (in, out).
template <class T>
class Dense final : public Layer<T> {
public:
    Dense(std::size_t in, std::size_t out) : in_(in), out_(out) {
        weights_ = {"kernel", {in, out}, std::vector<T>(in * out), std::vector<T>(in * out), true};
        bias_ = {"bias", {out}, std::vector<T>(out), std::vector<T>(out), false};
    }

    std::string kind() const override { return "dense"; }
    std::size_t inputs() const { return in_; }
    std::size_t outputs() const { return out_; }

    Shape output_shape(const Shape& in) const override {
        if (shape_size(in) != in_) {
            throw ShapeError("dense layer expects " + std::to_string(in_) + " inputs, got " + shape_string(in));
        }
        return {out_};
    }

    void forward(const Tensor<T>& in, Tensor<T>& out) const override {
        const std::size_t n = in.batch();
        if (in.sample_size() != in_) throw ShapeError("dense forward: input width mismatch");
        out.resize({n, out_});
        for (std::size_t s = 0; s < n; ++s) std::copy(bias_.value.begin(), bias_.value.end(), out.sample(s).begin());
        const T* w = weights_.value.data();
        for (std::size_t i = 0; i < in_; ++i) {
            const T* wi = w + i * out_;
            for (std::size_t s = 0; s < n; ++s) {
                const T x = in.data[s * in_ + i];
                if (x != T{}) axpy(x, wi, out.data.data() + s * out_, out_);
            }
        }
    }

    void backward(const Tensor<T>& in, const Tensor<T>&, const Tensor<T>& gout, Tensor<T>* gin) override {
        const std::size_t n = in.batch();
        T* gw = weights_.grad.data();
        for (std::size_t s = 0; s < n; ++s) {
            const T* g = gout.data.data() + s * out_;
            for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += g[o];
        }
        for (std::size_t i = 0; i < in_; ++i) {
            T* gwi = gw + i * out_;
            for (std::size_t s = 0; s < n; ++s) {
                const T x = in.data[s * in_ + i];
                if (x != T{}) axpy(x, gout.data.data() + s * out_, gwi, out_);
            }
        }
        if (gin != nullptr) {
            gin->resize(in.shape);
            const T* w = weights_.value.data();
            for (std::size_t s = 0; s < n; ++s) {
                const T* g = gout.data.data() + s * out_;
                T* gi = gin->data.data() + s * in_;
                for (std::size_t i = 0; i < in_; ++i) gi[i] = dot(w + i * out_, g, out_);
            }
        }
    }

    std::vector<Param<T>*> params() override { return {&weights_, &bias_}; }
    std::vector<const Param<T>*> params() const override { return {&weights_, &bias_}; }

private:
    std::size_t in_;
    std::size_t out_;
    Param<T> weights_;
    Param<T> bias_;
};

template <class T>
inline T elu(T x) {
    return x >= T{} ? x : std::expm1(x);
}

template <class T>
class Elu final : public Layer<T> {
public:
    std::string kind() const override { return "elu"; }
    Shape output_shape(const Shape& in) const override { return in; }

    void forward(const Tensor<T>& in, Tensor<T>& out) const override {
        out.shape = in.shape;
        out.data.resize(in.data.size());
        for (std::size_t k = 0; k < in.data.size(); ++k) out.data[k] = elu(in.data[k]);
    }

    void backward(const Tensor<T>& in, const Tensor<T>& out, const Tensor<T>& gout, Tensor<T>* gin) override {
        if (gin == nullptr) return;
        gin->shape = in.shape;
        gin->data.resize(in.data.size());
        for (std::size_t k = 0; k < in.data.size(); ++k) {
            gin->data[k] = in.data[k] >= T{} ? gout.data[k] : gout.data[k] * (out.data[k] + T{1});
        }
    }
};

// Cross-correlation, stride 1, zero "same" padding (the extra row/column of an
// even kernel goes to the bottom/right). Weights (out, in, kh, kw); data NCHW.
template <class T>
class Conv2D final : public Layer<T> {
public:
    Conv2D(std::size_t in_channels, std::size_t filters, std::size_t kh, std::size_t kw)
        : cin_(in_channels), cout_(filters), kh_(kh), kw_(kw) {
        if (kh < 1 || kw < 1) throw ShapeError("conv kernel must be at least 1x1");
        const std::size_t nw = cout_ * cin_ * kh_ * kw_;
        weights_ = {"kernel", {cout_, cin_, kh_, kw_}, std::vector<T>(nw), std::vector<T>(nw), true};
        bias_ = {"bias", {cout_}, std::vector<T>(cout_), std::vector<T>(cout_), false};
    }

    std::string kind() const override { return "conv2d"; }
    std::size_t filters() const { return cout_; }
    std::size_t in_channels() const { return cin_; }
    std::size_t kernel_h() const { return kh_; }
    std::size_t kernel_w() const { return kw_; }

    Shape output_shape(const Shape& in) const override {
        if (in.size() != 3 || in[0] != cin_) {
            throw ShapeError("conv2d expects (" + std::to_string(cin_) + ", H, W), got " + shape_string(in));
        }
        if (kh_ > in[1] + kh_ - 1 || kw_ > in[2] + kw_ - 1) throw ShapeError("conv kernel larger than padded image");
        return {cout_, in[1], in[2]};
    }

    void forward(const Tensor<T>& in, Tensor<T>& out) const override {
        const std::size_t n = in.batch();
        const std::size_t h = in.shape.at(2);
        const std::size_t w = in.shape.at(3);
        out.resize({n, cout_, h, w});
        const std::size_t plane = h * w;
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t f = 0; f < cout_; ++f) {
                T* o = out.data.data() + (s * cout_ + f) * plane;
                std::fill(o, o + plane, bias_.value[f]);
                for (std::size_t c = 0; c < cin_; ++c) {
                    const T* src = in.data.data() + (s * cin_ + c) * plane;
                    for (std::size_t ky = 0; ky < kh_; ++ky) {
                        for (std::size_t kx = 0; kx < kw_; ++kx) {
                            const T wv = weights_.value[((f * cin_ + c) * kh_ + ky) * kw_ + kx];
                            apply_tap(ky, kx, h, w, [&](std::size_t y, std::size_t sy, std::size_t x0,
                                                        std::size_t sx0, std::size_t len) {
                                axpy(wv, src + sy * w + sx0, o + y * w + x0, len);
                            });
                        }
                    }
                }
            }
        }
    }

    void backward(const Tensor<T>& in, const Tensor<T>&, const Tensor<T>& gout, Tensor<T>* gin) override {
        const std::size_t n = in.batch();
        const std::size_t h = in.shape.at(2);
        const std::size_t w = in.shape.at(3);
        const std::size_t plane = h * w;
        if (gin != nullptr) gin->resize(in.shape);
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t f = 0; f < cout_; ++f) {
                const T* g = gout.data.data() + (s * cout_ + f) * plane;
                T bsum{};
                for (std::size_t k = 0; k < plane; ++k) bsum += g[k];
                bias_.grad[f] += bsum;
                for (std::size_t c = 0; c < cin_; ++c) {
                    const T* src = in.data.data() + (s * cin_ + c) * plane;
                    T* gsrc = gin != nullptr ? gin->data.data() + (s * cin_ + c) * plane : nullptr;
                    for (std::size_t ky = 0; ky < kh_; ++ky) {
                        for (std::size_t kx = 0; kx < kw_; ++kx) {
                            const std::size_t widx = ((f * cin_ + c) * kh_ + ky) * kw_ + kx;
                            const T wv = weights_.value[widx];
                            T acc{};
                            apply_tap(ky, kx, h, w, [&](std::size_t y, std::size_t sy, std::size_t x0,
                                                        std::size_t sx0, std::size_t len) {
                                acc += dot(g + y * w + x0, src + sy * w + sx0, len);
                                if (gsrc != nullptr) axpy(wv, g + y * w + x0, gsrc + sy * w + sx0, len);
                            });
                            weights_.grad[widx] += acc;
                        }
                    }
                }
            }
        }
    }

    std::vector<Param<T>*> params() override { return {&weights_, &bias_}; }
    std::vector<const Param<T>*> params() const override { return {&weights_, &bias_}; }

private:
    // Calls fn(out_row, src_row, out_col0, src_col0, run_length) for every
    // output row where tap (ky, kx) reads inside the image.
    template <class Fn>
    void apply_tap(std::size_t ky, std::size_t kx, std::size_t h, std::size_t w, Fn&& fn) const {
        const long pad_top = static_cast<long>((kh_ - 1) / 2);
        const long pad_left = static_cast<long>((kw_ - 1) / 2);
        const long dy = static_cast<long>(ky) - pad_top;
        const long dx = static_cast<long>(kx) - pad_left;
        const long hi = static_cast<long>(h);
        const long wi = static_cast<long>(w);
        const long x0 = std::max(0L, -dx);
        const long x1 = std::min(wi, wi - dx);
        if (x1 <= x0) return;
        const long y0 = std::max(0L, -dy);
        const long y1 = std::min(hi, hi - dy);
        for (long y = y0; y < y1; ++y) {
            fn(static_cast<std::size_t>(y), static_cast<std::size_t>(y + dy), static_cast<std::size_t>(x0),
               static_cast<std::size_t>(x0 + dx), static_cast<std::size_t>(x1 - x0));
        }
    }

    std::size_t cin_;
    std::size_t cout_;
    std::size_t kh_;
    std::size_t kw_;
    Param<T> weights_;
    Param<T> bias_;
};

// Non-overlapping average pooling; trailing partial windows average over
// their actual extent.
template <class T>
class AvgPool2D final : public Layer<T> {
public:
    AvgPool2D(std::size_t ph, std::size_t pw) : ph_(ph), pw_(pw) {
        if (ph < 1 || pw < 1) throw ShapeError("pool size must be at least 1x1");
    }

    std::string kind() const override { return "avgpool2d"; }
    std::size_t pool_h() const { return ph_; }
    std::size_t pool_w() const { return pw_; }

    Shape output_shape(const Shape& in) const override {
        if (in.size() != 3) throw ShapeError("avgpool2d expects (C, H, W), got " + shape_string(in));
        return {in[0], (in[1] + ph_ - 1) / ph_, (in[2] + pw_ - 1) / pw_};
    }

    void forward(const Tensor<T>& in, Tensor<T>& out) const override {
        const std::size_t n = in.batch();
        const std::size_t c = in.shape.at(1), h = in.shape.at(2), w = in.shape.at(3);
        const std::size_t oh = (h + ph_ - 1) / ph_, ow = (w + pw_ - 1) / pw_;
        out.resize({n, c, oh, ow});
        for (std::size_t p = 0; p < n * c; ++p) {
            const T* src = in.data.data() + p * h * w;
            T* dst = out.data.data() + p * oh * ow;
            for (std::size_t oy = 0; oy < oh; ++oy) {
                const std::size_t y0 = oy * ph_, y1 = std::min(h, y0 + ph_);
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    const std::size_t x0 = ox * pw_, x1 = std::min(w, x0 + pw_);
                    T acc{};
                    for (std::size_t y = y0; y < y1; ++y) {
                        for (std::size_t x = x0; x < x1; ++x) acc += src[y * w + x];
                    }
                    dst[oy * ow + ox] = acc / static_cast<T>((y1 - y0) * (x1 - x0));
                }
            }
        }
    }

    void backward(const Tensor<T>& in, const Tensor<T>&, const Tensor<T>& gout, Tensor<T>* gin) override {
        if (gin == nullptr) return;
        const std::size_t n = in.batch();
        const std::size_t c = in.shape.at(1), h = in.shape.at(2), w = in.shape.at(3);
        const std::size_t oh = (h + ph_ - 1) / ph_, ow = (w + pw_ - 1) / pw_;
        gin->resize(in.shape);
        for (std::size_t p = 0; p < n * c; ++p) {
            const T* g = gout.data.data() + p * oh * ow;
            T* dst = gin->data.data() + p * h * w;
            for (std::size_t oy = 0; oy < oh; ++oy) {
                const std::size_t y0 = oy * ph_, y1 = std::min(h, y0 + ph_);
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    const std::size_t x0 = ox * pw_, x1 = std::min(w, x0 + pw_);
                    const T share = g[oy * ow + ox] / static_cast<T>((y1 - y0) * (x1 - x0));
                    for (std::size_t y = y0; y < y1; ++y) {
                        for (std::size_t x = x0; x < x1; ++x) dst[y * w + x] = share;
                    }
                }
            }
        }
    }

private:
    std::size_t ph_;
    std::size_t pw_;
};

// NCHW samples are contiguous, so flattening only changes the shape.
template <class T>
class Flatten final : public Layer<T> {
public:
    std::string kind() const override { return "flatten"; }
    Shape output_shape(const Shape& in) const override { return {shape_size(in)}; }
    void forward(const Tensor<T>& in, Tensor<T>& out) const override {
        out.shape = {in.batch(), in.sample_size()};
        out.data = in.data;
    }
    void backward(const Tensor<T>& in, const Tensor<T>&, const Tensor<T>& gout, Tensor<T>* gin) override {
        if (gin == nullptr) return;
        gin->shape = in.shape;
        gin->data = gout.data;
    }
};

}  // namespace rte::nn
