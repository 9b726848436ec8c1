#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rte/errors.hpp"

namespace rte::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& s);

// Dense row-major tensor whose first dimension is the batch.
template <class T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(std::move(s)), data(shape_size(shape), T{}) {}

    std::size_t batch() const { return shape.empty() ? 0 : shape.front(); }
    std::size_t sample_size() const { return batch() == 0 ? 0 : data.size() / batch(); }
    std::span<T> sample(std::size_t n) { return {data.data() + n * sample_size(), sample_size()}; }
    std::span<const T> sample(std::size_t n) const { return {data.data() + n * sample_size(), sample_size()}; }

    void reshape(Shape s) {
        if (shape_size(s) != data.size()) throw ShapeError("reshape changes the element count");
        shape = std::move(s);
    }
    void resize(Shape s) {
        shape = std::move(s);
        data.assign(shape_size(shape), T{});
    }
};

// Vectorized with a fixed lane split; the summation order depends only on n,
// so results are reproducible for a given build.
template <class T>
inline T dot(const T* a, const T* b, std::size_t n) {
    T acc{};
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <class T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace rte::nn
