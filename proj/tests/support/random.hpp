#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "retina/image.hpp"
#include "retina/kernels.hpp"

namespace retina::test {

template <std::floating_point T = float>
BasicImage<T> random_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed, double lo = 0.0,
                           double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    BasicImage<T> img(h, w, c);
    for (T& v : img.data()) v = static_cast<T>(dist(rng));
    return img;
}

template <std::floating_point T = float>
BasicKernel2D<T> random_kernel(std::size_t size, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    BasicKernel2D<T> k(size);
    for (T& v : k.weights()) v = static_cast<T>(dist(rng));
    return k;
}

template <std::floating_point T>
double max_abs_diff(const BasicImage<T>& a, const BasicImage<T>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
    }
    return m;
}

template <std::floating_point T>
double dot(const BasicImage<T>& a, const BasicImage<T>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a.data()[i]) * static_cast<double>(b.data()[i]);
    return s;
}

}  // namespace retina::test
