#pragma once

/**
 * @file kernels.hpp
 * @brief Gaussian / difference-of-Gaussians kernels and the per-plane
 *        "same" correlation with its exact adjoint.
 *
 * Orientation convention: every convolution in this library is a correlation
 * (no kernel flip), in the forward pass and in both gradients.
 *
 *   out(x, y) = sum_{i,j} in(x + i - c, y + j - c) * k(i, j),   c = (size - 1) / 2
 *
 * Out-of-range reads are resolved by the padding mode.
 */

#include <concepts>
#include <cstddef>
#include <string_view>
#include <vector>

#include "retina/image.hpp"

namespace retina {

enum class Padding { Replicate, Zero };

std::string_view to_string(Padding padding);
Padding parse_padding(std::string_view name);

template <std::floating_point T>
class BasicKernel2D {
public:
    explicit BasicKernel2D(std::size_t size) : BasicKernel2D(size, std::vector<T>(size * size, T(0))) {}

    BasicKernel2D(std::size_t size, std::vector<T> weights) : size_(size), weights_(std::move(weights)) {
        if (size_ == 0 || size_ % 2 == 0) {
            throw InvalidParameterError("kernel size must be odd and >= 1, got " + std::to_string(size_));
        }
        if (weights_.size() != size_ * size_) {
            throw InvalidParameterError("kernel weight count does not match size*size");
        }
    }

    std::size_t size() const noexcept { return size_; }
    std::size_t center() const noexcept { return (size_ - 1) / 2; }

    T& at(std::size_t i, std::size_t j) { return weights_[i * size_ + j]; }
    T at(std::size_t i, std::size_t j) const { return weights_[i * size_ + j]; }

    std::span<T> weights() noexcept { return weights_; }
    std::span<const T> weights() const noexcept { return weights_; }

    template <std::floating_point U>
    BasicKernel2D<U> cast() const {
        return BasicKernel2D<U>(size_, std::vector<U>(weights_.begin(), weights_.end()));
    }

    friend bool operator==(const BasicKernel2D&, const BasicKernel2D&) = default;

private:
    std::size_t size_;
    std::vector<T> weights_;
};

using Kernel2D = BasicKernel2D<float>;
using Kernel2DD = BasicKernel2D<double>;

struct GaussianSpec {
    double sigma = 1.0;
    std::size_t size = 3;
};

/// Normalized isotropic Gaussian sampled at integer offsets from the center.
/// Computed in double; the sum of the returned weights is 1 up to rounding.
Kernel2DD gaussian_kernel(const GaussianSpec& spec);

/// Center-surround kernel: gaussian(sigma1) - gaussian(sigma2), both of `size`.
Kernel2DD dog_kernel(double sigma1, double sigma2, std::size_t size);

template <std::floating_point T>
BasicPlane<T> conv2d_same(const BasicPlane<T>& plane, const BasicKernel2D<T>& kernel,
                          Padding padding = Padding::Replicate);

template <std::floating_point T>
struct ConvGrads {
    BasicPlane<T> input;
    BasicKernel2D<T> kernel;
};

/// Adjoint of conv2d_same. With replicate padding, gradient that lands on
/// the padded border is folded back onto the edge pixel it was read from.
/// Kernel-gradient reductions accumulate in double regardless of T.
template <std::floating_point T>
ConvGrads<T> conv2d_backward(const BasicPlane<T>& plane, const BasicKernel2D<T>& kernel,
                             const BasicPlane<T>& upstream_grad, Padding padding = Padding::Replicate);

/// Kernel gradient only; skips the input adjoint.
template <std::floating_point T>
BasicKernel2D<T> conv2d_kernel_grad(const BasicPlane<T>& plane, std::size_t kernel_size,
                                    const BasicPlane<T>& upstream_grad, Padding padding = Padding::Replicate);

}  // namespace retina
