#include "retina/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace retina {

std::string_view to_string(Padding padding) {
    return padding == Padding::Replicate ? "replicate" : "zero";
}

Padding parse_padding(std::string_view name) {
    if (name == "replicate") return Padding::Replicate;
    if (name == "zero") return Padding::Zero;
    throw InvalidParameterError("unknown padding mode '" + std::string(name) + "'");
}

Kernel2DD gaussian_kernel(const GaussianSpec& spec) {
    if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) {
        throw InvalidParameterError("gaussian sigma must be positive, got " + std::to_string(spec.sigma));
    }
    Kernel2DD k(spec.size);  // validates odd size
    const double c = static_cast<double>(k.center());
    const double denom = 2.0 * spec.sigma * spec.sigma;
    double sum = 0.0;
    for (std::size_t i = 0; i < spec.size; ++i) {
        for (std::size_t j = 0; j < spec.size; ++j) {
            const double di = static_cast<double>(i) - c;
            const double dj = static_cast<double>(j) - c;
            const double w = std::exp(-(di * di + dj * dj) / denom);
            k.at(i, j) = w;
            sum += w;
        }
    }
    for (double& w : k.weights()) {
        w /= sum;
    }
    return k;
}

Kernel2DD dog_kernel(double sigma1, double sigma2, std::size_t size) {
    const Kernel2DD center = gaussian_kernel({sigma1, size});
    const Kernel2DD surround = gaussian_kernel({sigma2, size});
    Kernel2DD k(size);
    for (std::size_t n = 0; n < size * size; ++n) {
        k.weights()[n] = center.weights()[n] - surround.weights()[n];
    }
    return k;
}

namespace {

std::size_t resolve_replicate(std::ptrdiff_t idx, std::size_t extent) {
    if (idx < 0) return 0;
    if (static_cast<std::size_t>(idx) >= extent) return extent - 1;
    return static_cast<std::size_t>(idx);
}

/// Plane extended by `pad` samples on each side according to the padding mode.
template <std::floating_point T>
std::vector<T> pad_plane(const BasicPlane<T>& plane, std::size_t pad, Padding padding) {
    const std::size_t h = plane.height();
    const std::size_t w = plane.width();
    const std::size_t pw = w + 2 * pad;
    std::vector<T> out((h + 2 * pad) * pw, T(0));
    auto src = plane.data();
    for (std::size_t py = 0; py < h + 2 * pad; ++py) {
        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(py) - static_cast<std::ptrdiff_t>(pad);
        const bool row_inside = y >= 0 && y < static_cast<std::ptrdiff_t>(h);
        if (padding == Padding::Zero && !row_inside) continue;
        const std::size_t sy = resolve_replicate(y, h);
        for (std::size_t px = 0; px < pw; ++px) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(px) - static_cast<std::ptrdiff_t>(pad);
            const bool col_inside = x >= 0 && x < static_cast<std::ptrdiff_t>(w);
            if (padding == Padding::Zero && !col_inside) continue;
            out[py * pw + px] = src[sy * w + resolve_replicate(x, w)];
        }
    }
    return out;
}

template <std::floating_point T>
void require_plane(const BasicPlane<T>& plane, const char* what) {
    if (plane.channels() != 1) {
        throw InvalidInputError(std::string(what) + " must be a single-channel plane");
    }
}

}  // namespace

template <std::floating_point T>
BasicPlane<T> conv2d_same(const BasicPlane<T>& plane, const BasicKernel2D<T>& kernel, Padding padding) {
    require_plane(plane, "conv2d_same input");
    const std::size_t h = plane.height();
    const std::size_t w = plane.width();
    const std::size_t k = kernel.size();
    const std::size_t pad = kernel.center();
    const std::size_t pw = w + 2 * pad;
    const std::vector<T> padded = pad_plane(plane, pad, padding);
    auto kw = kernel.weights();

    BasicPlane<T> out(h, w, 1);
    auto dst = out.data();
    // Row accumulator in double keeps float output within one rounding of exact.
    std::vector<double> acc(w);
    for (std::size_t y = 0; y < h; ++y) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const T* prow = padded.data() + (y + i) * pw;
            for (std::size_t j = 0; j < k; ++j) {
                const double kv = kw[i * k + j];
                const T* src = prow + j;
                for (std::size_t x = 0; x < w; ++x) {
                    acc[x] += static_cast<double>(src[x]) * kv;
                }
            }
        }
        T* orow = dst.data() + y * w;
        for (std::size_t x = 0; x < w; ++x) orow[x] = static_cast<T>(acc[x]);
    }
    return out;
}

template <std::floating_point T>
BasicKernel2D<T> conv2d_kernel_grad(const BasicPlane<T>& plane, std::size_t kernel_size,
                                    const BasicPlane<T>& upstream_grad, Padding padding) {
    require_plane(plane, "conv2d_backward input");
    require_plane(upstream_grad, "conv2d_backward upstream gradient");
    if (!plane.same_shape(upstream_grad)) {
        throw InvalidInputError("conv2d_backward: upstream gradient dimensions differ from input");
    }
    BasicKernel2D<T> grad(kernel_size);
    const std::size_t h = plane.height();
    const std::size_t w = plane.width();
    const std::size_t pad = grad.center();
    const std::size_t pw = w + 2 * pad;
    const std::vector<T> padded = pad_plane(plane, pad, padding);
    auto up = upstream_grad.data();

    for (std::size_t i = 0; i < kernel_size; ++i) {
        for (std::size_t j = 0; j < kernel_size; ++j) {
            double acc = 0.0;
            for (std::size_t y = 0; y < h; ++y) {
                const T* prow = padded.data() + (y + i) * pw + j;
                const T* urow = up.data() + y * w;
                for (std::size_t x = 0; x < w; ++x) {
                    acc += static_cast<double>(urow[x]) * static_cast<double>(prow[x]);
                }
            }
            grad.at(i, j) = static_cast<T>(acc);
        }
    }
    return grad;
}

template <std::floating_point T>
ConvGrads<T> conv2d_backward(const BasicPlane<T>& plane, const BasicKernel2D<T>& kernel,
                             const BasicPlane<T>& upstream_grad, Padding padding) {
    BasicKernel2D<T> grad_kernel = conv2d_kernel_grad(plane, kernel.size(), upstream_grad, padding);

    const std::size_t h = plane.height();
    const std::size_t w = plane.width();
    const std::size_t k = kernel.size();
    const std::size_t pad = kernel.center();
    const std::size_t ph = h + 2 * pad;
    const std::size_t pw = w + 2 * pad;
    auto up = upstream_grad.data();
    auto kw = kernel.weights();

    // Scatter into the padded domain, then fold the border back.
    std::vector<T> grad_padded(ph * pw, T(0));
    for (std::size_t y = 0; y < h; ++y) {
        const T* urow = up.data() + y * w;
        for (std::size_t i = 0; i < k; ++i) {
            T* grow = grad_padded.data() + (y + i) * pw;
            for (std::size_t j = 0; j < k; ++j) {
                const T kv = kw[i * k + j];
                T* dst = grow + j;
                for (std::size_t x = 0; x < w; ++x) {
                    dst[x] += urow[x] * kv;
                }
            }
        }
    }

    BasicPlane<T> grad_input(h, w, 1);
    auto gi = grad_input.data();
    if (padding == Padding::Zero) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                gi[y * w + x] = grad_padded[(y + pad) * pw + x + pad];
            }
        }
    } else {
        for (std::size_t py = 0; py < ph; ++py) {
            const std::size_t sy =
                resolve_replicate(static_cast<std::ptrdiff_t>(py) - static_cast<std::ptrdiff_t>(pad), h);
            for (std::size_t px = 0; px < pw; ++px) {
                const std::size_t sx =
                    resolve_replicate(static_cast<std::ptrdiff_t>(px) - static_cast<std::ptrdiff_t>(pad), w);
                gi[sy * w + sx] += grad_padded[py * pw + px];
            }
        }
    }
    return {std::move(grad_input), std::move(grad_kernel)};
}

template BasicPlane<float> conv2d_same(const BasicPlane<float>&, const BasicKernel2D<float>&, Padding);
template BasicPlane<double> conv2d_same(const BasicPlane<double>&, const BasicKernel2D<double>&, Padding);
template BasicKernel2D<float> conv2d_kernel_grad(const BasicPlane<float>&, std::size_t, const BasicPlane<float>&,
                                                 Padding);
template BasicKernel2D<double> conv2d_kernel_grad(const BasicPlane<double>&, std::size_t,
                                                  const BasicPlane<double>&, Padding);
template ConvGrads<float> conv2d_backward(const BasicPlane<float>&, const BasicKernel2D<float>&,
                                          const BasicPlane<float>&, Padding);
template ConvGrads<double> conv2d_backward(const BasicPlane<double>&, const BasicKernel2D<double>&,
                                           const BasicPlane<double>&, Padding);

}  // namespace retina
