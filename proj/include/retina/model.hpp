#pragma once

/**
 * @file model.hpp
 * @brief The learnable retina network.
 *
 * Per colour channel c, with I the input plane:
 *
 *   h = I (*) g_c + bg_c          horizontal-cell blur
 *   b = I + h                     bipolar input, residual form
 *   v = I + b (*) f_c + bf_c      ganglion drive, photoreceptor skip
 *
 * (*) is conv2d_same. Channels never mix (depthwise). There is no
 * nonlinearity; for fixed parameters the network is affine in its input.
 *
 * Stage g uses 3x3 kernels, stage f 5x5: 3*(9+1) + 3*(25+1) = 108 parameters.
 */

#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "retina/image.hpp"
#include "retina/kernels.hpp"

namespace retina {

inline constexpr std::size_t kNumChannels = 3;
inline constexpr std::size_t kStageGKernelSize = 3;
inline constexpr std::size_t kStageFKernelSize = 5;
inline constexpr std::size_t kParameterCount =
    kNumChannels * (kStageGKernelSize * kStageGKernelSize + 1) + kNumChannels * (kStageFKernelSize * kStageFKernelSize + 1);
static_assert(kParameterCount == 108);

/// Depthwise kernels and biases for one stage.
template <std::floating_point T>
struct StageParams {
    std::array<BasicKernel2D<T>, kNumChannels> kernels;
    std::array<T, kNumChannels> biases{};

    static StageParams zeros(std::size_t kernel_size) {
        return {{BasicKernel2D<T>(kernel_size), BasicKernel2D<T>(kernel_size), BasicKernel2D<T>(kernel_size)}, {}};
    }

    std::size_t kernel_size() const noexcept { return kernels[0].size(); }
    std::size_t parameter_count() const noexcept { return kNumChannels * (kernel_size() * kernel_size() + 1); }

    template <std::floating_point U>
    StageParams<U> cast() const {
        return {{kernels[0].template cast<U>(), kernels[1].template cast<U>(), kernels[2].template cast<U>()},
                {static_cast<U>(biases[0]), static_cast<U>(biases[1]), static_cast<U>(biases[2])}};
    }

    friend bool operator==(const StageParams&, const StageParams&) = default;
};

/// Gradient with respect to every learnable parameter, shaped like the model.
template <std::floating_point T>
struct ModelGrads {
    StageParams<T> stage_g = StageParams<T>::zeros(kStageGKernelSize);
    StageParams<T> stage_f = StageParams<T>::zeros(kStageFKernelSize);
};

template <std::floating_point T>
struct BasicRetinaModel {
    StageParams<T> stage_g = StageParams<T>::zeros(kStageGKernelSize);
    StageParams<T> stage_f = StageParams<T>::zeros(kStageFKernelSize);
    Padding padding = Padding::Replicate;
    /// Recorded in checkpoint metadata; initialization itself is deterministic.
    std::uint64_t init_seed = 0;

    std::size_t parameter_count() const noexcept { return stage_g.parameter_count() + stage_f.parameter_count(); }

    template <std::floating_point U>
    BasicRetinaModel<U> cast() const {
        return {stage_g.template cast<U>(), stage_f.template cast<U>(), padding, init_seed};
    }

    friend bool operator==(const BasicRetinaModel&, const BasicRetinaModel&) = default;
};

using RetinaModel = BasicRetinaModel<float>;
using RetinaModelD = BasicRetinaModel<double>;

struct InitConfig {
    std::uint64_t seed = 42;
    double sigma_g = 1.0;
    double sigma1 = 0.5;
    double sigma2 = 1.0;
    Padding padding = Padding::Replicate;
};

/// Stage g <- gaussian(sigma_g, 3), stage f <- dog(sigma1, sigma2, 5), biases 0.
RetinaModel init_model(const InitConfig& cfg = {});

/// Every kernel weight and bias zero; forward() is then the identity.
RetinaModel zero_model(Padding padding = Padding::Replicate);

// Flat parameter order: stage_g kernels (channel-major, row-major within a
// kernel), stage_g biases, stage_f kernels, stage_f biases.
template <std::floating_point T>
std::vector<T> flatten(const StageParams<T>& stage_g, const StageParams<T>& stage_f);

template <std::floating_point T>
void unflatten(std::span<const T> values, StageParams<T>& stage_g, StageParams<T>& stage_f);

/// Human-readable name for flat index `index`, e.g. "stage_f.kernel[2](1,3)".
std::string parameter_name(std::size_t index);
/// Group name for flat index `index`, e.g. "stage_g.bias".
std::string parameter_group(std::size_t index);

template <std::floating_point T>
struct ForwardTape {
    ChannelPlanes<T> input;
    ChannelPlanes<T> h;
    ChannelPlanes<T> b;
};

template <std::floating_point T>
struct ForwardResult {
    BasicImage<T> output;
    ForwardTape<T> tape;
};

template <std::floating_point T>
ForwardResult<T> forward(const BasicRetinaModel<T>& model, const BasicImage<T>& img);

/// Forward pass without keeping the tape.
template <std::floating_point T>
BasicImage<T> infer(const BasicRetinaModel<T>& model, const BasicImage<T>& img);

template <std::floating_point T>
ModelGrads<T> backward(const BasicRetinaModel<T>& model, const ForwardTape<T>& tape,
                       const BasicImage<T>& upstream_grad);

// -----------------------------------------------------------------------------
// Bipolar-cell modulation variants (forward-only comparison tools)
// -----------------------------------------------------------------------------

enum class BcVariant { Recursive, Fir, Residual };

std::string_view to_string(BcVariant variant);
BcVariant parse_variant(std::string_view name);

struct VariantConfig {
    double alpha = 1.0;
    double beta = 1.0;
    BcVariant variant = BcVariant::Residual;
};

/// b = I / (alpha + h). Unclamped; throws DivisionByZeroError naming the
/// first pixel where alpha + h == 0.
Plane bc_recursive(const Plane& plane, const Plane& h, const VariantConfig& cfg);

/// b = alpha * I + beta * I * h.
Plane bc_fir(const Plane& plane, const Plane& h, const VariantConfig& cfg);

/// b = I + h.
Plane bc_residual(const Plane& plane, const Plane& h);

Plane apply_variant(const Plane& plane, const Plane& h, const VariantConfig& cfg);


/// Per channel: h = conv2d_same(I, gaussian(sigma, 3)) with replicate padding,
/// then b from the chosen variant. Returns b unclamped.
Image modulate_bipolar(const Image& img, double sigma, const VariantConfig& cfg);

}  // namespace retina
