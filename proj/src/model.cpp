#include "retina/model.hpp"

#include <cmath>

namespace retina {

RetinaModel init_model(const InitConfig& cfg) {
    const Kernel2D g = gaussian_kernel({cfg.sigma_g, kStageGKernelSize}).cast<float>();
    const Kernel2D f = dog_kernel(cfg.sigma1, cfg.sigma2, kStageFKernelSize).cast<float>();
    RetinaModel model;
    model.stage_g = {{g, g, g}, {}};
    model.stage_f = {{f, f, f}, {}};
    model.padding = cfg.padding;
    model.init_seed = cfg.seed;
    return model;
}

RetinaModel zero_model(Padding padding) {
    RetinaModel model;
    model.padding = padding;
    return model;
}

template <std::floating_point T>
std::vector<T> flatten(const StageParams<T>& stage_g, const StageParams<T>& stage_f) {
    std::vector<T> out;
    out.reserve(stage_g.parameter_count() + stage_f.parameter_count());
    for (const StageParams<T>* stage : {&stage_g, &stage_f}) {
        for (const auto& k : stage->kernels) {
            out.insert(out.end(), k.weights().begin(), k.weights().end());
        }
        out.insert(out.end(), stage->biases.begin(), stage->biases.end());
    }
    return out;
}

template <std::floating_point T>
void unflatten(std::span<const T> values, StageParams<T>& stage_g, StageParams<T>& stage_f) {
    if (values.size() != stage_g.parameter_count() + stage_f.parameter_count()) {
        throw InvalidInputError("parameter vector has " + std::to_string(values.size()) + " entries, expected " +
                                std::to_string(stage_g.parameter_count() + stage_f.parameter_count()));
    }
    std::size_t n = 0;
    for (StageParams<T>* stage : {&stage_g, &stage_f}) {
        for (auto& k : stage->kernels) {
            for (T& w : k.weights()) w = values[n++];
        }
        for (T& b : stage->biases) b = values[n++];
    }
}

template std::vector<float> flatten(const StageParams<float>&, const StageParams<float>&);
template std::vector<double> flatten(const StageParams<double>&, const StageParams<double>&);
template void unflatten(std::span<const float>, StageParams<float>&, StageParams<float>&);
template void unflatten(std::span<const double>, StageParams<double>&, StageParams<double>&);

namespace {

struct ParamLocation {
    const char* stage;
    bool is_bias;
    std::size_t channel;
    std::size_t row;
    std::size_t col;
};

ParamLocation locate(std::size_t index) {
    if (index >= kParameterCount) {
        throw InvalidInputError("parameter index " + std::to_string(index) + " out of range");
    }
    const char* stage = "stage_g";
    std::size_t ks = kStageGKernelSize;
    const std::size_t g_count = kNumChannels * (ks * ks + 1);
    if (index >= g_count) {
        index -= g_count;
        stage = "stage_f";
        ks = kStageFKernelSize;
    }
    const std::size_t kernel_block = kNumChannels * ks * ks;
    if (index >= kernel_block) {
        return {stage, true, index - kernel_block, 0, 0};
    }
    const std::size_t ch = index / (ks * ks);
    const std::size_t within = index % (ks * ks);
    return {stage, false, ch, within / ks, within % ks};
}

}  // namespace

std::string parameter_name(std::size_t index) {
    const ParamLocation loc = locate(index);
    if (loc.is_bias) {
        return std::string(loc.stage) + ".bias[" + std::to_string(loc.channel) + "]";
    }
    return std::string(loc.stage) + ".kernel[" + std::to_string(loc.channel) + "](" + std::to_string(loc.row) +
           "," + std::to_string(loc.col) + ")";
}

std::string parameter_group(std::size_t index) {
    const ParamLocation loc = locate(index);
    if (loc.is_bias) {
        return std::string(loc.stage) + ".bias";
    }
    return std::string(loc.stage) + ".kernel[" + std::to_string(loc.channel) + "]";
}

// -----------------------------------------------------------------------------
// Forward / backward
// -----------------------------------------------------------------------------

namespace {

template <std::floating_point T>
void require_rgb(const BasicImage<T>& img, const char* what) {
    if (img.channels() != kNumChannels) {
        throw InvalidInputError(std::string(what) + " must have 3 channels, got " + std::to_string(img.channels()));
    }
}

template <std::floating_point T>
void add_inplace(BasicPlane<T>& dst, const BasicPlane<T>& src) {
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

template <std::floating_point T>
void add_scalar_inplace(BasicPlane<T>& dst, T value) {
    for (T& v : dst.data()) v += value;
}

template <std::floating_point T>
T channel_sum(const BasicPlane<T>& plane) {
    double acc = 0.0;
    for (T v : plane.data()) acc += static_cast<double>(v);
    return static_cast<T>(acc);
}

}  // namespace

template <std::floating_point T>
ForwardResult<T> forward(const BasicRetinaModel<T>& model, const BasicImage<T>& img) {
    require_rgb(img, "forward input");
    ChannelPlanes<T> input = split_channels(img);
    ChannelPlanes<T> h = input;
    ChannelPlanes<T> b = input;
    ChannelPlanes<T> v = input;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        h[c] = conv2d_same(input[c], model.stage_g.kernels[c], model.padding);
        add_scalar_inplace(h[c], model.stage_g.biases[c]);

        b[c] = input[c];
        add_inplace(b[c], h[c]);

        v[c] = conv2d_same(b[c], model.stage_f.kernels[c], model.padding);
        add_scalar_inplace(v[c], model.stage_f.biases[c]);
        add_inplace(v[c], input[c]);
    }
    return {merge_channels(v), {std::move(input), std::move(h), std::move(b)}};
}

template <std::floating_point T>
BasicImage<T> infer(const BasicRetinaModel<T>& model, const BasicImage<T>& img) {
    return forward(model, img).output;
}

template <std::floating_point T>
ModelGrads<T> backward(const BasicRetinaModel<T>& model, const ForwardTape<T>& tape,
                       const BasicImage<T>& upstream_grad) {
    require_rgb(upstream_grad, "backward upstream gradient");
    if (upstream_grad.height() != tape.input.r.height() || upstream_grad.width() != tape.input.r.width()) {
        throw InvalidInputError("backward: upstream gradient dimensions differ from forward output");
    }
    const ChannelPlanes<T> grad_v = split_channels(upstream_grad);
    ModelGrads<T> grads;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        // v = I + conv(b, f) + bf
        grads.stage_f.biases[c] = channel_sum(grad_v[c]);
        ConvGrads<T> f_grads = conv2d_backward(tape.b[c], model.stage_f.kernels[c], grad_v[c], model.padding);
        grads.stage_f.kernels[c] = std::move(f_grads.kernel);

        // b = I + h, so dL/dh = dL/db; h = conv(I, g) + bg
        const BasicPlane<T>& grad_h = f_grads.input;
        grads.stage_g.biases[c] = channel_sum(grad_h);
        grads.stage_g.kernels[c] = conv2d_kernel_grad(tape.input[c], kStageGKernelSize, grad_h, model.padding);
    }
    return grads;
}

template ForwardResult<float> forward(const BasicRetinaModel<float>&, const BasicImage<float>&);
template ForwardResult<double> forward(const BasicRetinaModel<double>&, const BasicImage<double>&);
template BasicImage<float> infer(const BasicRetinaModel<float>&, const BasicImage<float>&);
template BasicImage<double> infer(const BasicRetinaModel<double>&, const BasicImage<double>&);
template ModelGrads<float> backward(const BasicRetinaModel<float>&, const ForwardTape<float>&,
                                    const BasicImage<float>&);
template ModelGrads<double> backward(const BasicRetinaModel<double>&, const ForwardTape<double>&,
                                     const BasicImage<double>&);

// -----------------------------------------------------------------------------
// Bipolar-cell variants
// -----------------------------------------------------------------------------

std::string_view to_string(BcVariant variant) {
    switch (variant) {
        case BcVariant::Recursive:
            return "recursive";
        case BcVariant::Fir:
            return "fir";
        case BcVariant::Residual:
            return "residual";
    }
    return "unknown";
}

BcVariant parse_variant(std::string_view name) {
    if (name == "recursive") return BcVariant::Recursive;
    if (name == "fir") return BcVariant::Fir;
    if (name == "residual") return BcVariant::Residual;
    throw InvalidParameterError("unknown variant '" + std::string(name) + "'");
}

namespace {

void require_matching(const Plane& plane, const Plane& h) {
    if (plane.channels() != 1 || !plane.same_shape(h)) {
        throw InvalidInputError("bipolar variant: plane and h must be single-channel and equally sized");
    }
}

}  // namespace

Plane bc_recursive(const Plane& plane, const Plane& h, const VariantConfig& cfg) {
    require_matching(plane, h);
    if (!(cfg.alpha > 0.0)) {
        throw InvalidParameterError("recursive variant requires alpha > 0");
    }
    Plane out(plane.height(), plane.width(), 1);
    const auto alpha = static_cast<float>(cfg.alpha);
    for (std::size_t y = 0; y < plane.height(); ++y) {
        for (std::size_t x = 0; x < plane.width(); ++x) {
            const float denom = alpha + h.at(y, x);
            if (denom == 0.0f) {
                throw DivisionByZeroError(y, x);
            }
            out.at(y, x) = plane.at(y, x) / denom;
        }
    }
    return out;
}

Plane bc_fir(const Plane& plane, const Plane& h, const VariantConfig& cfg) {
    require_matching(plane, h);
    Plane out(plane.height(), plane.width(), 1);
    const auto alpha = static_cast<float>(cfg.alpha);
    const auto beta = static_cast<float>(cfg.beta);
    auto i = plane.data();
    auto hv = h.data();
    auto o = out.data();
    for (std::size_t n = 0; n < o.size(); ++n) {
        o[n] = alpha * i[n] + beta * i[n] * hv[n];
    }
    return out;
}

Plane bc_residual(const Plane& plane, const Plane& h) {
    require_matching(plane, h);
    Plane out = plane;
    add_inplace(out, h);
    return out;
}

Plane apply_variant(const Plane& plane, const Plane& h, const VariantConfig& cfg) {
    switch (cfg.variant) {
        case BcVariant::Recursive:
            return bc_recursive(plane, h, cfg);
        case BcVariant::Fir:
            return bc_fir(plane, h, cfg);
        case BcVariant::Residual:
            return bc_residual(plane, h);
    }
    throw InvalidParameterError("unknown variant");
}


Image modulate_bipolar(const Image& img, double sigma, const VariantConfig& cfg) {
    if (img.channels() != kNumChannels) {
        throw InvalidInputError("modulate_bipolar: input must have 3 channels");
    }
    const Kernel2D g = gaussian_kernel({sigma, kStageGKernelSize}).cast<float>();
    const ChannelPlanes<float> planes = split_channels(img);
    ChannelPlanes<float> out = planes;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        const Plane h = conv2d_same(planes[c], g, Padding::Replicate);
        out[c] = apply_variant(planes[c], h, cfg);
    }
    return merge_channels(out);
}

}  // namespace retina
