#include "retina/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace retina {

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidParameterError("epochs must be >= 1");
    if (batch_size < 1) throw InvalidParameterError("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidParameterError("learning_rate must be > 0");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw InvalidParameterError("adam betas must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw InvalidParameterError("adam_epsilon must be > 0");
}

nlohmann::ordered_json TrainConfig::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["seed"] = seed;
    j["loss"] = "mse";
    j["optimizer"] = "adam";
    j["adam_beta1"] = adam_beta1;
    j["adam_beta2"] = adam_beta2;
    j["adam_epsilon"] = adam_epsilon;
    return j;
}

template <std::floating_point T>
LossResult<T> mse_loss(const BasicImage<T>& pred, const BasicImage<T>& target) {
    if (!pred.same_shape(target)) {
        throw InvalidInputError("mse_loss: prediction and target dimensions differ");
    }
    BasicImage<T> grad(pred.height(), pred.width(), pred.channels());
    auto p = pred.data();
    auto t = target.data();
    auto g = grad.data();
    const double n = static_cast<double>(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
        acc += d * d;
        g[i] = static_cast<T>(2.0 * d / n);
    }
    return {acc / n, std::move(grad)};
}

template LossResult<float> mse_loss(const BasicImage<float>&, const BasicImage<float>&);
template LossResult<double> mse_loss(const BasicImage<double>&, const BasicImage<double>&);

template <std::floating_point T>
void adam_step(std::span<T> params, std::span<const T> grads, OptimizerState& state, const TrainConfig& cfg,
               const std::function<std::string(std::size_t)>& group_of) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
        params.size() != state.second_moment.size()) {
        throw InvalidInputError("adam_step: parameter, gradient and moment sizes differ");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(static_cast<double>(grads[i]))) {
            const std::string group = group_of ? group_of(i) : "parameter[" + std::to_string(i) + "]";
            throw NumericError("non-finite gradient in " + group);
        }
    }

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.adam_beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] = static_cast<T>(static_cast<double>(params[i]) -
                                   cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon));
    }
}

template void adam_step(std::span<float>, std::span<const float>, OptimizerState&, const TrainConfig&,
                        const std::function<std::string(std::size_t)>&);
template void adam_step(std::span<double>, std::span<const double>, OptimizerState&, const TrainConfig&,
                        const std::function<std::string(std::size_t)>&);

void adam_step(RetinaModel& model, const ModelGrads<float>& grads, OptimizerState& state, const TrainConfig& cfg) {
    std::vector<float> params = flatten(model.stage_g, model.stage_f);
    const std::vector<float> g = flatten(grads.stage_g, grads.stage_f);
    adam_step<float>(params, g, state, cfg, parameter_group);
    unflatten<float>(params, model.stage_g, model.stage_f);
}

template <std::floating_point T>
SampleGradient<T> sample_gradient(const BasicRetinaModel<T>& model, const BasicImage<T>& input,
                                  const BasicImage<T>& target) {
    ForwardResult<T> fwd = forward(model, input);
    LossResult<T> loss = mse_loss(fwd.output, target);
    return {loss.loss, backward(model, fwd.tape, loss.grad)};
}

template SampleGradient<float> sample_gradient(const BasicRetinaModel<float>&, const BasicImage<float>&,
                                               const BasicImage<float>&);
template SampleGradient<double> sample_gradient(const BasicRetinaModel<double>&, const BasicImage<double>&,
                                                const BasicImage<double>&);

ModelGrads<float> mean_gradient(std::span<const ModelGrads<float>> per_sample) {
    if (per_sample.empty()) {
        throw InvalidInputError("mean_gradient of an empty batch");
    }
    std::vector<double> acc(kParameterCount, 0.0);
    for (const auto& g : per_sample) {
        const std::vector<float> flat = flatten(g.stage_g, g.stage_f);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(flat[i]);
    }
    std::vector<float> mean(kParameterCount);
    const double n = static_cast<double>(per_sample.size());
    for (std::size_t i = 0; i < acc.size(); ++i) mean[i] = static_cast<float>(acc[i] / n);
    ModelGrads<float> out;
    unflatten<float>(mean, out.stage_g, out.stage_f);
    return out;
}

namespace {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % bound;
    }

private:
    std::uint64_t state_;
};

}  // namespace

std::vector<std::size_t> epoch_permutation(std::size_t count, std::uint64_t seed, std::size_t epoch) {
    SplitMix64 mixer(seed ^ (0xd1b54a32d192ed03ULL * (static_cast<std::uint64_t>(epoch) + 1)));
    SplitMix64 rng(mixer.next());
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    for (std::size_t i = count; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

InMemoryPairs preload(const PairedDataset& dataset) {
    InMemoryPairs out;
    for (const auto& entry : dataset.pairs) {
        out.add(entry.name, load_pair(entry));
    }
    return out;
}

TrainResult train(const PairSource& data, const TrainConfig& cfg, const RetinaModel& init, const TrainHooks& hooks) {
    cfg.validate();
    const std::size_t n = data.size();
    if (n == 0) {
        throw InvalidInputError("train: dataset is empty");
    }

    TrainResult result{init, {}, 0};
    OptimizerState state(kParameterCount);
    std::vector<ModelGrads<float>> batch;
    batch.reserve(cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<std::size_t> order = epoch_permutation(n, cfg.seed, epoch);
        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            batch.clear();
            for (std::size_t k = start; k < end; ++k) {
                const ImagePair pair = data.load(order[k]);
                SampleGradient<float> sg = sample_gradient(result.model, pair.low, pair.high);
                if (!std::isfinite(sg.loss)) {
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + " batch " +
                                       std::to_string(batch_index) + " (sample '" + data.name(order[k]) + "')");
                }
                epoch_loss += sg.loss;
                batch.push_back(std::move(sg.grads));
            }
            try {
                adam_step(result.model, mean_gradient(batch), state, cfg);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch + 1) + " batch " +
                                   std::to_string(batch_index));
            }
            ++result.steps;
        }
        const double mean_loss = epoch_loss / static_cast<double>(n);
        result.history.push_back(mean_loss);
        if (hooks.log) {
            char line[96];
            std::snprintf(line, sizeof(line), "epoch=%zu mean_loss=%.9g", epoch + 1, mean_loss);
            *hooks.log << line << '\n' << std::flush;
        }
        if (hooks.on_epoch_end) hooks.on_epoch_end(epoch + 1, result.model);
    }
    return result;
}

// -----------------------------------------------------------------------------
// Gradient check
// -----------------------------------------------------------------------------

namespace {

double loss_at(const RetinaModelD& model, const ImageD& img, const ImageD& target) {
    return mse_loss(infer(model, img), target).loss;
}

}  // namespace

GradCheckReport grad_check(const RetinaModelD& model, const ImageD& img, const ImageD& target,
                           const GradCheckOptions& options) {
    if (!(options.epsilon > 0.0)) {
        throw InvalidParameterError("grad_check epsilon must be > 0");
    }
    const SampleGradient<double> sg = sample_gradient(model, img, target);
    std::vector<double> analytic = flatten(sg.grads.stage_g, sg.grads.stage_f);
    if (options.corrupt_analytic) {
        analytic[0] = analytic[0] * 1.1 + 1e-3;
    }

    const std::vector<double> base = flatten(model.stage_g, model.stage_f);
    RetinaModelD probe = model;
    std::vector<double> shifted = base;

    GradCheckReport report;
    report.parameters.reserve(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        shifted[i] = base[i] + options.epsilon;
        unflatten<double>(shifted, probe.stage_g, probe.stage_f);
        const double up = loss_at(probe, img, target);
        shifted[i] = base[i] - options.epsilon;
        unflatten<double>(shifted, probe.stage_g, probe.stage_f);
        const double down = loss_at(probe, img, target);
        shifted[i] = base[i];

        const double numeric = (up - down) / (2.0 * options.epsilon);
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
        const double rel = std::abs(a - numeric) / denom;
        report.parameters.push_back({i, parameter_name(i), a, numeric, rel});
        if (rel > report.max_relative_error) {
            report.max_relative_error = rel;
            report.worst_index = i;
        }
    }
    return report;
}


GradCheckDraw make_gradcheck_draw(std::uint64_t seed, std::size_t height, std::size_t width) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    RetinaModelD model = init_model({}).cast<double>();
    model.padding = seed % 2 == 0 ? Padding::Replicate : Padding::Zero;
    model.init_seed = seed;
    std::vector<double> params = flatten(model.stage_g, model.stage_f);
    for (double& p : params) p += noise(rng);
    unflatten<double>(params, model.stage_g, model.stage_f);

    ImageD image(height, width, kNumChannels);
    ImageD target(height, width, kNumChannels);
    for (double& v : image.data()) v = unit(rng);
    for (double& v : target.data()) v = unit(rng);
    return {std::move(model), std::move(image), std::move(target)};
}

}  // namespace retina
