#pragma once

/**
 * @file training.hpp
 * @brief MSE loss, Adam, the deterministic mini-batch training loop and the
 *        finite-difference gradient checker.
 */

#include <concepts>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "retina/dataset.hpp"
#include "retina/model.hpp"

namespace retina {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 8;
    double learning_rate = 0.001;
    std::uint64_t seed = 42;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    /// Decode the whole dataset once instead of per step.
    bool preload = false;

    void validate() const;
    nlohmann::ordered_json to_json() const;
};

template <std::floating_point T>
struct LossResult {
    double loss = 0.0;
    BasicImage<T> grad;
};

/// loss = mean((pred - target)^2), grad = 2 (pred - target) / N.
template <std::floating_point T>
LossResult<T> mse_loss(const BasicImage<T>& pred, const BasicImage<T>& target);

/// Adam moments are kept in double for every parameter type.
struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step_count = 0;

    explicit OptimizerState(std::size_t parameter_count = kParameterCount)
        : first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}
};

/// One bias-corrected Adam update, elementwise over `params`.
/// `group_of(i)` names parameter i in the non-finite-gradient diagnostic.
template <std::floating_point T>
void adam_step(std::span<T> params, std::span<const T> grads, OptimizerState& state, const TrainConfig& cfg,
               const std::function<std::string(std::size_t)>& group_of = {});

/// Model overload: flattens, updates, writes back.
void adam_step(RetinaModel& model, const ModelGrads<float>& grads, OptimizerState& state, const TrainConfig& cfg);

/// Loss and parameter gradient of a single (input, target) pair.
template <std::floating_point T>
struct SampleGradient {
    double loss = 0.0;
    ModelGrads<T> grads;
};

template <std::floating_point T>
SampleGradient<T> sample_gradient(const BasicRetinaModel<T>& model, const BasicImage<T>& input,
                                  const BasicImage<T>& target);

/// Mean of per-sample gradients, accumulated in double in sample order.
ModelGrads<float> mean_gradient(std::span<const ModelGrads<float>> per_sample);

/// Per-epoch order of sample indices: Fisher-Yates driven by a splitmix64
/// stream seeded from (seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t count, std::uint64_t seed, std::size_t epoch);

struct TrainResult {
    RetinaModel model;
    std::vector<double> history;  ///< mean per-sample loss of each epoch
    std::uint64_t steps = 0;
};

struct TrainHooks {
    /// Receives "epoch=<i> mean_loss=<v>" lines; may be null.
    std::ostream* log = nullptr;
    /// Called after every epoch with the 1-based epoch index.
    std::function<void(std::size_t, const RetinaModel&)> on_epoch_end;
};

/// Source of training pairs; decouples the loop from files on disk.
class PairSource {
public:
    virtual ~PairSource() = default;
    virtual std::size_t size() const = 0;
    virtual std::string name(std::size_t index) const = 0;
    virtual ImagePair load(std::size_t index) const = 0;
};

/// Pairs held in memory.
class InMemoryPairs final : public PairSource {
public:
    InMemoryPairs() = default;
    explicit InMemoryPairs(std::vector<std::pair<std::string, ImagePair>> pairs) : pairs_(std::move(pairs)) {}
    void add(std::string name, ImagePair pair) { pairs_.emplace_back(std::move(name), std::move(pair)); }
    std::size_t size() const override { return pairs_.size(); }
    std::string name(std::size_t index) const override { return pairs_.at(index).first; }
    ImagePair load(std::size_t index) const override { return pairs_.at(index).second; }

private:
    std::vector<std::pair<std::string, ImagePair>> pairs_;
};

/// Pairs decoded from a PairedDataset at use time.
class DatasetPairs final : public PairSource {
public:
    explicit DatasetPairs(const PairedDataset& dataset) : dataset_(&dataset) {}
    std::size_t size() const override { return dataset_->pairs.size(); }
    std::string name(std::size_t index) const override { return dataset_->pairs.at(index).name; }
    ImagePair load(std::size_t index) const override { return load_pair(dataset_->pairs.at(index)); }

private:
    const PairedDataset* dataset_;
};

/// Decodes every pair of `dataset` up front.
InMemoryPairs preload(const PairedDataset& dataset);

/// epochs x ceil(N / batch_size) Adam steps; the final short batch is kept.
/// Throws NumericError on a non-finite loss or gradient.
TrainResult train(const PairSource& data, const TrainConfig& cfg, const RetinaModel& init,
                  const TrainHooks& hooks = {});

// -----------------------------------------------------------------------------
// Gradient check
// -----------------------------------------------------------------------------

struct ParameterCheck {
    std::size_t index = 0;
    std::string name;
    double analytic = 0.0;
    double numeric = 0.0;
    double relative_error = 0.0;
};

struct GradCheckReport {
    std::vector<ParameterCheck> parameters;
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
};

/// Below this magnitude the relative error is measured against this floor.
inline constexpr double kGradCheckFloor = 1e-6;

struct GradCheckOptions {
    double epsilon = 1e-4;
    /// Negative control: perturb the analytic gradient before comparing.
    bool corrupt_analytic = false;
};

/// Central differences of mse_loss(forward(model, img), target) with respect
/// to all 108 parameters, compared against backward(). Double precision.
GradCheckReport grad_check(const RetinaModelD& model, const ImageD& img, const ImageD& target,
                           const GradCheckOptions& options = {});


/// A random model/image/target triple for gradient checking. The model is the
/// default initialization with every parameter perturbed; padding alternates
/// with the seed parity so both boundary modes get exercised.
struct GradCheckDraw {
    RetinaModelD model;
    ImageD image;
    ImageD target;
};

GradCheckDraw make_gradcheck_draw(std::uint64_t seed, std::size_t height = 8, std::size_t width = 8);

}  // namespace retina
