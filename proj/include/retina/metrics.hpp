#pragma once

/**
 * @file metrics.hpp
 * @brief SSIM / PSNR and test-split evaluation.
 *
 * SSIM uses the usual Gaussian-window formulation: 11x11 window, sigma 1.5,
 * K1 = 0.01, K2 = 0.03, dynamic range L = 1. Statistics are evaluated only
 * where the window fits entirely inside the image, averaged over those
 * positions, then averaged over channels. Inputs are clamped to [0,1] first.
 */

#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "retina/dataset.hpp"
#include "retina/model.hpp"

namespace retina {

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kSsimC1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
inline constexpr double kSsimC2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);

double ssim(const Image& a, const Image& b);

/// 10 log10(1 / MSE); +infinity for identical images.
double psnr(const Image& a, const Image& b);

struct ImageScore {
    std::string name;
    double ssim = 0.0;
    double psnr = 0.0;
};

struct EvalReport {
    std::vector<ImageScore> per_image;
    double mean_ssim = 0.0;
    double mean_psnr = 0.0;

    /// Recomputes the means from per_image.
    void finalize();

    /// PSNR infinities are written as the string "inf".
    nlohmann::ordered_json to_json() const;
    std::string to_table() const;
};

/// Runs forward + clamp on each low image and scores it against its pair.
EvalReport evaluate(const RetinaModel& model, const PairedDataset& test_pairs);

/// Scores the low images themselves (the unenhanced baseline).
EvalReport evaluate_baseline(const PairedDataset& test_pairs);

}  // namespace retina
