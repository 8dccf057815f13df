#include "retina/metrics.hpp"

#include <cmath>
#include <cstdio>

namespace retina {

namespace {

std::vector<double> ssim_window_1d() {
    std::vector<double> w(kSsimWindow);
    const double c = static_cast<double>(kSsimWindow - 1) / 2.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < kSsimWindow; ++i) {
        const double d = static_cast<double>(i) - c;
        w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

/// Valid-region separable filtering of an (h x w) double map.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& win) {
    const std::size_t k = win.size();
    const std::size_t ow = w - k + 1;
    const std::size_t oh = h - k + 1;
    std::vector<double> tmp(h * ow, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += win[j] * src[y * w + x + j];
            tmp[y * ow + x] = acc;
        }
    }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) acc += win[i] * tmp[(y + i) * ow + x];
            out[y * ow + x] = acc;
        }
    }
    return out;
}

double ssim_channel(const Image& a, const Image& b, std::size_t ch, const std::vector<double>& win) {
    const std::size_t h = a.height();
    const std::size_t w = a.width();
    std::vector<double> x(h * w), y(h * w), xx(h * w), yy(h * w), xy(h * w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const double av = std::clamp(static_cast<double>(a.at(r, c, ch)), 0.0, 1.0);
            const double bv = std::clamp(static_cast<double>(b.at(r, c, ch)), 0.0, 1.0);
            const std::size_t n = r * w + c;
            x[n] = av;
            y[n] = bv;
            xx[n] = av * av;
            yy[n] = bv * bv;
            xy[n] = av * bv;
        }
    }
    const auto mu_x = filter_valid(x, h, w, win);
    const auto mu_y = filter_valid(y, h, w, win);
    const auto e_xx = filter_valid(xx, h, w, win);
    const auto e_yy = filter_valid(yy, h, w, win);
    const auto e_xy = filter_valid(xy, h, w, win);

    double total = 0.0;
    for (std::size_t n = 0; n < mu_x.size(); ++n) {
        const double mx = mu_x[n];
        const double my = mu_y[n];
        const double var_x = e_xx[n] - mx * mx;
        const double var_y = e_yy[n] - my * my;
        const double cov = e_xy[n] - mx * my;
        const double num = (2.0 * mx * my + kSsimC1) * (2.0 * cov + kSsimC2);
        const double den = (mx * mx + my * my + kSsimC1) * (var_x + var_y + kSsimC2);
        total += num / den;
    }
    return total / static_cast<double>(mu_x.size());
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) {
        throw InvalidInputError("ssim: image dimensions differ");
    }
    if (a.height() < kSsimWindow || a.width() < kSsimWindow) {
        throw InvalidInputError("ssim: images must be at least 11x11");
    }
    static const std::vector<double> win = ssim_window_1d();
    double sum = 0.0;
    for (std::size_t ch = 0; ch < a.channels(); ++ch) {
        sum += ssim_channel(a, b, ch, win);
    }
    return sum / static_cast<double>(a.channels());
}

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b)) {
        throw InvalidInputError("psnr: image dimensions differ");
    }
    auto x = a.data();
    auto y = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(x.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

void EvalReport::finalize() {
    if (per_image.empty()) {
        mean_ssim = 0.0;
        mean_psnr = 0.0;
        return;
    }
    double s = 0.0;
    double p = 0.0;
    for (const auto& e : per_image) {
        s += e.ssim;
        p += e.psnr;
    }
    const double n = static_cast<double>(per_image.size());
    mean_ssim = s / n;
    mean_psnr = p / n;
}

namespace {

nlohmann::ordered_json db_json(double value) {
    if (std::isinf(value) && value > 0) return "inf";
    return value;
}

std::string db_text(double value) {
    if (std::isinf(value) && value > 0) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json images = nlohmann::ordered_json::array();
    for (const auto& e : per_image) {
        nlohmann::ordered_json row = nlohmann::ordered_json::object();
        row["name"] = e.name;
        row["ssim"] = e.ssim;
        row["psnr"] = db_json(e.psnr);
        images.push_back(std::move(row));
    }
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    out["per_image"] = std::move(images);
    out["mean_ssim"] = mean_ssim;
    out["mean_psnr"] = db_json(mean_psnr);
    return out;
}

std::string EvalReport::to_table() const {
    std::size_t name_width = 4;
    for (const auto& e : per_image) name_width = std::max(name_width, e.name.size());
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-*s  %10s  %10s\n", static_cast<int>(name_width), "name", "ssim", "psnr_db");
    out += buf;
    for (const auto& e : per_image) {
        std::snprintf(buf, sizeof(buf), "%-*s  %10.6f  %10s\n", static_cast<int>(name_width), e.name.c_str(), e.ssim,
                      db_text(e.psnr).c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-*s  %10.6f  %10s\n", static_cast<int>(name_width), "mean", mean_ssim,
                  db_text(mean_psnr).c_str());
    out += buf;
    return out;
}

namespace {

template <typename Enhance>
EvalReport evaluate_with(const PairedDataset& test_pairs, Enhance&& enhance) {
    if (test_pairs.pairs.empty()) {
        throw InvalidInputError("evaluate: test set is empty");
    }
    EvalReport report;
    for (const auto& entry : test_pairs.pairs) {
        ImagePair pair = load_pair(entry);
        const Image restored = clamp_unit(enhance(pair.low));
        try {
            report.per_image.push_back({entry.name, ssim(restored, pair.high), psnr(restored, pair.high)});
        } catch (const Error& e) {
            throw DataError(entry.name + ": " + e.what());
        }
    }
    report.finalize();
    return report;
}

}  // namespace

EvalReport evaluate(const RetinaModel& model, const PairedDataset& test_pairs) {
    return evaluate_with(test_pairs, [&](const Image& low) { return infer(model, low); });
}

EvalReport evaluate_baseline(const PairedDataset& test_pairs) {
    return evaluate_with(test_pairs, [](const Image& low) { return low; });
}

}  // namespace retina
