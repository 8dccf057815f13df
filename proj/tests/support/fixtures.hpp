#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "retina/image.hpp"

namespace retina::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "retina") {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Smooth normal-light scene: a few sinusoids per channel, values in ~[0.15, 0.95].
inline Image synthetic_scene(std::size_t h, std::size_t w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(0.02, 0.25);
    std::uniform_real_distribution<double> phase(0.0, 6.283);
    std::normal_distribution<double> noise(0.0, 0.01);
    Image img(h, w, 3);
    for (std::size_t c = 0; c < 3; ++c) {
        const double fx = freq(rng), fy = freq(rng), p = phase(rng), q = phase(rng);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const double v = 0.55 + 0.25 * std::sin(fx * x + p) * std::cos(fy * y + q) +
                                 0.12 * std::sin(0.7 * fx * (x + y) + q) + noise(rng);
                img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return img;
}

/// Dark counterpart: scaled-down scene plus sensor noise.
inline Image darken(const Image& scene, double gain, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.004);
    Image out = scene;
    for (float& v : out.data()) v = static_cast<float>(std::clamp(v * gain + noise(rng), 0.0, 1.0));
    return out;
}

/// Writes a LOL-shaped tree (our485/{low,high}, eval15/{low,high}) of PNG pairs.
inline void write_synthetic_lol(const std::filesystem::path& root, std::size_t n_train, std::size_t n_test,
                                std::size_t h, std::size_t w, std::uint64_t seed = 1) {
    namespace fs = std::filesystem;
    for (const auto& [split, n] : {std::pair{"our485", n_train}, std::pair{"eval15", n_test}}) {
        fs::create_directories(root / split / "low");
        fs::create_directories(root / split / "high");
        for (std::size_t i = 0; i < n; ++i) {
            const std::string name = std::to_string(i + 1) + ".png";
            const std::uint64_t s = seed * 1000003 + (split[0] == 'o' ? 0 : 500) + i;
            const Image high = synthetic_scene(h, w, s);
            write_png(root / split / "high" / name, high);
            write_png(root / split / "low" / name, darken(high, 0.15, s + 7));
        }
    }
}

}  // namespace retina::test
