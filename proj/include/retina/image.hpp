#pragma once

/**
 * @file image.hpp
 * @brief Image tensor, channel split/merge and PNG I/O.
 *
 * Samples are stored row-major by (row, column, channel). Decoded values lie
 * in [0,1]; intermediate results are free to leave that range and are only
 * clamped when written back out as PNG.
 */

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "retina/error.hpp"

namespace retina {

template <std::floating_point T>
class BasicImage {
public:
    using value_type = T;

    BasicImage(std::size_t height, std::size_t width, std::size_t channels)
        : BasicImage(height, width, channels, std::vector<T>(height * width * channels, T(0))) {}

    BasicImage(std::size_t height, std::size_t width, std::size_t channels, std::vector<T> data)
        : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
        if (height_ == 0 || width_ == 0) {
            throw InvalidDimensionError("image dimensions must be at least 1x1");
        }
        if (channels_ != 1 && channels_ != 3) {
            throw InvalidChannelError("image must have 1 or 3 channels, got " + std::to_string(channels_));
        }
        if (data_.size() != height_ * width_ * channels_) {
            throw InvalidDimensionError("image data length does not match height*width*channels");
        }
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }

    T& at(std::size_t row, std::size_t col, std::size_t ch = 0) {
        return data_[(row * width_ + col) * channels_ + ch];
    }
    T at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
        return data_[(row * width_ + col) * channels_ + ch];
    }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    bool same_shape(const BasicImage& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    template <std::floating_point U>
    BasicImage<U> cast() const {
        return BasicImage<U>(height_, width_, channels_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const BasicImage&, const BasicImage&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::size_t channels_;
    std::vector<T> data_;
};

using Image = BasicImage<float>;
using ImageD = BasicImage<double>;

/// Single-channel image; the carrier for one colour plane.
template <std::floating_point T>
using BasicPlane = BasicImage<T>;
using Plane = BasicPlane<float>;

template <std::floating_point T>
struct ChannelPlanes {
    BasicPlane<T> r, g, b;

    BasicPlane<T>& operator[](std::size_t c) { return c == 0 ? r : (c == 1 ? g : b); }
    const BasicPlane<T>& operator[](std::size_t c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

template <std::floating_point T>
ChannelPlanes<T> split_channels(const BasicImage<T>& img);

template <std::floating_point T>
BasicImage<T> merge_channels(const ChannelPlanes<T>& planes);

/// Copy of `img` with every sample clamped to [0,1].
template <std::floating_point T>
BasicImage<T> clamp_unit(const BasicImage<T>& img);

/// Decodes 8/16-bit grayscale or truecolour PNG (alpha dropped) into [0,1].
Image decode_png(std::span<const std::uint8_t> bytes);

/// Clamps to [0,1], quantizes to 8 bits and writes a PNG with the image's channel count.
std::vector<std::uint8_t> encode_png(const Image& img);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace retina
