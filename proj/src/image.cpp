#include "retina/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace retina {

template <std::floating_point T>
ChannelPlanes<T> split_channels(const BasicImage<T>& img) {
    if (img.channels() != 3) {
        throw InvalidChannelError("split_channels requires 3 channels, got " + std::to_string(img.channels()));
    }
    const std::size_t h = img.height();
    const std::size_t w = img.width();
    ChannelPlanes<T> planes{BasicPlane<T>(h, w, 1), BasicPlane<T>(h, w, 1), BasicPlane<T>(h, w, 1)};
    auto src = img.data();
    for (std::size_t c = 0; c < 3; ++c) {
        auto dst = planes[c].data();
        for (std::size_t i = 0; i < h * w; ++i) {
            dst[i] = src[i * 3 + c];
        }
    }
    return planes;
}

template <std::floating_point T>
BasicImage<T> merge_channels(const ChannelPlanes<T>& planes) {
    const std::size_t h = planes.r.height();
    const std::size_t w = planes.r.width();
    for (std::size_t c = 0; c < 3; ++c) {
        if (planes[c].channels() != 1 || planes[c].height() != h || planes[c].width() != w) {
            throw InvalidInputError("merge_channels requires three single-channel planes of equal size");
        }
    }
    BasicImage<T> out(h, w, 3);
    auto dst = out.data();
    for (std::size_t c = 0; c < 3; ++c) {
        auto src = planes[c].data();
        for (std::size_t i = 0; i < h * w; ++i) {
            dst[i * 3 + c] = src[i];
        }
    }
    return out;
}

template <std::floating_point T>
BasicImage<T> clamp_unit(const BasicImage<T>& img) {
    BasicImage<T> out = img;
    for (T& v : out.data()) {
        v = std::clamp(v, T(0), T(1));
    }
    return out;
}

template ChannelPlanes<float> split_channels(const BasicImage<float>&);
template ChannelPlanes<double> split_channels(const BasicImage<double>&);
template BasicImage<float> merge_channels(const ChannelPlanes<float>&);
template BasicImage<double> merge_channels(const ChannelPlanes<double>&);
template BasicImage<float> clamp_unit(const BasicImage<float>&);
template BasicImage<double> clamp_unit(const BasicImage<double>&);

// -----------------------------------------------------------------------------
// PNG
// -----------------------------------------------------------------------------

namespace {

// libpng reports errors through longjmp. Every C++ object touched by the
// coder lives in a state struct owned by the caller, so the frame containing
// setjmp holds only trivially destructible locals.
struct ReadState {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;
    int bit_depth = 0;
    int color_type = 0;
    bool unsupported = false;
    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> rows;
    char message[256] = {};
};

struct WriteState {
    const Image* img = nullptr;
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> row;
    char message[256] = {};
};

template <typename State>
void error_callback(png_structp png, png_const_charp msg) {
    auto* state = static_cast<State*>(png_get_error_ptr(png));
    std::snprintf(state->message, sizeof(state->message), "%s", msg);
    png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

void read_callback(png_structp png, png_bytep out, png_size_t length) {
    auto* state = static_cast<ReadState*>(png_get_io_ptr(png));
    if (state->offset + length > state->bytes.size()) {
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(out, state->bytes.data() + state->offset, length);
    state->offset += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
    auto* state = static_cast<WriteState*>(png_get_io_ptr(png));
    state->out.insert(state->out.end(), data, data + length);
}

void flush_callback(png_structp) {}

bool run_decode(ReadState& st) {
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, error_callback<ReadState>, warning_callback);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }

    png_set_read_fn(png, &st, read_callback);
    png_read_info(png, info);

    st.width = png_get_image_width(png, info);
    st.height = png_get_image_height(png, info);
    st.color_type = png_get_color_type(png, info);
    st.bit_depth = png_get_bit_depth(png, info);

    switch (st.color_type) {
        case PNG_COLOR_TYPE_GRAY:
            st.channels = 1;
            break;
        case PNG_COLOR_TYPE_GRAY_ALPHA:
            st.channels = 1;
            png_set_strip_alpha(png);
            break;
        case PNG_COLOR_TYPE_RGB:
            st.channels = 3;
            break;
        case PNG_COLOR_TYPE_RGB_ALPHA:
            st.channels = 3;
            png_set_strip_alpha(png);
            break;
        default:
            st.unsupported = true;
            png_destroy_read_struct(&png, &info, nullptr);
            return false;
    }
    if (st.bit_depth < 8) {
        // low bit-depth grayscale is expanded so the sample scale is 255
        png_set_expand_gray_1_2_4_to_8(png);
        st.bit_depth = 8;
    }
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    if (rowbytes != st.width * st.channels * static_cast<std::size_t>(st.bit_depth / 8)) {
        png_error(png, "unexpected row layout");
    }
    st.raw.resize(rowbytes * st.height);
    st.rows.resize(st.height);
    for (std::size_t y = 0; y < st.height; ++y) {
        st.rows[y] = st.raw.data() + y * rowbytes;
    }
    png_read_image(png, st.rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

bool run_encode(WriteState& st) {
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &st, error_callback<WriteState>, warning_callback);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }

    const Image& img = *st.img;
    png_set_write_fn(png, &st, write_callback, flush_callback);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::size_t rowlen = img.width() * img.channels();
    st.row.resize(rowlen);
    auto src = img.data();
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t i = 0; i < rowlen; ++i) {
            const float v = std::clamp(src[y * rowlen + i], 0.0f, 1.0f);
            st.row[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
        png_write_row(png, st.row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

}  // namespace

Image decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw DecodeError("not a PNG file (bad signature)");
    }
    ReadState st;
    st.bytes = bytes;
    if (!run_decode(st)) {
        if (st.unsupported) {
            throw UnsupportedFormatError("unsupported PNG colour type " + std::to_string(st.color_type) +
                                         " (palette images are not supported)");
        }
        throw DecodeError(std::string("malformed PNG: ") + (st.message[0] ? st.message : "unknown error"));
    }
    if (st.width == 0 || st.height == 0) {
        throw DecodeError("malformed PNG: zero-sized image");
    }

    Image img(st.height, st.width, st.channels);
    auto dst = img.data();
    if (st.bit_depth == 16) {
        for (std::size_t i = 0; i < dst.size(); ++i) {
            // PNG stores 16-bit samples big-endian
            const unsigned v = (unsigned(st.raw[2 * i]) << 8) | st.raw[2 * i + 1];
            dst[i] = static_cast<float>(v) / 65535.0f;
        }
    } else {
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = static_cast<float>(st.raw[i]) / 255.0f;
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    WriteState st;
    st.img = &img;
    if (!run_encode(st)) {
        throw Error(std::string("PNG encode failed: ") + (st.message[0] ? st.message : "unknown error"));
    }
    return std::move(st.out);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("write failed for " + path.string());
    }
}

Image read_png(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_png(bytes);
    } catch (const DecodeError& e) {
        throw DecodeError(path.string() + ": " + e.what());
    } catch (const UnsupportedFormatError& e) {
        throw UnsupportedFormatError(path.string() + ": " + e.what());
    }
}

void write_png(const std::filesystem::path& path, const Image& img) {
    write_file(path, encode_png(img));
}

}  // namespace retina
