#ifndef FLEXIFILM_IO_HPP
#define FLEXIFILM_IO_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "flexifilm/tensor.hpp"

// FFT1 tensor files: "FFT1", u32 rank, rank x u32 extents, little-endian f32
// payload, no padding. PPM frames: binary P6, 8 bits per channel.

namespace flexifilm {

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("FFT1: truncated header");
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

}  // namespace detail

inline void write_fft1(std::ostream& os, const Tensor& t) {
    os.write("FFT1", 4);
    detail::put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) detail::put_u32(os, static_cast<std::uint32_t>(e));
    for (float v : t.data()) detail::put_u32(os, std::bit_cast<std::uint32_t>(v));
    if (!os) throw IoError("FFT1: write failed");
}

inline Tensor read_fft1(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "FFT1", 4) != 0) throw IoError("FFT1: bad magic");
    const std::uint32_t rank = detail::get_u32(is);
    if (rank > 16) throw IoError("FFT1: implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& e : shape) e = detail::get_u32(is);
    std::vector<float> data(numel(shape));
    for (auto& v : data) v = std::bit_cast<float>(detail::get_u32(is));
    return Tensor(std::move(shape), std::move(data));
}

inline void write_fft1(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_fft1(os, t);
}

inline Tensor read_fft1(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return read_fft1(is);
}

// frame: [3, H, W] with values in [-1, 1]
inline void write_ppm(const std::filesystem::path& path, const Tensor& frame) {
    if (frame.rank() != 3 || frame.extent(0) != 3) throw ShapeError("write_ppm: expected [3,H,W]");
    const std::size_t h = frame.extent(1), w = frame.extent(2);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << "P6\n" << w << ' ' << h << "\n255\n";
    std::vector<unsigned char> px(3 * h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                const float v = frame.raw()[(c * h + y) * w + x];
                const float u = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
                px[(y * w + x) * 3 + c] = static_cast<unsigned char>(std::lround(u * 255.0f));
            }
    os.write(reinterpret_cast<const char*>(px.data()), std::streamsize(px.size()));
    if (!os) throw IoError("write_ppm: write failed");
}

inline Tensor read_ppm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    is >> magic >> w >> h >> maxval;
    if (magic != "P6" || w == 0 || h == 0 || maxval != 255) throw IoError("read_ppm: unsupported PPM " + path.string());
    is.get();  // single whitespace after header
    std::vector<unsigned char> px(3 * w * h);
    if (!is.read(reinterpret_cast<char*>(px.data()), std::streamsize(px.size()))) throw IoError("read_ppm: truncated");
    Tensor frame({3, h, w});
    auto d = frame.mutable_data();
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) d[(c * h + y) * w + x] = px[(y * w + x) * 3 + c] / 255.0f * 2.0f - 1.0f;
    return frame;
}

/// A video from an FFT1 file ([F,3,H,W]) or a directory of PPM frames in
/// name order.
inline Tensor read_video(const std::filesystem::path& path) {
    if (!std::filesystem::is_directory(path)) {
        Tensor v = read_fft1(path);
        if (v.rank() != 4) throw ShapeError("read_video: expected a [frames, C, H, W] tensor in " + path.string());
        return v;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
        if (e.path().extension() == ".ppm") files.push_back(e.path());
    if (files.empty()) throw IoError("read_video: no .ppm frames in " + path.string());
    std::sort(files.begin(), files.end());
    std::vector<float> data;
    Shape frame_shape;
    for (const auto& f : files) {
        const Tensor frame = read_ppm(f);
        if (frame_shape.empty()) frame_shape = frame.shape();
        if (frame.shape() != frame_shape) throw ShapeError("read_video: frame sizes differ in " + path.string());
        data.insert(data.end(), frame.data().begin(), frame.data().end());
    }
    Shape shape{files.size()};
    shape.insert(shape.end(), frame_shape.begin(), frame_shape.end());
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace flexifilm

#endif
