#pragma once

#include <bit>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "ksconv/error.hpp"
#include "ksconv/tensor.hpp"

namespace ksconv {

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed for " + path.string());
}

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

// Netpbm header token reader: skips whitespace and '#' comments.
class PnmHeader {
public:
    explicit PnmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::string token() {
        skip_space();
        std::string tok;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
            tok.push_back(static_cast<char>(bytes_[pos_++]));
        if (tok.empty()) throw FormatError("PPM: truncated header");
        return tok;
    }

    std::size_t number(const char* what) {
        const auto tok = token();
        std::size_t value = 0;
        for (char ch : tok) {
            if (ch < '0' || ch > '9') throw FormatError(std::string("PPM: malformed ") + what + " '" + tok + "'");
            value = value * 10 + std::size_t(ch - '0');
            if (value > (1u << 24)) throw FormatError(std::string("PPM: ") + what + " too large");
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw FormatError("PPM: malformed header end");
        return pos_ + 1;
    }

private:
    void skip_space() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Decodes a binary PPM (P6, maxval 255) into a 3-channel tensor with values
/// byte/255. Images are taken as-is; no resizing.
inline ChannelTensor<float> decode_ppm(std::span<const std::uint8_t> bytes) {
    detail::PnmHeader header(bytes);
    const auto magic = header.token();
    if (magic != "P6") throw FormatError("PPM: unsupported format '" + magic + "' (only binary P6)");
    const auto width = header.number("width");
    const auto height = header.number("height");
    const auto maxval = header.number("maxval");
    if (width == 0 || height == 0) throw FormatError("PPM: zero image dimension");
    if (maxval != 255) throw FormatError("PPM: unsupported maxval " + std::to_string(maxval) + " (only 255)");
    const auto offset = header.raster_offset();
    const std::size_t pixels = width * height;
    if (bytes.size() - offset < pixels * 3)
        throw FormatError("PPM: truncated pixel data (" + std::to_string(bytes.size() - offset) + " of " +
                          std::to_string(pixels * 3) + " bytes)");

    ChannelTensor<float> t(3, height, width);
    const std::uint8_t* px = bytes.data() + offset;
    for (std::size_t i = 0; i < pixels; ++i)
        for (std::size_t c = 0; c < 3; ++c) t.plane(c)[i] = float(px[3 * i + c]) / 255.0f;
    return t;
}

inline ChannelTensor<float> load_ppm(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    return decode_ppm(bytes);
}

/// "SCT1" raw tensor: magic, then C, H, W as u32 little-endian, then C*H*W
/// IEEE-754 binary32 values little-endian, channel-major row-major.
inline std::vector<std::uint8_t> encode_sct(const ChannelTensor<float>& t) {
    std::vector<std::uint8_t> out{'S', 'C', 'T', '1'};
    out.reserve(16 + 4 * t.data().size());
    detail::put_u32le(out, static_cast<std::uint32_t>(t.channels()));
    detail::put_u32le(out, static_cast<std::uint32_t>(t.height()));
    detail::put_u32le(out, static_cast<std::uint32_t>(t.width()));
    for (float v : t.data()) detail::put_u32le(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

inline ChannelTensor<float> decode_sct(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16) throw FormatError("SCT1: truncated header");
    if (bytes[0] != 'S' || bytes[1] != 'C' || bytes[2] != 'T' || bytes[3] != '1')
        throw FormatError("SCT1: bad magic");
    const std::uint64_t c = detail::get_u32le(bytes.data() + 4);
    const std::uint64_t h = detail::get_u32le(bytes.data() + 8);
    const std::uint64_t w = detail::get_u32le(bytes.data() + 12);
    if (c == 0 || h == 0 || w == 0) throw FormatError("SCT1: zero dimension in header");
    const std::uint64_t count = c * h * w;
    if (bytes.size() - 16 != count * 4)
        throw FormatError("SCT1: payload size " + std::to_string(bytes.size() - 16) + " does not match header (" +
                          std::to_string(count * 4) + " bytes expected)");
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i)
        data[i] = std::bit_cast<float>(detail::get_u32le(bytes.data() + 16 + 4 * i));
    return ChannelTensor<float>(c, h, w, std::move(data));
}

inline void save_raw_tensor(const ChannelTensor<float>& t, const std::filesystem::path& path) {
    detail::write_file(path, encode_sct(t));
}

inline ChannelTensor<float> load_raw_tensor(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    return decode_sct(bytes);
}

} // namespace ksconv
