#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "ksconv/error.hpp"
#include "ksconv/probe.hpp"
#include "ksconv/tensor.hpp"

namespace ksconv {

namespace detail {

// Output columns accumulated together in registers before a single store.
inline constexpr std::size_t kChunk = 16;

// Multiply-accumulate one source row segment into the chunk accumulator.
template <std::size_t Len, typename T>
inline void mac_fixed(T* acc, const T* src, T k) noexcept {
    for (std::size_t t = 0; t < Len; ++t) acc[t] += k * src[t];
}

template <typename T>
inline void mac_row(T* acc, const T* src, T k, std::size_t len) noexcept {
    switch (len) {
    case kChunk: mac_fixed<kChunk>(acc, src, k); break;
    case 8: mac_fixed<8>(acc, src, k); break;
    case 4: mac_fixed<4>(acc, src, k); break;
    default:
        for (std::size_t t = 0; t < len; ++t) acc[t] += k * src[t];
    }
}

/// Valid cross-correlation of a channel stack, summed over channels:
///   out(x, y) = sum_c sum_u sum_v in_c(x+u, y+v) * k_c(u, v)
/// Accumulation order per output element is c ascending, then (u, v)
/// row-major. Each output element is stored exactly once.
///
/// `in` holds `channels` planes of in_rows×in_cols back to back; the kernel
/// for channel c starts at kbase + c*kstride and is kh×kw row-major.
template <typename T, typename Probe>
void correlate_stack(const T* in, std::size_t channels, std::size_t in_rows, std::size_t in_cols,
                     const T* kbase, std::size_t kstride, std::size_t kh, std::size_t kw, T* out,
                     std::size_t unit, Probe& probe) {
    const std::size_t out_rows = in_rows - kh + 1;
    const std::size_t out_cols = in_cols - kw + 1;
    const std::size_t plane = in_rows * in_cols;
    for (std::size_t x = 0; x < out_rows; ++x) {
        for (std::size_t y0 = 0; y0 < out_cols; y0 += kChunk) {
            const std::size_t len = std::min(kChunk, out_cols - y0);
            T acc[kChunk] = {};
            for (std::size_t c = 0; c < channels; ++c) {
                const T* kc = kbase + c * kstride;
                const T* src = in + c * plane + x * in_cols + y0;
                for (std::size_t u = 0; u < kh; ++u) {
                    const T* srow = src + u * in_cols;
                    for (std::size_t v = 0; v < kw; ++v) {
                        mac_row(acc, srow + v, kc[u * kw + v], len);
                        if constexpr (Probe::enabled) probe.products(len);
                    }
                }
            }
            T* dst = out + x * out_cols + y0;
            for (std::size_t t = 0; t < len; ++t) {
                dst[t] = acc[t];
                if constexpr (Probe::enabled) probe.write(unit, x, y0 + t);
            }
        }
    }
}

} // namespace detail

/// Surrounds the map with `p` rows/columns of zeros on every side.
template <std::floating_point T>
FeatureMap<T> pad_zero(const FeatureMap<T>& map, std::size_t p) {
    FeatureMap<T> out(map.height() + 2 * p, map.width() + 2 * p);
    for (std::size_t r = 0; r < map.height(); ++r)
        std::copy_n(&map(r, 0), map.width(), &out(r + p, p));
    return out;
}

/// Bed-of-nails upsampling: input (i, j) lands at (2i, 2j) of a
/// (2H-1)×(2W-1) map; every other position is zero.
template <std::floating_point T>
FeatureMap<T> upsample_bed_of_nails(const FeatureMap<T>& map) {
    FeatureMap<T> out(2 * map.height() - 1, 2 * map.width() - 1);
    for (std::size_t i = 0; i < map.height(); ++i)
        for (std::size_t j = 0; j < map.width(); ++j) out(2 * i, 2 * j) = map(i, j);
    return out;
}

/// Valid cross-correlation (no kernel flip). The kernel may be rectangular.
template <std::floating_point T, typename Probe = NullProbe>
FeatureMap<T> cross_correlate_valid(const FeatureMap<T>& map, const Kernel<T>& kernel, Probe&& probe = {}) {
    if (kernel.rows() > map.height() || kernel.cols() > map.width())
        throw DimensionError("cross_correlate_valid: kernel " + std::to_string(kernel.rows()) + "x" +
                             std::to_string(kernel.cols()) + " exceeds map " + std::to_string(map.height()) +
                             "x" + std::to_string(map.width()));
    FeatureMap<T> out(map.height() - kernel.rows() + 1, map.width() - kernel.cols() + 1);
    detail::correlate_stack(map.data().data(), 1, map.height(), map.width(), kernel.data().data(), 0,
                            kernel.rows(), kernel.cols(), out.data().data(), 0, probe);
    return out;
}

} // namespace ksconv
