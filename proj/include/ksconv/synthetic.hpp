#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "ksconv/tensor.hpp"

namespace ksconv {

/// SplitMix64 output for generator state `x`: the state is advanced by the
/// golden-ratio increment and then mixed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// z * 2^-64 rounded to the nearest float (ties to even) using integer
/// arithmetic only, so the result does not depend on the host FPU. A value
/// that would round up to 1.0 is clamped to the largest float below 1.
inline float unit_float(std::uint64_t z) noexcept {
    if (z == 0) return 0.0f;
    const int top = 63 - std::countl_zero(z);
    std::uint64_t mantissa = z;
    int exponent = -64;
    if (top > 23) {
        const int shift = top - 23;
        mantissa = z >> shift;
        const std::uint64_t rem = z & ((std::uint64_t{1} << shift) - 1);
        const std::uint64_t half = std::uint64_t{1} << (shift - 1);
        if (rem > half || (rem == half && (mantissa & 1))) ++mantissa;
        exponent += shift;
    }
    const float f = std::ldexp(static_cast<float>(mantissa), exponent);
    return f < 1.0f ? f : std::nextafter(1.0f, 0.0f);
}

/// Deterministic tensor with element i (flat, channel-major) equal to
/// unit_float(splitmix64(seed + i)).
inline ChannelTensor<float> gen_synthetic(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
    std::vector<float> data(c * h * w);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = unit_float(splitmix64(seed + i));
    return ChannelTensor<float>(c, h, w, std::move(data));
}

/// Offset separating the kernel stream from the input stream for one seed.
inline constexpr std::uint64_t kKernelStreamOffset = 0x6A09E667F3BCC909ULL;

/// Kernel bank with values in [-1, 1), drawn from the kernel stream of `seed`.
inline KernelBank<float> random_kernel_bank(std::size_t c_in, std::size_t c_out, std::size_t n,
                                            std::uint64_t seed) {
    std::vector<float> data(c_in * c_out * n * n);
    const std::uint64_t base = seed + kKernelStreamOffset;
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = 2.0f * unit_float(splitmix64(base + i)) - 1.0f;
    return KernelBank<float>(c_in, c_out, n, std::move(data));
}

} // namespace ksconv
