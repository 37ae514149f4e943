#pragma once

#include <cstddef>
#include <cstdint>

#include "ksconv/engines.hpp"
#include "ksconv/segregation.hpp"

namespace ksconv {

/// Which buffer the memory-savings figure accounts for.
enum class SavingsMode {
    /// The whole padded bed-of-nails buffer the segregated engine never allocates.
    upsampled_total,
    /// The same buffer net of the padded raw input the segregated engine does allocate.
    upsampled_minus_input,
};

inline const char* to_string(SavingsMode m) noexcept {
    return m == SavingsMode::upsampled_total ? "upsampled_total" : "upsampled_minus_input";
}

inline constexpr std::size_t kDefaultElementBytes = 4;

/// Multiplications performed by the upsample-then-correlate engine: every
/// output element costs n^2 products per channel pair, zeros included.
inline std::uint64_t mult_count_reference(const TransposeConvSpec& spec) {
    const auto d = output_dims(spec);
    return std::uint64_t(d.rows) * d.cols * spec.n * spec.n * spec.c_in * spec.c_out;
}

namespace detail {

// Sum over one output axis of the sub-kernel extent selected by that
// coordinate's parity.
inline std::uint64_t parity_axis_sum(std::size_t extent, std::size_t n, bool swap) {
    const std::uint64_t even = (extent + 1) / 2, odd = extent / 2;
    // Parity class 0 (ceil(n/2)-wide sub-kernels) is the even coordinates unless swapped.
    const std::uint64_t class0 = swap ? odd : even;
    const std::uint64_t class1 = swap ? even : odd;
    return class0 * parity_extent(n, 0) + class1 * parity_extent(n, 1);
}

} // namespace detail

/// Multiplications performed by the segregated engine (live products only).
inline std::uint64_t mult_count_segregated(const TransposeConvSpec& spec) {
    const auto d = output_dims(spec);
    const bool swap = effective_padding(spec.pad).swap;
    return detail::parity_axis_sum(d.rows, spec.n, swap) * detail::parity_axis_sum(d.cols, spec.n, swap) *
           spec.c_in * spec.c_out;
}

/// Bytes of upsampling buffer avoided by the segregated engine.
inline std::uint64_t memory_savings_bytes(std::size_t n_h, std::size_t n_w, std::size_t pad, std::size_t c_in,
                                          SavingsMode mode, std::size_t element_bytes = kDefaultElementBytes) {
    if (n_h == 0 || n_w == 0 || c_in == 0 || element_bytes == 0)
        throw InvalidSpecError("memory_savings_bytes: dimensions must be positive");
    const std::uint64_t up = std::uint64_t(2 * n_h - 1 + 2 * pad) * (2 * n_w - 1 + 2 * pad) * c_in * element_bytes;
    if (mode == SavingsMode::upsampled_total) return up;
    const std::size_t p_eff = effective_padding(pad).p_eff;
    const std::uint64_t raw = std::uint64_t(n_h + 2 * p_eff) * (n_w + 2 * p_eff) * c_in * element_bytes;
    return up - raw;
}

struct CostModel {
    std::uint64_t mults_reference;
    std::uint64_t mults_segregated;
    double ideal_ratio;
    std::uint64_t memory_savings_bytes;
    SavingsMode mode;
};

inline CostModel cost_model(const TransposeConvSpec& spec, SavingsMode mode = SavingsMode::upsampled_total,
                            std::size_t element_bytes = kDefaultElementBytes) {
    CostModel m{};
    m.mults_reference = mult_count_reference(spec);
    m.mults_segregated = mult_count_segregated(spec);
    m.ideal_ratio = double(m.mults_reference) / double(m.mults_segregated);
    m.memory_savings_bytes = memory_savings_bytes(spec.n_h, spec.n_w, spec.pad, spec.c_in, mode, element_bytes);
    m.mode = mode;
    return m;
}

} // namespace ksconv
