#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ksconv/error.hpp"
#include "ksconv/tensor.hpp"

namespace ksconv {

/// Rows (or columns) of the parity-`p` sub-kernel taken from an n-wide kernel.
constexpr std::size_t parity_extent(std::size_t n, unsigned p) noexcept { return p == 0 ? (n + 1) / 2 : n / 2; }

/// The four parity sub-kernels of one n×n kernel:
///   k_rs(u', v') = K(2u' + r, 2v' + s)
template <std::floating_point T>
struct SubKernelSet {
    std::size_t n;
    // Indexed [r][s].
    std::array<std::array<Kernel<T>, 2>, 2> k;

    const Kernel<T>& k00() const { return k[0][0]; }
    const Kernel<T>& k01() const { return k[0][1]; }
    const Kernel<T>& k10() const { return k[1][0]; }
    const Kernel<T>& k11() const { return k[1][1]; }
    const Kernel<T>& at(unsigned r, unsigned s) const { return k[r][s]; }
};

/// Padding of the raw input for the segregated engine, and whether the
/// parity-to-sub-kernel assignment is reversed (odd original padding).
struct EffectivePadding {
    std::size_t p_eff;
    bool swap;

    friend bool operator==(const EffectivePadding&, const EffectivePadding&) = default;
};

constexpr EffectivePadding effective_padding(std::size_t p) noexcept { return {p / 2, p % 2 == 1}; }

template <std::floating_point T>
SubKernelSet<T> segregate_kernel(const Kernel<T>& kernel) {
    if (!kernel.is_square())
        throw DimensionError("segregate_kernel: kernel must be square");
    const std::size_t n = kernel.rows();
    if (n < 2) throw DimensionError("segregate_kernel: kernel size must be at least 2");

    auto extract = [&](unsigned r, unsigned s) {
        const std::size_t rows = parity_extent(n, r), cols = parity_extent(n, s);
        Kernel<T> sub(rows, cols);
        for (std::size_t u = 0; u < rows; ++u)
            for (std::size_t v = 0; v < cols; ++v) sub(u, v) = kernel(2 * u + r, 2 * v + s);
        return sub;
    };
    return SubKernelSet<T>{n, {{{extract(0, 0), extract(0, 1)}, {extract(1, 0), extract(1, 1)}}}};
}

template <std::floating_point T>
Kernel<T> merge_subkernels(const SubKernelSet<T>& set) {
    const std::size_t n = set.n;
    if (n < 2) throw DimensionError("merge_subkernels: kernel size must be at least 2");
    for (unsigned r = 0; r < 2; ++r)
        for (unsigned s = 0; s < 2; ++s) {
            const auto& sub = set.at(r, s);
            if (sub.rows() != parity_extent(n, r) || sub.cols() != parity_extent(n, s))
                throw DimensionError("merge_subkernels: sub-kernel k" + std::to_string(r) + std::to_string(s) +
                                     " has dimensions " + std::to_string(sub.rows()) + "x" +
                                     std::to_string(sub.cols()) + ", inconsistent with n=" + std::to_string(n));
        }
    Kernel<T> out(n, n);
    for (unsigned r = 0; r < 2; ++r)
        for (unsigned s = 0; s < 2; ++s) {
            const auto& sub = set.at(r, s);
            for (std::size_t u = 0; u < sub.rows(); ++u)
                for (std::size_t v = 0; v < sub.cols(); ++v) out(2 * u + r, 2 * v + s) = sub(u, v);
        }
    return out;
}

/// Segregated form of a whole KernelBank. For each parity (r, s) the
/// sub-kernels are stored contiguously [c_out][c_in][R*C], the same
/// output-channel-major order as the source bank.
template <std::floating_point T>
class SegregatedBank {
public:
    explicit SegregatedBank(const KernelBank<T>& bank) : c_in_(bank.c_in()), c_out_(bank.c_out()), n_(bank.n()) {
        if (n_ < 2) throw DimensionError("SegregatedBank: kernel size must be at least 2");
        for (unsigned r = 0; r < 2; ++r)
            for (unsigned s = 0; s < 2; ++s) {
                const std::size_t rows = parity_extent(n_, r), cols = parity_extent(n_, s);
                auto& dst = parts_[r][s];
                dst.reserve(c_in_ * c_out_ * rows * cols);
                for (std::size_t co = 0; co < c_out_; ++co)
                    for (std::size_t ci = 0; ci < c_in_; ++ci) {
                        const T* k = bank.kernel_data(ci, co).data();
                        for (std::size_t u = 0; u < rows; ++u)
                            for (std::size_t v = 0; v < cols; ++v) dst.push_back(k[(2 * u + r) * n_ + 2 * v + s]);
                    }
            }
    }

    explicit SegregatedBank(const SubKernelSet<T>& set) : c_in_(1), c_out_(1), n_(set.n) {
        if (n_ < 2) throw DimensionError("SegregatedBank: kernel size must be at least 2");
        for (unsigned r = 0; r < 2; ++r)
            for (unsigned s = 0; s < 2; ++s) {
                const auto& sub = set.at(r, s);
                if (sub.rows() != parity_extent(n_, r) || sub.cols() != parity_extent(n_, s))
                    throw DimensionError("SegregatedBank: sub-kernel dimensions inconsistent with n");
                parts_[r][s].assign(sub.data().begin(), sub.data().end());
            }
    }

    std::size_t c_in() const noexcept { return c_in_; }
    std::size_t c_out() const noexcept { return c_out_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t rows(unsigned r) const noexcept { return parity_extent(n_, r); }
    std::size_t cols(unsigned s) const noexcept { return parity_extent(n_, s); }

    /// Start of sub-kernel k_rs for (ci = 0, co); successive ci are `stride(r, s)` apart.
    const T* base(unsigned r, unsigned s, std::size_t co) const noexcept {
        return parts_[r][s].data() + co * c_in_ * rows(r) * cols(s);
    }
    std::size_t stride(unsigned r, unsigned s) const noexcept { return rows(r) * cols(s); }

private:
    std::size_t c_in_;
    std::size_t c_out_;
    std::size_t n_;
    std::array<std::array<std::vector<T>, 2>, 2> parts_;
};

} // namespace ksconv
