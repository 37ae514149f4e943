#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ksconv/error.hpp"
#include "ksconv/parallel.hpp"
#include "ksconv/probe.hpp"
#include "ksconv/segregation.hpp"
#include "ksconv/spatial.hpp"
#include "ksconv/tensor.hpp"

namespace ksconv {

/// Shape of one stride-2 transpose-convolution layer.
struct TransposeConvSpec {
    static constexpr std::size_t stride = 2;

    std::size_t n_h = 1;
    std::size_t n_w = 1;
    std::size_t n = 2;   // kernel side
    std::size_t pad = 0; // original (upsample-domain) padding
    std::size_t c_in = 1;
    std::size_t c_out = 1;

    friend bool operator==(const TransposeConvSpec&, const TransposeConvSpec&) = default;
};

struct OutputDims {
    std::size_t rows;
    std::size_t cols;

    friend bool operator==(const OutputDims&, const OutputDims&) = default;
};

/// Output size 2N + 2P - n along each axis.
inline OutputDims output_dims(const TransposeConvSpec& spec) {
    if (spec.n_h == 0 || spec.n_w == 0 || spec.n == 0 || spec.c_in == 0 || spec.c_out == 0)
        throw InvalidSpecError("transpose conv spec: dimensions and channel counts must be positive");
    const auto extent = [&](std::size_t in) {
        return static_cast<std::int64_t>(2 * in + 2 * spec.pad) - static_cast<std::int64_t>(spec.n);
    };
    const auto rows = extent(spec.n_h), cols = extent(spec.n_w);
    if (rows < 1 || cols < 1)
        throw InvalidSpecError("transpose conv spec: input " + std::to_string(spec.n_h) + "x" +
                               std::to_string(spec.n_w) + ", kernel " + std::to_string(spec.n) + ", pad " +
                               std::to_string(spec.pad) + " gives an empty output");
    return {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
}

enum class Engine { reference, segregated };

inline const char* to_string(Engine e) noexcept { return e == Engine::reference ? "reference" : "segregated"; }

namespace detail {

/// Kernel-segregated transpose convolution over a stack of padded raw input
/// planes (padding floor(P/2)), summed over input channels, for output
/// channel `co`. For output (x, y):
///   r = (x + swap) mod 2, s = (y + swap) mod 2
///   out(x, y) = sum_c sum_u' sum_v' in_c(floor((x+r)/2) + u', floor((y+s)/2) + v') * k_rs(u', v')
/// Columns sharing a parity are processed as one strided run so that the
/// inner loop reads contiguous input.
template <typename T, typename Probe>
void segregated_stack(const T* in, std::size_t channels, std::size_t in_rows, std::size_t in_cols,
                      const SegregatedBank<T>& bank, std::size_t co, bool swap, T* out, std::size_t out_rows,
                      std::size_t out_cols, std::size_t unit, Probe& probe) {
    const std::size_t plane = in_rows * in_cols;
    const std::size_t flip = swap ? 1 : 0;
    for (std::size_t x = 0; x < out_rows; ++x) {
        const auto r = static_cast<unsigned>((x + flip) & 1);
        const std::size_t row0 = (x + r) >> 1;
        const std::size_t kh = bank.rows(r);
        for (unsigned s = 0; s < 2; ++s) {
            const std::size_t y_first = s ^ flip;
            if (y_first >= out_cols) continue;
            const std::size_t count = (out_cols - y_first + 1) / 2;
            const std::size_t col0 = (y_first + s) >> 1;
            const std::size_t kw = bank.cols(s);
            const T* kbase = bank.base(r, s, co);
            const std::size_t kstride = bank.stride(r, s);
            for (std::size_t t0 = 0; t0 < count; t0 += kChunk) {
                const std::size_t len = std::min(kChunk, count - t0);
                T acc[kChunk] = {};
                for (std::size_t c = 0; c < channels; ++c) {
                    const T* kc = kbase + c * kstride;
                    const T* src = in + c * plane + row0 * in_cols + col0 + t0;
                    for (std::size_t u = 0; u < kh; ++u) {
                        const T* srow = src + u * in_cols;
                        for (std::size_t v = 0; v < kw; ++v) {
                            mac_row(acc, srow + v, kc[u * kw + v], len);
                            if constexpr (Probe::enabled) probe.products(len);
                        }
                    }
                }
                T* dst = out + x * out_cols + y_first + 2 * t0;
                for (std::size_t t = 0; t < len; ++t) {
                    dst[2 * t] = acc[t];
                    if constexpr (Probe::enabled) probe.write(unit, x, y_first + 2 * (t0 + t));
                }
            }
        }
    }
}

template <typename T>
TransposeConvSpec spec_for(const ChannelTensor<T>& x, std::size_t n, std::size_t pad, std::size_t c_out) {
    return {x.height(), x.width(), n, pad, x.channels(), c_out};
}

} // namespace detail

/// Upsample-then-correlate transpose convolution of one map. This is the
/// equivalence oracle for every other path.
template <std::floating_point T, typename Probe = NullProbe>
FeatureMap<T> transpose_conv_reference(const FeatureMap<T>& input, const Kernel<T>& kernel, std::size_t pad,
                                       Probe&& probe = {}) {
    if (!kernel.is_square()) throw DimensionError("transpose_conv_reference: kernel must be square");
    output_dims({input.height(), input.width(), kernel.rows(), pad, 1, 1});
    return cross_correlate_valid(pad_zero(upsample_bed_of_nails(input), pad), kernel, probe);
}

/// Kernel-segregated transpose convolution of one map: no upsampled
/// buffer, one sub-kernel and one store per output element.
template <std::floating_point T, typename Probe = NullProbe>
FeatureMap<T> transpose_conv_segregated(const FeatureMap<T>& input, const SubKernelSet<T>& sub, std::size_t pad,
                                        Probe&& probe = {}) {
    const SegregatedBank<T> bank(sub);
    const auto dims = output_dims({input.height(), input.width(), sub.n, pad, 1, 1});
    const auto eff = effective_padding(pad);
    const auto padded = pad_zero(input, eff.p_eff);
    FeatureMap<T> out(dims.rows, dims.cols);
    detail::segregated_stack(padded.data().data(), 1, padded.height(), padded.width(), bank, 0, eff.swap,
                             out.data().data(), dims.rows, dims.cols, 0, probe);
    return out;
}

/// Multi-channel reference layer: Y[co] = sum_ci transpose_conv(X[ci], W[ci][co]).
/// Materialises the padded bed-of-nails stack for all input channels, then
/// correlates it once per output channel (the parallel unit).
template <std::floating_point T, typename Probe = NullProbe>
ChannelTensor<T> layer_forward_reference(const ChannelTensor<T>& x, const KernelBank<T>& bank, std::size_t pad,
                                         ExecOptions opts = {}, Probe&& probe = {}) {
    if (x.channels() != bank.c_in())
        throw DimensionError("layer_forward: input has " + std::to_string(x.channels()) +
                             " channels, kernel bank expects " + std::to_string(bank.c_in()));
    const auto dims = output_dims(detail::spec_for(x, bank.n(), pad, bank.c_out()));
    const std::size_t uh = 2 * x.height() - 1 + 2 * pad, uw = 2 * x.width() - 1 + 2 * pad;
    std::vector<T> upsampled(x.channels() * uh * uw, T(0));
    for (std::size_t c = 0; c < x.channels(); ++c)
        for (std::size_t i = 0; i < x.height(); ++i)
            for (std::size_t j = 0; j < x.width(); ++j)
                upsampled[(c * uh + pad + 2 * i) * uw + pad + 2 * j] = x(c, i, j);

    ChannelTensor<T> y(bank.c_out(), dims.rows, dims.cols);
    const std::size_t kk = bank.n() * bank.n();
    parallel_for(bank.c_out(), opts.threads, [&](std::size_t co) {
        detail::correlate_stack(upsampled.data(), x.channels(), uh, uw, bank.kernel_data(0, co).data(), kk, bank.n(), bank.n(), y.plane(co).data(), co, probe);
    });
    return y;
}

/// Multi-channel segregated layer over a pre-segregated bank.
template <std::floating_point T, typename Probe = NullProbe>
ChannelTensor<T> layer_forward_segregated(const ChannelTensor<T>& x, const SegregatedBank<T>& bank, std::size_t pad,
                                          ExecOptions opts = {}, Probe&& probe = {}) {
    if (x.channels() != bank.c_in())
        throw DimensionError("layer_forward: input has " + std::to_string(x.channels()) +
                             " channels, kernel bank expects " + std::to_string(bank.c_in()));
    const auto dims = output_dims(detail::spec_for(x, bank.n(), pad, bank.c_out()));
    const auto eff = effective_padding(pad);
    const std::size_t ph = x.height() + 2 * eff.p_eff, pw = x.width() + 2 * eff.p_eff;
    std::vector<T> padded(x.channels() * ph * pw, T(0));
    for (std::size_t c = 0; c < x.channels(); ++c)
        for (std::size_t i = 0; i < x.height(); ++i)
            std::copy_n(&x(c, i, 0), x.width(), padded.data() + (c * ph + eff.p_eff + i) * pw + eff.p_eff);

    ChannelTensor<T> y(bank.c_out(), dims.rows, dims.cols);
    parallel_for(bank.c_out(), opts.threads, [&](std::size_t co) {
        detail::segregated_stack(padded.data(), x.channels(), ph, pw, bank, co, eff.swap, y.plane(co).data(),
                                 dims.rows, dims.cols, co, probe);
    });
    return y;
}

template <std::floating_point T>
ChannelTensor<T> layer_forward(const ChannelTensor<T>& x, const KernelBank<T>& bank, std::size_t pad, Engine engine,
                               ExecOptions opts = {}) {
    if (engine == Engine::reference) return layer_forward_reference(x, bank, pad, opts);
    return layer_forward_segregated(x, SegregatedBank<T>(bank), pad, opts);
}

/// Independent batch items; the parallel units are (item, output channel).
template <std::floating_point T>
std::vector<ChannelTensor<T>> layer_forward_batch(std::span<const ChannelTensor<T>> batch, const KernelBank<T>& bank,
                                                  std::size_t pad, Engine engine, ExecOptions opts = {}) {
    std::vector<ChannelTensor<T>> out;
    out.reserve(batch.size());
    if (engine == Engine::reference) {
        for (const auto& item : batch) out.push_back(layer_forward_reference(item, bank, pad, opts));
        return out;
    }
    const SegregatedBank<T> seg(bank);
    for (const auto& item : batch) out.push_back(layer_forward_segregated(item, seg, pad, opts));
    return out;
}

struct ComparisonReport {
    bool shape_match = false;
    bool pass = false;
    double max_abs_diff = 0.0;
    double max_rel_diff = 0.0;
    std::size_t mismatches = 0;
};

/// Element-wise tolerance check. An element passes when
/// |a - b| <= max(abs_tol, rel_tol * max(|a|, |b|)).
template <std::floating_point T>
ComparisonReport compare_outputs(const ChannelTensor<T>& a, const ChannelTensor<T>& b, double rel_tol,
                                 double abs_tol) {
    ComparisonReport rep;
    rep.shape_match = a.channels() == b.channels() && a.height() == b.height() && a.width() == b.width();
    if (!rep.shape_match) return rep;
    const auto da = a.data(), db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double x = da[i], y = db[i];
        const double diff = std::abs(x - y);
        const double scale = std::max(std::abs(x), std::abs(y));
        rep.max_abs_diff = std::max(rep.max_abs_diff, diff);
        if (scale > 0.0) rep.max_rel_diff = std::max(rep.max_rel_diff, diff / scale);
        if (!(diff <= std::max(abs_tol, rel_tol * scale))) ++rep.mismatches;
    }
    rep.pass = rep.mismatches == 0;
    return rep;
}

template <std::floating_point T>
ComparisonReport compare_outputs(const FeatureMap<T>& a, const FeatureMap<T>& b, double rel_tol, double abs_tol) {
    const auto wrap = [](const FeatureMap<T>& m) {
        return ChannelTensor<T>(1, m.height(), m.width(), std::vector<T>(m.data().begin(), m.data().end()));
    };
    return compare_outputs(wrap(a), wrap(b), rel_tol, abs_tol);
}

} // namespace ksconv
