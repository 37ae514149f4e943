#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ksconv/error.hpp"

namespace ksconv {

/// Read-only row-major 2-D view. Used as the common currency between
/// containers and the convolution kernels.
template <std::floating_point T>
struct PlaneView {
    std::span<const T> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const T* row(std::size_t r) const { return data.data() + r * cols; }
};

namespace detail {

template <typename Derived, std::floating_point T>
class Grid2D {
public:
    using value_type = T;

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    PlaneView<T> view() const noexcept { return {data_, rows_, cols_}; }

    friend bool operator==(const Derived& a, const Derived& b) {
        const auto& ga = static_cast<const Grid2D&>(a);
        const auto& gb = static_cast<const Grid2D&>(b);
        return ga.rows_ == gb.rows_ && ga.cols_ == gb.cols_ && ga.data_ == gb.data_;
    }

protected:
    Grid2D(std::size_t rows, std::size_t cols, std::vector<T> data, const char* what)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows_ == 0 || cols_ == 0)
            throw_dimension(std::string(what) + ": dimensions must be at least 1x1");
        if (data_.size() != rows_ * cols_)
            throw_dimension(std::string(what) + ": data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<T> data_;
};

template <std::floating_point T>
std::vector<T> flatten(std::initializer_list<std::initializer_list<T>> rows, std::size_t& r, std::size_t& c) {
    r = rows.size();
    c = r ? rows.begin()->size() : 0;
    std::vector<T> out;
    out.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw_dimension("ragged initializer");
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

} // namespace detail

/// A single H×W feature map.
template <std::floating_point T>
class FeatureMap : public detail::Grid2D<FeatureMap<T>, T> {
    using Base = detail::Grid2D<FeatureMap<T>, T>;

public:
    FeatureMap(std::size_t height, std::size_t width)
        : Base(height, width, std::vector<T>(height * width, T(0)), "FeatureMap") {}
    FeatureMap(std::size_t height, std::size_t width, std::vector<T> data)
        : Base(height, width, std::move(data), "FeatureMap") {}
    FeatureMap(std::initializer_list<std::initializer_list<T>> rows) : FeatureMap(from_rows(rows)) {}

    explicit FeatureMap(PlaneView<T> v)
        : Base(v.rows, v.cols, std::vector<T>(v.data.begin(), v.data.end()), "FeatureMap") {}

    std::size_t height() const noexcept { return this->rows_; }
    std::size_t width() const noexcept { return this->cols_; }

private:
    static FeatureMap from_rows(std::initializer_list<std::initializer_list<T>> rows) {
        std::size_t r = 0, c = 0;
        auto flat = detail::flatten(rows, r, c);
        return FeatureMap(r, c, std::move(flat));
    }
};

/// A kh×kw correlation kernel. Layer kernels are square; the parity
/// sub-kernels of an odd-sized kernel are not.
template <std::floating_point T>
class Kernel : public detail::Grid2D<Kernel<T>, T> {
    using Base = detail::Grid2D<Kernel<T>, T>;

public:
    Kernel(std::size_t rows, std::size_t cols)
        : Base(rows, cols, std::vector<T>(rows * cols, T(0)), "Kernel") {}
    Kernel(std::size_t rows, std::size_t cols, std::vector<T> data)
        : Base(rows, cols, std::move(data), "Kernel") {}
    Kernel(std::initializer_list<std::initializer_list<T>> rows) : Kernel(from_rows(rows)) {}

    /// Square n×n kernel.
    static Kernel square(std::size_t n, std::vector<T> data) { return Kernel(n, n, std::move(data)); }

    bool is_square() const noexcept { return this->rows_ == this->cols_; }

private:
    static Kernel from_rows(std::initializer_list<std::initializer_list<T>> rows) {
        std::size_t r = 0, c = 0;
        auto flat = detail::flatten(rows, r, c);
        return Kernel(r, c, std::move(flat));
    }
};

/// C planes of identical H×W, stored contiguously channel-major.
template <std::floating_point T>
class ChannelTensor {
public:
    using value_type = T;

    ChannelTensor(std::size_t channels, std::size_t height, std::size_t width)
        : ChannelTensor(channels, height, width, std::vector<T>(channels * height * width, T(0))) {}

    ChannelTensor(std::size_t channels, std::size_t height, std::size_t width, std::vector<T> data)
        : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
        if (channels_ == 0 || height_ == 0 || width_ == 0)
            detail::throw_dimension("ChannelTensor: all dimensions must be at least 1");
        if (data_.size() != channels_ * height_ * width_)
            detail::throw_dimension("ChannelTensor: data length does not match C*H*W");
    }

    static ChannelTensor from_maps(std::span<const FeatureMap<T>> maps) {
        if (maps.empty()) detail::throw_dimension("ChannelTensor: need at least one plane");
        const auto h = maps.front().height(), w = maps.front().width();
        std::vector<T> data;
        data.reserve(maps.size() * h * w);
        for (const auto& m : maps) {
            if (m.height() != h || m.width() != w)
                detail::throw_dimension("ChannelTensor: planes must share dimensions");
            data.insert(data.end(), m.data().begin(), m.data().end());
        }
        return ChannelTensor(maps.size(), h, w, std::move(data));
    }

    std::size_t channels() const noexcept { return channels_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t plane_size() const noexcept { return height_ * width_; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    std::span<T> plane(std::size_t c) { return std::span<T>(data_).subspan(c * plane_size(), plane_size()); }
    std::span<const T> plane(std::size_t c) const {
        return std::span<const T>(data_).subspan(c * plane_size(), plane_size());
    }
    PlaneView<T> view(std::size_t c) const { return {plane(c), height_, width_}; }
    FeatureMap<T> map(std::size_t c) const { return FeatureMap<T>(view(c)); }

    T& operator()(std::size_t c, std::size_t r, std::size_t col) {
        return data_[(c * height_ + r) * width_ + col];
    }
    const T& operator()(std::size_t c, std::size_t r, std::size_t col) const {
        return data_[(c * height_ + r) * width_ + col];
    }

    friend bool operator==(const ChannelTensor&, const ChannelTensor&) = default;

private:
    std::size_t channels_;
    std::size_t height_;
    std::size_t width_;
    std::vector<T> data_;
};

/// Square n×n kernels indexed [c_in][c_out]. Storage is output-channel
/// major ([c_out][c_in][n*n]) so that everything one output channel reads is
/// contiguous.
template <std::floating_point T>
class KernelBank {
public:
    KernelBank(std::size_t c_in, std::size_t c_out, std::size_t n)
        : KernelBank(c_in, c_out, n, std::vector<T>(c_in * c_out * n * n, T(0))) {}

    KernelBank(std::size_t c_in, std::size_t c_out, std::size_t n, std::vector<T> data)
        : c_in_(c_in), c_out_(c_out), n_(n), data_(std::move(data)) {
        if (c_in_ == 0 || c_out_ == 0 || n_ == 0)
            detail::throw_dimension("KernelBank: all dimensions must be at least 1");
        if (data_.size() != c_in_ * c_out_ * n_ * n_)
            detail::throw_dimension("KernelBank: data length does not match C_in*C_out*n*n");
    }

    /// Fills a bank from kernels listed [c_in][c_out]; all must be n×n for a common n.

    static KernelBank from_kernels(const std::vector<std::vector<Kernel<T>>>& kernels) {
        if (kernels.empty() || kernels.front().empty())
            detail::throw_dimension("KernelBank: empty kernel list");
        const std::size_t c_in = kernels.size(), c_out = kernels.front().size();
        const std::size_t n = kernels.front().front().rows();
        KernelBank bank(c_in, c_out, n);
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            if (kernels[ci].size() != c_out) detail::throw_dimension("KernelBank: ragged kernel list");
            for (std::size_t co = 0; co < c_out; ++co) {
                const auto& k = kernels[ci][co];
                if (!k.is_square() || k.rows() != n)
                    detail::throw_dimension("KernelBank: inconsistent kernel sizes within the bank");
                std::copy(k.data().begin(), k.data().end(), bank.kernel_data(ci, co).begin());
            }
        }
        return bank;
    }

    std::size_t c_in() const noexcept { return c_in_; }
    std::size_t c_out() const noexcept { return c_out_; }
    std::size_t n() const noexcept { return n_; }

    std::span<const T> data() const noexcept { return data_; }
    std::span<T> data() noexcept { return data_; }

    std::span<const T> kernel_data(std::size_t ci, std::size_t co) const {
        return std::span<const T>(data_).subspan((co * c_in_ + ci) * n_ * n_, n_ * n_);
    }
    std::span<T> kernel_data(std::size_t ci, std::size_t co) {
        return std::span<T>(data_).subspan((co * c_in_ + ci) * n_ * n_, n_ * n_);
    }
    Kernel<T> kernel(std::size_t ci, std::size_t co) const {
        auto d = kernel_data(ci, co);
        return Kernel<T>(n_, n_, std::vector<T>(d.begin(), d.end()));
    }

    friend bool operator==(const KernelBank&, const KernelBank&) = default;

private:
    std::size_t c_in_;
    std::size_t c_out_;
    std::size_t n_;
    std::vector<T> data_;
};

/// Element-wise conversion between precisions (used for 64-bit oracle runs).
template <std::floating_point To, std::floating_point From>
ChannelTensor<To> convert(const ChannelTensor<From>& t) {
    std::vector<To> d(t.data().begin(), t.data().end());
    return ChannelTensor<To>(t.channels(), t.height(), t.width(), std::move(d));
}

template <std::floating_point To, std::floating_point From>
KernelBank<To> convert(const KernelBank<From>& b) {
    std::vector<To> d(b.data().begin(), b.data().end());
    return KernelBank<To>(b.c_in(), b.c_out(), b.n(), std::move(d));
}

} // namespace ksconv
