#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace ksconv {

/// Instrumentation hook compiled out of the normal engine paths.
struct NullProbe {
    static constexpr bool enabled = false;
    void products(std::size_t) noexcept {}
    void write(std::size_t /*unit*/, std::size_t /*x*/, std::size_t /*y*/) noexcept {}
};

/// Counts executed multiplications and output writes. When `track` has been
/// called it also keeps a per-position write histogram so that "each output
/// element written exactly once" can be checked, not just the total.
///
/// Units (output channels) write disjoint regions, so the histogram needs no
/// synchronisation; the totals are atomic so one probe can serve a parallel run.
class CountingProbe {
public:
    static constexpr bool enabled = true;

    void track(std::size_t units, std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        hits_.assign(units * rows * cols, 0);
    }

    void products(std::size_t count) noexcept { products_.fetch_add(count, std::memory_order_relaxed); }

    void write(std::size_t unit, std::size_t x, std::size_t y) noexcept {
        writes_.fetch_add(1, std::memory_order_relaxed);
        if (!hits_.empty()) ++hits_[(unit * rows_ + x) * cols_ + y];
    }

    std::uint64_t product_count() const noexcept { return products_.load(); }
    std::uint64_t write_count() const noexcept { return writes_.load(); }
    const std::vector<std::uint32_t>& hits() const noexcept { return hits_; }

private:
    std::atomic<std::uint64_t> products_{0};
    std::atomic<std::uint64_t> writes_{0};
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint32_t> hits_;
};

} // namespace ksconv
