#include <gtest/gtest.h>

#include <random>

#include "ksconv/engines.hpp"
#include "ksconv/synthetic.hpp"
#include "oracle.hpp"

using namespace ksconv;
using ksconv::testing::Grid;
using ksconv::testing::pick;
using ksconv::testing::scatter_transpose_conv;
using ksconv::testing::uniform;

namespace {

struct Case {
    std::size_t h, w, n, pad;
};

// Random case with a non-empty output.
Case random_case(std::mt19937_64& rng, std::size_t max_dim, std::size_t max_n, std::size_t max_pad) {
    for (;;) {
        Case c{pick(rng, 1, max_dim), pick(rng, 1, max_dim), pick(rng, 2, max_n), pick(rng, 0, max_pad)};
        if (2 * c.h + 2 * c.pad > c.n && 2 * c.w + 2 * c.pad > c.n) return c;
    }
}

template <typename T>
FeatureMap<T> to_map(const std::vector<double>& v, std::size_t h, std::size_t w) {
    return FeatureMap<T>(h, w, std::vector<T>(v.begin(), v.end()));
}

} // namespace

TEST(OutputDims, Examples) {
    EXPECT_EQ(output_dims({4, 4, 3, 0, 1, 1}), (OutputDims{5, 5}));
    EXPECT_EQ(output_dims({4, 4, 5, 2, 1, 1}), (OutputDims{7, 7}));
    EXPECT_EQ(output_dims({4, 4, 4, 2, 1, 1}), (OutputDims{8, 8}));
    EXPECT_EQ(output_dims({3, 6, 4, 1, 1, 1}), (OutputDims{4, 10}));
}

TEST(OutputDims, RejectsEmptyOutput) {
    EXPECT_THROW(output_dims({1, 1, 2, 0, 1, 1}), InvalidSpecError);
    EXPECT_THROW(output_dims({4, 1, 5, 0, 1, 1}), InvalidSpecError);
    EXPECT_THROW(output_dims({0, 4, 3, 0, 1, 1}), InvalidSpecError);
    EXPECT_THROW(transpose_conv_reference(FeatureMap<float>{{1}}, Kernel<float>(3, 3), 0), InvalidSpecError);
    EXPECT_THROW(transpose_conv_segregated(FeatureMap<float>{{1}}, segregate_kernel(Kernel<float>(3, 3)), 0),
                 InvalidSpecError);
}

TEST(OutputDims, FiveByFiveWindowCount) {
    // 4×4 upsampled to 7×7, padded by 2 to 11×11: 11 - 5 + 1 = 7 windows per axis.
    const auto padded = pad_zero(upsample_bed_of_nails(FeatureMap<float>(4, 4)), 2);
    EXPECT_EQ(padded.height() - 5 + 1, output_dims({4, 4, 5, 2, 1, 1}).rows);
}

TEST(Reference, OnesKernel) {
    const auto out = transpose_conv_reference(FeatureMap<float>{{1, 2}, {3, 4}}, Kernel<float>{{1, 1}, {1, 1}}, 0);
    EXPECT_EQ(out, (FeatureMap<float>{{1, 2}, {3, 4}}));
}

TEST(Reference, SingleLiveTapPerWindow) {
    const auto out = transpose_conv_reference(FeatureMap<float>{{1, 2}, {3, 4}}, Kernel<float>{{1, 2}, {3, 4}}, 0);
    EXPECT_EQ(out, (FeatureMap<float>{{1, 4}, {9, 16}}));
}

TEST(Reference, ZeroInputGivesZeroOutput) {
    const auto out = transpose_conv_reference(FeatureMap<float>(3, 5), Kernel<float>(3, 3, std::vector<float>(9, 2.f)), 1);
    for (float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Reference, MatchesScatterOracle) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = random_case(rng, 12, 9, 4);
        Grid in(c.h, c.w), k(c.n, c.n);
        in.v = uniform(rng, c.h * c.w);
        k.v = uniform(rng, c.n * c.n);
        const auto expected = scatter_transpose_conv(in, k, c.pad);
        const auto out = transpose_conv_reference(to_map<double>(in.v, c.h, c.w),
                                                  Kernel<double>::square(c.n, k.v), c.pad);
        ASSERT_EQ(out.height(), expected.rows);
        ASSERT_EQ(out.width(), expected.cols);
        for (std::size_t i = 0; i < expected.v.size(); ++i) ASSERT_NEAR(out.data()[i], expected.v[i], 1e-12);
    }
}

TEST(Segregated, TwoByTwoExample) {
    const auto s = segregate_kernel(Kernel<float>{{1, 2}, {3, 4}});
    EXPECT_EQ(transpose_conv_segregated(FeatureMap<float>{{1, 2}, {3, 4}}, s, 0), (FeatureMap<float>{{1, 4}, {9, 16}}));
}

TEST(Segregated, FiveByFivePadTwoLayout) {
    // 4×4 input, original padding 2: raw input padded by 1 to 6×6, 7×7 output.
    EXPECT_EQ(effective_padding(2).p_eff, 1u);
    EXPECT_EQ(pad_zero(FeatureMap<float>(4, 4), effective_padding(2).p_eff).height(), 6u);
    std::mt19937_64 rng(22);
    const auto in = to_map<float>(uniform(rng, 16), 4, 4);
    const auto v = uniform(rng, 25);
    const auto k = Kernel<float>::square(5, std::vector<float>(v.begin(), v.end()));
    const auto out = transpose_conv_segregated(in, segregate_kernel(k), 2);
    EXPECT_EQ(out.height(), 7u);
    EXPECT_EQ(out.width(), 7u);
    EXPECT_TRUE(compare_outputs(out, transpose_conv_reference(in, k, 2), 1e-5, 1e-6).pass);
}

TEST(Segregated, EquivalentToReferenceRandomized) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = random_case(rng, 16, 7, 3);
        const auto iv = uniform(rng, c.h * c.w), kv = uniform(rng, c.n * c.n);
        const auto in = to_map<float>(iv, c.h, c.w);
        const auto k = Kernel<float>::square(c.n, std::vector<float>(kv.begin(), kv.end()));
        const auto ref = transpose_conv_reference(in, k, c.pad);
        const auto seg = transpose_conv_segregated(in, segregate_kernel(k), c.pad);
        const auto cmp = compare_outputs(ref, seg, 1e-5, 1e-6);
        ASSERT_TRUE(cmp.pass) << "h=" << c.h << " w=" << c.w << " n=" << c.n << " pad=" << c.pad
                              << " max_abs=" << cmp.max_abs_diff;
    }
}

TEST(Segregated, WritesEachOutputExactlyOnce) {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = random_case(rng, 16, 9, 4);
        CountingProbe probe;
        const auto dims = output_dims({c.h, c.w, c.n, c.pad, 1, 1});
        probe.track(1, dims.rows, dims.cols);
        transpose_conv_segregated(FeatureMap<float>(c.h, c.w), segregate_kernel(Kernel<float>(c.n, c.n)), c.pad,
                                  probe);
        ASSERT_EQ(probe.write_count(), dims.rows * dims.cols);
        for (auto hits : probe.hits()) ASSERT_EQ(hits, 1u);
    }
}

TEST(Segregated, OddOutputHasNoExtraElements) {
    CountingProbe probe;
    const auto out =
        transpose_conv_segregated(FeatureMap<float>(4, 4), segregate_kernel(Kernel<float>(5, 5)), 0, probe);
    EXPECT_EQ(out.height(), 3u);
    EXPECT_EQ(probe.write_count(), 9u);
}

TEST(Engines, DeltaKernelScatter) {
    // A delta at K(0, 0) reproduces the padded bed-of-nails map; odd
    // padding moves the live positions to odd coordinates.
    std::mt19937_64 rng(26);
    for (std::size_t n = 2; n <= 6; ++n)
        for (std::size_t pad = 0; pad <= 3; ++pad) {
            const auto in = to_map<float>(uniform(rng, 36), 6, 6);
            Kernel<float> delta(n, n);
            delta(0, 0) = 1.0f;
            const auto ref = transpose_conv_reference(in, delta, pad);
            for (std::size_t x = 0; x < ref.height(); ++x)
                for (std::size_t y = 0; y < ref.width(); ++y) {
                    const bool live = x >= pad && y >= pad && (x - pad) % 2 == 0 && (y - pad) % 2 == 0 &&
                                      (x - pad) / 2 < 6 && (y - pad) / 2 < 6;
                    EXPECT_EQ(ref(x, y), live ? in((x - pad) / 2, (y - pad) / 2) : 0.0f);
                }
            EXPECT_EQ(transpose_conv_segregated(in, segregate_kernel(delta), pad), ref) << "n=" << n << " pad=" << pad;
        }
}

TEST(Engines, LinearInInputAndKernel) {
    std::mt19937_64 rng(27);
    for (int trial = 0; trial < 40; ++trial) {
        const auto c = random_case(rng, 10, 7, 3);
        const double a = 0.75, b = -1.5;
        const auto i1 = uniform(rng, c.h * c.w), i2 = uniform(rng, c.h * c.w);
        const auto k1 = uniform(rng, c.n * c.n), k2 = uniform(rng, c.n * c.n);
        std::vector<double> imix(i1.size()), kmix(k1.size());
        for (std::size_t i = 0; i < imix.size(); ++i) imix[i] = a * i1[i] + b * i2[i];
        for (std::size_t i = 0; i < kmix.size(); ++i) kmix[i] = a * k1[i] + b * k2[i];

        const auto K1 = Kernel<double>::square(c.n, k1), K2 = Kernel<double>::square(c.n, k2);
        const auto Kmix = Kernel<double>::square(c.n, kmix);
        const auto I1 = to_map<double>(i1, c.h, c.w), I2 = to_map<double>(i2, c.h, c.w);
        const auto Imix = to_map<double>(imix, c.h, c.w);

        for (int engine = 0; engine < 2; ++engine) {
            auto run = [&](const FeatureMap<double>& in, const Kernel<double>& k) {
                return engine == 0 ? transpose_conv_reference(in, k, c.pad)
                                   : transpose_conv_segregated(in, segregate_kernel(k), c.pad);
            };
            const auto in_lhs = run(Imix, K1), in_a = run(I1, K1), in_b = run(I2, K1);
            const auto k_lhs = run(I1, Kmix), k_a = run(I1, K1), k_b = run(I1, K2);
            for (std::size_t i = 0; i < in_lhs.size(); ++i) {
                ASSERT_NEAR(in_lhs.data()[i], a * in_a.data()[i] + b * in_b.data()[i], 1e-12);
                ASSERT_NEAR(k_lhs.data()[i], a * k_a.data()[i] + b * k_b.data()[i], 1e-12);
            }
        }
    }
}

TEST(Layer, SingleChannelReducesToMapOperation) {
    std::mt19937_64 rng(28);
    const auto iv = uniform(rng, 30), kv = uniform(rng, 16);
    const ChannelTensor<float> x(1, 5, 6, std::vector<float>(iv.begin(), iv.end()));
    const KernelBank<float> bank(1, 1, 4, std::vector<float>(kv.begin(), kv.end()));
    for (std::size_t pad = 0; pad <= 3; ++pad) {
        const auto ref_map = transpose_conv_reference(x.map(0), bank.kernel(0, 0), pad);
        const auto seg_map = transpose_conv_segregated(x.map(0), segregate_kernel(bank.kernel(0, 0)), pad);
        EXPECT_EQ(layer_forward(x, bank, pad, Engine::reference).map(0), ref_map);
        EXPECT_EQ(layer_forward(x, bank, pad, Engine::segregated).map(0), seg_map);
    }
}

TEST(Layer, ZeroKernelChannelVanishes) {
    std::mt19937_64 rng(29);
    const auto iv = uniform(rng, 2 * 16), kv = uniform(rng, 9);
    const ChannelTensor<float> x2(2, 4, 4, std::vector<float>(iv.begin(), iv.end()));
    std::vector<float> both(18, 0.0f);
    std::copy(kv.begin(), kv.end(), both.begin());
    // Storage is [c_out][c_in][n*n]: kernel (0, 0) first, kernel (1, 0) zero.
    const KernelBank<float> bank2(2, 1, 3, both);
    const ChannelTensor<float> x1(1, 4, 4, std::vector<float>(iv.begin(), iv.begin() + 16));
    const KernelBank<float> bank1(1, 1, 3, std::vector<float>(kv.begin(), kv.end()));
    ASSERT_EQ(bank2.kernel(0, 0), bank1.kernel(0, 0));
    for (auto engine : {Engine::reference, Engine::segregated})
        EXPECT_EQ(layer_forward(x2, bank2, 1, engine), layer_forward(x1, bank1, 1, engine)) << to_string(engine);
}

TEST(Layer, MatchesPerChannelScatterOracle) {
    std::mt19937_64 rng(30);
    for (int trial = 0; trial < 40; ++trial) {
        const auto c = random_case(rng, 9, 6, 3);
        const auto c_in = pick(rng, 1, 4), c_out = pick(rng, 1, 4);
        const auto iv = uniform(rng, c_in * c.h * c.w);
        const ChannelTensor<double> x(c_in, c.h, c.w, iv);
        const KernelBank<double> bank(c_in, c_out, c.n, uniform(rng, c_in * c_out * c.n * c.n));
        const auto ref = layer_forward(x, bank, c.pad, Engine::reference);
        const auto seg = layer_forward(x, bank, c.pad, Engine::segregated);
        for (std::size_t co = 0; co < c_out; ++co) {
            Grid sum(ref.height(), ref.width());
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                Grid in(c.h, c.w), k(c.n, c.n);
                in.v.assign(x.plane(ci).begin(), x.plane(ci).end());
                const auto kd = bank.kernel_data(ci, co);
                k.v.assign(kd.begin(), kd.end());
                const auto part = scatter_transpose_conv(in, k, c.pad);
                for (std::size_t i = 0; i < sum.v.size(); ++i) sum.v[i] += part.v[i];
            }
            for (std::size_t i = 0; i < sum.v.size(); ++i) {
                ASSERT_NEAR(ref.plane(co)[i], sum.v[i], 1e-12);
                ASSERT_NEAR(seg.plane(co)[i], sum.v[i], 1e-12);
            }
        }
    }
}

TEST(Layer, DcganLayerTwoShape) {
    const auto x = gen_synthetic(1024, 4, 4, 7);
    const auto bank = random_kernel_bank(1024, 512, 4, 7);
    const auto y = layer_forward(x, bank, 2, Engine::segregated);
    EXPECT_EQ(y.channels(), 512u);
    EXPECT_EQ(y.height(), 8u);
    EXPECT_EQ(y.width(), 8u);
}

TEST(Layer, RejectsMismatchedChannels) {
    const ChannelTensor<float> x(3, 4, 4);
    const KernelBank<float> bank(2, 1, 3);
    EXPECT_THROW(layer_forward(x, bank, 0, Engine::reference), DimensionError);
    EXPECT_THROW(layer_forward(x, bank, 0, Engine::segregated), DimensionError);
}

TEST(Layer, DeterministicAcrossThreadCounts) {
    const auto x = gen_synthetic(6, 7, 9, 99);
    const auto bank = random_kernel_bank(6, 5, 5, 99);
    for (auto engine : {Engine::reference, Engine::segregated}) {
        const auto one = layer_forward(x, bank, 3, engine, {1});
        EXPECT_EQ(layer_forward(x, bank, 3, engine, {1}), one);
        EXPECT_EQ(layer_forward(x, bank, 3, engine, {3}), one);
        EXPECT_EQ(layer_forward(x, bank, 3, engine, {8}), one);
    }
}

TEST(Layer, BatchMapsIndependently) {
    std::vector<ChannelTensor<float>> batch{gen_synthetic(2, 5, 5, 1), gen_synthetic(2, 5, 5, 2)};
    const auto bank = random_kernel_bank(2, 3, 4, 5);
    const auto out = layer_forward_batch<float>(batch, bank, 2, Engine::segregated, {2});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], layer_forward(batch[0], bank, 2, Engine::reference));
    EXPECT_EQ(out[1], layer_forward(batch[1], bank, 2, Engine::reference));
}

TEST(Compare, Reflexive) {
    const auto t = gen_synthetic(2, 3, 3, 4);
    const auto r = compare_outputs(t, t, 1e-5, 1e-6);
    EXPECT_TRUE(r.shape_match);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.max_abs_diff, 0.0);
    EXPECT_EQ(r.max_rel_diff, 0.0);
}

TEST(Compare, ShapeMismatchIsFailure) {
    const auto r = compare_outputs(ChannelTensor<float>(1, 2, 2), ChannelTensor<float>(1, 3, 3), 1e-5, 1e-6);
    EXPECT_FALSE(r.shape_match);
    EXPECT_FALSE(r.pass);
}

TEST(Compare, ToleranceBoundaries) {
    const ChannelTensor<double> a(1, 1, 3, {1.0, 1e-7, 100.0});
    const ChannelTensor<double> b(1, 1, 3, {1.0 + 5e-6, 5e-7, 100.0 + 2e-3});
    const auto r = compare_outputs(a, b, 1e-5, 1e-6);
    EXPECT_EQ(r.mismatches, 1u); // only 100 vs 100.002 exceeds 1e-5 relative
    EXPECT_NEAR(r.max_abs_diff, 2e-3, 1e-12);
}
