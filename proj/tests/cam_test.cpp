#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles/cam_oracle.hpp"
#include "seedforge/cam.hpp"
#include "seedforge/error.hpp"

using namespace seedforge;
using cam::AffinityMap;
using cam::CamStack;

namespace {

Tensor random_tensor(std::mt19937_64& rng, std::vector<std::uint32_t> shape, float scale = 1.0f) {
    Tensor t(shape);
    std::normal_distribution<float> n(0.0f, scale);
    for (auto& v : t.data()) v = n(rng);
    return t;
}

CamStack stack(std::uint32_t h, std::uint32_t w, std::vector<float> maps) {
    CamStack c;
    c.classes = static_cast<std::uint32_t>(maps.size() / (std::size_t(h) * w));
    c.height = h;
    c.width = w;
    c.maps = std::move(maps);
    for (std::uint32_t b = 0; b < c.classes; ++b) c.class_ids.push_back(b + 1);
    return c;
}

template <typename Fn>
void expect_code(Fn&& fn, ErrorCode code) {
    try {
        fn();
        FAIL() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

}  // namespace

TEST(ComputeCam, SelectorWeights) {
    std::mt19937_64 rng(1);
    const auto f = random_tensor(rng, {3, 4, 5});
    Tensor w({3, 3});
    w[0 * 3 + 2] = 1.0f;
    w[1 * 3 + 0] = 1.0f;
    w[2 * 3 + 1] = 1.0f;
    const auto c = cam::compute_cam(f, w);
    const std::size_t plane = 20;
    for (std::size_t i = 0; i < plane; ++i) {
        EXPECT_EQ(c.map(0)[i], f[2 * plane + i]);
        EXPECT_EQ(c.map(1)[i], f[0 * plane + i]);
        EXPECT_EQ(c.map(2)[i], f[1 * plane + i]);
    }
    EXPECT_EQ(c.class_ids, (std::vector<std::uint32_t>{1, 2, 3}));
}

TEST(ComputeCam, AllOnesFeatures) {
    Tensor f({3, 2, 2});
    for (auto& v : f.data()) v = 1.0f;
    const auto c = cam::compute_cam(f, Tensor({1, 3}, {1, 2, 3}), {7});
    for (float v : c.maps) EXPECT_EQ(v, 6.0f);
    EXPECT_EQ(c.class_ids, (std::vector<std::uint32_t>{7}));
}

TEST(ComputeCam, MatchesNaiveLoopBitForBit) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        const std::uint32_t fc = 1 + rng() % 8, fh = 1 + rng() % 8, fw = 1 + rng() % 8, nb = 1 + rng() % 4;
        const auto f = random_tensor(rng, {fc, fh, fw});
        const auto w = random_tensor(rng, {nb, fc});
        EXPECT_EQ(cam::compute_cam(f, w).maps, oracle::cam_naive(f, w));
    }
}

TEST(ComputeCam, LinearInWeights) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const auto f = random_tensor(rng, {6, 5, 5});
        const auto w1 = random_tensor(rng, {2, 6}), w2 = random_tensor(rng, {2, 6});
        const float alpha = 0.7f, beta = -1.3f;
        Tensor mix({2, 6});
        for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * w1[i] + beta * w2[i];
        const auto a = cam::compute_cam(f, w1), b = cam::compute_cam(f, w2), m = cam::compute_cam(f, mix);
        for (std::size_t i = 0; i < m.maps.size(); ++i) {
            const double expect = double(alpha) * a.maps[i] + double(beta) * b.maps[i];
            const double scale = std::abs(alpha * a.maps[i]) + std::abs(beta * b.maps[i]) + 1e-6;
            EXPECT_LE(std::abs(m.maps[i] - expect) / scale, 1e-5);
        }
    }
}

TEST(ComputeCam, ChannelMismatch) {
    expect_code([] { cam::compute_cam(Tensor({3, 2, 2}), Tensor({1, 4})); }, ErrorCode::DimMismatch);
}

TEST(Affinity, ZeroQueriesAreUniform) {
    const auto a = cam::affinity_from_qk(Tensor({5, 3}), Tensor({5, 3}));
    for (float v : a.values) EXPECT_FLOAT_EQ(v, 0.2f);
}

TEST(Affinity, HandEvaluatedTwoByTwo) {
    // D = 1, Q = [[1],[0]], K = [[0],[ln 3]] gives logits [[0, ln 3], [0, 0]].
    const float ln3 = std::log(3.0f);
    const auto a = cam::affinity_from_qk(Tensor({2, 1}, {1, 0}), Tensor({2, 1}, {0, ln3}));
    EXPECT_NEAR(a.at(0, 0), 0.25f, 1e-6);
    EXPECT_NEAR(a.at(0, 1), 0.75f, 1e-6);
    EXPECT_NEAR(a.at(1, 0), 0.5f, 1e-6);
    EXPECT_NEAR(a.at(1, 1), 0.5f, 1e-6);
}

TEST(Affinity, MatchesSoftmaxOracle) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 100; ++t) {
        const std::uint32_t n = 2 + rng() % 8, d = 1 + rng() % 10;
        const auto q = random_tensor(rng, {n, d}, 2.0f), k = random_tensor(rng, {n, d}, 2.0f);
        const auto a = cam::affinity_from_qk(q, k);
        const auto ref = oracle::softmax_naive(q, k);
        for (std::uint32_t i = 0; i < n; ++i) {
            double row = 0;
            for (std::uint32_t j = 0; j < n; ++j) {
                EXPECT_NEAR(a.at(i, j), ref[i * n + j], 1e-6);
                EXPECT_GE(a.at(i, j), 0.0f);
                row += a.at(i, j);
            }
            EXPECT_NEAR(row, 1.0, 1e-5);
        }
    }
}

TEST(Affinity, LargeLogitsStayFinite) {
    const auto a = cam::affinity_from_qk(Tensor({2, 1}, {100, -100}), Tensor({2, 1}, {100, -100}));
    EXPECT_EQ(a.at(0, 0), 1.0f);
    EXPECT_EQ(a.at(0, 1), 0.0f);
    EXPECT_EQ(a.at(1, 1), 1.0f);
}

TEST(Affinity, ShapeErrors) {
    expect_code([] { cam::affinity_from_qk(Tensor({3, 2}), Tensor({4, 2})); }, ErrorCode::DimMismatch);
    expect_code([] { cam::affinity_from_qk(Tensor({3, 2}), Tensor({3, 3})); }, ErrorCode::DimMismatch);
}

TEST(AverageAffinity, Cases) {
    const AffinityMap eye{2, {1, 0, 0, 1}}, swap{2, {0, 1, 1, 0}};
    EXPECT_EQ(cam::average_affinity(std::vector{eye}).values, eye.values);
    EXPECT_EQ(cam::average_affinity(std::vector{swap, swap}).values, swap.values);
    EXPECT_EQ(cam::average_affinity(std::vector{eye, swap}).values, (std::vector<float>{0.5f, 0.5f, 0.5f, 0.5f}));
    expect_code([] { cam::average_affinity(std::vector<AffinityMap>{}); }, ErrorCode::EmptyList);
    expect_code([&] { cam::average_affinity(std::vector{eye, AffinityMap::identity(3)}); }, ErrorCode::SizeMismatch);
}

TEST(StripClassToken, Cases) {
    EXPECT_EQ(cam::strip_class_token(AffinityMap{2, {1, 2, 3, 4}}).values, (std::vector<float>{4}));
    const auto u = cam::strip_class_token(AffinityMap::uniform(5));
    ASSERT_EQ(u.size, 4u);
    for (float v : u.values) EXPECT_FLOAT_EQ(v, 0.2f);
    AffinityMap distinct{5, {}};
    for (int i = 0; i < 25; ++i) distinct.values.push_back(float(i));
    const auto d = cam::strip_class_token(distinct);
    for (std::uint32_t i = 0; i < 4; ++i) {
        for (std::uint32_t j = 0; j < 4; ++j) EXPECT_EQ(d.at(i, j), float((i + 1) * 5 + j + 1));
    }
    expect_code([] { cam::strip_class_token(AffinityMap{1, {1}}); }, ErrorCode::TooSmall);
}

TEST(Refine, IdentityAndUniform) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const std::uint32_t h = 1 + rng() % 6, w = 1 + rng() % 6;
        const auto c = cam::compute_cam(random_tensor(rng, {3, h, w}), random_tensor(rng, {2, 3}));
        EXPECT_EQ(cam::refine_cam(c, AffinityMap::identity(h * w)).maps, c.maps);
        const auto u = cam::refine_cam(c, AffinityMap::uniform(h * w));
        for (std::uint32_t b = 0; b < 2; ++b) {
            double mean = 0;
            for (float v : c.map(b)) mean += v;
            mean /= double(h * w);
            for (float v : u.map(b)) EXPECT_NEAR(v, mean, 1e-6);
        }
    }
}

TEST(Refine, HandChosenDoublyStochastic) {
    const AffinityMap a{4, {0.1f, 0.2f, 0.3f, 0.4f, 0.4f, 0.1f, 0.2f, 0.3f, 0.3f, 0.4f, 0.1f, 0.2f,
                            0.2f, 0.3f, 0.4f, 0.1f}};
    const auto out = cam::refine_cam(stack(2, 2, {1, 0, 0, 0}), a);
    EXPECT_EQ(out.maps, (std::vector<float>{0.1f, 0.4f, 0.3f, 0.2f}));
    const auto t = cam::refine_cam(stack(2, 2, {1, 0, 0, 0}), a, cam::OperandOrder::CamTimesAffinity);
    EXPECT_EQ(t.maps, (std::vector<float>{0.1f, 0.2f, 0.3f, 0.4f}));
}

TEST(Refine, MatchesNaiveProduct) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
        const std::uint32_t h = 1 + rng() % 8, w = 1 + rng() % 8, s = h * w;
        const auto c = cam::compute_cam(random_tensor(rng, {2, h, w}), random_tensor(rng, {3, 2}));
        const auto a = cam::affinity_from_qk(random_tensor(rng, {s, 4}), random_tensor(rng, {s, 4}));
        for (bool transpose : {false, true}) {
            const auto out = cam::refine_cam(
                c, a, transpose ? cam::OperandOrder::CamTimesAffinity : cam::OperandOrder::AffinityTimesCam);
            const auto ref = oracle::refine_naive(c, a, transpose);
            for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out.maps[i], ref[i], 1e-6);
        }
    }
}

TEST(Refine, ShapeMismatch) {
    expect_code([] { cam::refine_cam(stack(2, 2, {1, 2, 3, 4}), AffinityMap::identity(5)); },
                ErrorCode::ShapeMismatch);
}

TEST(Normalize, Cases) {
    EXPECT_EQ(cam::normalize_cam(stack(1, 4, {0, 1, 2, 3})).maps, (std::vector<float>{0, 1.0f / 3, 2.0f / 3, 1}));
    EXPECT_EQ(cam::normalize_cam(stack(1, 3, {5, 5, 5})).maps, (std::vector<float>{0, 0, 0}));
    EXPECT_EQ(cam::normalize_cam(stack(1, 3, {-2, 0, 2})).maps, (std::vector<float>{0, 0.5f, 1}));
    EXPECT_EQ(cam::clamp_nonnegative(stack(1, 3, {-2, 0, 2})).maps, (std::vector<float>{0, 0, 2}));
}

TEST(Normalize, RangeAndArgmaxPreserved) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        const auto c = cam::compute_cam(random_tensor(rng, {3, 6, 7}), random_tensor(rng, {2, 3}));
        const auto n = cam::normalize_cam(c);
        for (std::uint32_t b = 0; b < 2; ++b) {
            const auto in = c.map(b), out = n.map(b);
            const auto arg = std::max_element(in.begin(), in.end()) - in.begin();
            EXPECT_EQ(out[arg], 1.0f);
            for (float v : out) {
                EXPECT_GE(v, 0.0f);
                EXPECT_LE(v, 1.0f);
            }
        }
    }
}

TEST(Resize, HalfPixelBilinear) {
    const auto up = cam::resize_bilinear(stack(2, 2, {0, 1, 1, 0}), 4, 4);
    // Source coordinates 0, 0.25, 0.75, 1 per axis; value x + y - 2xy.
    const std::vector<float> expect{0,     0.25f,  0.75f,  1,     0.25f, 0.375f, 0.625f, 0.75f,
                                    0.75f, 0.625f, 0.375f, 0.25f, 1,     0.75f,  0.25f,  0};
    EXPECT_EQ(up.maps, expect);
    const float centre = (up.maps[5] + up.maps[6] + up.maps[9] + up.maps[10]) / 4;
    EXPECT_EQ(centre, 0.5f);
    EXPECT_EQ(cam::resize_bilinear(stack(2, 2, {0, 1, 1, 0}), 2, 2).maps, (std::vector<float>{0, 1, 1, 0}));
}

TEST(Multiscale, Aggregation) {
    const auto a = stack(2, 2, {0, 1, 1, 0});
    std::vector<CamStack> one{stack(2, 2, {1, 3, 3, 5})};
    EXPECT_EQ(cam::multiscale_aggregate(one, 2, 2).maps, (std::vector<float>{0, 0.5f, 0.5f, 1}));
    std::vector<CamStack> twice{a, a};
    EXPECT_EQ(cam::multiscale_aggregate(twice, 4, 4).maps, cam::multiscale_aggregate(std::vector{a}, 4, 4).maps);
    auto other = a;
    other.class_ids = {9};
    expect_code([&] { cam::multiscale_aggregate(std::vector{a, other}, 2, 2); }, ErrorCode::ClassMismatch);
}

TEST(Multiscale, NormalizeModes) {
    // Scales with very different magnitudes: per-scale normalization weighs
    // them equally, aggregation-first lets the large one dominate.
    const auto small = stack(1, 2, {0, 1}), large = stack(1, 2, {100, 0});
    const std::vector<CamStack> v{small, large};
    EXPECT_EQ(cam::multiscale_aggregate(v, 1, 2).maps, (std::vector<float>{1, 0}));
    EXPECT_EQ(cam::multiscale_aggregate(v, 1, 2, cam::NormalizeMode::PerScale).maps, (std::vector<float>{0, 0}));
}

TEST(SelectClassRows, PicksRowsByClassId) {
    const Tensor w({3, 2}, {1, 2, 3, 4, 5, 6});
    const std::vector<std::uint32_t> ids{3, 1};
    const auto sel = cam::select_class_rows(w, ids);
    EXPECT_EQ(std::vector<float>(sel.data().begin(), sel.data().end()), (std::vector<float>{5, 6, 1, 2}));
}
