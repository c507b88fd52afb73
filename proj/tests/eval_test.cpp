#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "seedforge/error.hpp"
#include "seedforge/eval.hpp"

using namespace seedforge;
using eval::ConfusionMatrix;
using eval::IgnoredPrediction;

namespace {

PseudoLabelMap labels(std::uint32_t w, std::uint32_t h, std::vector<std::uint8_t> v) {
    PseudoLabelMap m(w, h);
    m.labels = std::move(v);
    return m;
}

PseudoLabelMap random_labels(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h, std::uint32_t classes) {
    PseudoLabelMap m(w, h);
    for (auto& v : m.labels) v = rng() % 8 == 0 ? kIgnoreLabel : std::uint8_t(rng() % classes);
    return m;
}

}  // namespace

TEST(Confusion, Diagonal) {
    ConfusionMatrix cm(3);
    const auto l = labels(3, 1, {0, 1, 2});
    cm.accumulate(l, l);
    for (std::uint32_t g = 0; g < 3; ++g) {
        for (std::uint32_t p = 0; p < 3; ++p) EXPECT_EQ(cm.at(g, p), g == p ? 1u : 0u);
    }
    const auto r = eval::miou(cm);
    EXPECT_EQ(r.mean, 1.0);
    for (double v : r.per_class) EXPECT_EQ(v, 1.0);
}

TEST(Confusion, IgnoredGroundTruth) {
    ConfusionMatrix cm(2);
    cm.accumulate(labels(2, 1, {0, 1}), labels(2, 1, {255, 255}));
    EXPECT_EQ(cm.total(), 0u);
    const auto r = eval::miou(cm);
    EXPECT_TRUE(std::isnan(r.mean));
    EXPECT_TRUE(std::isnan(r.per_class[0]));
}

TEST(Confusion, HandExample) {
    ConfusionMatrix cm(2);
    cm.accumulate(labels(2, 2, {0, 1, 1, 1}), labels(2, 2, {0, 0, 1, 1}));
    EXPECT_EQ(cm.at(0, 0), 1u);
    EXPECT_EQ(cm.at(0, 1), 1u);
    EXPECT_EQ(cm.at(1, 0), 0u);
    EXPECT_EQ(cm.at(1, 1), 2u);
    const auto r = eval::miou(cm);
    EXPECT_NEAR(r.per_class[0], 1.0 / 2.0, 1e-12);
    EXPECT_NEAR(r.per_class[1], 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.mean, 7.0 / 12.0, 1e-12);
}

TEST(Confusion, IgnoredPredictionModes) {
    const auto pred = labels(3, 1, {255, 1, 1});
    const auto gt = labels(3, 1, {0, 1, 1});
    ConfusionMatrix skip(2), strict(2);
    skip.accumulate(pred, gt, IgnoredPrediction::Skip);
    strict.accumulate(pred, gt, IgnoredPrediction::CountAsMiss);
    EXPECT_EQ(skip.total(), 2u);
    EXPECT_EQ(eval::miou(skip).mean, 1.0);  // class 0 never scored
    EXPECT_EQ(strict.missed(0), 1u);
    const auto r = eval::miou(strict);
    EXPECT_EQ(r.per_class[0], 0.0);
    EXPECT_EQ(r.per_class[1], 1.0);
    EXPECT_EQ(r.mean, 0.5);
}

TEST(Confusion, Errors) {
    ConfusionMatrix cm(2);
    try {
        cm.accumulate(labels(2, 1, {0, 0}), labels(1, 2, {0, 0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
    }
    try {
        cm.accumulate(labels(2, 1, {0, 2}), labels(2, 1, {0, 0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ClassOutOfRange);
    }
    // A failed call leaves the matrix untouched.
    EXPECT_EQ(cm.total(), 0u);
}

TEST(Confusion, PermutationInvariantAndAdditive) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        const std::uint32_t n = 1 + rng() % 5;
        const auto p1 = random_labels(rng, 7, 5, n), g1 = random_labels(rng, 7, 5, n);
        const auto p2 = random_labels(rng, 3, 4, n), g2 = random_labels(rng, 3, 4, n);
        ConfusionMatrix a(n), b(n), both(n);
        a.accumulate(p1, g1);
        b.accumulate(p2, g2);
        // Concatenate as one 1-row image.
        PseudoLabelMap pc(35 + 12, 1), gc(35 + 12, 1);
        std::copy(p1.labels.begin(), p1.labels.end(), pc.labels.begin());
        std::copy(p2.labels.begin(), p2.labels.end(), pc.labels.begin() + 35);
        std::copy(g1.labels.begin(), g1.labels.end(), gc.labels.begin());
        std::copy(g2.labels.begin(), g2.labels.end(), gc.labels.begin() + 35);
        std::vector<std::size_t> perm(pc.labels.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        PseudoLabelMap ps(pc.width, 1), gs(gc.width, 1);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            ps.labels[i] = pc.labels[perm[i]];
            gs.labels[i] = gc.labels[perm[i]];
        }
        both.accumulate(ps, gs);
        a += b;
        EXPECT_EQ(a, both);
        const auto r = eval::miou(both);
        for (double v : r.per_class) {
            if (!std::isnan(v)) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
    }
}
