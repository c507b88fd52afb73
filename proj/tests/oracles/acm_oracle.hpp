#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "seedforge/acm.hpp"

namespace seedforge::oracle {

// One pixel at a time, straight from the rule definitions.
inline PseudoLabelMap acm_scalar(const acm::ClassSeedStack& seeds, const GrayImage* sal, const acm::AcmParams& p) {
    const std::uint32_t w = seeds.width, h = seeds.height;
    PseudoLabelMap out(w, h);
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            std::uint32_t best = 0;
            for (std::uint32_t b = 1; b < seeds.classes; ++b) {
                if (seeds.map(b)[i] > seeds.map(best)[i]) best = b;
            }
            const float top = seeds.map(best)[i];
            std::uint8_t label = top >= p.seed_bg_alpha ? std::uint8_t(seeds.class_ids[best]) : 0;

            const float cm = top * p.conflict_rate;
            std::uint32_t e_fir = 0;
            for (std::uint32_t b = 0; b < seeds.classes; ++b) e_fir += seeds.map(b)[i] > cm ? 1 : 0;
            if (e_fir > 1) label = kIgnoreLabel;

            if (sal && sal->at(x, y) >= p.bg_threshold && label == kBackgroundLabel) label = kIgnoreLabel;
            out.labels[i] = label;
        }
    }
    return out;
}

struct AcmCase {
    acm::ClassSeedStack seeds;
    GrayImage saliency;
};

// Seeds on a coarse grid of values so ties and exact threshold hits happen.
inline AcmCase random_acm_case(std::mt19937_64& rng, std::uint32_t max_side = 16, std::uint32_t max_classes = 5) {
    AcmCase c;
    auto& s = c.seeds;
    s.width = 1 + rng() % max_side;
    s.height = 1 + rng() % max_side;
    s.classes = 1 + rng() % max_classes;
    const int levels = (rng() % 2) ? 10 : 1000;
    s.maps.resize(std::size_t(s.classes) * s.width * s.height);
    for (auto& v : s.maps) v = float(rng() % (levels + 1)) / float(levels);
    std::vector<std::uint32_t> pool;
    for (std::uint32_t id = 1; id < 255; ++id) pool.push_back(id);
    std::shuffle(pool.begin(), pool.end(), rng);
    s.class_ids.assign(pool.begin(), pool.begin() + s.classes);
    c.saliency = GrayImage(s.width, s.height);
    for (auto& v : c.saliency.pixels()) v = std::uint8_t(rng() % 256);
    return c;
}

}  // namespace seedforge::oracle
