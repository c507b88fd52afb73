#pragma once

#include <cstdint>
#include <vector>

#include "seedforge/image.hpp"
#include "seedforge/slic.hpp"

namespace seedforge::mecp {

/// Per-epoch superpixel counts and the per-patch hide probability.
struct EstimationSchedule {
    std::vector<std::uint32_t> ks{200, 250, 300, 350, 400};
    double hide_prob = 0.5;

    void validate() const;
};

struct HideMask {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<bool> hidden;                    // row-major H x W
    std::vector<std::uint32_t> hidden_patch_ids; // ascending

    bool at(std::uint32_t x, std::uint32_t y) const { return hidden[std::size_t(y) * width + x]; }
};

/// cp keeps the visible patches, cp_bar the hidden ones; cp + cp_bar == image.
struct ComplementaryPair {
    RgbImage cp;
    RgbImage cp_bar;
};

std::uint32_t k_for_epoch(const EstimationSchedule& s, std::uint32_t epoch);

/// Hides each segment independently with probability p_r. Segment i is
/// hidden iff the i-th Philox uniform under `seed` is below p_r.
HideMask generate_hide_mask(const slic::SuperpixelLabeling& lab, double p_r, std::uint64_t seed);

ComplementaryPair apply_complementary(const RgbImage& img, const HideMask& m);

/// Seed used for the mask of (image, epoch). Epochs that share a schedule
/// slot share a seed, so the pair for epoch e and e + |ks| is identical.
std::uint64_t epoch_seed(const EstimationSchedule& s, std::uint64_t global_seed, std::uint64_t image_id,
                         std::uint32_t epoch);

/// k_for_epoch -> SLIC -> hide mask -> complementary split. `slic_base`
/// supplies compactness, iteration cap and merge ratio; its k is replaced.
ComplementaryPair mecp_for_epoch(const RgbImage& img, const EstimationSchedule& s, std::uint32_t epoch,
                                 std::uint64_t global_seed, std::uint64_t image_id = 0,
                                 const slic::SlicParams& slic_base = {});

}  // namespace seedforge::mecp
