#include "seedforge/mecp.hpp"

#include <cmath>

#include "seedforge/error.hpp"
#include "seedforge/random.hpp"

namespace seedforge::mecp {

void EstimationSchedule::validate() const {
    if (ks.empty()) throw Error(ErrorCode::InvalidArgument, "schedule must list at least one k");
    for (auto k : ks) {
        if (k < 1) throw Error(ErrorCode::InvalidArgument, "schedule k values must be >= 1");
    }
    if (!(hide_prob >= 0.0 && hide_prob <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "hide probability must be in [0, 1]");
    }
}

std::uint32_t k_for_epoch(const EstimationSchedule& s, std::uint32_t epoch) {
    s.validate();
    return s.ks[epoch % s.ks.size()];
}

HideMask generate_hide_mask(const slic::SuperpixelLabeling& lab, double p_r, std::uint64_t seed) {
    if (!(p_r >= 0.0 && p_r <= 1.0)) throw Error(ErrorCode::InvalidArgument, "hide probability must be in [0, 1]");
    const Philox4x32 rng(seed);
    std::vector<bool> segment_hidden(lab.num_segments);
    HideMask m{lab.width, lab.height, std::vector<bool>(lab.labels.size()), {}};
    for (std::uint32_t id = 0; id < lab.num_segments; ++id) {
        segment_hidden[id] = rng.uniform(id) < p_r;
        if (segment_hidden[id]) m.hidden_patch_ids.push_back(id);
    }
    for (std::size_t i = 0; i < lab.labels.size(); ++i) m.hidden[i] = segment_hidden[lab.labels[i]];
    return m;
}

ComplementaryPair apply_complementary(const RgbImage& img, const HideMask& m) {
    if (!img.same_size(m.width, m.height)) {
        throw Error(ErrorCode::DimMismatch, "mask and image sizes differ");
    }
    ComplementaryPair pair{RgbImage(img.width(), img.height()), RgbImage(img.width(), img.height())};
    const auto src = img.pixels();
    auto cp = pair.cp.pixels();
    auto cp_bar = pair.cp_bar.pixels();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        auto dst = m.hidden[i] ? cp_bar : cp;
        for (int c = 0; c < 3; ++c) dst[3 * i + c] = src[3 * i + c];
    }
    return pair;
}

std::uint64_t epoch_seed(const EstimationSchedule& s, std::uint64_t global_seed, std::uint64_t image_id,
                         std::uint32_t epoch) {
    s.validate();
    return derive_seed(global_seed, image_id, epoch % s.ks.size());
}

ComplementaryPair mecp_for_epoch(const RgbImage& img, const EstimationSchedule& s, std::uint32_t epoch,
                                 std::uint64_t global_seed, std::uint64_t image_id,
                                 const slic::SlicParams& slic_base) {
    slic::SlicParams p = slic_base;
    p.k = k_for_epoch(s, epoch);
    const auto labeling = slic::segment(img, p);
    const auto mask = generate_hide_mask(labeling, s.hide_prob, epoch_seed(s, global_seed, image_id, epoch));
    return apply_complementary(img, mask);
}

}  // namespace seedforge::mecp
