#include "seedforge/acm.hpp"

#include <cmath>
#include <string>

#include "seedforge/error.hpp"

namespace seedforge::acm {

void AcmParams::validate() const {
    if (!(conflict_rate >= 0.0f && conflict_rate <= 1.0f)) {
        throw Error(ErrorCode::InvalidArgument, "conflict rate must be in [0, 1]");
    }
    if (!(seed_bg_alpha >= 0.0f && seed_bg_alpha <= 1.0f)) {
        throw Error(ErrorCode::InvalidArgument, "seed background alpha must be in [0, 1]");
    }
}

namespace {

void check_seeds(const ClassSeedStack& seeds) {
    if (seeds.classes == 0) throw Error(ErrorCode::ShapeMismatch, "seed stack has no classes");
    if (seeds.class_ids.size() != seeds.classes) {
        throw Error(ErrorCode::ClassMismatch, "class id list does not match the seed stack");
    }
    for (auto id : seeds.class_ids) {
        if (id == kBackgroundLabel || id >= kIgnoreLabel) {
            throw Error(ErrorCode::ClassOutOfRange, "class id " + std::to_string(id) + " outside 1..254");
        }
    }
}

void check_saliency(const GrayImage& s, std::uint32_t w, std::uint32_t h) {
    if (!s.same_size(w, h)) {
        throw Error(ErrorCode::ShapeMismatch, "saliency is " + std::to_string(s.width()) + "x" +
                                                  std::to_string(s.height()) + ", seeds are " + std::to_string(w) +
                                                  "x" + std::to_string(h));
    }
}

}  // namespace

PseudoLabelMap initial_pseudo_label(const ClassSeedStack& seeds, const AcmParams& p, const GrayImage* saliency) {
    p.validate();
    check_seeds(seeds);
    if (saliency) check_saliency(*saliency, seeds.width, seeds.height);
    PseudoLabelMap out(seeds.width, seeds.height);
    const std::size_t plane = seeds.plane();
    for (std::size_t i = 0; i < plane; ++i) {
        std::uint32_t best = 0;
        float best_v = seeds.maps[i];
        for (std::uint32_t b = 1; b < seeds.classes; ++b) {
            const float v = seeds.maps[b * plane + i];
            if (v > best_v) {
                best_v = v;
                best = b;
            }
        }
        // A pixel under the threshold is background whatever the saliency says.
        out.labels[i] = best_v >= p.seed_bg_alpha ? static_cast<std::uint8_t>(seeds.class_ids[best])
                                                  : kBackgroundLabel;
    }
    return out;
}

std::vector<std::uint32_t> conflict_count(const ClassSeedStack& seeds, float conflict_rate) {
    const std::size_t plane = seeds.plane();
    std::vector<float> mx(seeds.maps.begin(), seeds.maps.begin() + std::ptrdiff_t(plane));
    for (std::uint32_t b = 1; b < seeds.classes; ++b) {
        const auto m = seeds.map(b);
        for (std::size_t i = 0; i < plane; ++i) mx[i] = std::fmax(mx[i], m[i]);
    }
    for (auto& v : mx) v = v * conflict_rate;  // C_m
    std::vector<std::uint32_t> count(plane, 0);
    for (std::uint32_t b = 0; b < seeds.classes; ++b) {
        const auto m = seeds.map(b);
        for (std::size_t i = 0; i < plane; ++i) count[i] += m[i] > mx[i] ? 1u : 0u;
    }
    return count;
}

std::vector<bool> saliency_conflict(const GrayImage& saliency, const PseudoLabelMap& labels, std::uint8_t t_bg) {
    check_saliency(saliency, labels.width, labels.height);
    const auto s = saliency.pixels();
    std::vector<bool> out(labels.labels.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = s[i] >= t_bg && labels.labels[i] == kBackgroundLabel;
    }
    return out;
}

PseudoLabelMap resolve_conflicts(PseudoLabelMap labels, const ClassSeedStack& seeds, const GrayImage* saliency,
                                 const AcmParams& p, ConflictField* field) {
    p.validate();
    check_seeds(seeds);
    if (labels.width != seeds.width || labels.height != seeds.height) {
        throw Error(ErrorCode::ShapeMismatch, "label map and seeds differ in size");
    }
    if (saliency) check_saliency(*saliency, seeds.width, seeds.height);

    auto e_fir = conflict_count(seeds, p.conflict_rate);
    for (std::size_t i = 0; i < e_fir.size(); ++i) {
        if (e_fir[i] > 1) labels.labels[i] = kIgnoreLabel;
    }
    std::vector<bool> e_sec;
    if (saliency) {
        e_sec = saliency_conflict(*saliency, labels, p.bg_threshold);
        for (std::size_t i = 0; i < e_sec.size(); ++i) {
            if (e_sec[i]) labels.labels[i] = kIgnoreLabel;
        }
    } else {
        e_sec.assign(e_fir.size(), false);
    }
    if (field) *field = {labels.width, labels.height, std::move(e_fir), std::move(e_sec)};
    return labels;
}

PseudoLabelMap apply_acm(const ClassSeedStack& seeds, const GrayImage* saliency, const AcmParams& p,
                         ConflictField* field) {
    return resolve_conflicts(initial_pseudo_label(seeds, p, saliency), seeds, saliency, p, field);
}

}  // namespace seedforge::acm
