#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seedforge/cam.hpp"
#include "seedforge/image.hpp"
#include "seedforge/labels.hpp"

namespace seedforge::acm {

/// Normalized per-class seeds (values in [0, 1]).
using ClassSeedStack = cam::CamStack;

struct AcmParams {
    float conflict_rate = 0.9f;   // C_r
    std::uint8_t bg_threshold = 128;  // T_bg on the saliency map
    float seed_bg_alpha = 0.3f;   // seeds below this are background

    void validate() const;
};

struct ConflictField {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint32_t> e_fir;  // classes above C_r * max, per pixel
    std::vector<bool> e_sec;           // saliency says object, label says background
};

/// argmax over classes, thresholded at seed_bg_alpha. Low saliency only ever
/// confirms background; it never overrides a seed above the threshold.
PseudoLabelMap initial_pseudo_label(const ClassSeedStack& seeds, const AcmParams& p,
                                    const GrayImage* saliency = nullptr);

/// Per pixel: #{b : seed_b > C_r * max_b seed_b}, strict.
std::vector<std::uint32_t> conflict_count(const ClassSeedStack& seeds, float conflict_rate);

/// (S >= T_bg) and (label == 0).
std::vector<bool> saliency_conflict(const GrayImage& saliency, const PseudoLabelMap& labels, std::uint8_t t_bg);

/// Both conflict rules applied to an existing label map: pixels with
/// e_fir > 1 become 255, then, on that result, pixels with e_sec become 255.
/// Without saliency the second rule is skipped. Labels are never changed to
/// anything but 255.
PseudoLabelMap resolve_conflicts(PseudoLabelMap labels, const ClassSeedStack& seeds, const GrayImage* saliency,
                                 const AcmParams& p, ConflictField* field = nullptr);

PseudoLabelMap apply_acm(const ClassSeedStack& seeds, const GrayImage* saliency, const AcmParams& p,
                         ConflictField* field = nullptr);

inline PseudoLabelMap apply_acm(const ClassSeedStack& seeds, const std::optional<GrayImage>& saliency,
                                const AcmParams& p) {
    return apply_acm(seeds, saliency ? &*saliency : nullptr, p);
}

}  // namespace seedforge::acm
