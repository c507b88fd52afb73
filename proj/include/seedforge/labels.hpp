#pragma once

#include <cstdint>
#include <vector>

#include "seedforge/image.hpp"

namespace seedforge {

inline constexpr std::uint8_t kIgnoreLabel = 255;
inline constexpr std::uint8_t kBackgroundLabel = 0;

/// Per-pixel class id: 0 background, dataset class ids, 255 ignore.
struct PseudoLabelMap {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> labels;

    PseudoLabelMap() = default;
    PseudoLabelMap(std::uint32_t w, std::uint32_t h, std::uint8_t fill = kBackgroundLabel)
        : width(w), height(h), labels(std::size_t(w) * h, fill) {}

    std::uint8_t& at(std::uint32_t x, std::uint32_t y) { return labels[std::size_t(y) * width + x]; }
    std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return labels[std::size_t(y) * width + x]; }

    GrayImage to_image() const { return GrayImage(width, height, labels); }
    static PseudoLabelMap from_image(const GrayImage& img) {
        PseudoLabelMap m;
        m.width = img.width();
        m.height = img.height();
        m.labels.assign(img.pixels().begin(), img.pixels().end());
        return m;
    }

    bool operator==(const PseudoLabelMap&) const = default;
};

}  // namespace seedforge
