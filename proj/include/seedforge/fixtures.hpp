#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace seedforge::fixtures {

/// Synthetic dataset description. Blob edges are aligned to the largest
/// stride so every feature grid sees whole cells.
struct FixtureSpec {
    std::uint32_t count = 4;
    std::uint32_t width = 64;
    std::uint32_t height = 64;
    std::uint32_t num_classes = 2;         // foreground classes, ids 1..num_classes
    double noise = 0.0;                    // 0 = noise-free
    bool overlap = false;                  // neighbouring blobs share a strip
    std::vector<std::uint32_t> strides{4, 2, 1};  // image pixels per feature cell, one scale each
    std::uint32_t blocks = 2;              // transformer blocks (Q/K pairs) per scale
    std::uint32_t extra_channels = 2;      // noise-only feature channels
    std::uint32_t saliency_dilation = 2;

    void validate() const;
};

struct Blob {
    std::uint32_t class_id;
    std::uint32_t x0, y0, x1, y1;  // half-open pixel rectangle
};

/// Writes images/, gt/, saliency/, net/<name>/, weights.tns and
/// dataset.json under `dir`. Output depends only on (seed, spec).
void generate_fixtures(std::uint64_t seed, const FixtureSpec& spec, const std::filesystem::path& dir);

/// Blob layout for image `index`, as generate_fixtures draws it.
std::vector<Blob> blob_layout(std::uint64_t seed, const FixtureSpec& spec, std::uint32_t index);

}  // namespace seedforge::fixtures
