#pragma once

#include <cstdint>
#include <vector>

#include "seedforge/image.hpp"
#include "seedforge/tensor.hpp"

namespace seedforge::slic {

/// sRGB (D65) to CIELAB. Returns an H x W x 3 tensor of (L, a, b).
Tensor rgb_to_lab(const RgbImage& img);

struct SlicParams {
    std::uint32_t k = 300;           // target cluster count
    double compactness = 10.0;       // m: spatial vs colour weight
    std::uint32_t max_iters = 10;
    double min_segment_ratio = 0.25; // of g^2, below which a segment is absorbed

    /// Throws InvalidArgument on out-of-range fields and KTooLarge when
    /// k exceeds `pixel_count`.
    void validate(std::size_t pixel_count) const;
};

/// Grid interval g = sqrt(G / k).
double grid_interval(std::size_t pixel_count, std::uint32_t k);

/// Row-major H x W grid of cluster ids.
struct LabelGrid {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint32_t> labels;

    std::uint32_t at(std::uint32_t x, std::uint32_t y) const { return labels[std::size_t(y) * width + x]; }
};

struct SuperpixelLabeling {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint32_t> labels;
    std::uint32_t num_segments = 0;

    std::uint32_t at(std::uint32_t x, std::uint32_t y) const { return labels[std::size_t(y) * width + x]; }
};

struct Center {
    double l, a, b;
    double x, y;
};

/// Marks a pixel that has not been assigned to any center yet.
inline constexpr std::uint32_t kUnassigned = 0xFFFFFFFFu;

/// Regular grid seeding followed by a move to the lowest-gradient pixel of
/// the 3x3 neighbourhood. Grid rows/cols are chosen so that their product
/// never exceeds k.
std::vector<Center> init_centers(const Tensor& lab, std::uint32_t k);

/// Squared SLIC distance d_lab^2 + (m/g)^2 d_xy^2 between pixel (x, y) and c.
double distance_sq(const Tensor& lab, std::uint32_t x, std::uint32_t y, const Center& c, double spatial_weight_sq);

/// One assignment step. Candidates for a pixel are the centers whose 2g x 2g
/// window covers it plus its previous center (if any); a pixel with no
/// candidate falls back to a scan over all centers. Ties go to the lowest
/// center index. Returns the number of pixels whose label changed.
std::size_t assign(const Tensor& lab, const std::vector<Center>& centers, double g, double compactness,
                   std::vector<std::uint32_t>& labels);

/// Moves each center to the mean (Lab, xy) of its pixels; empty clusters stay put.
void update_centers(const Tensor& lab, const std::vector<std::uint32_t>& labels, std::vector<Center>& centers);

/// Sum over pixels of D^2(pixel, assigned center), the quantity the
/// assign/update alternation never increases.
double energy(const Tensor& lab, const std::vector<Center>& centers, const std::vector<std::uint32_t>& labels,
              double g, double compactness);

struct ClusterResult {
    LabelGrid raw;
    std::vector<Center> centers;
    /// Energy after each assignment step, measured against the centers used
    /// in that step.
    std::vector<double> energy_trace;
    std::uint32_t iterations = 0;
};

/// The localized k-means loop without connectivity enforcement.
ClusterResult cluster(const RgbImage& img, const SlicParams& p);

/// Absorbs every 4-connected component smaller than ratio * g^2 into its
/// largest 4-neighbour component and renumbers labels in scan order.
SuperpixelLabeling enforce_connectivity(const LabelGrid& raw, double min_segment_ratio, double g);

SuperpixelLabeling segment(const RgbImage& img, const SlicParams& p);

}  // namespace seedforge::slic
