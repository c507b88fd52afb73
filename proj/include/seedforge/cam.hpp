#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seedforge/tensor.hpp"

namespace seedforge::cam {

/// B class activation maps of f_h x f_w, stored class-major, row-major.
struct CamStack {
    std::uint32_t classes = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> maps;
    std::vector<std::uint32_t> class_ids;  // dataset ids, one per map

    std::size_t plane() const noexcept { return std::size_t(height) * width; }
    std::span<float> map(std::uint32_t b) { return std::span(maps).subspan(b * plane(), plane()); }
    std::span<const float> map(std::uint32_t b) const { return std::span(maps).subspan(b * plane(), plane()); }

    /// B x H x W tensor view of the maps (class ids are not stored).
    Tensor to_tensor() const;
    /// Empty `class_ids` means 1..B.
    static CamStack from_tensor(const Tensor& t, std::vector<std::uint32_t> class_ids = {});

    bool operator==(const CamStack&) const = default;
};

/// Square patch-to-patch affinity matrix, row-major.
struct AffinityMap {
    std::uint32_t size = 0;
    std::vector<float> values;

    float at(std::uint32_t i, std::uint32_t j) const { return values[std::size_t(i) * size + j]; }
    static AffinityMap identity(std::uint32_t n);
    static AffinityMap uniform(std::uint32_t n);
};

/// Input side lengths used for multi-scale inference.
struct ScaleSet {
    std::vector<std::uint32_t> scales{256, 512, 768};
    void validate() const;
};

/// Which way the refinement product is taken. The stripped affinity is
/// s x s and the flattened CAM is s x 1, so only A*·m or A*^T·m type-check.
enum class OperandOrder {
    AffinityTimesCam,  // m_hat = A* m    (row i aggregates what patch i attends to)
    CamTimesAffinity,  // m_hat = m^T A*  (column j gathers attention paid to patch j)
};

enum class NormalizeMode { AfterAggregation, PerScale };

/// maps[b] = sum_c w[b, c] * f[c]. f is f_c x f_h x f_w, w is B x f_c.
CamStack compute_cam(const Tensor& features, const Tensor& weights, std::vector<std::uint32_t> class_ids = {});

/// Row-wise softmax(Q K^T / sqrt(D)) with per-row max subtraction.
AffinityMap affinity_from_qk(const Tensor& q, const Tensor& k);

AffinityMap average_affinity(std::span<const AffinityMap> blocks);

/// Streaming form of average_affinity: keeps one running sum so blocks can
/// be produced and dropped one at a time.
class AffinityAverager {
public:
    void add(const AffinityMap& a);
    std::size_t count() const noexcept { return count_; }
    AffinityMap result() const;

private:
    std::uint32_t size_ = 0;
    std::size_t count_ = 0;
    std::vector<double> sum_;
};

/// Drops row 0 and column 0 (the class token).
AffinityMap strip_class_token(const AffinityMap& a);

/// Propagates each class map through the stripped affinity. The plane size
/// f_h * f_w must equal the affinity size.
CamStack refine_cam(const CamStack& cam, const AffinityMap& a_star,
                    OperandOrder order = OperandOrder::AffinityTimesCam);

CamStack clamp_nonnegative(CamStack cam);

/// Per class (M - min) / (max - min); a constant map becomes all zeros.
CamStack normalize_cam(CamStack cam);

/// Bilinear resampling with half-pixel centres (align_corners = false):
/// output pixel o samples source coordinate (o + 0.5) * in / out - 0.5,
/// clamped to [0, in - 1].
CamStack resize_bilinear(const CamStack& cam, std::uint32_t height, std::uint32_t width);

/// Resizes every stack to (height, width), averages them and normalizes.
CamStack multiscale_aggregate(std::span<const CamStack> stacks, std::uint32_t height, std::uint32_t width,
                              NormalizeMode mode = NormalizeMode::AfterAggregation);

/// Network outputs for one input scale.
struct ScaleInput {
    Tensor features;                            // f_c x f_h x f_w
    std::vector<std::pair<Tensor, Tensor>> qk;  // (Q, K) per transformer block
};

struct RefineOptions {
    OperandOrder order = OperandOrder::AffinityTimesCam;
    NormalizeMode normalize = NormalizeMode::AfterAggregation;
    bool clamp_negative = true;
};

/// Rows of `weights` (one per dataset class, id c at row c - 1) for the
/// given class ids.
Tensor select_class_rows(const Tensor& weights, std::span<const std::uint32_t> class_ids);

/// Full seed computation for one image: per scale CAM, block-averaged
/// affinity without the class token, refinement, clamping; then resize to
/// (height, width), average over scales and normalize. `weights` is B x f_c
/// for exactly the classes in `class_ids`.
CamStack refine_multiscale(std::span<const ScaleInput> scales, const Tensor& weights,
                           const std::vector<std::uint32_t>& class_ids, std::uint32_t height, std::uint32_t width,
                           const RefineOptions& options = {});

}  // namespace seedforge::cam
