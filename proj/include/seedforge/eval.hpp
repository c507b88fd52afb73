#pragma once

#include <cstdint>
#include <vector>

#include "seedforge/labels.hpp"

namespace seedforge::eval {

enum class IgnoredPrediction {
    Skip,         // pred == 255 pixels are left out of scoring
    CountAsMiss,  // pred == 255 counts against the ground-truth class
};

/// C x C pixel counts, rows = ground truth, cols = prediction, background
/// included as class 0.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::uint32_t num_classes);

    std::uint32_t num_classes() const noexcept { return n_; }
    std::uint64_t at(std::uint32_t gt, std::uint32_t pred) const { return counts_[std::size_t(gt) * n_ + pred]; }
    /// Ground-truth pixels of class c predicted as 255 (CountAsMiss only).
    std::uint64_t missed(std::uint32_t gt) const { return missed_[gt]; }
    std::uint64_t total() const noexcept;

    void accumulate(const PseudoLabelMap& pred, const PseudoLabelMap& gt,
                    IgnoredPrediction mode = IgnoredPrediction::Skip);

    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::uint32_t n_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> missed_;
};

struct MiouResult {
    std::vector<double> per_class;  // NaN where the class never occurs
    double mean;                    // NaN when no class is defined
};

/// IoU_c = TP / (row_c + col_c - TP); undefined classes are left out of the mean.
MiouResult miou(const ConfusionMatrix& cm);

}  // namespace seedforge::eval
