#include "seedforge/eval.hpp"

#include <limits>
#include <string>

#include "seedforge/error.hpp"

namespace seedforge::eval {

ConfusionMatrix::ConfusionMatrix(std::uint32_t num_classes)
    : n_(num_classes), counts_(std::size_t(num_classes) * num_classes, 0), missed_(num_classes, 0) {
    if (num_classes == 0 || num_classes > kIgnoreLabel) {
        throw Error(ErrorCode::InvalidArgument, "class count must be in [1, 255]");
    }
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    for (auto c : missed_) t += c;
    return t;
}

void ConfusionMatrix::accumulate(const PseudoLabelMap& pred, const PseudoLabelMap& gt, IgnoredPrediction mode) {
    if (pred.width != gt.width || pred.height != gt.height) {
        throw Error(ErrorCode::ShapeMismatch, "prediction " + std::to_string(pred.width) + "x" +
                                                  std::to_string(pred.height) + " vs ground truth " +
                                                  std::to_string(gt.width) + "x" + std::to_string(gt.height));
    }
    auto check = [&](std::uint8_t v, const char* what) {
        if (v != kIgnoreLabel && v >= n_) {
            throw Error(ErrorCode::ClassOutOfRange,
                        std::string(what) + " label " + std::to_string(v) + " >= " + std::to_string(n_));
        }
    };
    // Validate first so a bad map leaves the matrix untouched.
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        check(gt.labels[i], "ground-truth");
        check(pred.labels[i], "predicted");
    }
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const auto g = gt.labels[i], p = pred.labels[i];
        if (g == kIgnoreLabel) continue;
        if (p == kIgnoreLabel) {
            if (mode == IgnoredPrediction::CountAsMiss) ++missed_[g];
            continue;
        }
        ++counts_[std::size_t(g) * n_ + p];
    }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.n_ != n_) throw Error(ErrorCode::SizeMismatch, "confusion matrices differ in class count");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    for (std::size_t i = 0; i < missed_.size(); ++i) missed_[i] += other.missed_[i];
    return *this;
}

MiouResult miou(const ConfusionMatrix& cm) {
    const auto n = cm.num_classes();
    MiouResult r{std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()),
                 std::numeric_limits<double>::quiet_NaN()};
    double sum = 0.0;
    std::uint32_t defined = 0;
    for (std::uint32_t c = 0; c < n; ++c) {
        std::uint64_t row = cm.missed(c), col = 0;
        for (std::uint32_t j = 0; j < n; ++j) {
            row += cm.at(c, j);
            col += cm.at(j, c);
        }
        const std::uint64_t tp = cm.at(c, c);
        const std::uint64_t denom = row + col - tp;
        if (denom == 0) continue;
        r.per_class[c] = double(tp) / double(denom);
        sum += r.per_class[c];
        ++defined;
    }
    if (defined > 0) r.mean = sum / defined;
    return r;
}

}  // namespace seedforge::eval
