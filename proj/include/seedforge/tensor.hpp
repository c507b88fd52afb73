#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace seedforge {

/// Dense row-major f32 tensor of rank 1..4.
///
/// Carries feature maps (f_c x f_h x f_w), classifier weights (B x f_c),
/// attention query/key stacks ((1+s) x D) and seed stacks (B x H x W).
/// The constructor enforces product(shape) == data.size() and all dims >= 1.
class Tensor {
public:
    static constexpr std::size_t kMaxRank = 4;

    Tensor() = default;
    explicit Tensor(std::vector<std::uint32_t> shape);
    Tensor(std::vector<std::uint32_t> shape, std::vector<float> data);

    const std::vector<std::uint32_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::uint32_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    float& operator[](std::size_t i) noexcept { return data_[i]; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }

    bool operator==(const Tensor&) const = default;

    /// Number of elements implied by `shape`; throws InvalidShape on rank 0,
    /// rank > 4, or a zero dim.
    static std::size_t element_count(std::span<const std::uint32_t> shape);

private:
    std::vector<std::uint32_t> shape_;
    std::vector<float> data_;
};

}  // namespace seedforge
