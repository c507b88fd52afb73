#include "seedforge/tensor.hpp"

#include <string>

#include "seedforge/error.hpp"

namespace seedforge {

std::size_t Tensor::element_count(std::span<const std::uint32_t> shape) {
    if (shape.empty() || shape.size() > kMaxRank) {
        throw Error(ErrorCode::InvalidShape, "rank must be in [1, 4], got " + std::to_string(shape.size()));
    }
    std::size_t n = 1;
    for (auto d : shape) {
        if (d == 0) throw Error(ErrorCode::InvalidShape, "zero-sized dimension");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<std::uint32_t> shape) : shape_(std::move(shape)) {
    data_.assign(element_count(shape_), 0.0f);
}

Tensor::Tensor(std::vector<std::uint32_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    const auto n = element_count(shape_);
    if (n != data_.size()) {
        throw Error(ErrorCode::InvalidShape, "shape implies " + std::to_string(n) + " values, got " +
                                                 std::to_string(data_.size()));
    }
}

}  // namespace seedforge
