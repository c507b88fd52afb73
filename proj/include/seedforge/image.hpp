#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "seedforge/error.hpp"

namespace seedforge {

/// Interleaved 8-bit image with a compile-time channel count.
template <int Channels>
class Image {
public:
    static constexpr int kChannels = Channels;

    Image() = default;
    Image(std::uint32_t width, std::uint32_t height, std::uint8_t fill = 0)
        : width_(width), height_(height) {
        if (std::size_t(width) * height == 0) {
            throw Error(ErrorCode::InvalidShape, "image must have at least one pixel");
        }
        pixels_.assign(std::size_t(width) * height * Channels, fill);
    }
    Image(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        if (std::size_t(width) * height == 0 ||
            pixels_.size() != std::size_t(width) * height * Channels) {
            throw Error(ErrorCode::InvalidShape, "pixel buffer does not match image dimensions");
        }
    }

    std::uint32_t width() const noexcept { return width_; }
    std::uint32_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return std::size_t(width_) * height_; }

    std::uint8_t& at(std::uint32_t x, std::uint32_t y, int c = 0) noexcept {
        return pixels_[(std::size_t(y) * width_ + x) * Channels + c];
    }
    std::uint8_t at(std::uint32_t x, std::uint32_t y, int c = 0) const noexcept {
        return pixels_[(std::size_t(y) * width_ + x) * Channels + c];
    }

    std::span<std::uint8_t> pixels() noexcept { return pixels_; }
    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

    bool same_size(std::uint32_t w, std::uint32_t h) const noexcept { return width_ == w && height_ == h; }

    bool operator==(const Image&) const = default;

private:
    std::uint32_t width_ = 0;
    std::uint32_t height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

using RgbImage = Image<3>;
using GrayImage = Image<1>;

}  // namespace seedforge
