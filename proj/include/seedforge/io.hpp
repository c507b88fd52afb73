#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "seedforge/image.hpp"
#include "seedforge/tensor.hpp"

namespace seedforge::io {

// Tensor container, all fields little-endian:
//
//   [magic "MECPTNS1" 8B]["F32A" 4B][rank u32][dims u32 x rank]
//   [payload f32 x N][crc32 of payload bytes u32]
inline constexpr char kTensorMagic[8] = {'M', 'E', 'C', 'P', 'T', 'N', 'S', '1'};
inline constexpr char kDtypeF32[4] = {'F', '3', '2', 'A'};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

using AnyImage = std::variant<RgbImage, GrayImage>;

/// Reads an 8-bit grayscale or RGB PNG. Palette images without transparency
/// are expanded to RGB. 16-bit, sub-byte, alpha and transparent-palette
/// images raise UnsupportedPng.
AnyImage read_png(const std::filesystem::path& path);

/// Like read_png but requires the given channel layout (grayscale is
/// broadcast to RGB; RGB is not accepted where gray is required).
RgbImage read_rgb_png(const std::filesystem::path& path);
GrayImage read_gray_png(const std::filesystem::path& path);

void write_png(const RgbImage& img, const std::filesystem::path& path);
void write_png(const GrayImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(std::span<const std::uint8_t> bytes, const std::filesystem::path& path);

}  // namespace seedforge::io
