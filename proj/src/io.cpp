#include "seedforge/io.hpp"

#include <png.h>
#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "seedforge/error.hpp"

namespace seedforge::io {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[offset + i]) << (8 * i);
    return v;
}

std::uint32_t payload_crc(std::span<const std::uint8_t> payload) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; payloads here never approach 4 GiB but chunk anyway.
    std::size_t pos = 0;
    while (pos < payload.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(payload.size() - pos, 1u << 30));
        crc = crc32(crc, payload.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    const auto n = Tensor::element_count(t.shape());
    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 + 4 + 4 * t.rank() + 4 * n + 4);
    for (char c : kTensorMagic) out.push_back(static_cast<std::uint8_t>(c));
    for (char c : kDtypeF32) out.push_back(static_cast<std::uint8_t>(c));
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_u32(out, d);
    const auto payload_start = out.size();
    for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    put_u32(out, payload_crc(std::span(out).subspan(payload_start)));
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kTensorMagic, 8) != 0) {
        throw Error(ErrorCode::BadMagic, "not a tensor container");
    }
    if (bytes.size() < 16) throw Error(ErrorCode::TruncatedPayload, "header cut short");
    if (std::memcmp(bytes.data() + 8, kDtypeF32, 4) != 0) {
        throw Error(ErrorCode::UnsupportedDtype, "only F32A is supported");
    }
    const std::uint32_t rank = get_u32(bytes, 12);
    if (rank == 0 || rank > Tensor::kMaxRank) {
        throw Error(ErrorCode::InvalidShape, "rank " + std::to_string(rank) + " outside [1, 4]");
    }
    std::size_t offset = 16;
    if (bytes.size() < offset + 4 * rank) throw Error(ErrorCode::TruncatedPayload, "dims cut short");
    std::vector<std::uint32_t> shape(rank);
    for (auto& d : shape) {
        d = get_u32(bytes, offset);
        offset += 4;
    }
    const auto n = Tensor::element_count(shape);
    if (bytes.size() != offset + 4 * n + 4) {
        throw Error(ErrorCode::TruncatedPayload, "declared " + std::to_string(n) + " values, file holds " +
                                                     std::to_string((bytes.size() - offset) / 4) + " words");
    }
    const auto payload = bytes.subspan(offset, 4 * n);
    if (payload_crc(payload) != get_u32(bytes, offset + 4 * n)) {
        throw Error(ErrorCode::ChecksumMismatch, "payload crc32 does not match");
    }
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<float>(get_u32(payload, 4 * i));
    return Tensor(std::move(shape), std::move(data));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed on " + path.string());
    return bytes;
}

void write_file(std::span<const std::uint8_t> bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed on " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
    try {
        return decode_tensor(read_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
    write_file(encode_tensor(t), path);
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    if (text) *text = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

AnyImage read_png(const std::filesystem::path& path) {
    auto file = open_file(path, "rb");
    std::uint8_t sig[8] = {};
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw Error(ErrorCode::UnsupportedPng, path.string() + ": not a PNG file");
    }

    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (!png) throw Error(ErrorCode::IoFailure, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};
    if (!info) throw Error(ErrorCode::IoFailure, "png_create_info_struct failed");

    // Everything allocated below is owned by C++ objects declared before setjmp.
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    bool unsupported = false;
    std::string why;

    if (setjmp(png_jmpbuf(png))) {
        throw Error(ErrorCode::UnsupportedPng, path.string() + ": " + err);
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    int channels = 0;
    if (bit_depth != 8) {
        unsupported = true;
        why = std::to_string(bit_depth) + "-bit samples";
    } else if (color_type == PNG_COLOR_TYPE_GRAY) {
        channels = 1;
    } else if (color_type == PNG_COLOR_TYPE_RGB) {
        channels = 3;
    } else if (color_type == PNG_COLOR_TYPE_PALETTE) {
        if (png_get_valid(png, info, PNG_INFO_tRNS)) {
            unsupported = true;
            why = "palette with alpha";
        } else {
            png_set_palette_to_rgb(png);
            channels = 3;
        }
    } else {
        unsupported = true;
        why = "alpha channel";
    }
    if (!unsupported && png_get_valid(png, info, PNG_INFO_tRNS)) {
        unsupported = true;
        why = "transparency chunk";
    }
    if (unsupported) throw Error(ErrorCode::UnsupportedPng, path.string() + ": " + why);

    png_read_update_info(png, info);
    const std::size_t stride = std::size_t(width) * channels;
    if (png_get_rowbytes(png, info) != stride) {
        throw Error(ErrorCode::UnsupportedPng, path.string() + ": unexpected row layout");
    }
    pixels.resize(stride * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    if (channels == 1) return GrayImage(width, height, std::move(pixels));
    return RgbImage(width, height, std::move(pixels));
}

RgbImage read_rgb_png(const std::filesystem::path& path) {
    auto any = read_png(path);
    if (auto* rgb = std::get_if<RgbImage>(&any)) return std::move(*rgb);
    const auto& gray = std::get<GrayImage>(any);
    RgbImage out(gray.width(), gray.height());
    for (std::uint32_t y = 0; y < gray.height(); ++y)
        for (std::uint32_t x = 0; x < gray.width(); ++x)
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = gray.at(x, y);
    return out;
}

GrayImage read_gray_png(const std::filesystem::path& path) {
    auto any = read_png(path);
    if (auto* gray = std::get_if<GrayImage>(&any)) return std::move(*gray);
    throw Error(ErrorCode::UnsupportedPng, path.string() + ": expected a grayscale PNG");
}

namespace {

void write_png_impl(std::uint32_t width, std::uint32_t height, int channels,
                    std::span<const std::uint8_t> pixels, const std::filesystem::path& path) {
    auto file = open_file(path, "wb");
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (!png) throw Error(ErrorCode::IoFailure, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};
    if (!info) throw Error(ErrorCode::IoFailure, "png_create_info_struct failed");

    const std::size_t stride = std::size_t(width) * channels;
    std::vector<png_bytep> rows(height);
    for (std::uint32_t y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(pixels.data() + y * stride);

    if (setjmp(png_jmpbuf(png))) {
        throw Error(ErrorCode::IoFailure, path.string() + ": " + err);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, 8, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    if (std::fflush(file.get()) != 0) throw Error(ErrorCode::IoFailure, "flush failed on " + path.string());
}

}  // namespace

void write_png(const RgbImage& img, const std::filesystem::path& path) {
    write_png_impl(img.width(), img.height(), 3, img.pixels(), path);
}

void write_png(const GrayImage& img, const std::filesystem::path& path) {
    write_png_impl(img.width(), img.height(), 1, img.pixels(), path);
}

}  // namespace seedforge::io
