#include "seedforge/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "seedforge/error.hpp"
#include "seedforge/image.hpp"
#include "seedforge/io.hpp"
#include "seedforge/random.hpp"
#include "seedforge/tensor.hpp"

namespace seedforge::fixtures {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Philox streams, one per kind of draw.
enum Stream : std::uint32_t { kLayout = 1, kColor, kImageNoise, kFeatureNoise, kQkNoise, kWeights };

std::string image_name(std::uint32_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%03u", i);
    return buf;
}

std::uint32_t alignment(const FixtureSpec& spec) {
    return *std::max_element(spec.strides.begin(), spec.strides.end());
}

// Uniform integer in [lo, hi].
std::uint32_t pick(const Philox4x32& rng, std::uint64_t& counter, std::uint32_t lo, std::uint32_t hi) {
    return lo + static_cast<std::uint32_t>(rng.bits64(counter++, kLayout) % (std::uint64_t(hi) - lo + 1));
}

std::vector<std::uint32_t> present_classes(const FixtureSpec& spec, const Philox4x32& rng, std::uint64_t& counter) {
    std::vector<std::uint32_t> ids;
    if (spec.num_classes <= 2) {
        for (std::uint32_t c = 1; c <= spec.num_classes; ++c) ids.push_back(c);
        return ids;
    }
    const std::uint32_t need = spec.overlap ? 2 : 1;
    while (ids.size() < need) {
        ids.clear();
        for (std::uint32_t c = 1; c <= spec.num_classes; ++c) {
            if (rng.uniform(counter++, kLayout) < 0.5) ids.push_back(c);
        }
    }
    return ids;
}

std::array<std::uint8_t, 3> class_color(std::uint32_t class_id) {
    static constexpr std::array<std::array<std::uint8_t, 3>, 8> palette{{{200, 40, 40},
                                                                         {40, 180, 60},
                                                                         {50, 70, 210},
                                                                         {220, 200, 40},
                                                                         {180, 60, 200},
                                                                         {40, 200, 200},
                                                                         {240, 140, 30},
                                                                         {120, 120, 120}}};
    return palette[(class_id - 1) % palette.size()];
}

}  // namespace

void FixtureSpec::validate() const {
    if (count == 0) throw Error(ErrorCode::InvalidArgument, "fixture count must be >= 1");
    if (num_classes == 0 || num_classes > 254) throw Error(ErrorCode::InvalidArgument, "classes must be in 1..254");
    if (!(noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise must be >= 0");
    if (strides.empty() || blocks == 0) throw Error(ErrorCode::InvalidArgument, "need at least one scale and block");
    for (auto s : strides) {
        if (s == 0 || width % s != 0 || height % s != 0) {
            throw Error(ErrorCode::InvalidArgument, "every stride must divide the image size");
        }
    }
    const auto a = alignment(*this);
    for (auto s : strides) {
        if (a % s != 0) throw Error(ErrorCode::InvalidArgument, "strides must divide the largest stride");
    }
    const std::uint32_t per_row = overlap ? num_classes : static_cast<std::uint32_t>(std::ceil(std::sqrt(num_classes)));
    const std::uint32_t rows = overlap ? 1 : (num_classes + per_row - 1) / per_row;
    if (width / per_row < 4 * a || height / rows < 4 * a) {
        throw Error(ErrorCode::InvalidArgument, "image too small for the blob layout");
    }
}

std::vector<Blob> blob_layout(std::uint64_t seed, const FixtureSpec& spec, std::uint32_t index) {
    const Philox4x32 rng(derive_seed(seed, index, kLayout));
    std::uint64_t counter = 0;
    const auto ids = present_classes(spec, rng, counter);
    const std::uint32_t a = alignment(spec);
    const auto n = static_cast<std::uint32_t>(ids.size());

    std::vector<Blob> blobs;
    if (spec.overlap) {
        // One row; neighbours overlap by 2a around each band boundary.
        const std::uint32_t band = spec.width / n / a * a;
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t x0 = i == 0 ? a : i * band - a;
            const std::uint32_t x1 = i + 1 == n ? std::min(spec.width - a, (i + 1) * band) : (i + 1) * band + a;
            blobs.push_back({ids[i], x0, 2 * a, x1, spec.height - 2 * a});
        }
        return blobs;
    }
    const auto cols = static_cast<std::uint32_t>(std::ceil(std::sqrt(double(n))));
    const std::uint32_t rows = (n + cols - 1) / cols;
    const std::uint32_t cw = spec.width / cols / a * a, ch = spec.height / rows / a * a;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t cx = (i % cols) * cw, cy = (i / cols) * ch;
        // Margins of 1..(cell/4) alignment units keep each blob at least half a cell wide.
        const std::uint32_t mx = std::max(1u, cw / a / 4), my = std::max(1u, ch / a / 4);
        const std::uint32_t l = pick(rng, counter, 1, mx), r = pick(rng, counter, 1, mx);
        const std::uint32_t t = pick(rng, counter, 1, my), b = pick(rng, counter, 1, my);
        blobs.push_back({ids[i], cx + l * a, cy + t * a, cx + cw - r * a, cy + ch - b * a});
    }
    return blobs;
}

void generate_fixtures(std::uint64_t seed, const FixtureSpec& spec, const fs::path& dir) {
    spec.validate();
    for (const char* sub : {"images", "gt", "saliency", "net"}) fs::create_directories(dir / sub);

    const std::uint32_t w = spec.width, h = spec.height;
    const std::uint32_t fc = spec.num_classes + spec.extra_channels;

    // Classifier weights: class b reads its own indicator channel, plus
    // small deterministic weights on the noise-only channels.
    {
        const Philox4x32 rng(derive_seed(seed, 0, kWeights));
        Tensor weights({spec.num_classes, fc});
        for (std::uint32_t b = 0; b < spec.num_classes; ++b) {
            weights[std::size_t(b) * fc + b] = 1.0f;
            for (std::uint32_t c = spec.num_classes; c < fc; ++c) {
                weights[std::size_t(b) * fc + c] =
                    static_cast<float>(0.2 * rng.uniform(std::uint64_t(b) * fc + c, kWeights) - 0.1);
            }
        }
        io::write_tensor(weights, dir / "weights.tns");
    }

    json manifest;
    manifest["format"] = "seedforge-dataset/1";
    manifest["seed"] = seed;
    manifest["width"] = w;
    manifest["height"] = h;
    manifest["num_classes"] = spec.num_classes;
    manifest["noise"] = spec.noise;
    manifest["overlap"] = spec.overlap;
    manifest["blocks"] = spec.blocks;
    manifest["weights"] = "weights.tns";
    json scales = json::array();
    for (std::size_t si = 0; si < spec.strides.size(); ++si) {
        scales.push_back({{"name", "s" + std::to_string(si)},
                          {"stride", spec.strides[si]},
                          {"grid", {h / spec.strides[si], w / spec.strides[si]}}});
    }
    manifest["scales"] = scales;
    json images = json::array();

    for (std::uint32_t idx = 0; idx < spec.count; ++idx) {
        const auto name = image_name(idx);
        const auto blobs = blob_layout(seed, spec, idx);
        const std::uint64_t img_seed = derive_seed(seed, idx, 0);
        const Philox4x32 noise_rng(img_seed);

        // Per-class coverage masks (before overlap resolution) and GT.
        std::vector<std::vector<std::uint8_t>> cover(blobs.size(), std::vector<std::uint8_t>(std::size_t(w) * h, 0));
        GrayImage gt(w, h, 0);
        for (std::size_t bi = 0; bi < blobs.size(); ++bi) {
            const auto& bl = blobs[bi];
            for (std::uint32_t y = bl.y0; y < bl.y1; ++y) {
                for (std::uint32_t x = bl.x0; x < bl.x1; ++x) {
                    cover[bi][std::size_t(y) * w + x] = 1;
                    gt.at(x, y) = static_cast<std::uint8_t>(bl.class_id);
                }
            }
        }

        // RGB rendering.
        const Philox4x32 color_rng(derive_seed(seed, idx, kColor));
        std::array<std::uint8_t, 3> bg{};
        for (int c = 0; c < 3; ++c) bg[c] = static_cast<std::uint8_t>(20 + 60 * color_rng.uniform(c, kColor));
        RgbImage img(w, h);
        for (std::uint32_t y = 0; y < h; ++y) {
            for (std::uint32_t x = 0; x < w; ++x) {
                const auto label = gt.at(x, y);
                const auto base = label == 0 ? bg : class_color(label);
                for (int c = 0; c < 3; ++c) {
                    double v = base[c];
                    if (spec.noise > 0.0) {
                        const auto ctr = (std::uint64_t(y) * w + x) * 3 + c;
                        v += spec.noise * 64.0 * (2.0 * noise_rng.uniform(ctr, kImageNoise) - 1.0);
                    }
                    img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
                }
            }
        }

        // Saliency: union of blob masks dilated by a square structuring element.
        GrayImage sal(w, h, 0);
        const long d = spec.saliency_dilation;
        for (const auto& bl : blobs) {
            const long x0 = std::max(0l, long(bl.x0) - d), x1 = std::min(long(w), long(bl.x1) + d);
            const long y0 = std::max(0l, long(bl.y0) - d), y1 = std::min(long(h), long(bl.y1) + d);
            for (long y = y0; y < y1; ++y)
                for (long x = x0; x < x1; ++x) sal.at(std::uint32_t(x), std::uint32_t(y)) = 255;
        }

        io::write_png(img, dir / "images" / (name + ".png"));
        io::write_png(gt, dir / "gt" / (name + ".png"));
        io::write_png(sal, dir / "saliency" / (name + ".png"));

        const auto net_dir = dir / "net" / name;
        fs::create_directories(net_dir);
        for (std::size_t si = 0; si < spec.strides.size(); ++si) {
            const std::uint32_t st = spec.strides[si];
            const std::uint32_t gh = h / st, gw = w / st;
            const std::size_t cells = std::size_t(gh) * gw;
            const std::string prefix = "s" + std::to_string(si);

            // Features: per-class blob coverage of each cell, plus noise.
            Tensor features({fc, gh, gw});
            std::vector<std::uint32_t> pattern(cells, 0);
            for (std::uint32_t cy = 0; cy < gh; ++cy) {
                for (std::uint32_t cx = 0; cx < gw; ++cx) {
                    const std::size_t cell = std::size_t(cy) * gw + cx;
                    for (std::size_t bi = 0; bi < blobs.size(); ++bi) {
                        std::uint32_t hits = 0;
                        for (std::uint32_t y = cy * st; y < (cy + 1) * st; ++y)
                            for (std::uint32_t x = cx * st; x < (cx + 1) * st; ++x) hits += cover[bi][std::size_t(y) * w + x];
                        const double frac = double(hits) / double(st * st);
                        features[std::size_t(blobs[bi].class_id - 1) * cells + cell] = static_cast<float>(frac);
                        if (frac >= 0.5) pattern[cell] |= 1u << bi;
                    }
                }
            }
            if (spec.noise > 0.0) {
                for (std::size_t i = 0; i < features.size(); ++i) {
                    const double u = noise_rng.uniform((std::uint64_t(si) << 40) | i, kFeatureNoise);
                    features[i] += static_cast<float>(spec.noise * (2.0 * u - 1.0));
                }
            }
            io::write_tensor(features, net_dir / (prefix + "_features.tns"));

            // Q = K = beta * onehot(region); the class token owns the last
            // dimension. Same-region logits are 120, everything else 0, so
            // cross-region attention underflows to exactly 0 in f32.
            std::map<std::uint32_t, std::uint32_t> region_of;
            for (auto p : pattern) {
                const auto id = static_cast<std::uint32_t>(region_of.size());
                region_of.emplace(p, id);
            }
            const auto dim = std::max<std::uint32_t>(8, static_cast<std::uint32_t>(region_of.size()) + 1);
            for (std::uint32_t blk = 0; blk < spec.blocks; ++blk) {
                const double beta = std::sqrt(120.0 * std::sqrt(double(dim))) * (1.0 + 0.05 * blk);
                Tensor q({static_cast<std::uint32_t>(cells + 1), dim});
                q[dim - 1] = static_cast<float>(beta);
                for (std::size_t cell = 0; cell < cells; ++cell) {
                    q[(cell + 1) * dim + region_of[pattern[cell]]] = static_cast<float>(beta);
                }
                if (spec.noise > 0.0) {
                    for (std::size_t i = 0; i < q.size(); ++i) {
                        const auto ctr = (std::uint64_t(si) << 48) | (std::uint64_t(blk) << 40) | i;
                        q[i] += static_cast<float>(beta * spec.noise * (2.0 * noise_rng.uniform(ctr, kQkNoise) - 1.0));
                    }
                }
                const Tensor& k = q;
                io::write_tensor(q, net_dir / (prefix + "_q" + std::to_string(blk) + ".tns"));
                io::write_tensor(k, net_dir / (prefix + "_k" + std::to_string(blk) + ".tns"));
            }
        }

        json entry;
        entry["name"] = name;
        entry["id"] = idx;
        json ids = json::array();
        json jblobs = json::array();
        for (const auto& bl : blobs) {
            ids.push_back(bl.class_id);
            jblobs.push_back({{"class", bl.class_id}, {"x0", bl.x0}, {"y0", bl.y0}, {"x1", bl.x1}, {"y1", bl.y1}});
        }
        std::sort(ids.begin(), ids.end());
        entry["classes"] = ids;
        entry["blobs"] = jblobs;
        images.push_back(entry);
    }
    manifest["images"] = images;

    const auto text = manifest.dump(2) + "\n";
    io::write_file(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), dir / "dataset.json");
}

}  // namespace seedforge::fixtures
