#include "seedforge/slic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "seedforge/error.hpp"

namespace seedforge::slic {

namespace {

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

// sRGB primaries, D65. The reference white is the image of (1, 1, 1) so that
// white maps to a = b = 0 up to rounding.
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};
constexpr double kWhite[3] = {kM[0][0] + kM[0][1] + kM[0][2], kM[1][0] + kM[1][1] + kM[1][2],
                              kM[2][0] + kM[2][1] + kM[2][2]};

struct LabView {
    const Tensor& t;
    std::uint32_t w, h;
    const float* px(std::uint32_t x, std::uint32_t y) const { return t.data().data() + (std::size_t(y) * w + x) * 3; }
};

double gradient(const LabView& v, std::uint32_t x, std::uint32_t y) {
    const auto xl = x > 0 ? x - 1 : x, xr = x + 1 < v.w ? x + 1 : x;
    const auto yu = y > 0 ? y - 1 : y, yd = y + 1 < v.h ? y + 1 : y;
    double gsum = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double dx = double(v.px(xr, y)[c]) - v.px(xl, y)[c];
        const double dy = double(v.px(x, yd)[c]) - v.px(x, yu)[c];
        gsum += dx * dx + dy * dy;
    }
    return gsum;
}

}  // namespace

Tensor rgb_to_lab(const RgbImage& img) {
    Tensor out({img.height(), img.width(), 3});
    auto data = out.data();
    const auto src = img.pixels();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double r = srgb_to_linear(src[3 * i] / 255.0);
        const double g = srgb_to_linear(src[3 * i + 1] / 255.0);
        const double b = srgb_to_linear(src[3 * i + 2] / 255.0);
        double xyz[3];
        for (int row = 0; row < 3; ++row) xyz[row] = (kM[row][0] * r + kM[row][1] * g + kM[row][2] * b) / kWhite[row];
        const double fx = lab_f(xyz[0]), fy = lab_f(xyz[1]), fz = lab_f(xyz[2]);
        data[3 * i] = static_cast<float>(116.0 * fy - 16.0);
        data[3 * i + 1] = static_cast<float>(500.0 * (fx - fy));
        data[3 * i + 2] = static_cast<float>(200.0 * (fy - fz));
    }
    return out;
}

void SlicParams::validate(std::size_t pixel_count) const {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (!(compactness > 0.0) || !std::isfinite(compactness)) {
        throw Error(ErrorCode::InvalidArgument, "compactness must be > 0");
    }
    if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    if (!(min_segment_ratio > 0.0 && min_segment_ratio <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "min_segment_ratio must be in (0, 1]");
    }
    if (k > pixel_count) {
        throw Error(ErrorCode::KTooLarge,
                    "k = " + std::to_string(k) + " exceeds pixel count " + std::to_string(pixel_count));
    }
}

double grid_interval(std::size_t pixel_count, std::uint32_t k) {
    return std::sqrt(double(pixel_count) / double(k));
}

std::vector<Center> init_centers(const Tensor& lab, std::uint32_t k) {
    const std::uint32_t h = lab.dim(0), w = lab.dim(1);
    const double g = grid_interval(std::size_t(w) * h, k);

    auto nx = std::clamp<std::uint32_t>(static_cast<std::uint32_t>(std::lround(w / g)), 1, w);
    auto ny = std::clamp<std::uint32_t>(static_cast<std::uint32_t>(std::lround(h / g)), 1, h);
    // Shrink the most crowded axis until nx*ny <= k, then grow the sparsest
    // axis while that stays within k.
    while (std::uint64_t(nx) * ny > k) {
        const bool x_crowded = double(w) / nx <= double(h) / ny;
        if ((x_crowded && nx > 1) || ny == 1) --nx; else --ny;
    }
    for (;;) {
        const bool grow_x = double(w) / nx >= double(h) / ny;
        if (grow_x && nx < w && std::uint64_t(nx + 1) * ny <= k) { ++nx; continue; }
        if (!grow_x && ny < h && std::uint64_t(nx) * (ny + 1) <= k) { ++ny; continue; }
        if (nx < w && std::uint64_t(nx + 1) * ny <= k) { ++nx; continue; }
        if (ny < h && std::uint64_t(nx) * (ny + 1) <= k) { ++ny; continue; }
        break;
    }

    const LabView view{lab, w, h};
    const double step_x = double(w) / nx, step_y = double(h) / ny;
    std::vector<Center> centers;
    centers.reserve(std::size_t(nx) * ny);
    for (std::uint32_t j = 0; j < ny; ++j) {
        for (std::uint32_t i = 0; i < nx; ++i) {
            // Cell centres in pixel coordinates (pixel p covers [p - 0.5, p + 0.5]).
            double cx = (i + 0.5) * step_x - 0.5;
            double cy = (j + 0.5) * step_y - 0.5;
            auto px = static_cast<std::uint32_t>(std::clamp<long>(std::lround(cx), 0, long(w) - 1));
            auto py = static_cast<std::uint32_t>(std::clamp<long>(std::lround(cy), 0, long(h) - 1));
            double best = gradient(view, px, py);
            std::uint32_t bx = px, by = py;
            bool moved = false;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const long qx = long(px) + dx, qy = long(py) + dy;
                    if (qx < 0 || qy < 0 || qx >= long(w) || qy >= long(h)) continue;
                    const double gq = gradient(view, std::uint32_t(qx), std::uint32_t(qy));
                    if (gq < best) {
                        best = gq;
                        bx = std::uint32_t(qx);
                        by = std::uint32_t(qy);
                        moved = true;
                    }
                }
            }
            if (moved) {
                cx = bx;
                cy = by;
            }
            const float* c = view.px(bx, by);
            centers.push_back({c[0], c[1], c[2], cx, cy});
        }
    }
    return centers;
}

double distance_sq(const Tensor& lab, std::uint32_t x, std::uint32_t y, const Center& c, double spatial_weight_sq) {
    const float* p = lab.data().data() + (std::size_t(y) * lab.dim(1) + x) * 3;
    const double dl = p[0] - c.l, da = p[1] - c.a, db = p[2] - c.b;
    const double dx = x - c.x, dy = y - c.y;
    return dl * dl + da * da + db * db + spatial_weight_sq * (dx * dx + dy * dy);
}

std::size_t assign(const Tensor& lab, const std::vector<Center>& centers, double g, double compactness,
                   std::vector<std::uint32_t>& labels) {
    const std::uint32_t h = lab.dim(0), w = lab.dim(1);
    const std::size_t n = std::size_t(w) * h;
    const double wsq = (compactness / g) * (compactness / g);
    const auto ncenters = static_cast<std::uint32_t>(centers.size());
    if (labels.size() != n) labels.assign(n, kUnassigned);

    std::vector<double> best_d(n, std::numeric_limits<double>::infinity());
    std::vector<std::uint32_t> best(n, kUnassigned);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < ncenters) {
            best[i] = labels[i];
            best_d[i] = distance_sq(lab, std::uint32_t(i % w), std::uint32_t(i / w), centers[labels[i]], wsq);
        }
    }

    auto consider = [&](std::size_t i, std::uint32_t x, std::uint32_t y, std::uint32_t ci) {
        const double d = distance_sq(lab, x, y, centers[ci], wsq);
        if (d < best_d[i] || (d == best_d[i] && ci < best[i])) {
            best_d[i] = d;
            best[i] = ci;
        }
    };

    for (std::uint32_t ci = 0; ci < ncenters; ++ci) {
        const auto& c = centers[ci];
        const long x0 = std::max<long>(0, long(std::floor(c.x - g)));
        const long x1 = std::min<long>(long(w) - 1, long(std::ceil(c.x + g)));
        const long y0 = std::max<long>(0, long(std::floor(c.y - g)));
        const long y1 = std::min<long>(long(h) - 1, long(std::ceil(c.y + g)));
        for (long y = y0; y <= y1; ++y) {
            if (!(std::abs(double(y) - c.y) <= g)) continue;
            for (long x = x0; x <= x1; ++x) {
                if (!(std::abs(double(x) - c.x) <= g)) continue;
                consider(std::size_t(y) * w + x, std::uint32_t(x), std::uint32_t(y), ci);
            }
        }
    }

    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (best[i] == kUnassigned) {
            for (std::uint32_t ci = 0; ci < ncenters; ++ci) consider(i, std::uint32_t(i % w), std::uint32_t(i / w), ci);
        }
        if (best[i] != labels[i]) {
            labels[i] = best[i];
            ++changed;
        }
    }
    return changed;
}

void update_centers(const Tensor& lab, const std::vector<std::uint32_t>& labels, std::vector<Center>& centers) {
    const std::uint32_t w = lab.dim(1);
    std::vector<Center> sums(centers.size(), Center{0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    const auto data = lab.data();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& s = sums[labels[i]];
        s.l += data[3 * i];
        s.a += data[3 * i + 1];
        s.b += data[3 * i + 2];
        s.x += double(i % w);
        s.y += double(i / w);
        ++counts[labels[i]];
    }
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
        if (counts[ci] == 0) continue;
        const double inv = 1.0 / double(counts[ci]);
        const auto& s = sums[ci];
        centers[ci] = {s.l * inv, s.a * inv, s.b * inv, s.x * inv, s.y * inv};
    }
}

double energy(const Tensor& lab, const std::vector<Center>& centers, const std::vector<std::uint32_t>& labels,
              double g, double compactness) {
    const std::uint32_t w = lab.dim(1);
    const double wsq = (compactness / g) * (compactness / g);
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        total += distance_sq(lab, std::uint32_t(i % w), std::uint32_t(i / w), centers[labels[i]], wsq);
    }
    return total;
}

ClusterResult cluster(const RgbImage& img, const SlicParams& p) {
    p.validate(img.pixel_count());
    const Tensor lab = rgb_to_lab(img);
    const double g = grid_interval(img.pixel_count(), p.k);

    ClusterResult result;
    result.centers = init_centers(lab, p.k);
    std::vector<std::uint32_t> labels;
    for (std::uint32_t it = 0; it < p.max_iters; ++it) {
        const auto changed = assign(lab, result.centers, g, p.compactness, labels);
        result.energy_trace.push_back(energy(lab, result.centers, labels, g, p.compactness));
        ++result.iterations;
        if (changed == 0) break;
        if (it + 1 < p.max_iters) update_centers(lab, labels, result.centers);
    }
    result.raw = {img.width(), img.height(), std::move(labels)};
    return result;
}

SuperpixelLabeling enforce_connectivity(const LabelGrid& raw, double min_segment_ratio, double g) {
    const std::uint32_t w = raw.width, h = raw.height;
    const std::size_t n = std::size_t(w) * h;

    // 4-connected components of equal raw label, numbered in scan order.
    std::vector<std::uint32_t> comp(n, kUnassigned);
    std::vector<std::size_t> size;
    std::vector<std::uint32_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (comp[start] != kUnassigned) continue;
        const auto id = static_cast<std::uint32_t>(size.size());
        const auto label = raw.labels[start];
        std::size_t count = 0;
        comp[start] = id;
        stack.push_back(static_cast<std::uint32_t>(start));
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            ++count;
            const std::uint32_t x = i % w, y = i / w;
            auto visit = [&](std::size_t j) {
                if (comp[j] == kUnassigned && raw.labels[j] == label) {
                    comp[j] = id;
                    stack.push_back(static_cast<std::uint32_t>(j));
                }
            };
            if (x > 0) visit(i - 1);
            if (x + 1 < w) visit(i + 1);
            if (y > 0) visit(i - w);
            if (y + 1 < h) visit(i + w);
        }
        size.push_back(count);
    }

    const std::size_t ncomp = size.size();
    std::vector<std::vector<std::uint32_t>> adj(ncomp);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t x = i % w, y = i / w;
        if (x + 1 < w && comp[i] != comp[i + 1]) {
            adj[comp[i]].push_back(comp[i + 1]);
            adj[comp[i + 1]].push_back(comp[i]);
        }
        if (y + 1 < h && comp[i] != comp[i + w]) {
            adj[comp[i]].push_back(comp[i + w]);
            adj[comp[i + w]].push_back(comp[i]);
        }
    }

    std::vector<std::uint32_t> parent(ncomp);
    for (std::uint32_t c = 0; c < ncomp; ++c) parent[c] = c;
    auto find = [&](std::uint32_t c) {
        while (parent[c] != c) c = parent[c] = parent[parent[c]];
        return c;
    };

    const double min_size = min_segment_ratio * g * g;
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::uint32_t c = 0; c < ncomp; ++c) {
            if (parent[c] != c || !(double(size[c]) < min_size)) continue;
            std::uint32_t target = kUnassigned;
            for (auto nb : adj[c]) {
                const auto r = find(nb);
                if (r == c) continue;
                if (target == kUnassigned || size[r] > size[target] || (size[r] == size[target] && r < target)) {
                    target = r;
                }
            }
            if (target == kUnassigned) continue;  // sole component
            parent[c] = target;
            size[target] += size[c];
            auto& dst = adj[target];
            dst.insert(dst.end(), adj[c].begin(), adj[c].end());
            std::erase_if(dst, [&](std::uint32_t v) { return find(v) == target; });
            std::sort(dst.begin(), dst.end());
            dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
            adj[c].clear();
            merged = true;
        }
    }

    SuperpixelLabeling out{w, h, std::vector<std::uint32_t>(n), 0};
    std::vector<std::uint32_t> remap(ncomp, kUnassigned);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = find(comp[i]);
        if (remap[r] == kUnassigned) remap[r] = out.num_segments++;
        out.labels[i] = remap[r];
    }
    return out;
}

SuperpixelLabeling segment(const RgbImage& img, const SlicParams& p) {
    auto result = cluster(img, p);
    return enforce_connectivity(result.raw, p.min_segment_ratio, grid_interval(img.pixel_count(), p.k));
}

}  // namespace seedforge::slic
