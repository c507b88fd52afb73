#include "seedforge/cam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "seedforge/error.hpp"

namespace seedforge::cam {

Tensor CamStack::to_tensor() const {
    return Tensor({classes, height, width}, maps);
}

CamStack CamStack::from_tensor(const Tensor& t, std::vector<std::uint32_t> class_ids) {
    if (t.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "seed/CAM tensor must be B x H x W");
    CamStack s{t.dim(0), t.dim(1), t.dim(2), {t.data().begin(), t.data().end()}, std::move(class_ids)};
    if (s.class_ids.empty()) {
        s.class_ids.resize(s.classes);
        std::iota(s.class_ids.begin(), s.class_ids.end(), 1u);
    }
    if (s.class_ids.size() != s.classes) {
        throw Error(ErrorCode::ClassMismatch, std::to_string(s.class_ids.size()) + " class ids for " +
                                                  std::to_string(s.classes) + " maps");
    }
    return s;
}

AffinityMap AffinityMap::identity(std::uint32_t n) {
    AffinityMap a{n, std::vector<float>(std::size_t(n) * n, 0.0f)};
    for (std::uint32_t i = 0; i < n; ++i) a.values[std::size_t(i) * n + i] = 1.0f;
    return a;
}

AffinityMap AffinityMap::uniform(std::uint32_t n) {
    return {n, std::vector<float>(std::size_t(n) * n, 1.0f / float(n))};
}

void ScaleSet::validate() const {
    if (scales.empty()) throw Error(ErrorCode::InvalidArgument, "scale set is empty");
    for (auto s : scales) {
        if (s == 0) throw Error(ErrorCode::InvalidArgument, "scales must be > 0");
    }
}

CamStack compute_cam(const Tensor& features, const Tensor& weights, std::vector<std::uint32_t> class_ids) {
    if (features.rank() != 3) throw Error(ErrorCode::DimMismatch, "features must be f_c x f_h x f_w");
    if (weights.rank() != 2) throw Error(ErrorCode::DimMismatch, "weights must be B x f_c");
    const std::uint32_t fc = features.dim(0);
    if (weights.dim(1) != fc) {
        throw Error(ErrorCode::DimMismatch, "weights have " + std::to_string(weights.dim(1)) +
                                                " channels, features have " + std::to_string(fc));
    }
    const std::uint32_t nb = weights.dim(0);
    Tensor out({nb, features.dim(1), features.dim(2)});
    auto cam = CamStack::from_tensor(out, std::move(class_ids));
    const std::size_t plane = cam.plane();
    const auto f = features.data();
    const auto w = weights.data();
    // Channel-outer accumulation keeps the per-element summation order c = 0..f_c-1.
    for (std::uint32_t b = 0; b < nb; ++b) {
        auto dst = cam.map(b);
        for (std::uint32_t c = 0; c < fc; ++c) {
            const float wc = w[std::size_t(b) * fc + c];
            const float* src = f.data() + std::size_t(c) * plane;
            for (std::size_t p = 0; p < plane; ++p) dst[p] += wc * src[p];
        }
    }
    return cam;
}

AffinityMap affinity_from_qk(const Tensor& q, const Tensor& k) {
    if (q.rank() != 2 || k.rank() != 2 || q.shape() != k.shape()) {
        throw Error(ErrorCode::DimMismatch, "Q and K must both be (1+s) x D with equal shapes");
    }
    const std::uint32_t n = q.dim(0), d = q.dim(1);
    const double scale = 1.0 / std::sqrt(double(d));
    AffinityMap a{n, std::vector<float>(std::size_t(n) * n)};
    std::vector<double> row(n);
    const auto qd = q.data();
    const auto kd = k.data();
    for (std::uint32_t i = 0; i < n; ++i) {
        const float* qi = qd.data() + std::size_t(i) * d;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::uint32_t j = 0; j < n; ++j) {
            const float* kj = kd.data() + std::size_t(j) * d;
            double dot = 0.0;
            for (std::uint32_t c = 0; c < d; ++c) dot += double(qi[c]) * kj[c];
            row[j] = dot * scale;
            mx = std::max(mx, row[j]);
        }
        double z = 0.0;
        for (auto& v : row) {
            v = std::exp(v - mx);
            z += v;
        }
        float* dst = a.values.data() + std::size_t(i) * n;
        for (std::uint32_t j = 0; j < n; ++j) dst[j] = static_cast<float>(row[j] / z);
    }
    return a;
}

void AffinityAverager::add(const AffinityMap& a) {
    if (count_ == 0) {
        size_ = a.size;
        sum_.assign(a.values.size(), 0.0);
    } else if (a.size != size_) {
        throw Error(ErrorCode::SizeMismatch, "affinity maps differ in size");
    }
    for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += a.values[i];
    ++count_;
}

AffinityMap AffinityAverager::result() const {
    if (count_ == 0) throw Error(ErrorCode::EmptyList, "no affinity maps to average");
    AffinityMap out{size_, std::vector<float>(sum_.size())};
    const double inv = 1.0 / double(count_);
    for (std::size_t i = 0; i < sum_.size(); ++i) out.values[i] = static_cast<float>(sum_[i] * inv);
    return out;
}

AffinityMap average_affinity(std::span<const AffinityMap> blocks) {
    AffinityAverager avg;
    for (const auto& a : blocks) avg.add(a);
    return avg.result();
}

AffinityMap strip_class_token(const AffinityMap& a) {
    if (a.size < 2) throw Error(ErrorCode::TooSmall, "affinity needs the class token plus at least one patch");
    const std::uint32_t s = a.size - 1;
    AffinityMap out{s, std::vector<float>(std::size_t(s) * s)};
    for (std::uint32_t i = 0; i < s; ++i) {
        const float* src = a.values.data() + std::size_t(i + 1) * a.size + 1;
        std::copy(src, src + s, out.values.begin() + std::size_t(i) * s);
    }
    return out;
}

CamStack refine_cam(const CamStack& cam, const AffinityMap& a_star, OperandOrder order) {
    const std::size_t s = cam.plane();
    if (a_star.size != s) {
        throw Error(ErrorCode::ShapeMismatch, "affinity is " + std::to_string(a_star.size) + "^2 but CAM has " +
                                                  std::to_string(s) + " patches");
    }
    CamStack out = cam;
    const float* a = a_star.values.data();
    std::vector<double> acc(s);
    for (std::uint32_t b = 0; b < cam.classes; ++b) {
        const auto m = cam.map(b);
        if (order == OperandOrder::AffinityTimesCam) {
            for (std::size_t i = 0; i < s; ++i) {
                const float* row = a + i * s;
                double v = 0.0;
                for (std::size_t j = 0; j < s; ++j) v += double(row[j]) * m[j];
                acc[i] = v;
            }
        } else {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = 0; i < s; ++i) {
                const float* row = a + i * s;
                const double mi = m[i];
                for (std::size_t j = 0; j < s; ++j) acc[j] += mi * row[j];
            }
        }
        auto dst = out.map(b);
        for (std::size_t i = 0; i < s; ++i) dst[i] = static_cast<float>(acc[i]);
    }
    return out;
}

CamStack clamp_nonnegative(CamStack cam) {
    for (auto& v : cam.maps) v = std::max(v, 0.0f);
    return cam;
}

CamStack normalize_cam(CamStack cam) {
    for (std::uint32_t b = 0; b < cam.classes; ++b) {
        auto m = cam.map(b);
        const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
        const double mn = *lo, mx = *hi;
        if (!(mx > mn)) {
            std::fill(m.begin(), m.end(), 0.0f);
            continue;
        }
        const double range = mx - mn;
        for (auto& v : m) v = static_cast<float>((double(v) - mn) / range);
    }
    return cam;
}

namespace {

struct Tap {
    std::uint32_t i0, i1;
    double t;
};

std::vector<Tap> bilinear_taps(std::uint32_t in, std::uint32_t out) {
    std::vector<Tap> taps(out);
    const double ratio = double(in) / double(out);
    for (std::uint32_t o = 0; o < out; ++o) {
        const double src = std::clamp((o + 0.5) * ratio - 0.5, 0.0, double(in - 1));
        const auto i0 = static_cast<std::uint32_t>(std::floor(src));
        taps[o] = {i0, std::min(i0 + 1, in - 1), src - i0};
    }
    return taps;
}

}  // namespace

CamStack resize_bilinear(const CamStack& cam, std::uint32_t height, std::uint32_t width) {
    if (height == 0 || width == 0) throw Error(ErrorCode::InvalidShape, "resize target must be non-empty");
    if (height == cam.height && width == cam.width) return cam;
    const auto ty = bilinear_taps(cam.height, height);
    const auto tx = bilinear_taps(cam.width, width);
    CamStack out{cam.classes, height, width, std::vector<float>(std::size_t(cam.classes) * height * width),
                 cam.class_ids};
    for (std::uint32_t b = 0; b < cam.classes; ++b) {
        const auto src = cam.map(b);
        auto dst = out.map(b);
        for (std::uint32_t y = 0; y < height; ++y) {
            const auto& ry = ty[y];
            const float* r0 = src.data() + std::size_t(ry.i0) * cam.width;
            const float* r1 = src.data() + std::size_t(ry.i1) * cam.width;
            for (std::uint32_t x = 0; x < width; ++x) {
                const auto& rx = tx[x];
                const double top = r0[rx.i0] * (1.0 - rx.t) + r0[rx.i1] * rx.t;
                const double bot = r1[rx.i0] * (1.0 - rx.t) + r1[rx.i1] * rx.t;
                dst[std::size_t(y) * width + x] = static_cast<float>(top * (1.0 - ry.t) + bot * ry.t);
            }
        }
    }
    return out;
}

CamStack multiscale_aggregate(std::span<const CamStack> stacks, std::uint32_t height, std::uint32_t width,
                              NormalizeMode mode) {
    if (stacks.empty()) throw Error(ErrorCode::EmptyList, "no CAM stacks to aggregate");
    const auto& ids = stacks.front().class_ids;
    std::vector<double> sum(std::size_t(stacks.front().classes) * height * width, 0.0);
    for (const auto& s : stacks) {
        if (s.class_ids != ids) throw Error(ErrorCode::ClassMismatch, "scales disagree on the class list");
        auto resized = resize_bilinear(s, height, width);
        if (mode == NormalizeMode::PerScale) resized = normalize_cam(std::move(resized));
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += resized.maps[i];
    }
    CamStack out{stacks.front().classes, height, width, std::vector<float>(sum.size()), ids};
    const double inv = 1.0 / double(stacks.size());
    for (std::size_t i = 0; i < sum.size(); ++i) out.maps[i] = static_cast<float>(sum[i] * inv);
    return normalize_cam(std::move(out));
}

Tensor select_class_rows(const Tensor& weights, std::span<const std::uint32_t> class_ids) {
    if (weights.rank() != 2) throw Error(ErrorCode::DimMismatch, "weights must be classes x f_c");
    if (class_ids.empty()) throw Error(ErrorCode::EmptyList, "no classes selected");
    const std::uint32_t fc = weights.dim(1);
    std::vector<float> rows;
    rows.reserve(class_ids.size() * fc);
    for (auto id : class_ids) {
        if (id == 0 || id > weights.dim(0)) {
            throw Error(ErrorCode::ClassOutOfRange, "class " + std::to_string(id) + " has no weight row");
        }
        const auto row = weights.data().subspan(std::size_t(id - 1) * fc, fc);
        rows.insert(rows.end(), row.begin(), row.end());
    }
    return Tensor({static_cast<std::uint32_t>(class_ids.size()), fc}, std::move(rows));
}

CamStack refine_multiscale(std::span<const ScaleInput> scales, const Tensor& weights,
                           const std::vector<std::uint32_t>& class_ids, std::uint32_t height, std::uint32_t width,
                           const RefineOptions& options) {
    if (scales.empty()) throw Error(ErrorCode::EmptyList, "no scales given");
    std::vector<CamStack> refined;
    refined.reserve(scales.size());
    for (const auto& scale : scales) {
        if (scale.qk.empty()) throw Error(ErrorCode::EmptyList, "scale has no Q/K blocks");
        auto cam = compute_cam(scale.features, weights, class_ids);
        AffinityAverager avg;
        for (const auto& [q, k] : scale.qk) avg.add(affinity_from_qk(q, k));
        auto out = refine_cam(cam, strip_class_token(avg.result()), options.order);
        if (options.clamp_negative) out = clamp_nonnegative(std::move(out));
        refined.push_back(std::move(out));
    }
    return multiscale_aggregate(refined, height, width, options.normalize);
}

}  // namespace seedforge::cam
