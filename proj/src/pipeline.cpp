#include "seedforge/pipeline.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seedforge/acm.hpp"
#include "seedforge/cam.hpp"
#include "seedforge/error.hpp"
#include "seedforge/hash.hpp"
#include "seedforge/io.hpp"
#include "seedforge/parallel.hpp"

namespace seedforge {

namespace fs = std::filesystem;
using nlohmann::json;

Dataset Dataset::load(const fs::path& root) {
    const auto path = root / "dataset.json";
    json j;
    try {
        const auto bytes = io::read_file(path);
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoFailure, path.string() + ": " + e.what());
    }
    Dataset ds;
    ds.root = root;
    try {
        ds.width = j.at("width").get<std::uint32_t>();
        ds.height = j.at("height").get<std::uint32_t>();
        ds.num_classes = j.at("num_classes").get<std::uint32_t>();
        ds.blocks = j.at("blocks").get<std::uint32_t>();
        ds.weights = j.value("weights", std::string("weights.tns"));
        for (const auto& s : j.at("scales")) ds.scales.push_back(s.at("name").get<std::string>());
        for (const auto& im : j.at("images")) {
            Image img;
            img.name = im.at("name").get<std::string>();
            img.id = im.value("id", std::uint64_t(ds.images.size()));
            img.classes = im.at("classes").get<std::vector<std::uint32_t>>();
            ds.images.push_back(std::move(img));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidShape, path.string() + ": " + e.what());
    }
    if (ds.scales.empty() || ds.blocks == 0 || ds.images.empty()) {
        throw Error(ErrorCode::InvalidShape, path.string() + ": needs scales, blocks and images");
    }
    return ds;
}

namespace {

struct ImageResult {
    std::string name;
    json inputs = json::object();
    std::string seeds_sha, labels_sha;
    eval::ConfusionMatrix cm{1};
    std::uint64_t ignored = 0;
    std::vector<eval::ConfusionMatrix> sweep_cm;
    std::vector<std::uint64_t> sweep_ignored, sweep_rule_one;
};

std::string rel(const fs::path& p, const fs::path& root) { return fs::relative(p, root).generic_string(); }

ImageResult process_image(const PipelineConfig& cfg, const Dataset& ds, const Tensor& weights,
                          const Dataset::Image& image, std::uint32_t eval_classes) {
    ImageResult r;
    r.name = image.name;
    auto track = [&](const fs::path& p) {
        r.inputs[rel(p, ds.root)] = hash::sha256_file(p);
        return p;
    };

    const auto net = ds.root / "net" / image.name;
    std::vector<cam::ScaleInput> scales;
    for (const auto& s : ds.scales) {
        cam::ScaleInput in;
        in.features = io::read_tensor(track(net / (s + "_features.tns")));
        for (std::uint32_t b = 0; b < ds.blocks; ++b) {
            in.qk.emplace_back(io::read_tensor(track(net / (s + "_q" + std::to_string(b) + ".tns"))),
                               io::read_tensor(track(net / (s + "_k" + std::to_string(b) + ".tns"))));
        }
        scales.push_back(std::move(in));
    }

    const cam::RefineOptions opts{cfg.operand_order, cfg.normalize, cfg.clamp_negative};
    const auto seeds = cam::refine_multiscale(scales, cam::select_class_rows(weights, image.classes), image.classes,
                                              ds.height, ds.width, opts);
    scales.clear();

    std::optional<GrayImage> saliency;
    if (cfg.use_saliency) saliency = io::read_gray_png(track(ds.root / "saliency" / (image.name + ".png")));
    const auto gt = PseudoLabelMap::from_image(io::read_gray_png(track(ds.root / "gt" / (image.name + ".png"))));
    const GrayImage* sal = saliency ? &*saliency : nullptr;

    const auto labels = acm::apply_acm(seeds, sal, cfg.acm);
    const auto mode = cfg.count_ignored_as_error ? eval::IgnoredPrediction::CountAsMiss : eval::IgnoredPrediction::Skip;
    r.cm = eval::ConfusionMatrix(eval_classes);
    r.cm.accumulate(labels, gt, mode);
    for (auto v : labels.labels) r.ignored += v == kIgnoreLabel;

    for (float rate : cfg.conflict_rate_sweep) {
        auto p = cfg.acm;
        p.conflict_rate = rate;
        acm::ConflictField field;
        const auto swept = acm::apply_acm(seeds, sal, p, &field);
        eval::ConfusionMatrix cm(eval_classes);
        cm.accumulate(swept, gt, mode);
        std::uint64_t ignored = 0, rule_one = 0;
        for (auto v : swept.labels) ignored += v == kIgnoreLabel;
        for (auto e : field.e_fir) rule_one += e > 1;
        r.sweep_cm.push_back(std::move(cm));
        r.sweep_ignored.push_back(ignored);
        r.sweep_rule_one.push_back(rule_one);
    }

    const auto seeds_bytes = io::encode_tensor(seeds.to_tensor());
    io::write_file(seeds_bytes, cfg.output_dir / "seeds" / (image.name + ".tns"));
    r.seeds_sha = hash::sha256(seeds_bytes);
    const auto label_path = cfg.output_dir / "labels" / (image.name + ".png");
    io::write_png(labels.to_image(), label_path);
    r.labels_sha = hash::sha256_file(label_path);
    return r;
}

std::string fmt_metric(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void write_text(const std::string& text, const fs::path& path) {
    io::write_file(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), path);
}

json metric_json(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& cfg, unsigned threads) {
    cfg.validate();
    const auto ds = Dataset::load(cfg.input_dir);
    const std::uint32_t eval_classes = cfg.num_classes ? cfg.num_classes : ds.num_classes + 1;
    const auto weights_path = ds.root / ds.weights;
    const auto weights = io::read_tensor(weights_path);

    fs::create_directories(cfg.output_dir / "seeds");
    fs::create_directories(cfg.output_dir / "labels");

    std::vector<ImageResult> results(ds.images.size());
    parallel_for(ds.images.size(), threads, [&](std::size_t i) {
        try {
            results[i] = process_image(cfg, ds, weights, ds.images[i], eval_classes);
        } catch (const Error& e) {
            throw Error(e.code(), "image " + ds.images[i].name + ": " + e.what());
        }
    });

    // Reduction in dataset order; integer counts only.
    PipelineReport report;
    report.confusion = eval::ConfusionMatrix(eval_classes);
    std::vector<eval::ConfusionMatrix> sweep_cm(cfg.conflict_rate_sweep.size(), eval::ConfusionMatrix(eval_classes));
    std::vector<std::uint64_t> sweep_ignored(sweep_cm.size(), 0), sweep_rule_one(sweep_cm.size(), 0);
    for (const auto& r : results) {
        report.confusion += r.cm;
        report.ignored_pixels += r.ignored;
        for (std::size_t s = 0; s < sweep_cm.size(); ++s) {
            sweep_cm[s] += r.sweep_cm[s];
            sweep_ignored[s] += r.sweep_ignored[s];
            sweep_rule_one[s] += r.sweep_rule_one[s];
        }
    }
    report.metrics = eval::miou(report.confusion);
    for (std::size_t s = 0; s < sweep_cm.size(); ++s) {
        report.sweep.push_back({cfg.conflict_rate_sweep[s], eval::miou(sweep_cm[s]).mean, sweep_ignored[s],
                                sweep_rule_one[s]});
    }

    std::string csv = "class_id,iou\n";
    for (std::uint32_t c = 0; c < eval_classes; ++c) {
        csv += std::to_string(c) + "," + fmt_metric(report.metrics.per_class[c]) + "\n";
    }
    csv += "mean," + fmt_metric(report.metrics.mean) + "\n";
    write_text(csv, cfg.output_dir / "metrics.csv");
    if (!report.sweep.empty()) {
        std::string sweep = "conflict_rate,miou,ignored_pixels,rule_one_pixels\n";
        for (const auto& row : report.sweep) {
            sweep += format_float(row.conflict_rate) + "," + fmt_metric(row.miou) + "," +
                     std::to_string(row.ignored_pixels) + "," + std::to_string(row.rule_one_pixels) + "\n";
        }
        write_text(sweep, cfg.output_dir / "sweep.csv");
    }

    json m;
    m["format"] = "seedforge-manifest/1";
    // The manifest describes the output tree from inside, so it must not
    // depend on where that tree was written.
    auto recorded = cfg;
    recorded.output_dir = ".";
    m["config"] = recorded.dump();
    m["dataset"] = {{"dataset.json", hash::sha256_file(ds.root / "dataset.json")},
                    {ds.weights, hash::sha256_file(weights_path)}};
    json images = json::array();
    for (const auto& r : results) {
        images.push_back({{"name", r.name},
                          {"inputs", r.inputs},
                          {"outputs", {{"seeds/" + r.name + ".tns", r.seeds_sha}, {"labels/" + r.name + ".png", r.labels_sha}}},
                          {"ignored_pixels", r.ignored}});
    }
    m["images"] = images;
    json per_class = json::array();
    for (double v : report.metrics.per_class) per_class.push_back(metric_json(v));
    json confusion = json::array();
    for (std::uint32_t g = 0; g < eval_classes; ++g) {
        json row = json::array();
        for (std::uint32_t p = 0; p < eval_classes; ++p) row.push_back(report.confusion.at(g, p));
        confusion.push_back(row);
    }
    m["metrics"] = {{"num_classes", eval_classes},
                    {"per_class_iou", per_class},
                    {"miou", metric_json(report.metrics.mean)},
                    {"ignored_pixels", report.ignored_pixels},
                    {"confusion", confusion}};
    json sweep = json::array();
    for (const auto& row : report.sweep) {
        sweep.push_back({{"conflict_rate", std::stod(format_float(row.conflict_rate))},
                         {"miou", metric_json(row.miou)},
                         {"ignored_pixels", row.ignored_pixels},
                         {"rule_one_pixels", row.rule_one_pixels}});
    }
    m["sweep"] = sweep;
    const auto text = m.dump(2) + "\n";
    write_text(text, cfg.output_dir / "manifest.json");
    report.manifest_sha256 = hash::sha256(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return report;
}

}  // namespace seedforge
