#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seedforge/config.hpp"
#include "seedforge/eval.hpp"

namespace seedforge {

/// dataset.json plus the directory it lives in.
///
/// Layout (all names relative to `root`):
///   dataset.json, weights.tns (num_classes x f_c),
///   gt/<name>.png, saliency/<name>.png,
///   net/<name>/<scale>_features.tns, net/<name>/<scale>_q<n>.tns, <scale>_k<n>.tns
struct Dataset {
    struct Image {
        std::string name;
        std::uint64_t id = 0;
        std::vector<std::uint32_t> classes;
    };

    std::filesystem::path root;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t num_classes = 0;  // foreground
    std::uint32_t blocks = 0;
    std::vector<std::string> scales;
    std::string weights = "weights.tns";
    std::vector<Image> images;

    static Dataset load(const std::filesystem::path& root);
};

struct SweepRow {
    float conflict_rate;
    double miou;
    std::uint64_t ignored_pixels;   // 255 from either rule
    std::uint64_t rule_one_pixels;  // 255 from the inter-class rule
};

struct PipelineReport {
    eval::ConfusionMatrix confusion{1};
    eval::MiouResult metrics;
    std::vector<SweepRow> sweep;
    std::uint64_t ignored_pixels = 0;
    std::string manifest_sha256;
};

/// refine -> acm -> eval over every image of cfg.input_dir. Writes
///   seeds/<name>.tns, labels/<name>.png, metrics.csv, [sweep.csv], manifest.json
/// under cfg.output_dir. Results do not depend on `threads`.
PipelineReport run_pipeline(const PipelineConfig& cfg, unsigned threads);

}  // namespace seedforge
