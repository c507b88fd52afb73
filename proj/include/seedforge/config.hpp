#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seedforge/acm.hpp"
#include "seedforge/cam.hpp"
#include "seedforge/mecp.hpp"
#include "seedforge/slic.hpp"

namespace seedforge {

/// Every tunable of the pipeline, one field per config key.
///
/// The text form is INI with one section per stage; `dump()` prints every
/// key with its current value, so `PipelineConfig{}.dump()` lists all
/// defaults. Unknown sections or keys are rejected.
struct PipelineConfig {
    // [pipeline]
    std::filesystem::path input_dir = "fixtures";
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;

    // [refine]
    cam::OperandOrder operand_order = cam::OperandOrder::AffinityTimesCam;
    cam::NormalizeMode normalize = cam::NormalizeMode::AfterAggregation;
    bool clamp_negative = true;

    // [acm]
    acm::AcmParams acm;
    bool use_saliency = true;
    std::vector<float> conflict_rate_sweep;  // empty: no sweep

    // [eval]
    std::uint32_t num_classes = 0;  // including background; 0 = dataset classes + 1
    bool count_ignored_as_error = false;

    // [slic] / [mecp]: training-time augmentation settings. The pipeline
    // never applies MECP; they are validated and recorded in the manifest.
    slic::SlicParams slic;
    mecp::EstimationSchedule schedule;

    void validate() const;

    /// Applies one "section.key = value" assignment.
    void set(const std::string& dotted_key, const std::string& value);

    std::string dump() const;

    static PipelineConfig parse(const std::string& text);
    static PipelineConfig load(const std::filesystem::path& path);
};

/// Comma-separated list parsing shared by the config and the CLI. Throws
/// Config on malformed entries.
std::vector<std::uint32_t> parse_u32_list(const std::string& text);
std::vector<float> parse_float_list(const std::string& text);
/// Shortest round-trip text for the value.
std::string format_float(double v);
std::string format_float(float v);

}  // namespace seedforge
