#include "seedforge/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

#include "seedforge/error.hpp"

namespace seedforge {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& raw, const std::string& key) {
    const auto text = trim(raw);
    T v{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (text.empty() || ec != std::errc() || ptr != end) {
        throw Error(ErrorCode::Config, key + ": cannot parse '" + raw + "'");
    }
    return v;
}

bool parse_bool(const std::string& raw, const std::string& key) {
    const auto v = trim(raw);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::Config, key + ": expected true/false, got '" + raw + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
    std::vector<T> out;
    if (trim(text).empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(item, key));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) out += format_float(v[i]);
        else out += std::to_string(v[i]);
    }
    return out;
}

const char* to_text(cam::OperandOrder o) {
    return o == cam::OperandOrder::AffinityTimesCam ? "affinity_cam" : "cam_affinity";
}
const char* to_text(cam::NormalizeMode m) {
    return m == cam::NormalizeMode::AfterAggregation ? "after_aggregation" : "per_scale";
}
const char* to_text(bool b) { return b ? "true" : "false"; }

}  // namespace

std::vector<std::uint32_t> parse_u32_list(const std::string& text) { return parse_list<std::uint32_t>(text, "list"); }
std::vector<float> parse_float_list(const std::string& text) { return parse_list<float>(text, "list"); }

std::string format_float(float v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string format_float(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void PipelineConfig::validate() const {
    if (input_dir.empty()) throw Error(ErrorCode::Config, "pipeline.input_dir is empty");
    if (output_dir.empty()) throw Error(ErrorCode::Config, "pipeline.output_dir is empty");
    try {
        acm.validate();
        for (float c : conflict_rate_sweep) {
            if (!(c >= 0.0f && c <= 1.0f)) throw Error(ErrorCode::Config, "acm.conflict_rate_sweep values must be in [0, 1]");
        }
        // k is taken from the schedule; validate the remaining fields with k = 1.
        slic::SlicParams s = slic;
        s.k = 1;
        s.validate(1);
        schedule.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, e.what());
    }
    if (num_classes > 255) throw Error(ErrorCode::Config, "eval.num_classes must be <= 255");
}

void PipelineConfig::set(const std::string& dotted_key, const std::string& value) {
    const auto& k = dotted_key;
    const auto v = trim(value);
    if (k == "pipeline.input_dir") input_dir = v;
    else if (k == "pipeline.output_dir") output_dir = v;
    else if (k == "pipeline.seed") seed = parse_number<std::uint64_t>(v, k);
    else if (k == "refine.operand_order") {
        if (v == "affinity_cam") operand_order = cam::OperandOrder::AffinityTimesCam;
        else if (v == "cam_affinity") operand_order = cam::OperandOrder::CamTimesAffinity;
        else throw Error(ErrorCode::Config, k + ": expected affinity_cam or cam_affinity");
    } else if (k == "refine.normalize") {
        if (v == "after_aggregation") normalize = cam::NormalizeMode::AfterAggregation;
        else if (v == "per_scale") normalize = cam::NormalizeMode::PerScale;
        else throw Error(ErrorCode::Config, k + ": expected after_aggregation or per_scale");
    } else if (k == "refine.clamp_negative") clamp_negative = parse_bool(v, k);
    else if (k == "acm.conflict_rate") acm.conflict_rate = parse_number<float>(v, k);
    else if (k == "acm.bg_threshold") {
        const auto t = parse_number<std::uint32_t>(v, k);
        if (t > 255) throw Error(ErrorCode::Config, k + " must be in [0, 255]");
        acm.bg_threshold = static_cast<std::uint8_t>(t);
    } else if (k == "acm.seed_bg_alpha") acm.seed_bg_alpha = parse_number<float>(v, k);
    else if (k == "acm.use_saliency") use_saliency = parse_bool(v, k);
    else if (k == "acm.conflict_rate_sweep") conflict_rate_sweep = parse_list<float>(v, k);
    else if (k == "eval.num_classes") num_classes = parse_number<std::uint32_t>(v, k);
    else if (k == "eval.count_ignored_as_error") count_ignored_as_error = parse_bool(v, k);
    else if (k == "slic.compactness") slic.compactness = parse_number<double>(v, k);
    else if (k == "slic.max_iters") slic.max_iters = parse_number<std::uint32_t>(v, k);
    else if (k == "slic.min_segment_ratio") slic.min_segment_ratio = parse_number<double>(v, k);
    else if (k == "mecp.schedule") schedule.ks = parse_list<std::uint32_t>(v, k);
    else if (k == "mecp.hide_prob") schedule.hide_prob = parse_number<double>(v, k);
    else throw Error(ErrorCode::Config, "unknown config key '" + k + "'");
}

std::string PipelineConfig::dump() const {
    std::ostringstream o;
    o << "; seedforge pipeline configuration\n"
      << "[pipeline]\n"
      << "input_dir = " << input_dir.generic_string() << "\n"
      << "output_dir = " << output_dir.generic_string() << "\n"
      << "seed = " << seed << "\n\n"
      << "[refine]\n"
      << "operand_order = " << to_text(operand_order) << "\n"
      << "normalize = " << to_text(normalize) << "\n"
      << "clamp_negative = " << to_text(clamp_negative) << "\n\n"
      << "[acm]\n"
      << "conflict_rate = " << format_float(acm.conflict_rate) << "\n"
      << "bg_threshold = " << unsigned(acm.bg_threshold) << "\n"
      << "seed_bg_alpha = " << format_float(acm.seed_bg_alpha) << "\n"
      << "use_saliency = " << to_text(use_saliency) << "\n"
      << "conflict_rate_sweep = " << join(conflict_rate_sweep) << "\n\n"
      << "[eval]\n"
      << "num_classes = " << num_classes << "\n"
      << "count_ignored_as_error = " << to_text(count_ignored_as_error) << "\n\n"
      << "[slic]\n"
      << "compactness = " << format_float(slic.compactness) << "\n"
      << "max_iters = " << slic.max_iters << "\n"
      << "min_segment_ratio = " << format_float(slic.min_segment_ratio) << "\n\n"
      << "[mecp]\n"
      << "schedule = " << join(schedule.ks) << "\n"
      << "hide_prob = " << format_float(schedule.hide_prob) << "\n";
    return o.str();
}

PipelineConfig PipelineConfig::parse(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorCode::Config, e.what());
    }
    PipelineConfig cfg;
    for (const auto& [section, keys] : tree) {
        if (keys.empty() && !keys.data().empty()) {
            throw Error(ErrorCode::Config, "key '" + section + "' outside of a section");
        }
        for (const auto& [key, node] : keys) cfg.set(section + "." + key, node.data());
    }
    cfg.validate();
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, "cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace seedforge
