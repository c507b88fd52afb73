// seedforge: command-line front end.
//
// Exit codes: 0 ok, 2 configuration/usage error, 3 data error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "seedforge/acm.hpp"
#include "seedforge/cam.hpp"
#include "seedforge/config.hpp"
#include "seedforge/error.hpp"
#include "seedforge/eval.hpp"
#include "seedforge/fixtures.hpp"
#include "seedforge/io.hpp"
#include "seedforge/mecp.hpp"
#include "seedforge/parallel.hpp"
#include "seedforge/pipeline.hpp"
#include "seedforge/slic.hpp"

namespace fs = std::filesystem;
using namespace seedforge;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
    return out;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

int run_slic(const slic::SlicParams& p, const fs::path& in, const fs::path& out) {
    const auto img = io::read_rgb_png(in);
    const auto seg = slic::segment(img, p);
    if (seg.num_segments > 255) {
        std::vector<float> data(seg.labels.begin(), seg.labels.end());
        auto path = out;
        path.replace_extension(".tns");
        io::write_tensor(Tensor({seg.height, seg.width}, std::move(data)), path);
        std::cout << "segments " << seg.num_segments << " (tensor " << path.string() << ")\n";
        return 0;
    }
    GrayImage labels(seg.width, seg.height);
    std::transform(seg.labels.begin(), seg.labels.end(), labels.pixels().begin(),
                   [](std::uint32_t v) { return static_cast<std::uint8_t>(v); });
    io::write_png(labels, out);
    std::cout << "segments " << seg.num_segments << "\n";
    return 0;
}

struct RefineArgs {
    std::vector<std::string> features;
    std::vector<std::string> qk;
    std::string weights;
    std::vector<std::uint32_t> scales;
    std::vector<std::uint32_t> classes;
    std::vector<std::uint32_t> size;
    std::string order = "affinity_cam";
    std::string normalize = "after_aggregation";
    bool no_clamp = false;
    std::string out;
};

int run_refine(const RefineArgs& a) {
    if (a.features.size() != a.qk.size()) {
        throw Error(ErrorCode::Config, "give one --qk list per --features file");
    }
    if (!a.scales.empty()) {
        cam::ScaleSet{a.scales}.validate();
        if (a.scales.size() != a.features.size()) {
            throw Error(ErrorCode::Config, "--scales lists " + std::to_string(a.scales.size()) + " scales but " +
                                               std::to_string(a.features.size()) + " feature files were given");
        }
    }
    std::vector<cam::ScaleInput> inputs;
    std::uint32_t h = 0, w = 0;
    for (std::size_t i = 0; i < a.features.size(); ++i) {
        cam::ScaleInput in;
        in.features = io::read_tensor(a.features[i]);
        const auto files = split(a.qk[i], ',');
        if (files.empty() || files.size() % 2 != 0) {
            throw Error(ErrorCode::Config, "--qk needs Q,K pairs");
        }
        for (std::size_t f = 0; f < files.size(); f += 2) {
            in.qk.emplace_back(io::read_tensor(files[f]), io::read_tensor(files[f + 1]));
        }
        if (in.features.rank() == 3 && std::size_t(in.features.dim(1)) * in.features.dim(2) > std::size_t(h) * w) {
            h = in.features.dim(1);
            w = in.features.dim(2);
        }
        inputs.push_back(std::move(in));
    }
    if (!a.size.empty()) {
        if (a.size.size() != 2) throw Error(ErrorCode::Config, "--size takes H,W");
        h = a.size[0];
        w = a.size[1];
    }
    const auto weights = io::read_tensor(a.weights);
    cam::RefineOptions opts;
    PipelineConfig tmp;
    tmp.set("refine.operand_order", a.order);
    tmp.set("refine.normalize", a.normalize);
    opts.order = tmp.operand_order;
    opts.normalize = tmp.normalize;
    opts.clamp_negative = !a.no_clamp;
    const auto seeds = cam::refine_multiscale(inputs, weights, a.classes, h, w, opts);
    io::write_tensor(seeds.to_tensor(), a.out);
    std::cout << "seeds " << seeds.classes << "x" << seeds.height << "x" << seeds.width << "\n";
    return 0;
}

int run_eval(const fs::path& pred_dir, const fs::path& gt_dir, std::uint32_t classes, const std::string& csv,
             bool strict) {
    std::vector<fs::path> names;
    for (const auto& e : fs::directory_iterator(gt_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png") names.push_back(e.path().filename());
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) throw Error(ErrorCode::IoFailure, "no PNG files in " + gt_dir.string());
    eval::ConfusionMatrix cm(classes);
    const auto mode = strict ? eval::IgnoredPrediction::CountAsMiss : eval::IgnoredPrediction::Skip;
    for (const auto& n : names) {
        const auto gt = PseudoLabelMap::from_image(io::read_gray_png(gt_dir / n));
        const auto pred = PseudoLabelMap::from_image(io::read_gray_png(pred_dir / n));
        try {
            cm.accumulate(pred, gt, mode);
        } catch (const Error& e) {
            throw Error(e.code(), n.string() + ": " + e.what());
        }
    }
    const auto r = eval::miou(cm);
    std::string text = "class_id,iou\n";
    for (std::uint32_t c = 0; c < classes; ++c) text += std::to_string(c) + "," + fmt(r.per_class[c]) + "\n";
    text += "mean," + fmt(r.mean) + "\n";
    std::cout << text;
    if (!csv.empty()) {
        io::write_file(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), csv);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seedforge: superpixel patch masking, affinity CAM refinement and conflict-aware pseudo labels"};
    app.require_subcommand(1);

    // slic
    slic::SlicParams slic_p;
    std::string slic_in, slic_out;
    auto* slic_cmd = app.add_subcommand("slic", "SLIC superpixels of an RGB PNG");
    slic_cmd->add_option("--k", slic_p.k, "target cluster count")->required();
    slic_cmd->add_option("--compactness", slic_p.compactness, "spatial vs colour weight m")->capture_default_str();
    slic_cmd->add_option("--iters", slic_p.max_iters, "iteration cap")->capture_default_str();
    slic_cmd->add_option("--min-segment-ratio", slic_p.min_segment_ratio, "merge threshold as a fraction of g^2")
        ->capture_default_str();
    slic_cmd->add_option("input", slic_in, "RGB PNG")->required();
    slic_cmd->add_option("output", slic_out, "label PNG (tensor container when > 255 segments)")->required();

    // mecp
    mecp::EstimationSchedule schedule;
    slic::SlicParams mecp_slic;
    std::uint32_t epoch = 0;
    std::uint64_t mecp_seed = 0, image_id = 0;
    std::string schedule_text = "200,250,300,350,400";
    std::string mecp_in, mecp_cp, mecp_cpbar;
    auto* mecp_cmd = app.add_subcommand("mecp", "complementary patch pair for one epoch");
    mecp_cmd->add_option("--epoch", epoch)->required();
    mecp_cmd->add_option("--seed", mecp_seed)->capture_default_str();
    mecp_cmd->add_option("--image-id", image_id)->capture_default_str();
    mecp_cmd->add_option("--schedule", schedule_text, "k per epoch slot")->capture_default_str();
    mecp_cmd->add_option("--hide-prob", schedule.hide_prob)->capture_default_str();
    mecp_cmd->add_option("--compactness", mecp_slic.compactness)->capture_default_str();
    mecp_cmd->add_option("--iters", mecp_slic.max_iters)->capture_default_str();
    mecp_cmd->add_option("--min-segment-ratio", mecp_slic.min_segment_ratio)->capture_default_str();
    mecp_cmd->add_option("input", mecp_in)->required();
    mecp_cmd->add_option("out_cp", mecp_cp)->required();
    mecp_cmd->add_option("out_cpbar", mecp_cpbar)->required();

    // refine
    RefineArgs ra;
    std::string scales_text, classes_text, size_text;
    auto* refine_cmd = app.add_subcommand("refine", "CAM + attention-affinity refinement to seed maps");
    refine_cmd->add_option("--features", ra.features, "f_c x f_h x f_w tensor; repeat once per scale")->required();
    refine_cmd->add_option("--qk", ra.qk, "Q1,K1[,Q2,K2...] per scale; repeat once per scale")->required();
    refine_cmd->add_option("--weights", ra.weights, "B x f_c classifier weights")->required();
    refine_cmd->add_option("--scales", scales_text, "input side length of each scale, e.g. 256,512,768");
    refine_cmd->add_option("--classes", classes_text, "dataset class id of each weight row (default 1..B)");
    refine_cmd->add_option("--size", size_text, "output H,W (default: largest feature grid)");
    refine_cmd->add_option("--operand-order", ra.order, "affinity_cam | cam_affinity")->capture_default_str();
    refine_cmd->add_option("--normalize", ra.normalize, "after_aggregation | per_scale")->capture_default_str();
    refine_cmd->add_flag("--no-clamp", ra.no_clamp, "keep negative refined activations");
    refine_cmd->add_option("--out", ra.out, "B x H x W seed tensor")->required();

    // acm
    acm::AcmParams acm_p;
    std::string seeds_path, acm_classes, saliency_path, acm_out;
    unsigned tbg = acm_p.bg_threshold;
    auto* acm_cmd = app.add_subcommand("acm", "conflict-aware pseudo labels from seed maps");
    acm_cmd->add_option("--seeds", seeds_path)->required();
    acm_cmd->add_option("--classes", acm_classes, "class id per seed map, e.g. 3,7,12");
    acm_cmd->add_option("--saliency", saliency_path, "grayscale saliency PNG");
    acm_cmd->add_option("--conflict-rate", acm_p.conflict_rate)->capture_default_str();
    acm_cmd->add_option("--tbg", tbg, "saliency background threshold")->check(CLI::Range(0u, 255u))->capture_default_str();
    acm_cmd->add_option("--alpha", acm_p.seed_bg_alpha, "seed background threshold")->capture_default_str();
    acm_cmd->add_option("--out", acm_out, "label PNG")->required();

    // eval
    std::string pred_dir, gt_dir, eval_csv;
    std::uint32_t eval_classes = 21;
    bool strict = false;
    auto* eval_cmd = app.add_subcommand("eval", "confusion matrix and mIoU over label directories");
    eval_cmd->add_option("--pred-dir", pred_dir)->required();
    eval_cmd->add_option("--gt-dir", gt_dir)->required();
    eval_cmd->add_option("--classes", eval_classes, "class count including background")->capture_default_str();
    eval_cmd->add_option("--csv", eval_csv);
    eval_cmd->add_flag("--count-ignored-as-error", strict, "score predicted 255 against the true class");

    // pipeline
    std::string config_path;
    std::vector<std::string> overrides;
    bool dump_config = false;
    auto* pipe_cmd = app.add_subcommand("pipeline", "refine -> acm -> eval over a dataset directory");
    pipe_cmd->add_option("--config", config_path, "INI config");
    pipe_cmd->add_option("--set", overrides, "section.key=value override (repeatable)");
    pipe_cmd->add_flag("--dump-config", dump_config, "print the effective config and exit");

    // fixtures
    fixtures::FixtureSpec fx;
    std::uint64_t fx_seed = 0;
    std::string fx_out, strides_text = "4,2,1";
    auto* fx_cmd = app.add_subcommand("fixtures", "deterministic synthetic dataset");
    fx_cmd->add_option("--seed", fx_seed)->capture_default_str();
    fx_cmd->add_option("--count", fx.count)->capture_default_str();
    fx_cmd->add_option("--width", fx.width)->capture_default_str();
    fx_cmd->add_option("--height", fx.height)->capture_default_str();
    fx_cmd->add_option("--classes", fx.num_classes, "foreground classes")->capture_default_str();
    fx_cmd->add_option("--noise", fx.noise)->capture_default_str();
    fx_cmd->add_flag("--overlap", fx.overlap, "neighbouring blobs share a strip");
    fx_cmd->add_option("--strides", strides_text, "pixels per feature cell, one per scale")->capture_default_str();
    fx_cmd->add_option("--blocks", fx.blocks, "Q/K pairs per scale")->capture_default_str();
    fx_cmd->add_option("--out", fx_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*slic_cmd) return run_slic(slic_p, slic_in, slic_out);
        if (*mecp_cmd) {
            schedule.ks = parse_u32_list(schedule_text);
            const auto img = io::read_rgb_png(mecp_in);
            const auto pair = mecp::mecp_for_epoch(img, schedule, epoch, mecp_seed, image_id, mecp_slic);
            io::write_png(pair.cp, mecp_cp);
            io::write_png(pair.cp_bar, mecp_cpbar);
            std::cout << "k " << mecp::k_for_epoch(schedule, epoch) << "\n";
            return 0;
        }
        if (*refine_cmd) {
            ra.scales = parse_u32_list(scales_text);
            ra.classes = parse_u32_list(classes_text);
            ra.size = parse_u32_list(size_text);
            return run_refine(ra);
        }
        if (*acm_cmd) {
            acm_p.bg_threshold = static_cast<std::uint8_t>(tbg);
            const auto seeds = cam::CamStack::from_tensor(io::read_tensor(seeds_path), parse_u32_list(acm_classes));
            std::optional<GrayImage> sal;
            if (!saliency_path.empty()) sal = io::read_gray_png(saliency_path);
            const auto labels = acm::apply_acm(seeds, sal, acm_p);
            io::write_png(labels.to_image(), acm_out);
            std::size_t ignored = std::count(labels.labels.begin(), labels.labels.end(), kIgnoreLabel);
            std::cout << "ignored " << ignored << "\n";
            return 0;
        }
        if (*eval_cmd) return run_eval(pred_dir, gt_dir, eval_classes, eval_csv, strict);
        if (*pipe_cmd) {
            auto cfg = config_path.empty() ? PipelineConfig{} : PipelineConfig::load(config_path);
            for (const auto& o : overrides) {
                const auto eq = o.find('=');
                if (eq == std::string::npos) throw Error(ErrorCode::Config, "--set expects section.key=value");
                cfg.set(o.substr(0, eq), o.substr(eq + 1));
            }
            cfg.validate();
            if (dump_config) {
                std::cout << cfg.dump();
                return 0;
            }
            const auto report = run_pipeline(cfg, worker_count());
            std::cout << "miou " << fmt(report.metrics.mean) << "\n"
                      << "ignored " << report.ignored_pixels << "\n"
                      << "manifest " << report.manifest_sha256 << "\n";
            for (const auto& row : report.sweep) {
                std::cout << "sweep " << format_float(row.conflict_rate) << " miou " << fmt(row.miou) << " ignored "
                          << row.ignored_pixels << "\n";
            }
            return 0;
        }
        if (*fx_cmd) {
            fx.strides = parse_u32_list(strides_text);
            fixtures::generate_fixtures(fx_seed, fx, fx_out);
            std::cout << "wrote " << fx.count << " images to " << fx_out << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_config_error() ? kExitConfig : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
