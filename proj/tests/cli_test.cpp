#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "seedforge/hash.hpp"
#include "seedforge/io.hpp"
#include "test_util.hpp"

using namespace seedforge;
using seedforge::testing::TempDir;

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args, const std::string& env = {}) {
    const std::string cmd = env + " " + std::string(SEEDFORGE_CLI_PATH) + " " + args + " 2>&1";
    std::FILE* p = popen(cmd.c_str(), "r");
    if (!p) return {-1, ""};
    std::string out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("bogus").code, 2);
    EXPECT_EQ(run("slic --k 4").code, 2);
    EXPECT_EQ(run("pipeline --set acm.conflict_rate=2").code, 2);
    EXPECT_EQ(run("pipeline --set acm.unknown=1").code, 2);
    EXPECT_EQ(run("pipeline --set noequals").code, 2);
    EXPECT_EQ(run("acm --seeds x.tns --tbg 300 --out y.png").code, 2);
}

TEST(Cli, DumpConfigListsDefaults) {
    const auto r = run("pipeline --dump-config --set pipeline.seed=5");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("seed = 5"), std::string::npos);
    EXPECT_NE(r.out.find("conflict_rate = 0.9"), std::string::npos);
    EXPECT_NE(r.out.find("bg_threshold = 128"), std::string::npos);
    EXPECT_NE(r.out.find("seed_bg_alpha = 0.3"), std::string::npos);
}

TEST(Cli, DataErrorsExitThree) {
    TempDir dir;
    EXPECT_EQ(run("pipeline --set pipeline.input_dir=" + q(dir / "missing")).code, 3);
    EXPECT_EQ(run("slic --k 4 " + q(dir / "missing.png") + " " + q(dir / "o.png")).code, 3);
    io::write_png(RgbImage(4, 4, 1), dir / "tiny.png");
    const auto r = run("slic --k 100 " + q(dir / "tiny.png") + " " + q(dir / "o.png"));
    EXPECT_EQ(r.code, 2) << r.out;  // k larger than the image is a parameter error
}

TEST(Cli, FixturesPipelineAndEval) {
    TempDir dir;
    ASSERT_EQ(run("fixtures --seed 4 --count 2 --width 32 --height 32 --out " + q(dir / "fx")).code, 0);
    const auto cfg = dir / "c.ini";
    std::ofstream(cfg) << "[pipeline]\ninput_dir = " << (dir / "fx").string() << "\noutput_dir = "
                       << (dir / "out").string() << "\n[acm]\nconflict_rate_sweep = 0,0.5,1\n";
    const auto r = run("pipeline --config " + q(cfg));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("miou 1.000000"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("sweep 0.5"), std::string::npos) << r.out;
    EXPECT_TRUE(std::filesystem::exists(dir / "out/sweep.csv"));

    const auto e = run("eval --pred-dir " + q(dir / "fx/gt") + " --gt-dir " + q(dir / "fx/gt") +
                       " --classes 3 --csv " + q(dir / "m.csv"));
    ASSERT_EQ(e.code, 0) << e.out;
    EXPECT_NE(e.out.find("mean,1.000000"), std::string::npos) << e.out;
    EXPECT_TRUE(std::filesystem::exists(dir / "m.csv"));
    EXPECT_EQ(run("eval --pred-dir " + q(dir / "fx/gt") + " --gt-dir " + q(dir / "fx/gt") + " --classes 2").code,
              3);
}

TEST(Cli, PipelineThreadCountDoesNotMatter) {
    TempDir dir;
    ASSERT_EQ(run("fixtures --seed 8 --count 3 --width 32 --height 32 --noise 0.2 --out " + q(dir / "fx")).code, 0);
    const std::string base = "pipeline --set pipeline.input_dir=" + q(dir / "fx");
    ASSERT_EQ(run(base + " --set pipeline.output_dir=" + q(dir / "a"), "SEEDFORGE_THREADS=1").code, 0);
    ASSERT_EQ(run(base + " --set pipeline.output_dir=" + q(dir / "b"), "SEEDFORGE_THREADS=3").code, 0);
    EXPECT_EQ(hash::sha256_tree(dir / "a"), hash::sha256_tree(dir / "b"));
}

TEST(Cli, SlicAndMecp) {
    TempDir dir;
    std::mt19937_64 rng(1);
    const auto img = seedforge::testing::random_rgb(rng, 24, 20);
    io::write_png(img, dir / "in.png");
    const auto s = run("slic --k 6 " + q(dir / "in.png") + " " + q(dir / "seg.png"));
    ASSERT_EQ(s.code, 0) << s.out;
    EXPECT_EQ(io::read_gray_png(dir / "seg.png").width(), 24u);

    const auto many = run("slic --k 400 " + q(dir / "in.png") + " " + q(dir / "many.png"));
    ASSERT_EQ(many.code, 0) << many.out;
    if (many.out.find("tensor") != std::string::npos) {
        const auto t = io::read_tensor(dir / "many.tns");
        EXPECT_EQ(t.dim(0), 20u);
        EXPECT_EQ(t.dim(1), 24u);
    }

    const auto m = run("mecp --epoch 7 --seed 3 --schedule 4,8,12 " + q(dir / "in.png") + " " + q(dir / "cp.png") +
                       " " + q(dir / "cpbar.png"));
    ASSERT_EQ(m.code, 0) << m.out;
    EXPECT_NE(m.out.find("k 8"), std::string::npos);
    const auto cp = io::read_rgb_png(dir / "cp.png"), cpbar = io::read_rgb_png(dir / "cpbar.png");
    for (std::size_t i = 0; i < img.pixels().size(); ++i) {
        ASSERT_EQ(int(cp.pixels()[i]) + int(cpbar.pixels()[i]), int(img.pixels()[i]));
    }
}

TEST(Cli, RefineThenAcm) {
    TempDir dir;
    ASSERT_EQ(run("fixtures --seed 2 --count 1 --width 32 --height 32 --out " + q(dir / "fx")).code, 0);
    const auto net = dir / "fx/net/img_000";
    std::string args = "refine --weights " + q(dir / "fx/weights.tns") + " --classes 1,2 --scales 256,512,768";
    for (int s = 0; s < 3; ++s) {
        const std::string p = "s" + std::to_string(s);
        args += " --features " + q(net / (p + "_features.tns")) + " --qk " + q(net / (p + "_q0.tns")) + "," +
                q(net / (p + "_k0.tns")) + "," + q(net / (p + "_q1.tns")) + "," + q(net / (p + "_k1.tns"));
    }
    const auto r = run(args + " --out " + q(dir / "seeds.tns"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("seeds 2x32x32"), std::string::npos) << r.out;
    EXPECT_EQ(run(args + " --scales 256 --out " + q(dir / "x.tns")).code, 2);

    const auto a = run("acm --seeds " + q(dir / "seeds.tns") + " --classes 1,2 --out " + q(dir / "label.png"));
    ASSERT_EQ(a.code, 0) << a.out;
    const auto labels = io::read_gray_png(dir / "label.png");
    const auto gt = io::read_gray_png(dir / "fx/gt/img_000.png");
    EXPECT_EQ(labels, gt);
    const auto with_sal = run("acm --seeds " + q(dir / "seeds.tns") + " --classes 1,2 --saliency " +
                              q(dir / "fx/saliency/img_000.png") + " --out " + q(dir / "label2.png"));
    ASSERT_EQ(with_sal.code, 0) << with_sal.out;
}
