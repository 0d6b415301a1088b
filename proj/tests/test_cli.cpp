#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ccsp/dataset.hpp"
#include "ccsp/degrade.hpp"
#include "ccsp/image_io.hpp"
#include "ccsp/metrics.hpp"
#include "ccsp/model.hpp"
#include "ccsp/serialize.hpp"
#include "ccsp/training.hpp"

using namespace ccsp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
    int code = -1;
    std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string log = "/tmp/ccsp_cli_out_" + std::to_string(counter++) + ".txt";
    const std::string cmd = std::string(CCSP_BIN) + " " + args + " > " + log + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.output = read_file_bytes(log);
    return r;
}

struct CliFixture {
    std::string root = "/tmp/ccsp_cli_fix";
    std::string clean = root + "/clean";
    std::string aug = root + "/aug";

    CliFixture() {
        fs::remove_all(root);
        fs::create_directories(root);
        SynthConfig cfg;
        cfg.count = 8;
        cfg.seed = 77;
        generate_synthetic_corpus(cfg, clean);
        ParamRanges ranges;
        ranges.scale_with_width = false;
        ranges.blur_len_min = 3;
        ranges.blur_len_max = 7;
        ranges.streaks_min = 10;
        ranges.streaks_max = 25;
        ranges.rain_len_min = 6;
        ranges.rain_len_max = 10;
        generate_corpus(clean, aug, {}, ranges, 55);
    }
};

const CliFixture& fixture() {
    static CliFixture f;
    return f;
}

std::string write_config(const std::string& name, json patch) {
    json cfg = {
        {"strategy", "direct"},
        {"seed", 5},
        {"epochs", 2},
        {"batch_size", 4},
        {"data", {{"degraded_dir", fixture().aug}, {"clean_dir", fixture().clean}}},
    };
    if (!patch.is_null()) cfg.update(patch, true);
    const std::string path = fixture().root + "/" + name;
    write_file_bytes(path, cfg.dump(2));
    return path;
}

}  // namespace

TEST_CASE("augment is deterministic and honors a degenerate mix") {
    const std::string out1 = fixture().root + "/aug_a";
    const std::string out2 = fixture().root + "/aug_b";
    CmdResult r1 = run_cli("augment --in " + fixture().clean + " --out " + out1 + " --seed 11");
    CmdResult r2 = run_cli("augment --in " + fixture().clean + " --out " + out2 + " --seed 11");
    CHECK(r1.code == 0);
    CHECK(r2.code == 0);
    CHECK(sha256_file(out1 + "/manifest.json") == sha256_file(out2 + "/manifest.json"));

    const std::string fog_dir = fixture().root + "/aug_fog";
    CmdResult rf = run_cli("augment --in " + fixture().clean + " --out " + fog_dir +
                           " --seed 3 --mix fog=1.0,rain=0.0,blur=0.0");
    CHECK(rf.code == 0);
    CorpusManifest m = load_manifest(fog_dir + "/manifest.json");
    CHECK(m.count(DegradationKind::fog) == static_cast<int>(m.entries.size()));
    CHECK(rf.output.find("manifest") != std::string::npos);
}

TEST_CASE("augment falls back to CCSP_SEED and fails without any seed") {
    const std::string flag_out = fixture().root + "/aug_env";
    CHECK(run_cli("augment --in " + fixture().clean + " --out " + flag_out + " --seed 11").code == 0);

    const std::string env_out = fixture().root + "/aug_env2";
    const int via_env = std::system(("CCSP_SEED=11 " + std::string(CCSP_BIN) + " augment --in " +
                                     fixture().clean + " --out " + env_out + " > /dev/null 2>&1")
                                        .c_str());
    CHECK(WEXITSTATUS(via_env) == 0);
    CHECK(sha256_file(flag_out + "/manifest.json") == sha256_file(env_out + "/manifest.json"));

    const int none = std::system((std::string("env -u CCSP_SEED ") + CCSP_BIN + " augment --in " +
                                  fixture().clean + " --out /tmp/ccsp_never > /dev/null 2>&1")
                                     .c_str());
    CHECK(WEXITSTATUS(none) == 2);
}

TEST_CASE("bad invocations exit nonzero with diagnostics") {
    CHECK(run_cli("augment --in /nonexistent_dir --out /tmp/x --seed 1").code == 2);
    CmdResult unknown = run_cli("augment --in x --out y --seed 1 --frobnicate");
    CHECK(unknown.code != 0);

    CmdResult bad_cfg = run_cli("train --config /nonexistent.json");
    CHECK(bad_cfg.code == 2);

    const std::string cfg = write_config("bad_keys.json", {{"optimizzzer", {{"lr", 1}}}});
    CmdResult bad_keys = run_cli("train --config " + cfg);
    CHECK(bad_keys.code == 2);
    CHECK(bad_keys.output.find("optimizzzer") != std::string::npos);

    CmdResult no_ckpt = run_cli("eval --checkpoint /nonexistent_ckpt --data " + fixture().aug +
                                " --out /tmp/r.json");
    CHECK(no_ckpt.code == 2);
}

TEST_CASE("train twice with one seed gives identical histories and checkpoints") {
    const std::string cfg = write_config("det.json", {});
    CmdResult r1 = run_cli("train --config " + cfg + " --out " + fixture().root + "/run_a");
    CmdResult r2 = run_cli("train --config " + cfg + " --out " + fixture().root + "/run_b");
    REQUIRE(r1.code == 0);
    REQUIRE(r2.code == 0);
    CHECK(sha256_file(fixture().root + "/run_a/checkpoint.bin") ==
          sha256_file(fixture().root + "/run_b/checkpoint.bin"));
    CHECK(sha256_file(fixture().root + "/run_a/log.ndjson") ==
          sha256_file(fixture().root + "/run_b/log.ndjson"));
}

TEST_CASE("eval writes a readable report and enforces config consistency") {
    const std::string cfg = write_config("eval.json", {});
    REQUIRE(run_cli("train --config " + cfg + " --out " + fixture().root + "/run_eval").code == 0);
    const std::string report = fixture().root + "/report.json";
    CmdResult r = run_cli("eval --config " + cfg + " --checkpoint " + fixture().root +
                          "/run_eval --data " + fixture().aug + " --out " + report);
    REQUIRE(r.code == 0);
    MetricsReport loaded = load_metrics_report(report);
    CHECK(loaded.parameter_count > 0);

    const std::string other = write_config("eval_other.json", {{"seed", 6}});
    CmdResult mismatch = run_cli("eval --config " + other + " --checkpoint " + fixture().root +
                                 "/run_eval --data " + fixture().aug + " --out " + report);
    CHECK(mismatch.code == 2);
}

TEST_CASE("bench parameter count matches the in-process count") {
    const std::string cfg = write_config("bench.json", {});
    CmdResult r = run_cli("bench --config " + cfg + " --reps 3");
    REQUIRE(r.code == 0);
    json out = json::parse(r.output.substr(r.output.find('{')));

    ExperimentConfig parsed = load_experiment_config(cfg);
    DetectorModel model = DetectorModel::make(parsed.model, parsed.seed);
    ParamMap pm;
    model.collect(pm);
    CHECK(out.at("parameter_count").get<int64_t>() == count_parameters(pm));
    CHECK(out.at("wall_clock").get<bool>());
    CHECK(out.at("fps").get<double>() > 0.0);
}

TEST_CASE("render writes overlays sized input-plus-footer") {
    const std::string cfg = write_config("render.json", {});
    REQUIRE(run_cli("train --config " + cfg + " --out " + fixture().root + "/run_render").code == 0);
    CmdResult r = run_cli("render --checkpoint " + fixture().root + "/run_render --in " +
                          fixture().aug + "/images/0000.png --out " + fixture().root +
                          "/overlays --conf 0.5");
    REQUIRE(r.code == 0);
    Tensor overlay = load_image_rgb(fixture().root + "/overlays/0000_overlay.png");
    Tensor source = load_image_rgb(fixture().aug + "/images/0000.png");
    CHECK(overlay.dim(2) == source.dim(2));
    CHECK(overlay.dim(1) == source.dim(1) + 18);

    CHECK(run_cli("render --checkpoint " + fixture().root + "/run_render --in /no_such.png --out " +
                  fixture().root + "/overlays")
              .code == 2);
}

TEST_CASE("compare runs all strategies and emits table plus json") {
    json base = {
        {"strategy", "direct"},
        {"seed", 1},
        {"epochs", 1},
        {"batch_size", 4},
        {"pretrain", {{"epochs", 1}}},
        {"data", {{"degraded_dir", fixture().aug}, {"clean_dir", fixture().clean}}},
    };
    json cmp = {{"base", base}, {"seeds", {1}}, {"test_dir", fixture().aug}};
    const std::string path = fixture().root + "/compare.json";
    write_file_bytes(path, cmp.dump(2));
    CmdResult r = run_cli("compare --config " + path + " --out " + fixture().root + "/cmp_out");
    REQUIRE(r.code == 0);
    CHECK(r.output.find("direct") != std::string::npos);
    CHECK(r.output.find("joint") != std::string::npos);
    CompareReport report = load_compare_report(fixture().root + "/cmp_out/comparison.json");
    CHECK(report.rows.size() == 3);
    CHECK(fs::exists(fixture().root + "/cmp_out/comparison.txt"));
}
