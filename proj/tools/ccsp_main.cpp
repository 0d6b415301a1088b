// ccsp: corpus degradation, training, evaluation, strategy comparison,
// benchmarking and detection-overlay rendering in one binary.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "ccsp/degrade.hpp"
#include "ccsp/image_io.hpp"
#include "ccsp/render.hpp"
#include "ccsp/serialize.hpp"
#include "ccsp/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ccsp;

namespace {

uint64_t env_seed_or(uint64_t fallback) {
    if (const char* env = std::getenv("CCSP_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return fallback;
}

ConditionMix parse_mix(const std::string& text) {
    ConditionMix mix{0.0, 0.0, 0.0};
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw InputError("bad --mix entry: '" + part + "'");
        const std::string key = part.substr(0, eq);
        const double value = std::stod(part.substr(eq + 1));
        if (key == "fog") {
            mix.fog = value;
        } else if (key == "rain") {
            mix.rain = value;
        } else if (key == "blur") {
            mix.blur = value;
        } else {
            throw InputError("bad --mix key: '" + key + "' (expected fog/rain/blur)");
        }
    }
    mix.validate();
    return mix;
}

void parse_range(const std::string& text, double& lo, double& hi, const char* flag) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw InputError(std::string("bad ") + flag + " value '" + text + "', expected lo:hi");
    }
    lo = std::stod(text.substr(0, colon));
    hi = std::stod(text.substr(colon + 1));
}

int run_augment(const std::string& in_dir, const std::string& out_dir, uint64_t seed,
                const std::string& mix_text, ParamRanges ranges) {
    ConditionMix mix = mix_text.empty() ? ConditionMix{} : parse_mix(mix_text);
    CorpusManifest manifest = generate_corpus(in_dir, out_dir, mix, ranges, seed);
    for (const auto& err : manifest.errors) std::cerr << "warning: " << err << "\n";
    std::cout << "manifest: " << (fs::path(out_dir) / "manifest.json").string() << "\n";
    std::cout << "entries: " << manifest.entries.size() << " (fog "
              << manifest.count(DegradationKind::fog) << ", rain "
              << manifest.count(DegradationKind::rain) << ", blur "
              << manifest.count(DegradationKind::motion_blur) << ")\n";
    return 0;
}

int run_train(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    cfg.validate();
    TrainedModels models = train(cfg);
    save_checkpoint(models, out_dir);
    write_history_ndjson(models.history, (fs::path(out_dir) / "log.ndjson").string());
    std::cout << "strategy: " << strategy_name(cfg.strategy) << "\n";
    std::cout << "checkpoint: " << (fs::path(out_dir) / "checkpoint.bin").string() << "\n";
    if (!models.history.empty()) {
        const auto& last = models.history.back().losses;
        std::cout << "final losses: l1=" << last.l1 << " l2=" << last.l2 << " joint=" << last.joint
                  << "\n";
    }
    return 0;
}

int run_eval(const std::string& config_path, const std::string& checkpoint_dir,
             const std::string& data_dir, const std::string& out_path, double conf,
             double nms_iou) {
    if (!config_path.empty()) {
        ExperimentConfig cfg = load_experiment_config(config_path);
        cfg.validate();
        TrainedModels probe = load_checkpoint(checkpoint_dir);
        if (config_sha256(cfg) != config_sha256(probe.config)) {
            throw ConfigError("eval: --config does not match the checkpoint's config (hash " +
                              config_sha256(cfg).substr(0, 12) + " vs " +
                              config_sha256(probe.config).substr(0, 12) + ")");
        }
    }
    TrainedModels models = load_checkpoint(checkpoint_dir);
    Corpus data = load_corpus(data_dir);
    MetricsReport report = evaluate_model(models, data, conf, nms_iou, true);
    save_metrics_report(report, out_path);
    std::cout << "precision=" << report.precision << " recall=" << report.recall
              << " map50=" << report.map50 << " map75=" << report.map75 << " fps=" << report.fps
              << " parameters=" << report.parameter_count << "\n";
    std::cout << "report: " << out_path << "\n";
    return 0;
}

int run_compare(const std::string& config_path, const std::string& out_dir) {
    json j;
    try {
        j = json::parse(read_file_bytes(config_path));
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("compare config: invalid JSON: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "base" && key != "configs" && key != "seeds" && key != "test_dir") {
            throw ConfigError("compare config: unknown key '" + key + "'");
        }
    }
    if (!j.contains("seeds") || !j.contains("test_dir")) {
        throw ConfigError("compare config: 'seeds' and 'test_dir' are required");
    }
    std::vector<uint64_t> seeds;
    for (const auto& s : j["seeds"]) seeds.push_back(s.get<uint64_t>());

    std::map<Strategy, ExperimentConfig> configs;
    if (j.contains("base")) {
        ExperimentConfig base = parse_experiment_config(j["base"].dump());
        for (Strategy s : {Strategy::direct, Strategy::end_to_end, Strategy::joint}) {
            configs[s] = base;
        }
    }
    if (j.contains("configs")) {
        for (const auto& [name, sub] : j["configs"].items()) {
            configs[strategy_from_name(name)] = parse_experiment_config(sub.dump());
        }
    }
    if (configs.empty()) throw ConfigError("compare config: need 'base' or 'configs'");

    CompareReport report = compare_strategies(configs, seeds, j["test_dir"].get<std::string>());
    fs::create_directories(out_dir);
    save_compare_report(report, (fs::path(out_dir) / "comparison.json").string());
    const std::string table = render_compare_table(report);
    write_file_bytes((fs::path(out_dir) / "comparison.txt").string(), table);
    std::cout << table;
    return 0;
}

int run_bench(const std::string& config_path, int size, int reps) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    TrainedModels models;
    models.config = cfg;
    models.detector = DetectorModel::make(cfg.model, cfg.seed);
    if (cfg.strategy != Strategy::direct) {
        models.denoiser = DenoiserParams::make({cfg.denoiser.base_width, cfg.denoiser.identity_init},
                                               "den", mix_seed(cfg.seed, "den"));
    }
    Tensor probe({3, size, size});
    Rng rng(cfg.seed);
    probe.fill_uniform(rng, 0.0, 1.0);

    (void)infer_image(models, probe);  // warmup
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) (void)infer_image(models, probe);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json out;
    out["parameter_count"] = count_parameters(models.parameters());
    out["fps"] = reps / secs;
    out["wall_clock"] = true;
    out["input_size"] = size;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_render(const std::string& checkpoint_dir, const std::vector<std::string>& images,
               const std::string& labels_path, const std::string& out_dir, double conf,
               double nms_iou, const std::string& names_csv) {
    TrainedModels models = load_checkpoint(checkpoint_dir);
    fs::create_directories(out_dir);
    RenderOptions opts;
    if (!names_csv.empty()) {
        std::stringstream ss(names_csv);
        std::string name;
        while (std::getline(ss, name, ',')) opts.class_names.push_back(name);
    }
    for (const std::string& path : images) {
        Tensor image = load_image_rgb(path);
        std::vector<Detection> dets = nms(infer_image(models, image), nms_iou, conf);

        std::vector<LabeledBox> gts;
        if (!labels_path.empty()) {
            gts = load_labels(labels_path);
        } else {
            // Corpus layout: <root>/images/x.png with <root>/labels/x.txt.
            const fs::path p(path);
            const fs::path candidate = p.parent_path().parent_path() / "labels" /
                                       (p.stem().string() + ".txt");
            if (p.parent_path().filename() == "images" && fs::exists(candidate)) {
                gts = load_labels(candidate.string());
            }
        }
        Tensor canvas = render_overlay(image, dets, gts, opts);
        const std::string out_path =
            (fs::path(out_dir) / (fs::path(path).stem().string() + "_overlay.png")).string();
        save_image_rgb(canvas, out_path);
        std::cout << out_path << ": " << dets.size() << " detections\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CCSPNet-style detection under synthetic extreme conditions"};
    app.require_subcommand(1);

    // augment
    auto* augment = app.add_subcommand("augment", "degrade a clean labeled corpus");
    std::string aug_in, aug_out, aug_mix;
    uint64_t aug_seed = env_seed_or(0);
    bool aug_seed_given = false;
    ParamRanges ranges;
    augment->add_option("--in", aug_in, "clean corpus directory")->required();
    augment->add_option("--out", aug_out, "output corpus directory")->required();
    auto* seed_opt = augment->add_option("--seed", aug_seed, "global seed (or env CCSP_SEED)");
    augment->add_option("--mix", aug_mix, "condition mix, e.g. fog=0.34,rain=0.33,blur=0.33");
    std::string fog_beta, airlight, blur_len, blur_angle, streaks, rain_len, rain_bright;
    augment->add_option("--fog-beta", fog_beta, "fog beta range lo:hi");
    augment->add_option("--airlight", airlight, "airlight range lo:hi");
    augment->add_option("--blur-len", blur_len, "blur length range lo:hi (at 640 px width)");
    augment->add_option("--blur-angle", blur_angle, "blur angle range lo:hi degrees");
    augment->add_option("--rain-streaks", streaks, "streak count range lo:hi (at 640 px width)");
    augment->add_option("--rain-len", rain_len, "streak length range lo:hi (at 640 px width)");
    augment->add_option("--rain-brightness", rain_bright, "streak brightness range lo:hi");
    bool no_width_scale = false;
    augment->add_flag("--no-width-scale", no_width_scale,
                      "use pixel ranges as-is instead of scaling by width/640");

    // train
    auto* train_cmd = app.add_subcommand("train", "train per the config's strategy");
    std::string train_config, train_out = "run";
    train_cmd->add_option("--config", train_config, "experiment config JSON")->required();
    train_cmd->add_option("--out", train_out, "output directory (checkpoint, meta, log)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
    std::string eval_config, eval_ckpt, eval_data, eval_out = "report.json";
    double eval_conf = 0.25, eval_nms = 0.45;
    eval_cmd->add_option("--config", eval_config, "config JSON (must match the checkpoint)");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
    eval_cmd->add_option("--data", eval_data, "corpus directory")->required();
    eval_cmd->add_option("--out", eval_out, "metrics report path");
    eval_cmd->add_option("--conf", eval_conf, "confidence threshold");
    eval_cmd->add_option("--nms-iou", eval_nms, "suppression IoU threshold");

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "run all three training strategies");
    std::string compare_config, compare_out = "comparison";
    compare_cmd->add_option("--config", compare_config, "comparison config JSON")->required();
    compare_cmd->add_option("--out", compare_out, "output directory");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "parameter count and forward fps");
    std::string bench_config;
    int bench_size = 64, bench_reps = 30;
    bench_cmd->add_option("--config", bench_config, "experiment config JSON")->required();
    bench_cmd->add_option("--size", bench_size, "square input size (multiple of 32)");
    bench_cmd->add_option("--reps", bench_reps, "timed forward passes");

    // render
    auto* render_cmd = app.add_subcommand("render", "draw detections on images");
    std::string render_ckpt, render_labels, render_out = "rendered", render_names;
    std::vector<std::string> render_images;
    double render_conf = 0.25, render_nms = 0.45;
    render_cmd->add_option("--checkpoint", render_ckpt, "checkpoint directory")->required();
    render_cmd->add_option("--in", render_images, "input image(s)")->required();
    render_cmd->add_option("--labels", render_labels, "label file (single image)");
    render_cmd->add_option("--out", render_out, "output directory");
    render_cmd->add_option("--conf", render_conf, "confidence threshold");
    render_cmd->add_option("--nms-iou", render_nms, "suppression IoU threshold");
    render_cmd->add_option("--names", render_names, "comma-separated class names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (augment->parsed()) {
            if (!*seed_opt && std::getenv("CCSP_SEED") == nullptr) {
                throw ConfigError("augment: --seed is required (or set CCSP_SEED)");
            }
            aug_seed_given = static_cast<bool>(*seed_opt);
            (void)aug_seed_given;
            if (!fog_beta.empty()) parse_range(fog_beta, ranges.beta_min, ranges.beta_max, "--fog-beta");
            if (!airlight.empty()) parse_range(airlight, ranges.airlight_min, ranges.airlight_max, "--airlight");
            if (!blur_angle.empty()) parse_range(blur_angle, ranges.blur_angle_min, ranges.blur_angle_max, "--blur-angle");
            if (!rain_bright.empty()) parse_range(rain_bright, ranges.rain_brightness_min, ranges.rain_brightness_max, "--rain-brightness");
            if (!rain_len.empty()) parse_range(rain_len, ranges.rain_len_min, ranges.rain_len_max, "--rain-len");
            if (!blur_len.empty()) {
                double lo, hi;
                parse_range(blur_len, lo, hi, "--blur-len");
                ranges.blur_len_min = static_cast<int>(lo);
                ranges.blur_len_max = static_cast<int>(hi);
            }
            if (!streaks.empty()) {
                double lo, hi;
                parse_range(streaks, lo, hi, "--rain-streaks");
                ranges.streaks_min = static_cast<int>(lo);
                ranges.streaks_max = static_cast<int>(hi);
            }
            if (no_width_scale) ranges.scale_with_width = false;
            return run_augment(aug_in, aug_out, aug_seed, aug_mix, ranges);
        }
        if (train_cmd->parsed()) return run_train(train_config, train_out);
        if (eval_cmd->parsed())
            return run_eval(eval_config, eval_ckpt, eval_data, eval_out, eval_conf, eval_nms);
        if (compare_cmd->parsed()) return run_compare(compare_config, compare_out);
        if (bench_cmd->parsed()) return run_bench(bench_config, bench_size, bench_reps);
        if (render_cmd->parsed())
            return run_render(render_ckpt, render_images, render_labels, render_out, render_conf,
                              render_nms, render_names);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
