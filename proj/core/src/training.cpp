#include "ccsp/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ccsp/image_io.hpp"
#include "ccsp/serialize.hpp"
#include "json_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ccsp {

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::direct: return "direct";
        case Strategy::end_to_end: return "end_to_end";
        case Strategy::joint: return "joint";
    }
    return "direct";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "direct") return Strategy::direct;
    if (name == "end_to_end") return Strategy::end_to_end;
    if (name == "joint") return Strategy::joint;
    throw ConfigError("unknown strategy: '" + name + "' (expected direct|end_to_end|joint)");
}

void ExperimentConfig::validate() const {
    model.validate();
    loss.validate();
    if (epochs < 0) throw ConfigError("config: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (optimizer.lr < 0 || pretrain.lr < 0) throw ConfigError("config: learning rates must be >= 0");
    if (data.degraded_dir.empty()) {
        throw ConfigError("config: data.degraded_dir is required");
    }
    if (strategy != Strategy::direct && data.clean_dir.empty()) {
        throw ConfigError("config: data.clean_dir is required for the " + strategy_name(strategy) +
                          " strategy");
    }
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
    std::vector<std::string> bad;
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) bad.push_back(key);
    }
    if (!bad.empty()) {
        std::string msg = "config: unknown key(s) in " + context + ":";
        for (const auto& k : bad) msg += " '" + k + "'";
        throw ConfigError(msg);
    }
}

AnchorSet anchors_from_json(const json& j) {
    AnchorSet a;
    for (const auto& scale : j) {
        std::vector<std::array<double, 2>> priors;
        for (const auto& wh : scale) {
            if (!wh.is_array() || wh.size() != 2) {
                throw ConfigError("config: each anchor must be a [w, h] pair");
            }
            priors.push_back({wh[0].get<double>(), wh[1].get<double>()});
        }
        a.per_scale.push_back(std::move(priors));
    }
    a.validate();
    return a;
}

json anchors_to_json(const AnchorSet& a) {
    json out = json::array();
    for (const auto& scale : a.per_scale) {
        json s = json::array();
        for (const auto& wh : scale) s.push_back({wh[0], wh[1]});
        out.push_back(s);
    }
    return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j,
               {"strategy", "seed", "epochs", "batch_size", "data", "model", "loss", "optimizer",
                "pretrain", "denoiser", "augment_flip"},
               "top level");
    ExperimentConfig cfg;
    if (j.contains("strategy")) cfg.strategy = strategy_from_name(j["strategy"].get<std::string>());
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("augment_flip")) cfg.augment_flip = j["augment_flip"].get<bool>();
    if (j.contains("data")) {
        const json& d = j["data"];
        check_keys(d, {"degraded_dir", "clean_dir"}, "data");
        if (d.contains("degraded_dir")) cfg.data.degraded_dir = d["degraded_dir"].get<std::string>();
        if (d.contains("clean_dir")) cfg.data.clean_dir = d["clean_dir"].get<std::string>();
    }
    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m, {"widths", "classes", "anchors", "cot"}, "model");
        if (m.contains("widths")) {
            const auto w = m["widths"].get<std::vector<int>>();
            if (w.size() != 3) throw ConfigError("config: model.widths must have 3 entries");
            cfg.model.widths = {w[0], w[1], w[2]};
        }
        if (m.contains("classes")) cfg.model.classes = m["classes"].get<int>();
        if (m.contains("anchors")) cfg.model.anchors = anchors_from_json(m["anchors"]);
        if (m.contains("cot")) {
            const json& c = m["cot"];
            check_keys(c, {"kernel", "heads", "reduction"}, "model.cot");
            if (c.contains("kernel")) cfg.model.cot.kernel = c["kernel"].get<int>();
            if (c.contains("heads")) cfg.model.cot.heads = c["heads"].get<int>();
            if (c.contains("reduction")) cfg.model.cot.reduction = c["reduction"].get<int>();
        }
    }
    if (j.contains("loss")) {
        const json& l = j["loss"];
        check_keys(l, {"lambda_cls", "lambda_loc", "lambda_obj", "lambda_noobj", "alpha", "beta"},
                   "loss");
        if (l.contains("lambda_cls")) cfg.loss.lambda_cls = l["lambda_cls"].get<double>();
        if (l.contains("lambda_loc")) cfg.loss.lambda_loc = l["lambda_loc"].get<double>();
        if (l.contains("lambda_obj")) cfg.loss.lambda_obj = l["lambda_obj"].get<double>();
        if (l.contains("lambda_noobj")) cfg.loss.lambda_noobj = l["lambda_noobj"].get<double>();
        if (l.contains("alpha")) cfg.loss.alpha = l["alpha"].get<double>();
        if (l.contains("beta")) cfg.loss.beta = l["beta"].get<double>();
    }
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        check_keys(o, {"lr", "momentum", "clip_norm", "denoiser_lr_scale"}, "optimizer");
        if (o.contains("lr")) cfg.optimizer.lr = o["lr"].get<double>();
        if (o.contains("momentum")) cfg.optimizer.momentum = o["momentum"].get<double>();
        if (o.contains("clip_norm")) cfg.optimizer.clip_norm = o["clip_norm"].get<double>();
        if (o.contains("denoiser_lr_scale"))
            cfg.optimizer.denoiser_lr_scale = o["denoiser_lr_scale"].get<double>();
    }
    if (j.contains("pretrain")) {
        const json& p = j["pretrain"];
        check_keys(p, {"epochs", "lr"}, "pretrain");
        if (p.contains("epochs")) cfg.pretrain.epochs = p["epochs"].get<int>();
        if (p.contains("lr")) cfg.pretrain.lr = p["lr"].get<double>();
    }
    if (j.contains("denoiser")) {
        const json& d = j["denoiser"];
        check_keys(d, {"base_width", "identity_init", "freeze", "warm_start"}, "denoiser");
        if (d.contains("base_width")) cfg.denoiser.base_width = d["base_width"].get<int>();
        if (d.contains("identity_init")) cfg.denoiser.identity_init = d["identity_init"].get<bool>();
        if (d.contains("freeze")) cfg.denoiser.freeze = d["freeze"].get<bool>();
        if (d.contains("warm_start")) cfg.denoiser.warm_start = d["warm_start"].get<std::string>();
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file_bytes(path));
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
    json j;
    j["strategy"] = strategy_name(cfg.strategy);
    j["seed"] = cfg.seed;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["augment_flip"] = cfg.augment_flip;
    j["data"] = {{"degraded_dir", cfg.data.degraded_dir}, {"clean_dir", cfg.data.clean_dir}};
    j["model"] = {{"widths", {cfg.model.widths.c3, cfg.model.widths.c4, cfg.model.widths.c5}},
                  {"classes", cfg.model.classes},
                  {"anchors", anchors_to_json(cfg.model.anchors)},
                  {"cot",
                   {{"kernel", cfg.model.cot.kernel},
                    {"heads", cfg.model.cot.heads},
                    {"reduction", cfg.model.cot.reduction}}}};
    j["loss"] = {{"lambda_cls", cfg.loss.lambda_cls},   {"lambda_loc", cfg.loss.lambda_loc},
                 {"lambda_obj", cfg.loss.lambda_obj},   {"lambda_noobj", cfg.loss.lambda_noobj},
                 {"alpha", cfg.loss.alpha},             {"beta", cfg.loss.beta}};
    j["optimizer"] = {{"lr", cfg.optimizer.lr},
                      {"momentum", cfg.optimizer.momentum},
                      {"clip_norm", cfg.optimizer.clip_norm},
                      {"denoiser_lr_scale", cfg.optimizer.denoiser_lr_scale}};
    j["pretrain"] = {{"epochs", cfg.pretrain.epochs}, {"lr", cfg.pretrain.lr}};
    j["denoiser"] = {{"base_width", cfg.denoiser.base_width},
                     {"identity_init", cfg.denoiser.identity_init},
                     {"freeze", cfg.denoiser.freeze},
                     {"warm_start", cfg.denoiser.warm_start}};
    return j.dump(2) + "\n";
}

std::string config_sha256(const ExperimentConfig& cfg) {
    return sha256_hex(experiment_config_json(cfg));
}

ParamMap TrainedModels::parameters() const {
    ParamMap out;
    detector.collect(out);
    if (denoiser) denoiser->collect(out);
    return out;
}

namespace {

Tensor flip_image_h(const Tensor& img) {
    Tensor out(img.shape());
    const int64_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t y = 0; y < H; ++y) {
            for (int64_t x = 0; x < W; ++x) out.at(c, y, x) = img.at(c, y, W - 1 - x);
        }
    }
    return out;
}

struct Batch {
    Tensor input;  // detector (or denoiser) input
    Tensor clean;  // restoration target (defined only when requested)
    std::vector<std::vector<LabeledBox>> labels;
};

void copy_image_into(Tensor& batch, int64_t n, const Tensor& img) {
    std::copy(img.data(), img.data() + img.numel(), batch.data() + n * img.numel());
}

Batch make_batch(const Corpus& corpus, const std::vector<size_t>& idx, bool use_clean_input,
                 bool want_clean_target, bool flip_enabled, Rng& data_rng) {
    const int64_t n = static_cast<int64_t>(idx.size());
    Batch b;
    b.input = Tensor({n, 3, corpus.height, corpus.width});
    if (want_clean_target) b.clean = Tensor({n, 3, corpus.height, corpus.width});
    b.labels.resize(idx.size());
    for (int64_t i = 0; i < n; ++i) {
        const Sample& s = corpus.samples[idx[static_cast<size_t>(i)]];
        const bool flip = flip_enabled && data_rng.uniform() < 0.5;
        const Tensor& input_src = use_clean_input ? s.clean : s.image;
        copy_image_into(b.input, i, flip ? flip_image_h(input_src) : input_src);
        if (want_clean_target) {
            copy_image_into(b.clean, i, flip ? flip_image_h(s.clean) : s.clean);
        }
        for (LabeledBox lb : s.boxes) {
            if (flip) lb.box.cx = 1.0 - lb.box.cx;
            b.labels[static_cast<size_t>(i)].push_back(lb);
        }
    }
    return b;
}

std::vector<std::vector<size_t>> batch_chunks(size_t count, int batch_size, Rng& data_rng) {
    std::vector<size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    data_rng.shuffle(order);
    std::vector<std::vector<size_t>> chunks;
    for (size_t at = 0; at < count; at += static_cast<size_t>(batch_size)) {
        const size_t end = std::min(count, at + static_cast<size_t>(batch_size));
        chunks.emplace_back(order.begin() + static_cast<long>(at), order.begin() + static_cast<long>(end));
    }
    return chunks;
}

/// Shared loop for the detector-optimizing phases. `den` routes the input
/// through the restoration net; `joint_objective` adds beta * L2 with the
/// clean batch as target.
std::vector<EpochRecord> run_detection_phase(const Corpus& corpus, DetectorModel& det,
                                             DenoiserParams* den, bool joint_objective,
                                             bool use_clean_input, int epochs, int epoch_offset,
                                             const ExperimentConfig& cfg, SgdMomentum& opt,
                                             Rng& data_rng) {
    ParamMap step_params;
    det.collect(step_params);
    if (den != nullptr && !cfg.denoiser.freeze) den->collect(step_params);

    const auto grids = det.grids_for(corpus.height, corpus.width);
    std::vector<EpochRecord> history;
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        double sum_cls = 0, sum_loc = 0, sum_obj = 0, sum_l2 = 0;
        int batches = 0;
        for (const auto& chunk : batch_chunks(corpus.samples.size(), cfg.batch_size, data_rng)) {
            Batch batch = make_batch(corpus, chunk, use_clean_input, joint_objective,
                                     cfg.augment_flip, data_rng);
            GridTarget targets =
                assign_targets(batch.labels, cfg.model.anchors, grids, cfg.model.classes);

            Variable x = Variable::constant(std::move(batch.input));
            Variable feed = den != nullptr ? denoise_forward(x, *den) : x;
            HeadOutput head = det.forward(feed);
            DetectionLossNodes nodes = detection_loss(head, targets, cfg.loss);

            Variable total = nodes.l1;
            double l2_value = 0.0;
            if (joint_objective) {
                Variable l2 = denoise_loss(feed, batch.clean);
                l2_value = l2.scalar();
                total = joint_loss(nodes.l1, l2, cfg.loss);
            }

            opt.zero_grads(step_params);
            backward(total);
            opt.step(step_params);

            sum_cls += nodes.cls.scalar();
            sum_loc += nodes.loc.scalar();
            sum_obj += nodes.obj.scalar();
            sum_l2 += l2_value;
            ++batches;
        }
        const double inv = 1.0 / std::max(1, batches);
        EpochRecord rec;
        rec.epoch = epoch_offset + epoch;
        rec.losses = make_breakdown(sum_cls * inv, sum_loc * inv, sum_obj * inv, sum_l2 * inv,
                                    cfg.loss);
        history.push_back(rec);
    }
    return history;
}

DenoiserParams make_denoiser(const ExperimentConfig& cfg) {
    DenoiserParams den = DenoiserParams::make({cfg.denoiser.base_width, cfg.denoiser.identity_init},
                                              "den", mix_seed(cfg.seed, "den"));
    if (!cfg.denoiser.warm_start.empty()) {
        NamedTensors stored = parse_param_blob(read_file_bytes(cfg.denoiser.warm_start));
        ParamMap mine;
        den.collect(mine);
        int applied = 0;
        for (auto& [name, v] : mine) {
            for (auto& [sname, t] : stored) {
                if (sname == name && t.shape() == v.value().shape()) {
                    v.value() = t;
                    ++applied;
                    break;
                }
            }
        }
        if (applied == 0) {
            throw ConfigError("denoiser warm start: no matching tensors in " +
                              cfg.denoiser.warm_start);
        }
    }
    return den;
}

}  // namespace

namespace {
void init_optimizer(SgdMomentum& opt, const ExperimentConfig& cfg) {
    opt.lr = cfg.optimizer.lr;
    opt.momentum = cfg.optimizer.momentum;
    opt.clip_norm = cfg.optimizer.clip_norm;
    if (cfg.optimizer.denoiser_lr_scale != 1.0) {
        opt.prefix_lr_scale.emplace_back("den.", cfg.optimizer.denoiser_lr_scale);
    }
}
}  // namespace

TrainedModels train_direct(const ExperimentConfig& cfg) {
    cfg.validate();
    Corpus corpus = load_corpus(cfg.data.degraded_dir);
    TrainedModels out;
    out.config = cfg;
    out.detector = DetectorModel::make(cfg.model, cfg.seed);
    init_optimizer(out.optimizer_state, cfg);
    Rng data_rng(mix_seed(cfg.seed, "data"));
    out.history = run_detection_phase(corpus, out.detector, nullptr, false, false, cfg.epochs, 0,
                                      cfg, out.optimizer_state, data_rng);
    return out;
}

TrainedModels train_end_to_end(const ExperimentConfig& cfg) {
    cfg.validate();
    Corpus corpus = load_corpus(cfg.data.degraded_dir, cfg.data.clean_dir);
    TrainedModels out;
    out.config = cfg;
    out.detector = DetectorModel::make(cfg.model, cfg.seed);
    out.denoiser = make_denoiser(cfg);
    init_optimizer(out.optimizer_state, cfg);

    // Phase 1: restoration pretraining on the degraded/clean pairs.
    SgdMomentum pre_opt;
    pre_opt.lr = cfg.pretrain.lr;
    pre_opt.momentum = cfg.optimizer.momentum;
    Rng pre_rng(mix_seed(cfg.seed, "pretrain"));
    for (int epoch = 1; epoch <= cfg.pretrain.epochs; ++epoch) {
        double sum_l2 = 0;
        int batches = 0;
        for (const auto& chunk : batch_chunks(corpus.samples.size(), cfg.batch_size, pre_rng)) {
            Batch batch = make_batch(corpus, chunk, false, true, cfg.augment_flip, pre_rng);
            sum_l2 += pretrain_step(batch.input, batch.clean, *out.denoiser, pre_opt);
            ++batches;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.losses = make_breakdown(0, 0, 0, sum_l2 / std::max(1, batches), cfg.loss);
        out.history.push_back(rec);
    }

    // Phase 2: detector on clean images; the restoration net stays frozen.
    Rng data_rng(mix_seed(cfg.seed, "data"));
    auto phase2 = run_detection_phase(corpus, out.detector, nullptr, false, true, cfg.epochs,
                                      cfg.pretrain.epochs, cfg, out.optimizer_state, data_rng);
    out.history.insert(out.history.end(), phase2.begin(), phase2.end());

    // Keep both optimizer states in the checkpoint.
    for (auto& [name, vel] : pre_opt.velocity) out.optimizer_state.velocity[name] = vel;
    return out;
}

TrainedModels train_joint(const ExperimentConfig& cfg) {
    cfg.validate();
    Corpus corpus = load_corpus(cfg.data.degraded_dir, cfg.data.clean_dir);
    TrainedModels out;
    out.config = cfg;
    out.detector = DetectorModel::make(cfg.model, cfg.seed);
    out.denoiser = make_denoiser(cfg);
    init_optimizer(out.optimizer_state, cfg);
    Rng data_rng(mix_seed(cfg.seed, "data"));
    out.history = run_detection_phase(corpus, out.detector, &*out.denoiser, true, false, cfg.epochs,
                                      0, cfg, out.optimizer_state, data_rng);
    return out;
}

TrainedModels train(const ExperimentConfig& cfg) {
    switch (cfg.strategy) {
        case Strategy::direct: return train_direct(cfg);
        case Strategy::end_to_end: return train_end_to_end(cfg);
        case Strategy::joint: return train_joint(cfg);
    }
    throw ConfigError("train: unknown strategy");
}

namespace {

json history_to_json(const std::vector<EpochRecord>& history) {
    json arr = json::array();
    for (const auto& rec : history) {
        arr.push_back({{"epoch", rec.epoch},
                       {"cls", rec.losses.cls},
                       {"loc", rec.losses.loc},
                       {"obj", rec.losses.obj},
                       {"l1", rec.losses.l1},
                       {"l2", rec.losses.l2},
                       {"joint", rec.losses.joint}});
    }
    return arr;
}

std::vector<EpochRecord> history_from_json(const json& arr) {
    std::vector<EpochRecord> out;
    for (const auto& je : arr) {
        EpochRecord rec;
        rec.epoch = je.at("epoch").get<int>();
        rec.losses.cls = je.at("cls").get<double>();
        rec.losses.loc = je.at("loc").get<double>();
        rec.losses.obj = je.at("obj").get<double>();
        rec.losses.l1 = je.at("l1").get<double>();
        rec.losses.l2 = je.at("l2").get<double>();
        rec.losses.joint = je.at("joint").get<double>();
        out.push_back(rec);
    }
    return out;
}

}  // namespace

void save_checkpoint(const TrainedModels& models, const std::string& dir) {
    fs::create_directories(dir);
    ParamMap params = models.parameters();
    NamedTensors entries;
    entries.reserve(2 * params.size());
    for (const auto& [name, v] : params) entries.emplace_back(name, v.value());
    for (const auto& [name, v] : params) {
        auto it = models.optimizer_state.velocity.find(name);
        entries.emplace_back("opt." + name,
                             it != models.optimizer_state.velocity.end()
                                 ? it->second
                                 : Tensor::zeros(v.value().shape()));
    }
    write_file_bytes((fs::path(dir) / "checkpoint.bin").string(), encode_tensors(entries));

    json meta;
    meta["epoch"] = models.history.empty() ? 0 : models.history.back().epoch;
    meta["config"] = json::parse(experiment_config_json(models.config));
    meta["config_sha256"] = config_sha256(models.config);
    meta["history"] = history_to_json(models.history);
    write_file_bytes((fs::path(dir) / "meta.json").string(), meta.dump(2) + "\n");
}

TrainedModels load_checkpoint(const std::string& dir) {
    const fs::path root(dir);
    if (!fs::exists(root / "meta.json") || !fs::exists(root / "checkpoint.bin")) {
        throw InputError("checkpoint directory missing meta.json or checkpoint.bin: " + dir);
    }
    json meta = json::parse(read_file_bytes((root / "meta.json").string()));
    TrainedModels out;
    out.config = parse_experiment_config(meta.at("config").dump());
    out.detector = DetectorModel::make(out.config.model, out.config.seed);
    if (out.config.strategy != Strategy::direct) {
        out.config.denoiser.warm_start.clear();  // weights come from the blob below
        DenoiserTrainConfig dcfg = out.config.denoiser;
        out.denoiser = DenoiserParams::make({dcfg.base_width, dcfg.identity_init}, "den",
                                            mix_seed(out.config.seed, "den"));
    }
    out.history = history_from_json(meta.at("history"));
    init_optimizer(out.optimizer_state, out.config);

    NamedTensors stored = parse_param_blob(read_file_bytes((root / "checkpoint.bin").string()));
    ParamMap params = out.parameters();
    if (stored.size() != 2 * params.size()) {
        throw InputError("checkpoint.bin tensor count does not match the configured model");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        auto& [name, v] = params[i];
        auto& [sname, t] = stored[i];
        if (sname != name || t.shape() != v.value().shape()) {
            throw InputError("checkpoint parameter mismatch at '" + name + "'");
        }
        v.value() = std::move(t);
    }
    for (size_t i = 0; i < params.size(); ++i) {
        auto& [sname, t] = stored[params.size() + i];
        if (sname != "opt." + params[i].first) {
            throw InputError("checkpoint optimizer state mismatch at '" + sname + "'");
        }
        out.optimizer_state.velocity[params[i].first] = std::move(t);
    }
    return out;
}

std::vector<Detection> infer_image(const TrainedModels& models, const Tensor& image) {
    if (image.rank() != 3) throw InputError("infer_image: expected a (3, H, W) image");
    Tensor batch({1, image.dim(0), image.dim(1), image.dim(2)});
    std::copy(image.data(), image.data() + image.numel(), batch.data());
    Variable x = Variable::constant(std::move(batch));
    if (models.denoiser) x = denoise_forward(x, *models.denoiser);
    HeadOutput head = models.detector.forward(x);
    return extract_detections(head, 0);
}

MetricsReport evaluate_model(const TrainedModels& models, const Corpus& data,
                             double conf_threshold, double nms_iou, bool measure_fps) {
    if (data.samples.empty()) throw InputError("evaluate_model: empty dataset");
    std::vector<std::vector<Detection>> dets;
    std::vector<std::vector<LabeledBox>> truths;
    dets.reserve(data.samples.size());
    truths.reserve(data.samples.size());

    double forward_seconds = 0.0;
    if (measure_fps) (void)infer_image(models, data.samples.front().image);  // warmup
    for (const Sample& s : data.samples) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<Detection> raw = infer_image(models, s.image);
        forward_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        dets.push_back(std::move(raw));
        truths.push_back(s.boxes);
    }
    MetricsReport report = evaluate(dets, truths, conf_threshold, nms_iou);
    if (measure_fps && forward_seconds > 0.0) {
        report.fps = static_cast<double>(data.samples.size()) / forward_seconds;
    }
    report.parameter_count = count_parameters(models.parameters());
    return report;
}

CompareReport compare_strategies(const std::map<Strategy, ExperimentConfig>& configs,
                                 const std::vector<uint64_t>& seeds, const std::string& test_dir) {
    for (Strategy s : {Strategy::direct, Strategy::end_to_end, Strategy::joint}) {
        if (!configs.count(s)) {
            throw ConfigError("compare: missing config for strategy " + strategy_name(s));
        }
    }
    const DataConfig& ref = configs.begin()->second.data;
    for (const auto& [s, cfg] : configs) {
        if (cfg.data.degraded_dir != ref.degraded_dir || cfg.data.clean_dir != ref.clean_dir) {
            throw ConfigError("compare: configs reference different corpora");
        }
    }
    if (seeds.empty()) throw ConfigError("compare: at least one seed required");

    Corpus test = load_corpus(test_dir);
    CompareReport report;
    report.seeds = seeds;

    std::map<std::string, MetricsReport> sums;
    for (uint64_t seed : seeds) {
        for (Strategy s : {Strategy::direct, Strategy::end_to_end, Strategy::joint}) {
            ExperimentConfig cfg = configs.at(s);
            cfg.strategy = s;
            cfg.seed = seed;
            TrainedModels models = train(cfg);
            CompareRow row;
            row.strategy = s;
            row.seed = seed;
            row.metrics = evaluate_model(models, test, 0.25, 0.45, false);
            MetricsReport& acc = sums[strategy_name(s)];
            acc.precision += row.metrics.precision;
            acc.recall += row.metrics.recall;
            acc.map50 += row.metrics.map50;
            acc.map75 += row.metrics.map75;
            acc.parameter_count = row.metrics.parameter_count;
            report.rows.push_back(std::move(row));
        }
    }
    const double inv = 1.0 / static_cast<double>(seeds.size());
    for (auto& [name, m] : sums) {
        m.precision *= inv;
        m.recall *= inv;
        m.map50 *= inv;
        m.map75 *= inv;
        report.means[name] = m;
    }
    return report;
}

void save_compare_report(const CompareReport& report, const std::string& json_path) {
    json j;
    j["seeds"] = report.seeds;
    j["rows"] = json::array();
    for (const auto& row : report.rows) {
        j["rows"].push_back({{"strategy", strategy_name(row.strategy)},
                             {"seed", row.seed},
                             {"metrics", detail::metrics_to_json(row.metrics)}});
    }
    json means = json::object();
    for (const auto& [name, m] : report.means) means[name] = detail::metrics_to_json(m);
    j["means"] = means;
    write_file_bytes(json_path, j.dump(2) + "\n");
}

CompareReport load_compare_report(const std::string& json_path) {
    json j = json::parse(read_file_bytes(json_path));
    CompareReport report;
    for (const auto& s : j.at("seeds")) report.seeds.push_back(s.get<uint64_t>());
    for (const auto& jr : j.at("rows")) {
        CompareRow row;
        row.strategy = strategy_from_name(jr.at("strategy").get<std::string>());
        row.seed = jr.at("seed").get<uint64_t>();
        row.metrics = detail::metrics_from_json(jr.at("metrics"));
        report.rows.push_back(std::move(row));
    }
    for (const auto& [name, jm] : j.at("means").items()) {
        report.means[name] = detail::metrics_from_json(jm);
    }
    return report;
}

std::string render_compare_table(const CompareReport& report) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %6s %10s %8s %8s %8s\n", "strategy", "seed",
                  "precision", "recall", "map@.5", "map@.75");
    os << line;
    os << std::string(56, '-') << "\n";
    for (const auto& row : report.rows) {
        std::snprintf(line, sizeof(line), "%-12s %6llu %10.4f %8.4f %8.4f %8.4f\n",
                      strategy_name(row.strategy).c_str(), static_cast<unsigned long long>(row.seed),
                      row.metrics.precision, row.metrics.recall, row.metrics.map50,
                      row.metrics.map75);
        os << line;
    }
    os << std::string(56, '-') << "\n";
    for (const auto& [name, m] : report.means) {
        std::snprintf(line, sizeof(line), "%-12s %6s %10.4f %8.4f %8.4f %8.4f\n", name.c_str(),
                      "mean", m.precision, m.recall, m.map50, m.map75);
        os << line;
    }
    return os.str();
}

void write_history_ndjson(const std::vector<EpochRecord>& history, const std::string& path) {
    std::ostringstream os;
    for (const auto& rec : history) {
        json j = {{"epoch", rec.epoch},   {"cls", rec.losses.cls}, {"loc", rec.losses.loc},
                  {"obj", rec.losses.obj}, {"l1", rec.losses.l1},   {"l2", rec.losses.l2},
                  {"joint", rec.losses.joint}};
        os << j.dump() << "\n";
    }
    write_file_bytes(path, os.str());
}

}  // namespace ccsp
