#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccsp/dataset.hpp"
#include "ccsp/metrics.hpp"
#include "ccsp/model.hpp"
#include "ccsp/optimizer.hpp"

namespace ccsp {

enum class Strategy { direct, end_to_end, joint };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct OptimizerConfig {
    double lr = 0.01;
    double momentum = 0.9;
    double clip_norm = 5.0;            // 0 disables gradient clipping
    double denoiser_lr_scale = 0.02;   // joint-mode damping for the restoration net
};

struct PretrainConfig {
    int epochs = 30;
    double lr = 0.01;
};

struct DenoiserTrainConfig {
    int base_width = 16;
    bool identity_init = false;
    bool freeze = false;
    std::string warm_start;  // optional checkpoint.bin to seed denoiser weights
};

struct DataConfig {
    std::string degraded_dir;
    std::string clean_dir;
};

struct ExperimentConfig {
    Strategy strategy = Strategy::joint;
    uint64_t seed = 1;
    int epochs = 60;
    int batch_size = 8;
    ModelConfig model;
    LossWeights loss;
    OptimizerConfig optimizer;
    PretrainConfig pretrain;
    DenoiserTrainConfig denoiser;
    DataConfig data;
    bool augment_flip = true;

    void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_json(const ExperimentConfig& cfg);
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string config_sha256(const ExperimentConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    LossBreakdown losses;
};

/// A trained pipeline: the detector, plus the restoration network for the
/// end-to-end and joint strategies.
struct TrainedModels {
    ExperimentConfig config;
    DetectorModel detector;
    std::optional<DenoiserParams> denoiser;
    std::vector<EpochRecord> history;
    SgdMomentum optimizer_state;

    ParamMap parameters() const;  // detector first, denoiser after (when present)
};

TrainedModels train(const ExperimentConfig& cfg);
TrainedModels train_direct(const ExperimentConfig& cfg);
TrainedModels train_end_to_end(const ExperimentConfig& cfg);
TrainedModels train_joint(const ExperimentConfig& cfg);

/// Checkpoint directory: checkpoint.bin (params + optimizer state) and
/// meta.json (epoch, full config, config hash, history).
void save_checkpoint(const TrainedModels& models, const std::string& dir);
TrainedModels load_checkpoint(const std::string& dir);

/// Raw (pre-suppression) detections for one image through the strategy's
/// eval pipeline (restoration first for end_to_end/joint).
std::vector<Detection> infer_image(const TrainedModels& models, const Tensor& image);

/// Dataset metrics through the strategy's eval pipeline; fps is measured
/// batch-1 after one warmup image when measure_fps is set.
MetricsReport evaluate_model(const TrainedModels& models, const Corpus& data,
                             double conf_threshold = 0.25, double nms_iou = 0.45,
                             bool measure_fps = true);

struct CompareRow {
    Strategy strategy = Strategy::direct;
    uint64_t seed = 0;
    MetricsReport metrics;
};

struct CompareReport {
    std::vector<uint64_t> seeds;
    std::vector<CompareRow> rows;                 // 3 strategies x |seeds|
    std::map<std::string, MetricsReport> means;   // keyed by strategy name
};

/// Trains all three strategies per seed and evaluates each on the held-out
/// corpus. Every config must reference the same corpus directories.
CompareReport compare_strategies(const std::map<Strategy, ExperimentConfig>& configs,
                                 const std::vector<uint64_t>& seeds, const std::string& test_dir);

void save_compare_report(const CompareReport& report, const std::string& json_path);
CompareReport load_compare_report(const std::string& json_path);
std::string render_compare_table(const CompareReport& report);

void write_history_ndjson(const std::vector<EpochRecord>& history, const std::string& path);

}  // namespace ccsp
