#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ccsp/detector.hpp"

namespace ccsp {

struct MetricsReport {
    double precision = 0.0;
    double recall = 0.0;
    double map50 = 0.0;
    double map75 = 0.0;
    double fps = 0.0;  // wall-clock, excluded from determinism checks
    int64_t parameter_count = 0;
    std::map<int, double> per_class_ap;  // AP at IoU 0.5, classes present in GT
};

/// Intersection over union of two center/size boxes; 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

/// Greedy TP/FP flags in confidence order (dets must be sorted descending).
/// A detection is a TP iff its best-IoU same-class unmatched truth clears the
/// threshold; every truth matches at most once.
std::vector<bool> match_detections(const std::vector<Detection>& dets,
                                   const std::vector<LabeledBox>& truths, double iou_threshold);

/// All-point interpolated area under the precision envelope. Input pairs are
/// (confidence, is_true_positive). truth_count == 0 returns 0 when any
/// detections exist, 1 when none do.
double average_precision(const std::vector<std::pair<double, bool>>& scored,
                         int64_t truth_count);

/// Dataset-level metrics from raw per-image detections (pre-suppression) and
/// ground truths. Detections are filtered/suppressed per image, then
/// precision/recall are computed at IoU 0.5 and mAP at 0.5/0.75 over classes
/// present in the ground truth. fps/parameter_count are left for the caller.
MetricsReport evaluate(const std::vector<std::vector<Detection>>& raw_dets_per_image,
                       const std::vector<std::vector<LabeledBox>>& truths_per_image,
                       double conf_threshold = 0.25, double nms_iou = 0.45);

/// Total element count over all trainable tensors.
int64_t count_parameters(const ParamMap& params);

void save_metrics_report(const MetricsReport& report, const std::string& path);
MetricsReport load_metrics_report(const std::string& path);

}  // namespace ccsp
