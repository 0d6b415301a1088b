#include "ccsp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "ccsp/image_io.hpp"
#include "json_util.hpp"

using nlohmann::json;

namespace ccsp {

double iou(const Box& a, const Box& b) {
    const double ix = std::min(a.cx + a.w / 2, b.cx + b.w / 2) -
                      std::max(a.cx - a.w / 2, b.cx - b.w / 2);
    const double iy = std::min(a.cy + a.h / 2, b.cy + b.h / 2) -
                      std::max(a.cy - a.h / 2, b.cy - b.h / 2);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.w * a.h + b.w * b.h - inter);
}

std::vector<bool> match_detections(const std::vector<Detection>& dets,
                                   const std::vector<LabeledBox>& truths, double iou_threshold) {
    std::vector<bool> flags(dets.size(), false);
    std::vector<bool> consumed(truths.size(), false);
    for (size_t i = 0; i < dets.size(); ++i) {
        int best = -1;
        double best_iou = 0.0;
        for (size_t t = 0; t < truths.size(); ++t) {
            if (consumed[t] || truths[t].cls != dets[i].class_id) continue;
            const double v = iou(dets[i].box, truths[t].box);
            if (v > best_iou) {
                best_iou = v;
                best = static_cast<int>(t);
            }
        }
        if (best >= 0 && best_iou >= iou_threshold) {
            flags[i] = true;
            consumed[static_cast<size_t>(best)] = true;
        }
    }
    return flags;
}

double average_precision(const std::vector<std::pair<double, bool>>& scored, int64_t truth_count) {
    if (truth_count == 0) return scored.empty() ? 1.0 : 0.0;
    if (scored.empty()) return 0.0;

    std::vector<size_t> order(scored.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scored[a].first > scored[b].first; });

    const size_t n = order.size();
    std::vector<double> precision(n), recall(n);
    int64_t tp = 0;
    for (size_t k = 0; k < n; ++k) {
        if (scored[order[k]].second) ++tp;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(tp) / static_cast<double>(truth_count);
    }
    // Precision envelope (running max from the right).
    std::vector<double> envelope(n);
    double pmax = 0.0;
    for (size_t k = n; k-- > 0;) {
        pmax = std::max(pmax, precision[k]);
        envelope[k] = pmax;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t k = 0; k < n; ++k) {
        if (recall[k] > prev_recall) {
            ap += (recall[k] - prev_recall) * envelope[k];
            prev_recall = recall[k];
        }
    }
    return ap;
}

MetricsReport evaluate(const std::vector<std::vector<Detection>>& raw_dets_per_image,
                       const std::vector<std::vector<LabeledBox>>& truths_per_image,
                       double conf_threshold, double nms_iou) {
    if (raw_dets_per_image.empty()) throw InputError("evaluate: empty dataset");
    if (raw_dets_per_image.size() != truths_per_image.size()) {
        throw InputError("evaluate: detections/truths image counts differ");
    }
    const size_t images = raw_dets_per_image.size();

    std::vector<std::vector<Detection>> kept(images);
    for (size_t i = 0; i < images; ++i) {
        kept[i] = nms(raw_dets_per_image[i], nms_iou, conf_threshold);
    }

    // Operating-point precision/recall at IoU 0.5.
    int64_t tp = 0, fp = 0, total_truths = 0;
    for (size_t i = 0; i < images; ++i) {
        std::vector<bool> flags = match_detections(kept[i], truths_per_image[i], 0.5);
        for (bool f : flags) (f ? tp : fp) += 1;
        total_truths += static_cast<int64_t>(truths_per_image[i].size());
    }
    MetricsReport report;
    report.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    report.recall = total_truths > 0 ? static_cast<double>(tp) / static_cast<double>(total_truths) : 0.0;

    std::set<int> classes;
    for (const auto& truths : truths_per_image) {
        for (const auto& t : truths) classes.insert(t.cls);
    }

    auto mean_ap = [&](double threshold, std::map<int, double>* store) {
        if (classes.empty()) return 0.0;
        double sum = 0.0;
        for (int cls : classes) {
            std::vector<std::pair<double, bool>> scored;
            int64_t truth_count = 0;
            for (size_t i = 0; i < images; ++i) {
                std::vector<Detection> cls_dets;
                std::vector<LabeledBox> cls_truths;
                for (const auto& d : kept[i]) {
                    if (d.class_id == cls) cls_dets.push_back(d);
                }
                for (const auto& t : truths_per_image[i]) {
                    if (t.cls == cls) cls_truths.push_back(t);
                }
                std::vector<bool> flags = match_detections(cls_dets, cls_truths, threshold);
                for (size_t k = 0; k < cls_dets.size(); ++k) {
                    scored.emplace_back(cls_dets[k].confidence, flags[k]);
                }
                truth_count += static_cast<int64_t>(cls_truths.size());
            }
            const double ap = average_precision(scored, truth_count);
            if (store) (*store)[cls] = ap;
            sum += ap;
        }
        return sum / static_cast<double>(classes.size());
    };

    report.map50 = mean_ap(0.5, &report.per_class_ap);
    report.map75 = mean_ap(0.75, nullptr);
    return report;
}

int64_t count_parameters(const ParamMap& params) { return param_count(params); }

void save_metrics_report(const MetricsReport& report, const std::string& path) {
    write_file_bytes(path, detail::metrics_to_json(report).dump(2) + "\n");
}

MetricsReport load_metrics_report(const std::string& path) {
    return detail::metrics_from_json(json::parse(read_file_bytes(path)));
}

}  // namespace ccsp
