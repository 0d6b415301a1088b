#pragma once

#include <array>
#include <vector>

#include "ccsp/nn.hpp"

namespace ccsp {

/// Axis-aligned box, center/size normalized to image dims.
struct Box {
    double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;
};

struct LabeledBox {
    int cls = 0;
    Box box;
};

struct GridSize {
    int sy = 0, sx = 0;
};

/// Per-scale (w, h) shape priors, normalized to image dims.
struct AnchorSet {
    std::vector<std::vector<std::array<double, 2>>> per_scale;

    int scales() const { return static_cast<int>(per_scale.size()); }
    int anchors_per_cell() const { return per_scale.empty() ? 0 : static_cast<int>(per_scale[0].size()); }
    void validate() const;
};

AnchorSet default_anchors();

/// Responsibility grid for one scale. Channel layouts match the decoded
/// head tensors: xy/wh are anchor-major pairs, cls is anchor-major one-hot.
struct ScaleTarget {
    int sy = 0, sx = 0, B = 0, C = 0;
    Tensor obj_mask;    // (N, B, Sy, Sx)
    Tensor noobj_mask;  // complement of obj_mask
    Tensor xy;          // (N, 2B, Sy, Sx)
    Tensor wh;          // (N, 2B, Sy, Sx)
    Tensor wh_sqrt;     // sqrt of wh where assigned
    Tensor cls;         // (N, B*C, Sy, Sx)
    Tensor mask2;       // obj_mask repeated over the two coordinates
    Tensor maskC;       // obj_mask repeated over classes
};

struct GridTarget {
    std::vector<ScaleTarget> scales;

    int64_t responsible_count() const;
};

/// Assigns every ground-truth box to exactly one (scale, cell, anchor): the
/// center cell on each scale is considered and the co-centered prior with the
/// highest IoU wins; ties prefer the smaller scale index, then the smaller
/// anchor index. If the winning slot is already taken the next-best pair is
/// used.
GridTarget assign_targets(const std::vector<std::vector<LabeledBox>>& batch_labels,
                          const AnchorSet& anchors, const std::vector<GridSize>& grids,
                          int num_classes);

GridTarget assign_targets(const std::vector<LabeledBox>& labels, const AnchorSet& anchors,
                          const std::vector<GridSize>& grids, int num_classes);

/// Detection head: one 1x1 conv per scale emitting B*(5+C) channels.
struct HeadParams {
    int B = 3, C = 3;
    std::vector<Conv2d> convs;

    static HeadParams make(const std::vector<int>& widths, int B, int C, const std::string& name,
                           uint64_t seed);
    void collect(ParamMap& out) const;
};

/// Decoded predictions for one scale; xy/wh are absolute normalized
/// coordinates, obj/cls are probabilities.
struct ScalePrediction {
    int sy = 0, sx = 0, B = 0, C = 0;
    Variable xy;   // (N, 2B, Sy, Sx)
    Variable wh;   // (N, 2B, Sy, Sx)
    Variable obj;  // (N, B, Sy, Sx)
    Variable cls;  // (N, B*C, Sy, Sx)
};

struct HeadOutput {
    std::vector<ScalePrediction> scales;

    int64_t batch() const { return scales.empty() ? 0 : scales[0].obj.value().dim(0); }
};

/// Runs the per-scale convs and decodes: cx,cy = (cell + sigmoid)/S,
/// w,h = anchor * exp(clamp(t, +-4)), objectness/class through sigmoid.
HeadOutput head_forward(const BackboneOutput& neck_out, const HeadParams& params,
                        const AnchorSet& anchors);

struct Detection {
    Box box;
    int class_id = 0;
    double confidence = 0.0;  // p_obj * p(class)
};

/// Flattens one image's decoded grids into detections (no thresholding).
std::vector<Detection> extract_detections(const HeadOutput& head, int64_t image_index);

/// Standard greedy per-class suppression. Detections below conf_threshold
/// are dropped first; survivors are sorted by confidence descending, stable
/// by original index for ties.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold,
                           double conf_threshold);

}  // namespace ccsp
