#pragma once

#include "ccsp/denoiser.hpp"
#include "ccsp/detector.hpp"
#include "ccsp/losses.hpp"

namespace ccsp {

struct ModelConfig {
    BackboneConfig widths;
    int classes = 3;
    CotConfig cot;
    AnchorSet anchors = default_anchors();

    int anchors_per_cell() const { return anchors.anchors_per_cell(); }
    void validate() const;
};

/// Backbone -> CCSP neck -> detection head.
struct DetectorModel {
    ModelConfig cfg;
    BackboneParams backbone;
    NeckParams neck;
    HeadParams head;

    static DetectorModel make(const ModelConfig& cfg, uint64_t seed);
    HeadOutput forward(const Variable& images) const;
    std::vector<GridSize> grids_for(int h, int w) const;
    void collect(ParamMap& out) const;
};

}  // namespace ccsp
