#include "ccsp/model.hpp"

namespace ccsp {

void ModelConfig::validate() const {
    anchors.validate();
    if (anchors.scales() != 3) {
        throw ConfigError("model: expected anchors for exactly 3 scales, got " +
                          std::to_string(anchors.scales()));
    }
    if (classes < 1) throw ConfigError("model: classes must be >= 1");
    if (widths.c3 < 1 || widths.c4 < 1 || widths.c5 < 1) {
        throw ConfigError("model: channel widths must be positive");
    }
}

DetectorModel DetectorModel::make(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    DetectorModel m;
    m.cfg = cfg;
    const uint64_t det_seed = mix_seed(seed, "det");
    m.backbone = BackboneParams::make(cfg.widths, "backbone", det_seed);
    m.neck = NeckParams::make(cfg.widths, cfg.cot, "neck", det_seed);
    m.head = HeadParams::make({cfg.widths.c3, cfg.widths.c4, cfg.widths.c5},
                              cfg.anchors_per_cell(), cfg.classes, "head", det_seed);
    return m;
}

HeadOutput DetectorModel::forward(const Variable& images) const {
    return head_forward(neck_forward(backbone_forward(images, backbone), neck), head, cfg.anchors);
}

std::vector<GridSize> DetectorModel::grids_for(int h, int w) const {
    return {{h / 8, w / 8}, {h / 16, w / 16}, {h / 32, w / 32}};
}

void DetectorModel::collect(ParamMap& out) const {
    backbone.collect(out);
    neck.collect(out);
    head.collect(out);
}

}  // namespace ccsp
