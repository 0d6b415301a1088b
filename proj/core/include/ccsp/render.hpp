#pragma once

#include <string>
#include <vector>

#include "ccsp/detector.hpp"

namespace ccsp {

struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

PixelRect box_to_pixel_rect(const Box& box, int width, int height);

struct RenderOptions {
    int footer_px = 18;
    std::vector<std::string> class_names;  // falls back to "c<N>"
};

/// Draws detections (boxes, class names, confidences) and, when present,
/// ground-truth boxes in a second color. Appends a footer strip stating the
/// detection count, so the output is input height + footer_px tall.
Tensor render_overlay(const Tensor& image, const std::vector<Detection>& dets,
                      const std::vector<LabeledBox>& gts, const RenderOptions& opts = {});

}  // namespace ccsp
