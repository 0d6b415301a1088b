#include "ccsp/render.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>

namespace ccsp {

PixelRect box_to_pixel_rect(const Box& box, int width, int height) {
    PixelRect r;
    r.x0 = static_cast<int>(std::lround((box.cx - box.w / 2) * width));
    r.y0 = static_cast<int>(std::lround((box.cy - box.h / 2) * height));
    r.x1 = static_cast<int>(std::lround((box.cx + box.w / 2) * width)) - 1;
    r.y1 = static_cast<int>(std::lround((box.cy + box.h / 2) * height)) - 1;
    r.x0 = std::max(0, std::min(width - 1, r.x0));
    r.y0 = std::max(0, std::min(height - 1, r.y0));
    r.x1 = std::max(r.x0, std::min(width - 1, r.x1));
    r.y1 = std::max(r.y0, std::min(height - 1, r.y1));
    return r;
}

namespace {

cv::Mat tensor_to_bgr(const Tensor& image) {
    const int H = static_cast<int>(image.dim(1));
    const int W = static_cast<int>(image.dim(2));
    cv::Mat bgr(H, W, CV_8UC3);
    for (int y = 0; y < H; ++y) {
        cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::min(1.0, std::max(0.0, image.at(c, y, x)));
                row[x][2 - c] = static_cast<uchar>(std::lround(v * 255.0));
            }
        }
    }
    return bgr;
}

Tensor bgr_to_tensor(const cv::Mat& bgr) {
    Tensor out({3, bgr.rows, bgr.cols});
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = row[x][2 - c] / 255.0;
        }
    }
    return out;
}

std::string class_label(const RenderOptions& opts, int cls) {
    if (cls >= 0 && static_cast<size_t>(cls) < opts.class_names.size()) {
        return opts.class_names[static_cast<size_t>(cls)];
    }
    return "c" + std::to_string(cls);
}

}  // namespace

Tensor render_overlay(const Tensor& image, const std::vector<Detection>& dets,
                      const std::vector<LabeledBox>& gts, const RenderOptions& opts) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw InputError("render_overlay: expected a (3, H, W) image");
    }
    const int H = static_cast<int>(image.dim(1));
    const int W = static_cast<int>(image.dim(2));
    cv::Mat canvas = tensor_to_bgr(image);

    const cv::Scalar gt_color(255, 200, 0);    // cyan-ish for ground truth
    const cv::Scalar det_color(80, 220, 60);   // green for predictions
    for (const LabeledBox& gt : gts) {
        PixelRect r = box_to_pixel_rect(gt.box, W, H);
        cv::rectangle(canvas, {r.x0, r.y0}, {r.x1, r.y1}, gt_color, 1);
    }
    for (const Detection& d : dets) {
        PixelRect r = box_to_pixel_rect(d.box, W, H);
        cv::rectangle(canvas, {r.x0, r.y0}, {r.x1, r.y1}, det_color, 1);
        char text[64];
        std::snprintf(text, sizeof(text), "%s %.2f", class_label(opts, d.class_id).c_str(),
                      d.confidence);
        const int ty = r.y0 >= 8 ? r.y0 - 2 : r.y1 + 8;
        cv::putText(canvas, text, {r.x0, ty}, cv::FONT_HERSHEY_SIMPLEX, 0.28, det_color, 1,
                    cv::LINE_8);
    }

    cv::Mat with_footer;
    cv::copyMakeBorder(canvas, with_footer, 0, opts.footer_px, 0, 0, cv::BORDER_CONSTANT,
                       cv::Scalar(32, 32, 32));
    char footer[64];
    std::snprintf(footer, sizeof(footer), "%zu detection%s", dets.size(),
                  dets.size() == 1 ? "" : "s");
    cv::putText(with_footer, footer, {3, H + opts.footer_px - 5}, cv::FONT_HERSHEY_SIMPLEX, 0.32,
                cv::Scalar(235, 235, 235), 1, cv::LINE_8);
    return bgr_to_tensor(with_footer);
}

}  // namespace ccsp
