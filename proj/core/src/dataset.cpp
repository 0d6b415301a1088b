#include "ccsp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "ccsp/image_io.hpp"

namespace fs = std::filesystem;

namespace ccsp {

namespace {

double overlap_iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.cx + a.w / 2, b.cx + b.w / 2) -
                                        std::max(a.cx - a.w / 2, b.cx - b.w / 2));
    const double iy = std::max(0.0, std::min(a.cy + a.h / 2, b.cy + b.h / 2) -
                                        std::max(a.cy - a.h / 2, b.cy - b.h / 2));
    const double inter = ix * iy;
    return inter / (a.w * a.h + b.w * b.h - inter + 1e-12);
}

struct Rgb {
    double r, g, b;
};

void paint_shape(Tensor& img, int cls, const Box& box, const Rgb& fill, int W, int H) {
    const double cx = box.cx * W, cy = box.cy * H;
    const double rx = box.w * W / 2.0, ry = box.h * H / 2.0;
    const int x0 = std::max(0, static_cast<int>(cx - rx) - 1);
    const int x1 = std::min(W - 1, static_cast<int>(cx + rx) + 1);
    const int y0 = std::max(0, static_cast<int>(cy - ry) - 1);
    const int y1 = std::min(H - 1, static_cast<int>(cy + ry) + 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double u = (x + 0.5 - cx) / rx;
            const double v = (y + 0.5 - cy) / ry;
            bool inside = false;
            bool ring = false;
            if (cls == 0) {
                // Triangle pointing up: apex (0,-1), base corners (+-1, 1).
                inside = v >= -1.0 && v <= 1.0 && std::abs(u) <= (v + 1.0) / 2.0;
            } else if (cls == 1) {
                const double r = u * u + v * v;
                inside = r <= 1.0;
                ring = inside && r >= 0.55;  // colored rim, pale center
            } else {
                inside = std::abs(u) <= 1.0 && std::abs(v) <= 1.0 &&
                         std::abs(u) + std::abs(v) <= std::numbers::sqrt2;
            }
            if (!inside) continue;
            Rgb c = fill;
            if (cls == 1 && !ring) c = {0.92, 0.92, 0.9};
            img.at(0, y, x) = c.r;
            img.at(1, y, x) = c.g;
            img.at(2, y, x) = c.b;
        }
    }
}

}  // namespace

SynthSample synth_sample(int width, int height, int min_shapes, int max_shapes, uint64_t seed) {
    SynthSample s;
    s.image = Tensor({3, height, width});
    Rng rng(mix_seed(seed, "synth"));

    // Textured background: per-channel base tone plus low-frequency blotches.
    const double base_r = rng.uniform(0.25, 0.6);
    const double base_g = rng.uniform(0.25, 0.6);
    const double base_b = rng.uniform(0.25, 0.6);
    const int g = 5;
    Tensor blotch({g, g, 1});
    blotch.fill_uniform(rng, -0.12, 0.12);
    for (int y = 0; y < height; ++y) {
        const double fy = (g - 1) * static_cast<double>(y) / std::max(1, height - 1);
        const int gy = std::min(static_cast<int>(fy), g - 2);
        const double ty = fy - gy;
        for (int x = 0; x < width; ++x) {
            const double fx = (g - 1) * static_cast<double>(x) / std::max(1, width - 1);
            const int gx = std::min(static_cast<int>(fx), g - 2);
            const double tx = fx - gx;
            const double n = (1 - ty) * ((1 - tx) * blotch[gy * g + gx] + tx * blotch[gy * g + gx + 1]) +
                             ty * ((1 - tx) * blotch[(gy + 1) * g + gx] + tx * blotch[(gy + 1) * g + gx + 1]);
            const double grain = rng.uniform(-0.03, 0.03);
            s.image.at(0, y, x) = std::clamp(base_r + n + grain, 0.05, 0.95);
            s.image.at(1, y, x) = std::clamp(base_g + n + grain, 0.05, 0.95);
            s.image.at(2, y, x) = std::clamp(base_b + n + grain, 0.05, 0.95);
        }
    }

    const int count = static_cast<int>(rng.range(min_shapes, max_shapes));
    for (int i = 0; i < count; ++i) {
        Box box;
        int cls = static_cast<int>(rng.below(3));
        bool placed = false;
        for (int attempt = 0; attempt < 25 && !placed; ++attempt) {
            box.w = rng.uniform(0.25, 0.45);
            box.h = rng.uniform(0.25, 0.45);
            box.cx = rng.uniform(box.w / 2 + 0.03, 1.0 - box.w / 2 - 0.03);
            box.cy = rng.uniform(box.h / 2 + 0.03, 1.0 - box.h / 2 - 0.03);
            placed = true;
            for (const LabeledBox& other : s.boxes) {
                if (overlap_iou(box, other.box) > 0.2) {
                    placed = false;
                    break;
                }
            }
        }
        if (!placed) continue;
        Rgb fill;
        if (cls == 0) {
            fill = {rng.uniform(0.85, 0.95), rng.uniform(0.7, 0.85), rng.uniform(0.05, 0.2)};
        } else if (cls == 1) {
            fill = {rng.uniform(0.05, 0.2), rng.uniform(0.2, 0.4), rng.uniform(0.75, 0.95)};
        } else {
            fill = {rng.uniform(0.75, 0.92), rng.uniform(0.05, 0.18), rng.uniform(0.08, 0.2)};
        }
        paint_shape(s.image, cls, box, fill, width, height);
        s.boxes.push_back({cls, box});
    }
    return s;
}

void generate_synthetic_corpus(const SynthConfig& cfg, const std::string& out_dir) {
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "labels");
    for (int i = 0; i < cfg.count; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%04d", i);
        SynthSample s = synth_sample(cfg.width, cfg.height, cfg.min_shapes, cfg.max_shapes,
                                     mix_seed(cfg.seed, name));
        save_image_rgb(s.image, (fs::path(out_dir) / "images" / (std::string(name) + ".png")).string());
        save_labels(s.boxes, (fs::path(out_dir) / "labels" / (std::string(name) + ".txt")).string());
    }
}

bool Corpus::has_clean_pairs() const {
    return !samples.empty() && samples.front().clean.defined();
}

Corpus load_corpus(const std::string& dir, const std::string& paired_clean_dir) {
    const fs::path root(dir);
    if (!fs::is_directory(root / "images")) {
        throw InputError("corpus directory has no images/ subdirectory: " + dir);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / "images")) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("corpus has no images: " + dir);

    Corpus corpus;
    for (const fs::path& f : files) {
        Sample s;
        s.stem = f.stem().string();
        s.image = load_image_rgb(f.string());
        const fs::path label = root / "labels" / (s.stem + ".txt");
        if (!fs::exists(label)) throw InputError("missing label file: " + label.string());
        s.boxes = load_labels(label.string());
        if (!paired_clean_dir.empty()) {
            const fs::path clean = fs::path(paired_clean_dir) / "images" / f.filename();
            if (!fs::exists(clean)) {
                throw InputError("missing paired clean image: " + clean.string());
            }
            s.clean = load_image_rgb(clean.string());
            if (!s.clean.same_shape(s.image)) {
                throw InputError("paired image shape mismatch for stem " + s.stem);
            }
        }
        if (corpus.samples.empty()) {
            corpus.height = static_cast<int>(s.image.dim(1));
            corpus.width = static_cast<int>(s.image.dim(2));
        } else if (s.image.dim(1) != corpus.height || s.image.dim(2) != corpus.width) {
            throw InputError("corpus images must share one resolution");
        }
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

}  // namespace ccsp
