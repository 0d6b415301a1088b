#include "ccsp/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include <json.hpp>

#include "ccsp/image_io.hpp"
#include "ccsp/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ccsp {

std::string kind_name(DegradationKind k) {
    switch (k) {
        case DegradationKind::fog: return "fog";
        case DegradationKind::rain: return "rain";
        case DegradationKind::motion_blur: return "blur";
    }
    return "fog";
}

DegradationKind kind_from_name(const std::string& name) {
    if (name == "fog") return DegradationKind::fog;
    if (name == "rain") return DegradationKind::rain;
    if (name == "blur" || name == "motion_blur") return DegradationKind::motion_blur;
    throw InputError("unknown degradation kind: " + name);
}

void ConditionMix::validate() const {
    if (fog < 0 || rain < 0 || blur < 0) throw InputError("condition mix: negative proportion");
    if (std::abs(fog + rain + blur - 1.0) > 1e-6) {
        throw InputError("condition mix proportions must sum to 1");
    }
}

Tensor depth_proxy(int h, int w, uint64_t seed) {
    // Coarse noise grid, bilinearly upsampled.
    const int cell = 16;
    const int gy = std::max(2, h / cell + 2);
    const int gx = std::max(2, w / cell + 2);
    Tensor grid({gy, gx, 1});
    Rng rng(mix_seed(seed, "depth-noise"));
    grid.fill_uniform(rng, -0.1, 0.1);

    Tensor d({h, w, 1});
    for (int y = 0; y < h; ++y) {
        const double base = 1.0 - 0.8 * (h > 1 ? static_cast<double>(y) / (h - 1) : 0.0);
        const double fy = (gy - 1) * (h > 1 ? static_cast<double>(y) / (h - 1) : 0.0);
        const int y0 = std::min(static_cast<int>(fy), gy - 2);
        const double ty = fy - y0;
        for (int x = 0; x < w; ++x) {
            const double fx = (gx - 1) * (w > 1 ? static_cast<double>(x) / (w - 1) : 0.0);
            const int x0 = std::min(static_cast<int>(fx), gx - 2);
            const double tx = fx - x0;
            const double noise = (1 - ty) * ((1 - tx) * grid[y0 * gx + x0] + tx * grid[y0 * gx + x0 + 1]) +
                                 ty * ((1 - tx) * grid[(y0 + 1) * gx + x0] + tx * grid[(y0 + 1) * gx + x0 + 1]);
            d[y * w + x] = std::max(0.0, base + noise);
        }
    }
    return d;
}

namespace {

void check_image(const Tensor& image, const char* op) {
    if (image.rank() != 3) throw InputError(std::string(op) + ": expected a (C, H, W) image");
}

double clamp01d(double v) { return std::min(1.0, std::max(0.0, v)); }

/// 1-px-wide line kernel of `length` taps at `angle_deg`, entries sum to 1.
Tensor line_kernel(int length, double angle_deg) {
    const int half = (length - 1) / 2;
    const int K = 2 * ((length - 1 + 1) / 2) + 1;  // odd, covers any rotation
    Tensor kernel({K, K, 1});
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double dx = std::cos(rad), dy = std::sin(rad);
    const int c = K / 2;
    for (int i = 0; i < length; ++i) {
        const double o = static_cast<double>(i) - (length - 1) / 2.0;
        const double px = c + o * dx;
        const double py = c + o * dy;
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double tx = px - x0, ty = py - y0;
        for (int sy = 0; sy <= 1; ++sy) {
            for (int sx = 0; sx <= 1; ++sx) {
                const int xx = x0 + sx, yy = y0 + sy;
                if (xx < 0 || xx >= K || yy < 0 || yy >= K) continue;
                kernel[yy * K + xx] += (sx ? tx : 1 - tx) * (sy ? ty : 1 - ty);
            }
        }
    }
    const double total = kernel.sum();
    for (int64_t i = 0; i < kernel.numel(); ++i) kernel[i] /= total;
    (void)half;
    return kernel;
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

Tensor convolve_reflect(const Tensor& image, const Tensor& kernel) {
    const int C = static_cast<int>(image.dim(0));
    const int H = static_cast<int>(image.dim(1));
    const int W = static_cast<int>(image.dim(2));
    const int K = static_cast<int>(kernel.dim(0));
    const int c0 = K / 2;
    Tensor out(image.shape());
    for (int ch = 0; ch < C; ++ch) {
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int ky = 0; ky < K; ++ky) {
                    for (int kx = 0; kx < K; ++kx) {
                        const double kv = kernel[ky * K + kx];
                        if (kv == 0.0) continue;
                        const int iy = reflect_index(y + ky - c0, H);
                        const int ix = reflect_index(x + kx - c0, W);
                        acc += kv * image.at(ch, iy, ix);
                    }
                }
                out.at(ch, y, x) = acc;
            }
        }
    }
    return out;
}

}  // namespace

Tensor apply_fog(const Tensor& image, double beta, double airlight, uint64_t seed) {
    check_image(image, "apply_fog");
    if (beta < 0.0) throw InputError("apply_fog: beta must be nonnegative");
    const int H = static_cast<int>(image.dim(1));
    const int W = static_cast<int>(image.dim(2));
    Tensor d = depth_proxy(H, W, seed);
    Tensor out(image.shape());
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double t = std::exp(-beta * d[y * W + x]);
            for (int c = 0; c < 3; ++c) {
                out.at(c, y, x) = clamp01d(image.at(c, y, x) * t + airlight * (1.0 - t));
            }
        }
    }
    return out;
}

Tensor apply_motion_blur(const Tensor& image, int length, double angle_deg) {
    check_image(image, "apply_motion_blur");
    if (length < 1) throw InputError("apply_motion_blur: length must be >= 1");
    if (length == 1) return image;
    return convolve_reflect(image, line_kernel(length, angle_deg));
}

Tensor apply_rain(const Tensor& image, const DegradationSpec& spec, uint64_t seed) {
    check_image(image, "apply_rain");
    if (spec.rain_streak_count < 0 || spec.rain_length < 1.0 || spec.rain_brightness < 0.0 ||
        spec.rain_brightness > 1.0) {
        throw InputError("apply_rain: invalid streak parameters");
    }
    const int H = static_cast<int>(image.dim(1));
    const int W = static_cast<int>(image.dim(2));
    if (spec.rain_streak_count == 0) return image;

    Tensor overlay({1, H, W});
    Rng rng(mix_seed(seed, "rain"));
    for (int s = 0; s < spec.rain_streak_count; ++s) {
        const double cx = rng.uniform(0.0, W);
        const double cy = rng.uniform(0.0, H);
        const double ang = (spec.rain_angle + rng.uniform(-10.0, 10.0)) * std::numbers::pi / 180.0;
        const double dx = std::cos(ang), dy = std::sin(ang);
        const double step = 0.5;
        const int steps = static_cast<int>(spec.rain_length / step);
        for (int i = 0; i <= steps; ++i) {
            const double o = i * step - spec.rain_length / 2.0;
            const double px = cx + o * dx;
            const double py = cy + o * dy;
            const int x0 = static_cast<int>(std::floor(px));
            const int y0 = static_cast<int>(std::floor(py));
            const double tx = px - x0, ty = py - y0;
            for (int sy = 0; sy <= 1; ++sy) {
                for (int sx = 0; sx <= 1; ++sx) {
                    const int xx = x0 + sx, yy = y0 + sy;
                    if (xx < 0 || xx >= W || yy < 0 || yy >= H) continue;
                    overlay.at(0, yy, xx) +=
                        spec.rain_brightness * step * (sx ? tx : 1 - tx) * (sy ? ty : 1 - ty);
                }
            }
        }
    }
    // Soften the streaks along the base angle, then composite additively.
    overlay = apply_motion_blur(overlay, 3, spec.rain_angle);
    Tensor out(image.shape());
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                out.at(c, y, x) = clamp01d(image.at(c, y, x) + overlay.at(0, y, x));
            }
        }
    }
    return out;
}

Tensor apply_degradation(const Tensor& image, const DegradationSpec& spec) {
    switch (spec.kind) {
        case DegradationKind::fog:
            return apply_fog(image, spec.fog_beta, spec.fog_airlight, spec.seed);
        case DegradationKind::rain:
            return apply_rain(image, spec, spec.seed);
        case DegradationKind::motion_blur:
            return apply_motion_blur(image, spec.blur_length, spec.blur_angle);
    }
    throw InputError("apply_degradation: unknown kind");
}

int CorpusManifest::count(DegradationKind k) const {
    int n = 0;
    for (const auto& e : entries) {
        if (e.spec.kind == k) ++n;
    }
    return n;
}

namespace {

DegradationSpec draw_spec(Rng& rng, const ConditionMix& mix, const ParamRanges& r, int width,
                          uint64_t seed) {
    DegradationSpec spec;
    spec.seed = seed;
    const double pick = rng.uniform();
    const double px_scale = r.scale_with_width ? static_cast<double>(width) / 640.0 : 1.0;
    if (pick < mix.fog) {
        spec.kind = DegradationKind::fog;
        spec.fog_beta = rng.uniform(r.beta_min, r.beta_max);
        spec.fog_airlight = rng.uniform(r.airlight_min, r.airlight_max);
    } else if (pick < mix.fog + mix.rain) {
        spec.kind = DegradationKind::rain;
        spec.rain_streak_count = std::max(
            0, static_cast<int>(std::lround(rng.range(r.streaks_min, r.streaks_max) * px_scale)));
        spec.rain_length = std::max(2.0, rng.uniform(r.rain_len_min, r.rain_len_max) * px_scale);
        spec.rain_angle = rng.uniform(r.rain_angle_min, r.rain_angle_max);
        spec.rain_brightness = rng.uniform(r.rain_brightness_min, r.rain_brightness_max);
    } else {
        spec.kind = DegradationKind::motion_blur;
        spec.blur_length = std::max(
            1, static_cast<int>(std::lround(rng.range(r.blur_len_min, r.blur_len_max) * px_scale)));
        spec.blur_angle = rng.uniform(r.blur_angle_min, r.blur_angle_max);
    }
    return spec;
}

json spec_to_json(const DegradationSpec& s) {
    json j;
    j["kind"] = kind_name(s.kind);
    j["seed"] = s.seed;
    switch (s.kind) {
        case DegradationKind::fog:
            j["beta"] = s.fog_beta;
            j["airlight"] = s.fog_airlight;
            break;
        case DegradationKind::rain:
            j["streaks"] = s.rain_streak_count;
            j["length"] = s.rain_length;
            j["angle"] = s.rain_angle;
            j["brightness"] = s.rain_brightness;
            break;
        case DegradationKind::motion_blur:
            j["length"] = s.blur_length;
            j["angle"] = s.blur_angle;
            break;
    }
    return j;
}

DegradationSpec spec_from_json(const json& j) {
    DegradationSpec s;
    s.kind = kind_from_name(j.at("kind").get<std::string>());
    s.seed = j.at("seed").get<uint64_t>();
    switch (s.kind) {
        case DegradationKind::fog:
            s.fog_beta = j.at("beta").get<double>();
            s.fog_airlight = j.at("airlight").get<double>();
            break;
        case DegradationKind::rain:
            s.rain_streak_count = j.at("streaks").get<int>();
            s.rain_length = j.at("length").get<double>();
            s.rain_angle = j.at("angle").get<double>();
            s.rain_brightness = j.at("brightness").get<double>();
            break;
        case DegradationKind::motion_blur:
            s.blur_length = j.at("length").get<int>();
            s.blur_angle = j.at("angle").get<double>();
            break;
    }
    return s;
}

}  // namespace

CorpusManifest generate_corpus(const std::string& clean_dir, const std::string& out_dir,
                               const ConditionMix& mix, const ParamRanges& ranges,
                               uint64_t global_seed) {
    mix.validate();
    const fs::path in_root(clean_dir);
    if (!fs::is_directory(in_root)) throw InputError("clean directory not found: " + clean_dir);
    const bool split_layout = fs::is_directory(in_root / "images");
    const fs::path image_root = split_layout ? in_root / "images" : in_root;
    const fs::path label_root = split_layout ? in_root / "labels" : in_root;

    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(image_root)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            images.push_back(entry.path());
        }
    }
    std::sort(images.begin(), images.end());

    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "labels");

    CorpusManifest manifest;
    manifest.global_seed = global_seed;
    manifest.proportions = mix;

    for (const fs::path& img_path : images) {
        const std::string stem = img_path.stem().string();
        const std::string rel = "images/" + img_path.filename().string();
        const fs::path label_path = label_root / (stem + ".txt");
        if (!fs::exists(label_path)) {
            manifest.errors.push_back(rel + ": missing label file");
            continue;
        }
        Tensor image;
        try {
            image = load_image_rgb(img_path.string());
        } catch (const std::exception& e) {
            manifest.errors.push_back(rel + ": " + e.what());
            continue;
        }
        const uint64_t seed = mix_seed(global_seed, rel);
        Rng rng(seed);
        DegradationSpec spec = draw_spec(rng, mix, ranges, static_cast<int>(image.dim(2)), seed);
        Tensor degraded = apply_degradation(image, spec);

        const fs::path out_img = fs::path(out_dir) / "images" / img_path.filename();
        const fs::path out_lbl = fs::path(out_dir) / "labels" / (stem + ".txt");
        save_image_rgb(degraded, out_img.string());
        write_file_bytes(out_lbl.string(), read_file_bytes(label_path.string()));

        ManifestEntry entry;
        entry.image = rel;
        entry.label = "labels/" + stem + ".txt";
        entry.spec = spec;
        entry.sha256 = sha256_file(out_img.string());
        manifest.entries.push_back(std::move(entry));
    }

    save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    return manifest;
}

void save_manifest(const CorpusManifest& manifest, const std::string& path) {
    json j;
    j["global_seed"] = manifest.global_seed;
    j["proportions"] = {{"fog", manifest.proportions.fog},
                        {"rain", manifest.proportions.rain},
                        {"blur", manifest.proportions.blur}};
    j["entries"] = json::array();
    for (const auto& e : manifest.entries) {
        j["entries"].push_back({{"image", e.image},
                                {"label", e.label},
                                {"kind", kind_name(e.spec.kind)},
                                {"params", spec_to_json(e.spec)},
                                {"sha256", e.sha256}});
    }
    j["errors"] = manifest.errors;
    write_file_bytes(path, j.dump(2) + "\n");
}

CorpusManifest load_manifest(const std::string& path) {
    json j = json::parse(read_file_bytes(path));
    CorpusManifest m;
    m.global_seed = j.at("global_seed").get<uint64_t>();
    m.proportions.fog = j.at("proportions").at("fog").get<double>();
    m.proportions.rain = j.at("proportions").at("rain").get<double>();
    m.proportions.blur = j.at("proportions").at("blur").get<double>();
    for (const auto& je : j.at("entries")) {
        ManifestEntry e;
        e.image = je.at("image").get<std::string>();
        e.label = je.at("label").get<std::string>();
        e.spec = spec_from_json(je.at("params"));
        e.sha256 = je.at("sha256").get<std::string>();
        m.entries.push_back(std::move(e));
    }
    if (j.contains("errors")) {
        for (const auto& err : j.at("errors")) m.errors.push_back(err.get<std::string>());
    }
    return m;
}

}  // namespace ccsp
