#pragma once

#include <string>
#include <vector>

#include "ccsp/tensor.hpp"

namespace ccsp {

enum class DegradationKind { fog, rain, motion_blur };

std::string kind_name(DegradationKind k);
DegradationKind kind_from_name(const std::string& name);

/// Parameters of one synthetic extreme condition; `kind` selects which
/// group is read.
struct DegradationSpec {
    DegradationKind kind = DegradationKind::fog;
    // fog
    double fog_beta = 1.0;
    double fog_airlight = 0.9;
    // rain
    int rain_streak_count = 0;
    double rain_length = 12.0;
    double rain_angle = 90.0;  // degrees, 0 = horizontal
    double rain_brightness = 0.5;
    // motion blur
    int blur_length = 7;
    double blur_angle = 0.0;

    uint64_t seed = 0;
};

/// Smooth per-pixel depth proxy: 1 at the top row falling to 0.2 at the
/// bottom, plus seeded low-frequency noise of amplitude 0.1.
Tensor depth_proxy(int h, int w, uint64_t seed);

/// Atmospheric scattering: I = J*t + A*(1-t), t = exp(-beta * depth).
Tensor apply_fog(const Tensor& image, double beta, double airlight, uint64_t seed);

/// Convolution with a normalized 1-px-wide line kernel, reflect padded.
Tensor apply_motion_blur(const Tensor& image, int length, double angle_deg);

/// Additive bright streaks (angle jittered +-10 degrees) softened by a
/// length-3 blur along the base angle.
Tensor apply_rain(const Tensor& image, const DegradationSpec& spec, uint64_t seed);

Tensor apply_degradation(const Tensor& image, const DegradationSpec& spec);

struct ConditionMix {
    double fog = 1.0 / 3.0;
    double rain = 1.0 / 3.0;
    double blur = 1.0 / 3.0;

    void validate() const;
};

/// Draw ranges for per-image specs. Pixel-denominated entries (blur length,
/// streak count/length) are calibrated for 640-wide images and scaled
/// linearly with the actual width when `scale_with_width` is set.
struct ParamRanges {
    double beta_min = 0.5, beta_max = 2.0;
    double airlight_min = 0.7, airlight_max = 1.0;
    int blur_len_min = 5, blur_len_max = 15;
    double blur_angle_min = 0.0, blur_angle_max = 180.0;
    int streaks_min = 100, streaks_max = 300;
    double rain_len_min = 18.0, rain_len_max = 30.0;
    double rain_angle_min = 70.0, rain_angle_max = 110.0;
    double rain_brightness_min = 0.3, rain_brightness_max = 0.7;
    bool scale_with_width = true;
};

struct ManifestEntry {
    std::string image;  // path relative to the corpus root
    std::string label;
    DegradationSpec spec;
    std::string sha256;  // hash of the written image file
};

struct CorpusManifest {
    uint64_t global_seed = 0;
    ConditionMix proportions;
    std::vector<ManifestEntry> entries;
    std::vector<std::string> errors;  // per-entry problems, entries skipped

    int count(DegradationKind k) const;
};

/// Degrades every labeled image under clean_dir into out_dir (images/ +
/// labels/), drawing one condition per image from the mix. Per-image seeds
/// derive from (global_seed, relative path) so regeneration is
/// order-independent. Labels are copied byte-identically.
CorpusManifest generate_corpus(const std::string& clean_dir, const std::string& out_dir,
                               const ConditionMix& mix, const ParamRanges& ranges,
                               uint64_t global_seed);

/// manifest.json round trip.
void save_manifest(const CorpusManifest& manifest, const std::string& path);
CorpusManifest load_manifest(const std::string& path);

}  // namespace ccsp
