#pragma once

#include <string>
#include <vector>

#include "ccsp/detector.hpp"
#include "ccsp/tensor.hpp"

namespace ccsp {

/// Synthetic desk-scale corpus: 1-3 colored signs (triangle / circle /
/// octagon, class ids 0/1/2) on textured backgrounds.
struct SynthConfig {
    int count = 32;
    int width = 64;
    int height = 64;
    int min_shapes = 1;
    int max_shapes = 3;
    uint64_t seed = 1;
};

struct SynthSample {
    Tensor image;  // (3, H, W) in [0.05, 0.95]
    std::vector<LabeledBox> boxes;
};

SynthSample synth_sample(int width, int height, int min_shapes, int max_shapes, uint64_t seed);

/// Writes count samples to out_dir/images/NNNN.png + out_dir/labels/NNNN.txt.
void generate_synthetic_corpus(const SynthConfig& cfg, const std::string& out_dir);

/// One training/eval record. `clean` is only defined when a paired clean
/// directory was given at load time.
struct Sample {
    std::string stem;
    Tensor image;  // (3, H, W)
    Tensor clean;
    std::vector<LabeledBox> boxes;
};

struct Corpus {
    std::vector<Sample> samples;
    int height = 0;
    int width = 0;

    bool has_clean_pairs() const;
};

/// Loads images/ + labels/ from dir; when paired_clean_dir is nonempty the
/// same stems are loaded from it as restoration targets.
Corpus load_corpus(const std::string& dir, const std::string& paired_clean_dir = "");

}  // namespace ccsp
