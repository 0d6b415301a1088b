#pragma once

#include <string>
#include <vector>

#include "ccsp/detector.hpp"
#include "ccsp/tensor.hpp"

namespace ccsp {

/// Loads an 8-bit PNG/JPEG as a (3, H, W) RGB tensor in [0, 1].
Tensor load_image_rgb(const std::string& path);

/// Writes a (3, H, W) tensor in [0, 1] as an 8-bit RGB PNG.
void save_image_rgb(const Tensor& image, const std::string& path);

/// Label files: one "class_id cx cy w h" line per box, normalized reals,
/// LF-terminated.
std::vector<LabeledBox> load_labels(const std::string& path);
void save_labels(const std::vector<LabeledBox>& labels, const std::string& path);

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace ccsp
