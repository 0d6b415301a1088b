#pragma once

#include <string>

#include "ccsp/nn.hpp"

namespace ccsp {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Binary parameter blob: magic, version, then (name, shape, float64 data)
/// records in ParamMap order. Loading into an existing map is shape-checked.
std::string encode_params(const ParamMap& params);
void decode_params(const std::string& blob, ParamMap& params);

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;
std::string encode_tensors(const NamedTensors& tensors);
NamedTensors parse_param_blob(const std::string& blob);

void save_params(const ParamMap& params, const std::string& path);
void load_params(ParamMap& params, const std::string& path);

}  // namespace ccsp
