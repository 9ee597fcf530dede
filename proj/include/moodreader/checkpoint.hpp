#pragma once

#include <map>
#include <string>

#include "moodreader/nn.hpp"

namespace mr {

/// Self-describing binary container: "MRCK" magic, version, then a flat map
/// of {name -> shape, little-endian doubles}. Used for checkpoints and for
/// exported feature tensors alike.
void save_container(const std::string& path, const std::map<std::string, Tensor>& entries);
std::map<std::string, Tensor> load_container(const std::string& path);

/// Parameter values (plus any extra state) keyed by parameter name.
std::map<std::string, Tensor> snapshot_params(const ParamStore& ps);
/// Assigns by name into existing parameters; shapes must match.
void restore_params(ParamStore& ps, const std::map<std::string, Tensor>& entries);

}  // namespace mr
