#pragma once

#include "rulewise/autodiff/adam.hpp"
#include "rulewise/autodiff/network.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace rulewise::ad {

struct Checkpoint {
  Network network;
  std::optional<AdamState> optimizer;
};

/// Plain-text document: one `key value` line per spec field, then the
/// parameter vector (and optional Adam moments) one number per line with 17
/// significant digits. Parsing it back is bit-exact.
std::string serialize_checkpoint(const Checkpoint& cp);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rulewise::ad
