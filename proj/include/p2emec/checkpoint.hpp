#pragma once

#include <filesystem>
#include <string>

#include "p2emec/nn.hpp"

namespace p2emec {

// Flat binary parameter checkpoint (version 1, little-endian):
//   magic "P2EMECKP", u32 version, u32 tensor count, then per tensor:
//   u32 name length, name bytes, u64 element count, raw f64 data.
// Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ParamRefs& params,
                     const std::string& tag);

// Loads into pre-shaped tensors; names, order, and sizes must match.
// Returns the stored tag.
std::string load_checkpoint(const std::filesystem::path& path, const ParamRefs& params);

}  // namespace p2emec
