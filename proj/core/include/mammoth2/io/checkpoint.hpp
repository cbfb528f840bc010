#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mammoth2/params.hpp"

namespace m2::io {

// Single-file parameter container. Layout (all integers little-endian):
//   magic "M2CK" | version u32 | stage str | step u64 | config_hash u64
//   | entry count u64
// then per entry:
//   name str | ndim u64 | dims u64 each | dtype u32 (1 = f64) | raw LE data
// Strings are length-prefixed with a u64. Round-trip is bit-exact.
struct CheckpointMeta {
    std::string stage;
    uint64_t step = 0;
    uint64_t config_hash = 0;
};

struct CheckpointEntry {
    std::string name;
    numerics::Array value;
};

struct Checkpoint {
    CheckpointMeta meta;
    std::vector<CheckpointEntry> entries;
};

void save_checkpoint(const std::string& path, const ParamSet& ps, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::string& path);

// Strict restore: every parameter present with a matching shape; extra or
// missing names are validation errors. Returns the metadata.
CheckpointMeta load_into(const std::string& path, ParamSet& ps);

// FNV-1a over the canonical config text; stored in checkpoints so resuming
// under a different config is detectable.
uint64_t fnv1a(const std::string& text);

}  // namespace m2::io
