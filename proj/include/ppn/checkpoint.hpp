#pragma once

#include <cstdint>
#include <string>

#include "ppn/model.hpp"

namespace ppn {

struct Checkpoint {
  PPNParams params;
  SigmaSchedule sched;
  int64_t T = 0;  // environment samples seen when saved
};

// Versioned little-endian binary: magic, dims, T, sigma schedule, then each
// named tensor (shape + row-major doubles). Round trip is bit-exact.
void save_checkpoint(const std::string& path, const PPNParams& params,
                     const SigmaSchedule& sched, int64_t T);
// Missing file / bad magic / truncation -> std::runtime_error.
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a 64-bit hash of the file bytes, as fixed-width hex.
std::string checkpoint_hash(const std::string& path);

}  // namespace ppn
