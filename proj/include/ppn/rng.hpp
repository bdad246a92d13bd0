#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ppn {

// Derives an independent stream seed from a master seed and a stream tag.
// Streams built from distinct tags are statistically independent, so changing
// how often one stream is consumed never perturbs the others.
uint64_t substream_seed(uint64_t master, uint64_t tag);

// Deterministic random stream. All draws are fully specified: uniforms come
// from the top 53 bits of mt19937_64 output, and every normal consumes exactly
// two uniforms (Box-Muller, cosine branch). This keeps draw counts predictable
// and results bit-reproducible across platforms and compilers.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();

  void fill_normal(std::span<double> out) {
    for (double& x : out) x = normal();
  }

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates permutation of 0..n-1 driven by `rng`.
std::vector<int> shuffle_indices(int n, RngStream& rng);

}  // namespace ppn
