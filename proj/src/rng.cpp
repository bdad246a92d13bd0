#include "ppn/rng.hpp"

#include <cmath>
#include <numbers>

namespace ppn {

// splitmix64 finalizer; decorrelates seeds that differ in a few bits.
static uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t substream_seed(uint64_t master, uint64_t tag) {
  return splitmix64(master ^ splitmix64(tag));
}

double RngStream::normal() {
  // u1 in (0, 1] so the log argument is never zero.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<int> shuffle_indices(int n, RngStream& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    // Debiased bounded draw; bias of plain modulo is negligible but cheap to avoid.
    int j = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace ppn
