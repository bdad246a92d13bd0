#include "ppn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace ppn {

namespace {

constexpr char kMagic[8] = {'P', 'P', 'N', 'C', 'K', 'P', 'T', '\x01'};
constexpr uint32_t kVersion = 1;

struct Writer {
  FILE* f;
  void bytes(const void* p, size_t n) {
    if (std::fwrite(p, 1, n, f) != n) throw std::runtime_error("checkpoint write failed");
  }
  void u32(uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void i64(int64_t v) {
    auto u = static_cast<uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) { i64(static_cast<int64_t>(std::bit_cast<uint64_t>(v))); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
};

struct Reader {
  FILE* f;
  std::string path;
  void bytes(void* p, size_t n) {
    if (std::fread(p, 1, n, f) != n)
      throw std::runtime_error("checkpoint truncated: " + path);
  }
  uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  }
  int64_t i64() {
    unsigned char b[8];
    bytes(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return static_cast<int64_t>(v);
  }
  double f64() { return std::bit_cast<double>(static_cast<uint64_t>(i64())); }
  std::string str() {
    uint32_t n = u32();
    if (n > 1024) throw std::runtime_error("checkpoint corrupt (name length): " + path);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const PPNParams& params,
                     const SigmaSchedule& sched, int64_t T) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  Writer w{f};
  w.bytes(kMagic, 8);
  w.u32(kVersion);
  w.u32(static_cast<uint32_t>(params.obs_dim));
  w.u32(static_cast<uint32_t>(params.act_dim));
  w.u32(static_cast<uint32_t>(params.hidden));
  w.i64(T);
  w.i64(sched.horizon);
  w.u32(static_cast<uint32_t>(sched.sigma_start.size()));
  for (double v : sched.sigma_start) w.f64(v);
  for (double v : sched.sigma_end) w.f64(v);
  auto tensors = params.all();
  w.u32(static_cast<uint32_t>(tensors.size()));
  for (const ParamTensor* t : tensors) {
    w.str(t->name);
    w.u32(static_cast<uint32_t>(t->rows));
    w.u32(static_cast<uint32_t>(t->cols));
    for (double v : t->data) w.f64(v);
  }
  std::fclose(f);
}

Checkpoint load_checkpoint(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open checkpoint " + path);
  Reader r{f, path};
  Checkpoint ck;
  try {
    char magic[8];
    r.bytes(magic, 8);
    if (!std::equal(magic, magic + 8, kMagic))
      throw std::runtime_error("not a checkpoint file: " + path);
    uint32_t version = r.u32();
    if (version != kVersion)
      throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                               ": " + path);
    int obs_dim = static_cast<int>(r.u32());
    int act_dim = static_cast<int>(r.u32());
    int hidden = static_cast<int>(r.u32());
    ck.T = r.i64();
    ck.sched.horizon = r.i64();
    uint32_t z = r.u32();
    ck.sched.sigma_start.resize(z);
    ck.sched.sigma_end.resize(z);
    for (double& v : ck.sched.sigma_start) v = r.f64();
    for (double& v : ck.sched.sigma_end) v = r.f64();
    ck.sched.validate();
    ck.params = PPNParams::zeros(obs_dim, act_dim, hidden);
    uint32_t nt = r.u32();
    auto tensors = ck.params.all();
    if (nt != tensors.size())
      throw std::runtime_error("checkpoint tensor count mismatch: " + path);
    for (ParamTensor* t : tensors) {
      std::string name = r.str();
      int rows = static_cast<int>(r.u32());
      int cols = static_cast<int>(r.u32());
      if (name != t->name || rows != t->rows || cols != t->cols)
        throw std::runtime_error("checkpoint tensor '" + name + "' shape/name mismatch: " +
                                 path);
      for (double& v : t->data) v = r.f64();
    }
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return ck;
}

std::string checkpoint_hash(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  unsigned char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0)
    for (size_t i = 0; i < n; ++i) {
      h ^= buf[i];
      h *= 0x100000001b3ULL;
    }
  std::fclose(f);
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace ppn
