#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ppn/linalg.hpp"
#include "ppn/model.hpp"
#include "ppn/rng.hpp"
#include "ppn/rollout.hpp"

using namespace ppn;

namespace {

// Direct summation of the GAE series, independent of the backward recursion:
// A_t = sum_l (gamma*lambda)^l * delta_{t+l}, stopping after a done step.
std::vector<double> gae_brute(const TrajectoryBatch& b, double gamma, double lambda) {
  int n = b.n;
  auto delta = [&](int k) {
    double not_done = b.done[static_cast<size_t>(k)] ? 0.0 : 1.0;
    double v_next = k + 1 < n ? b.v_old[static_cast<size_t>(k) + 1] : b.boot_value;
    return b.rew[static_cast<size_t>(k)] + gamma * not_done * v_next -
           b.v_old[static_cast<size_t>(k)];
  };
  std::vector<double> adv(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    double acc = 0.0, coef = 1.0;
    for (int l = 0; t + l < n; ++l) {
      acc += coef * delta(t + l);
      if (b.done[static_cast<size_t>(t + l)]) break;
      coef *= gamma * lambda;
    }
    adv[static_cast<size_t>(t)] = acc;
  }
  return adv;
}

TrajectoryBatch random_batch(int n, RngStream& rng, double p_done) {
  TrajectoryBatch b;
  b.n = n;
  b.obs_dim = 1;
  b.act_dim = 1;
  b.rew.resize(static_cast<size_t>(n));
  b.v_old.resize(static_cast<size_t>(n));
  b.done.resize(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    b.rew[static_cast<size_t>(t)] = rng.uniform(-2, 2);
    b.v_old[static_cast<size_t>(t)] = rng.uniform(-2, 2);
    b.done[static_cast<size_t>(t)] = rng.uniform() < p_done ? 1 : 0;
  }
  b.boot_value = rng.uniform(-2, 2);
  return b;
}

}  // namespace

TEST_CASE("sample_action draws mu + sigma * normal") {
  std::vector<double> mu = {0.5, -1.0, 2.0}, sig = {0.1, 0.5, 1.5}, out(3);
  RngStream rng(42), ref(42);
  sample_action(mu, sig, rng, out);
  for (int j = 0; j < 3; ++j)
    CHECK(out[static_cast<size_t>(j)] == mu[static_cast<size_t>(j)] +
                                             sig[static_cast<size_t>(j)] * ref.normal());
  CHECK(rng.next_u64() == ref.next_u64());
}

TEST_CASE("collect records a self-consistent batch") {
  RngStream init(substream_seed(7, 3));
  PPNParams p = PPNParams::init(4, 2, 16, init);
  SigmaSchedule sched = SigmaSchedule::uniform(2, 0.6, 0.1, 10000);
  PolicyEval pol(p);
  RolloutContext ctx("pointmass2d", substream_seed(7, 1));
  TrajectoryBatch b;
  EpisodeStats stats = collect(ctx, pol, sched, 64, b);

  REQUIRE(b.n == 64);
  CHECK(b.obs_dim == 4);
  CHECK(b.act_dim == 2);
  CHECK(b.hidden == 16);
  CHECK(b.obs.size() == 64 * 4);
  CHECK(b.act.size() == 64 * 2);
  CHECK(b.enc_old.size() == 64 * 16);
  CHECK(stats.returns.empty());  // pointmass episodes last 100 steps
  CHECK(ctx.T == 64);
  CHECK(ctx.ep_len == 64);

  std::vector<double> s(16), mu(2);
  for (int t = 0; t < 64; ++t) {
    std::span<const double> orow(b.obs.data() + t * 4, 4);
    std::span<const double> arow(b.act.data() + t * 2, 2);
    std::span<const double> erow(b.enc_old.data() + t * 16, 16);
    std::span<const double> srow(b.sigma.data() + t * 2, 2);

    pol.encode(orow, s);
    for (int j = 0; j < 16; ++j) CHECK(erow[static_cast<size_t>(j)] == s[static_cast<size_t>(j)]);
    CHECK(b.v_old[static_cast<size_t>(t)] == pol.value(s));

    pol.policy_mean(s, mu);
    CHECK(b.logp_old[static_cast<size_t>(t)] == gaussian_logp_row(mu, srow, arow));

    std::vector<double> sig_t = sched.at(t);
    CHECK(srow[0] == sig_t[0]);
    CHECK(srow[1] == sig_t[1]);
    CHECK(b.episode[static_cast<size_t>(t)] == 0);
    CHECK(!b.done[static_cast<size_t>(t)]);
  }

  // Bootstrap value comes from the next observation under the same policy.
  pol.encode(ctx.obs, s);
  CHECK(b.boot_value == pol.value(s));

  // Episodes continue across collection batches.
  TrajectoryBatch b2;
  EpisodeStats stats2 = collect(ctx, pol, sched, 64, b2);
  CHECK(ctx.T == 128);
  REQUIRE(stats2.returns.size() == 1);
  CHECK(stats2.lengths == std::vector<int>{100});
  CHECK(b2.done[35]);  // step 100 of the first episode
  CHECK(b2.episode[35] == 0);
  CHECK(b2.episode[36] == 1);
  double ep_ret = 0.0;
  for (int t = 0; t < 36; ++t) ep_ret += b2.rew[static_cast<size_t>(t)];
  for (int t = 0; t < 64; ++t) ep_ret += b.rew[static_cast<size_t>(t)];
  CHECK(stats2.returns[0] == doctest::Approx(ep_ret).epsilon(1e-12));
}

TEST_CASE("boot value is zero when the batch ends on done") {
  RngStream init(substream_seed(8, 3));
  PPNParams p = PPNParams::init(4, 2, 8, init);
  SigmaSchedule sched = SigmaSchedule::uniform(2, 0.5, 0.1, 10000);
  PolicyEval pol(p);
  RolloutContext ctx("pointmass2d", substream_seed(8, 1));
  TrajectoryBatch b;
  collect(ctx, pol, sched, 100, b);
  CHECK(b.done[99]);
  CHECK(b.boot_value == 0.0);
}

TEST_CASE("collect works on every registered env") {
  for (const auto& name : env_names()) {
    EnvSpec sp = env_spec(name);
    RngStream init(substream_seed(9, 3));
    PPNParams p = PPNParams::init(sp.obs_dim, sp.act_dim, 8, init);
    SigmaSchedule sched = SigmaSchedule::uniform(sp.act_dim, 0.5, 0.1, 10000);
    PolicyEval pol(p);
    RolloutContext ctx(name, substream_seed(9, 1));
    TrajectoryBatch b;
    collect(ctx, pol, sched, 256, b);
    CHECK(b.n == 256);
    CHECK(b.obs_dim == sp.obs_dim);
    for (double v : b.obs) CHECK(std::isfinite(v));
    for (double v : b.logp_old) CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(RolloutContext("nope", 0), std::invalid_argument);
}

TEST_CASE("gae matches direct series summation") {
  RngStream rng(1001);
  for (int rep = 0; rep < 50; ++rep) {
    TrajectoryBatch b = random_batch(20, rng, 0.25);
    double gamma = rng.uniform(0.0, 1.0), lambda = rng.uniform(0.0, 1.0);
    compute_gae(b, gamma, lambda);
    std::vector<double> brute = gae_brute(b, gamma, lambda);
    for (int t = 0; t < 20; ++t)
      CHECK(std::abs(b.adv[static_cast<size_t>(t)] - brute[static_cast<size_t>(t)]) <= 1e-10);
  }
}

TEST_CASE("lambda 0 reduces advantages to one-step TD errors") {
  RngStream rng(1002);
  TrajectoryBatch b = random_batch(30, rng, 0.2);
  double gamma = 0.97;
  compute_gae(b, gamma, 0.0);
  for (int t = 0; t < 30; ++t) {
    double not_done = b.done[static_cast<size_t>(t)] ? 0.0 : 1.0;
    double v_next = t + 1 < 30 ? b.v_old[static_cast<size_t>(t) + 1] : b.boot_value;
    double delta = b.rew[static_cast<size_t>(t)] + gamma * not_done * v_next -
                   b.v_old[static_cast<size_t>(t)];
    CHECK(b.adv[static_cast<size_t>(t)] == delta);
  }
}

TEST_CASE("gamma 1 lambda 1 with zero values gives return-to-go") {
  RngStream rng(1003);
  TrajectoryBatch b = random_batch(25, rng, 0.2);
  for (auto& v : b.v_old) v = 0.0;
  b.boot_value = 0.0;
  compute_gae(b, 1.0, 1.0);
  for (int t = 0; t < 25; ++t) {
    double rtg = 0.0;
    for (int k = t; k < 25; ++k) {
      rtg += b.rew[static_cast<size_t>(k)];
      if (b.done[static_cast<size_t>(k)]) break;
    }
    CHECK(b.adv[static_cast<size_t>(t)] == doctest::Approx(rtg).epsilon(1e-12));
  }
}

TEST_CASE("lambda 1 returns are the literal n-step sums") {
  RngStream rng(1004);
  for (int rep = 0; rep < 20; ++rep) {
    TrajectoryBatch b = random_batch(20, rng, 0.2);
    double gamma = rng.uniform(0.5, 1.0);
    compute_gae(b, gamma, 1.0);
    compute_returns(b);
    for (int t = 0; t < 20; ++t) {
      double ret = 0.0, disc = 1.0;
      int k = t;
      for (; k < 20; ++k) {
        ret += disc * b.rew[static_cast<size_t>(k)];
        if (b.done[static_cast<size_t>(k)]) break;
        disc *= gamma;
      }
      if (k == 20) ret += disc * b.boot_value;  // ran off the batch end
      CHECK(std::abs(b.ret[static_cast<size_t>(t)] - ret) <= 1e-10);
    }
  }
}

TEST_CASE("returns are advantages plus baseline values") {
  RngStream rng(1005);
  TrajectoryBatch b = random_batch(15, rng, 0.3);
  compute_gae(b, 0.99, 0.95);
  compute_returns(b);
  for (int t = 0; t < 15; ++t)
    CHECK(b.ret[static_cast<size_t>(t)] ==
          b.adv[static_cast<size_t>(t)] + b.v_old[static_cast<size_t>(t)]);
}

TEST_CASE("rewards injected after a done step leave earlier advantages unchanged") {
  RngStream rng(1006);
  TrajectoryBatch b = random_batch(20, rng, 0.0);
  int k = 11;
  b.done[static_cast<size_t>(k)] = 1;
  compute_gae(b, 0.99, 0.95);
  compute_returns(b);
  std::vector<double> adv_before(b.adv.begin(), b.adv.begin() + k + 1);
  std::vector<double> ret_before(b.ret.begin(), b.ret.begin() + k + 1);

  for (int t = k + 1; t < 20; ++t) {
    b.rew[static_cast<size_t>(t)] += 100.0;
    b.v_old[static_cast<size_t>(t)] -= 17.0;
  }
  b.boot_value = 1234.5;
  compute_gae(b, 0.99, 0.95);
  compute_returns(b);
  for (int t = 0; t <= k; ++t) {
    CHECK(b.adv[static_cast<size_t>(t)] == adv_before[static_cast<size_t>(t)]);
    CHECK(b.ret[static_cast<size_t>(t)] == ret_before[static_cast<size_t>(t)]);
  }
}

TEST_CASE("segment lengths count contiguous same-episode steps") {
  TrajectoryBatch b;
  b.n = 7;
  b.done = {0, 0, 1, 0, 1, 1, 0};
  compute_seg_len(b);
  CHECK(b.seg_len == std::vector<int>{3, 2, 1, 2, 1, 1, 1});

  TrajectoryBatch none;
  none.n = 4;
  none.done = {0, 0, 0, 0};
  compute_seg_len(none);
  CHECK(none.seg_len == std::vector<int>{4, 3, 2, 1});
}

TEST_CASE("grounded cache stores the frozen reward head") {
  RngStream init(substream_seed(10, 3));
  PPNParams p = PPNParams::init(4, 2, 8, init);
  SigmaSchedule sched = SigmaSchedule::uniform(2, 0.5, 0.1, 10000);
  PolicyEval pol(p);
  RolloutContext ctx("pointmass2d", substream_seed(10, 1));
  TrajectoryBatch b;
  collect(ctx, pol, sched, 32, b);
  compute_seg_len(b);
  cache_old_estimates(b, pol, ClipScheme::Grounded, 2);
  REQUIRE(b.rhat_grounded.size() == 32);
  for (int t = 0; t < 32; ++t) {
    std::span<const double> erow(b.enc_old.data() + t * 8, 8);
    std::span<const double> arow(b.act.data() + t * 2, 2);
    CHECK(b.rhat_grounded[static_cast<size_t>(t)] == pol.reward(erow, arow));
  }
  CHECK(b.cache_depth == 0);
  CHECK(b.v_old_depth.empty());
}

TEST_CASE("ungrounded cache unrolls the frozen model along recorded actions") {
  const int d = 2, h = 8, z = 2;
  RngStream init(substream_seed(11, 3));
  PPNParams p = PPNParams::init(4, z, h, init);
  SigmaSchedule sched = SigmaSchedule::uniform(z, 0.5, 0.1, 10000);
  PolicyEval pol(p);
  RolloutContext ctx("pointmass2d", substream_seed(11, 1));
  TrajectoryBatch b;
  collect(ctx, pol, sched, 150, b);  // one done inside at t = 99
  compute_seg_len(b);
  cache_old_estimates(b, pol, ClipScheme::Ungrounded, d);

  REQUIRE(b.cache_depth == d);
  REQUIRE(b.v_old_depth.size() == 150 * (d + 1));
  REQUIRE(b.rhat_old_depth.size() == 150 * d);
  REQUIRE(b.logp_old_depth.size() == 150 * d);

  std::vector<double> s(h), s_next(h), mu(z);
  for (int t : {0, 50, 98, 99, 147, 149}) {
    int depth = std::min(d, b.seg_len[static_cast<size_t>(t)]);
    std::copy(b.enc_old.begin() + t * h, b.enc_old.begin() + (t + 1) * h, s.begin());
    for (int i = 0; i < depth; ++i) {
      CHECK(b.v_old_depth[static_cast<size_t>(t) * (d + 1) + i] == pol.value(s));
      pol.policy_mean(s, mu);
      std::span<const double> sig(b.sigma.data() + static_cast<size_t>(t + i) * z, z);
      std::span<const double> act(b.act.data() + static_cast<size_t>(t + i) * z, z);
      CHECK(b.logp_old_depth[static_cast<size_t>(t) * d + i] == gaussian_logp_row(mu, sig, act));
      CHECK(b.rhat_old_depth[static_cast<size_t>(t) * d + i] == pol.reward(s, act));
      pol.transition(s, act, s_next);
      std::swap(s, s_next);
    }
    CHECK(b.v_old_depth[static_cast<size_t>(t) * (d + 1) + depth] == pol.value(s));
    for (int i = depth; i < d; ++i) {
      CHECK(b.logp_old_depth[static_cast<size_t>(t) * d + i] == 0.0);
      CHECK(b.rhat_old_depth[static_cast<size_t>(t) * d + i] == 0.0);
      if (i + 1 <= d && i + 1 > depth)
        CHECK(b.v_old_depth[static_cast<size_t>(t) * (d + 1) + i + 1] == 0.0);
    }
  }

  // Depth-0 slots coincide with the flat caches.
  for (int t = 0; t < 150; ++t) {
    CHECK(b.v_old_depth[static_cast<size_t>(t) * (d + 1)] == b.v_old[static_cast<size_t>(t)]);
    CHECK(b.logp_old_depth[static_cast<size_t>(t) * d] == b.logp_old[static_cast<size_t>(t)]);
    CHECK(b.rhat_old_depth[static_cast<size_t>(t) * d] == b.rhat_grounded[static_cast<size_t>(t)]);
  }

  CHECK_THROWS_AS(cache_old_estimates(b, pol, ClipScheme::Ungrounded, -1),
                  std::invalid_argument);
}

TEST_CASE("trajectory csv has one row per step") {
  RngStream init(substream_seed(12, 3));
  PPNParams p = PPNParams::init(4, 2, 8, init);
  SigmaSchedule sched = SigmaSchedule::uniform(2, 0.5, 0.1, 10000);
  PolicyEval pol(p);
  RolloutContext ctx("pointmass2d", substream_seed(12, 1));
  TrajectoryBatch b;
  collect(ctx, pol, sched, 16, b);

  std::string path = (std::filesystem::temp_directory_path() / "ppn_traj_test.csv").string();
  write_trajectory_csv(b, path);
  std::ifstream f(path);
  REQUIRE(f.good());
  std::string line;
  std::getline(f, line);
  CHECK(line == "t,episode,obs0,obs1,obs2,obs3,act0,act1,reward,done,v_old,logp_old");
  int rows = 0;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 16);
  std::filesystem::remove(path);
}
