#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "stelle/kernel.hpp"
#include "stelle/parser.hpp"
#include "stelle/robustness.hpp"

using namespace stelle;

namespace {

std::vector<Trajectory> sample(int m, int channels, int length, std::uint64_t seed) {
  KernelConfig cfg;
  cfg.mc_trajectories = m;
  cfg.mu0.seed = seed;
  return mc_sample(cfg, channels, length);
}

double variance(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return s / static_cast<double>(xs.size() - 1);
}

}  // namespace

TEST_CASE("signature rows") {
  std::vector<Trajectory> taus(2);
  taus[0].values = MatX::Constant(1, 3, 1.0);
  taus[1].values = MatX::Constant(1, 3, -2.0);
  taus[0].id = "a";
  taus[1].id = "b";
  const std::vector<Formula> fs{parse("x0 >= 0"), parse("not (x0 >= 0)")};
  const SignatureMatrix s = signature(fs, taus);
  CHECK(s.values(0, 0) == 1.0);
  CHECK(s.values(0, 1) == -2.0);
  CHECK(s.values.row(1) == -s.values.row(0));
  CHECK(s.formula_ids[0] == "x0 >= 0");
  CHECK(s.trajectory_ids[1] == "b");
}

TEST_CASE("signature matches the brute-force oracle") {
  Rng rng(3);
  test::RandomFormulaOptions o;
  std::vector<Formula> fs;
  for (int i = 0; i < 5; ++i) fs.push_back(test::random_formula(rng, o));
  const auto taus = test::mu0_trajectories(8, 2, 20, 4);
  const SignatureMatrix s = signature(fs, taus);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(s.values(i, j) == clamp_large(test::naive_rho(fs[static_cast<std::size_t>(i)], taus[static_cast<std::size_t>(j)])));
}

TEST_CASE("mc sample follows the dataset shape") {
  const auto xs = sample(7, 3, 12, 1);
  REQUIRE(xs.size() == 7);
  CHECK(xs[0].channels() == 3);
  CHECK(xs[0].length() == 12);
  KernelConfig bad;
  bad.mc_trajectories = 0;
  CHECK_THROWS(mc_sample(bad, 1, 10));
  bad = {};
  bad.epsilon = 0.0;
  CHECK_THROWS(mc_sample(bad, 1, 10));
}

TEST_CASE("formula-formula kernel identities") {
  const auto xs = sample(256, 2, 20, 5);
  Rng rng(6);
  test::RandomFormulaOptions o;
  for (int i = 0; i < 50; ++i) {
    const Formula a = test::random_formula(rng, o), b = test::random_formula(rng, o);
    CHECK(kernel_formula_formula(a, a, xs) >= 0.0);
    CHECK(kernel_formula_formula(a, b, xs) == kernel_formula_formula(b, a, xs));
    CHECK(kernel_formula_formula(a, Formula::negation(a), xs) == -kernel_formula_formula(a, a, xs));
    CHECK(kernel_formula_formula(a, Formula::negation(b), xs) == -kernel_formula_formula(a, b, xs));
  }
}

TEST_CASE("formula-formula kernel by hand") {
  const auto xs = sample(64, 1, 10, 8);
  double acc = 0.0;
  for (const auto& x : xs) acc += x.values(0, 0) * (x.values(0, 0) - 1.0);
  CHECK(kernel_formula_formula(parse("x0 >= 0"), parse("x0 >= 1"), xs) == doctest::Approx(acc / 64).epsilon(1e-12));
}

TEST_CASE("trajectory-formula kernel") {
  const auto xs = sample(64, 2, 10, 9);
  Trajectory zero;
  zero.values = MatX::Zero(2, 10);
  double acc = 0.0;
  for (const auto& x : xs) acc += x.values.squaredNorm() * x.values(0, 0);
  const Formula phi = parse("x0 >= 0");
  const double k = kernel_trajectory_formula(zero, phi, xs, 1.0);
  CHECK(k == doctest::Approx(acc / 64).epsilon(1e-12));
  CHECK(kernel_trajectory_formula(zero, phi, xs, 2.0) == doctest::Approx(k / 2).epsilon(1e-14));

  // constant robustness factors out
  Trajectory tau = test::mu0_trajectories(1, 2, 10, 77)[0];
  double dist = 0.0;
  for (const auto& x : xs) dist += (x.values - tau.values).squaredNorm();
  CHECK(kernel_trajectory_formula(tau, Formula::truth(), xs, 0.5) ==
        doctest::Approx(kLarge * dist / 64 / 0.5).epsilon(1e-12));

  Trajectory wrong;
  wrong.values = MatX::Zero(1, 10);
  CHECK_THROWS(kernel_trajectory_formula(wrong, phi, xs, 1.0));
}

TEST_CASE("embedding agrees with per-concept kernels and the cached embedder") {
  const auto xs = sample(128, 2, 16, 10);
  Rng rng(11);
  test::RandomFormulaOptions o;
  o.length = 16;
  std::vector<Formula> cs;
  for (int i = 0; i < 3; ++i) cs.push_back(test::random_formula(rng, o));
  cs.push_back(cs[1]);
  const KernelEmbedder emb(cs, xs);
  for (const auto& tau : test::mu0_trajectories(5, 2, 16, 12)) {
    const VecX h = embed_trajectory(tau, cs, xs, 0.7);
    REQUIRE(h.size() == 4);
    for (int i = 0; i < 4; ++i) {
      const double k = kernel_trajectory_formula(tau, cs[static_cast<std::size_t>(i)], xs, 0.7);
      CHECK(h[i] == doctest::Approx(k).epsilon(1e-10));
    }
    CHECK(h[3] == h[1]);
    const VecX cached = emb.embed(tau, 0.7);
    for (int i = 0; i < 4; ++i) CHECK(cached[i] == doctest::Approx(h[i]).epsilon(1e-8).scale(1.0));
  }
  const std::vector<Formula> one{cs[0]};
  const auto tau = test::mu0_trajectories(1, 2, 16, 13)[0];
  CHECK(embed_trajectory(tau, one, xs, 1.0)[0] == doctest::Approx(kernel_trajectory_formula(tau, cs[0], xs, 1.0)));
}

TEST_CASE("Monte-Carlo variance shrinks like 1/M") {
  const Formula a = parse("F[0,5](x0 >= 0)"), b = parse("G[2,8](x0 <= 0.5)");
  // per-sample variance of rho_a * rho_b from one large independent draw
  const auto big = sample(200000, 1, 10, 999);
  const ArrX prod = robustness_row(a, big).array() * robustness_row(b, big).array();
  const double per_sample = (prod - prod.mean()).square().sum() / static_cast<double>(prod.size() - 1);
  for (int m : {100, 400, 1600}) {
    std::vector<double> ks;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
      ks.push_back(kernel_formula_formula(a, b, sample(m, 1, 10, 1000 + seed * 7919)));
    const double ratio = variance(ks) / (per_sample / m);
    CAPTURE(m);
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 2.0);
  }
}
