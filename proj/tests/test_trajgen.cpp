#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stelle/mu0.hpp"

#include <cmath>

using namespace stelle;

namespace {

// Sign changes between consecutive increments, counted from the values alone.
int observed_flips(const VecX& v) {
  int flips = 0;
  for (Eigen::Index i = 2; i < v.size(); ++i) {
    const double a = v[i - 1] - v[i - 2], b = v[i] - v[i - 1];
    flips += (a > 0) != (b > 0);
  }
  return flips;
}

}  // namespace

TEST_CASE("default parameters give length 101") {
  const Mu0Params p;
  CHECK(p.length() == 101);
  const auto taus = sample_mu0(p, 3, 2);
  REQUIRE(taus.size() == 3);
  CHECK(taus[0].channels() == 2);
  CHECK(taus[0].length() == 101);
}

TEST_CASE("total variation equals the sampled K") {
  Mu0Params p;
  p.seed = 3;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const Mu0Channel c = sample_mu0_channel(p, i, 0);
    const VecX inc = c.values.tail(c.values.size() - 1) - c.values.head(c.values.size() - 1);
    REQUIRE(std::abs(inc.cwiseAbs().sum() - c.total_variation) <= 1e-9 * std::max(1.0, c.total_variation));
  }
}

TEST_CASE("no flips when q = 0") {
  Mu0Params p;
  p.flip_probability = 0.0;
  p.seed = 9;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const VecX v = sample_mu0_channel(p, i, 0).values;
    const VecX inc = v.tail(v.size() - 1) - v.head(v.size() - 1);
    REQUIRE(((inc.array() >= 0.0).all() || (inc.array() <= 0.0).all()));
  }
}

TEST_CASE("empirical flip rate matches q") {
  Mu0Params p;
  p.seed = 17;
  long flips = 0, pairs = 0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const VecX v = sample_mu0_channel(p, i, 0).values;
    flips += observed_flips(v);
    pairs += v.size() - 2;
  }
  const double rate = static_cast<double>(flips) / static_cast<double>(pairs);
  CHECK(rate == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("seeded determinism and substream independence") {
  Mu0Params p;
  p.seed = 42;
  const auto a = sample_mu0(p, 20, 3);
  const auto b = sample_mu0(p, 20, 3);
  const auto c = sample_mu0(p, 5, 1);
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE((a[i].values.array() == b[i].values.array()).all());
  for (std::size_t i = 0; i < c.size(); ++i) REQUIRE((c[i].values.row(0).array() == a[i].values.row(0).array()).all());
  p.seed = 43;
  const auto d = sample_mu0(p, 1, 1);
  CHECK((d[0].values.array() != a[0].values.row(0).array()).any());
}

TEST_CASE("parameter validation") {
  Mu0Params p;
  p.b = p.a;
  CHECK_THROWS(sample_mu0(p, 1, 1));
  p = {};
  p.delta = 3;  // 100 is not a multiple of 3
  CHECK_THROWS(sample_mu0(p, 1, 1));
  p = {};
  p.start_std = 0.0;
  CHECK_THROWS(sample_mu0(p, 1, 1));
  p = {};
  p.flip_probability = 1.5;
  CHECK_THROWS(sample_mu0(p, 1, 1));
  p = {};
  CHECK_THROWS(sample_mu0(p, 0, 1));
  CHECK_THROWS(sample_mu0(p, 1, 0));
}

TEST_CASE("coarser step grid") {
  Mu0Params p;
  p.a = 0;
  p.b = 20;
  p.delta = 4;
  CHECK(p.steps() == 5);
  const auto taus = sample_mu0(p, 2, 1);
  CHECK(taus[0].length() == 6);
}
