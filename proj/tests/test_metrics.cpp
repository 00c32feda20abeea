#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "stelle/metrics.hpp"
#include "stelle/parser.hpp"
#include "stelle/robustness.hpp"

using namespace stelle;

namespace {

Trajectory point(double x, std::optional<int> label) {
  Trajectory t = test::make_trajectory({{x}});
  t.label = label;
  return t;
}

}  // namespace

TEST_CASE("local separability by hand") {
  const Formula f = parse("x0 >= 0");
  const Trajectory target = point(1.0, 0);
  const std::vector<Trajectory> pool{point(2.0, 0), point(-1.0, 1), point(-2.0, 1), point(3.0, 2), point(5.0, {})};
  CHECK(local_separability(f, target, 0, pool) == doctest::Approx(200.0 / 3.0));
  CHECK(local_separability(parse("x0 <= 10"), target, 0, pool) == 0.0);
  const std::vector<Trajectory> same{point(2.0, 0)};
  CHECK_THROWS(local_separability(f, target, 0, same));
}

TEST_CASE("confusion and global separability") {
  const std::vector<Trajectory> ts{point(1, 0), point(2, 0), point(-1, 0), point(-3, 1), point(4, 1), point(0.5, {})};
  const Confusion c = class_confusion(parse("x0 >= 0"), 0, ts);
  CHECK(c.tp == 2);
  CHECK(c.fn == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 1);
  CHECK(c.total() == 5);

  const std::map<int, Formula> ex{{0, parse("x0 >= 0")}, {1, parse("x0 <= -2")}};
  const GlobalSeparability g = global_separability(ex, ts);
  CHECK(g.per_class.at(0) == doctest::Approx(60.0));
  // class 1: tp {-3}, tn {1, 2, -1}, fn {4}
  CHECK(g.per_class.at(1) == doctest::Approx(80.0));
  CHECK(g.total == 10);
  // micro recomputed from the pooled counts
  long hits = 0, total = 0;
  for (const auto& [k, f] : ex) {
    const Confusion ck = class_confusion(f, k, ts);
    hits += ck.tp + ck.tn;
    total += ck.total();
  }
  CHECK(g.micro == doctest::Approx(100.0 * static_cast<double>(hits) / static_cast<double>(total)));
  CHECK(global_separability({}, ts).micro == 0.0);
}

TEST_CASE("recall, specificity and precision") {
  const std::vector<Trajectory> ts{point(1, 0), point(2, 0), point(-1, 0), point(-3, 1), point(4, 1)};
  const std::map<int, Formula> ex{{0, parse("x0 >= 0")}, {1, parse("x0 <= -2")}};
  const PRF p = global_prf(ex, ts);
  CHECK(p.recall == doctest::Approx((2.0 / 3 + 1.0 / 2) / 2));
  CHECK(p.specificity == doctest::Approx((1.0 / 2 + 3.0 / 3) / 2));
  CHECK(p.precision == doctest::Approx((2.0 / 3 + 1.0) / 2));
  CHECK(!p.precision_degenerate);

  // nothing predicted positive for class 1
  const std::map<int, Formula> never{{0, parse("x0 >= 0")}, {1, parse("x0 >= 100")}};
  const PRF d = global_prf(never, ts);
  CHECK(d.precision_degenerate);
  CHECK(d.precision == doctest::Approx(2.0 / 3 / 2));
  CHECK(global_prf({}, ts).recall == 0.0);
}

TEST_CASE("mean and population std") {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  const MeanStd m = mean_std(xs);
  CHECK(m.mean == 5.0);
  CHECK(m.std == 2.0);
  CHECK(m.n == 8);
  CHECK(mean_std(std::vector<double>{}).n == 0);
}

TEST_CASE("readability grouped by tag") {
  const std::vector<Formula> fs{parse("x0 >= 1"), parse("(x0 >= 1) and (x1 <= 2)"), parse("F[0,3](x0 >= 1)")};
  const std::vector<std::string> tags{"a", "a", "b"};
  const ReadabilityReport r = readability(fs, tags);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows.at("a").nodes.mean == 2.0);
  CHECK(r.rows.at("a").nodes.std == 1.0);
  CHECK(r.rows.at("a").variables.mean == 1.5);
  CHECK(r.rows.at("b").nodes.mean == 2.0);
  CHECK(r.rows.at("b").variables.std == 0.0);
  CHECK_THROWS(readability(fs, std::vector<std::string>{"a"}));
  const std::string table = readability_table(r);
  CHECK(table.find("2 +- 1") != std::string::npos);
}

TEST_CASE("separability table") {
  SeparabilityReport r;
  const std::vector<double> xs{100, 50};
  r.local_correct = mean_std(xs);
  const std::vector<Trajectory> ts{point(1, 0), point(-1, 1)};
  r.global_all = global_separability({{0, parse("x0 >= 0")}}, ts);
  const std::string s = separability_table(r);
  CHECK(s.find("75 +- 25") != std::string::npos);
  CHECK(s.find("n/a") != std::string::npos);
  CHECK(format_number(2.0 / 3.0) == "0.666667");
}
