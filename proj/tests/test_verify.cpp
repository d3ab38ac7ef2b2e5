#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "embeig/gluer.hpp"
#include "embeig/verify.hpp"

using namespace embeig;

namespace {

SolutionTrace power_law_trace(double slope, double intercept, std::int64_t lo,
                              std::int64_t hi, double ratio = 1.05) {
  SolutionTrace tr;
  for (double n = static_cast<double>(lo); n <= static_cast<double>(hi);
       n = std::max(n + 1.0, n * ratio)) {
    auto ni = static_cast<std::int64_t>(n);
    tr.samples.push_back(
        {ni, slope * std::log(static_cast<double>(ni)) + intercept, 0.0});
  }
  return tr;
}

}  // namespace

TEST_CASE("exact power law is fitted exactly") {
  SolutionTrace tr = power_law_trace(-3.0, 0.7, 100, 1000000);
  DecayReport rep = decay_exponent(tr, 0);
  CHECK(rep.slope == Catch::Approx(-3.0).margin(1e-10));
  CHECK(rep.intercept == Catch::Approx(0.7).margin(1e-8));
  CHECK(rep.residual_rms <= 1e-10);
  CHECK(rep.count >= 50);
  CHECK(rep.n_lo == 100);
}

TEST_CASE("flat traces fit slope zero") {
  SolutionTrace tr = power_law_trace(0.0, -2.5, 50, 100000);
  DecayReport rep = decay_exponent(tr, 0);
  CHECK(std::abs(rep.slope) <= 1e-12);
  CHECK(rep.residual_rms <= 1e-12);
}

TEST_CASE("fit window restricts the samples") {
  // two regimes; the window isolates the second
  SolutionTrace tr;
  for (double n = 100.0; n < 10000.0; n *= 1.03) {
    tr.samples.push_back({static_cast<std::int64_t>(n), 0.0, 0.0});
  }
  for (double n = 10000.0; n <= 1000000.0; n *= 1.03) {
    auto ni = static_cast<std::int64_t>(n);
    tr.samples.push_back(
        {ni, -2.0 * (std::log(static_cast<double>(ni)) - std::log(1e4)), 0.0});
  }
  DecayReport rep = decay_exponent(tr, 0, 10000, -1);
  CHECK(rep.slope == Catch::Approx(-2.0).margin(1e-6));
  CHECK(rep.n_lo >= 10000);
}

TEST_CASE("thin traces are refused") {
  SolutionTrace few;
  for (int i = 0; i < 30; ++i) few.samples.push_back({100 + i * 1000, 0.0, 0.0});
  CHECK_THROWS_AS(decay_exponent(few, 0), Error);

  SolutionTrace narrow;
  for (int i = 0; i < 80; ++i) narrow.samples.push_back({1000 + i, 0.0, 0.0});
  try {
    decay_exponent(narrow, 0);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_span);
  }
}

TEST_CASE("oscillatory partial sums match a direct accumulation") {
  SolutionTrace tr;
  tr.dense_start = 500;
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> d(0.0, 2.0);
  for (int i = 0; i < 4000; ++i) tr.dense.push_back({0.0, d(rng)});

  OscillatoryBound ob = oscillatory_sum(tr, 0, 500, 4500);
  double sum = 0.0, sup = 0.0;
  std::int64_t arg = 0;
  for (std::int64_t l = 500; l < 4500; ++l) {
    sum += sin2pi(tr.dense[static_cast<std::size_t>(l - 500)].angle) /
           static_cast<double>(l);
    if (std::abs(sum) > sup) {
      sup = std::abs(sum);
      arg = l;
    }
  }
  CHECK(ob.sup_abs_partial == sup);
  CHECK(ob.arg_sup == arg);
  CHECK(ob.certified_c == sup * 500.0);
}

TEST_CASE("vanishing sine gives a zero certificate") {
  SolutionTrace tr;
  tr.dense_start = 100;
  for (int i = 0; i < 1000; ++i) {
    tr.dense.push_back({0.0, static_cast<double>(i % 2)});  // sin(2 pi m) = 0
  }
  OscillatoryBound ob = oscillatory_sum(tr, 0, 100, 1100);
  CHECK(ob.sup_abs_partial == 0.0);
  CHECK(ob.certified_c == 0.0);
}

TEST_CASE("decimated traces cannot form partial sums") {
  SolutionTrace sparse;
  sparse.samples.push_back({100, 0.0, 0.3});
  CHECK_THROWS_AS(oscillatory_sum(sparse, 0, 100, 200), Error);

  SolutionTrace partial;
  partial.dense_start = 500;
  partial.dense.assign(100, {0.0, 0.3});
  try {
    oscillatory_sum(partial, 0, 400, 550);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::decimated_trace);
  }
}

TEST_CASE("cross sums equal the explicit product accumulation") {
  SolutionTrace a, b;
  a.dense_start = b.dense_start = 200;
  std::mt19937 rng(888);
  std::uniform_real_distribution<double> d(0.0, 2.0);
  for (int i = 0; i < 2000; ++i) {
    a.dense.push_back({0.0, d(rng)});
    b.dense.push_back({0.0, d(rng)});
  }
  OscillatoryBound ob = oscillatory_cross_sum(a, b, 0, 200, 2200);
  double sum = 0.0, sup = 0.0;
  for (std::int64_t l = 200; l < 2200; ++l) {
    double ta = a.dense[static_cast<std::size_t>(l - 200)].angle;
    double tb = b.dense[static_cast<std::size_t>(l - 200)].angle;
    sum += sin2pi(ta) * sin2pi(tb) / static_cast<double>(l);
    sup = std::max(sup, std::abs(sum));
  }
  CHECK(ob.sup_abs_partial == Catch::Approx(sup).margin(1e-12));
}

TEST_CASE("square-summability metrics on explicit sequences") {
  // u(n) = 1/n on [1, 10^4]: the log-log fit is exactly linear
  std::vector<double> inv;
  for (int n = 1; n <= 10000; ++n) inv.push_back(1.0 / n);
  L2Report rep = l2_report_from_values(inv, 1);
  CHECK(rep.exponent == Catch::Approx(-1.0).margin(1e-12));
  double direct = 0.0;
  for (int n = 1; n <= 10000; ++n) direct += 1.0 / (static_cast<double>(n) * n);
  CHECK(rep.total == Catch::Approx(direct).epsilon(1e-13));
  CHECK(rep.last_decade_fraction < 1e-4);

  // geometric decay concentrates entirely at the head
  std::vector<double> geo;
  double u = 1.0;
  for (int n = 1; n <= 2000; ++n) {
    geo.push_back(u);
    u *= 0.75;
  }
  L2Report grep = l2_report_from_values(geo, 1);
  CHECK(grep.total == Catch::Approx(1.0 / (1.0 - 0.5625)).epsilon(1e-12));
  CHECK(grep.last_decade_fraction < 1e-100);
}

TEST_CASE("replayed tail metrics of a free potential") {
  Potential pot;
  PotentialPiece pc;
  pc.start = 0;
  pc.end = 100000;
  pc.kind = PieceKind::zero;
  pot.pieces.push_back(pc);
  pot.horizon = 100000;

  EnergyPoint ep = energy_point_from_k(1.0 / 3.0);
  L2Report rep = l2_report(pot, ep, {1.1});
  // constant envelope: mass spreads uniformly, no decay
  CHECK(std::abs(rep.exponent) <= 0.01);
  CHECK(rep.last_decade_fraction > 0.08);
  CHECK(rep.last_decade_fraction < 0.12);
}

TEST_CASE("replayed traces agree with the construction's bookkeeping") {
  GluingPlan p = plan({1.0, -1.0}, {{0.7853981633974483}, {1.0471975511965976}},
                      GlueMode::finite);
  GluedResult run = build(p, 60000);
  for (std::size_t j = 0; j < 2; ++j) {
    EnergyPoint ep = make_energy_point(p.energies[j]);
    SolutionTrace replay =
        replay_trace(run.potential, ep, {p.angles[j]}, 10000, 10100);
    CHECK(replay.samples.back().n == 60000);
    CHECK(replay.samples.back().log_radius ==
          Catch::Approx(run.final_states[j].log_radius).margin(1e-9));
    CHECK(replay.samples.back().angle ==
          Catch::Approx(run.final_states[j].angle).margin(1e-9));
    CHECK(replay.has_dense(10000, 10100));
  }
}

TEST_CASE("square-summable certificate on a constructed potential") {
  GluingPlan p = plan({1.0, -1.0}, {{0.7853981633974483}, {1.0471975511965976}},
                      GlueMode::finite);
  GluedResult run = build(p, 200000);
  for (std::size_t j = 0; j < 2; ++j) {
    EnergyPoint ep = make_energy_point(p.energies[j]);
    L2Report rep = l2_report(run.potential, ep, {p.angles[j]});
    CHECK(rep.last_decade_fraction <= 0.01);
    CHECK(rep.exponent <= -1.0);
  }
}

TEST_CASE("solution reconstruction matches the raw recursion") {
  Potential pot;
  PotentialPiece pc;
  pc.start = 0;
  pc.end = 2000;
  pc.kind = PieceKind::single;
  pc.energy = 0.5;
  pc.k1 = 0.3;
  pc.base = -50;
  pc.anchor_angle = 0.42;
  pot.pieces.push_back(pc);
  pot.horizon = 2000;

  EnergyPoint ep = make_energy_point(0.5);
  BoundaryAngle theta{1.2};
  std::vector<double> u = reconstruct_solution(pot, ep, theta, 1500);
  REQUIRE(u.size() == 1501);
  CHECK(u[0] == Catch::Approx(std::cos(1.2)).margin(1e-14));
  CHECK(u[1] == Catch::Approx(std::sin(1.2)).margin(1e-14));

  PotentialEvaluator eval(pot);
  SolutionPair p2{std::cos(1.2), std::sin(1.2)};
  for (std::int64_t n = 1; n < 1500; ++n) {
    p2 = transfer_step(p2, eval(n), ep.e);
    CHECK(u[static_cast<std::size_t>(n + 1)] ==
          Catch::Approx(p2.cur).margin(1e-10));
  }

  CHECK_THROWS_AS(reconstruct_solution(pot, ep, theta, 0), Error);
  CHECK_THROWS_AS(reconstruct_solution(pot, ep, theta, 2000), Error);
}
