#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "embeig/gluer.hpp"

using namespace embeig;

TEST_CASE("activation under the logarithmic envelope") {
  EnvelopeSpec h;  // log(2 + n)
  // 102 k1 = 3: 3/22 <= log(24)/23 but 3/21 > log(23)/22
  CHECK(activation_site(h, 3.0 / 102.0) == 22);
  CHECK_THROWS_AS(activation_site(h, 50.0, 0, 100), Error);
}

TEST_CASE("activation under power and table envelopes") {
  EnvelopeSpec lin;
  lin.kind = EnvelopeSpec::Kind::power;
  lin.alpha = 1.0;  // h(n)/(1+n) = 1
  CHECK(activation_site(lin, 1.0) == 102);

  EnvelopeSpec tab;
  tab.kind = EnvelopeSpec::Kind::table;
  tab.table = {{0.0, 0.0}, {100.0, 5.0}};
  CHECK(activation_site(tab, 5.0 / 204.0) == 100);
}

TEST_CASE("finite plan fixes couplings and the opening gap") {
  std::vector<double> energies = {1.0, -1.0, 0.5};
  std::vector<BoundaryAngle> angles = {{0.3}, {0.4}, {0.5}};
  PlanOptions opt;
  opt.target_exponent = 5.0;
  GluingPlan p = plan(energies, angles, GlueMode::finite, opt);
  REQUIRE(p.classes.size() == 2);
  CHECK(p.classes[0].cls.kind == ClassKind::pair);
  CHECK(p.classes[0].k1 == 4.0 * p.classes[0].cls.rep.s * 5.0);
  CHECK(p.classes[0].block_length == 3);
  CHECK(p.classes[1].cls.kind == ClassKind::single);
  CHECK(p.classes[1].block_length == 603);
  // start sites are pushed until |V|/s = 102 k1 / (n s) falls to 0.6
  CHECK(p.k2 == 3400);
  CHECK(p.initial_gap == 3400);
  CHECK(p.classes[0].gate == 0);
}

TEST_CASE("plan validation") {
  std::vector<BoundaryAngle> one = {{0.3}};
  CHECK_THROWS_AS(plan({}, {}, GlueMode::finite), Error);
  CHECK_THROWS_AS(plan({1.0, 0.5}, one, GlueMode::finite), Error);
  PlanOptions bad;
  bad.stop_factor = 1.0;
  CHECK_THROWS_AS(plan({1.0}, one, GlueMode::finite, bad), Error);
}

TEST_CASE("countable plan spaces gates geometrically") {
  std::vector<double> energies = {1.0, -1.0, 0.5, 0.0};
  std::vector<BoundaryAngle> angles = {{0.3}, {0.4}, {0.5}, {0.6}};
  GluingPlan p = plan(energies, angles, GlueMode::countable);
  REQUIRE(p.classes.size() == 3);
  std::int64_t g = p.initial_gap;
  for (const auto& cs : p.classes) {
    CHECK(cs.gate == g);
    CHECK(cs.k1 == p.envelope(static_cast<double>(g)) / 204.0);
    g *= 2;
  }
}

TEST_CASE("decreasing envelopes are rejected in countable mode") {
  EnvelopeSpec tab;
  tab.kind = EnvelopeSpec::Kind::table;
  tab.table = {{0.0, 5.0}, {10.0, 1.0}};
  PlanOptions opt;
  opt.envelope = tab;
  std::vector<BoundaryAngle> one = {{0.3}};
  CHECK_THROWS_AS(plan({1.0}, one, GlueMode::countable, opt), Error);
}

TEST_CASE("countable gate must sit in the perturbative range") {
  // h(n) = 1 + n fits k1 ~ gate/204 whose safe start site exceeds the gate
  // itself once sin(pi k) is small enough.
  EnvelopeSpec lin;
  lin.kind = EnvelopeSpec::Kind::power;
  lin.alpha = 1.0;
  PlanOptions opt;
  opt.envelope = lin;
  std::vector<BoundaryAngle> one = {{0.3}};
  try {
    plan({1.8}, one, GlueMode::countable, opt);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::envelope_never_fits);
  }
}

TEST_CASE("small finite assembly glues contiguously and decays") {
  std::vector<double> energies = {1.0, -1.0, 0.5};
  std::vector<BoundaryAngle> angles = {{0.7853981633974483},
                                       {1.0471975511965976},
                                       {0.5235987755982988}};
  GluingPlan p = plan(energies, angles, GlueMode::finite);
  const std::int64_t horizon = 100000;
  GluedResult run = build(p, horizon);

  CHECK(run.potential.horizon == horizon);
  CHECK_NOTHROW(validate(run.potential));
  REQUIRE(run.traces.size() == 3);
  for (const auto& tr : run.traces) {
    REQUIRE(!tr.samples.empty());
    CHECK(tr.samples.front().n == 1);
    CHECK(tr.samples.back().n == horizon);
    CHECK(tr.samples.back().log_radius < -2.0);
  }
  // steps satisfy J_r = J_{r-1} + N_r T_r
  std::int64_t j_prev = p.initial_gap;
  for (const auto& st : run.schedule) {
    CHECK(st.start == j_prev);
    CHECK(st.end == st.start + static_cast<std::int64_t>(st.active_classes) *
                                   st.piece_length);
    CHECK(st.active_classes == 2);
    j_prev = st.end;
  }
  // every class activates at the very first step in finite mode
  CHECK(run.activation_site[0] >= p.initial_gap);
  CHECK(run.activation_site[1] >= p.initial_gap);
  CHECK(run.sup_v_scaled > 0.0);
}

TEST_CASE("serving order rotates between steps") {
  std::vector<double> energies = {1.0, -1.0, 0.5};
  std::vector<BoundaryAngle> angles = {{0.7853981633974483},
                                       {1.0471975511965976},
                                       {0.5235987755982988}};
  GluingPlan p = plan(energies, angles, GlueMode::finite);
  GluedResult run = build(p, 120000);
  REQUIRE(run.piece_log.size() >= 4);
  CHECK(run.piece_log[0].r == 1);
  CHECK(run.piece_log[0].class_index == 0);
  CHECK(run.piece_log[1].class_index == 1);
  CHECK(run.piece_log[2].r == 2);
  CHECK(run.piece_log[2].class_index == 1);
  CHECK(run.piece_log[3].class_index == 0);
}

TEST_CASE("piece starts sit past the perturbative floor") {
  // directly below the floor the coupled pair demonstrably blows up: at
  // n0 = 1600 with k1 = 20 s the partner log-radius rises far beyond the
  // assembly guard threshold of 2
  EnergyPoint ep = make_energy_point(1.0);
  GeneratorParams params;
  params.k1 = 4.0 * ep.s * 5.0;
  params.horizon = 70000;
  GeneratorOptions opts;
  opts.fixed_length = 60000;
  auto g = generate_pair(ep, {}, 1600, 0.3, 0.9, params, opts);
  CHECK(g.partner_max_rise > 2.0);

  // at the planner's own gap the same coupling decays within the guard
  GluingPlan p = plan({1.0, -1.0}, {{0.3}, {0.9}}, GlueMode::finite);
  auto g2 = generate_pair(ep, {}, p.initial_gap, 0.3, 0.9, params, opts);
  CHECK(g2.target_max_rise <= 2.0);
  CHECK(g2.partner_max_rise <= 2.0);
  CHECK(g2.target_final.log_radius < -4.0);
  CHECK(g2.partner_final.log_radius < -4.0);
}

TEST_CASE("boundary threading equals a manual replay") {
  GluingPlan p = plan({1.0, -1.0}, {{0.3}, {0.9}}, GlueMode::finite);
  GluedResult run = build(p, 40000);
  const PotentialPiece& pc = run.potential.pieces[1];
  std::vector<EnergyPoint> eps = {energy_point_from_k(0.29),
                                  make_energy_point(0.5)};
  std::vector<PruferState> in = {{0.0, 0.4}, {-1.0, 1.3}};
  auto out = boundary_thread(in, eps, pc);
  for (std::size_t j = 0; j < in.size(); ++j) {
    PruferState manual = in[j];
    for (PieceCursor cur(pc); !cur.done(); cur.advance()) {
      manual = prufer_step(manual, cur.value(), eps[j]);
    }
    CHECK(out[j].log_radius == manual.log_radius);
    CHECK(out[j].angle == manual.angle);
  }
  CHECK_THROWS_AS(boundary_thread(in, std::vector<EnergyPoint>{eps[0]}, pc),
                  Error);
}

TEST_CASE("countable assembly activates one class per step at most") {
  std::vector<double> energies = {1.0, -1.0, 0.0};
  std::vector<BoundaryAngle> angles = {{0.7853981633974483},
                                       {1.0471975511965976},
                                       {0.5235987755982988}};
  GluingPlan p = plan(energies, angles, GlueMode::countable);
  const std::int64_t horizon = 200000;
  GluedResult run = build(p, horizon);

  int prev = 0;
  for (const auto& st : run.schedule) {
    CHECK(st.active_classes >= prev);
    CHECK(st.active_classes - prev <= 1);
    prev = st.active_classes;
  }
  CHECK(prev == 2);

  // the envelope bound holds at every site past the first activation
  std::int64_t first_act = -1;
  for (auto a : run.activation_site) {
    if (a >= 0 && (first_act < 0 || a < first_act)) first_act = a;
  }
  REQUIRE(first_act > 0);
  std::int64_t bad = 0;
  scan_potential(run.potential, first_act, horizon,
                 [&](std::int64_t n, double v) {
                   double nn = static_cast<double>(n);
                   if (std::abs(v) > p.envelope(nn) / (1.0 + nn)) ++bad;
                 });
  CHECK(bad == 0);
}

TEST_CASE("horizon too small for the gap is rejected") {
  GluingPlan p = plan({1.0, -1.0}, {{0.3}, {0.9}}, GlueMode::finite);
  CHECK_THROWS_AS(build(p, p.initial_gap + 10), Error);
}
