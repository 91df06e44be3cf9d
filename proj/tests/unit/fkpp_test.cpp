#include <doctest.h>

#include <bmap/errors.hpp>
#include <bmap/fkpp.hpp>
#include <cmath>

#include "support/test_support.hpp"

using namespace bmap;

namespace {

const Grid1D kGrid{-20.0, 20.0, 401};

FkppField constant_field(const Grid1D& g, const Vector& per_type) {
  FkppField f;
  f.grid = g;
  for (double v : per_type) f.values.emplace_back(g.n, v);
  return f;
}

double max_abs_diff(const FkppField& a, const FkppField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.types(); ++i)
    for (std::size_t k = 0; k < a.grid.n; ++k) d = std::max(d, std::abs(a.values[i][k] - b.values[i][k]));
  return d;
}

}  // namespace

TEST_SUITE("fkpp") {
  TEST_CASE("grid parsing") {
    const Grid1D g = Grid1D::parse("-1.5,2.5,9");
    CHECK(g.x_min == -1.5);
    CHECK(g.n == 9);
    CHECK(g.dx() == 0.5);
    CHECK_THROWS_AS(Grid1D::parse("0,1"), ValidationError);
    CHECK_THROWS_AS(Grid1D::parse("0,1,2"), ValidationError);
    CHECK_THROWS_AS(Grid1D::parse("1,0,5"), ValidationError);
  }

  TEST_CASE("constant states are fixed points") {
    const ModelSpec m = test::config("jumpy");
    FkppSolver solver(m, kGrid);
    const Vector q = solver.extinction();
    CHECK(q[0] > 0.0);
    FkppField ones = constant_field(kGrid, {1.0, 1.0});
    FkppField qs = constant_field(kGrid, q);
    const double dt = 0.5 * solver.max_stable_dt();
    for (int s = 0; s < 200; ++s) {
      const FkppField before_q = qs;
      solver.step(ones, dt);
      solver.step(qs, dt);
      REQUIRE(max_abs_diff(qs, before_q) <= 1e-12);
    }
    CHECK(max_abs_diff(ones, constant_field(kGrid, {1.0, 1.0})) == 0.0);
    CHECK(solver.clamp_count() == 0);
  }

  TEST_CASE("step data") {
    const ModelSpec m = test::config("jumpy");
    const FkppField f = init_field(kGrid, m, InitSpec::step(0.0));
    const Vector q = extinction_vector(m).q;
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(f.values[i][0] == q[i]);
      CHECK(f.values[i][199] == q[i]);
      CHECK(f.values[i][201] == 1.0);
      CHECK(f.values[i][200] == doctest::Approx(0.5 * (1 + q[i])));
      CHECK(profile_crossing(f, i, 0.5 * (1 + q[i])) == 0.0);
    }
  }

  TEST_CASE("front position at the default level of a step") {
    const ModelSpec m = test::config("champneys");
    const FkppField f = init_field(kGrid, m, InitSpec::step(3.0));
    const Vector x = front_position(f, default_front_level(extinction_vector(m).q));
    CHECK(x[0] == 3.0);
    CHECK(x[1] == 3.0);
  }

  TEST_CASE("exp_tail data") {
    const ModelSpec m = test::config("champneys");
    const double th = 0.8;
    const FkppField f = init_field(kGrid, m, InitSpec::exp_tail(th));
    const Vector v = spectral_report(m, th).v_right;
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(f.values[i][200] == doctest::Approx(std::exp(-v[i])).epsilon(1e-14));
      CHECK(f.values[i].back() == 1.0);
      CHECK(f.values[i][399] > 0.999999);
    }
    const double level = 0.5;
    const Vector x = front_position(f, level);
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(std::abs(x[i] - (std::log(v[i]) - std::log(-std::log(level))) / th) <= kGrid.dx());
  }

  TEST_CASE("front position is translation equivariant") {
    const ModelSpec m = test::config("champneys");
    const FkppField f = init_field(kGrid, m, InitSpec::exp_tail(1.0));
    FkppField g = f;
    const std::size_t shift = 7;
    for (auto& row : g.values) {
      for (std::size_t k = row.size() - 1; k >= shift; --k) row[k] = row[k - shift];
      for (std::size_t k = 0; k < shift; ++k) row[k] = row[shift];
    }
    const Vector a = front_position(f, 0.5), b = front_position(g, 0.5);
    for (std::size_t i = 0; i < 2; ++i) CHECK(b[i] - a[i] == doctest::Approx(shift * kGrid.dx()).epsilon(1e-12));
  }

  TEST_CASE("lost fronts are reported") {
    const ModelSpec m = test::config("bbm");
    const FkppField ones = constant_field(kGrid, {1.0});
    CHECK_THROWS_AS(front_position(ones, 0.5), FrontLostError);
  }

  TEST_CASE("solve is a semigroup and zero horizon is a no-op") {
    const ModelSpec m = test::config("jumpy");
    FkppSolver solver(m, kGrid);
    const double dt = 0.5 * solver.max_stable_dt();
    const FkppField f0 = init_field(kGrid, m, InitSpec::step());
    const SolveResult zero = solve(solver, f0, 0.0, dt, 0.1, 0.6);
    REQUIRE(zero.summaries.size() == 1);
    CHECK(max_abs_diff(zero.final_field, f0) == 0.0);

    const double t = 200 * dt;
    const SolveResult half = solve(solver, f0, t, dt, 1.0, 0.6);
    const SolveResult rest = solve(solver, half.final_field, 2 * t, dt, 1.0, 0.6);
    const SolveResult full = solve(solver, f0, 2 * t, dt, 1.0, 0.6);
    CHECK(max_abs_diff(rest.final_field, full.final_field) <= 1e-8);
  }

  TEST_CASE("monotone data stays monotone and ordered data stays ordered") {
    const ModelSpec m = test::config("champneys");
    FkppSolver solver(m, kGrid);
    const double dt = 0.5 * solver.max_stable_dt();
    const SolveResult u = solve(solver, init_field(kGrid, m, InitSpec::step(0.0)), 2.0, dt, 0.5, 0.5, std::vector<double>{1.0, 2.0});
    const SolveResult v = solve(solver, init_field(kGrid, m, InitSpec::step(-2.0)), 2.0, dt, 0.5, 0.5, std::vector<double>{1.0, 2.0});
    CHECK(u.max_monotonicity_violation <= 1e-10);
    REQUIRE(u.snapshots.size() == 2);
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < kGrid.n; ++k) CHECK(u.snapshots[s].values[i][k] <= v.snapshots[s].values[i][k] + 1e-9);
    CHECK(u.clamp_count == 0);
  }

  TEST_CASE("solve commutes with whole-cell translations") {
    const ModelSpec m = test::config("champneys");
    FkppSolver solver(m, kGrid);
    const double dt = 0.5 * solver.max_stable_dt();
    const FkppField a0 = init_field(kGrid, m, InitSpec::step(0.0));
    const FkppField b0 = init_field(kGrid, m, InitSpec::step(1.0));  // 10 cells right
    const SolveResult a = solve(solver, a0, 20 * dt, dt, 1.0, 0.5);
    const SolveResult b = solve(solver, b0, 20 * dt, dt, 1.0, 0.5);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 50; k + 60 < kGrid.n; ++k) CHECK(b.final_field.values[i][k + 10] == doctest::Approx(a.final_field.values[i][k]).epsilon(1e-14));
  }

  TEST_CASE("explicit stability bound and interpolation range") {
    const ModelSpec m = test::config("bbm");
    FkppSolver solver(m, kGrid);
    FkppField f = init_field(kGrid, m, InitSpec::step());
    CHECK_THROWS_AS(solver.step(f, 2.0 * solver.max_stable_dt()), DomainError);
    FkppSolver implicit(m, kGrid, {true, 0.4});
    CHECK_NOTHROW(implicit.step(f, 0.05));

    ModelSpec wide = test::config("bbm");
    wide.types[0].motion.jump_rate = 1.0;
    wide.types[0].motion.jump_law = DiscreteLaw::point_mass(25.0);
    try {
      FkppSolver bad(wide, kGrid);
      FAIL("expected an out-of-domain atom error");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("25") != std::string::npos);
    }
  }

  TEST_CASE("implicit and explicit diffusion agree") {
    const ModelSpec m = test::config("champneys");
    FkppSolver ex(m, kGrid), im(m, kGrid, {true, 0.4});
    const double dt = 0.25 * ex.max_stable_dt();
    const FkppField f0 = init_field(kGrid, m, InitSpec::exp_tail(0.8));
    const SolveResult a = solve(ex, f0, 1.0, dt, 1.0, 0.5);
    const SolveResult b = solve(im, f0, 1.0, dt, 1.0, 0.5);
    CHECK(max_abs_diff(a.final_field, b.final_field) <= 2e-3);
  }

  TEST_CASE("wave candidates are range checked") {
    const ModelSpec m = test::config("bbm");
    InitSpec s;
    s.kind = InitKind::wave_candidate;
    s.profile = {Vector(kGrid.n, 0.5)};
    CHECK(init_field(kGrid, m, s).values[0][3] == 0.5);
    s.profile[0][3] = 1.5;
    CHECK_THROWS_AS(init_field(kGrid, m, s), ValidationError);
    s.profile = {Vector(kGrid.n - 1, 0.5)};
    CHECK_THROWS_AS(init_field(kGrid, m, s), ValidationError);
  }

  TEST_CASE("linear fit") {
    const std::vector<double> t{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto [slope, resid] = linear_fit(t, y);
    CHECK(slope == doctest::Approx(2.0));
    CHECK(resid == doctest::Approx(0.0));
  }

  TEST_CASE("front speed converges under grid refinement") {
    const ModelSpec m = test::config("bbm");
    FrontSpeedOptions o;
    o.t1 = 5.0;
    o.t2 = 15.0;
    o.dx = 0.1;
    const double coarse = front_speed(m, InitSpec::exp_tail(1.0), o).speed[0];
    o.dx = 0.05;
    const double fine = front_speed(m, InitSpec::exp_tail(1.0), o).speed[0];
    CHECK(std::abs(coarse - fine) <= 0.01 * fine);
  }

  TEST_CASE("Phi identically one is a trivial martingale") {
    const ModelSpec m = test::config("champneys");
    const FkppField ones = constant_field(kGrid, {1.0, 1.0});
    const std::vector<double> ts{0.5, 1.0};
    const std::vector<Start> probes{{0.0, 0}, {1.0, 1}};
    for (const auto& row : martingale_problem_check(m, 0.5, ones, ts, probes, 50, 1)) {
      CHECK(row.mean == 1.0);
      CHECK(row.z == 0.0);
    }
  }

  TEST_CASE("representation at time zero is exact") {
    const ModelSpec m = test::config("champneys");
    const std::vector<Start> probes{{-1.0, 0}, {0.5, 1}};
    const RepresentationResult r = representation_check(m, InitSpec::exp_tail(0.6), 0.0, probes, {});
    CHECK(r.max_gap == 0.0);
    CHECK(r.pass);
  }

  TEST_CASE("Monte Carlo wave profile limits and monotonicity") {
    const ModelSpec m = test::config("bbm");
    WaveProfileOptions o;
    o.replicas = 2000;
    o.horizon = 4.0;
    const std::vector<double> probes{-30.0, -2.0, 0.0, 2.0, 40.0};
    const WaveProfile w = wave_profile_mc(m, 0.5, probes, o);
    CHECK_FALSE(w.derivative);
    CHECK(w.value[0].front() <= 1e-12);
    CHECK(w.value[0].back() == doctest::Approx(1.0).epsilon(1e-6));
    for (std::size_t k = 0; k + 1 < probes.size(); ++k) CHECK(w.value[0][k] <= w.value[0][k + 1] + 2 * w.se[0][k]);
    CHECK_THROWS_AS(wave_profile_mc(m, 2.0, probes, o), DomainError);
  }
}
