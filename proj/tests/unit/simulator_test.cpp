#include <doctest.h>

#include <algorithm>
#include <bmap/errors.hpp>
#include <bmap/parallel.hpp>
#include <bmap/simulator.hpp>
#include <cmath>

#include "support/test_support.hpp"

using namespace bmap;

namespace {

ModelSpec moving_only(double sigma2, double drift) {
  return ModelSpec::single_type({{sigma2, drift, 0.0, {}}, 0.0, DiscreteLaw::point_mass(2.0)});
}

SimConfig config_at(double horizon, std::vector<double> times, std::uint64_t seed = 1) {
  SimConfig c;
  c.horizon = horizon;
  c.observation_times = std::move(times);
  c.master_seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("deterministic drift moves the single particle") {
    const auto snaps = simulate(moving_only(0.0, 1.0), {0.5, 0}, config_at(2.0, {0.0, 2.0}), 0);
    REQUIRE(snaps.size() == 2);
    REQUIRE(snaps[1].size() == 1);
    CHECK(snaps[1].particles[0].position == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(snaps[0].particles[0].position == 0.5);
    CHECK(snaps[1].min_position == snaps[1].particles[0].position);
  }

  TEST_CASE("drift sign matches the Laplace exponent convention") {
    const double a = 0.7, th = 1.3, t = 2.0;
    const ModelSpec m = moving_only(0.0, a);
    const auto snaps = simulate(m, {}, config_at(t, {t}), 0);
    const double x = snaps[0].particles[0].position;
    CHECK(std::exp(-th * x) == doctest::Approx(std::exp(t * laplace_exponent(m.types[0].motion, th))).epsilon(1e-12));
  }

  TEST_CASE("Gaussian increments pass Kolmogorov-Smirnov") {
    const double sigma2 = 1.7, drift = -0.4, t = 1.5;
    const ModelSpec m = moving_only(sigma2, drift);
    const Simulator sim(m);
    const SimConfig cfg = config_at(t, {0.3, t}, 17);
    const std::size_t n = 10000;
    std::vector<double> z(n);
    for (std::size_t r = 0; r < n; ++r)
      sim.run({}, cfg, r, [&](std::size_t k, double, std::span<const Particle> ps) {
        if (k == 1) z[r] = (ps[0].position - drift * t) / std::sqrt(sigma2 * t);
      });
    std::sort(z.begin(), z.end());
    double d = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double f = 0.5 * std::erfc(-z[k] / std::sqrt(2.0));
      d = std::max({d, f - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - f});
    }
    CHECK(d < 1.95 / std::sqrt(static_cast<double>(n)));  // significance 1e-3
  }

  TEST_CASE("pure switching occupancy matches exp(tQ)") {
    ModelSpec m = test::config("three_type");
    for (auto& t : m.types) t.branch_rate = 0.0;
    const double t = 0.8;
    const Matrix p = matrix_exp(m.q, t);
    const Simulator sim(m);
    const SimConfig cfg = config_at(t, {t}, 5);
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < m.d; ++i) {
      std::vector<std::size_t> hits(m.d, 0);
      for (std::size_t r = 0; r < n; ++r)
        sim.run({0.0, i}, cfg, r, [&](std::size_t, double, std::span<const Particle> ps) { ++hits[ps[0].type]; });
      for (std::size_t j = 0; j < m.d; ++j) {
        const double ph = static_cast<double>(hits[j]) / n;
        const double se = std::sqrt(std::max(p(i, j) * (1 - p(i, j)), 1e-12) / n);
        CHECK(std::abs(ph - p(i, j)) <= 4 * se);
      }
    }
  }

  TEST_CASE("census mean matches the first-moment semigroup") {
    const ModelSpec m = test::config("jumpy");
    SimConfig cfg = config_at(1.0, {0.5, 1.0}, 23);
    cfg.replicas = 4000;
    const std::vector<double> thetas{0.0, 0.5};
    const CensusEstimate est = census_moments(m, thetas, cfg);
    for (std::size_t a = 0; a < thetas.size(); ++a)
      for (std::size_t k = 0; k < cfg.observation_times.size(); ++k) {
        const Matrix want = matrix_exp(matrix_exponent(m, thetas[a]), cfg.observation_times[k]);
        for (std::size_t i = 0; i < m.d; ++i)
          for (std::size_t j = 0; j < m.d; ++j) CHECK(std::abs(est.mean[a][k](i, j) - want(i, j)) <= 4.5 * est.se[a][k](i, j));
      }
  }

  TEST_CASE("same seed and replica give identical snapshots") {
    const ModelSpec m = test::config("jumpy");
    const SimConfig cfg = config_at(3.0, {1.0, 3.0}, 77);
    const auto a = simulate(m, {}, cfg, 12);
    const auto b = simulate(m, {}, cfg, 12);
    const auto c = simulate(m, {}, cfg, 13);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      REQUIRE(a[k].size() == b[k].size());
      for (std::size_t p = 0; p < a[k].size(); ++p) {
        CHECK(a[k].particles[p].position == b[k].particles[p].position);
        CHECK(a[k].particles[p].id == b[k].particles[p].id);
      }
    }
    CHECK(a.back().min_position != c.back().min_position);
  }

  TEST_CASE("replica results do not depend on the worker count") {
    const ModelSpec m = test::config("champneys");
    SimConfig cfg = config_at(3.0, {3.0}, 9);
    cfg.replicas = 64;
    cfg.workers = 1;
    const VelocityEstimate one = velocity_estimate(m, {}, cfg);
    cfg.workers = 4;
    const VelocityEstimate four = velocity_estimate(m, {}, cfg);
    CHECK(one.speed_hat == four.speed_hat);
    CHECK(one.std_error == four.std_error);
  }

  TEST_CASE("snapshot bookkeeping") {
    PopulationSnapshot s(1.0, 2);
    CHECK(s.extinct());
    CHECK(std::isinf(s.min_position));
    Particle p;
    p.position = 3.0;
    p.type = 1;
    s.add(p);
    CHECK(s.min_position == 3.0);
    p.position = 5.0;
    s.add(p);
    CHECK(s.min_position == 3.0);
    p.position = -1.0;
    p.type = 0;
    s.add(p);
    CHECK(s.min_position == -1.0);
    CHECK(s.counts_by_type[0] + s.counts_by_type[1] == s.size());
  }

  TEST_CASE("martingale values on hand-built snapshots") {
    const ModelSpec m = test::config("jumpy");
    const double th = 0.6;
    const SpectralReport s = spectral_report(m, th);
    const Vector vp = v_prime(m, th);
    Particle p;
    p.position = 0.8;
    p.type = 1;
    const std::vector<Particle> one{p};
    CHECK(additive_martingale(one, 0.0, s) == doctest::Approx(std::exp(-th * 0.8) * s.v_right[1]));
    p.position = 0.0;
    const std::vector<Particle> origin{p};
    CHECK(derivative_martingale(origin, 0.0, s, vp) == doctest::Approx(-vp[1]));
    CHECK(additive_martingale(std::vector<Particle>{}, 1.0, s) == 0.0);
  }

  TEST_CASE("derivative martingale is minus the theta-derivative of W") {
    const ModelSpec m = test::config("champneys");
    const auto snaps = simulate(m, {}, config_at(2.0, {2.0}, 3), 0);
    const double th = 0.7, h = 1e-4;
    const double wp = additive_martingale(snaps[0], spectral_report(m, th + h));
    const double wm = additive_martingale(snaps[0], spectral_report(m, th - h));
    const double z = derivative_martingale(snaps[0], spectral_report(m, th), v_prime(m, th));
    CHECK(-(wp - wm) / (2 * h) == doctest::Approx(z).epsilon(1e-4));
  }

  TEST_CASE("additive martingale mean is preserved") {
    const ModelSpec m = test::config("two_type_symmetric");
    const SpectralReport s = spectral_report(m, 0.8);
    SimConfig cfg = config_at(1.0, {1.0}, 41);
    cfg.replicas = 4000;
    const MartingaleTrajectory tr = martingale_trajectory(m, {}, s, v_prime(m, 0.8), cfg);
    CHECK(std::abs(tr.summaries[0].w.mean - s.v_right[0]) <= 4 * tr.summaries[0].w.se);
  }

  TEST_CASE("population cap raises a truncation error") {
    SimConfig cfg = config_at(20.0, {20.0});
    cfg.max_particles = 1000;
    try {
      simulate(test::config("bbm"), {}, cfg, 0);
      FAIL("expected truncation");
    } catch (const SimulationTruncated& e) {
      CHECK(e.population() > 1000);
      CHECK(e.time() < 20.0);
    }
  }

  TEST_CASE("extinct replicas stay empty") {
    const ModelSpec m = ModelSpec::single_type({{1.0, 0.0, 0.0, {}}, 5.0, DiscreteLaw{{{0, 1.0}}}});
    const auto snaps = simulate(m, {}, config_at(10.0, {5.0, 10.0}), 0);
    CHECK(snaps[0].extinct());
    CHECK(snaps[1].extinct());
  }

  TEST_CASE("extinction frequency is close to q") {
    const ModelSpec m = ModelSpec::single_type({{1.0, 0.0, 0.0, {}}, 1.0, DiscreteLaw{{{0, 0.25}, {2, 0.75}}}});
    SimConfig cfg = config_at(25.0, {25.0}, 8);
    cfg.replicas = 3000;
    const ExtinctionEstimate e = extinction_frequency(m, {}, cfg);
    CHECK(std::abs(e.frequency - 1.0 / 3.0) <= 4 * e.std_error);
  }

  TEST_CASE("config checks") {
    SimConfig cfg = config_at(1.0, {0.5, 0.2});
    CHECK_THROWS_AS(cfg.check(), ValidationError);
    cfg = config_at(1.0, {2.0});
    CHECK_THROWS_AS(cfg.check(), ValidationError);
    cfg = config_at(-1.0, {});
    CHECK_THROWS_AS(cfg.check(), ValidationError);
  }

  TEST_CASE("leftmost velocity of pure drift") {
    SimConfig cfg = config_at(4.0, {4.0});
    cfg.replicas = 3;
    const VelocityEstimate v = velocity_estimate(moving_only(0.0, -0.75), {}, cfg);
    CHECK(v.speed_hat == doctest::Approx(-0.75).epsilon(1e-15));
    CHECK(v.surviving == 3);
  }
}
