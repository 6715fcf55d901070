#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "semidi/boundary.hpp"
#include "semidi/certify.hpp"

using namespace semidi;

namespace {

HermitianMat2 projective(double alpha) { return {0.5, {0.5 * std::sin(alpha), 0.0, 0.5 * std::cos(alpha)}}; }

// Random two-outcome POVM {K, I-K} placed on two of the three outcomes.
Povm random_two_outcome(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lo = u(rng), hi = u(rng);
  const double e1 = std::min(lo, hi), e2 = std::max(lo, hi);
  const double a = 2 * kPi * u(rng);
  // Eigenvalues e1, e2 along direction a in the x-z plane.
  const double mean = 0.5 * (e1 + e2), half = 0.5 * (e2 - e1);
  const HermitianMat2 k{mean, {half * std::sin(a), 0.0, half * std::cos(a)}};
  Povm p;
  const int zero = static_cast<int>(3 * u(rng)) % 3;
  const int first = (zero + 1) % 3, second = (zero + 2) % 3;
  p.elements[zero] = HermitianMat2::zero();
  p.elements[first] = k;
  p.elements[second] = HermitianMat2::identity() - k;
  return p;
}

Behavior random_p2_behavior(std::mt19937_64& rng, double delta) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto prep = make_preparation(delta);
  const int parts = 1 + static_cast<int>(4 * u(rng));
  std::vector<double> w(parts);
  double total = 0.0;
  for (auto& x : w) total += (x = u(rng));
  Behavior out;
  for (int i = 0; i < parts; ++i) {
    const Behavior b = simulate_behavior(prep, random_two_outcome(rng));
    for (int x = 0; x < 2; ++x)
      for (int k = 0; k < 3; ++k) out(x, k) += w[i] / total * b(x, k);
  }
  return out;
}

std::vector<std::array<double, 2>> enumerated_two_outcome_slice_points(double delta, double step) {
  // Symmetrized images of projective two-outcome strategies plus the deterministic ones.
  const auto prep = make_preparation(delta);
  std::vector<std::array<double, 2>> pts = {{1.0 / 2, 1.0 / 2}, {0.0, 0.0}};
  for (double a = 0.0; a < 2 * kPi; a += step) {
    const HermitianMat2 k = projective(a);
    for (int zero = 0; zero < 3; ++zero) {
      Povm p;
      p.elements[zero] = HermitianMat2::zero();
      p.elements[(zero + 1) % 3] = k;
      p.elements[(zero + 2) % 3] = HermitianMat2::identity() - k;
      const auto c = slice_coords(simulate_behavior(prep, p));
      pts.push_back({c.x, c.y});
    }
  }
  return pts;
}

// Largest t with o + t*d on a segment between two enumerated points.
double brute_force_ray(const std::vector<std::array<double, 2>>& pts, double ox, double oy, double dx, double dy) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double ex = pts[j][0] - pts[i][0], ey = pts[j][1] - pts[i][1];
      const double det = dx * (-ey) - dy * (-ex);
      if (std::abs(det) < 1e-14) continue;
      const double rx = pts[i][0] - ox, ry = pts[i][1] - oy;
      const double t = (rx * (-ey) - ry * (-ex)) / det;
      const double s = (dx * ry - dy * rx) / det;
      if (s >= 0.0 && s <= 1.0) best = std::max(best, t);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("identical behavior and noise gives the unbounded marker") {
  const auto r = omega_star(Behavior::uniform(), 0.5, Behavior::uniform());
  CHECK(r.unbounded);
  CHECK(r.omega_star == kOmegaCap);
  CHECK(r.to_json().at("omega_star") == "unbounded");
}

TEST_CASE("optimal unambiguous behavior is certified") {
  const auto r = omega_star(Behavior::usd(0.9), 0.9, Behavior::uniform());
  REQUIRE(r.status == SolveStatus::kSolved);
  CHECK(r.omega_star < 1.0);
  CHECK(r.verdict == Verdict::kGenuine3Outcome);
  CHECK(r.omega_star * r.primal_value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(r.primal_value - r.dual_value) <= 1e-7);
}

TEST_CASE("reference values from an independent conic solver") {
  // 1 - omega* of USD(delta) against uniform noise.
  const std::pair<double, double> ref[] = {{0.3, 0.030806}, {0.46, 0.040156}, {0.5, 0.039524}, {0.9, 0.000244}};
  for (const auto& [d, tol] : ref) {
    const auto r = omega_star(Behavior::usd(d), d, Behavior::uniform());
    CHECK(1.0 - r.omega_star == doctest::Approx(tol).epsilon(2e-5 / tol));
  }
}

TEST_CASE("dual witness: duality, feasibility and violation") {
  for (double d : {0.2, 0.46, 0.7, 0.9}) {
    const Behavior p = Behavior::usd(d);
    const auto r = omega_star(p, d, Behavior::uniform());
    const auto w = dual_witness(p, d, Behavior::uniform());
    CHECK(w.eta > 1.0);
    CHECK(w.value(p, Behavior::uniform()) == doctest::Approx(w.eta).epsilon(1e-9));
    double direct = 0.0;
    const auto pf = p.flat(), uf = Behavior::uniform().flat();
    for (int i = 0; i < 6; ++i) direct += w.v[i] * (pf[i] - uf[i]);
    CHECK(direct == doctest::Approx(w.eta).epsilon(1e-9));
    CHECK(w.eta * r.omega_star == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(witness_feasibility(w, d, Behavior::uniform()) >= -1e-8);
    CHECK(verify_witness(w, p, d, Behavior::uniform()) == WitnessVerdict::kViolated);
    CHECK(verify_witness(w, Behavior::uniform(), d, Behavior::uniform()) == WitnessVerdict::kNotViolated);
    const auto back = DualWitness::from_json(w.to_json());
    CHECK(back.value(p, Behavior::uniform()) == doctest::Approx(w.eta).epsilon(1e-12));
  }
}

TEST_CASE("tampered witnesses are rejected") {
  const double d = 0.6;
  auto w = dual_witness(Behavior::usd(d), d, Behavior::uniform());
  w.h[0].a[0] += 5.0;
  CHECK(verify_witness(w, Behavior::usd(d), d, Behavior::uniform()) == WitnessVerdict::kInvalidWitness);
}

TEST_CASE("strong duality on random three-outcome behaviors") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ang(0.0, 2 * kPi);
  std::uniform_real_distribution<double> del(0.05, 0.95);
  int certified = 0, attempts = 0;
  while (certified < 40 && attempts < 2000) {
    ++attempts;
    const std::array<double, 3> a{ang(rng), ang(rng), ang(rng)};
    Povm povm;
    try {
      povm = extremal_povm(a);
    } catch (const DomainError&) {
      continue;
    }
    const double d = del(rng);
    const Behavior p = simulate_behavior(make_preparation(d), povm);
    const auto r = omega_star(p, d, Behavior::uniform());
    if (r.verdict != Verdict::kGenuine3Outcome) continue;
    ++certified;
    const auto w = dual_witness(p, d, Behavior::uniform());
    CHECK(w.eta * r.omega_star == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(witness_feasibility(w, d, Behavior::uniform()) >= -1e-8);
    CHECK(verify_witness(w, p, d, Behavior::uniform()) == WitnessVerdict::kViolated);
    CHECK(r.dual_value <= r.primal_value + 1e-8);
  }
  CHECK(certified == 40);
}

TEST_CASE("soundness on random two-outcome strategies") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> del(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double d = del(rng);
    const Behavior p = random_p2_behavior(rng, d);
    const auto r = omega_star(p, d, Behavior::uniform());
    CHECK(r.omega_star >= 1.0 - 1e-6);
    CHECK(r.verdict != Verdict::kGenuine3Outcome);
  }
}

TEST_CASE("witnesses never flag two-outcome behaviors") {
  std::mt19937_64 rng(8);
  for (double d : {0.3, 0.6, 0.9}) {
    const auto w = dual_witness(Behavior::usd(d), d, Behavior::uniform());
    for (int i = 0; i < 300; ++i) {
      CHECK(verify_witness(w, random_p2_behavior(rng, d), d, Behavior::uniform()) == WitnessVerdict::kNotViolated);
    }
  }
}

TEST_CASE("brute-force two-outcome enumeration lower-bounds omega*") {
  const double step = 1e-2;
  for (double d : {0.3, 0.7}) {
    const auto pts = enumerated_two_outcome_slice_points(d, step);
    const double u = 1.0 / 3.0;
    for (double phi : {-1.2, -0.6, 0.4}) {
      const auto prep = make_preparation(d);
      const Behavior p = symmetrize_t(simulate_behavior(prep, symmetric_povm(phi)));
      const auto c = slice_coords(p);
      const double oracle = brute_force_ray(pts, u, u, c.x - u, c.y - u);
      const auto r = omega_star(p, d, Behavior::uniform());
      CHECK(oracle <= r.omega_star + 1e-6);
      CHECK(r.omega_star - oracle <= 5e-3);
    }
    // The same oracle applied to the unambiguous point.
    const auto c = slice_coords(Behavior::usd(d));
    const double oracle = brute_force_ray(pts, u, u, c.x - u, c.y - u);
    const auto r = omega_star(Behavior::usd(d), d, Behavior::uniform());
    CHECK(oracle <= r.omega_star + 1e-6);
    CHECK(r.omega_star - oracle <= 5e-3);
  }
}

TEST_CASE("boundary points of the two-outcome region give omega* = 1") {
  for (double d : {0.3, 0.7}) {
    const auto region = p2_region(d);
    const auto& v = region.vertices();
    for (std::size_t i = 0; i < v.size(); i += v.size() / 25) {
      if (std::abs(v[i].x - 1.0 / 3) + std::abs(v[i].y - 1.0 / 3) < 1e-3) continue;
      const auto r = omega_star(Behavior::slice_point(v[i].x, v[i].y), d, Behavior::uniform());
      CHECK(r.omega_star == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("omega* is nonincreasing in the overlap") {
  const Behavior ps[] = {Behavior::usd(0.3), mix_with_noise(Behavior::usd(0.5), 0.02, Behavior::uniform()),
                         simulate_behavior(make_preparation(0.6), symmetric_povm(-1.0))};
  for (const auto& p : ps) {
    double prev = 2.0;
    for (double d = 0.05; d < 1.0; d += 0.05) {
      const double w = omega_star(p, d, Behavior::uniform()).omega_star;
      CHECK(w <= prev + 1e-7);
      prev = w;
    }
  }
}

TEST_CASE("degenerate overlaps") {
  // Orthogonal states: everything is reachable with two outcomes.
  const auto r0 = omega_star(Behavior::usd(0.4), 0.0, Behavior::uniform());
  CHECK(r0.omega_star == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r0.verdict == Verdict::kInP2);
  // Identical states: only input-independent behaviors are reachable.
  const auto r1 = omega_star(Behavior::usd(0.4), 1.0, Behavior::uniform());
  CHECK(r1.omega_star <= 1e-8);
  const auto trivial = omega_star(Behavior::from_rows({0.2, 0.5, 0.3}, {0.2, 0.5, 0.3}), 1.0, Behavior::uniform());
  CHECK(trivial.omega_star >= 1.0 - 1e-8);
  CHECK(trivial.verdict == Verdict::kInP2);
}

TEST_CASE("guessing probability examples") {
  const auto det = guessing_probability(Behavior::from_rows({1, 0, 0}, {1, 0, 0}), 0.5);
  CHECK(det.p_guess == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(det.h_min == doctest::Approx(0.0).epsilon(1e-7));
  const auto usd = guessing_probability(Behavior::usd(0.9), 0.9);
  CHECK(usd.h_min == doctest::Approx(0.152003).epsilon(1e-4));
  const auto same = guessing_probability(Behavior::uniform(), 1.0);
  CHECK(same.p_guess == doctest::Approx(1.0).epsilon(1e-7));
  CHECK_THROWS_AS(guessing_probability(Behavior::from_rows({1, 0, 0}, {0, 1, 0}), 0.5), InfeasibleBehavior);
}

TEST_CASE("guessing probability dominates the marginal mode") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ang(0.0, 2 * kPi);
  std::uniform_real_distribution<double> del(0.05, 0.95);
  int tested = 0;
  while (tested < 30) {
    const std::array<double, 3> a{ang(rng), ang(rng), ang(rng)};
    Povm povm;
    try {
      povm = extremal_povm(a);
    } catch (const DomainError&) {
      continue;
    }
    const double d = del(rng);
    const Behavior p = simulate_behavior(make_preparation(d), povm);
    for (int xs = 0; xs < 2; ++xs) {
      const auto g = guessing_probability(p, d, xs);
      CHECK(g.p_guess >= std::max({p(xs, 0), p(xs, 1), p(xs, 2)}) - 1e-7);
      CHECK(g.p_guess <= 1.0);
    }
    ++tested;
  }
}
