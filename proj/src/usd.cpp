#include "semidi/usd.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace semidi {

namespace {

void check_strict_overlap(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("optimal unambiguous discrimination needs 0 < delta < 1");
  }
}

Mat2c random_density(std::mt19937_64& rng) {
  // Random point of the Bloch ball.
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<double, 3> r{gauss(rng), gauss(rng), gauss(rng)};
  const double norm = std::hypot(r[0], r[1], r[2]);
  const double radius = std::cbrt(unit(rng));
  HermitianMat2 rho{0.5, {0.5 * radius * r[0] / norm, 0.5 * radius * r[1] / norm, 0.5 * radius * r[2] / norm}};
  return rho.matrix();
}

}  // namespace

nlohmann::json UsdReport::to_json() const {
  return {{"p_succ", p_succ},       {"error_rate", error_rate}, {"bound2", bound2},
          {"bound3", bound3},       {"genuine3", genuine3},     {"overlap_free", overlap_free},
          {"inconclusive", inconclusive}};
}

UsdReport usd_success(const Behavior& b) {
  b.validate(1e-9);
  UsdReport r;
  r.p_succ = 0.5 * (b(0, 0) + b(1, 1));
  r.error_rate = 0.5 * (b(0, 1) + b(1, 0));
  return r;
}

double p_succ2_bound(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("overlap must lie in [0, 1]");
  if (delta == 0.0) return 1.0;
  return 0.5 * (1.0 - delta * delta);
}

UsdReport certify_genuine3_usd(UsdReport report, double delta) {
  report.bound2 = p_succ2_bound(delta);
  report.bound3 = 1.0 - delta;
  report.genuine3 = false;
  report.overlap_free = false;
  report.inconclusive = report.error_rate > kUsdTolerance;
  if (report.inconclusive) return report;
  report.genuine3 = report.p_succ > report.bound2 + kUsdTolerance;
  report.overlap_free = delta > 0.0 && report.p_succ >= 0.5 - kUsdTolerance;
  return report;
}

IdealUsdMeasurement ideal_usd_measurement(double delta) {
  check_strict_overlap(delta);
  const PreparationPair prep = make_preparation(delta);
  const double c = prep.cos_theta();
  const double s = prep.sin_theta();
  IdealUsdMeasurement m;
  m.elements[0] = (1.0 / (1.0 + delta)) * HermitianMat2::projector(Vec2c(s, c));
  m.elements[1] = (1.0 / (1.0 + delta)) * HermitianMat2::projector(Vec2c(s, -c));
  m.elements[2] = HermitianMat2::identity() - m.elements[0] - m.elements[1];
  return m;
}

std::pair<PreparationPair, Povm> ideal_usd_realization(double delta) {
  const IdealUsdMeasurement ideal = ideal_usd_measurement(delta);
  return {make_preparation(delta), Povm{ideal.elements}};
}

Realization to_realization(const PreparationPair& prep, const Povm& povm) {
  return {{prep.state(0), prep.state(1)}, povm};
}

Realization rotate(const Realization& r, const Mat2c& u) {
  Realization out;
  for (int x = 0; x < 2; ++x) out.states[x] = u * r.states[x];
  for (int b = 0; b < 3; ++b) {
    out.povm.elements[b] = HermitianMat2::from_matrix(u * r.povm.elements[b].matrix() * u.adjoint());
  }
  return out;
}

Behavior realization_behavior(const Realization& r) {
  Behavior out;
  for (int x = 0; x < 2; ++x)
    for (int b = 0; b < 3; ++b)
      out(x, b) = (r.states[x].adjoint() * r.povm.elements[b].matrix() * r.states[x])(0, 0).real();
  return out;
}

SelfTestMap build_selftest_map(const std::array<Vec2c, 2>& states, double delta) {
  check_strict_overlap(delta);
  const PreparationPair prep = make_preparation(delta);
  SelfTestMap map;
  map.c = prep.cos_theta();
  map.s = prep.sin_theta();
  const Vec2c& psi0 = states[0];
  // Global phases are unobservable: align psi1 so that <psi0|psi1> >= 0.
  const Complex ov = psi0.dot(states[1]);
  const Vec2c psi1 = std::abs(ov) > 0.0 ? Vec2c(states[1] * (std::conj(ov) / std::abs(ov))) : states[1];
  map.k.col(0) = (psi0 + psi1) / (2.0 * map.c);
  map.k.col(1) = (psi0 - psi1) / (2.0 * map.s);
  return map;
}

Complex usd_m0_closed_form(const Mat2c& rho, double delta) {
  const PreparationPair prep = make_preparation(delta);
  const double c = prep.cos_theta();
  const double s = prep.sin_theta();
  return (s * s * rho(0, 0) + c * s * rho(0, 1) + c * s * rho(1, 0) + c * c * rho(1, 1)) / (1.0 + delta);
}

std::string to_string(SelfTestVerdict v) {
  switch (v) {
    case SelfTestVerdict::kPass: return "PASS";
    case SelfTestVerdict::kFail: return "FAIL";
    case SelfTestVerdict::kNotApplicable: return "NOT_APPLICABLE";
  }
  return "UNKNOWN";
}

nlohmann::json SelfTestReport::to_json() const {
  return {{"delta", delta},
          {"residuals", residuals},
          {"max_residual", max_residual},
          {"random_state_residual", random_state_residual},
          {"zero_pattern_residual", zero_pattern_residual},
          {"overlap_check", overlap_check},
          {"behavior_mismatch", behavior_mismatch},
          {"verdict", to_string(verdict)}};
}

SelfTestReport verify_selftest(const Realization& real, double delta) {
  check_strict_overlap(delta);
  for (const auto& st : real.states) {
    if (std::abs(st.norm() - 1.0) > kSelfTestTolerance) throw ValidationError("physical states must be normalized");
  }
  SelfTestReport rep;
  rep.delta = delta;
  rep.overlap_check = std::abs(real.states[0].dot(real.states[1]));
  rep.behavior_mismatch = realization_behavior(real).distance(Behavior::usd(delta));
  if (!real.povm.is_valid() || rep.behavior_mismatch > kSelfTestTolerance) {
    rep.verdict = SelfTestVerdict::kNotApplicable;
    return rep;
  }

  const SelfTestMap map = build_selftest_map(real.states, delta);
  const IdealUsdMeasurement ideal = ideal_usd_measurement(delta);
  std::array<Mat2c, 3> physical;
  std::array<Mat2c, 3> target;
  for (int j = 0; j < 3; ++j) {
    physical[j] = real.povm.elements[j].matrix();
    target[j] = ideal.elements[j].matrix();
  }
  // Linearity: the four operator-basis elements |i><k| settle every input.
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < 2; ++k) {
        Mat2c e = Mat2c::Zero();
        e(i, k) = 1.0;
        const Complex lhs = (physical[j] * map.apply(e)).trace();
        const Complex rhs = (target[j] * e).trace();
        rep.residuals[4 * j + 2 * i + k] = std::abs(lhs - rhs);
      }
    }
  }
  rep.max_residual = *std::max_element(rep.residuals.begin(), rep.residuals.end());

  std::mt19937_64 rng(0x5e1f7e57ULL);
  for (int t = 0; t < kSelfTestRandomStates; ++t) {
    const Mat2c rho = random_density(rng);
    for (int j = 0; j < 3; ++j) {
      const Complex diff = (physical[j] * map.apply(rho)).trace() - (target[j] * rho).trace();
      rep.random_state_residual = std::max(rep.random_state_residual, std::abs(diff));
    }
  }

  // With psi1 phase-aligned, Tr[M_k |psi_j><psi_j'|] vanishes except j = j' = k.
  const Complex ov = real.states[0].dot(real.states[1]);
  const Vec2c psi1 = std::abs(ov) > 0.0 ? Vec2c(real.states[1] * (std::conj(ov) / std::abs(ov))) : real.states[1];
  const std::array<Vec2c, 2> psi{real.states[0], psi1};
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      for (int jp = 0; jp < 2; ++jp) {
        const Complex val = (psi[jp].adjoint() * physical[k] * psi[j])(0, 0);
        const double expected = (j == k && jp == k) ? 1.0 - delta : 0.0;
        rep.zero_pattern_residual = std::max(rep.zero_pattern_residual, std::abs(val - expected));
      }
    }
  }

  const bool overlap_ok = std::abs(rep.overlap_check - delta) <= kSelfTestTolerance;
  const bool residuals_ok = rep.max_residual <= kSelfTestTolerance && rep.random_state_residual <= kSelfTestTolerance;
  rep.verdict = overlap_ok && residuals_ok ? SelfTestVerdict::kPass : SelfTestVerdict::kFail;
  return rep;
}

}  // namespace semidi
