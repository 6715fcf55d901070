#pragma once

// Unambiguous state discrimination: success-probability witnesses and the
// self-test of the optimal three-outcome measurement.

#include <array>
#include <string>
#include <utility>

#include <json.hpp>

#include "semidi/qmat.hpp"

namespace semidi {

struct UsdReport {
  double p_succ = 0.0;
  double error_rate = 0.0;
  double bound2 = 0.0;  ///< best two-outcome success at this overlap
  double bound3 = 0.0;  ///< 1 - delta
  bool genuine3 = false;
  bool overlap_free = false;  ///< p_succ >= 1/2 without errors, any delta > 0
  bool inconclusive = false;  ///< errors observed: the unambiguous rules do not apply

  [[nodiscard]] nlohmann::json to_json() const;
};

/// p_succ = (p(0|0) + p(1|1))/2 and error_rate = (p(1|0) + p(0|1))/2.
UsdReport usd_success(const Behavior& b);

/// (1 - delta^2)/2 on (0, 1]; the orthogonal case delta = 0 allows 1.
double p_succ2_bound(double delta);

inline constexpr double kUsdTolerance = 1e-9;

/// Fills bound2/bound3 and the certification flags of a usd_success report.
UsdReport certify_genuine3_usd(UsdReport report, double delta);

/// M0 = |s,c><s,c|/(1+d), M1 = |s,-c><s,-c|/(1+d), M_inconclusive = I - M0 - M1.
struct IdealUsdMeasurement {
  std::array<HermitianMat2, 3> elements;
};

IdealUsdMeasurement ideal_usd_measurement(double delta);
/// Ideal states at overlap delta and the optimal measurement. Throws
/// DomainError for delta in {0, 1}.
std::pair<PreparationPair, Povm> ideal_usd_realization(double delta);

/// Explicit 2x2 realization: two physical state vectors and a POVM.
struct Realization {
  std::array<Vec2c, 2> states;
  Povm povm;
};

Realization to_realization(const PreparationPair& prep, const Povm& povm);
/// Applies U to both states and U M U^dagger to every POVM element.
Realization rotate(const Realization& r, const Mat2c& unitary);
Behavior realization_behavior(const Realization& r);

/// K|0> = (psi0 + psi1)/2c, K|1> = (psi0 - psi1)/2s with c = cos t, s = sin t.
struct SelfTestMap {
  Mat2c k;
  double c = 1.0;
  double s = 0.0;

  /// Lambda(rho) = K rho K^dagger.
  [[nodiscard]] Mat2c apply(const Mat2c& rho) const { return k * rho * k.adjoint(); }
};

SelfTestMap build_selftest_map(const std::array<Vec2c, 2>& states, double delta);

/// Tr[M0 Lambda(rho)] written out for the ideal USD measurement.
Complex usd_m0_closed_form(const Mat2c& rho, double delta);

enum class SelfTestVerdict { kPass, kFail, kNotApplicable };
std::string to_string(SelfTestVerdict v);

struct SelfTestReport {
  double delta = 0.0;
  std::array<double, 12> residuals{};  ///< |Tr[M_j K E K^+] - Tr[Mbar_j E]|, index 4j + 2i + k
  double max_residual = 0.0;
  double random_state_residual = 0.0;  ///< worst over seeded random density matrices
  double zero_pattern_residual = 0.0;  ///< |Tr[M_k |psi_j><psi_j'|] - expected|
  double overlap_check = 0.0;          ///< |<psi0|psi1>|
  double behavior_mismatch = 0.0;
  SelfTestVerdict verdict = SelfTestVerdict::kNotApplicable;

  [[nodiscard]] nlohmann::json to_json() const;
};

inline constexpr double kSelfTestTolerance = 1e-9;
inline constexpr int kSelfTestRandomStates = 100;

SelfTestReport verify_selftest(const Realization& realization, double delta);

}  // namespace semidi
