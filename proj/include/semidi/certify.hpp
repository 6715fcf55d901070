#pragma once

// Membership of a behavior in the two-outcome set P2(delta), its dual witness,
// and the adversarial guessing probability. All programs use real symmetric
// 2x2 variables: both preparations are real, so only the real part of any
// measurement operator reaches the statistics.

#include <array>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "semidi/conic.hpp"
#include "semidi/qmat.hpp"

namespace semidi {

/// omega* above this cap is reported as unbounded.
inline constexpr double kOmegaCap = 1e6;
/// Certification requires omega* < 1 - kVerdictMargin.
inline constexpr double kVerdictMargin = 1e-6;
/// Minimum eigenvalue accepted when re-checking a dual witness.
inline constexpr double kWitnessFeasibilityTol = 1e-8;
/// Slack on the witness inequality v.(q - p0) <= 1.
inline constexpr double kWitnessViolationSlack = 1e-9;

enum class Verdict { kInP2, kGenuine3Outcome, kInconclusive };
std::string to_string(Verdict v);

struct CertificationResult {
  double omega_star = 0.0;
  bool unbounded = false;
  Verdict verdict = Verdict::kInconclusive;
  double primal_value = 0.0;  ///< eta = 1/omega of the minimization
  double dual_value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::kNumericalFailure;
  ConicSolution solution;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Largest omega with omega*p + (1-omega)*p0 in P2(delta).
CertificationResult omega_star(const Behavior& p, double delta, const Behavior& p0,
                               const SolverSettings& settings = default_solver_settings());

/// Feasible point of the dual program: v (indexed 3x+b), traceless H^j, J^j.
struct DualWitness {
  std::array<double, 6> v{};
  std::array<HermitianMat2, 3> h;
  std::array<HermitianMat2, 3> j;
  double eta = 0.0;
  double delta = 0.0;
  bool capped = false;  ///< eta scaled to the cap along an unbounded ray

  [[nodiscard]] double value(const Behavior& q, const Behavior& p0) const;
  [[nodiscard]] nlohmann::json to_json() const;
  static DualWitness from_json(const nlohmann::json& j);
};

class WitnessError : public std::runtime_error {
 public:
  WitnessError(const std::string& what, ConicSolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  [[nodiscard]] const ConicSolution& best() const { return best_; }

 private:
  ConicSolution best_;
};

/// Maximizes eta = v.(p - p0) over the dual feasible set. Throws WitnessError
/// when the solver fails.
DualWitness dual_witness(const Behavior& p, double delta, const Behavior& p0,
                         const SolverSettings& settings = default_solver_settings());

/// The nine constraint matrices, index 3j + b; all must be PSD.
std::array<HermitianMat2, 9> witness_constraints(const DualWitness& w, double delta, const Behavior& p0);
/// Smallest eigenvalue over the nine constraint matrices.
double witness_feasibility(const DualWitness& w, double delta, const Behavior& p0);

enum class WitnessVerdict { kViolated, kNotViolated, kInvalidWitness };
std::string to_string(WitnessVerdict v);

WitnessVerdict verify_witness(const DualWitness& w, const Behavior& q, double delta, const Behavior& p0);

class InfeasibleBehavior : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GuessingResult {
  double p_guess = 1.0;
  double h_min = 0.0;  ///< bits
  ConicSolution solution;
};

/// Adversary holding a three-symbol guess e (one per outcome) decomposes the
/// measurement into subnormalized POVMs; returns the best probability of
/// guessing the outcome for input x_star. Throws InfeasibleBehavior when p is
/// not reproducible with states of overlap delta.
GuessingResult guessing_probability(const Behavior& p, double delta, int x_star = 0,
                                    const SolverSettings& settings = default_solver_settings());

}  // namespace semidi
