#pragma once

// Small dense conic solver for programs whose cone constraints are 2x2 real
// symmetric PSD blocks.
//
//   minimize    c'x
//   subject to  F_k(x) = F_k0 + sum_i x_i F_ki  is PSD   (each block 2x2)
//               a_r'x = b_r
//
// A 2x2 block [[p, q], [q, r]] is PSD iff (p+r)/2 >= ||((p-r)/2, q)||, so every
// block is a three-dimensional second-order cone. The solver runs a
// homogeneous self-dual interior-point method with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector; primal or dual infeasibility is detected from
// the embedding and returned as a certificate ray.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace semidi {

/// Real symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  [[nodiscard]] double trace() const { return xx + yy; }
  [[nodiscard]] double min_eigenvalue() const;
  Sym2& operator+=(const Sym2& o) {
    xx += o.xx;
    xy += o.xy;
    yy += o.yy;
    return *this;
  }
  friend Sym2 operator+(Sym2 l, const Sym2& r) { return l += r; }
  friend Sym2 operator*(double s, const Sym2& m) { return {s * m.xx, s * m.xy, s * m.yy}; }
  friend bool operator==(const Sym2&, const Sym2&) = default;
};

/// Affine map x -> constant + sum_i x_i * coefficient_i (sparse over variables).
struct PsdBlock2 {
  Sym2 constant;
  std::vector<std::pair<int, Sym2>> terms;

  [[nodiscard]] Sym2 evaluate(const Eigen::VectorXd& x) const;
};

struct LinearEquality {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;
};

struct ConicProblem {
  int num_vars = 0;
  Eigen::VectorXd objective;  ///< minimized
  std::vector<PsdBlock2> blocks;
  std::vector<LinearEquality> equalities;

  explicit ConicProblem(int n = 0) : num_vars(n), objective(Eigen::VectorXd::Zero(n)) {}
  /// Throws std::invalid_argument on out-of-range indices or size mismatches.
  void check() const;
};

enum class SolveStatus {
  kSolved,
  kPrimalInfeasible,  ///< certificate: equality_duals / block_duals ray
  kDualInfeasible,    ///< primal unbounded; certificate: x ray
  kSolvedInaccurate,  ///< stalled; best iterate within inaccurate_factor * tol
  kNumericalFailure,
};

std::string to_string(SolveStatus s);

struct SolverSettings {
  double tol = 1e-9;  ///< absolute/relative gap and feasibility tolerance
  int max_iterations = 200;
  double regularization = 1e-11;  ///< static KKT regularization, removed by refinement
  int refinement_steps = 3;
  double inaccurate_factor = 1e3;
};

/// Reads SEMIDI_TOL from the environment when set, otherwise the defaults.
SolverSettings default_solver_settings();

struct ConicSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd x;
  Eigen::VectorXd equality_duals;  ///< y: c + A'y - sum_k F_k^*(Z_k) = 0
  std::vector<Sym2> block_duals;   ///< Z_k, PSD
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;

  [[nodiscard]] bool solved() const { return status == SolveStatus::kSolved; }
  [[nodiscard]] nlohmann::json diagnostics() const;
};

ConicSolution solve_conic(const ConicProblem& problem, const SolverSettings& settings);
inline ConicSolution solve_conic(const ConicProblem& problem) {
  return solve_conic(problem, default_solver_settings());
}

}  // namespace semidi
