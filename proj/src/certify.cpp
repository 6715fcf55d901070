#include "semidi/certify.hpp"

#include <algorithm>
#include <cmath>

namespace semidi {

namespace {

constexpr double kInputSlack = 1e-9;

// a0 I + ax X + az Z as a real symmetric matrix.
Sym2 pauli_sym(double a0, double ax, double az) { return {a0 + az, ax, a0 - az}; }

void check_inputs(const Behavior& p, double delta, const Behavior& p0) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("overlap must lie in [0, 1]");
  p.validate(kInputSlack);
  p0.validate(kInputSlack);
}

// Two-outcome strategies: pairs (j, b) with b != j, i.e. outcome j is never
// produced by strategy j.
constexpr std::array<std::array<int, 2>, 6> kStrategyPairs{
    {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}}};

ConicProblem build_omega_program(const Behavior& p, const PreparationPair& prep, const Behavior& p0) {
  // Variable block k holds (a0, ax, az) of N^j_b.
  ConicProblem prob(18);
  for (int k = 0; k < 6; ++k) {
    prob.objective[3 * k] = 1.0;
    PsdBlock2 blk;
    blk.terms = {{3 * k, pauli_sym(1, 0, 0)}, {3 * k + 1, pauli_sym(0, 1, 0)}, {3 * k + 2, pauli_sym(0, 0, 1)}};
    prob.blocks.push_back(std::move(blk));
  }
  // sum_b N^j_b proportional to the identity.
  for (int j = 0; j < 3; ++j) {
    LinearEquality ex, ez;
    for (int k = 0; k < 6; ++k) {
      if (kStrategyPairs[k][0] != j) continue;
      ex.terms.emplace_back(3 * k + 1, 1.0);
      ez.terms.emplace_back(3 * k + 2, 1.0);
    }
    prob.equalities.push_back(std::move(ex));
    prob.equalities.push_back(std::move(ez));
  }
  // p(b|x) + (eta - 1) p0(b|x) = Tr[psi_x sum_j N^j_b], eta = sum a0.
  for (int x = 0; x < 2; ++x) {
    const auto n = prep.bloch(x);
    for (int b = 0; b < 3; ++b) {
      LinearEquality eq;
      for (int k = 0; k < 6; ++k) {
        double a0_coef = -p0(x, b);
        if (kStrategyPairs[k][1] == b) {
          a0_coef += 1.0;
          eq.terms.emplace_back(3 * k + 1, n[0]);
          eq.terms.emplace_back(3 * k + 2, n[2]);
        }
        eq.terms.emplace_back(3 * k, a0_coef);
      }
      eq.rhs = p(x, b) - p0(x, b);
      prob.equalities.push_back(std::move(eq));
    }
  }
  return prob;
}

ConicProblem build_witness_program(const Behavior& p, const PreparationPair& prep, const Behavior& p0) {
  // Variables: v_{b|x} at 3x+b, then (hx, hz) of H^j at 6+2j.
  ConicProblem prob(12);
  for (int x = 0; x < 2; ++x)
    for (int b = 0; b < 3; ++b) prob.objective[3 * x + b] = -(p(x, b) - p0(x, b));
  const std::array<std::array<double, 3>, 2> n{prep.bloch(0), prep.bloch(1)};
  for (const auto& [j, b] : kStrategyPairs) {
    PsdBlock2 blk;
    blk.constant = pauli_sym(0.5, 0, 0);
    for (int x = 0; x < 2; ++x) {
      for (int bp = 0; bp < 3; ++bp) {
        double a0 = 0.5 * p0(x, bp);
        double ax = 0.0, az = 0.0;
        if (bp == b) {
          a0 -= 0.5;
          ax = -0.5 * n[x][0];
          az = -0.5 * n[x][2];
        }
        blk.terms.emplace_back(3 * x + bp, pauli_sym(a0, ax, az));
      }
    }
    blk.terms.emplace_back(6 + 2 * j, pauli_sym(0, 1, 0));
    blk.terms.emplace_back(7 + 2 * j, pauli_sym(0, 0, 1));
    prob.blocks.push_back(std::move(blk));
  }
  return prob;
}

// Constraint matrix without the J^j term.
HermitianMat2 witness_core(const DualWitness& w, const PreparationPair& prep, const Behavior& p0, int j, int b) {
  double vp0 = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int bp = 0; bp < 3; ++bp) vp0 += w.v[3 * x + bp] * p0(x, bp);
  const HermitianMat2& h = w.h[j];
  HermitianMat2 out = HermitianMat2::identity();
  out *= 0.5 + 0.5 * vp0 - 0.5 * h.trace();
  out += h;
  for (int x = 0; x < 2; ++x) out -= w.v[3 * x + b] * prep.density(x);
  return out;
}

DualWitness witness_from_vector(const Eigen::VectorXd& var, const PreparationPair& prep, const Behavior& p0) {
  DualWitness w;
  w.delta = prep.delta;
  for (int i = 0; i < 6; ++i) w.v[i] = var[i];
  for (int j = 0; j < 3; ++j) w.h[j] = {0.0, {var[6 + 2 * j], 0.0, var[7 + 2 * j]}};
  // J^j only enters the b = j constraint; it is fixed by the other multipliers
  // so that this constraint matrix vanishes.
  for (int j = 0; j < 3; ++j) {
    w.j[j] = HermitianMat2::zero();
    w.j[j] -= witness_core(w, prep, p0, j, j);
  }
  return w;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kInP2: return "IN_P2";
    case Verdict::kGenuine3Outcome: return "GENUINE_3_OUTCOME";
    case Verdict::kInconclusive: return "INCONCLUSIVE";
  }
  return "UNKNOWN";
}

std::string to_string(WitnessVerdict v) {
  switch (v) {
    case WitnessVerdict::kViolated: return "VIOLATED";
    case WitnessVerdict::kNotViolated: return "NOT_VIOLATED";
    case WitnessVerdict::kInvalidWitness: return "INVALID_WITNESS";
  }
  return "UNKNOWN";
}

nlohmann::json CertificationResult::to_json() const {
  nlohmann::json j;
  if (unbounded) {
    j["omega_star"] = "unbounded";
  } else {
    j["omega_star"] = omega_star;
  }
  j["verdict"] = to_string(verdict);
  j["primal_value"] = primal_value;
  j["dual_value"] = dual_value;
  j["gap"] = gap;
  j["iterations"] = iterations;
  j["solver"] = solution.diagnostics();
  return j;
}

CertificationResult omega_star(const Behavior& p, double delta, const Behavior& p0, const SolverSettings& settings) {
  check_inputs(p, delta, p0);
  CertificationResult res;
  if (p.distance(p0) < 1e-12) {
    res.unbounded = true;
    res.omega_star = kOmegaCap;
    res.verdict = Verdict::kInP2;
    res.status = SolveStatus::kSolved;
    res.solution.status = SolveStatus::kSolved;
    return res;
  }
  const PreparationPair prep = make_preparation(delta);
  res.solution = solve_conic(build_omega_program(p, prep, p0), settings);
  const ConicSolution& sol = res.solution;
  res.status = sol.status;
  res.primal_value = sol.primal_value;
  res.dual_value = sol.dual_value;
  res.gap = sol.gap;
  res.iterations = sol.iterations;
  switch (sol.status) {
    case SolveStatus::kSolved:
    case SolveStatus::kSolvedInaccurate: {
      const double eta = sol.primal_value;
      if (eta <= 1.0 / kOmegaCap) {
        res.unbounded = true;
        res.omega_star = kOmegaCap;
      } else {
        res.omega_star = 1.0 / eta;
      }
      res.verdict = res.omega_star < 1.0 - kVerdictMargin ? Verdict::kGenuine3Outcome : Verdict::kInP2;
      if (sol.status == SolveStatus::kSolvedInaccurate && !res.unbounded) {
        // Widen the margin by the first-order error of 1/eta.
        const double err = res.omega_star * res.omega_star *
                           (std::abs(sol.primal_value - sol.dual_value) + sol.gap + sol.primal_residual);
        const double threshold = 1.0 - kVerdictMargin;
        if (std::abs(res.omega_star - threshold) <= err) res.verdict = Verdict::kInconclusive;
      }
      break;
    }
    case SolveStatus::kPrimalInfeasible:
      // No positive weight along p - p0 stays inside P2(delta).
      res.omega_star = 0.0;
      res.verdict = Verdict::kGenuine3Outcome;
      break;
    case SolveStatus::kDualInfeasible:
    case SolveStatus::kNumericalFailure:
      res.omega_star = sol.primal_value > 0.0 ? 1.0 / sol.primal_value : 0.0;
      res.verdict = Verdict::kInconclusive;
      break;
  }
  return res;
}

double DualWitness::value(const Behavior& q, const Behavior& p0) const {
  double s = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int b = 0; b < 3; ++b) s += v[3 * x + b] * (q(x, b) - p0(x, b));
  return s;
}

namespace {

nlohmann::json matrix_json(const HermitianMat2& m) {
  const Mat2c mm = m.matrix();
  return nlohmann::json::array({nlohmann::json::array({mm(0, 0).real(), mm(0, 1).real()}),
                                nlohmann::json::array({mm(1, 0).real(), mm(1, 1).real()})});
}

HermitianMat2 matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 || !j[1].is_array() ||
      j[1].size() != 2) {
    throw ValidationError("expected a 2x2 real matrix");
  }
  Mat2c m;
  m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(), j[1][1].get<double>();
  if (std::abs(m(0, 1) - m(1, 0)) > 1e-12) throw ValidationError("witness matrix is not symmetric");
  return HermitianMat2::from_matrix(m);
}

}  // namespace

nlohmann::json DualWitness::to_json() const {
  nlohmann::json out;
  out["v"] = v;
  out["H"] = nlohmann::json::array();
  out["J"] = nlohmann::json::array();
  for (int k = 0; k < 3; ++k) {
    out["H"].push_back(matrix_json(h[k]));
    out["J"].push_back(matrix_json(j[k]));
  }
  out["eta"] = eta;
  out["delta"] = delta;
  return out;
}

DualWitness DualWitness::from_json(const nlohmann::json& in) {
  DualWitness w;
  try {
    const auto v = in.at("v").get<std::vector<double>>();
    if (v.size() != 6) throw ValidationError("witness v must have 6 entries");
    std::copy(v.begin(), v.end(), w.v.begin());
    const auto& hs = in.at("H");
    const auto& js = in.at("J");
    if (!hs.is_array() || hs.size() != 3 || !js.is_array() || js.size() != 3)
      throw ValidationError("witness H and J must hold three matrices each");
    for (int k = 0; k < 3; ++k) {
      w.h[k] = matrix_from_json(hs[k]);
      w.j[k] = matrix_from_json(js[k]);
    }
    w.eta = in.at("eta").get<double>();
    w.delta = in.at("delta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed witness: ") + e.what());
  }
  return w;
}

DualWitness dual_witness(const Behavior& p, double delta, const Behavior& p0, const SolverSettings& settings) {
  check_inputs(p, delta, p0);
  const PreparationPair prep = make_preparation(delta);
  const ConicSolution sol = solve_conic(build_witness_program(p, prep, p0), settings);
  if (sol.status == SolveStatus::kSolved) {
    DualWitness w = witness_from_vector(sol.x, prep, p0);
    w.eta = w.value(p, p0);
    return w;
  }
  if (sol.status == SolveStatus::kSolvedInaccurate) {
    DualWitness w = witness_from_vector(sol.x, prep, p0);
    w.eta = w.value(p, p0);
    if (witness_feasibility(w, delta, p0) >= -kWitnessFeasibilityTol) return w;
  }
  if (sol.status == SolveStatus::kDualInfeasible) {
    // Unbounded eta: v = 0, H = 0 is feasible and the recession ray keeps every
    // constraint PSD, so any positive multiple of the ray is a witness.
    const Eigen::VectorXd& ray = sol.x;
    DualWitness unit = witness_from_vector(ray, prep, p0);
    const double slope = unit.value(p, p0);
    if (slope > 0.0) {
      Eigen::VectorXd scaled = ray * (kOmegaCap / slope);
      DualWitness w = witness_from_vector(scaled, prep, p0);
      w.eta = w.value(p, p0);
      w.capped = true;
      return w;
    }
  }
  throw WitnessError("dual witness program ended with status " + to_string(sol.status), sol);
}

std::array<HermitianMat2, 9> witness_constraints(const DualWitness& w, double delta, const Behavior& p0) {
  const PreparationPair prep = make_preparation(delta);
  std::array<HermitianMat2, 9> out;
  for (int j = 0; j < 3; ++j) {
    for (int b = 0; b < 3; ++b) {
      HermitianMat2 m = witness_core(w, prep, p0, j, b);
      if (b == j) m += w.j[j];
      out[3 * j + b] = m;
    }
  }
  return out;
}

double witness_feasibility(const DualWitness& w, double delta, const Behavior& p0) {
  double worst = 1e300;
  for (const auto& m : witness_constraints(w, delta, p0)) worst = std::min(worst, m.min_eigenvalue());
  return worst;
}

WitnessVerdict verify_witness(const DualWitness& w, const Behavior& q, double delta, const Behavior& p0) {
  check_inputs(q, delta, p0);
  // The constant 1/2 in each constraint matrix is relative to eta ~ 1; scale the
  // slack with the witness magnitude so that capped rays are not rejected for
  // rounding alone.
  double scale = 1.0;
  for (double vi : w.v) scale = std::max(scale, std::abs(vi));
  if (witness_feasibility(w, delta, p0) < -kWitnessFeasibilityTol * scale) return WitnessVerdict::kInvalidWitness;
  return w.value(q, p0) > 1.0 + kWitnessViolationSlack ? WitnessVerdict::kViolated : WitnessVerdict::kNotViolated;
}

GuessingResult guessing_probability(const Behavior& p, double delta, int x_star, const SolverSettings& settings) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("overlap must lie in [0, 1]");
  if (x_star != 0 && x_star != 1) throw DomainError("conditioning input must be 0 or 1");
  p.validate(kInputSlack);
  const PreparationPair prep = make_preparation(delta);
  // Variable block 3e+b holds (a0, ax, az) of the adversary's N^e_b.
  ConicProblem prob(27);
  const auto target = prep.bloch(x_star);
  for (int e = 0; e < 3; ++e) {
    for (int b = 0; b < 3; ++b) {
      const int base = 3 * (3 * e + b);
      PsdBlock2 blk;
      blk.terms = {{base, pauli_sym(1, 0, 0)}, {base + 1, pauli_sym(0, 1, 0)}, {base + 2, pauli_sym(0, 0, 1)}};
      prob.blocks.push_back(std::move(blk));
    }
    const int guess = 3 * (3 * e + e);
    prob.objective[guess] = -1.0;
    prob.objective[guess + 1] = -target[0];
    prob.objective[guess + 2] = -target[2];
    LinearEquality ex, ez;
    for (int b = 0; b < 3; ++b) {
      ex.terms.emplace_back(3 * (3 * e + b) + 1, 1.0);
      ez.terms.emplace_back(3 * (3 * e + b) + 2, 1.0);
    }
    prob.equalities.push_back(std::move(ex));
    prob.equalities.push_back(std::move(ez));
  }
  for (int x = 0; x < 2; ++x) {
    const auto n = prep.bloch(x);
    for (int b = 0; b < 3; ++b) {
      LinearEquality eq;
      for (int e = 0; e < 3; ++e) {
        const int base = 3 * (3 * e + b);
        eq.terms.emplace_back(base, 1.0);
        eq.terms.emplace_back(base + 1, n[0]);
        eq.terms.emplace_back(base + 2, n[2]);
      }
      eq.rhs = p(x, b);
      prob.equalities.push_back(std::move(eq));
    }
  }
  GuessingResult out;
  out.solution = solve_conic(prob, settings);
  if (out.solution.status == SolveStatus::kPrimalInfeasible) {
    throw InfeasibleBehavior("behavior " + to_string(p) + " is not reproducible at overlap " + std::to_string(delta));
  }
  if (out.solution.status != SolveStatus::kSolved && out.solution.status != SolveStatus::kSolvedInaccurate) {
    throw std::runtime_error("guessing-probability program failed: " + out.solution.diagnostics().dump());
  }
  out.p_guess = std::clamp(-out.solution.primal_value, 0.0, 1.0);
  out.h_min = std::max(0.0, -std::log2(out.p_guess));
  return out;
}

}  // namespace semidi
