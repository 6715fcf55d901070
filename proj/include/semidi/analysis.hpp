#pragma once

// Sweeps over overlap and noise: white-noise robustness, the most robust
// symmetric POVM, USD noise tolerance and min-entropy under noise.

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semidi/certify.hpp"
#include "semidi/qmat.hpp"

namespace semidi {

struct AnalysisOptions {
  SolverSettings solver = default_solver_settings();
  int workers = 0;               ///< 0: one per hardware thread
  double phi_scan_step = 0.01;   ///< rad
  double phi_tolerance = 1e-4;   ///< golden-section bracket width, rad
  int extremal_grid = 24;        ///< angles per full turn in the general search
  int extremal_starts = 8;       ///< best grid triples refined by Nelder-Mead
  bool general_check = true;     ///< run the general extremal search in min_omega_sweep
  double bisection_tolerance = 1e-5;
};

/// One row per grid point, sorted by parameter; extras are named columns.
struct SweepResult {
  std::string parameter;
  std::string metric;
  std::vector<std::pair<double, double>> grid;
  std::vector<std::string> extra_columns;
  std::vector<std::vector<double>> extras;
  nlohmann::json metadata = nlohmann::json::object();

  /// "# key: value" metadata lines, then the header and one row per point.
  void write_csv(std::ostream& os) const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Runs fn(i) for i in [0, n) on a pool of workers; results land at index i.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

/// Inclusive grid start, start + step, ... up to stop (within step/1e6).
std::vector<double> make_grid(double start, double stop, double step);

/// 1 - omega* against uniform noise, clipped to [0, 1].
double robustness(const Behavior& b, double delta, const SolverSettings& settings = default_solver_settings());

/// omega* of the symmetric-family behavior at angle phi.
double symmetric_family_omega(double delta, double phi, const SolverSettings& settings);

struct PhiOptimum {
  double phi = 0.0;
  double omega = 1.0;
};

/// Scan over [-pi/2, pi/2] followed by golden-section refinement.
PhiOptimum optimal_phi(double delta, const AnalysisOptions& opts = {});

struct ExtremalOptimum {
  std::array<double, 3> angles{};
  double value = 0.0;  ///< minimized objective
  Behavior behavior;
};

/// Minimizes f over extremal POVMs (three unit Bloch vectors in the x-z plane):
/// a grid over unordered angle triples, then Nelder-Mead from the best few and
/// from each seed.
ExtremalOptimum minimize_over_extremal(double delta, const std::function<double(const Behavior&)>& f,
                                       const AnalysisOptions& opts,
                                       const std::vector<std::array<double, 3>>& seeds = {});

/// Smallest ||q - Pi(q)|| over outcome permutations q of b.
double symmetry_defect(const Behavior& b);

SweepResult min_omega_sweep(const std::vector<double>& delta_grid, const AnalysisOptions& opts = {});
SweepResult usd_noise_tolerance(const std::vector<double>& delta_grid, const AnalysisOptions& opts = {});

enum class PovmFamily { kRob, kOpt };
std::string to_string(PovmFamily f);

SweepResult hmin_noise_curves(double delta, const std::vector<double>& xi_grid, PovmFamily family,
                              const AnalysisOptions& opts = {});

}  // namespace semidi
