#include "semidi/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace semidi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json solver_metadata(const SolverSettings& s) {
  return {{"solver_tol", s.tol}, {"max_iterations", s.max_iterations}, {"verdict_margin", kVerdictMargin}};
}

Behavior family_behavior(double delta, double phi) {
  return simulate_behavior(make_preparation(delta), symmetric_povm(phi));
}

double omega_or_inf(const Behavior& b, double delta, const SolverSettings& settings) {
  const auto r = omega_star(b, delta, Behavior::uniform(), settings);
  if (r.verdict == Verdict::kInconclusive && r.status != SolveStatus::kSolvedInaccurate) return kInf;
  return r.omega_star;
}

// Origin strictly inside the triangle of unit vectors: every circular gap < pi.
bool spans_origin(std::array<double, 3> a) {
  for (auto& x : a) x = std::fmod(std::fmod(x, 2 * kPi) + 2 * kPi, 2 * kPi);
  std::sort(a.begin(), a.end());
  const double g0 = a[1] - a[0], g1 = a[2] - a[1], g2 = 2 * kPi - a[2] + a[0];
  constexpr double slack = 1e-9;
  return g0 < kPi - slack && g1 < kPi - slack && g2 < kPi - slack;
}

struct Evaluated {
  std::array<double, 3> angles{};
  double value = kInf;
};

Evaluated evaluate(double delta, const std::array<double, 3>& a, const std::function<double(const Behavior&)>& f) {
  Evaluated e{a, kInf};
  if (!spans_origin(a)) return e;
  const Behavior b = simulate_behavior(make_preparation(delta), extremal_povm(a));
  e.value = f(b);
  if (!std::isfinite(e.value)) e.value = kInf;
  return e;
}

// Initial simplex size around explicit seeds, rad.
constexpr double kSeedScale = 0.02;

Evaluated nelder_mead(double delta, const Evaluated& start, double scale,
                      const std::function<double(const Behavior&)>& f) {
  std::array<Evaluated, 4> simplex;
  simplex[0] = start;
  for (int i = 0; i < 3; ++i) {
    auto a = start.angles;
    a[i] += scale;
    simplex[i + 1] = evaluate(delta, a, f);
  }
  const auto combine = [](const std::array<double, 3>& c, const std::array<double, 3>& w, double t) {
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) out[i] = c[i] + t * (w[i] - c[i]);
    return out;
  };
  for (int it = 0; it < 400; ++it) {
    std::sort(simplex.begin(), simplex.end(), [](const Evaluated& l, const Evaluated& r) { return l.value < r.value; });
    double diameter = 0.0;
    for (int i = 1; i < 4; ++i)
      for (int k = 0; k < 3; ++k) diameter = std::max(diameter, std::abs(simplex[i].angles[k] - simplex[0].angles[k]));
    if (diameter < 1e-7) break;
    std::array<double, 3> centroid{};
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) centroid[k] += simplex[i].angles[k] / 3.0;
    const Evaluated refl = evaluate(delta, combine(centroid, simplex[3].angles, -1.0), f);
    if (refl.value < simplex[0].value) {
      const Evaluated exp = evaluate(delta, combine(centroid, simplex[3].angles, -2.0), f);
      simplex[3] = exp.value < refl.value ? exp : refl;
    } else if (refl.value < simplex[2].value) {
      simplex[3] = refl;
    } else {
      const bool outside = refl.value < simplex[3].value;
      const Evaluated con = evaluate(delta, combine(centroid, outside ? refl.angles : simplex[3].angles, 0.5), f);
      if (con.value < std::min(refl.value, simplex[3].value)) {
        simplex[3] = con;
      } else {
        for (int i = 1; i < 4; ++i) simplex[i] = evaluate(delta, combine(simplex[0].angles, simplex[i].angles, 0.5), f);
      }
    }
  }
  return *std::min_element(simplex.begin(), simplex.end(),
                           [](const Evaluated& l, const Evaluated& r) { return l.value < r.value; });
}

void write_number(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
  } else {
    os << v;
  }
}

}  // namespace

void SweepResult::write_csv(std::ostream& os) const {
  for (const auto& [key, value] : metadata.items()) os << "# " << key << ": " << value.dump() << '\n';
  os << parameter << ',' << metric;
  for (const auto& c : extra_columns) os << ',' << c;
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    write_number(os, grid[i].first);
    os << ',';
    write_number(os, grid[i].second);
    if (i < extras.size()) {
      for (double v : extras[i]) {
        os << ',';
        write_number(os, v);
      }
    }
    os << '\n';
  }
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    nlohmann::json row = {{parameter, grid[i].first}, {metric, grid[i].second}};
    for (std::size_t c = 0; c < extra_columns.size() && i < extras.size(); ++c) row[extra_columns[c]] = extras[i][c];
    rows.push_back(row);
  }
  return {{"parameter", parameter}, {"metric", metric}, {"metadata", metadata}, {"rows", rows}};
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<double> make_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop) || stop < start) {
    throw DomainError("grid needs start <= stop and a positive step");
  }
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-6));
  for (long i = 0; i <= count; ++i) {
    // Round to 12 significant digits so 0.05 + 2*0.05 reads back as 0.15.
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", start + static_cast<double>(i) * step);
    out.push_back(std::strtod(buf, nullptr));
  }
  return out;
}

double robustness(const Behavior& b, double delta, const SolverSettings& settings) {
  const auto r = omega_star(b, delta, Behavior::uniform(), settings);
  if (r.unbounded) return 0.0;
  return std::clamp(1.0 - r.omega_star, 0.0, 1.0);
}

double symmetric_family_omega(double delta, double phi, const SolverSettings& settings) {
  return omega_or_inf(family_behavior(delta, phi), delta, settings);
}

PhiOptimum optimal_phi(double delta, const AnalysisOptions& opts) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("optimal_phi needs 0 < delta < 1");
  // omega is even in phi (outcomes 0 and 1 swap); keep the branch holding the USD point.
  const double lo = -kPi / 2, hi = 0.0;
  const int steps = static_cast<int>(std::ceil((hi - lo) / opts.phi_scan_step));
  PhiOptimum best{0.0, kInf};
  for (int i = 0; i <= steps; ++i) {
    const double phi = std::min(hi, lo + i * opts.phi_scan_step);
    const double w = symmetric_family_omega(delta, phi, opts.solver);
    if (w < best.omega) best = {phi, w};
  }
  // Golden-section search on the bracket around the best scan point.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::max(lo, best.phi - opts.phi_scan_step);
  double b = std::min(hi, best.phi + opts.phi_scan_step);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = symmetric_family_omega(delta, c, opts.solver);
  double fd = symmetric_family_omega(delta, d, opts.solver);
  while (b - a > opts.phi_tolerance) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = symmetric_family_omega(delta, c, opts.solver);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = symmetric_family_omega(delta, d, opts.solver);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fm = symmetric_family_omega(delta, mid, opts.solver);
  for (const auto& [phi, w] : {std::pair{mid, fm}, std::pair{c, fc}, std::pair{d, fd}}) {
    if (w < best.omega) best = {phi, w};
  }
  return best;
}

ExtremalOptimum minimize_over_extremal(double delta, const std::function<double(const Behavior&)>& f,
                                       const AnalysisOptions& opts, const std::vector<std::array<double, 3>>& seeds) {
  const int n = opts.extremal_grid;
  if (n < 4) throw DomainError("extremal grid needs at least 4 angles");
  std::vector<std::array<double, 3>> triples;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const std::array<double, 3> a{2 * kPi * i / n, 2 * kPi * j / n, 2 * kPi * k / n};
        if (spans_origin(a)) triples.push_back(a);
      }
  std::vector<double> values(triples.size(), kInf);
  parallel_for(static_cast<int>(triples.size()), opts.workers,
               [&](int t) { values[t] = evaluate(delta, triples[t], f).value; });
  // Ranking by (value, grid index) keeps the result independent of scheduling.
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  if (order.empty() || !std::isfinite(values[order.front()])) {
    throw std::runtime_error("extremal search found no finite value");
  }
  // At small overlap many near-two-outcome triples tie, so refine several starts.
  const int starts = std::clamp(opts.extremal_starts, 1, static_cast<int>(order.size()));
  std::vector<Evaluated> refined(starts);
  parallel_for(starts, opts.workers, [&](int s) {
    const std::size_t t = order[s];
    refined[s] = nelder_mead(delta, Evaluated{triples[t], values[t]}, kPi / n, f);
  });
  for (const auto& seed : seeds) refined.push_back(nelder_mead(delta, evaluate(delta, seed, f), kSeedScale, f));
  const Evaluated best = *std::min_element(refined.begin(), refined.end(),
                                           [](const Evaluated& l, const Evaluated& r) { return l.value < r.value; });
  ExtremalOptimum out;
  out.angles = best.angles;
  out.value = best.value;
  out.behavior = simulate_behavior(make_preparation(delta), extremal_povm(best.angles));
  return out;
}

double symmetry_defect(const Behavior& b) {
  std::array<int, 3> perm{0, 1, 2};
  double best = kInf;
  do {
    Behavior q;
    for (int x = 0; x < 2; ++x)
      for (int k = 0; k < 3; ++k) q(x, k) = b(x, perm[k]);
    best = std::min(best, q.distance(relabel_pi(q)));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

SweepResult min_omega_sweep(const std::vector<double>& delta_grid, const AnalysisOptions& opts) {
  std::vector<double> deltas = delta_grid;
  std::sort(deltas.begin(), deltas.end());
  for (double d : deltas)
    if (!(d > 0.0 && d < 1.0)) throw DomainError("overlap grid must lie in (0, 1)");
  SweepResult res;
  res.parameter = "delta";
  res.metric = "omega_min";
  res.extra_columns = {"phi_star", "omega_general", "symmetry_defect"};
  res.grid.resize(deltas.size());
  res.extras.resize(deltas.size());
  AnalysisOptions inner = opts;
  inner.workers = 1;
  parallel_for(static_cast<int>(deltas.size()), opts.workers, [&](int i) {
    const double d = deltas[i];
    const PhiOptimum sym = optimal_phi(d, inner);
    double general = std::nan("");
    double defect = std::nan("");
    if (opts.general_check) {
      const auto omega = [&](const Behavior& b) { return omega_or_inf(b, d, inner.solver); };
      // Besides the grid, start from an asymmetric nudge of the symmetric optimum.
      const double a = std::atan2(-std::sin(sym.phi), -std::cos(sym.phi));
      const std::array<double, 3> seed{0.01, a - 0.01, 2.0 * kPi - a + 0.02};
      const ExtremalOptimum g = minimize_over_extremal(d, omega, inner, {seed});
      general = g.value;
      defect = symmetry_defect(g.behavior);
    }
    res.grid[i] = {d, sym.omega};
    res.extras[i] = {sym.phi, general, defect};
  });
  res.metadata = solver_metadata(opts.solver);
  res.metadata["p0"] = "uniform";
  res.metadata["phi_scan_step"] = opts.phi_scan_step;
  res.metadata["phi_tolerance"] = opts.phi_tolerance;
  res.metadata["extremal_grid"] = opts.general_check ? opts.extremal_grid : 0;
  res.metadata["delta_grid"] = deltas;
  return res;
}

SweepResult usd_noise_tolerance(const std::vector<double>& delta_grid, const AnalysisOptions& opts) {
  std::vector<double> deltas = delta_grid;
  std::sort(deltas.begin(), deltas.end());
  for (double d : deltas)
    if (!(d > 0.0 && d < 1.0)) throw DomainError("overlap grid must lie in (0, 1)");
  SweepResult res;
  res.parameter = "delta";
  res.metric = "xi_max";
  res.extra_columns = {"one_minus_omega"};
  res.grid.resize(deltas.size());
  res.extras.resize(deltas.size());
  parallel_for(static_cast<int>(deltas.size()), opts.workers, [&](int i) {
    const double d = deltas[i];
    const Behavior usd = Behavior::usd(d);
    const auto certified = [&](double xi) {
      const auto r = omega_star(mix_with_noise(usd, xi, Behavior::uniform()), d, Behavior::uniform(), opts.solver);
      return r.verdict == Verdict::kGenuine3Outcome;
    };
    double lo = 0.0, hi = 1.0;
    if (!certified(0.0)) {
      hi = 0.0;
    } else {
      while (hi - lo > opts.bisection_tolerance) {
        const double mid = 0.5 * (lo + hi);
        (certified(mid) ? lo : hi) = mid;
      }
    }
    res.grid[i] = {d, lo};
    res.extras[i] = {1.0 - omega_star(usd, d, Behavior::uniform(), opts.solver).omega_star};
  });
  res.metadata = solver_metadata(opts.solver);
  res.metadata["bisection_tolerance"] = opts.bisection_tolerance;
  res.metadata["delta_grid"] = deltas;
  return res;
}

std::string to_string(PovmFamily f) { return f == PovmFamily::kRob ? "rob" : "opt"; }

SweepResult hmin_noise_curves(double delta, const std::vector<double>& xi_grid, PovmFamily family,
                              const AnalysisOptions& opts) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("min-entropy curves need 0 < delta < 1");
  std::vector<double> xis = xi_grid;
  std::sort(xis.begin(), xis.end());
  for (double xi : xis)
    if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("noise weights must lie in [0, 1]");

  SweepResult res;
  res.parameter = "xi";
  res.metric = "h_min";
  res.extra_columns = {"p_guess"};
  res.metadata = solver_metadata(opts.solver);
  res.metadata["delta"] = delta;
  res.metadata["family"] = to_string(family);
  res.metadata["x_star"] = 0;
  res.metadata["adversary_symbols"] = 3;

  Behavior base;
  if (family == PovmFamily::kRob) {
    const PhiOptimum opt = optimal_phi(delta, opts);
    base = family_behavior(delta, opt.phi);
    res.metadata["phi"] = opt.phi;
  } else {
    const auto neg_hmin = [&](const Behavior& b) {
      try {
        return -guessing_probability(b, delta, 0, opts.solver).h_min;
      } catch (const std::exception&) {
        return kInf;
      }
    };
    const ExtremalOptimum opt = minimize_over_extremal(delta, neg_hmin, opts);
    base = opt.behavior;
    res.metadata["angles"] = opt.angles;
    res.metadata["extremal_grid"] = opts.extremal_grid;
    res.metadata["note"] = "numerical maximizer of noiseless h_min over extremal POVMs";
  }
  res.metadata["behavior"] = base.p;

  res.grid.resize(xis.size());
  res.extras.resize(xis.size());
  parallel_for(static_cast<int>(xis.size()), opts.workers, [&](int i) {
    double h = 0.0, pg = 1.0;
    try {
      const auto g = guessing_probability(mix_with_noise(base, xis[i], Behavior::uniform()), delta, 0, opts.solver);
      h = g.h_min;
      pg = g.p_guess;
    } catch (const InfeasibleBehavior&) {
    }
    res.grid[i] = {xis[i], h};
    res.extras[i] = {pg};
  });
  return res;
}

}  // namespace semidi
