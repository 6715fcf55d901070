#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "semidi/analysis.hpp"
#include "semidi/boundary.hpp"
#include "semidi/certify.hpp"
#include "semidi/io.hpp"
#include "semidi/usd.hpp"

namespace semidi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raw flag storage; a value counts only when its option was given.
struct Flags {
  std::string config;
  double delta = 0.0;
  std::string behavior;
  std::string p0;
  double tol = 0.0;
  std::string grid;
  std::string out;
  std::string format;
  std::string family;
  int workers = 0;
  std::string witness;
  std::string realization;
  std::string kind;
  std::string figure;
  std::string povm = "usd";
  double phi = 0.0;
  double xi = 0.0;
  int x_star = 0;
};

// Flags merged with the config file and the defaults.
struct Context {
  CLI::App* sub = nullptr;
  Flags flags;
  RunConfig config;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  [[nodiscard]] bool given(const std::string& name) const {
    const CLI::Option* o = sub->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  }

  template <class T>
  std::optional<T> pick(const std::string& name, const T& flag, const std::optional<T>& from_config) const {
    if (given(name)) return flag;
    return from_config;
  }

  [[nodiscard]] std::optional<double> delta() const { return pick("--delta", flags.delta, config.delta); }

  [[nodiscard]] double require_delta(const std::optional<double>& fallback = std::nullopt) const {
    auto d = delta();
    if (!d) d = fallback;
    if (!d) throw ValidationError("--delta is required");
    if (!(*d >= 0.0 && *d <= 1.0)) throw ValidationError("--delta must lie in [0, 1]");
    return *d;
  }

  [[nodiscard]] std::optional<std::string> out_dir() const { return pick("--out", flags.out, config.out); }

  [[nodiscard]] std::string require_out() const {
    const auto o = out_dir();
    if (!o) throw ValidationError("--out is required for this command");
    return *o;
  }

  [[nodiscard]] std::string format() const {
    const std::string f = pick("--format", flags.format, config.format).value_or("json");
    if (f != "json" && f != "csv") throw ValidationError("--format must be json or csv");
    return f;
  }

  [[nodiscard]] SolverSettings solver() const {
    SolverSettings s = default_solver_settings();
    if (const auto t = pick("--tol", flags.tol, config.tol)) {
      if (!(*t > 0.0 && std::isfinite(*t))) throw ValidationError("--tol must be positive");
      s.tol = *t;
    }
    return s;
  }

  [[nodiscard]] AnalysisOptions analysis() const {
    AnalysisOptions a;
    a.solver = solver();
    if (const auto w = pick("--workers", flags.workers, config.workers)) {
      if (*w < 0) throw ValidationError("--workers must be non-negative");
      a.workers = *w;
    }
    return a;
  }

  [[nodiscard]] BehaviorFile behavior() const {
    const auto path = pick("--behavior", flags.behavior, config.behavior);
    if (!path) throw ValidationError("--behavior is required");
    return load_behavior(*path);
  }

  [[nodiscard]] Behavior p0() const {
    const std::string spec = pick("--p0", flags.p0, config.p0).value_or("uniform");
    if (spec == "uniform") return Behavior::uniform();
    return load_behavior(spec).behavior;
  }

  [[nodiscard]] std::optional<std::vector<double>> grid() const {
    const auto g = pick("--grid", flags.grid, config.grid);
    if (!g) return std::nullopt;
    return parse_grid(*g).values();
  }

  [[nodiscard]] PovmFamily family() const {
    const std::string f = pick("--family", flags.family, config.family).value_or("rob");
    if (f == "rob") return PovmFamily::kRob;
    if (f == "opt") return PovmFamily::kOpt;
    throw ValidationError("--family must be rob or opt");
  }
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string csv_of(const SweepResult& r) {
  std::ostringstream ss;
  r.write_csv(ss);
  return ss.str();
}

std::string csv_of(const ConvexRegion2D& r) {
  std::ostringstream ss;
  r.write_csv(ss);
  return ss.str();
}

// Writes the file and reports its path on stdout.
void write_file(const Context& ctx, const fs::path& path, const std::string& content) {
  atomic_write(path, content);
  *ctx.out << "wrote " << path.string() << '\n';
}

void write_sweep(const Context& ctx, const fs::path& dir, const std::string& stem, const SweepResult& r) {
  if (ctx.format() == "csv") {
    write_file(ctx, dir / (stem + ".csv"), csv_of(r));
  } else {
    write_file(ctx, dir / (stem + ".json"), dump(r.to_json()));
  }
}

// Prints the report and mirrors it into <out>/<name> when an output dir is set.
void emit_report(const Context& ctx, const std::string& name, const json& report) {
  const std::string text = dump(report);
  *ctx.out << text;
  if (const auto dir = ctx.out_dir()) atomic_write(fs::path(*dir) / name, text);
}

void check_json_only(const Context& ctx) {
  if (ctx.format() != "json") throw ValidationError("this command only writes json");
}

// Output directory checks happen before any solve.
void preflight(const Context& ctx) {
  if (const auto dir = ctx.out_dir()) ensure_writable_dir(*dir);
}

int exit_for(Verdict v) {
  switch (v) {
    case Verdict::kGenuine3Outcome: return kExitCertified;
    case Verdict::kInP2: return kExitInP2;
    case Verdict::kInconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

int cmd_certify(const Context& ctx) {
  check_json_only(ctx);
  const BehaviorFile file = ctx.behavior();
  const double delta = ctx.require_delta(file.delta);
  const Behavior p0 = ctx.p0();
  const SolverSettings settings = ctx.solver();
  preflight(ctx);

  const CertificationResult res = omega_star(file.behavior, delta, p0, settings);
  json report;
  report["command"] = "certify";
  report["delta"] = delta;
  report["behavior"] = file.behavior.p;
  report["p0"] = p0.p;
  report["solver_tol"] = settings.tol;
  report["certification"] = res.to_json();
  try {
    const DualWitness w = dual_witness(file.behavior, delta, p0, settings);
    report["witness"] = w.to_json();
    report["eta"] = w.eta;
    report["witness_feasibility"] = witness_feasibility(w, delta, p0);
  } catch (const WitnessError& e) {
    report["witness"] = nullptr;
    report["witness_error"] = e.what();
  }
  emit_report(ctx, "certify.json", report);
  return exit_for(res.verdict);
}

int cmd_witness(const Context& ctx) {
  check_json_only(ctx);
  const BehaviorFile file = ctx.behavior();
  const Behavior p0 = ctx.p0();
  if (ctx.given("--witness")) {
    const DualWitness w = DualWitness::from_json(json::parse(read_text_file(ctx.flags.witness)));
    const double delta = ctx.require_delta(w.delta);
    preflight(ctx);
    const WitnessVerdict v = verify_witness(w, file.behavior, delta, p0);
    json report = {{"command", "witness"},
                   {"mode", "verify"},
                   {"delta", delta},
                   {"value", w.value(file.behavior, p0)},
                   {"feasibility", witness_feasibility(w, delta, p0)},
                   {"verdict", to_string(v)}};
    emit_report(ctx, "witness_check.json", report);
    switch (v) {
      case WitnessVerdict::kViolated: return kExitCertified;
      case WitnessVerdict::kNotViolated: return kExitInP2;
      case WitnessVerdict::kInvalidWitness: return kExitInconclusive;
    }
    return kExitInconclusive;
  }
  const double delta = ctx.require_delta(file.delta);
  const SolverSettings settings = ctx.solver();
  preflight(ctx);
  const DualWitness w = dual_witness(file.behavior, delta, p0, settings);
  emit_report(ctx, "witness.json", w.to_json());
  return w.eta > 1.0 + kVerdictMargin ? kExitCertified : kExitInP2;
}

struct RegionFiles {
  fs::path p2;
  fs::path p3;
};

RegionFiles write_regions(const Context& ctx, const fs::path& dir, const std::string& prefix, double delta) {
  const std::string tag = prefix + "delta" + format_number(delta);
  RegionFiles files{dir / (tag + "_p2.csv"), dir / (tag + "_p3.csv")};
  write_file(ctx, files.p2, csv_of(p2_region(delta)));
  write_file(ctx, files.p3, csv_of(p3_region(delta)));
  // Re-read what landed on disk and confirm both hulls are still convex.
  for (const fs::path& f : {files.p2, files.p3}) {
    std::ifstream in(f);
    if (!ConvexRegion2D::read_csv(in).is_convex()) throw IoError("region written to '" + f.string() + "' is not convex");
  }
  return files;
}

int cmd_boundary(const Context& ctx) {
  const double delta = ctx.require_delta();
  const fs::path dir = ctx.require_out();
  preflight(ctx);
  write_regions(ctx, dir, "", delta);
  return kExitCertified;
}

int cmd_usd(const Context& ctx) {
  check_json_only(ctx);
  const BehaviorFile file = ctx.behavior();
  const double delta = ctx.require_delta(file.delta);
  preflight(ctx);
  const UsdReport r = certify_genuine3_usd(usd_success(file.behavior), delta);
  json report = r.to_json();
  report["command"] = "usd";
  report["delta"] = delta;
  emit_report(ctx, "usd.json", report);
  if (r.inconclusive) return kExitInconclusive;
  return r.genuine3 ? kExitCertified : kExitInP2;
}

int cmd_selftest(const Context& ctx) {
  check_json_only(ctx);
  const double delta = ctx.require_delta();
  Realization real;
  if (ctx.given("--realization")) {
    real = load_realization(ctx.flags.realization);
  } else {
    const auto [prep, povm] = ideal_usd_realization(delta);
    real = to_realization(prep, povm);
  }
  preflight(ctx);
  const SelfTestReport r = verify_selftest(real, delta);
  json report = r.to_json();
  report["command"] = "selftest";
  report["realization"] = realization_to_json(real);
  emit_report(ctx, "selftest.json", report);
  switch (r.verdict) {
    case SelfTestVerdict::kPass: return kExitCertified;
    case SelfTestVerdict::kFail: return kExitInP2;
    case SelfTestVerdict::kNotApplicable: return kExitInconclusive;
  }
  return kExitInconclusive;
}

int cmd_sweep(const Context& ctx) {
  const std::string kind = ctx.flags.kind;
  const AnalysisOptions opts = ctx.analysis();
  const std::string fmt = ctx.format();
  SweepResult res;
  if (kind == "min-omega" || kind == "usd-tolerance") {
    const std::vector<double> grid = ctx.grid().value_or(make_grid(0.05, 0.95, 0.05));
    preflight(ctx);
    res = kind == "min-omega" ? min_omega_sweep(grid, opts) : usd_noise_tolerance(grid, opts);
  } else if (kind == "hmin") {
    const double delta = ctx.require_delta();
    const std::vector<double> grid = ctx.grid().value_or(make_grid(0.0, 1.0, 0.05));
    const PovmFamily fam = ctx.family();
    preflight(ctx);
    res = hmin_noise_curves(delta, grid, fam, opts);
  } else {
    throw ValidationError("--kind must be min-omega, usd-tolerance or hmin");
  }
  if (const auto dir = ctx.out_dir()) {
    write_sweep(ctx, *dir, kind, res);
  } else {
    *ctx.out << (fmt == "csv" ? csv_of(res) : dump(res.to_json()));
  }
  return kExitCertified;
}

int cmd_randomness(const Context& ctx) {
  check_json_only(ctx);
  const BehaviorFile file = ctx.behavior();
  const double delta = ctx.require_delta(file.delta);
  if (ctx.flags.x_star != 0 && ctx.flags.x_star != 1) throw ValidationError("--x-star must be 0 or 1");
  const SolverSettings settings = ctx.solver();
  preflight(ctx);
  const GuessingResult g = guessing_probability(file.behavior, delta, ctx.flags.x_star, settings);
  json report = {{"command", "randomness"},
                 {"delta", delta},
                 {"x_star", ctx.flags.x_star},
                 {"adversary_symbols", 3},
                 {"p_guess", g.p_guess},
                 {"h_min", g.h_min},
                 {"solver", g.solution.diagnostics()}};
  emit_report(ctx, "randomness.json", report);
  return kExitCertified;
}

int cmd_simulate(const Context& ctx) {
  check_json_only(ctx);
  const double delta = ctx.require_delta();
  const std::string kind = ctx.flags.povm;
  Behavior b;
  if (kind == "usd") {
    const auto [prep, povm] = ideal_usd_realization(delta);
    b = simulate_behavior(prep, povm);
  } else if (kind == "symmetric") {
    b = simulate_behavior(make_preparation(delta), symmetric_povm(ctx.flags.phi));
  } else if (kind == "projective") {
    const double a = ctx.flags.phi;
    const HermitianMat2 k{0.5, {0.5 * std::sin(a), 0.0, 0.5 * std::cos(a)}};
    b = simulate_behavior(make_preparation(delta), Povm{{k, HermitianMat2::identity() - k, HermitianMat2::zero()}});
  } else {
    throw ValidationError("--povm must be usd, symmetric or projective");
  }
  b = clean_rows(mix_with_noise(b, ctx.flags.xi, Behavior::uniform()));
  preflight(ctx);
  emit_report(ctx, "behavior.json", behavior_to_json(b, delta));
  return kExitCertified;
}

SweepResult analytic_usd_bounds(const std::vector<double>& grid) {
  SweepResult r;
  r.parameter = "delta";
  r.metric = "p_succ3";
  r.extra_columns = {"p_succ2"};
  for (double d : grid) {
    r.grid.emplace_back(d, 1.0 - d);
    r.extras.push_back({(1.0 - d * d) / 2.0});
  }
  r.metadata = {{"grid", grid}, {"p_succ2", "(1 - delta^2)/2"}, {"p_succ3", "1 - delta"}};
  return r;
}

// Same rows with metric and the named extra column swapped.
SweepResult promote_column(const SweepResult& src, std::size_t column) {
  SweepResult r = src;
  r.metric = src.extra_columns.at(column);
  r.extra_columns = {src.metric};
  r.extras.clear();
  for (std::size_t i = 0; i < src.grid.size(); ++i) {
    r.grid[i].second = src.extras[i].at(column);
    r.extras.push_back({src.grid[i].second});
  }
  return r;
}

int cmd_reproduce(const Context& ctx) {
  const std::string fig = ctx.flags.figure;
  if (fig != "fig2" && fig != "fig5a" && fig != "fig5b" && fig != "fig6" && fig != "fig7") {
    throw ValidationError("unknown figure id '" + fig + "'; expected fig2, fig5a, fig5b, fig6 or fig7");
  }
  const fs::path dir = ctx.require_out();
  AnalysisOptions opts = ctx.analysis();
  const auto grid = ctx.grid();
  const auto delta = ctx.delta();
  preflight(ctx);

  if (fig == "fig2") {
    const std::vector<double> deltas = delta ? std::vector<double>{*delta} : std::vector<double>{0.0, 0.7, 0.9, 1.0};
    for (double d : deltas) write_regions(ctx, dir, "fig2_", d);
  } else if (fig == "fig5a" || fig == "fig5b") {
    if (fig == "fig5b") opts.general_check = false;
    SweepResult r = min_omega_sweep(grid.value_or(make_grid(0.05, 0.95, 0.05)), opts);
    if (fig == "fig5b") r = promote_column(r, 0);
    r.metadata["figure"] = fig;
    write_sweep(ctx, dir, fig, r);
  } else if (fig == "fig6") {
    SweepResult r = analytic_usd_bounds(grid.value_or(make_grid(0.0, 1.0, 0.01)));
    r.metadata["figure"] = fig;
    write_sweep(ctx, dir, fig, r);
  } else {
    const std::vector<double> deltas = delta ? std::vector<double>{*delta} : std::vector<double>{0.7, 0.9};
    const std::vector<double> xis = grid.value_or(make_grid(0.0, 1.0, 0.05));
    for (double d : deltas) {
      for (PovmFamily fam : {PovmFamily::kRob, PovmFamily::kOpt}) {
        SweepResult r = hmin_noise_curves(d, xis, fam, opts);
        r.metadata["figure"] = fig;
        write_sweep(ctx, dir, "fig7_" + to_string(fam) + "_delta" + format_number(d), r);
      }
    }
  }
  return kExitCertified;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file; flags take precedence");
  sub->add_option("--tol", f.tol, "solver tolerance (default 1e-9 or SEMIDI_TOL)");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--format", f.format, "json or csv");
}

void add_behavior(CLI::App* sub, Flags& f) {
  sub->add_option("--behavior", f.behavior, "behavior JSON file");
  sub->add_option("--delta", f.delta, "lower bound on the state overlap");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certify genuine three-outcome measurements from prepare-and-measure statistics", "semidi"};
  app.require_subcommand(1);
  Flags f;

  auto* certify = app.add_subcommand("certify", "omega* against noise and the dual witness");
  add_common(certify, f);
  add_behavior(certify, f);
  certify->add_option("--p0", f.p0, "noise behavior: uniform or a behavior JSON file");

  auto* witness = app.add_subcommand("witness", "compute a dual witness, or check one with --witness");
  add_common(witness, f);
  add_behavior(witness, f);
  witness->add_option("--p0", f.p0, "noise behavior: uniform or a behavior JSON file");
  witness->add_option("--witness", f.witness, "witness JSON to verify against the behavior");

  auto* boundary = app.add_subcommand("boundary", "write the two- and three-outcome slice regions as CSV");
  add_common(boundary, f);
  boundary->add_option("--delta", f.delta, "state overlap");

  auto* usd = app.add_subcommand("usd", "unambiguous-discrimination success witness");
  add_common(usd, f);
  add_behavior(usd, f);

  auto* selftest = app.add_subcommand("selftest", "self-test the optimal unambiguous measurement");
  add_common(selftest, f);
  selftest->add_option("--delta", f.delta, "state overlap");
  selftest->add_option("--realization", f.realization, "realization JSON (default: the ideal one)");

  auto* sweep = app.add_subcommand("sweep", "parameter sweeps");
  add_common(sweep, f);
  sweep->add_option("--kind", f.kind, "min-omega, usd-tolerance or hmin")->required();
  sweep->add_option("--grid", f.grid, "start:stop:step over delta (xi for hmin)");
  sweep->add_option("--delta", f.delta, "state overlap for hmin");
  sweep->add_option("--family", f.family, "rob or opt for hmin");
  sweep->add_option("--workers", f.workers, "worker threads, 0 for one per core");

  auto* randomness = app.add_subcommand("randomness", "adversarial guessing probability and min-entropy");
  add_common(randomness, f);
  add_behavior(randomness, f);
  randomness->add_option("--x-star", f.x_star, "input whose outcome is guessed");

  auto* simulate = app.add_subcommand("simulate", "behavior of a model measurement, optionally with white noise");
  add_common(simulate, f);
  simulate->add_option("--delta", f.delta, "state overlap");
  simulate->add_option("--povm", f.povm, "usd, symmetric or projective");
  simulate->add_option("--phi", f.phi, "angle of the symmetric or projective measurement");
  simulate->add_option("--xi", f.xi, "white-noise weight");

  auto* reproduce = app.add_subcommand("reproduce", "emit the data behind a figure");
  add_common(reproduce, f);
  reproduce->add_option("figure", f.figure, "fig2, fig5a, fig5b, fig6 or fig7")->required();
  reproduce->add_option("--delta", f.delta, "restrict fig2 or fig7 to one overlap");
  reproduce->add_option("--grid", f.grid, "start:stop:step override");
  reproduce->add_option("--workers", f.workers, "worker threads, 0 for one per core");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitBadInput;
  }

  Context ctx;
  ctx.sub = app.get_subcommands().front();
  ctx.flags = f;
  ctx.out = &out;
  ctx.err = &err;
  const std::string name = ctx.sub->get_name();
  try {
    if (ctx.given("--config")) ctx.config = load_config(f.config);
    (void)ctx.format();
    if (name == "certify") return cmd_certify(ctx);
    if (name == "witness") return cmd_witness(ctx);
    if (name == "boundary") return cmd_boundary(ctx);
    if (name == "usd") return cmd_usd(ctx);
    if (name == "selftest") return cmd_selftest(ctx);
    if (name == "sweep") return cmd_sweep(ctx);
    if (name == "randomness") return cmd_randomness(ctx);
    if (name == "simulate") return cmd_simulate(ctx);
    return cmd_reproduce(ctx);
  } catch (const IoError& e) {
    err << "semidi " << name << ": " << e.what() << '\n';
    return kExitCantCreate;
  } catch (const ValidationError& e) {
    err << "semidi " << name << ": " << e.what() << '\n';
    return kExitBadInput;
  } catch (const DomainError& e) {
    err << "semidi " << name << ": " << e.what() << '\n';
    return kExitBadInput;
  } catch (const InfeasibleBehavior& e) {
    err << "semidi " << name << ": " << e.what() << '\n';
    return kExitBadInput;
  } catch (const json::exception& e) {
    err << "semidi " << name << ": " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "semidi " << name << ": solver failure: " << e.what() << '\n';
    return kExitInconclusive;
  }
}

}  // namespace semidi
