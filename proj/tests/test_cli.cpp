#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "semidi/boundary.hpp"
#include "semidi/certify.hpp"
#include "semidi/io.hpp"

using namespace semidi;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("semidi_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  [[nodiscard]] std::string file(const std::string& name, const std::string& content) const {
    std::ofstream(path / name) << content;
    return (path / name).string();
  }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) { return read_text_file(p); }

std::string behavior_text(const Behavior& b, double delta) { return behavior_to_json(b, delta).dump(); }

}  // namespace

TEST_CASE("certify exit codes") {
  TempDir t;
  const auto usd = t.file("usd.json", behavior_text(Behavior::usd(0.9), 0.9));
  const Run r = run({"certify", "--behavior", usd});
  CHECK(r.code == kExitCertified);
  const auto report = nlohmann::json::parse(r.out);
  CHECK(report.at("eta").get<double>() > 1.0);
  CHECK(report.at("certification").at("verdict") == "GENUINE_3_OUTCOME");
  CHECK(report.at("witness_feasibility").get<double>() >= -kWitnessFeasibilityTol);

  const auto uni = t.file("uni.json", R"({"p": [[0.25, 0.25, 0.5], [0.25, 0.25, 0.5]]})");
  CHECK(run({"certify", "--behavior", uni, "--delta", "0.5"}).code == kExitInP2);
}

TEST_CASE("malformed behavior files exit 64 with diagnostics") {
  TempDir t;
  const auto sum = t.file("sum.json", "{\"p\": [[0.5, 0.48, 0.0],\n [0, 0, 1]], \"delta\": 0.5}");
  const Run r1 = run({"certify", "--behavior", sum});
  CHECK(r1.code == kExitBadInput);
  CHECK(r1.err.find("p[0]") != std::string::npos);
  CHECK(r1.err.find("0.98") != std::string::npos);

  const auto syntax = t.file("syntax.json", "{\"p\": [[0.5, 0.5, 0],\n  [0, 0 1]]}");
  const Run r2 = run({"certify", "--behavior", syntax, "--delta", "0.5"});
  CHECK(r2.code == kExitBadInput);
  CHECK(r2.err.find("syntax.json:2:") != std::string::npos);

  const auto neg = t.file("neg.json", R"({"p": [[1.2, -0.2, 0], [0, 0, 1]]})");
  const Run r3 = run({"certify", "--behavior", neg, "--delta", "0.5"});
  CHECK(r3.code == kExitBadInput);
  CHECK(r3.err.find("p[0][0]") != std::string::npos);

  CHECK(run({"certify", "--behavior", t / "missing.json", "--delta", "0.5"}).code == kExitBadInput);
  CHECK(run({"certify", "--behavior", sum, "--delta", "1.5"}).code == kExitBadInput);
  const auto nodelta = t.file("nodelta.json", R"({"p": [[1, 0, 0], [0, 0, 1]]})");
  CHECK(run({"certify", "--behavior", nodelta}).code == kExitBadInput);
}

TEST_CASE("behavior parser tolerates round-off only") {
  const auto f = parse_behavior_json(R"({"p": [[0.1, -1e-17, 0.9], [0.3, 0.3, 0.4000000000001]]})");
  CHECK(f.behavior(0, 1) == 0.0);
  CHECK(f.behavior(1, 0) + f.behavior(1, 1) + f.behavior(1, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(f.delta.has_value());
  CHECK_THROWS_AS(parse_behavior_json(R"({"p": [[0.5, 0.5, 0], [0, 0, 1]], "extra": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_behavior_json(R"({"p": [[0.5, 0.5], [0, 0, 1]]})"), ValidationError);
  CHECK_THROWS_AS(parse_behavior_json(R"({"p": [[0.5, 0.5, "x"], [0, 0, 1]]})"), ValidationError);
}

TEST_CASE("grid specs") {
  const auto g = parse_grid("0.05:0.95:0.05");
  const auto v = g.values();
  REQUIRE(v.size() == 19);
  CHECK(v[2] == 0.15);
  CHECK(v.back() == 0.95);
  CHECK_THROWS_AS(parse_grid("0:1"), ValidationError);
  CHECK_THROWS_AS(parse_grid("0:1:0"), ValidationError);
  CHECK_THROWS_AS(parse_grid("1:0:0.1"), ValidationError);
  CHECK_THROWS_AS(parse_grid("0:1:abc"), ValidationError);
  CHECK_THROWS_AS(parse_grid("0:1:0.1x"), ValidationError);
}

TEST_CASE("boundary files") {
  TempDir t;
  const Run r = run({"boundary", "--delta", "0.7", "--out", t / "b"});
  REQUIRE(r.code == 0);
  for (const char* name : {"delta0.7_p2.csv", "delta0.7_p3.csv"}) {
    std::ifstream in(fs::path(t / "b") / name);
    const auto region = ConvexRegion2D::read_csv(in);
    CHECK(region.is_convex());
    CHECK(region.vertices().size() > 100);
  }

  REQUIRE(run({"boundary", "--delta", "0", "--out", t / "b"}).code == 0);
  std::ifstream tri(fs::path(t / "b") / "delta0_p2.csv");
  const auto triangle = ConvexRegion2D::read_csv(tri);
  CHECK(triangle.vertices().size() == 3);
  CHECK(triangle.area() == doctest::Approx(0.5));

  REQUIRE(run({"boundary", "--delta", "1", "--out", t / "b"}).code == 0);
  std::ifstream seg(fs::path(t / "b") / "delta1_p2.csv");
  const auto segment = ConvexRegion2D::read_csv(seg);
  REQUIRE(segment.vertices().size() == 2);
  CHECK(segment.vertices()[0].x == 0.0);
  CHECK(segment.vertices()[1].x == doctest::Approx(0.5));
  CHECK(segment.vertices()[1].y == doctest::Approx(0.5));
}

TEST_CASE("unwritable output exits 73 before solving") {
  TempDir t;
  const auto blocker = t.file("blocker", "not a directory");
  CHECK(run({"boundary", "--delta", "0.7", "--out", blocker + "/sub"}).code == kExitCantCreate);
  // A full sweep would take far longer than this check; the path is rejected first.
  CHECK(run({"reproduce", "fig5a", "--out", blocker}).code == kExitCantCreate);
  const auto usd = t.file("usd.json", behavior_text(Behavior::usd(0.9), 0.9));
  CHECK(run({"certify", "--behavior", usd, "--out", blocker}).code == kExitCantCreate);
  CHECK_FALSE(fs::exists(blocker + "/sub"));
}

TEST_CASE("reproduce") {
  TempDir t;
  CHECK(run({"reproduce", "fig9", "--out", t / "r"}).code == kExitBadInput);
  CHECK(run({"reproduce", "fig6"}).code == kExitBadInput);

  REQUIRE(run({"reproduce", "fig6", "--out", t / "r", "--format", "csv"}).code == 0);
  std::istringstream csv(slurp(fs::path(t / "r") / "fig6.csv"));
  std::string line;
  int rows = 0;
  bool header = false;
  while (std::getline(csv, line)) {
    if (line.starts_with("#")) continue;
    if (!header) {
      CHECK(line == "delta,p_succ3,p_succ2");
      header = true;
      continue;
    }
    double d, p3, p2;
    char c1, c2;
    std::istringstream ls(line);
    ls >> d >> c1 >> p3 >> c2 >> p2;
    CHECK(p3 == doctest::Approx(1.0 - d).epsilon(1e-15));
    CHECK(p2 == doctest::Approx((1.0 - d * d) / 2.0).epsilon(1e-15));
    ++rows;
  }
  CHECK(rows == 101);

  REQUIRE(run({"reproduce", "fig2", "--out", t / "f2"}).code == 0);
  for (const char* d : {"0", "0.7", "0.9", "1"}) {
    CHECK(fs::exists(fs::path(t / "f2") / ("fig2_delta" + std::string(d) + "_p2.csv")));
    CHECK(fs::exists(fs::path(t / "f2") / ("fig2_delta" + std::string(d) + "_p3.csv")));
  }

  REQUIRE(run({"reproduce", "fig5a", "--out", t / "r", "--grid", "0.5:0.9:0.4"}).code == 0);
  const auto fig5a = nlohmann::json::parse(slurp(fs::path(t / "r") / "fig5a.json"));
  REQUIRE(fig5a.at("rows").size() == 2);
  for (const auto& row : fig5a.at("rows")) CHECK(row.at("omega_min").get<double>() >= 0.9);
  CHECK(fig5a.at("metadata").at("figure") == "fig5a");
  CHECK(fig5a.at("metadata").contains("solver_tol"));
}

TEST_CASE("outputs are byte-identical across reruns") {
  TempDir t;
  const auto usd = t.file("usd.json", behavior_text(Behavior::usd(0.7), 0.7));
  const Run a = run({"certify", "--behavior", usd});
  const Run b = run({"certify", "--behavior", usd});
  CHECK(a.out == b.out);

  REQUIRE(run({"sweep", "--kind", "usd-tolerance", "--grid", "0.4:0.5:0.1", "--out", t / "s1", "--format", "csv",
               "--workers", "1"})
              .code == 0);
  REQUIRE(run({"sweep", "--kind", "usd-tolerance", "--grid", "0.4:0.5:0.1", "--out", t / "s2", "--format", "csv",
               "--workers", "2"})
              .code == 0);
  CHECK(slurp(fs::path(t / "s1") / "usd-tolerance.csv") == slurp(fs::path(t / "s2") / "usd-tolerance.csv"));
  // No stray temporaries from the atomic writes.
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(t / "s1")) ++files;
  CHECK(files == 1);
}

TEST_CASE("config precedence and validation") {
  TempDir t;
  const auto uni = t.file("uni.json", R"({"p": [[0.25, 0.25, 0.5], [0.25, 0.25, 0.5]]})");
  const auto cfg = t.file("cfg.json", R"({"delta": 0.5, "tol": 1e-8})");
  const auto r1 = nlohmann::json::parse(run({"certify", "--behavior", uni, "--config", cfg}).out);
  CHECK(r1.at("delta") == 0.5);
  CHECK(r1.at("solver_tol") == 1e-8);
  const auto r2 = nlohmann::json::parse(run({"certify", "--behavior", uni, "--config", cfg, "--delta", "0.3"}).out);
  CHECK(r2.at("delta") == 0.3);

  const auto with_behavior = t.file("cfg2.json", "{\"behavior\": \"" + uni + "\", \"delta\": 0.4}");
  CHECK(run({"certify", "--config", with_behavior}).code == kExitInP2);

  const auto bad = t.file("bad.json", R"({"delta": 0.5, "colour": "red"})");
  const Run r3 = run({"certify", "--behavior", uni, "--config", bad});
  CHECK(r3.code == kExitBadInput);
  CHECK(r3.err.find("colour") != std::string::npos);
  const auto typed = t.file("typed.json", R"({"delta": "half"})");
  CHECK(run({"certify", "--behavior", uni, "--config", typed}).code == kExitBadInput);
  CHECK_THROWS_AS(parse_config_json(R"({"workers": 1.5})"), ValidationError);
}

TEST_CASE("witness round trip") {
  TempDir t;
  const auto usd = t.file("usd.json", behavior_text(Behavior::usd(0.8), 0.8));
  REQUIRE(run({"witness", "--behavior", usd, "--out", t / "w"}).code == kExitCertified);
  const std::string w = t / "w/witness.json";
  const Run check = run({"witness", "--behavior", usd, "--witness", w});
  CHECK(check.code == kExitCertified);
  CHECK(nlohmann::json::parse(check.out).at("verdict") == "VIOLATED");

  const auto uni = t.file("uni.json", R"({"p": [[0.25, 0.25, 0.5], [0.25, 0.25, 0.5]]})");
  CHECK(run({"witness", "--behavior", uni, "--witness", w}).code == kExitInP2);

  auto tampered = nlohmann::json::parse(slurp(w));
  tampered["H"][0] = {{"a0", 5.0}, {"a", {0.0, 0.0, 0.0}}};
  const auto bad = t.file("bad_witness.json", tampered.dump());
  const Run r = run({"witness", "--behavior", usd, "--witness", bad});
  CHECK((r.code == kExitInconclusive || r.code == kExitBadInput));
}

TEST_CASE("simulate feeds certify, usd, randomness and selftest") {
  TempDir t;
  REQUIRE(run({"simulate", "--delta", "0.9", "--out", t / "s"}).code == 0);
  const std::string b = t / "s/behavior.json";
  CHECK(run({"certify", "--behavior", b}).code == kExitCertified);
  CHECK(run({"usd", "--behavior", b}).code == kExitCertified);
  const Run rnd = run({"randomness", "--behavior", b});
  REQUIRE(rnd.code == 0);
  CHECK(nlohmann::json::parse(rnd.out).at("h_min").get<double>() == doctest::Approx(0.152).epsilon(0.01));

  REQUIRE(run({"simulate", "--delta", "0.6", "--povm", "projective", "--phi", "0.4", "--xi", "0.1", "--out", t / "p"})
              .code == 0);
  CHECK(run({"certify", "--behavior", t / "p/behavior.json"}).code == kExitInP2);
  CHECK(run({"usd", "--behavior", t / "p/behavior.json"}).code == kExitInconclusive);
  CHECK(run({"simulate", "--delta", "0.6", "--povm", "bogus"}).code == kExitBadInput);

  CHECK(run({"selftest", "--delta", "0.4"}).code == kExitCertified);
  const auto [prep, povm] = ideal_usd_realization(0.4);
  const auto real = t.file("real.json", realization_to_json(to_realization(prep, povm)).dump());
  CHECK(run({"selftest", "--delta", "0.4", "--realization", real}).code == kExitCertified);
  CHECK(run({"selftest", "--delta", "0.5", "--realization", real}).code == kExitInconclusive);
}

TEST_CASE("argument errors") {
  CHECK(run({}).code == kExitBadInput);
  CHECK(run({"frobnicate"}).code == kExitBadInput);
  CHECK(run({"sweep", "--kind", "nope"}).code == kExitBadInput);
  CHECK(run({"sweep"}).code == kExitBadInput);
  CHECK(run({"boundary", "--delta", "0.5", "--out", "x", "--format", "xml"}).code == kExitBadInput);
  CHECK(run({"--help"}).code == 0);
}
