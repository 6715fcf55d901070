#pragma once

// File formats, configuration and output plumbing for the command-line tool.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "semidi/qmat.hpp"
#include "semidi/usd.hpp"

namespace semidi {

/// Stable process exit codes.
enum ExitCode : int {
  kExitCertified = 0,
  kExitInP2 = 1,
  kExitInconclusive = 2,
  kExitBadInput = 64,
  kExitCantCreate = 73,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kFileRowSlack = 1e-9;

struct BehaviorFile {
  Behavior behavior;
  std::optional<double> delta;
};

/// Clamps entries into [0, 1] and rescales each row to sum to one. Used to
/// absorb round-off in tables read from or written to files.
Behavior clean_rows(const Behavior& b);

/// {"p": [[r,r,r],[r,r,r]], "delta": r}. Entries within kFileRowSlack of the
/// valid range are accepted and passed through clean_rows. Throws
/// ValidationError naming the source, line/column for syntax errors, and the
/// offending field otherwise.
BehaviorFile parse_behavior_json(const std::string& text, const std::string& source = "<input>");
BehaviorFile load_behavior(const std::filesystem::path& path);
nlohmann::json behavior_to_json(const Behavior& b, std::optional<double> delta = std::nullopt);

/// {"states": [[[re,im],[re,im]], x2], "povm": [2x2 complex matrices, x3]}.
Realization parse_realization_json(const std::string& text, const std::string& source = "<input>");
Realization load_realization(const std::filesystem::path& path);
nlohmann::json realization_to_json(const Realization& r);

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;

  [[nodiscard]] std::vector<double> values() const;
};

/// Parses "start:stop:step".
GridSpec parse_grid(const std::string& spec);

/// Settings read from a JSON config file; absent keys stay unset.
struct RunConfig {
  std::optional<double> delta;
  std::optional<std::string> behavior;
  std::optional<std::string> p0;
  std::optional<double> tol;
  std::optional<std::string> grid;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> family;
  std::optional<int> workers;
};

/// Rejects unknown keys and mistyped values with ValidationError.
RunConfig parse_config_json(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

/// Creates the directory if needed and probes that it accepts new files.
/// Throws IoError otherwise.
void ensure_writable_dir(const std::filesystem::path& dir);

/// Writes through a temporary file in the same directory, then renames.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Compact decimal used in generated file names, e.g. 0.7 -> "0.7".
std::string format_number(double v);

}  // namespace semidi
