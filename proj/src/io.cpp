#include "semidi/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "semidi/analysis.hpp"

namespace semidi {

namespace fs = std::filesystem;

namespace {

nlohmann::json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
}

double number_at(const nlohmann::json& j, const std::string& field, const std::string& source) {
  if (!j.is_number()) throw ValidationError(source + ": field '" + field + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(source + ": field '" + field + "' must be finite");
  return v;
}

Complex complex_at(const nlohmann::json& j, const std::string& field, const std::string& source) {
  if (j.is_number()) return {number_at(j, field, source), 0.0};
  if (!j.is_array() || j.size() != 2) throw ValidationError(source + ": field '" + field + "' must be [re, im]");
  return {number_at(j[0], field + "[0]", source), number_at(j[1], field + "[1]", source)};
}

nlohmann::json complex_json(const Complex& c) { return nlohmann::json::array({c.real(), c.imag()}); }

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Behavior clean_rows(const Behavior& b) {
  Behavior out;
  for (int x = 0; x < 2; ++x) {
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) sum += out(x, k) = std::clamp(b(x, k), 0.0, 1.0);
    for (int k = 0; k < 3; ++k) out(x, k) /= sum;
  }
  return out;
}

BehaviorFile parse_behavior_json(const std::string& text, const std::string& source) {
  const nlohmann::json j = parse_json(text, source);
  if (!j.is_object()) throw ValidationError(source + ": top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "p" && key != "delta") throw ValidationError(source + ": unknown field '" + key + "'");
  }
  if (!j.contains("p")) throw ValidationError(source + ": missing field 'p'");
  const auto& p = j.at("p");
  if (!p.is_array() || p.size() != 2) throw ValidationError(source + ": field 'p' must hold two rows");
  BehaviorFile out;
  for (int x = 0; x < 2; ++x) {
    const std::string row = "p[" + std::to_string(x) + "]";
    if (!p[x].is_array() || p[x].size() != 3) throw ValidationError(source + ": field '" + row + "' must hold three entries");
    double sum = 0.0;
    for (int b = 0; b < 3; ++b) {
      const std::string field = row + "[" + std::to_string(b) + "]";
      const double v = number_at(p[x][b], field, source);
      if (v < -kFileRowSlack || v > 1.0 + kFileRowSlack) {
        throw ValidationError(source + ": field '" + field + "' must lie in [0, 1]");
      }
      out.behavior(x, b) = v;
      sum += v;
    }
    if (std::abs(sum - 1.0) > kFileRowSlack) {
      std::ostringstream msg;
      msg.precision(12);
      msg << source << ": field '" << row << "' sums to " << sum << ", expected 1";
      throw ValidationError(msg.str());
    }
  }
  out.behavior = clean_rows(out.behavior);
  if (j.contains("delta")) {
    const double d = number_at(j.at("delta"), "delta", source);
    if (d < 0.0 || d > 1.0) throw ValidationError(source + ": field 'delta' must lie in [0, 1]");
    out.delta = d;
  }
  return out;
}

BehaviorFile load_behavior(const fs::path& path) { return parse_behavior_json(read_text_file(path), path.string()); }

nlohmann::json behavior_to_json(const Behavior& b, std::optional<double> delta) {
  nlohmann::json j = {{"p", b.p}};
  if (delta) j["delta"] = *delta;
  return j;
}

Realization parse_realization_json(const std::string& text, const std::string& source) {
  const nlohmann::json j = parse_json(text, source);
  if (!j.is_object()) throw ValidationError(source + ": top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "states" && key != "povm") throw ValidationError(source + ": unknown field '" + key + "'");
  }
  if (!j.contains("states") || !j.contains("povm")) throw ValidationError(source + ": needs 'states' and 'povm'");
  const auto& st = j.at("states");
  const auto& pv = j.at("povm");
  if (!st.is_array() || st.size() != 2) throw ValidationError(source + ": field 'states' must hold two vectors");
  if (!pv.is_array() || pv.size() != 3) throw ValidationError(source + ": field 'povm' must hold three matrices");
  Realization r;
  for (int x = 0; x < 2; ++x) {
    const std::string f = "states[" + std::to_string(x) + "]";
    if (!st[x].is_array() || st[x].size() != 2) throw ValidationError(source + ": field '" + f + "' must have two entries");
    for (int i = 0; i < 2; ++i) r.states[x](i) = complex_at(st[x][i], f + "[" + std::to_string(i) + "]", source);
  }
  for (int b = 0; b < 3; ++b) {
    const std::string f = "povm[" + std::to_string(b) + "]";
    if (!pv[b].is_array() || pv[b].size() != 2) throw ValidationError(source + ": field '" + f + "' must be 2x2");
    Mat2c m;
    for (int i = 0; i < 2; ++i) {
      if (!pv[b][i].is_array() || pv[b][i].size() != 2) throw ValidationError(source + ": field '" + f + "' must be 2x2");
      for (int k = 0; k < 2; ++k)
        m(i, k) = complex_at(pv[b][i][k], f + "[" + std::to_string(i) + "][" + std::to_string(k) + "]", source);
    }
    if ((m - m.adjoint()).norm() > 1e-9) throw ValidationError(source + ": field '" + f + "' is not Hermitian");
    r.povm.elements[b] = HermitianMat2::from_matrix(m);
  }
  return r;
}

Realization load_realization(const fs::path& path) {
  return parse_realization_json(read_text_file(path), path.string());
}

nlohmann::json realization_to_json(const Realization& r) {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : r.states) states.push_back({complex_json(s(0)), complex_json(s(1))});
  nlohmann::json povm = nlohmann::json::array();
  for (const auto& e : r.povm.elements) {
    const Mat2c m = e.matrix();
    povm.push_back({{complex_json(m(0, 0)), complex_json(m(0, 1))}, {complex_json(m(1, 0)), complex_json(m(1, 1))}});
  }
  return {{"states", states}, {"povm", povm}};
}

std::vector<double> GridSpec::values() const { return make_grid(start, stop, step); }

GridSpec parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ValidationError("grid '" + spec + "': '" + item + "' is not a number");
    }
  }
  if (parts.size() != 3) throw ValidationError("grid '" + spec + "' must be start:stop:step");
  GridSpec g{parts[0], parts[1], parts[2]};
  if (!(g.step > 0.0) || g.stop < g.start || !std::isfinite(g.start) || !std::isfinite(g.stop)) {
    throw ValidationError("grid '" + spec + "' needs start <= stop and a positive step");
  }
  return g;
}

RunConfig parse_config_json(const std::string& text, const std::string& source) {
  const nlohmann::json j = parse_json(text, source);
  if (!j.is_object()) throw ValidationError(source + ": top level must be an object");
  RunConfig c;
  const auto string_at = [&](const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw ValidationError(source + ": key '" + key + "' must be a string");
    return v.get<std::string>();
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "delta") {
      c.delta = number_at(value, key, source);
    } else if (key == "tol") {
      c.tol = number_at(value, key, source);
    } else if (key == "workers") {
      if (!value.is_number_integer()) throw ValidationError(source + ": key 'workers' must be an integer");
      c.workers = value.get<int>();
    } else if (key == "behavior") {
      c.behavior = string_at(value, key);
    } else if (key == "p0") {
      c.p0 = string_at(value, key);
    } else if (key == "grid") {
      c.grid = string_at(value, key);
    } else if (key == "out") {
      c.out = string_at(value, key);
    } else if (key == "format") {
      c.format = string_at(value, key);
    } else if (key == "family") {
      c.family = string_at(value, key);
    } else {
      throw ValidationError(source + ": unknown key '" + key + "'");
    }
  }
  return c;
}

RunConfig load_config(const fs::path& path) { return parse_config_json(read_text_file(path), path.string()); }

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  if (!dir.empty()) {
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
  }
  const fs::path probe_dir = dir.empty() ? fs::path(".") : dir;
  if (::access(probe_dir.c_str(), W_OK | X_OK) != 0) {
    throw IoError("output directory '" + probe_dir.string() + "' is not writable");
  }
}

void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  ensure_writable_dir(parent);
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("cannot write '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

std::string format_number(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

}  // namespace semidi
