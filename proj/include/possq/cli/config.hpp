#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "possq/bench/runner.hpp"
#include "possq/bench/scenario.hpp"
#include "possq/core/errors.hpp"
#include "possq/core/water_pour.hpp"
#include "possq/tma/models.hpp"

namespace possq::cli {

/// Bad config file, override or value. `where()` is "path:line" or "--set".
class ConfigError : public Error {
 public:
  ConfigError(std::string where, std::string key, const std::string& what)
      : Error(format(where, key, what)), where_(std::move(where)), key_(std::move(key)) {}

  const std::string& where() const { return where_; }
  const std::string& key() const { return key_; }

 private:
  static std::string format(const std::string& where, const std::string& key, const std::string& what) {
    std::string msg = "config error";
    if (!where.empty()) msg += " at " + where;
    if (!key.empty()) msg += ", key '" + key + "'";
    return msg + ": " + what;
  }

  std::string where_;
  std::string key_;
};

/// One `key = value` assignment and where it came from.
struct Setting {
  std::string value;
  std::string where;
};

/// Settings keyed by "section.key".
using Settings = std::map<std::string, Setting>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace detail

/// Parses INI-style text: `[section]` headers, `key = value` lines, and
/// comments starting with '#' or ';'. Keys are case-insensitive.
inline Settings parse_ini(std::string_view text, const std::string& origin) {
  Settings out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where, "", "unterminated section header '" + line + "'");
      section = detail::lower(detail::trim(std::string_view(line).substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(where, "", "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "", "expected 'key = value', got '" + line + "'");
    const std::string key = detail::lower(detail::trim(std::string_view(line).substr(0, eq)));
    if (key.empty()) throw ConfigError(where, "", "missing key before '='");
    if (section.empty()) throw ConfigError(where, key, "key outside of any [section]");
    const std::string full = section + "." + key;
    if (out.count(full)) throw ConfigError(where, full, "duplicate key (first set at " + out[full].where + ")");
    out[full] = {detail::trim(std::string_view(line).substr(eq + 1)), where};
  }
  return out;
}

inline Settings read_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path, "", "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_ini(buf.str(), path);
}

/// Applies one `section.key=value` override on top of file settings.
inline void apply_override(Settings& settings, std::string_view assignment) {
  const std::string where = "--set " + std::string(assignment);
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError(where, "", "expected section.key=value");
  const std::string key = detail::lower(detail::trim(assignment.substr(0, eq)));
  const auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
    throw ConfigError(where, key, "override key must have the form section.key");
  }
  settings[key] = {detail::trim(assignment.substr(eq + 1)), where};
}

inline constexpr double kKnot = 1852.0 / 3600.0;  // m/s
inline constexpr double kKm = 1000.0;

/// Fully resolved run configuration in SI units.
struct Config {
  bench::ScenarioParams scenario;
  bench::FilterKind filter = bench::FilterKind::Possibility;
  std::size_t particles = 5000;
  std::size_t runs = 100;
  std::uint64_t base_seed = 1;
  unsigned parallelism = 1;
  std::vector<std::size_t> n_grid{2000, 5000};
  std::vector<double> nu_grid{3.0, 5.0, 8.0, std::numeric_limits<double>::infinity()};
  std::string output_dir = ".";
};

namespace detail {

inline double parse_real(const std::string& v, bool allow_inf = false) {
  const std::string s = lower(v);
  if (allow_inf && (s == "inf" || s == "infinity")) return std::numeric_limits<double>::infinity();
  if (s.empty()) throw std::invalid_argument("empty value, expected a number");
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(x)) {
    throw std::invalid_argument("'" + v + "' is not a finite number");
  }
  return x;
}

inline std::uint64_t parse_count(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("'" + v + "' is not a non-negative integer");
  }
  errno = 0;
  const unsigned long long x = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) throw std::invalid_argument("'" + v + "' is out of range");
  return x;
}

inline std::uint64_t parse_positive(const std::string& v, std::uint64_t max = std::numeric_limits<std::uint32_t>::max()) {
  const auto x = parse_count(v);
  if (x == 0 || x > max) throw std::invalid_argument("'" + v + "' must be between 1 and " + std::to_string(max));
  return x;
}

inline bool parse_bool(const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw std::invalid_argument("'" + v + "' is not a boolean");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("empty entry in list '" + v + "'");
    out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

inline double positive(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("must be positive");
  return x;
}

/// Shortest round-trip decimal form.
inline std::string number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

struct Key {
  std::string name;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> show;
};

inline const std::vector<Key>& schema() {
  using bench::NoiseModel;
  static const std::vector<Key> keys = {
      {"scenario.scans", [](Config& c, const std::string& v) { c.scenario.scan_count = static_cast<int>(parse_positive(v, 100000)); },
       [](const Config& c) { return std::to_string(c.scenario.scan_count); }},
      {"scenario.interval_s", [](Config& c, const std::string& v) { c.scenario.interval_s = positive(parse_real(v)); },
       [](const Config& c) { return number(c.scenario.interval_s); }},
      {"scenario.q", [](Config& c, const std::string& v) { c.scenario.q = positive(parse_real(v)); },
       [](const Config& c) { return number(c.scenario.q); }},
      {"scenario.observer_speed_kn",
       [](Config& c, const std::string& v) { c.scenario.observer_speed = positive(parse_real(v)) * kKnot; },
       [](const Config& c) { return number(c.scenario.observer_speed); }},
      {"scenario.observer_heading1_deg",
       [](Config& c, const std::string& v) { c.scenario.observer_heading1 = tma::deg_to_rad(parse_real(v)); },
       [](const Config& c) { return number(c.scenario.observer_heading1); }},
      {"scenario.observer_heading2_deg",
       [](Config& c, const std::string& v) { c.scenario.observer_heading2 = tma::deg_to_rad(parse_real(v)); },
       [](const Config& c) { return number(c.scenario.observer_heading2); }},
      {"scenario.leg1_scans", [](Config& c, const std::string& v) { c.scenario.leg1_scans = static_cast<int>(parse_positive(v, 100000)); },
       [](const Config& c) { return std::to_string(c.scenario.leg1_scans); }},
      {"scenario.target_range_km",
       [](Config& c, const std::string& v) { c.scenario.target_range = positive(parse_real(v)) * kKm; },
       [](const Config& c) { return number(c.scenario.target_range); }},
      {"scenario.target_bearing_deg",
       [](Config& c, const std::string& v) { c.scenario.target_bearing = tma::deg_to_rad(parse_real(v)); },
       [](const Config& c) { return number(c.scenario.target_bearing); }},
      {"scenario.target_speed_kn",
       [](Config& c, const std::string& v) {
         const double x = parse_real(v);
         if (x < 0.0) throw std::invalid_argument("must be non-negative");
         c.scenario.target_speed = x * kKnot;
       },
       [](const Config& c) { return number(c.scenario.target_speed); }},
      {"scenario.target_heading_deg",
       [](Config& c, const std::string& v) { c.scenario.target_heading = tma::deg_to_rad(parse_real(v)); },
       [](const Config& c) { return number(c.scenario.target_heading); }},
      {"scenario.truth_process_noise",
       [](Config& c, const std::string& v) { c.scenario.truth_process_noise = parse_bool(v); },
       [](const Config& c) { return std::string(c.scenario.truth_process_noise ? "true" : "false"); }},
      {"scenario.divergence_threshold_km",
       [](Config& c, const std::string& v) { c.scenario.divergence_threshold_m = positive(parse_real(v)) * kKm; },
       [](const Config& c) { return number(c.scenario.divergence_threshold_m); }},

      {"noise.model",
       [](Config& c, const std::string& v) {
         const std::string s = lower(v);
         if (s == "gaussian") {
           c.scenario.true_noise.kind = NoiseModel::Kind::Gaussian;
         } else if (s == "student-t" || s == "studentt" || s == "student_t") {
           c.scenario.true_noise.kind = NoiseModel::Kind::StudentT;
         } else {
           throw std::invalid_argument("'" + v + "' is not one of gaussian, student-t");
         }
       },
       [](const Config& c) {
         return std::string(c.scenario.true_noise.kind == NoiseModel::Kind::Gaussian ? "gaussian" : "student-t");
       }},
      {"noise.sigma_deg", [](Config& c, const std::string& v) { c.scenario.true_noise.sigma = tma::deg_to_rad(positive(parse_real(v))); },
       [](const Config& c) { return number(c.scenario.true_noise.sigma); }},
      {"noise.nu", [](Config& c, const std::string& v) { c.scenario.true_noise.nu = positive(parse_real(v, true)); },
       [](const Config& c) { return number(c.scenario.true_noise.nu); }},

      {"filter.kind",
       [](Config& c, const std::string& v) {
         const auto k = bench::parse_filter_kind(lower(v));
         if (!k) throw std::invalid_argument("'" + v + "' is not one of possibility, standard");
         c.filter = *k;
       },
       [](const Config& c) { return std::string(bench::to_string(c.filter)); }},
      {"filter.particles", [](Config& c, const std::string& v) { c.particles = parse_positive(v, 100000000); },
       [](const Config& c) { return std::to_string(c.particles); }},
      {"filter.sigma_deg", [](Config& c, const std::string& v) { c.scenario.filter_sigma = tma::deg_to_rad(positive(parse_real(v))); },
       [](const Config& c) { return number(c.scenario.filter_sigma); }},

      {"prior.range_km", [](Config& c, const std::string& v) { c.scenario.prior.range_m = positive(parse_real(v)) * kKm; },
       [](const Config& c) { return number(c.scenario.prior.range_m); }},
      {"prior.range_sigma_km",
       [](Config& c, const std::string& v) { c.scenario.prior.range_sigma_m = positive(parse_real(v)) * kKm; },
       [](const Config& c) { return number(c.scenario.prior.range_sigma_m); }},
      {"prior.bearing_sigma_deg",
       [](Config& c, const std::string& v) { c.scenario.prior.bearing_sigma_rad = tma::deg_to_rad(positive(parse_real(v))); },
       [](const Config& c) { return number(c.scenario.prior.bearing_sigma_rad); }},
      {"prior.vel_sigma_x_kn",
       [](Config& c, const std::string& v) { c.scenario.prior.vel_sigma_x = positive(parse_real(v)) * kKnot; },
       [](const Config& c) { return number(c.scenario.prior.vel_sigma_x); }},
      {"prior.vel_sigma_y_kn",
       [](Config& c, const std::string& v) { c.scenario.prior.vel_sigma_y = positive(parse_real(v)) * kKnot; },
       [](const Config& c) { return number(c.scenario.prior.vel_sigma_y); }},
      {"prior.init_covariance",
       [](Config& c, const std::string& v) {
         const std::string s = lower(v);
         if (s == "consistent") {
           c.scenario.prior.covariance = tma::InitCovariance::Consistent;
         } else if (s == "axis-swapped") {
           c.scenario.prior.covariance = tma::InitCovariance::AxisSwapped;
         } else {
           throw std::invalid_argument("'" + v + "' is not one of consistent, axis-swapped");
         }
       },
       [](const Config& c) {
         return std::string(c.scenario.prior.covariance == tma::InitCovariance::Consistent ? "consistent" : "axis-swapped");
       }},
      {"prior.range_jitter", [](Config& c, const std::string& v) { c.scenario.prior_range_jitter = parse_bool(v); },
       [](const Config& c) { return std::string(c.scenario.prior_range_jitter ? "true" : "false"); }},

      {"experiment.runs", [](Config& c, const std::string& v) { c.runs = parse_positive(v, 10000000); },
       [](const Config& c) { return std::to_string(c.runs); }},
      {"experiment.base_seed", [](Config& c, const std::string& v) { c.base_seed = parse_count(v); },
       [](const Config& c) { return std::to_string(c.base_seed); }},
      {"experiment.parallelism", [](Config& c, const std::string& v) { c.parallelism = static_cast<unsigned>(parse_positive(v, 1024)); },
       [](const Config& c) { return std::to_string(c.parallelism); }},
      {"experiment.n_grid",
       [](Config& c, const std::string& v) {
         c.n_grid.clear();
         for (const auto& item : split_list(v)) c.n_grid.push_back(parse_positive(item, 100000000));
       },
       [](const Config& c) {
         std::string s;
         for (auto n : c.n_grid) s += (s.empty() ? "" : ",") + std::to_string(n);
         return s;
       }},
      {"experiment.nu_grid",
       [](Config& c, const std::string& v) {
         c.nu_grid.clear();
         for (const auto& item : split_list(v)) c.nu_grid.push_back(positive(parse_real(item, true)));
       },
       [](const Config& c) {
         std::string s;
         for (auto nu : c.nu_grid) s += (s.empty() ? "" : ",") + number(nu);
         return s;
       }},

      {"output.dir",
       [](Config& c, const std::string& v) {
         if (v.empty()) throw std::invalid_argument("empty output directory");
         c.output_dir = v;
       },
       [](const Config& c) { return c.output_dir; }},
  };
  return keys;
}

inline const Key* find_key(const std::string& name) {
  for (const auto& k : schema()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

/// First settings entry whose key starts with `section.`, for error locations.
inline const std::pair<const std::string, Setting>* first_in(const Settings& s, const std::string& section) {
  for (const auto& kv : s) {
    if (kv.first.rfind(section + ".", 0) == 0) return &kv;
  }
  return nullptr;
}

}  // namespace detail

/// Cross-field checks, done before any run starts.
inline void validate(const Config& c, const Settings& s) {
  auto where_of = [&s](const std::string& key) {
    const auto it = s.find(key);
    return it == s.end() ? std::string("defaults") : it->second.where;
  };
  auto fail = [&](const std::string& key, const std::string& what) { throw ConfigError(where_of(key), key, what); };

  if (c.scenario.scan_count < 2) fail("scenario.scans", "at least 2 scans are required");
  if (std::abs(tma::wrap_angle(c.scenario.observer_heading2 - c.scenario.observer_heading1)) <= 1e-9) {
    fail("scenario.observer_heading2_deg", "observer headings must differ, a manoeuvre is required");
  }
  try {
    bench::validate(c.scenario);
  } catch (const InvalidArgument& e) {
    fail("scenario", e.what());
  }
  if (c.scenario.true_noise.kind == bench::NoiseModel::Kind::Gaussian && s.count("noise.nu") &&
      !std::isinf(c.scenario.true_noise.nu)) {
    fail("noise.nu", "nu is only used with model = student-t");
  }

  const tma::Matrix4 q = tma::process_noise_matrix(c.scenario.interval_s, c.scenario.q);
  const GaussianPossibility<4> noise(tma::State::Zero(), q);
  if (noise.total_mass() < 1.0) {
    fail("scenario.q",
         "transition possibility integrates to " + detail::number(noise.total_mass()) +
             " < 1, so it cannot be water-poured; increase q (states are in metres and seconds)");
  }
}

/// Resolves defaults, file settings and overrides into a Config.
inline Config build_config(const Settings& settings) {
  Config c;
  for (const auto& [key, setting] : settings) {
    const auto* k = detail::find_key(key);
    if (!k) throw ConfigError(setting.where, key, "unknown key");
    try {
      k->set(c, setting.value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(setting.where, key, e.what());
    }
  }
  validate(c, settings);
  return c;
}

inline Config load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  Settings settings = path ? read_config_file(*path) : Settings{};
  for (const auto& o : overrides) apply_override(settings, o);
  return build_config(settings);
}

/// Every setting that affects results, as "key=value" lines in SI units
/// (speeds m/s, ranges m, angles rad) in schema order. Output keys are left
/// out so the same experiment hashes identically wherever it is written.
inline std::string canonical_dump(const Config& c) {
  std::string out;
  for (const auto& k : detail::schema()) {
    if (k.name.rfind("output.", 0) == 0) continue;
    out += k.name + "=" + k.show(c) + "\n";
  }
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const Config& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_dump(c))));
  return buf;
}

}  // namespace possq::cli
