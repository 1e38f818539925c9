#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "ccch/characteristics.hpp"
#include "ccch/diagnostics.hpp"
#include "ccch/peakon.hpp"
#include "ccch/solver.hpp"

namespace ccch {

// ---------------------------------------------------------------------------
// Initial-condition shapes
// ---------------------------------------------------------------------------

enum class ShapeKind { bump, gaussian, mollified_peakon };

/// coefficient * shape(p0, p1, p2)
///   bump(center, width, amplitude)       amplitude exp(-1/(1 - s^2)), s = (x-c)/w, |s| < 1
///   gaussian(center, width, amplitude)   amplitude exp(-s^2)
///   mollified_peakon(center, mass, width) bump of unit discrete mass, scaled by mass
struct ShapeTerm {
  ShapeKind kind = ShapeKind::bump;
  double p0 = 0.0;
  double p1 = 1.0;
  double p2 = 1.0;
  double coefficient = 1.0;
};

/// Sum of shape terms; the empty sum is the zero field.
struct ShapeExpr {
  std::vector<ShapeTerm> terms;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::optional<double> to_double(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

class ShapeParser {
 public:
  explicit ShapeParser(std::string_view text) : s_(text) {}

  ShapeExpr parse() {
    ShapeExpr out;
    skip();
    if (at_end()) throw ConfigError("empty shape expression");
    bool first = true;
    while (!at_end()) {
      double sign = 1.0;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1.0 : 1.0;
        ++i_;
        skip();
      } else if (!first) {
        fail("expected '+' or '-'");
      }
      first = false;
      if (auto term = parse_term()) {
        term->coefficient *= sign;
        out.terms.push_back(*term);
      }
      skip();
    }
    return out;
  }

 private:
  std::optional<ShapeTerm> parse_term() {
    double coef = 1.0;
    if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
      coef = number();
      skip();
      if (at_end() || peek() == '+' || peek() == '-') {
        if (coef != 0.0) fail("bare constants other than 0 are not shapes");
        return std::nullopt;
      }
      if (peek() != '*') fail("expected '*' after coefficient");
      ++i_;
      skip();
    }
    std::string name;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) name += s_[i_++];
    ShapeTerm t;
    if (name == "bump") {
      t.kind = ShapeKind::bump;
    } else if (name == "gaussian") {
      t.kind = ShapeKind::gaussian;
    } else if (name == "mollified_peakon") {
      t.kind = ShapeKind::mollified_peakon;
    } else {
      fail("unknown shape '" + name + "'");
    }
    skip();
    if (peek() != '(') fail("expected '('");
    ++i_;
    double args[3];
    for (int k = 0; k < 3; ++k) {
      skip();
      args[k] = signed_number();
      skip();
      if (k < 2) {
        if (peek() != ',') fail("expected ',' (shapes take three arguments)");
        ++i_;
      }
    }
    if (peek() != ')') fail("expected ')'");
    ++i_;
    t.p0 = args[0];
    t.p1 = args[1];
    t.p2 = args[2];
    t.coefficient = coef;
    return t;
  }

  double signed_number() {
    double sign = 1.0;
    if (peek() == '-' || peek() == '+') {
      sign = peek() == '-' ? -1.0 : 1.0;
      ++i_;
    }
    return sign * number();
  }

  double number() {
    const std::size_t start = i_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == 'e' ||
                         peek() == 'E' ||
                         ((peek() == '-' || peek() == '+') && i_ > start &&
                          (s_[i_ - 1] == 'e' || s_[i_ - 1] == 'E')))) {
      ++i_;
    }
    const auto v = to_double(s_.substr(start, i_ - start));
    if (!v) fail("expected a number");
    return *v;
  }

  void skip() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++i_;
  }
  bool at_end() const { return i_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[i_]; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("shape expression '" + std::string(s_) + "': " + msg + " at column " +
                      std::to_string(i_ + 1));
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

inline double bump_profile(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

}  // namespace detail

inline ShapeExpr parse_shape(std::string_view text) { return detail::ShapeParser(text).parse(); }

/// Samples the expression on g. Shapes whose support (bump, mollified peakon)
/// or 8-width core (gaussian) crosses the window edge are rejected.
inline RealField evaluate_shape(const ShapeExpr& e, const Grid& g) {
  RealField out(g);
  const double L = g.half_length();
  for (const ShapeTerm& t : e.terms) {
    switch (t.kind) {
      case ShapeKind::bump: {
        const double c = t.p0, w = t.p1, a = t.p2;
        if (!(w > 0.0)) throw ConfigError("bump width must be positive");
        if (c - w <= -L || c + w >= L) throw ConfigError("bump support crosses the window edge");
        for (std::size_t j = 0; j < g.size(); ++j) {
          out[j] += t.coefficient * a * detail::bump_profile((g.node(j) - c) / w);
        }
        break;
      }
      case ShapeKind::gaussian: {
        const double c = t.p0, w = t.p1, a = t.p2;
        if (!(w > 0.0)) throw ConfigError("gaussian width must be positive");
        if (c - 8.0 * w <= -L || c + 8.0 * w >= L) throw ConfigError("gaussian core crosses the window edge");
        for (std::size_t j = 0; j < g.size(); ++j) {
          const double s = (g.node(j) - c) / w;
          out[j] += t.coefficient * a * std::exp(-s * s);
        }
        break;
      }
      case ShapeKind::mollified_peakon: {
        const double c = t.p0, mass = t.p1, w = t.p2;
        if (!(w > 0.0)) throw ConfigError("mollifier width must be positive");
        if (c - w <= -L || c + w >= L) throw ConfigError("mollified peakon crosses the window edge");
        double total = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) total += detail::bump_profile((g.node(j) - c) / w);
        total *= g.spacing();
        if (!(total > 0.0)) throw ConfigError("mollifier width is below the grid spacing");
        for (std::size_t j = 0; j < g.size(); ++j) {
          out[j] += t.coefficient * mass * detail::bump_profile((g.node(j) - c) / w) / total;
        }
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

enum class Kind { pde, peakon, complex, characteristics };

inline std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::pde: return "pde";
    case Kind::peakon: return "peakon";
    case Kind::complex: return "complex";
    case Kind::characteristics: return "characteristics";
  }
  return "?";
}

struct ScenarioConfig {
  Kind kind = Kind::pde;
  double half_length = 30.0;
  std::size_t n_points = 2048;
  double t_end = 1.0;
  double dt = 1e-3;
  double output_every = 0.1;
  Mode mode = Mode::coupled;

  // Initial condition: momentum target (m0, n0) or velocity target (u0, v0).
  // The complex reduction reads the imaginary part from m0_imag / u0_imag.
  std::string m0, n0, u0, v0, m0_imag, u0_imag;

  // Peakon families.
  std::vector<double> m_amps, n_amps, q, r;

  double epsilon_support = 1e-10;
  double tail_tolerance = 1e-8;
  /// <= 0 selects 1e6 * max(1, max|m0|, max|n0|).
  double blowup_threshold = 0.0;

  std::string output = "ccch_out.csv";
  std::string snapshots;  ///< optional (x, u, v, m, n) CSV blocks

  bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
  return out;
}

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line;
};

/// Splits one line into key=value pairs. Several pairs may share a line when
/// separated by whitespace; a value extends up to the next `identifier=`.
inline std::vector<KeyValue> split_pairs(const std::string& line, std::size_t line_no) {
  static const std::regex key_re(R"((^|\s)([A-Za-z_][A-Za-z0-9_]*)\s*=)");
  std::vector<KeyValue> out;
  std::vector<std::smatch> hits;
  for (auto it = std::sregex_iterator(line.begin(), line.end(), key_re); it != std::sregex_iterator(); ++it) {
    hits.push_back(*it);
  }
  if (hits.empty()) {
    throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" + trim(line) + "'");
  }
  if (!trim(std::string_view(line).substr(0, static_cast<std::size_t>(hits[0].position(0)))).empty()) {
    throw ConfigError("line " + std::to_string(line_no) + ": stray text before first key");
  }
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const auto vstart = static_cast<std::size_t>(hits[i].position(0) + hits[i].length(0));
    const std::size_t vend =
        i + 1 < hits.size() ? static_cast<std::size_t>(hits[i + 1].position(0)) : line.size();
    out.push_back({hits[i][2].str(), trim(std::string_view(line).substr(vstart, vend - vstart)), line_no});
  }
  return out;
}

[[noreturn]] inline void bad_value(const KeyValue& kv, const std::string& expected) {
  throw ConfigError("line " + std::to_string(kv.line) + ": key '" + kv.key + "' expects " + expected +
                    ", got '" + kv.value + "'");
}

inline double parse_positive(const KeyValue& kv) {
  const auto v = to_double(kv.value);
  if (!v) bad_value(kv, "a number");
  if (!(*v > 0.0)) bad_value(kv, "a positive number");
  return *v;
}

inline double parse_real(const KeyValue& kv) {
  const auto v = to_double(kv.value);
  if (!v) bad_value(kv, "a number");
  return *v;
}

inline std::vector<double> parse_list(const KeyValue& kv) {
  std::vector<double> out;
  std::string cur;
  std::stringstream ss(kv.value);
  while (std::getline(ss, cur, ',')) {
    const auto v = to_double(cur);
    if (!v) bad_value(kv, "a comma-separated list of numbers");
    out.push_back(*v);
  }
  return out;
}

}  // namespace detail

/// Parses a plain-text key=value document ('#' starts a comment) and
/// validates it. Unknown keys, duplicate keys, malformed values and missing
/// kind-specific keys raise ConfigError naming the key and line.
inline ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig cfg;
  std::map<std::string, std::size_t> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(raw.substr(0, hash));
    if (line.empty()) continue;
    for (const auto& kv : detail::split_pairs(line, line_no)) {
      if (auto it = seen.find(kv.key); it != seen.end()) {
        throw ConfigError("line " + std::to_string(line_no) + ": key '" + kv.key + "' already set on line " +
                          std::to_string(it->second));
      }
      seen[kv.key] = line_no;
      const std::string& k = kv.key;
      if (k == "kind") {
        if (kv.value == "pde") cfg.kind = Kind::pde;
        else if (kv.value == "peakon") cfg.kind = Kind::peakon;
        else if (kv.value == "complex") cfg.kind = Kind::complex;
        else if (kv.value == "characteristics") cfg.kind = Kind::characteristics;
        else detail::bad_value(kv, "one of pde|peakon|complex|characteristics");
      } else if (k == "half_length") {
        cfg.half_length = detail::parse_positive(kv);
      } else if (k == "n_points") {
        const auto v = detail::to_double(kv.value);
        if (!v || *v != std::floor(*v) || *v < 1) detail::bad_value(kv, "a positive integer");
        const auto n = static_cast<std::size_t>(*v);
        if (n < 16 || (n & (n - 1)) != 0) detail::bad_value(kv, "a power of two >= 16");
        cfg.n_points = n;
      } else if (k == "t_end") {
        cfg.t_end = detail::parse_real(kv);
        if (cfg.t_end < 0.0) detail::bad_value(kv, "a non-negative number");
      } else if (k == "dt") {
        cfg.dt = detail::parse_positive(kv);
      } else if (k == "output_every") {
        cfg.output_every = detail::parse_positive(kv);
      } else if (k == "mode") {
        if (kv.value == "coupled") cfg.mode = Mode::coupled;
        else if (kv.value == "ch_reduction") cfg.mode = Mode::ch_reduction;
        else if (kv.value == "complex_conjugate") cfg.mode = Mode::complex_conjugate;
        else detail::bad_value(kv, "one of coupled|ch_reduction|complex_conjugate");
      } else if (k == "m0" || k == "n0" || k == "u0" || k == "v0" || k == "m0_imag" || k == "u0_imag") {
        try {
          parse_shape(kv.value);
        } catch (const ConfigError& e) {
          detail::bad_value(kv, std::string("a shape expression (") + e.what() + ")");
        }
        std::string* slot = k == "m0"      ? &cfg.m0
                            : k == "n0"    ? &cfg.n0
                            : k == "u0"    ? &cfg.u0
                            : k == "v0"    ? &cfg.v0
                            : k == "m0_imag" ? &cfg.m0_imag
                                             : &cfg.u0_imag;
        *slot = kv.value;
      } else if (k == "m_amps") {
        cfg.m_amps = detail::parse_list(kv);
      } else if (k == "n_amps") {
        cfg.n_amps = detail::parse_list(kv);
      } else if (k == "q") {
        cfg.q = detail::parse_list(kv);
      } else if (k == "r") {
        cfg.r = detail::parse_list(kv);
      } else if (k == "epsilon_support") {
        cfg.epsilon_support = detail::parse_positive(kv);
      } else if (k == "tail_tolerance") {
        cfg.tail_tolerance = detail::parse_positive(kv);
      } else if (k == "blowup_threshold") {
        cfg.blowup_threshold = detail::parse_real(kv);
      } else if (k == "output") {
        if (kv.value.empty()) detail::bad_value(kv, "a path");
        cfg.output = kv.value;
      } else if (k == "snapshots") {
        cfg.snapshots = kv.value;
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + k + "'");
      }
    }
  }

  if (!seen.count("kind")) throw ConfigError("missing required key 'kind'");
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("kind=" + std::string(to_string(cfg.kind)) + ": missing required key " + what);
  };
  if (cfg.kind == Kind::complex) {
    if (seen.count("mode") && cfg.mode != Mode::complex_conjugate) {
      throw ConfigError("line " + std::to_string(seen["mode"]) + ": key 'mode' must be complex_conjugate for kind=complex");
    }
    cfg.mode = Mode::complex_conjugate;
  }
  if (cfg.kind == Kind::peakon) {
    need(seen.count("m_amps") && seen.count("q"), "'m_amps' and 'q'");
    need(seen.count("n_amps") && seen.count("r"), "'n_amps' and 'r'");
    if (cfg.m_amps.size() != cfg.q.size()) throw ConfigError("key 'q': length differs from 'm_amps'");
    if (cfg.n_amps.size() != cfg.r.size()) throw ConfigError("key 'r': length differs from 'n_amps'");
  } else {
    const bool momentum = !cfg.m0.empty() || !cfg.n0.empty() || !cfg.m0_imag.empty();
    const bool velocity = !cfg.u0.empty() || !cfg.v0.empty() || !cfg.u0_imag.empty();
    if (momentum && velocity) throw ConfigError("initial condition mixes momentum (m0/n0) and velocity (u0/v0) keys");
    need(momentum || velocity, "'m0' or 'u0'");
    const std::string& first = momentum ? cfg.m0 : cfg.u0;
    need(!first.empty(), momentum ? "'m0'" : "'u0'");
    if (cfg.mode == Mode::coupled) {
      need(!(momentum ? cfg.n0 : cfg.v0).empty(), momentum ? "'n0'" : "'v0'");
    } else if (!(momentum ? cfg.n0 : cfg.v0).empty()) {
      throw ConfigError(std::string("key '") + (momentum ? "n0" : "v0") + "' is implied by mode=" +
                        std::string(to_string(cfg.mode)));
    }
    if (cfg.mode != Mode::complex_conjugate && !(momentum ? cfg.m0_imag : cfg.u0_imag).empty()) {
      throw ConfigError("imaginary parts need mode=complex_conjugate");
    }
    if (cfg.kind == Kind::characteristics && cfg.mode == Mode::complex_conjugate) {
      throw ConfigError("kind=characteristics needs a real mode");
    }
    (void)make_grid(cfg.half_length, cfg.n_points);
  }
  return cfg;
}

/// Writes every field of cfg so that parse_config(serialize(cfg)) == cfg.
inline std::string serialize(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os << "kind=" << to_string(cfg.kind) << '\n';
  os << "half_length=" << detail::format_double(cfg.half_length) << '\n';
  os << "n_points=" << cfg.n_points << '\n';
  os << "t_end=" << detail::format_double(cfg.t_end) << '\n';
  os << "dt=" << detail::format_double(cfg.dt) << '\n';
  os << "output_every=" << detail::format_double(cfg.output_every) << '\n';
  os << "mode=" << to_string(cfg.mode) << '\n';
  const std::pair<const char*, const std::string*> shapes[] = {
      {"m0", &cfg.m0}, {"n0", &cfg.n0}, {"u0", &cfg.u0}, {"v0", &cfg.v0}, {"m0_imag", &cfg.m0_imag},
      {"u0_imag", &cfg.u0_imag}};
  for (const auto& [key, val] : shapes) {
    if (!val->empty()) os << key << '=' << *val << '\n';
  }
  if (cfg.kind == Kind::peakon) {
    os << "m_amps=" << detail::format_list(cfg.m_amps) << '\n';
    os << "q=" << detail::format_list(cfg.q) << '\n';
    os << "n_amps=" << detail::format_list(cfg.n_amps) << '\n';
    os << "r=" << detail::format_list(cfg.r) << '\n';
  }
  os << "epsilon_support=" << detail::format_double(cfg.epsilon_support) << '\n';
  os << "tail_tolerance=" << detail::format_double(cfg.tail_tolerance) << '\n';
  os << "blowup_threshold=" << detail::format_double(cfg.blowup_threshold) << '\n';
  os << "output=" << cfg.output << '\n';
  if (!cfg.snapshots.empty()) os << "snapshots=" << cfg.snapshots << '\n';
  return os.str();
}

/// Replaces (or appends) `key=value` in a config document.
inline std::string with_override(std::string_view text, const std::string& key, const std::string& value) {
  std::istringstream in{std::string(text)};
  std::ostringstream out;
  std::string raw;
  bool replaced = false;
  const std::regex key_re("(^|\\s)" + key + "\\s*=");
  while (std::getline(in, raw)) {
    const std::string body = raw.substr(0, raw.find('#'));
    if (std::regex_search(body, key_re)) {
      // Rebuild the line from its pairs so other keys sharing it survive.
      std::string rebuilt;
      for (const auto& kv : detail::split_pairs(detail::trim(body), 0)) {
        rebuilt += (rebuilt.empty() ? "" : "\n") + kv.key + "=" + (kv.key == key ? value : kv.value);
      }
      out << rebuilt << '\n';
      replaced = true;
    } else {
      out << raw << '\n';
    }
  }
  if (!replaced) out << key << '=' << value << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Initial conditions
// ---------------------------------------------------------------------------

/// Momenta (m0, n0) for the scenario. With a velocity target the momenta are
/// (1 - d^2) u0 and (1 - d^2) v0, applied spectrally, so a compactly
/// supported u0 gives a momentum supported on the same interval. The mode's
/// constraint is applied (n0 = m0 or n0 = conj(m0)).
inline std::pair<ComplexField, ComplexField> build_initial_condition(const ScenarioConfig& cfg, const Grid& g) {
  const bool velocity = !cfg.u0.empty();
  auto field = [&](const std::string& text) {
    return text.empty() ? RealField(g) : evaluate_shape(parse_shape(text), g);
  };
  const RealField first = field(velocity ? cfg.u0 : cfg.m0);
  const RealField first_im = field(velocity ? cfg.u0_imag : cfg.m0_imag);
  ComplexField a = to_complex(first, first_im);
  ComplexField b(g);
  switch (cfg.mode) {
    case Mode::coupled: b = to_complex(field(velocity ? cfg.v0 : cfg.n0)); break;
    case Mode::ch_reduction: b = a; break;
    case Mode::complex_conjugate: b = conj(a); break;
  }
  if (velocity) {
    a = helmholtz_forward(a);
    b = helmholtz_forward(b);
  }
  PdeState s = make_state(0.0, a, b, cfg.mode);
  return {s.m, s.n};
}

// ---------------------------------------------------------------------------
// Running scenarios
// ---------------------------------------------------------------------------

enum ExitCode : int { kOk = 0, kConfigError = 1, kBlowUp = 2, kDiagnosticsInvalid = 3 };

struct RunSummary {
  int exit_code = kOk;
  std::string message;
  std::size_t snapshots = 0;

  // Field runs.
  double H_drift = kNaN;  ///< max relative |H(t) - H(0)| / |H(0)|
  double P_drift = kNaN;
  bool E_plus_increasing = false;
  bool E_minus_decreasing = false;
  double min_momentum_ratio = kNaN;  ///< min over nodes/snapshots of Re(m, n) / max|m0, n0|
  double tail_slope_left = kNaN;
  double tail_slope_right = kNaN;
  double max_pullback_residual = kNaN;
  bool moments_valid = true;

  // Peakon runs.
  double total_momentum_drift = kNaN;
  double hamiltonian_drift = kNaN;
  std::optional<WaltzMeasurement> waltz;
};

inline std::vector<double> output_schedule(double t0, double t_end, double every) {
  std::vector<double> out{t0};
  for (long k = 1;; ++k) {
    const double t = t0 + static_cast<double>(k) * every;
    if (t >= t_end - 1e-12 * std::max(1.0, std::abs(t_end))) break;
    out.push_back(t);
  }
  if (t_end > t0) out.push_back(t_end);
  return out;
}

namespace detail {

inline void write_snapshot(std::ostream& os, const PdeState& s) {
  const auto vel = recover_velocity(s);
  os << "# t=" << format_double(s.t) << '\n' << "x,u,v,m,n\n";
  for (std::size_t j = 0; j < s.m.size(); ++j) {
    os << format_double(s.grid().node(j)) << ',' << format_double(vel.u[j].real()) << ','
       << format_double(vel.v[j].real()) << ',' << format_double(s.m[j].real()) << ','
       << format_double(s.n[j].real()) << '\n';
  }
  os << '\n';
}

inline bool strictly_monotone(const std::vector<DiagnosticsRecord>& recs, bool increasing) {
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const double a = increasing ? recs[i - 1].E_plus : recs[i - 1].E_minus;
    const double b = increasing ? recs[i].E_plus : recs[i].E_minus;
    if (!(increasing ? b > a : b < a)) return false;
  }
  return recs.size() >= 2;
}

inline RunSummary run_fields(const ScenarioConfig& cfg, std::ostream& log) {
  RunSummary sum;
  const Grid g = make_grid(cfg.half_length, cfg.n_points);
  const auto [m0, n0] = build_initial_condition(cfg, g);
  const PdeState initial = make_state(0.0, m0, n0, cfg.mode);
  const DiagnosticsSettings settings = make_settings(initial, cfg.epsilon_support, cfg.tail_tolerance);
  const bool track = cfg.kind == Kind::characteristics;

  std::vector<DiagnosticsRecord> records;
  std::optional<std::ofstream> snap;
  if (!cfg.snapshots.empty()) {
    snap.emplace(cfg.snapshots);
    if (!*snap) throw ConfigError("cannot open snapshots file '" + cfg.snapshots + "'");
  }
  CharacteristicTracker tracker(make_characteristics(g, 0.0));
  const RealField m_init = real_part(initial.m);
  const RealField n_init = real_part(initial.n);
  const double scale0 = std::max({initial.m.max_abs(), initial.n.max_abs(), DBL_MIN});
  sum.min_momentum_ratio = std::numeric_limits<double>::infinity();

  EvolveOptions opt;
  opt.blowup_threshold = cfg.blowup_threshold;
  if (track) opt.on_stages = tracker.hook();
  opt.on_snapshot = [&](const PdeState& s) {
    DiagnosticsRecord rec = compute_record(s, settings);
    if (track) {
      rec.pullback_residual = std::max(pullback_residual(s, tracker.current(), m_init, Carried::m),
                                       pullback_residual(s, tracker.current(), n_init, Carried::n));
    }
    for (std::size_t j = 0; j < s.m.size(); ++j) {
      sum.min_momentum_ratio = std::min({sum.min_momentum_ratio, s.m[j].real() / scale0, s.n[j].real() / scale0});
    }
    records.push_back(rec);
    if (snap) write_snapshot(*snap, s);
  };

  auto finish = [&]() {
    std::ofstream out(cfg.output);
    if (!out) throw ConfigError("cannot open output file '" + cfg.output + "'");
    write_csv_header(out, track);
    for (const auto& r : records) write_csv_row(out, r, track);
    sum.snapshots = records.size();
    if (records.empty()) return;
    sum.H_drift = 0.0;
    sum.P_drift = 0.0;
    sum.max_pullback_residual = track ? 0.0 : kNaN;
    const double H0 = records.front().H;
    const double P0 = records.front().P;
    for (const auto& r : records) {
      sum.H_drift = std::max(sum.H_drift, std::abs(r.H - H0) / std::max(std::abs(H0), DBL_MIN));
      sum.P_drift = std::max(sum.P_drift, std::abs(r.P - P0) / std::max(std::abs(P0), DBL_MIN));
      sum.moments_valid = sum.moments_valid && r.moments_valid;
      if (r.pullback_residual) sum.max_pullback_residual = std::max(sum.max_pullback_residual, *r.pullback_residual);
    }
    sum.E_plus_increasing = strictly_monotone(records, true);
    sum.E_minus_decreasing = strictly_monotone(records, false);
    sum.tail_slope_left = records.back().tail_slope_left;
    sum.tail_slope_right = records.back().tail_slope_right;
  };

  try {
    evolve(initial, cfg.t_end, cfg.dt, output_schedule(0.0, cfg.t_end, cfg.output_every), opt);
  } catch (const BlowUp& e) {
    finish();
    sum.exit_code = kBlowUp;
    sum.message = e.what();
    log << "error: " << e.what() << " (partial output written to " << cfg.output << ")\n";
    return sum;
  }
  finish();
  if (!sum.moments_valid) {
    sum.exit_code = kDiagnosticsInvalid;
    sum.message = "exponential moments invalid: solution reaches the window edge; enlarge half_length";
  }
  return sum;
}

inline RunSummary run_peakons(const ScenarioConfig& cfg, std::ostream& log) {
  RunSummary sum;
  const PeakonState ps{0.0, cfg.q, cfg.m_amps, cfg.r, cfg.n_amps};
  PeakonOptions opt;
  opt.blowup_threshold = cfg.blowup_threshold;
  opt.record_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.output_every / cfg.dt)));
  std::vector<PeakonState> traj;
  auto write = [&]() {
    std::ofstream out(cfg.output);
    if (!out) throw ConfigError("cannot open output file '" + cfg.output + "'");
    out << "t";
    for (std::size_t a = 0; a < ps.m_count(); ++a) out << ",q" << a + 1 << ",m" << a + 1;
    for (std::size_t b = 0; b < ps.n_count(); ++b) out << ",r" << b + 1 << ",n" << b + 1;
    for (std::size_t a = 0; a < ps.m_count(); ++a) out << ",q" << a + 1 << "_comoving";
    for (std::size_t b = 0; b < ps.n_count(); ++b) out << ",r" << b + 1 << "_comoving";
    out << ",h,total_momentum\n";
    for (const auto& s : traj) {
      double centre = 0.0;
      for (double x : s.q) centre += x;
      for (double x : s.r) centre += x;
      centre /= static_cast<double>(std::max<std::size_t>(1, s.m_count() + s.n_count()));
      out << format_double(s.t);
      for (std::size_t a = 0; a < s.m_count(); ++a) out << ',' << format_double(s.q[a]) << ',' << format_double(s.m_amp[a]);
      for (std::size_t b = 0; b < s.n_count(); ++b) out << ',' << format_double(s.r[b]) << ',' << format_double(s.n_amp[b]);
      for (double x : s.q) out << ',' << format_double(x - centre);
      for (double x : s.r) out << ',' << format_double(x - centre);
      out << ',' << format_double(peakon_hamiltonian(s)) << ',' << format_double(peakon_total_momentum(s)) << '\n';
    }
    sum.snapshots = traj.size();
    const double h0 = peakon_hamiltonian(ps);
    const double p0 = peakon_total_momentum(ps);
    sum.total_momentum_drift = 0.0;
    sum.hamiltonian_drift = 0.0;
    for (const auto& s : traj) {
      sum.total_momentum_drift = std::max(sum.total_momentum_drift, std::abs(peakon_total_momentum(s) - p0));
      sum.hamiltonian_drift =
          std::max(sum.hamiltonian_drift, std::abs(peakon_hamiltonian(s) - h0) / std::max(std::abs(h0), DBL_MIN));
    }
  };
  try {
    traj = evolve_peakons(ps, cfg.t_end, cfg.dt, opt);
  } catch (const PeakonBlowUp& e) {
    traj = {ps, e.last_valid()};
    write();
    sum.exit_code = kBlowUp;
    sum.message = e.what();
    log << "error: " << e.what() << '\n';
    return sum;
  }
  write();
  if (ps.m_count() == 1 && ps.n_count() == 1) {
    // Period measurement on a finer record than the CSV output.
    PeakonOptions fine;
    fine.blowup_threshold = cfg.blowup_threshold;
    const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt));
    fine.record_every = std::max<std::size_t>(1, steps / 200000);
    try {
      sum.waltz = measure_waltz(evolve_peakons(ps, cfg.t_end, cfg.dt, fine));
    } catch (const MeasurementError&) {
    }
  }
  return sum;
}

inline std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace detail

/// Executes the pipeline selected by cfg.kind, writes cfg.output (and
/// cfg.snapshots when set) and returns the summary with an exit code:
/// 0 ok, 1 config error, 2 blow-up, 3 diagnostics invalid (domain too small).
inline RunSummary run_scenario(const ScenarioConfig& cfg, std::ostream& log) {
  try {
    return cfg.kind == Kind::peakon ? detail::run_peakons(cfg, log) : detail::run_fields(cfg, log);
  } catch (const ConfigError& e) {
    RunSummary s;
    s.exit_code = kConfigError;
    s.message = e.what();
    log << "config error: " << e.what() << '\n';
    return s;
  } catch (const DomainError& e) {
    RunSummary s;
    s.exit_code = kDiagnosticsInvalid;
    s.message = e.what();
    log << "domain error: " << e.what() << '\n';
    return s;
  }
}

inline void print_summary(std::ostream& os, const ScenarioConfig& cfg, const RunSummary& s) {
  using detail::fmt;
  auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };
  os << "scenario: kind=" << to_string(cfg.kind) << " mode=" << to_string(cfg.mode) << " t_end=" << fmt(cfg.t_end)
     << " dt=" << fmt(cfg.dt) << '\n';
  os << "  snapshots written            " << s.snapshots << " -> " << cfg.output << '\n';
  if (cfg.kind == Kind::peakon) {
    os << "  total momentum drift         " << fmt(s.total_momentum_drift, "%.3e") << '\n';
    os << "  hamiltonian relative drift   " << fmt(s.hamiltonian_drift, "%.3e") << '\n';
    if (s.waltz) {
      os << "  waltz period                 " << fmt(s.waltz->period, "%.6f") << '\n';
      os << "  half-period swap error       " << fmt(s.waltz->swap_error, "%.3e") << '\n';
    } else if (cfg.m_amps.size() == 1 && cfg.n_amps.size() == 1) {
      os << "  waltz period                 not measurable (run shorter than one period)\n";
    }
  } else {
    os << "  H relative drift             " << fmt(s.H_drift, "%.3e") << '\n';
    os << "  P relative drift             " << fmt(s.P_drift, "%.3e") << '\n';
    os << "  E_+ strictly increasing:     " << verdict(s.E_plus_increasing) << '\n';
    os << "  E_- strictly decreasing:     " << verdict(s.E_minus_decreasing) << '\n';
    os << "  min momentum / max|m0,n0|    " << fmt(s.min_momentum_ratio, "%.3e") << '\n';
    os << "  tail slope (left, right)     " << fmt(s.tail_slope_left, "%.6f") << ", " << fmt(s.tail_slope_right, "%.6f")
       << '\n';
    if (cfg.kind == Kind::characteristics) {
      os << "  max pullback residual        " << fmt(s.max_pullback_residual, "%.3e") << '\n';
    }
    os << "  exponential moments valid    " << (s.moments_valid ? "yes" : "no") << '\n';
  }
  if (!s.message.empty()) os << "  status: " << s.message << '\n';
}

}  // namespace ccch
