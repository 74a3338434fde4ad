#include "wdistill/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "wdistill/errors.hpp"

namespace wdistill {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt17(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// Reads obj[key] as T when present, recording a violation on a type mismatch.
template <class T>
T field(const json& obj, const char* key, T fallback, const std::string& where, std::vector<std::string>& bad) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad.push_back(where + key + " has the wrong type");
    return fallback;
  }
}

// Numbers, or the strings "inf"/"infinity" where JSON has no literal.
double number(const json& obj, const char* key, double fallback, const std::string& where,
              std::vector<std::string>& bad) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
  const auto& v = obj.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && (v == "inf" || v == "infinity")) return std::numeric_limits<double>::infinity();
  bad.push_back(where + key + " must be a number");
  return fallback;
}

WindowSpec parse_window(const json& w, const std::string& where, std::vector<std::string>& bad) {
  WindowSpec s;
  if (!w.is_object()) {
    bad.push_back(where + "window must be an object");
    return s;
  }
  try {
    s.family = parse_family(field<std::string>(w, "family", "", where, bad));
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) bad.push_back(where + v);
  }
  s.amplitude = number(w, "amplitude", 1.0, where, bad);
  s.duration = number(w, "duration", 1.0, where, bad);
  s.sigma = number(w, "sigma", 0.0, where, bad);
  s.base_frequency = number(w, "base_frequency", 0.0, where, bad);
  s.stretch = number(w, "stretch", 1.0, where, bad);
  s.order = field<int>(w, "order", 1, where, bad);
  return s;
}

std::vector<double> parse_grid(const json& g, std::vector<std::string>& bad) {
  std::vector<double> values;
  if (g.contains("values")) {
    if (!g.at("values").is_array()) {
      bad.push_back("sweep.values must be an array");
    } else {
      for (const auto& v : g.at("values")) {
        if (!v.is_number()) {
          bad.push_back("sweep.values must hold numbers");
          break;
        }
        values.push_back(v.get<double>());
      }
    }
  } else if (g.contains("geometric") || g.contains("linear")) {
    const bool geo = g.contains("geometric");
    const json& r = geo ? g.at("geometric") : g.at("linear");
    const double a = number(r, "start", 0.0, "sweep range ", bad);
    const double b = number(r, "stop", 0.0, "sweep range ", bad);
    const int n = field<int>(r, "count", 0, "sweep range ", bad);
    if (n < 1) {
      bad.push_back("sweep range count must be >= 1");
    } else if (geo && !(a > 0.0 && b > 0.0)) {
      bad.push_back("geometric sweep range needs positive start and stop");
    } else {
      for (int k = 0; k < n; ++k) {
        const double f = n == 1 ? 0.0 : static_cast<double>(k) / (n - 1);
        values.push_back(geo ? a * std::pow(b / a, f) : a + (b - a) * f);
      }
    }
  }
  if (values.empty()) bad.push_back("sweep grid is empty");
  for (double v : values) {
    if (!std::isfinite(v)) {
      bad.push_back("sweep grid values must be finite");
      break;
    }
  }
  return values;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + p.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

double min_separation(const std::vector<DetectorSpec>& d) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) m = std::min(m, separation(d[i], d[j]));
  }
  return m;
}

template <class F>
auto in_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

json matrix_record(const ReducedDensityMatrix& m, const std::string& stage, const std::string& hash) {
  json j = json::parse(m.to_json());
  j["stage"] = stage;
  j["config_hash"] = hash;
  j["tool_version"] = kToolVersion;
  return j;
}

json settings_json(const MeasurementSettings& m) {
  json a = json::array();
  for (const auto& p : m.angles) a.push_back({p[0], p[1], p[2], p[3]});
  return a;
}

Eigen::MatrixXcd rotate_to_W(const Eigen::MatrixXcd& rho, std::size_t parties, std::size_t hub) {
  std::vector<Eigen::Matrix2cd> ops(parties, Eigen::Matrix2cd::Identity());
  Eigen::Matrix2cd x, z;
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  ops[hub] = x * z;
  const Eigen::MatrixXcd u = local_unitary(ops);
  return u * rho * u.adjoint();
}

}  // namespace

StageError::StageError(std::string stage, const Error& inner)
    : Error(stage + ": " + inner.what()), stage_(std::move(stage)), kind_(inner.kind()) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&inner)) violations_ = v->violations();
}

std::size_t RunConfig::size() const { return labels().size(); }

std::vector<std::string> RunConfig::labels() const {
  std::vector<std::string> out;
  if (synthetic) {
    for (std::size_t i = 0; i < synthetic->detectors; ++i) out.push_back(std::string(1, static_cast<char>('A' + i)));
  } else if (amplitude_table) {
    std::ifstream in(*amplitude_table, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out = AmplitudeTable::from_text(ss.str()).labels();
  } else {
    for (const auto& d : detectors) out.push_back(d.label);
  }
  return out;
}

std::size_t RunConfig::hub_index() const {
  const auto l = labels();
  const auto it = std::find(l.begin(), l.end(), hub);
  if (it == l.end()) throw ValidationError("hub '" + hub + "' is not among the detectors");
  return static_cast<std::size_t>(it - l.begin());
}

std::string RunConfig::hash() const {
  char buf[17];
  json hashed = raw;
  if (hashed.is_object()) hashed.erase("output");
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(hashed.dump())));
  return buf;
}

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  std::vector<std::string> bad;
  RunConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  if (!j.is_object()) throw ValidationError("configuration must be a JSON object");

  static const std::set<std::string> known{"field",       "quadrature", "detectors",       "hub",
                                           "filter",      "truncation", "waive_causality", "vacuum_correction",
                                           "balance_hub", "analysis",   "synthetic",       "amplitude_table",
                                           "sweep",       "output",     "description"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) bad.push_back("unknown configuration key '" + k + "'");
  }

  const json none = json::object();
  const json& f = j.contains("field") ? j.at("field") : none;
  c.field.mass = number(f, "mass", 0.0, "field.", bad);
  c.field.regulator = number(f, "regulator", c.field.regulator, "field.", bad);
  try {
    validate(c.field);
  } catch (const ValidationError& e) {
    bad.insert(bad.end(), e.violations().begin(), e.violations().end());
  }

  const json& q = j.contains("quadrature") ? j.at("quadrature") : none;
  c.quadrature.rel_tol = number(q, "rel_tol", c.quadrature.rel_tol, "quadrature.", bad);
  c.quadrature.abs_tol = number(q, "abs_tol", c.quadrature.abs_tol, "quadrature.", bad);
  c.quadrature.tail_tol = number(q, "tail_tol", c.quadrature.tail_tol, "quadrature.", bad);
  c.quadrature.k_max = number(q, "k_max", c.quadrature.k_max, "quadrature.", bad);
  c.quadrature.max_panels = field<int>(q, "max_panels", c.quadrature.max_panels, "quadrature.", bad);
  try {
    validate(c.quadrature);
  } catch (const ValidationError& e) {
    bad.insert(bad.end(), e.violations().begin(), e.violations().end());
  }

  c.waive_causality = field<bool>(j, "waive_causality", false, "", bad);
  c.vacuum_correction = field<bool>(j, "vacuum_correction", true, "", bad);
  c.balance_hub = field<bool>(j, "balance_hub", false, "", bad);
  c.hub = field<std::string>(j, "hub", "", "", bad);
  if (c.hub.empty()) bad.push_back("hub label is required");

  const int sources = int(j.contains("detectors")) + int(j.contains("synthetic")) + int(j.contains("amplitude_table"));
  if (sources != 1) bad.push_back("exactly one of detectors, synthetic or amplitude_table must be given");

  if (j.contains("detectors")) {
    const auto& d = j.at("detectors");
    if (!d.is_array()) {
      bad.push_back("detectors must be an array");
    } else {
      for (std::size_t k = 0; k < d.size(); ++k) {
        const std::string where = "detectors[" + std::to_string(k) + "].";
        DetectorSpec s;
        s.label = field<std::string>(d[k], "label", "", where, bad);
        const auto pos = field<std::vector<double>>(d[k], "position", {}, where, bad);
        if (pos.size() != 3) {
          bad.push_back(where + "position must have three coordinates");
        } else {
          s.position = {pos[0], pos[1], pos[2]};
        }
        s.gap = number(d[k], "gap", 0.0, where, bad);
        s.window = parse_window(d[k].contains("window") ? d[k].at("window") : json(), where, bad);
        c.detectors.push_back(s);
      }
      try {
        validate_detectors(c.detectors);
      } catch (const ValidationError& e) {
        bad.insert(bad.end(), e.violations().begin(), e.violations().end());
      }
      if (c.detectors.size() < 2 || c.detectors.size() > kMaxParties) bad.push_back("between 2 and 8 detectors are supported");
      if (!c.waive_causality) {
        for (std::size_t a = 0; a < c.detectors.size(); ++a) {
          for (std::size_t b = a + 1; b < c.detectors.size(); ++b) {
            const double L = separation(c.detectors[a], c.detectors[b]);
            const double T = std::max(c.detectors[a].window.duration, c.detectors[b].window.duration);
            if (!(L > T)) {
              bad.push_back("detectors " + c.detectors[a].label + " and " + c.detectors[b].label +
                            " are causally connected (L = " + fmt17(L) + ", cT = " + fmt17(T) +
                            "); set waive_causality to run anyway");
            }
          }
        }
      }
    }
  }

  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    SyntheticParams p;
    p.detectors = field<std::size_t>(s, "detectors", p.detectors, "synthetic.", bad);
    p.exchange = number(s, "exchange", p.exchange, "synthetic.", bad);
    p.kappa = number(s, "kappa", p.kappa, "synthetic.", bad);
    p.overlap_fraction = number(s, "overlap_fraction", p.overlap_fraction, "synthetic.", bad);
    if (p.detectors < 2 || p.detectors > kMaxParties) bad.push_back("synthetic.detectors must be in [2, 8]");
    c.synthetic = p;
  }

  if (j.contains("amplitude_table")) {
    fs::path p = field<std::string>(j, "amplitude_table", "", "", bad);
    if (p.is_relative()) p = base_dir / p;
    if (!fs::exists(p)) {
      bad.push_back("amplitude_table " + p.string() + " does not exist");
    } else {
      c.amplitude_table = p;
      try {
        c.labels();
      } catch (const ValidationError& e) {
        bad.insert(bad.end(), e.violations().begin(), e.violations().end());
      }
    }
  }

  if (sources == 1 && !c.hub.empty() && bad.empty()) {
    try {
      const std::size_t h = c.hub_index();
      if (c.synthetic) c.synthetic->hub = h;
    } catch (const ValidationError& e) {
      bad.insert(bad.end(), e.violations().begin(), e.violations().end());
    }
  }

  if (j.contains("filter")) {
    const auto& fl = j.at("filter");
    const auto mode = field<std::string>(fl, "mode", "auto", "filter.", bad);
    if (mode == "auto" || mode == "automatic") {
      c.filter.mode = FilterMode::automatic;
    } else if (mode == "explicit") {
      c.filter.mode = FilterMode::explicit_eta;
      if (fl.contains("eta") && fl.at("eta").is_number()) {
        c.filter.eta = {fl.at("eta").get<double>()};
      } else {
        c.filter.eta = field<std::vector<double>>(fl, "eta", {}, "filter.", bad);
      }
      if (c.filter.eta.empty()) bad.push_back("explicit filter needs eta");
    } else {
      bad.push_back("filter.mode must be auto or explicit");
    }
    c.filter.equal_tolerance = number(fl, "equal_tolerance", c.filter.equal_tolerance, "filter.", bad);
  }

  if (j.contains("truncation") && !j.at("truncation").is_null()) {
    const int t = field<int>(j, "truncation", 0, "", bad);
    if (t < 0) bad.push_back("truncation must be >= 0");
    c.truncation = t;
  }

  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    c.analysis.fidelity = field<bool>(a, "fidelity", true, "analysis.", bad);
    c.analysis.negativity = field<bool>(a, "negativity", true, "analysis.", bad);
    c.analysis.gme = field<bool>(a, "gme", true, "analysis.", bad);
    if (a.contains("svetlichny")) {
      const auto& s = a.at("svetlichny");
      c.analysis.svetlichny = field<bool>(s, "enabled", true, "analysis.svetlichny.", bad);
      auto& ctl = c.analysis.svetlichny_controls;
      ctl.seed = field<std::uint64_t>(s, "seed", ctl.seed, "analysis.svetlichny.", bad);
      ctl.restarts = field<int>(s, "restarts", ctl.restarts, "analysis.svetlichny.", bad);
      ctl.iterations = field<int>(s, "iterations", ctl.iterations, "analysis.svetlichny.", bad);
      if (ctl.restarts < 1 || ctl.iterations < 1) bad.push_back("svetlichny restarts and iterations must be >= 1");
    }
  }

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    SweepGrid g;
    g.parameter = field<std::string>(s, "parameter", "", "sweep.", bad);
    if (g.parameter.empty()) bad.push_back("sweep.parameter is required");
    g.values = parse_grid(s, bad);
    if (g.parameter == "separation" && !j.contains("detectors")) bad.push_back("separation sweeps need physical detectors");
    c.sweep = g;
  }

  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (!o.is_object()) {
      bad.push_back("output must be an object");
    } else {
      for (const auto& [k, v] : o.items()) {
        if (k != "directory" && k != "formats") bad.push_back("unknown configuration key 'output." + k + "'");
      }
      if (o.contains("directory")) {
        fs::path d = field<std::string>(o, "directory", "", "output.", bad);
        if (d.empty()) {
          bad.push_back("output.directory must not be empty");
        } else {
          c.output_dir = d.is_relative() ? base_dir / d : d;
        }
      }
      if (o.contains("formats")) {
        const auto f = field<std::vector<std::string>>(o, "formats", {}, "output.", bad);
        c.formats.clear();
        for (const auto& x : f) {
          if (!kAllFormats.count(x)) bad.push_back("output.formats entry '" + x + "' is not one of txt, json, csv");
          c.formats.insert(x);
        }
        if (f.empty()) bad.push_back("output.formats must not be empty");
      }
    }
  }

  if (!bad.empty()) throw ValidationError(bad);
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read configuration " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("configuration ") + path.string() + " does not parse: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

RunConfig with_seed(const RunConfig& c, std::uint64_t seed) {
  json j = c.raw;
  const bool had = j.contains("analysis") && j["analysis"].contains("svetlichny");
  j["analysis"]["svetlichny"]["seed"] = seed;
  if (!had) j["analysis"]["svetlichny"]["enabled"] = false;
  return parse_config(j, c.base_dir);
}

Bundle run_pipeline(const RunConfig& c, Stage upto) {
  Bundle b;
  b.config_hash = c.hash();
  const std::size_t hub = c.hub_index();
  b.table = in_stage("amplitudes", [&] {
    if (c.synthetic) return make_synthetic_table(*c.synthetic);
    if (c.amplitude_table) {
      std::ifstream in(*c.amplitude_table, std::ios::binary);
      if (!in) throw IoError("cannot read amplitude table " + c.amplitude_table->string());
      std::stringstream ss;
      ss << in.rdbuf();
      return AmplitudeTable::from_text(ss.str());
    }
    return build_amplitude_table(c.detectors, c.field, c.quadrature, {c.waive_causality});
  });
  if (c.balance_hub) {
    b.table = in_stage("amplitudes", [&] {
      double other = 0.0;
      for (std::size_t i = 0; i < b.table.size(); ++i) {
        if (i != hub) other = std::max(other, b.table.value(i, Sign::minus, i, Sign::plus));
      }
      const double own = b.table.value(hub, Sign::minus, hub, Sign::plus);
      if (!(own > 0.0 && other > 0.0)) throw DomainError("hub balancing needs positive emissions");
      b.hub_scale = std::sqrt(other / own);
      return scale_detector(b.table, hub, b.hub_scale);
    });
  }
  if (upto == Stage::amplitudes) return b;

  b.assembled = in_stage("assemble", [&] {
    auto m = assemble_rho(b.table, {c.vacuum_correction});
    if (c.truncation) {
      for (Eigen::Index r = 0; r < m.order.rows(); ++r) {
        for (Eigen::Index col = 0; col < m.order.cols(); ++col) {
          if (m.order(r, col) != kVanishingOrder && m.order(r, col) > *c.truncation) {
            m.rho(r, col) = 0.0;
            m.order(r, col) = kVanishingOrder;
          }
        }
      }
    }
    return m;
  });
  if (upto == Stage::assemble) return b;

  b.distillation = in_stage("distill", [&] { return distillation_protocol(b.table, hub, c.filter); });
  if (upto == Stage::distill) return b;

  b.analysis = in_stage("analyze", [&] { return analyze(c, b); });
  return b;
}

double assembled_negativity(const ReducedDensityMatrix& m, std::size_t hub) {
  const Eigen::MatrixXcd rho = m.rho / m.rho.trace().real();
  return negativity(rho, Bipartition::of(m.parties, {hub}));
}

json analyze(const RunConfig& c, const Bundle& b) {
  if (!b.distillation || !b.assembled) throw DomainError("analysis needs the assembled and distilled matrices");
  const std::size_t n = b.table.size();
  const std::size_t hub = c.hub_index();
  const auto& d = b.distillation->diagnostics;
  const Eigen::MatrixXcd& rho = b.distillation->distilled.rho;
  json out;
  out["stage"] = "analysis";
  out["config_hash"] = b.config_hash;
  out["tool_version"] = kToolVersion;
  out["labels"] = b.table.labels();
  out["hub"] = c.hub;
  out["hub_scale"] = b.hub_scale;

  const auto& fl = b.table.flags;
  out["regime"] = {{"synthetic", b.table.synthetic},
                   {"causality_waived", b.table.causality_waived || c.waive_causality},
                   {"causally_disconnected", fl.causally_disconnected},
                   {"overlap_negligible", fl.overlap_negligible},
                   {"min_separation_ratio", fl.min_separation_ratio},
                   {"max_overlap", fl.max_overlap},
                   {"min_emission", fl.min_emission},
                   {"max_imag_residual", fl.max_imag_residual}};
  out["distillation"] = {{"eta_squared", d.eta_squared},
                         {"hub_spread", d.hub_spread},
                         {"hub_equal", d.hub_equal},
                         {"dominance",
                          {{"ratio", d.dominance.ratio},
                           {"min_hub", d.dominance.min_hub},
                           {"max_other", d.dominance.max_other},
                           {"limiting", d.dominance.limiting}}},
                         {"outside_asymptotic_regime", d.outside_asymptotic_regime},
                         {"purity", d.purity},
                         {"eigenvalues", d.eigenvalues}};

  const auto target = target_distilled_state(n, hub);
  if (c.analysis.fidelity) {
    out["fidelity"] = fidelity(rho, target);
    out["w_conversion_fidelity"] = fidelity(rotate_to_W(rho, n, hub), w_state(n));
  }
  if (c.analysis.negativity) {
    json dist = json::object(), asm_ = json::object();
    const Eigen::MatrixXcd a = b.assembled->rho / b.assembled->rho.trace().real();
    for (const auto& cut : all_bipartitions(n)) {
      dist[cut.str(b.table.labels())] = negativity(rho, cut);
      asm_[cut.str(b.table.labels())] = negativity(a, cut);
    }
    out["negativity"] = {{"distilled", dist}, {"assembled", asm_}};
  }
  if (c.analysis.gme) {
    json g;
    if (d.purity >= 1.0 - 1e-6) {
      const auto r = genuine_multipartite_check(rho);
      g["status"] = r.genuine ? "genuine" : "not_genuine";
      json ev = json::array(), failing = json::array();
      for (const auto& e : r.evidence) ev.push_back({{"cut", e.cut.str(b.table.labels())}, {"second_weight", e.second_weight}});
      for (const auto& f : r.failing) failing.push_back(f.str(b.table.labels()));
      g["evidence"] = ev;
      g["failing"] = failing;
    } else {
      g["status"] = "not_applicable";
      g["reason"] = "distilled state is mixed (purity " + fmt17(d.purity) +
                    "); certification covers pure states only";
    }
    out["gme"] = g;
  }
  if (c.analysis.svetlichny) {
    json s;
    const auto& ctl = c.analysis.svetlichny_controls;
    s["seed"] = ctl.seed;
    s["restarts"] = ctl.restarts;
    s["iterations"] = ctl.iterations;
    if (n < 3) {
      s["status"] = "not_applicable";
      s["reason"] = "the polynomial needs at least three parties";
    } else {
      const auto opt = optimize_svetlichny(rho, ctl);
      const double bound = std::ldexp(1.0, static_cast<int>(n) - 1);
      s["status"] = "evaluated";
      s["value"] = opt.value;
      s["hybrid_bound"] = bound;
      s["violates"] = opt.value > bound;
      s["settings"] = settings_json(opt.settings);
      s["best_restart"] = opt.best_restart;
      s["converged"] = opt.converged;
    }
    out["svetlichny"] = s;
  }
  return out;
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{
      "index",         "parameter",  "value",       "seed",       "status",
      "min_separation", "hub_exchange_min", "max_other", "dominance_ratio", "limiting",
      "outside_asymptotic_regime", "hub_scale", "fidelity", "negativity", "distilled_negativity",
      "purity",        "svetlichny", "error"};
  return cols;
}

std::uint64_t derive_seed(std::uint64_t master, std::size_t index) {
  // splitmix64 of the pair.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RunConfig sweep_point(const RunConfig& c, std::size_t k) {
  if (!c.sweep) throw ValidationError("configuration has no sweep grid");
  const auto& g = *c.sweep;
  if (k >= g.values.size()) throw ValidationError("sweep point out of range");
  const double v = g.values[k];
  json j = c.raw;
  j.erase("sweep");
  j["analysis"]["svetlichny"]["seed"] = derive_seed(c.analysis.svetlichny_controls.seed, k);
  if (!j["analysis"]["svetlichny"].contains("enabled")) j["analysis"]["svetlichny"]["enabled"] = c.analysis.svetlichny;
  if (g.parameter == "separation") {
    const double s = v / min_separation(c.detectors);
    for (auto& d : j["detectors"]) {
      for (auto& x : d["position"]) x = x.get<double>() * s;
    }
  } else {
    json* node = &j;
    std::stringstream ss(g.parameter);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const bool last = p + 1 == parts.size();
      if (node->is_array()) {
        std::size_t idx = 0;
        const auto r = std::from_chars(parts[p].data(), parts[p].data() + parts[p].size(), idx);
        if (r.ec != std::errc() || idx >= node->size()) {
          throw ValidationError("sweep parameter '" + g.parameter + "' indexes past an array");
        }
        node = &(*node)[idx];
      } else {
        if (!last && !node->contains(parts[p])) {
          throw ValidationError("sweep parameter '" + g.parameter + "' does not name a configuration entry");
        }
        node = &(*node)[parts[p]];
      }
    }
    if (node->is_number_integer()) {
      if (v != std::round(v)) throw ValidationError("sweep parameter '" + g.parameter + "' takes integers");
      *node = static_cast<long long>(v);
    } else {
      *node = v;
    }
  }
  return parse_config(j, c.base_dir);
}

SweepResult run_sweep(const RunConfig& c) {
  if (!c.sweep) throw ValidationError("configuration has no sweep grid");
  SweepResult out;
  out.config_hash = c.hash();
  out.parameter = c.sweep->parameter;
  std::vector<double> seps, negs;
  for (std::size_t k = 0; k < c.sweep->values.size(); ++k) {
    SweepRow row;
    row.index = k;
    row.value = c.sweep->values[k];
    row.seed = derive_seed(c.analysis.svetlichny_controls.seed, k);
    std::vector<std::string> cells(sweep_columns().size());
    cells[0] = std::to_string(k);
    cells[1] = c.sweep->parameter;
    cells[2] = fmt17(row.value);
    cells[3] = std::to_string(row.seed);
    double sep = std::numeric_limits<double>::quiet_NaN(), neg = sep;
    try {
      const RunConfig pc = sweep_point(c, k);
      if (!pc.detectors.empty()) sep = min_separation(pc.detectors);
      const Bundle b = run_pipeline(pc, Stage::analyze);
      const auto& a = *b.analysis;
      const auto& dom = a["distillation"]["dominance"];
      const std::size_t hub = pc.hub_index();
      neg = assembled_negativity(*b.assembled, hub);
      row.ok = true;
      row.record = a;
      cells[4] = "ok";
      cells[5] = pc.detectors.empty() ? "" : fmt17(sep);
      cells[6] = fmt17(dom["min_hub"].get<double>());
      cells[7] = fmt17(dom["max_other"].get<double>());
      cells[8] = fmt17(dom["ratio"].get<double>());
      cells[9] = dom["limiting"].get<std::string>();
      cells[10] = a["distillation"]["outside_asymptotic_regime"].get<bool>() ? "1" : "0";
      cells[11] = fmt17(b.hub_scale);
      cells[12] = a.contains("fidelity") ? fmt17(a["fidelity"].get<double>()) : "";
      cells[13] = fmt17(neg);
      cells[14] = fmt17(negativity(b.distillation->distilled.rho, Bipartition::of(pc.size(), {hub})));
      cells[15] = fmt17(a["distillation"]["purity"].get<double>());
      if (a.contains("svetlichny") && a["svetlichny"].contains("value")) {
        cells[16] = fmt17(a["svetlichny"]["value"].get<double>());
      }
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      cells[4] = "error";
      cells[17] = row.error;
    }
    if (row.ok && std::isfinite(sep)) {
      seps.push_back(sep);
      negs.push_back(neg);
    }
    row.cells = std::move(cells);
    out.rows.push_back(std::move(row));
  }
  if (c.sweep->parameter == "separation" && !seps.empty()) {
    double T = 0.0;
    for (const auto& d : c.detectors) T = std::max(T, d.window.duration);
    out.decay_fit = fit_decay(seps, negs, T);
    (*out.decay_fit)["config_hash"] = out.config_hash;
    (*out.decay_fit)["tool_version"] = kToolVersion;
  }
  return out;
}

json fit_decay(const std::vector<double>& L, const std::vector<double>& neg, double T) {
  if (L.size() != neg.size()) throw ValidationError("decay fit needs one negativity per separation");
  json out;
  out["stage"] = "decay_fit";
  out["model"] = "negativity = prefactor * L^exponent";
  out["reference"] = "exp(-(L/cT)^3)";
  out["duration"] = T;
  bool monotone = true;
  for (std::size_t k = 1; k < neg.size(); ++k) {
    if (L[k] > L[k - 1] && neg[k] > neg[k - 1]) monotone = false;
  }
  out["monotone_nonincreasing"] = monotone;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = 0; k < L.size(); ++k) {
    if (!(neg[k] > 0.0 && L[k] > 0.0)) continue;
    const double x = std::log(L[k]), y = std::log(neg[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  out["points_used"] = m;
  double slope = std::numeric_limits<double>::quiet_NaN(), icpt = slope;
  if (m >= 2 && m * sxx - sx * sx > 0.0) {
    slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    icpt = (sy - slope * sx) / m;
    out["exponent"] = slope;
    out["prefactor"] = std::exp(icpt);
  } else {
    out["exponent"] = nullptr;
    out["prefactor"] = nullptr;
  }
  // Decay relative to the first positive point, against the reference.
  json rows = json::array();
  double n0 = 0.0, r0 = 0.0;
  bool slower = true;
  for (std::size_t k = 0; k < L.size(); ++k) {
    const double ref = std::exp(-std::pow(L[k] / T, 3.0));
    json r = {{"separation", L[k]}, {"negativity", neg[k]}, {"reference", ref}};
    r["fit"] = std::isfinite(slope) ? json(std::exp(icpt) * std::pow(L[k], slope)) : json(nullptr);
    if (neg[k] > 0.0) {
      if (n0 == 0.0) {
        n0 = neg[k];
        r0 = ref;
      } else if (neg[k] / n0 < ref / r0) {
        slower = false;
      }
    }
    rows.push_back(r);
  }
  out["slower_than_reference"] = slower;
  out["rows"] = rows;
  return out;
}

std::string artifact_name(const std::string& stage, const std::string& hash, const std::string& ext) {
  return stage + "-" + hash + "." + ext;
}

std::vector<fs::path> emit_outputs(const Bundle& b, Stage upto, const fs::path& dir, const std::string& command,
                                   const std::set<std::string>& formats) {
  make_dir(dir);
  const std::string& h = b.config_hash;
  std::vector<fs::path> files;
  auto put = [&](const std::string& stage, const std::string& ext, const std::string& body) {
    if (ext != "meta.json" && !formats.count(ext)) return;
    const fs::path p = dir / artifact_name(stage, h, ext);
    write_file(p, body);
    files.push_back(p);
  };
  std::string table = "# tool_version " + std::string(kToolVersion) + "\n# config_hash " + h + "\n";
  if (b.hub_scale != 1.0) table += "# hub_scale " + fmt17(b.hub_scale) + "\n";
  put("amplitudes", "txt", table + b.table.to_text());
  if (upto != Stage::amplitudes && b.assembled) put("assembled", "json", matrix_record(*b.assembled, "assembled", h).dump(1) + "\n");
  if ((upto == Stage::distill || upto == Stage::analyze) && b.distillation) {
    put("filtered", "json", matrix_record(b.distillation->filtered, "filtered", h).dump(1) + "\n");
    put("distilled", "json", matrix_record(b.distillation->distilled, "distilled", h).dump(1) + "\n");
  }
  if (upto == Stage::analyze && b.analysis) put("analysis", "json", b.analysis->dump(1) + "\n");
  json meta = {{"command", command}, {"config_hash", h}, {"tool_version", kToolVersion}, {"created_utc", utc_now()}};
  json names = json::array();
  for (const auto& f : files) names.push_back(f.filename().string());
  meta["files"] = names;
  put(command, "meta.json", meta.dump(1) + "\n");
  return files;
}

std::string to_csv(const SweepResult& s) {
  std::string out;
  const auto& cols = sweep_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
  out += "\n";
  for (const auto& r : s.rows) {
    for (std::size_t k = 0; k < r.cells.size(); ++k) out += (k ? "," : "") + csv_field(r.cells[k]);
    out += "\n";
  }
  return out;
}

std::vector<fs::path> emit_sweep(const SweepResult& s, const fs::path& dir, const std::string& command,
                                 const std::set<std::string>& formats) {
  make_dir(dir);
  std::vector<fs::path> files;
  auto put = [&](const std::string& stage, const std::string& ext, const std::string& body) {
    if (ext != "meta.json" && !formats.count(ext)) return;
    const fs::path p = dir / artifact_name(stage, s.config_hash, ext);
    write_file(p, body);
    files.push_back(p);
  };
  put("sweep", "csv", to_csv(s));
  json records = json::array();
  for (const auto& r : s.rows) {
    json row = {{"index", r.index}, {"value", r.value}, {"seed", r.seed}, {"status", r.ok ? "ok" : "error"}};
    if (r.ok) {
      row["analysis"] = r.record;
    } else {
      row["error"] = r.error;
    }
    records.push_back(row);
  }
  put("sweep", "json",
      json({{"stage", "sweep"}, {"parameter", s.parameter}, {"config_hash", s.config_hash},
            {"tool_version", kToolVersion}, {"columns", sweep_columns()}, {"rows", records}})
              .dump(1) + "\n");
  if (s.decay_fit) put("decay-fit", "json", s.decay_fit->dump(1) + "\n");
  json meta = {{"command", command}, {"config_hash", s.config_hash}, {"tool_version", kToolVersion},
               {"created_utc", utc_now()}};
  json names = json::array();
  for (const auto& f : files) names.push_back(f.filename().string());
  meta["files"] = names;
  put(command, "meta.json", meta.dump(1) + "\n");
  return files;
}

json error_report(const std::exception& e, const std::string& stage) {
  json err = {{"message", e.what()}};
  std::string kind = "internal";
  std::vector<std::string> violations;
  std::string where = stage;
  if (const auto* se = dynamic_cast<const StageError*>(&e)) {
    kind = se->kind();
    where = se->stage();
    violations = se->violations();
  } else if (const auto* ve = dynamic_cast<const ValidationError*>(&e)) {
    kind = ve->kind();
    violations = ve->violations();
  } else if (const auto* we = dynamic_cast<const Error*>(&e)) {
    kind = we->kind();
  }
  err["kind"] = kind;
  if (!where.empty()) err["stage"] = where;
  if (!violations.empty()) err["violations"] = violations;
  if (const auto* ne = dynamic_cast<const NumericalError*>(&e)) err["achieved_error"] = ne->achieved_error();
  return {{"error", err}, {"tool_version", kToolVersion}};
}

}  // namespace wdistill
