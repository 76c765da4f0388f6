#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace gkh::cli {

ConfigError::ConfigError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

const PriorConfig* RunConfig::find_prior(const std::string& name) const {
  for (const auto& p : priors) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const PriorConfig* RunConfig::prior_for(const SolverConfig& s) const {
  if (!s.prior.empty()) {
    if (s.prior == "identity") return nullptr;
    return find_prior(s.prior);
  }
  return find_prior("default");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '.' || c == '-';
  });
}

struct Ctx {
  std::string key;
  int line = 0;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(key + ": " + what, line); }

  double number(const std::string& v) const {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) fail("expected a number, got '" + v + "'");
    if (!std::isfinite(x)) fail("value must be finite");
    return x;
  }
  double positive(const std::string& v) const {
    const double x = number(v);
    if (!(x > 0.0)) fail("must be positive");
    return x;
  }
  double nonnegative(const std::string& v) const {
    const double x = number(v);
    if (!(x >= 0.0)) fail("must be >= 0");
    return x;
  }
  long long integer(const std::string& v) const {
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) fail("expected an integer, got '" + v + "'");
    return x;
  }
  Index count(const std::string& v, long long min = 1) const {
    const long long x = integer(v);
    if (x < min) fail("must be >= " + std::to_string(min));
    return static_cast<Index>(x);
  }
  std::uint64_t seed(const std::string& v) const {
    errno = 0;
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE) {
      fail("expected a nonnegative integer seed, got '" + v + "'");
    }
    return static_cast<std::uint64_t>(x);
  }
  bool boolean(const std::string& v) const {
    std::string s = v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    fail("expected a boolean, got '" + v + "'");
  }
  std::vector<double> numbers(const std::string& v) const {
    std::vector<double> out;
    for (const auto& p : split(v, ',')) out.push_back(number(p));
    return out;
  }
};

using Handler = std::function<void(const Ctx&, const std::string&)>;

const std::set<std::string> kPriorKeys{"family", "nu", "alpha", "ell", "gamma", "amplitude", "padding", "require_psd"};
const std::set<std::string> kSolverKeys{"variant",      "rule",       "lambda",      "omega",
                                        "tau",          "delta",      "eta2",        "max_iter",
                                        "gcv_flat_tol", "gcv_window", "residual_tol", "reorth",
                                        "prior",        "mu"};

void set_prior(PriorConfig& p, const std::string& key, const Ctx& c, const std::string& v) {
  if (key == "family") {
    if (v == "identity") {
      p.identity = true;
      return;
    }
    p.identity = false;
    try {
      p.kernel.family = parse_kernel_family(v);
    } catch (const std::exception& e) {
      c.fail(e.what());
    }
  } else if (key == "nu") {
    if (v == "inf" || v == "infinity") {
      p.kernel.nu = std::numeric_limits<double>::infinity();
    } else {
      p.kernel.nu = c.positive(v);
    }
  } else if (key == "alpha") {
    p.kernel.alpha = c.positive(v);
  } else if (key == "ell") {
    p.kernel.ell = c.positive(v);
  } else if (key == "gamma") {
    p.kernel.gamma = c.positive(v);
  } else if (key == "amplitude") {
    p.kernel.amplitude = c.positive(v);
  } else if (key == "padding") {
    p.padding = c.number(v);
    if (!(p.padding >= 1.0)) c.fail("must be >= 1");
  } else if (key == "require_psd") {
    p.require_psd = c.boolean(v);
  }
}

void set_solver(SolverConfig& s, const std::string& key, const Ctx& c, const std::string& v) {
  try {
    if (key == "variant") {
      s.variant = parse_variant(v);
    } else if (key == "rule") {
      s.rule = v == "lambda0" ? ParamKind::fixed : parse_param_kind(v);
      if (v == "lambda0") s.lambda = 0.0;
    } else if (key == "lambda") {
      s.lambda = c.nonnegative(v);
    } else if (key == "omega") {
      s.omega = c.positive(v);
      if (s.omega > 1.0) c.fail("must be in (0, 1]");
    } else if (key == "tau") {
      s.tau = c.number(v);
      if (!(s.tau >= 1.0)) c.fail("must be >= 1");
    } else if (key == "delta") {
      if (v == "auto") {
        s.delta.reset();
      } else {
        s.delta = c.positive(v);
      }
    } else if (key == "eta2") {
      if (v == "auto") {
        s.eta2.reset();
      } else {
        s.eta2 = c.positive(v);
      }
    } else if (key == "max_iter") {
      s.stop.max_iter = static_cast<int>(c.count(v));
    } else if (key == "gcv_flat_tol") {
      s.stop.gcv_flat_tol = c.nonnegative(v);
    } else if (key == "gcv_window") {
      s.stop.gcv_window = static_cast<int>(c.count(v, 0));
    } else if (key == "residual_tol") {
      if (v == "none") {
        s.stop.residual_tol.reset();
      } else {
        s.stop.residual_tol = c.nonnegative(v);
      }
    } else if (key == "reorth") {
      s.reorth = c.boolean(v);
    } else if (key == "prior") {
      s.prior = v;
    } else if (key == "mu") {
      s.mu = c.number(v);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    c.fail(e.what());
  }
}

void set_problem(ProblemConfig& p, const std::string& key, const Ctx& c, const std::string& v) {
  auto& h = p.heat;
  auto& s = p.seismic;
  auto& r = p.superres;
  if (key == "kind") {
    try {
      p.kind = parse_problem_kind(v);
    } catch (const std::exception& e) {
      c.fail(e.what());
    }
  } else if (key == "seed") {
    p.seed = c.seed(v);
  } else if (key == "noise_level") {
    p.noise_level = c.nonnegative(v);
    p.noise_level_set = true;
  } else if (key == "n") {
    h.n = c.count(v, 8);
  } else if (key == "n_side") {
    s.n_side = c.count(v, 8);
  } else if (key == "n_sou") {
    s.n_sou = c.count(v);
  } else if (key == "n_rec") {
    s.n_rec = c.count(v);
  } else if (key == "domain_length") {
    s.domain_length = c.positive(v);
  } else if (key == "kl_theta") {
    s.kl_theta = c.positive(v);
  } else if (key == "kl_mean") {
    s.kl_mean = c.number(v);
  } else if (key == "kl_length") {
    s.kl_length = c.positive(v);
  } else if (key == "kl_terms") {
    s.kl_terms = c.count(v);
  } else if (key == "hi_side") {
    r.hi_side = c.count(v, 2);
  } else if (key == "frames") {
    r.frames = c.count(v);
  } else if (key == "lo_factor") {
    r.lo_factor = c.count(v);
  } else if (key == "max_angle_deg") {
    r.max_angle_deg = c.nonnegative(v);
  } else if (key == "angles") {
    const auto a = c.numbers(v);
    r.motions.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r.motions[i].angle_deg = a[i];
  } else if (key == "shifts") {
    const auto parts = split(v, ',');
    if (r.motions.size() != parts.size()) c.fail("needs one shift per angle; set problem.angles first");
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto xy = split(parts[i], ':');
      if (xy.size() != 2) c.fail("shifts are written s0:s1");
      r.motions[i].shift0 = c.number(xy[0]);
      r.motions[i].shift1 = c.number(xy[1]);
    }
  } else if (key == "image") {
    p.image = v;
  }
}

const std::set<std::string> kProblemKeys{"kind",      "seed",     "noise_level", "n",        "n_side",
                                         "n_sou",     "n_rec",    "domain_length", "kl_theta", "kl_mean",
                                         "kl_length", "kl_terms", "hi_side",     "frames",   "lo_factor",
                                         "max_angle_deg", "angles", "shifts", "image"};
const std::set<std::string> kEmitKeys{"history_csv", "picard_csv", "images", "diagnostics", "spectra_k"};

bool valid_name(const std::string& name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

template <class T>
T& instance(std::vector<T>& list, const std::string& name) {
  for (auto& x : list) {
    if (x.name == name) return x;
  }
  list.emplace_back();
  list.back().name = name;
  return list.back();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::set<std::string> seen;
  bool any_solver = false;
  std::map<std::string, int> solver_lines;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("syntax error: expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError("syntax error: invalid key '" + key + "'", line_no);
    if (value.empty()) throw ConfigError("syntax error: missing value for '" + key + "'", line_no);
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line_no);

    const Ctx c{key, line_no};
    const auto parts = split(key, '.');
    const std::string& section = parts[0];
    auto unknown = [&]() -> void { throw ConfigError("unknown key '" + key + "'", line_no); };

    if (section == "problem" || section == "output" || section == "emit") {
      if (parts.size() != 2) unknown();
      const std::string& k = parts[1];
      if (section == "problem") {
        if (!kProblemKeys.count(k)) unknown();
        set_problem(cfg.problem, k, c, value);
      } else if (section == "output") {
        if (k != "dir") unknown();
        cfg.output_dir = value;
      } else {
        if (!kEmitKeys.count(k)) unknown();
        if (k == "spectra_k") {
          cfg.emit.spectra_k.clear();
          for (const auto& p : split(value, ',')) cfg.emit.spectra_k.push_back(c.count(p));
        } else {
          const bool b = c.boolean(value);
          if (k == "history_csv") cfg.emit.history_csv = b;
          if (k == "picard_csv") cfg.emit.picard_csv = b;
          if (k == "images") cfg.emit.images = b;
          if (k == "diagnostics") cfg.emit.diagnostics = b;
        }
      }
    } else if (section == "prior" || section == "solver") {
      const auto& keys = section == "prior" ? kPriorKeys : kSolverKeys;
      std::string name = "default";
      std::string k;
      if (parts.size() == 2) {
        k = parts[1];
      } else if (parts.size() == 3) {
        name = parts[1];
        k = parts[2];
        if (!valid_name(name) || keys.count(name)) {
          throw ConfigError("invalid " + section + " name '" + name + "'", line_no);
        }
      } else {
        unknown();
      }
      if (!keys.count(k)) unknown();
      if (section == "prior") {
        set_prior(instance(cfg.priors, name), k, c, value);
      } else {
        any_solver = true;
        solver_lines.emplace(name, line_no);
        set_solver(instance(cfg.solvers, name), k, c, value);
      }
    } else {
      unknown();
    }
  }

  if (!any_solver) throw ConfigError("config defines no solver", 0);
  for (const auto& p : cfg.priors) {
    if (!p.identity) {
      try {
        p.kernel.validate();
      } catch (const std::exception& e) {
        throw ConfigError("prior." + p.name + ": " + e.what(), 0);
      }
    }
  }
  for (const auto& s : cfg.solvers) {
    const int ln = solver_lines[s.name];
    if (!s.prior.empty() && s.prior != "identity" && !cfg.find_prior(s.prior)) {
      throw ConfigError("solver." + s.name + ".prior: unknown prior '" + s.prior + "'", ln);
    }
    try {
      s.stop.validate();
    } catch (const std::exception& e) {
      throw ConfigError("solver." + s.name + ": " + e.what(), ln);
    }
  }
  const auto& sr = cfg.problem.superres;
  if (cfg.problem.kind == ProblemKind::superres && !sr.motions.empty() &&
      static_cast<Index>(sr.motions.size()) != sr.frames) {
    throw ConfigError("problem.angles: expected " + std::to_string(sr.frames) + " values", 0);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config(buf.str());
  const auto parent = std::filesystem::path(path).parent_path();
  cfg.base_dir = parent.empty() ? "." : parent.string();
  return cfg;
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string echo_config(const RunConfig& cfg) {
  std::ostringstream o;
  const auto& p = cfg.problem;
  o << "problem.kind = " << to_string(p.kind) << '\n';
  o << "problem.seed = " << p.seed << '\n';
  switch (p.kind) {
    case ProblemKind::heat:
      o << "problem.n = " << p.heat.n << '\n';
      o << "problem.noise_level = " << num(p.noise_level_set ? p.noise_level : p.heat.noise_level) << '\n';
      break;
    case ProblemKind::seismic: {
      const auto& s = p.seismic;
      o << "problem.n_side = " << s.n_side << "\nproblem.n_sou = " << s.n_sou << "\nproblem.n_rec = " << s.n_rec
        << "\nproblem.domain_length = " << num(s.domain_length) << "\nproblem.kl_theta = " << num(s.kl_theta)
        << "\nproblem.kl_mean = " << num(s.kl_mean) << "\nproblem.kl_length = " << num(s.kl_length)
        << "\nproblem.kl_terms = " << s.kl_terms << '\n';
      o << "problem.noise_level = " << num(p.noise_level_set ? p.noise_level : s.noise_level) << '\n';
      break;
    }
    case ProblemKind::superres: {
      const auto& s = p.superres;
      o << "problem.hi_side = " << s.hi_side << "\nproblem.frames = " << s.frames
        << "\nproblem.lo_factor = " << s.lo_factor << "\nproblem.max_angle_deg = " << num(s.max_angle_deg) << '\n';
      const auto motions = s.motions.empty() ? default_motions(s.frames, s.max_angle_deg) : s.motions;
      o << "problem.angles = ";
      for (std::size_t i = 0; i < motions.size(); ++i) o << (i ? "," : "") << num(motions[i].angle_deg);
      o << "\nproblem.shifts = ";
      for (std::size_t i = 0; i < motions.size(); ++i) {
        o << (i ? "," : "") << num(motions[i].shift0) << ':' << num(motions[i].shift1);
      }
      o << '\n';
      o << "problem.noise_level = " << num(p.noise_level_set ? p.noise_level : s.noise_level) << '\n';
      o << "problem.image = " << (p.image.empty() ? "phantom" : p.image) << '\n';
      break;
    }
  }
  for (const auto& pr : cfg.priors) {
    const std::string k = "prior." + pr.name + ".";
    if (pr.identity) {
      o << k << "family = identity\n";
      continue;
    }
    o << k << "family = " << to_string(pr.kernel.family) << '\n';
    o << k << "nu = " << num(pr.kernel.nu) << '\n' << k << "alpha = " << num(pr.kernel.alpha) << '\n';
    o << k << "ell = " << num(pr.kernel.ell) << '\n' << k << "gamma = " << num(pr.kernel.gamma) << '\n';
    o << k << "amplitude = " << num(pr.kernel.amplitude) << '\n';
    o << k << "padding = " << num(pr.padding) << '\n' << k << "require_psd = " << (pr.require_psd ? "true" : "false") << '\n';
  }
  for (const auto& s : cfg.solvers) {
    const std::string k = "solver." + s.name + ".";
    o << k << "variant = " << to_string(s.variant) << '\n' << k << "rule = " << to_string(s.rule) << '\n';
    o << k << "lambda = " << num(s.lambda) << '\n' << k << "omega = " << num(s.omega) << '\n';
    o << k << "tau = " << num(s.tau) << '\n';
    o << k << "delta = " << (s.delta ? num(*s.delta) : "auto") << '\n';
    o << k << "eta2 = " << (s.eta2 ? num(*s.eta2) : "auto") << '\n';
    o << k << "max_iter = " << s.stop.max_iter << '\n' << k << "gcv_window = " << s.stop.gcv_window << '\n';
    o << k << "gcv_flat_tol = " << num(s.stop.gcv_flat_tol) << '\n';
    o << k << "residual_tol = " << (s.stop.residual_tol ? num(*s.stop.residual_tol) : "none") << '\n';
    o << k << "reorth = " << (s.reorth ? "true" : "false") << '\n';
    const PriorConfig* pr = cfg.prior_for(s);
    o << k << "prior = " << (pr ? pr->name : "identity") << '\n' << k << "mu = " << num(s.mu) << '\n';
  }
  o << "output.dir = " << cfg.output_dir << '\n';
  o << "emit.history_csv = " << (cfg.emit.history_csv ? "true" : "false") << '\n';
  o << "emit.picard_csv = " << (cfg.emit.picard_csv ? "true" : "false") << '\n';
  o << "emit.images = " << (cfg.emit.images ? "true" : "false") << '\n';
  o << "emit.diagnostics = " << (cfg.emit.diagnostics ? "true" : "false") << '\n';
  o << "emit.spectra_k = ";
  for (std::size_t i = 0; i < cfg.emit.spectra_k.size(); ++i) o << (i ? "," : "") << cfg.emit.spectra_k[i];
  o << '\n';
  return o.str();
}

}  // namespace gkh::cli
