#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qal/cli.hpp"

namespace qal::cli {

namespace {

KeySpec key(std::string name, ValueType type, std::string fallback, std::string help) {
  KeySpec k;
  k.name = std::move(name);
  k.type = type;
  k.fallback = std::move(fallback);
  k.help = std::move(help);
  return k;
}

KeySpec required(std::string name, ValueType type, std::string help) {
  KeySpec k = key(std::move(name), type, "", std::move(help));
  k.required = true;
  return k;
}

KeySpec choice(std::string name, std::vector<std::string> choices, std::string help) {
  KeySpec k = key(std::move(name), ValueType::kEnum, choices.front(), std::move(help));
  k.choices = std::move(choices);
  return k;
}

void append(std::vector<KeySpec>& dst, const std::vector<KeySpec>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

std::vector<KeySpec> shared_keys() {
  KeySpec out = key("out", ValueType::kString, "-", "output CSV path, - for stdout");
  out.echo = false;
  KeySpec workers = key("workers", ValueType::kInt, "1", "worker threads");
  workers.echo = false;
  return {key("seed", ValueType::kUint, "1", "64-bit seed (env QAL_SEED when unset)"), out,
          workers};
}

std::vector<KeySpec> channel_keys(bool p_required) {
  std::vector<KeySpec> k;
  if (p_required)
    k.push_back(required("p", ValueType::kRealList, "bare probabilities P_j"));
  else
    k.push_back(key("p", ValueType::kRealList, "", "bare probabilities P_j (default uniform)"));
  append(k, {
                key("labels", ValueType::kRealList, "", "outcome values y_j (default 1..M)"),
                key("gamma", ValueType::kRealList, "", "loss rates gamma_j (default 0)"),
                key("misread", ValueType::kRealList, "",
                    "misread matrix Gamma(j,l), row-major M*M (default 0)"),
                choice("channel", {"explicit", "symmetric"},
                       "symmetric: misreads chosen to match the symmetric coupling"),
            });
  return k;
}

std::vector<KeySpec> game_keys() {
  std::vector<KeySpec> k = channel_keys(true);
  append(k, {
                choice("drift", {"identity", "constant", "linear", "quadratic"},
                       "drift map F"),
                key("drift_a", ValueType::kReal, "1", "F: constant c, slope a or a in a x + b x^2"),
                key("drift_b", ValueType::kReal, "0", "F: b in a x + b x^2"),
                choice("gain", {"constant", "identity", "linear", "quadratic"}, "gain map g"),
                key("gain_a", ValueType::kReal, "1", "g: constant c, slope a or a in a x + b x^2"),
                key("gain_b", ValueType::kReal, "0", "g: b in a x + b x^2"),
                key("x0", ValueType::kReal, "0", "initial state"),
                key("rounds", ValueType::kInt, "10", "game rounds N"),
            });
  return k;
}

std::vector<KeySpec> particle_keys() {
  return {
      key("mass", ValueType::kReal, "1", "particle mass m"),
      key("alpha", ValueType::kReal, "1", "action scale alpha"),
      key("eps", ValueType::kReal, "0.001", "time step"),
      key("e0", ValueType::kReal, "0", "energy reference E0"),
      choice("potential", {"free", "harmonic"}, "potential V"),
      key("omega", ValueType::kReal, "1", "harmonic frequency"),
      choice("apodization", {"none", "gaussian", "window"}, "bare law of the apodization"),
      key("apod_width", ValueType::kReal, "1", "sigma_y (gaussian) or half width (window)"),
      key("half_width", ValueType::kReal, "20", "grid covers [-half_width, half_width)"),
      key("dx", ValueType::kReal, "0.05", "grid spacing"),
      key("x0", ValueType::kReal, "0", "initial packet center"),
      key("sigma0", ValueType::kReal, "1", "initial packet width"),
      key("p0", ValueType::kReal, "0", "initial packet momentum"),
      key("time", ValueType::kReal, "1", "total time T"),
      choice("boundary", {"periodic", "absorbing"}, "grid boundary"),
  };
}

std::map<std::string, std::vector<KeySpec>> build_table() {
  std::map<std::string, std::vector<KeySpec>> t;

  auto& hist = t["histogram"];
  hist = channel_keys(true);
  hist.push_back(key("draws", ValueType::kInt, "0", "sampled readings (0 = none)"));

  t["census"] = {required("m", ValueType::kInt, "outcome count M"),
                 required("n", ValueType::kInt, "rounds N")};

  std::vector<KeySpec> identity = {required("m", ValueType::kInt, "outcome count M"),
                                   required("n", ValueType::kInt, "rounds N"),
                                   key("p", ValueType::kRealList, "",
                                       "bare probabilities P_j (default uniform)"),
                                   required("gamma", ValueType::kRealList, "loss rates gamma_j"),
                                   choice("association", {"radix-group", "pairwise"},
                                          "phase-constraint association"),
                                   key("max_iter", ValueType::kInt, "200", "iterations per start"),
                                   key("tol", ValueType::kReal, "1e-10", "residual tolerance"),
                                   key("restarts", ValueType::kInt, "8", "solver starts")};
  t["identity-check"] = identity;
  t["phase-solve"] = identity;

  t["simulate-game"] = game_keys();
  t["simulate-game"].push_back(key("trials", ValueType::kInt, "100000", "Monte Carlo trials"));

  auto& prop = t["propagate-game"];
  prop = game_keys();
  append(prop, {required("x_min", ValueType::kReal, "lowest grid node"),
                required("x_max", ValueType::kReal, "highest grid node"),
                key("dx", ValueType::kReal, "1", "grid spacing"),
                choice("frozen", {"diagonal", "drop"}, "lost readings: stay put or drop mass"),
                choice("edges", {"error", "clamp"}, "images outside the grid"),
                key("snap_tol", ValueType::kReal, "1e-9", "snap tolerance as a fraction of dx")});

  auto& qp = t["quantum-propagate"];
  qp = particle_keys();
  qp.push_back(key("snapshots", ValueType::kInt, "4", "snapshot intervals over [0, T]"));

  auto& qc = t["quantum-compare"];
  qc = particle_keys();
  append(qc, {choice("study", {"convergence", "apodization"},
                     "reference-solver convergence or apodized vs plain"),
              key("ladder", ValueType::kRealList, "0.004,0.002,0.001", "time steps, decreasing"),
              key("ref_dt", ValueType::kReal, "0.0001", "reference solver time step")});

  t["uncertainty"] = {choice("kind", {"gaussian", "random"}, "state family"),
                      key("states", ValueType::kInt, "1", "number of states"),
                      key("alpha", ValueType::kReal, "1", "action scale alpha"),
                      key("half_width", ValueType::kReal, "20", "grid half width"),
                      key("dx", ValueType::kReal, "0.05", "grid spacing"),
                      key("x0", ValueType::kReal, "0", "gaussian center"),
                      key("sigma0", ValueType::kReal, "1", "gaussian width"),
                      key("p0", ValueType::kReal, "0", "gaussian momentum")};

  t["roughness"] = {key("mass", ValueType::kReal, "1", "particle mass m"),
                    key("alpha", ValueType::kReal, "1", "action scale alpha"),
                    key("ladder", ValueType::kRealList, "0.004,0.002,0.001", "time steps"),
                    key("steps", ValueType::kInt, "16", "increments per path"),
                    key("samples", ValueType::kInt, "100000", "paths per time step"),
                    key("grid_spacing", ValueType::kReal, "0", "position grid (0 = continuous)"),
                    key("grid_offset", ValueType::kReal, "0", "position grid offset"),
                    key("velocity", ValueType::kReal, "1", "classical comparison velocity")};

  for (auto& [name, keys] : t) append(keys, shared_keys());

  t["plot-script"] = {required("csv", ValueType::kString, "CSV written by another command"),
                      required("script", ValueType::kString, "script path to write"),
                      choice("kind", {"auto", "histogram", "convergence", "wavepacket"},
                             "plot kind (auto = from the CSV header)")};
  return t;
}

const std::map<std::string, std::vector<KeySpec>>& table() {
  static const auto t = build_table();
  return t;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

const char* type_name(ValueType t) {
  switch (t) {
    case ValueType::kInt: return "an integer";
    case ValueType::kUint: return "an unsigned 64-bit integer";
    case ValueType::kReal: return "a finite real";
    case ValueType::kRealList: return "a comma-separated list of reals";
    case ValueType::kEnum: return "one of the listed names";
    case ValueType::kString: return "a string";
  }
  return "a value";
}

template <class T>
bool parse_whole(std::string_view s, T& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (!s.empty() && s.front() == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e && b != e;
}

double parse_real(const KeySpec& spec, std::string_view s) {
  double v = 0.0;
  if (!parse_whole(s, v) || !std::isfinite(v))
    throw ConfigError(spec.name, std::string("expected ") + type_name(ValueType::kReal) +
                                     ", got '" + std::string(s) + "'");
  return v;
}

Entry parse_value(const KeySpec& spec, const std::string& raw, Source source) {
  const std::string s = trim(raw);
  Entry e;
  e.source = source;
  auto fail = [&](const std::string& detail) -> ConfigError {
    return ConfigError(spec.name, std::string("expected ") + type_name(spec.type) + ", got '" +
                                      s + "'" + (detail.empty() ? "" : " (" + detail + ")"));
  };
  switch (spec.type) {
    case ValueType::kInt: {
      std::int64_t v = 0;
      if (!parse_whole(s, v)) throw fail("");
      e.value = v;
      e.text = std::to_string(v);
      break;
    }
    case ValueType::kUint: {
      std::uint64_t v = 0;
      if (s.starts_with('-') || !parse_whole(s, v)) throw fail("");
      e.value = v;
      e.text = std::to_string(v);
      break;
    }
    case ValueType::kReal: {
      const double v = parse_real(spec, s);
      e.value = v;
      e.text = format_number(v);
      break;
    }
    case ValueType::kRealList: {
      if (s.empty()) throw fail("empty list");
      std::vector<double> v;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = s.find(',', start);
        const std::string item = trim(std::string_view(s).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start));
        if (item.empty()) {
          if (comma == std::string::npos && !v.empty())
            throw ConfigError(spec.name, "trailing separator in list '" + s + "'");
          throw ConfigError(spec.name, "empty element in list '" + s + "'");
        }
        v.push_back(parse_real(spec, item));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      std::string text;
      for (std::size_t i = 0; i < v.size(); ++i) text += (i ? "," : "") + format_number(v[i]);
      e.value = std::move(v);
      e.text = std::move(text);
      break;
    }
    case ValueType::kEnum: {
      if (std::find(spec.choices.begin(), spec.choices.end(), s) == spec.choices.end()) {
        std::string list;
        for (const auto& c : spec.choices) list += (list.empty() ? "" : ", ") + c;
        throw ConfigError(spec.name, "expected one of {" + list + "}, got '" + s + "'");
      }
      e.value = s;
      e.text = s;
      break;
    }
    case ValueType::kString:
      if (s.empty()) throw fail("empty");
      e.value = s;
      e.text = s;
      break;
  }
  return e;
}

const KeySpec& find_key(const std::vector<KeySpec>& keys, const std::string& name,
                        const std::string& command) {
  for (const auto& k : keys)
    if (k.name == name) return k;
  throw ConfigError(name, "unknown key for '" + command + "'");
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config", path + ":" + std::to_string(lineno) +
                                      ": expected 'key = value'");
    const std::string k = trim(body.substr(0, eq));
    if (k.empty())
      throw ConfigError("config", path + ":" + std::to_string(lineno) + ": missing key");
    if (!kv.emplace(k, trim(body.substr(eq + 1))).second)
      throw ConfigError(k, "repeated in " + path);
  }
  return kv;
}

}  // namespace

const char* source_name(Source s) {
  switch (s) {
    case Source::kDefault: return "default";
    case Source::kFile: return "file";
    case Source::kFlag: return "flag";
    case Source::kEnv: return "env";
  }
  return "?";
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {"histogram",        "census",          "identity-check",
                                  "phase-solve",      "simulate-game",   "propagate-game",
                                  "quantum-propagate", "quantum-compare", "uncertainty",
                                  "roughness",        "plot-script"};
    return n;
  }();
  return names;
}

const std::vector<KeySpec>& command_keys(const std::string& command) {
  const auto it = table().find(command);
  if (it == table().end()) throw InvalidArgument("unknown command '" + command + "'");
  return it->second;
}

bool ExperimentConfig::has(const std::string& key) const { return entries.count(key) > 0; }

namespace {
const Entry& lookup(const ExperimentConfig& c, const std::string& key) {
  const auto it = c.entries.find(key);
  if (it == c.entries.end()) throw ConfigError(key, "not set");
  return it->second;
}
}  // namespace

std::int64_t ExperimentConfig::integer(const std::string& key) const {
  const Entry& e = lookup(*this, key);
  if (const auto* v = std::get_if<std::int64_t>(&e.value)) return *v;
  if (const auto* u = std::get_if<std::uint64_t>(&e.value)) return static_cast<std::int64_t>(*u);
  throw ConfigError(key, "is not an integer");
}

std::size_t ExperimentConfig::count(const std::string& key) const {
  const std::int64_t v = integer(key);
  if (v < 0) throw ConfigError(key, "expected a nonnegative integer, got " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

double ExperimentConfig::real(const std::string& key) const {
  const Entry& e = lookup(*this, key);
  if (const auto* v = std::get_if<double>(&e.value)) return *v;
  throw ConfigError(key, "is not a real");
}

const std::vector<double>& ExperimentConfig::list(const std::string& key) const {
  const Entry& e = lookup(*this, key);
  if (const auto* v = std::get_if<std::vector<double>>(&e.value)) return *v;
  throw ConfigError(key, "is not a list");
}

const std::string& ExperimentConfig::text(const std::string& key) const {
  const Entry& e = lookup(*this, key);
  if (const auto* v = std::get_if<std::string>(&e.value)) return *v;
  throw ConfigError(key, "is not a name");
}

Source ExperimentConfig::source(const std::string& key) const { return lookup(*this, key).source; }

ExperimentConfig parse_config(const std::string& command, std::span<const std::string> args,
                              const char* env_seed) {
  const auto& keys = command_keys(command);
  std::map<std::string, std::string> flags;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (!a.starts_with("--") || a.size() == 2)
      throw InvalidArgument("unexpected argument '" + a + "'");
    std::string name = a.substr(2);
    std::string value;
    const auto eq = name.find('=');
    if (eq != std::string::npos) {
      value = name.substr(eq + 1);
      name = name.substr(0, eq);
    } else {
      if (i + 1 >= args.size()) throw ConfigError(name, "missing value");
      value = args[++i];
    }
    if (name == "config") {
      if (!config_path.empty()) throw ConfigError(name, "given twice");
      config_path = value;
      continue;
    }
    find_key(keys, name, command);
    if (!flags.emplace(name, value).second) throw ConfigError(name, "given twice");
  }

  std::map<std::string, std::string> file;
  if (!config_path.empty()) {
    file = read_config_file(config_path);
    for (const auto& [k, v] : file) find_key(keys, k, command);
  }

  ExperimentConfig cfg;
  cfg.command = command;
  for (const KeySpec& spec : keys) {
    if (auto it = flags.find(spec.name); it != flags.end()) {
      cfg.entries.emplace(spec.name, parse_value(spec, it->second, Source::kFlag));
    } else if (auto jt = file.find(spec.name); jt != file.end()) {
      cfg.entries.emplace(spec.name, parse_value(spec, jt->second, Source::kFile));
    } else if (spec.name == "seed" && env_seed && *env_seed) {
      cfg.entries.emplace(spec.name, parse_value(spec, env_seed, Source::kEnv));
    } else if (spec.required) {
      throw ConfigError(spec.name, std::string("required; expected ") + type_name(spec.type));
    } else if (!spec.fallback.empty()) {
      cfg.entries.emplace(spec.name, parse_value(spec, spec.fallback, Source::kDefault));
    }
  }
  if (cfg.has("seed")) cfg.seed = std::get<std::uint64_t>(cfg.entries.at("seed").value);
  if (cfg.has("out")) cfg.out = cfg.text("out");
  if (cfg.has("workers")) {
    const std::int64_t w = cfg.integer("workers");
    if (w < 1 || w > 256) throw ConfigError("workers", "expected an integer in [1, 256]");
    cfg.workers = static_cast<unsigned>(w);
  }
  return cfg;
}

std::string help_text() {
  std::ostringstream os;
  os << "usage: qal <command> [--config FILE] [--key value | --key=value]...\n"
        "       qal --help | --version\n\n"
        "Config files hold 'key = value' lines ('#' starts a comment); flags\n"
        "override file values. QAL_SEED supplies the seed when neither sets it.\n"
        "Exit codes: 0 ok, 1 validation error, 2 numerical-report failure.\n";
  for (const auto& name : command_names()) {
    os << "\n" << name << "\n";
    for (const auto& k : command_keys(name)) {
      os << "  --" << k.name;
      if (k.required)
        os << " (required)";
      else if (!k.fallback.empty())
        os << " [" << k.fallback << "]";
      os << "  " << k.help;
      if (!k.choices.empty()) {
        os << " {";
        for (std::size_t i = 0; i < k.choices.size(); ++i) os << (i ? "," : "") << k.choices[i];
        os << "}";
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace qal::cli
