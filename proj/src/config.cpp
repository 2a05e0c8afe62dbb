#include "fkdyn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fk {

namespace {

using nlohmann::json;

std::vector<KeySpec> build_schema() {
  using T = ValueType;
  return {
      {"run.seed", T::UInt, 1, "Master seed; replica r of every estimator uses stream (seed, r)."},
      {"run.threads", T::Int, 1, "Worker threads (results do not depend on it)."},
      {"run.replicas", T::UInt, 100, "Independent replicas per estimate."},
      {"run.engine", T::String, "dynamic", "Connectivity engine.", {"dynamic", "naive"}},
      {"run.out", T::String, "out", "Output directory; commands write nowhere else."},

      {"lattice.d", T::Int, 2, "Dimension."},
      {"lattice.n", T::Int, 8, "Vertices per side."},
      {"lattice.kind", T::String, "torus", "Region type.", {"torus", "box"}},
      {"lattice.boundary", T::String, "free", "Boundary condition of a box.",
       {"free", "wired", "side", "cylindrical"}},
      {"lattice.side_mask", T::UInt, 0, "Wired faces for boundary = side: bit 2*axis + (0 low, 1 high)."},
      {"lattice.periodic_mask", T::UInt, 0, "Periodic axes of a box (cylinders)."},
      {"lattice.cylinder_wired", T::Bool, false, "Cylindrical boundary: wire the non-periodic faces."},

      {"model.p", T::Double, json(), "Edge parameter; defaults to model.p_c."},
      {"model.p_c", T::Double, json(), "Critical reference; defaults to the self-dual point sqrt(q)/(1+sqrt(q))."},
      {"model.q", T::Double, 2.0, "Cluster weight, q > 0."},
      {"model.bridge_q", T::Double, json(), "Fault injection: q used only in the bridge case of the update."},
      {"model.eps", T::Double, 0.25, "Phase threshold fraction: wired iff the largest cluster has >= ceil(eps N) vertices."},

      {"sample.horizon", T::Double, 10.0, "Continuous time per replica."},
      {"sample.discrete_steps", T::UInt, 0, "If > 0, run this many discrete steps instead."},
      {"sample.init", T::String, "empty", "Initial configuration.", {"empty", "full", "random_phase"}},
      {"sample.m_star", T::Double, 0.5, "Wired weight for init = random_phase."},
      {"sample.potts", T::Bool, false, "Also write Edwards-Sokal Potts colorings (integer q)."},
      {"sample.write_samples", T::Bool, true, "Write the binary sample file."},

      {"mix.n_grid", T::IntList, json::array(), "Torus sides; empty means lattice.n."},
      {"mix.cap", T::Double, 1e4, "Coupling horizon; longer runs are censored."},
      {"mix.sample_times", T::DoubleList, json::array({1.0, 2.0, 4.0, 8.0, 16.0, 32.0}), "Curve sample times."},
      {"mix.init", T::String, "worst", "worst: 1/0 coupled pair; random_phase: m*-mixture start.",
       {"worst", "random_phase"}},
      {"mix.m_star", T::Double, 0.5, "Wired weight for init = random_phase."},
      {"mix.restrict", T::Bool, true, "random_phase: restrict each chain to its starting phase."},
      {"mix.eps_target", T::Double, 0.25, "Disagreement level reported as t_eps."},

      {"spatial.estimators", T::StringList, json::array({"wsm", "ssm", "within", "ord", "dis"}),
       "Estimators to run.", {"wsm", "ssm", "within", "ord", "dis"}},
      {"spatial.r_grid", T::IntList, json::array({4, 6, 8}), "Box sides for wsm and within."},
      {"spatial.m_grid", T::IntList, json::array({1, 2}), "Ball radii for ssm (m <= n/2)."},
      {"spatial.ssm_edges", T::UIntList, json::array({0}), "Edges whose balls ssm maximizes over."},
      {"spatial.crossing_m_grid", T::IntList, json::array({4, 6, 8}), "Box sides for ord and dis."},
      {"spatial.burn_t0", T::Double, 1.0, "Sandwich burn-in start time."},
      {"spatial.burn_t_max", T::Double, 512.0, "Sandwich burn-in cap."},
      {"spatial.burn_tol", T::Double, 0.01, "Sandwich plateau tolerance."},
      {"spatial.strict", T::Bool, false, "Fail instead of flagging unconverged burn-in or unmixed samplers."},
      {"spatial.within_phase", T::String, "wired", "Phase for within.", {"wired", "free"}},
      {"spatial.within_torus_horizon", T::Double, 0.0, "Restricted torus burn-in; 0 means t* = exp((log n)^(d-1))."},
      {"spatial.within_box_horizon", T::Double, 0.0, "Box burn-in; 0 means sandwich plateau."},
      {"spatial.snapshots", T::UInt, 16, "Snapshots per replica for within."},
      {"spatial.spacing", T::Double, 2.0, "Time between snapshots."},
      {"spatial.crossing_horizon", T::Double, 50.0, "Burn-in for ord and dis."},
      {"spatial.crossing_snapshots", T::UInt, 1, "Snapshots per replica for ord and dis."},

      {"weights.p_grid", T::DoubleList, json::array(), "Target values of p; empty means model.p."},
      {"weights.replicas", T::UInt, 128, "Replicas per annealing step."},
      {"weights.snapshots", T::UInt, 32, "Samples per replica per step."},
      {"weights.spacing", T::Double, 1.0, "Time between samples."},
      {"weights.t_star_c", T::Double, 1.0, "Per-step burn-in cap exp(c (log n)^(d-1))."},
      {"weights.adaptive", T::Bool, true, "Stop the per-step burn-in once the density plateaus."},
      {"weights.fixed_horizon", T::Double, 0.0, "If > 0, fixed per-step burn-in."},
      {"weights.max_events", T::UInt, 0, "Event budget per direction; 0 means unlimited."},

      {"bottleneck.q_grid", T::DoubleList, json::array({2.0, 10.0, 50.0}), "Values of q for the exact report."},
      {"bottleneck.m_star", T::Double, json(), "pi(wired phase) for the sampled conductance."},
      {"bottleneck.t_mix_eps", T::Double, 0.25, "Exact mixing-time level."},
      {"bottleneck.horizon", T::Double, 20.0, "Restricted burn-in for the sampled exit flow."},
      {"bottleneck.snapshots", T::UInt, 8, "Samples per replica for the exit flow."},

      {"oracle.draws", T::UInt, 200000, "One-step kernel draws per state."},
      {"oracle.samples", T::UInt, 20000, "Replicas for distribution checks."},
  };
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

const KeySpec* find_spec(const std::string& key) {
  for (const auto& s : config_schema())
    if (s.key == key) return &s;
  return nullptr;
}

std::pair<std::string, std::string> split_key(const std::string& key) {
  const auto dot = key.find('.');
  return {key.substr(0, dot), key.substr(dot + 1)};
}

bool is_list(ValueType t) {
  return t == ValueType::IntList || t == ValueType::UIntList || t == ValueType::DoubleList ||
         t == ValueType::StringList;
}

ValueType element_type(ValueType t) {
  switch (t) {
    case ValueType::IntList: return ValueType::Int;
    case ValueType::UIntList: return ValueType::UInt;
    case ValueType::DoubleList: return ValueType::Double;
    case ValueType::StringList: return ValueType::String;
    default: return t;
  }
}

// Parses one scalar token of the key-value format; returns null json on failure.
json parse_scalar(const std::string& tok, ValueType t) {
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  switch (t) {
    case ValueType::Int: {
      long long v = 0;
      auto r = std::from_chars(b, e, v);
      return r.ec == std::errc() && r.ptr == e ? json(v) : json();
    }
    case ValueType::UInt: {
      unsigned long long v = 0;
      auto r = std::from_chars(b, e, v);
      return r.ec == std::errc() && r.ptr == e ? json(v) : json();
    }
    case ValueType::Double: {
      double v = 0.0;
      auto r = std::from_chars(b, e, v);
      return r.ec == std::errc() && r.ptr == e && std::isfinite(v) ? json(v) : json();
    }
    case ValueType::Bool:
      if (tok == "true" || tok == "yes" || tok == "1") return true;
      if (tok == "false" || tok == "no" || tok == "0") return false;
      return json();
    default: {
      std::string s = tok;
      if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
      return s;
    }
  }
}

// Checks a JSON value against the schema type, coercing integers to doubles.
bool coerce(json& v, ValueType t) {
  switch (t) {
    case ValueType::Int: return v.is_number_integer();
    case ValueType::UInt: return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    case ValueType::Double:
      if (!v.is_number()) return false;
      v = v.get<double>();
      return true;
    case ValueType::Bool: return v.is_boolean();
    case ValueType::String: return v.is_string();
    default: {
      if (!v.is_array()) return false;
      for (auto& x : v)
        if (!coerce(x, element_type(t))) return false;
      return true;
    }
  }
}

void check_choices(const Config& cfg, const KeySpec& spec, const json& v) {
  if (spec.choices.empty()) return;
  const auto ok = [&](const json& s) {
    return std::find(spec.choices.begin(), spec.choices.end(), s.get<std::string>()) != spec.choices.end();
  };
  std::string allowed;
  for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
  if (v.is_array()) {
    for (const auto& s : v)
      if (!ok(s)) cfg.fail(spec.key, "unknown value '" + s.get<std::string>() + "' (allowed: " + allowed + ")");
  } else if (!ok(v)) {
    cfg.fail(spec.key, "unknown value '" + v.get<std::string>() + "' (allowed: " + allowed + ")");
  }
}

void assign(Config& cfg, const std::string& key, json v, int line) {
  const KeySpec* spec = find_spec(key);
  if (!spec) {
    cfg.lines[key] = line;
    cfg.fail(key, "unknown key");
  }
  cfg.lines[key] = line;
  if (!coerce(v, spec->type)) cfg.fail(key, "expected " + to_string(spec->type));
  check_choices(cfg, *spec, v);
  cfg.set(key, std::move(v));
}

void check_version(const Config& cfg, const json& v) {
  if (!v.is_number_integer() || v.get<long long>() != kSchemaVersion)
    cfg.fail("schema_version", "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Sorted-key JSON with doubles at 17 significant digits.
void dump_canonical(const json& v, std::string& out) {
  if (v.is_object()) {
    out += '{';
    bool first = true;
    for (const auto& [k, x] : v.items()) {
      if (!first) out += ',';
      first = false;
      out += json(k).dump();
      out += ':';
      dump_canonical(x, out);
    }
    out += '}';
  } else if (v.is_array()) {
    out += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      dump_canonical(v[i], out);
    }
    out += ']';
  } else if (v.is_number_float()) {
    out += format_double(v.get<double>());
  } else {
    out += v.dump();
  }
}

}  // namespace

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = build_schema();
  return schema;
}

std::string to_string(ValueType type) {
  switch (type) {
    case ValueType::Int: return "integer";
    case ValueType::UInt: return "non-negative integer";
    case ValueType::Double: return "number";
    case ValueType::Bool: return "boolean";
    case ValueType::String: return "string";
    case ValueType::IntList: return "list of integers";
    case ValueType::UIntList: return "list of non-negative integers";
    case ValueType::DoubleList: return "list of numbers";
    case ValueType::StringList: return "list of strings";
  }
  return "?";
}

bool Config::has(const std::string& key) const {
  const auto [sec, name] = split_key(key);
  return values.contains(sec) && values[sec].contains(name) && !values[sec][name].is_null();
}

const nlohmann::json& Config::at(const std::string& key) const {
  const auto [sec, name] = split_key(key);
  if (!has(key)) fail(key, "missing value");
  return values.at(sec).at(name);
}

void Config::set(const std::string& key, nlohmann::json value) {
  const auto [sec, name] = split_key(key);
  values[sec][name] = std::move(value);
}

void Config::fail(const std::string& key, const std::string& message) const {
  auto it = lines.find(key);
  std::string where = source;
  if (it != lines.end() && it->second > 0) where += ":" + std::to_string(it->second);
  throw ConfigError(where + ": " + key + ": " + message);
}

Config default_config() {
  Config cfg;
  for (const auto& s : config_schema()) cfg.set(s.key, s.default_value);
  return cfg;
}

Config parse_ini_config(const std::string& text, const std::string& source) {
  Config cfg = default_config();
  cfg.source = source;
  std::istringstream in(text);
  std::string raw, section;
  bool version_seen = false;
  for (int line = 1; std::getline(in, raw); ++line) {
    std::string s = raw;
    for (std::size_t i = 0; i < s.size(); ++i)
      if ((s[i] == '#' || s[i] == ';') && (i == 0 || std::isspace(static_cast<unsigned char>(s[i - 1])))) {
        s.resize(i);
        break;
      }
    s = trim(s);
    if (s.empty()) continue;
    const auto bad = [&](const std::string& msg) {
      throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
    };
    if (s.front() == '[') {
      if (s.back() != ']') bad("unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) bad("empty section name");
      bool known = false;
      for (const auto& spec : config_schema()) known |= split_key(spec.key).first == section;
      if (!known) bad("unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) bad("expected 'key = value'");
    const std::string name = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (name.empty()) bad("missing key before '='");
    if (section.empty()) {
      if (name != "schema_version") bad("key '" + name + "' outside any section");
      cfg.lines["schema_version"] = line;
      long long v = 0;
      auto r = std::from_chars(value.data(), value.data() + value.size(), v);
      check_version(cfg, r.ec == std::errc() && r.ptr == value.data() + value.size() ? json(v) : json());
      version_seen = true;
      continue;
    }
    const std::string key = section + "." + name;
    const KeySpec* spec = find_spec(key);
    if (!spec) bad("unknown key '" + key + "'");
    if (cfg.lines.count(key)) bad("duplicate key '" + key + "'");
    json v;
    if (is_list(spec->type)) {
      std::string body = value;
      if (!body.empty() && body.front() == '[') {
        if (body.back() != ']') bad("unterminated list for '" + key + "'");
        body = body.substr(1, body.size() - 2);
      }
      v = json::array();
      std::stringstream items(body);
      std::string item;
      if (!trim(body).empty())
        while (std::getline(items, item, ',')) {
          auto x = parse_scalar(trim(item), element_type(spec->type));
          if (x.is_null()) bad("'" + trim(item) + "' is not a valid element for '" + key + "'");
          v.push_back(x);
        }
    } else {
      v = parse_scalar(value, spec->type);
      if (v.is_null()) bad("'" + value + "' is not a valid " + to_string(spec->type) + " for '" + key + "'");
    }
    assign(cfg, key, v, line);
  }
  if (!version_seen) throw ConfigError(source + ": missing schema_version");
  return cfg;
}

Config parse_json_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(source + ": top level must be an object");
  Config cfg = default_config();
  cfg.source = source;
  if (!doc.contains("schema_version")) throw ConfigError(source + ": missing schema_version");
  for (const auto& [sec, body] : doc.items()) {
    if (sec == "schema_version") {
      check_version(cfg, body);
      continue;
    }
    if (!body.is_object()) throw ConfigError(source + ": section '" + sec + "' must be an object");
    for (const auto& [name, v] : body.items()) assign(cfg, sec + "." + name, v, 0);
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".json") return parse_json_config(ss.str(), path.string());
  return parse_ini_config(ss.str(), path.string());
}

std::string canonical_json(const Config& config) {
  json v = config.values;
  v["run"].erase("seed");
  v["run"].erase("threads");
  v["run"].erase("out");
  v["schema_version"] = kSchemaVersion;
  std::string out;
  dump_canonical(v, out);
  return out;
}

std::uint64_t config_hash(const Config& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_json(config)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string schema_markdown() {
  std::ostringstream md;
  md << "## Configuration keys (schema_version " << kSchemaVersion << ")\n\n"
     << "Key-value files put `schema_version = " << kSchemaVersion
     << "` first, then `[section]` headers and `name = value` lines; `#` or `;` starts a comment; "
        "lists are comma-separated, optionally in brackets. JSON files use "
        "`{\"schema_version\": 1, \"section\": {\"name\": value}}`. Unknown keys are errors.\n\n"
     << "| key | type | default | meaning |\n|---|---|---|---|\n";
  for (const auto& s : config_schema()) {
    std::string def;
    if (s.default_value.is_null())
      def = "(unset)";
    else
      dump_canonical(s.default_value, def);
    std::string doc = s.doc;
    if (!s.choices.empty()) {
      doc += " One of:";
      for (const auto& c : s.choices) doc += " `" + c + "`";
      doc += ".";
    }
    md << "| `" << s.key << "` | " << to_string(s.type) << " | `" << def << "` | " << doc << " |\n";
  }
  return md.str();
}

}  // namespace fk
