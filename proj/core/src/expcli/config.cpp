#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "anosovlab/expcli.hpp"

namespace anosovlab {

namespace {

constexpr Experiment kExperiments[] = {Experiment::Lyapunov,         Experiment::Qni,
                                       Experiment::Stopping,         Experiment::Bilipschitz,
                                       Experiment::Equidistribution, Experiment::Correlation,
                                       Experiment::YConfig};

const std::vector<std::string> kTopKeys{"experiment", "seed", "output_dir", "system", "params"};
const std::vector<std::string> kSystemKeys{"kind", "a", "b", "lambda", "eps_pert", "matrix", "chart_bound"};

std::string format_real(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string where(const YAML::Node& n) {
  if (!n.IsDefined()) return "";
  const YAML::Mark m = n.Mark();
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

std::string suggestion(const std::string& key, const std::vector<std::string>& allowed) {
  std::string best;
  std::size_t bd = 3;  // suggest only near misses
  for (const auto& a : allowed) {
    const std::size_t d = edit_distance(key, a);
    if (d < bd) bd = d, best = a;
  }
  return best.empty() ? "" : "; did you mean \"" + best + "\"?";
}

// Collects issues and remembers the position of the first one.
struct Issues {
  std::vector<std::string> list;
  int line = -1, column = -1;

  void add(const YAML::Node& n, const std::string& msg) {
    if (list.empty() && n.IsDefined() && !n.Mark().is_null()) {
      line = n.Mark().line + 1;
      column = n.Mark().column + 1;
    }
    list.push_back(msg + where(n));
  }
};

void check_keys(const YAML::Node& map, const std::vector<std::string>& allowed,
                const std::string& section, Issues& is) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      is.add(kv.first, "unknown key \"" + key + "\" in " + section + suggestion(key, allowed));
  }
}

std::optional<double> real_of(const YAML::Node& n, const std::string& key, Issues& is) {
  double v = 0.0;
  if (!n.IsScalar() || !YAML::convert<double>::decode(n, v) || !std::isfinite(v)) {
    is.add(n, key + " must be a finite number");
    return std::nullopt;
  }
  return v;
}

std::optional<long> integer_of(const YAML::Node& n, const std::string& key, Issues& is) {
  const auto v = real_of(n, key, is);
  if (!v) return std::nullopt;
  if (*v != std::floor(*v) || std::abs(*v) > 9.0e15) {
    is.add(n, key + " must be an integer");
    return std::nullopt;
  }
  return static_cast<long>(*v);
}

std::optional<ParamValue> value_of(const YAML::Node& n, const ParamSpec& p, Issues& is) {
  switch (p.type) {
    case ParamType::Real:
      if (auto v = real_of(n, p.key, is)) return ParamValue{*v};
      return std::nullopt;
    case ParamType::Integer:
      if (auto v = integer_of(n, p.key, is)) return ParamValue{static_cast<double>(*v)};
      return std::nullopt;
    case ParamType::Text:
      if (!n.IsScalar()) {
        is.add(n, p.key + " must be a string");
        return std::nullopt;
      }
      return ParamValue{n.as<std::string>()};
    case ParamType::RealList: {
      if (!n.IsSequence()) {
        is.add(n, p.key + " must be a list of numbers");
        return std::nullopt;
      }
      std::vector<double> out;
      bool ok = true;
      for (const auto& e : n) {
        auto v = real_of(e, p.key + " entry", is);
        ok = ok && v.has_value();
        if (v) out.push_back(*v);
      }
      if (!ok) return std::nullopt;
      return ParamValue{out};
    }
  }
  return std::nullopt;
}

const std::vector<ParamSpec>& schema_of(Experiment e) {
  using T = ParamType;
  using L = std::vector<double>;
  static const std::map<Experiment, std::vector<ParamSpec>> schemas{
      {Experiment::Lyapunov,
       {{"T", T::Real, std::nullopt, "orbit length"},
        {"dt_qr", T::Real, 1.0, "reorthonormalization step"}}},
      {Experiment::Qni,
       {{"s_dir", T::RealList, std::nullopt, "stable displacement direction"},
        {"u_dir", T::RealList, std::nullopt, "unstable displacement direction"},
        {"scale_min", T::Real, 1e-4, ""},
        {"scale_max", T::Real, 1e-2, ""},
        {"n_scales", T::Integer, 9.0, ""},
        {"mode", T::Text, std::string("fixed"), "fixed | ratio"},
        {"u_size", T::Real, 0.05, ""},
        {"ratio", T::Real, 1.0, ""},
        {"order", T::Integer, 3.0, "leaf chart order"}}},
      {Experiment::Stopping,
       {{"ell", T::Real, std::nullopt, ""},
        {"epsilon", T::Real, std::nullopt, ""},
        {"partner", T::Text, std::string("block2"), "block2 | slow_stable"},
        {"d0", T::Real, 1e-3, "second-block separation for block2 partners"},
        {"r", T::Real, 0.1, "partner distance for slow_stable partners"},
        {"u", T::Real, 0.05, "strong-unstable offset"},
        {"dt", T::Real, 0.25, ""},
        {"refinements", T::Integer, 4.0, ""},
        {"w_exponent", T::Real, 1.0, ""},
        {"search_beta", T::Real, 0.0, "0 selects the a-priori window"}}},
      {Experiment::Bilipschitz,
       {{"ell_grid", T::RealList, L{6, 7, 8, 9, 10}, ""},
        {"s_grid", T::RealList, L{0, 0.5, 1, 1.5, 2.5}, ""},
        {"epsilon", T::Real, 0.01, ""},
        {"r", T::Real, 0.1, ""},
        {"u", T::Real, 0.05, ""},
        {"search_beta", T::Real, 1.0, ""}}},
      {Experiment::Equidistribution,
       {{"T", T::Real, std::nullopt, ""},
        {"dt", T::Real, 0.05, ""},
        {"curve_points", T::Integer, 10.0, ""},
        {"h", T::Real, 0.0, "strong-unstable offset of the start point"}}},
      {Experiment::Correlation,
       {{"gaps", T::RealList, L{2, 4, 6, 8, 10, 12, 14, 16, 18, 20}, ""},
        {"s_time", T::Real, 0.0, ""},
        {"n_u", T::Integer, 100000.0, ""},
        {"T_lln", T::Real, 1000.0, ""},
        {"n_u_lln", T::Integer, 100.0, ""}}},
      {Experiment::YConfig,
       {{"ell", T::Real, 20.0, ""},
        {"epsilon", T::Real, 0.01, ""},
        {"n_pairs", T::Integer, 20.0, ""},
        {"u", T::Real, 0.05, ""},
        {"r", T::Real, 0.1, ""},
        {"search_beta", T::Real, 1.0, ""}}},
  };
  return schemas.at(e);
}

SystemSpec system_of(const YAML::Node& n, Issues& is) {
  SystemSpec spec;
  if (!n.IsDefined() || !n.IsMap()) {
    is.add(n, "missing section \"system\"");
    return spec;
  }
  check_keys(n, kSystemKeys, "system", is);
  const YAML::Node k = n["kind"];
  if (!k.IsDefined()) {
    is.add(n, "missing key \"kind\" in system");
  } else if (!k.IsScalar()) {
    is.add(k, "kind must be a name");
  } else if (auto kind = parse_kind(k.as<std::string>())) {
    spec.kind = *kind;
  } else {
    is.add(k, "unknown system kind \"" + k.as<std::string>() + "\"");
  }
  auto int_field = [&](const char* key, int& dst) {
    if (n[key].IsDefined())
      if (auto v = integer_of(n[key], key, is)) dst = static_cast<int>(*v);
  };
  auto real_field = [&](const char* key, double& dst) {
    if (n[key].IsDefined())
      if (auto v = real_of(n[key], key, is)) dst = *v;
  };
  int_field("a", spec.a);
  int_field("b", spec.b);
  real_field("lambda", spec.lambda);
  real_field("eps_pert", spec.eps_pert);
  real_field("chart_bound", spec.chart_bound);
  if (const YAML::Node m = n["matrix"]; m.IsDefined()) {
    if (!m.IsSequence() || m.size() != 4) {
      is.add(m, "matrix must be a list of 4 integers");
    } else {
      for (std::size_t i = 0; i < 4; ++i)
        if (auto v = integer_of(m[i], "matrix entry", is)) spec.matrix[i] = static_cast<int>(*v);
    }
  }
  return spec;
}

}  // namespace

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Lyapunov: return "lyapunov";
    case Experiment::Qni: return "qni";
    case Experiment::Stopping: return "stopping";
    case Experiment::Bilipschitz: return "bilipschitz";
    case Experiment::Equidistribution: return "equidistribution";
    case Experiment::Correlation: return "correlation";
    case Experiment::YConfig: return "yconfig";
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view s) {
  for (auto e : kExperiments)
    if (experiment_name(e) == s) return e;
  return std::nullopt;
}

const std::vector<ParamSpec>& param_schema(Experiment e) { return schema_of(e); }

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

ConfigError::ConfigError(ErrorCode code, std::vector<std::string> issues, int line, int column)
    : Error(code, [&] {
        std::string m(error_name(code));
        m += ":";
        for (const auto& i : issues) m += "\n  " + i;
        return m;
      }()),
      issues_(std::move(issues)),
      line_(line),
      column_(column) {}

double ExperimentConfig::num(const std::string& key) const {
  return std::get<double>(params.at(key));
}

long ExperimentConfig::integer(const std::string& key) const {
  return static_cast<long>(num(key));
}

const std::string& ExperimentConfig::str(const std::string& key) const {
  return std::get<std::string>(params.at(key));
}

const std::vector<double>& ExperimentConfig::list(const std::string& key) const {
  return std::get<std::vector<double>>(params.at(key));
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node loaded;
  try {
    loaded = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(ErrorCode::ParseError, {e.msg + " (line " + std::to_string(e.mark.line + 1) +
                                              ", column " + std::to_string(e.mark.column + 1) + ")"},
                      e.mark.line + 1, e.mark.column + 1);
  }
  const YAML::Node& root = loaded;
  if (!root.IsMap()) throw ConfigError(ErrorCode::ParseError, {"top level must be a mapping"}, 1, 1);

  Issues is;
  ExperimentConfig c;
  check_keys(root, kTopKeys, "top level", is);

  std::optional<Experiment> exp;
  if (const YAML::Node e = root["experiment"]; !e.IsDefined()) {
    is.add(root, "missing key \"experiment\"");
  } else if (!e.IsScalar()) {
    is.add(e, "experiment must be a name");
  } else if (!(exp = parse_experiment(e.as<std::string>()))) {
    std::vector<std::string> names;
    for (auto x : kExperiments) names.emplace_back(experiment_name(x));
    is.add(e, "unknown experiment \"" + e.as<std::string>() + "\"" + suggestion(e.as<std::string>(), names));
  }
  if (const YAML::Node s = root["seed"]; s.IsDefined()) {
    std::uint64_t v = 0;
    if (!s.IsScalar() || !YAML::convert<std::uint64_t>::decode(s, v) ||
        s.as<std::string>().find_first_not_of("0123456789") != std::string::npos)
      is.add(s, "seed must be a nonnegative 64-bit integer");
    else
      c.seed = v;
  }
  if (const YAML::Node o = root["output_dir"]; o.IsDefined()) {
    if (!o.IsScalar() || o.as<std::string>().empty()) is.add(o, "output_dir must be a nonempty path");
    else c.output_dir = o.as<std::string>();
  }
  c.system = system_of(root["system"], is);

  const YAML::Node params = root["params"];
  if (params.IsDefined() && !params.IsMap()) is.add(params, "params must be a mapping");
  if (exp) {
    c.experiment = *exp;
    const auto& schema = schema_of(*exp);
    std::vector<std::string> allowed;
    for (const auto& p : schema) allowed.push_back(p.key);
    if (params.IsMap()) check_keys(params, allowed, "params of " + std::string(experiment_name(*exp)), is);
    for (const auto& p : schema) {
      const YAML::Node v = params.IsMap() ? params[p.key] : YAML::Node();
      if (v.IsDefined()) {
        if (auto pv = value_of(v, p, is)) c.params[p.key] = *pv;
      } else if (p.fallback) {
        c.params[p.key] = *p.fallback;
      } else {
        is.add(params.IsDefined() ? params : root, "missing required key \"" + p.key + "\" in params");
      }
    }
  }
  if (!is.list.empty()) throw ConfigError(ErrorCode::SchemaError, is.list, is.line, is.column);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError(ErrorCode::ParseError, {"cannot read " + file.string()});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "experiment: " << experiment_name(c.experiment) << "\n";
  o << "seed: " << c.seed << "\n";
  o << "output_dir: " << quote(c.output_dir) << "\n";
  const SystemSpec& s = c.system;
  o << "system:\n";
  o << "  kind: " << kind_name(s.kind) << "\n";
  o << "  a: " << s.a << "\n";
  o << "  b: " << s.b << "\n";
  o << "  lambda: " << format_real(s.lambda) << "\n";
  o << "  eps_pert: " << format_real(s.eps_pert) << "\n";
  o << "  matrix: [" << s.matrix[0] << ", " << s.matrix[1] << ", " << s.matrix[2] << ", "
    << s.matrix[3] << "]\n";
  o << "  chart_bound: " << format_real(s.chart_bound) << "\n";
  o << "params:";
  const auto& schema = schema_of(c.experiment);
  if (schema.empty()) o << " {}";
  o << "\n";
  for (const auto& p : schema) {
    const auto it = c.params.find(p.key);
    if (it == c.params.end()) continue;
    o << "  " << p.key << ": ";
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, double>) {
            o << format_real(v);
          } else if constexpr (std::is_same_v<V, std::string>) {
            o << quote(v);
          } else {
            o << "[";
            for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ", " : "") << format_real(v[i]);
            o << "]";
          }
        },
        it->second);
    o << "\n";
  }
  return o.str();
}

}  // namespace anosovlab
