#include "polyfactor/models/model_file.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "polyfactor/core/operations.hpp"
#include "polyfactor/gaussian/canonical_gaussian.hpp"
#include "polyfactor/gaussian/mixture_factor.hpp"
#include "polyfactor/gaussian/moment_gaussian.hpp"
#include "polyfactor/hybrid/conditional_factor.hpp"
#include "polyfactor/hybrid/indicator_factor.hpp"
#include "polyfactor/hybrid/truncated_gaussian.hpp"
#include "polyfactor/table/sparse_table_factor.hpp"
#include "polyfactor/table/table_factor.hpp"

namespace polyfactor {

using json = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void schema(const std::string& path, const std::string& message) {
  fail(ErrorCode::schema_error, (path.empty() ? "/" : path) + ": " + message);
}

// A JSON node together with its pointer path, for error messages.
struct Node {
  const json& j;
  std::string path;

  [[nodiscard]] Node at(const std::string& key) const {
    if (!j.is_object()) {
      schema(path, "expected an object");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
      schema(path, "missing field '" + key + "'");
    }
    return {*it, path + "/" + key};
  }
  [[nodiscard]] std::optional<Node> find(const std::string& key) const {
    const auto it = j.find(key);
    if (it == j.end()) {
      return std::nullopt;
    }
    return Node{*it, path + "/" + key};
  }
  [[nodiscard]] Node operator[](std::size_t i) const { return {j[i], path + "/" + std::to_string(i)}; }
  [[nodiscard]] std::size_t size() const {
    if (!j.is_array()) {
      schema(path, "expected an array");
    }
    return j.size();
  }
  [[nodiscard]] std::string string() const {
    if (!j.is_string()) {
      schema(path, "expected a string");
    }
    return j.get<std::string>();
  }
  // null stands for `missing` (used for infinite bounds and log-constants).
  [[nodiscard]] double number(double missing = std::numeric_limits<double>::quiet_NaN()) const {
    if (j.is_null() && !std::isnan(missing)) {
      return missing;
    }
    if (!j.is_number()) {
      schema(path, "expected a number");
    }
    return j.get<double>();
  }
  [[nodiscard]] std::size_t count() const {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
      schema(path, "expected a nonnegative integer");
    }
    return j.get<std::size_t>();
  }
  [[nodiscard]] std::vector<double> numbers(double missing = std::numeric_limits<double>::quiet_NaN()) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = (*this)[i].number(missing);
    }
    return out;
  }
  [[nodiscard]] Vector vector(double missing = std::numeric_limits<double>::quiet_NaN()) const {
    const auto v = numbers(missing);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  [[nodiscard]] Matrix matrix() const {
    const std::size_t rows = size();
    Matrix m;
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = (*this)[r].numbers();
      if (r == 0) {
        m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(row.size()));
      } else if (static_cast<Eigen::Index>(row.size()) != m.cols()) {
        schema((*this)[r].path, "matrix rows must have equal length");
      }
      for (std::size_t c = 0; c < row.size(); ++c) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
      }
    }
    return m;
  }
};

// Runs fn, prefixing factor-construction errors with the node path.
template <class Fn>
auto guarded(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const FactorError& e) {
    if (e.code() == ErrorCode::schema_error) {
      throw;
    }
    schema(path, e.detail());
  }
}

class Resolver {
 public:
  std::map<std::string, Variable, std::less<>> declared;
  Scope state;

  [[nodiscard]] Variable variable(const Node& n) const {
    const std::string name = n.string();
    if (const auto it = declared.find(name); it != declared.end()) {
      return it->second;
    }
    if (name.size() > kPreviousSuffix.size() && name.ends_with(kPreviousSuffix)) {
      const std::string stem = name.substr(0, name.size() - kPreviousSuffix.size());
      if (const auto* v = state.find(stem)) {
        return v->renamed(name);
      }
    }
    if (name.starts_with('~') && name.size() > 1) {
      return Variable::continuous(name);
    }
    schema(n.path, "undeclared variable '" + name + "'");
  }
  [[nodiscard]] std::vector<Variable> variables(const Node& n) const {
    std::vector<Variable> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
      out.push_back(variable(n[i]));
    }
    return out;
  }
  [[nodiscard]] Scope scope(const Node& n) const {
    return guarded(n.path, [&] { return Scope(variables(n)); });
  }

  [[nodiscard]] Factor factor(const Node& n) const;
};

Factor Resolver::factor(const Node& n) const {
  const std::string type = n.at("type").string();
  return guarded(n.path, [&]() -> Factor {
    if (type == "table") {
      return TableFactor::make(variables(n.at("scope")), n.at("values").numbers());
    }
    if (type == "sparse") {
      const auto vars = variables(n.at("scope"));
      const Scope scope(vars);
      const Node entries = n.at("entries");
      SparseTableFactor::Entries out;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const Node e = entries[i];
        const Node state = e.at("state");
        if (state.size() != vars.size()) {
          schema(state.path, fmt::format("expected {} states", vars.size()));
        }
        Assignment a;
        for (std::size_t k = 0; k < vars.size(); ++k) {
          a.set(vars[k].name(), static_cast<double>(state[k].count()));
        }
        std::size_t index = 0;
        for (const auto& v : scope) {
          index = index * v.cardinality() + a.index(v);
        }
        out[index] += e.at("value").number();
      }
      return SparseTableFactor::make(scope, std::move(out));
    }
    if (type == "gaussian" || type == "moment") {
      const double log_weight = n.find("log_weight") ? n.at("log_weight").number() : 0.0;
      const auto vars = variables(n.at("scope"));
      const Vector mean = n.at("mean").vector();
      const Matrix cov = n.at("covariance").matrix();
      return type == "gaussian" ? CanonicalGaussian::from_moments(vars, mean, cov, log_weight)
                                : MomentGaussian::make(vars, mean, cov, log_weight);
    }
    if (type == "canonical") {
      return CanonicalGaussian::from_ordered(variables(n.at("scope")), n.at("precision").matrix(),
                                             n.at("information").vector(), n.at("log_constant").number(-kInf));
    }
    if (type == "linear_gaussian") {
      return CanonicalGaussian::linear_gaussian(variables(n.at("inputs")), variables(n.at("outputs")),
                                                n.at("transition").matrix(), n.at("offset").vector(),
                                                n.at("noise").matrix());
    }
    if (type == "mixture") {
      const Node parts = n.at("components");
      std::vector<Factor> components;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        components.push_back(factor(parts[i]));
      }
      if (components.empty()) {
        schema(parts.path, "a mixture needs at least one component");
      }
      return MixtureFactor::make(components.front().scope(), components);
    }
    if (type == "truncated") {
      const Factor base = factor(n.at("base"));
      Scope latent;
      if (const auto l = n.find("latent")) {
        latent = scope(*l);
      }
      return TruncatedGaussian::make(base, n.at("lower").vector(-kInf), n.at("upper").vector(kInf), latent);
    }
    if (type == "indicator") {
      const Scope selectors = scope(n.at("selectors"));
      const Scope continuous = scope(n.at("continuous"));
      const Node regions = n.at("regions");
      std::vector<Region> out;
      for (std::size_t i = 0; i < regions.size(); ++i) {
        const Node r = regions[i];
        Region region;
        if (const auto e = r.find("empty"); e && e->j.is_boolean() && e->j.get<bool>()) {
          region.empty = true;
          region.lower = Vector::Zero(static_cast<Eigen::Index>(continuous.size()));
          region.upper = region.lower;
        } else {
          region.lower = r.at("lower").vector(-kInf);
          region.upper = r.at("upper").vector(kInf);
        }
        out.push_back(std::move(region));
      }
      double log_scale = 0.0;
      if (const auto s = n.find("log_scale")) {
        log_scale = s->number();
      }
      return IndicatorFactor::make(selectors, continuous, std::move(out), log_scale);
    }
    if (type == "quadrant_indicator") {
      return quadrant_indicator(variable(n.at("selector")), variable(n.at("x")), variable(n.at("y")));
    }
    if (type == "conditional") {
      const Node b = n.at("branches");
      std::vector<Factor> branches;
      for (std::size_t i = 0; i < b.size(); ++i) {
        branches.push_back(factor(b[i]));
      }
      return ConditionalFactor::make(scope(n.at("discrete")), scope(n.at("continuous")), std::move(branches));
    }
    if (type == "product") {
      const Node parts = n.at("factors");
      Factor out = TableFactor::scalar(1.0);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        out = i == 0 ? factor(parts[i]) : multiply(out, factor(parts[i]));
      }
      return out;
    }
    schema(n.path + "/type", "unknown factor type '" + type + "'");
  });
}

Matrix matrix_or(const Node& section, const char* key, const Matrix& fallback) {
  const auto n = section.find(key);
  return n ? n->matrix() : fallback;
}

QuadrantConfig parse_quadrant(const Node& n) {
  QuadrantConfig cfg = QuadrantConfig::defaults();
  if (const auto d = n.find("drifts")) {
    if (d->size() != 4) {
      schema(d->path, "expected 4 drift vectors");
    }
    for (std::size_t i = 0; i < 4; ++i) {
      const auto v = (*d)[i].numbers();
      if (v.size() != 2) {
        schema((*d)[i].path, "expected 2 entries");
      }
      cfg.drifts[i] = {v[0], v[1]};
    }
  }
  cfg.process_noise = matrix_or(n, "process_noise", cfg.process_noise);
  cfg.observation_noise = matrix_or(n, "observation_noise", cfg.observation_noise);
  cfg.start_covariance = matrix_or(n, "start_covariance", cfg.start_covariance);
  if (const auto s = n.find("step")) {
    cfg.step = s->number();
  }
  if (const auto s = n.find("start")) {
    const auto v = s->numbers();
    if (v.size() != 2) {
      schema(s->path, "expected 2 entries");
    }
    cfg.start = {v[0], v[1]};
  }
  if (const auto h = n.find("horizon")) {
    cfg.horizon = h->count();
  }
  if (const auto s = n.find("seed")) {
    cfg.seed = s->count();
  }
  return cfg;
}

std::vector<std::vector<double>> rows(const Node& n) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    out.push_back(n[i].numbers());
  }
  return out;
}

template <class Fn>
auto config_guarded(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const FactorError& e) {
    if (e.code() != ErrorCode::config_invalid) {
      throw;
    }
    fail(ErrorCode::config_invalid, path + ": " + e.detail());
  }
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// ---- serialization ----

json number(double x) {
  return std::isfinite(x) ? json(x) : json(nullptr);
}

json names(const Scope& scope) {
  json out = json::array();
  for (const auto& v : scope) {
    out.push_back(v.name());
  }
  return out;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(number(v(i)));
  }
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.push_back(to_json(Vector(m.row(r).transpose())));
  }
  return out;
}

json to_json(const Factor& f) {
  json out;
  out["type"] = std::string(f.tag());
  if (const auto* t = f.as<TableFactor>()) {
    out["scope"] = names(f.scope());
    out["values"] = json(std::vector<double>(t->values().begin(), t->values().end()));
  } else if (const auto* s = f.as<SparseTableFactor>()) {
    out["scope"] = names(f.scope());
    json entries = json::array();
    for (const auto& [index, value] : s->entries()) {
      json state = json::array();
      for (std::size_t k = 0; k < f.scope().size(); ++k) {
        state.push_back(index / s->strides()[k] % f.scope()[k].cardinality());
      }
      entries.push_back({{"state", state}, {"value", value}});
    }
    out["entries"] = entries;
  } else if (const auto* c = f.as<CanonicalGaussian>()) {
    out["scope"] = names(f.scope());
    out["precision"] = to_json(c->precision());
    out["information"] = to_json(c->information());
    out["log_constant"] = number(c->log_constant());
  } else if (const auto* m = f.as<MomentGaussian>()) {
    out["scope"] = names(f.scope());
    out["mean"] = to_json(m->mean());
    out["covariance"] = to_json(m->covariance());
    out["log_weight"] = m->log_weight();
  } else if (const auto* x = f.as<MixtureFactor>()) {
    json parts = json::array();
    for (const auto& part : x->components()) {
      parts.push_back(to_json(part));
    }
    out["components"] = parts;
  } else if (const auto* tg = f.as<TruncatedGaussian>()) {
    out["base"] = to_json(tg->base_factor());
    out["lower"] = to_json(tg->lower());
    out["upper"] = to_json(tg->upper());
    out["latent"] = names(tg->latent());
  } else if (const auto* ind = f.as<IndicatorFactor>()) {
    out["selectors"] = names(ind->selectors());
    out["continuous"] = names(ind->continuous());
    json regions = json::array();
    for (const auto& r : ind->regions()) {
      regions.push_back(r.empty ? json{{"empty", true}} : json{{"lower", to_json(r.lower)}, {"upper", to_json(r.upper)}});
    }
    out["regions"] = regions;
    out["log_scale"] = ind->log_scale();
  } else if (const auto* cond = f.as<ConditionalFactor>()) {
    out["discrete"] = names(cond->discrete_scope());
    out["continuous"] = names(cond->continuous_scope());
    json branches = json::array();
    for (const auto& b : cond->branches()) {
      branches.push_back(to_json(b));
    }
    out["branches"] = branches;
  } else {
    fail(ErrorCode::unsupported, "cannot serialize a factor of type '" + std::string(f.tag()) + "'");
  }
  return out;
}

json declare(const std::vector<Variable>& vars) {
  json out = json::array();
  for (const auto& v : vars) {
    json d{{"name", v.name()}, {"type", v.is_discrete() ? "discrete" : "continuous"}};
    if (v.is_discrete()) {
      d["cardinality"] = v.cardinality();
    }
    out.push_back(d);
  }
  return out;
}

json header(const std::string& name, const std::string& description) {
  return json{{"format", kModelFormat}, {"version", kModelFormatVersion}, {"name", name},
              {"description", description}};
}

}  // namespace

const StateSpaceModel& ModelDocument::state_space() const {
  if (!is_state_space()) {
    fail(ErrorCode::schema_error, "the model is a factor graph, not a state-space model");
  }
  return std::get<StateSpaceModel>(model);
}

const FactorGraphModel& ModelDocument::factor_graph() const {
  if (is_state_space()) {
    fail(ErrorCode::schema_error, "the model is a state-space model, not a factor graph");
  }
  return std::get<FactorGraphModel>(model);
}

ModelDocument parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    fail(ErrorCode::parse_error, fmt::format("line {}, column {}: malformed JSON", line, column));
  }
  const Node root{doc, ""};
  if (!doc.is_object()) {
    schema("", "expected an object");
  }
  if (root.at("format").string() != kModelFormat) {
    schema("/format", fmt::format("expected \"{}\"", kModelFormat));
  }
  if (root.at("version").count() != static_cast<std::size_t>(kModelFormatVersion)) {
    schema("/version", fmt::format("unsupported version (expected {})", kModelFormatVersion));
  }
  const std::string name = root.find("name") ? root.at("name").string() : std::string("model");
  const std::string description = root.find("description") ? root.at("description").string() : std::string();

  auto named = [&](StateSpaceModel m) {
    m.name = name;
    if (!description.empty()) {
      m.description = description;
    }
    return m;
  };

  if (const auto q = root.find("quadrant")) {
    QuadrantConfig cfg = parse_quadrant(*q);
    auto model = config_guarded(q->path, [&] { return quadrant_model(cfg); });
    return {named(std::move(model)), cfg};
  }
  if (const auto lg = root.find("linear_gaussian")) {
    LinearGaussianConfig cfg{
        .transition = lg->at("transition").matrix(),
        .process_noise = lg->at("process_noise").matrix(),
        .emission = lg->at("emission").matrix(),
        .observation_noise = lg->at("observation_noise").matrix(),
        .initial_mean = lg->at("initial_mean").vector(),
        .initial_covariance = lg->at("initial_covariance").matrix(),
    };
    return {named(config_guarded(lg->path, [&] { return linear_gaussian_model(cfg); })), std::nullopt};
  }
  if (const auto h = root.find("hmm")) {
    HmmConfig cfg{.prior = h->at("prior").numbers(),
                  .transition = rows(h->at("transition")),
                  .emission = rows(h->at("emission"))};
    return {named(config_guarded(h->path, [&] { return hmm_model(cfg); })), std::nullopt};
  }

  Resolver resolve;
  std::vector<Variable> variables;
  const Node vars = root.at("variables");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const Node v = vars[i];
    const std::string vname = v.at("name").string();
    const std::string type = v.at("type").string();
    Variable var = guarded(v.path, [&] {
      if (type == "discrete") {
        return Variable::discrete(vname, v.at("cardinality").count());
      }
      if (type == "continuous") {
        return Variable::continuous(vname);
      }
      schema(v.path + "/type", "expected \"discrete\" or \"continuous\"");
    });
    if (!resolve.declared.emplace(vname, var).second) {
      schema(v.path + "/name", "duplicate variable '" + vname + "'");
    }
    variables.push_back(var);
  }

  if (const auto dbn = root.find("state_space")) {
    resolve.state = resolve.scope(dbn->at("state"));
    StateSpaceModel m{
        .name = name,
        .description = description,
        .state = resolve.state,
        .observed = resolve.scope(dbn->at("observed")),
        .prior = resolve.factor(dbn->at("prior")),
        .transition = resolve.factor(dbn->at("transition")),
        .observation = resolve.factor(dbn->at("observation")),
    };
    m.validate();
    return {std::move(m), std::nullopt};
  }

  FactorGraphModel m{.name = name, .description = description, .variables = variables, .factors = {}};
  const Node factors = root.at("factors");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    m.factors.push_back(resolve.factor(factors[i]));
  }
  m.validate();
  return {std::move(m), std::nullopt};
}

ModelDocument load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::parse_error, "cannot read model file '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_model(text.str());
}

std::string serialize_model(const FactorGraphModel& model) {
  json out = header(model.name, model.description);
  out["variables"] = declare(model.variables);
  json factors = json::array();
  for (const auto& f : model.factors) {
    factors.push_back(to_json(f));
  }
  out["factors"] = factors;
  return out.dump(2) + "\n";
}

std::string serialize_model(const StateSpaceModel& model) {
  json out = header(model.name, model.description);
  std::vector<Variable> vars = model.state.vars();
  vars.insert(vars.end(), model.observed.begin(), model.observed.end());
  out["variables"] = declare(vars);
  out["state_space"] = json{{"state", names(model.state)},
                            {"observed", names(model.observed)},
                            {"prior", to_json(model.prior)},
                            {"transition", to_json(model.transition)},
                            {"observation", to_json(model.observation)}};
  return out.dump(2) + "\n";
}

std::string serialize_model(const ModelDocument& doc) {
  return std::visit([](const auto& m) { return serialize_model(m); }, doc.model);
}

}  // namespace polyfactor
