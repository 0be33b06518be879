#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "polyfactor/cli/cli.hpp"
#include "polyfactor/core/operations.hpp"
#include "polyfactor/inference/elimination.hpp"
#include "polyfactor/inference/representation.hpp"
#include "polyfactor/inference/summary.hpp"
#include "polyfactor/models/model_file.hpp"
#include "polyfactor/models/models.hpp"
#include "polyfactor/sample/sample_factor.hpp"

namespace polyfactor::cli {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

ModelDocument load(const Json& args) { return load_model(args.at("model").get<std::string>()); }

Simulation load_data(const Json& args, const StateSpaceModel& model) {
  std::istringstream in(read_file(args.at("data").get<std::string>()));
  Simulation data = read_simulation_csv(in, model);
  if (data.observations.empty()) {
    fail(ErrorCode::invalid_argument, "the data file has no rows");
  }
  return data;
}

RunSettings settings_from(const Json& args, Representation rep) {
  RunSettings s;
  s.representation = rep;
  s.particles = args.at("particles").get<std::size_t>();
  s.seed = args.at("seed").get<std::uint64_t>();
  const Json& p = args.at("policy");
  s.policy.moment_match = p.at("moment_match").get<bool>();
  s.policy.resample = p.at("resample").get<bool>();
  s.policy.ess_fraction = p.at("ess_fraction").get<double>();
  return s;
}

std::string render(const Table& table, const Json& args, std::string_view kind) {
  return args.value("format", "csv") == "json" ? to_json(table, kind) : to_csv(table);
}

const Variable& declared(const Scope& scope, const std::string& name) {
  const Variable* v = scope.find(name);
  if (v == nullptr) {
    fail(ErrorCode::missing_variable, "unknown variable '" + name + "'");
  }
  return *v;
}

std::vector<Output> query(const Json& args) {
  const ModelDocument doc = load(args);
  const FactorGraphModel& model = doc.factor_graph();
  const Scope declared_scope = model.scope();
  std::vector<Variable> vars;
  for (const auto& name : args.at("query")) {
    vars.push_back(declared(declared_scope, name.get<std::string>()));
  }
  Assignment evidence;
  for (const auto& [name, value] : args.at("evidence").items()) {
    const Variable& v = declared(declared_scope, name);
    check_value(v, value.get<double>());
    evidence.set(name, value.get<double>());
  }
  const Factor posterior = variable_elimination(model, Scope(vars), evidence);
  const Scope& scope = posterior.scope();

  Table table;
  if (scope.all_discrete()) {
    for (const auto& v : scope) {
      table.columns.push_back(v.name());
    }
    table.columns.emplace_back("probability");
    table.index_columns = scope.size();
    std::vector<std::size_t> state(scope.size(), 0);
    while (true) {
      Assignment a;
      std::vector<double> row;
      for (std::size_t i = 0; i < scope.size(); ++i) {
        a.set(scope[i].name(), static_cast<double>(state[i]));
        row.push_back(static_cast<double>(state[i]));
      }
      row.push_back(evaluate(posterior, a));
      table.rows.push_back(std::move(row));
      std::size_t i = scope.size();
      while (i > 0 && ++state[i - 1] == scope[i - 1].cardinality()) {
        state[--i] = 0;
      }
      if (i == 0) {
        break;
      }
    }
  } else {
    table = trajectory_table(scope, {posterior}, {});
    table.columns.erase(table.columns.begin());
    table.rows.front().erase(table.rows.front().begin());
    table.index_columns = 0;
  }
  return {{"output", render(table, args, "query")}};
}

std::vector<Output> filter_or_smooth(const Json& args, bool smoothing) {
  const ModelDocument doc = load(args);
  const StateSpaceModel& model = doc.state_space();
  const Simulation data = load_data(args, model);
  const Representation rep = parse_representation(args.at("representation").get<std::string>());
  check_representation(model, rep);
  const RunSettings settings = settings_from(args, rep);
  if (!smoothing) {
    const FilterResult result = run_filter(model, data.observations, settings);
    return {{"output", render(trajectory_table(model.state, result.posteriors, result.log_likelihoods), args, "filter")}};
  }
  if (is_particle(rep)) {
    fail(ErrorCode::unsupported, fmt::format("smoothing is not available for the {} representation", to_string(rep)));
  }
  const std::vector<Factor> smoothed = smooth(model, data.observations, settings.policy);
  return {{"output", render(trajectory_table(model.state, smoothed, {}), args, "smooth")}};
}

std::vector<Output> simulate_command(const Json& args) {
  const ModelDocument doc = load(args);
  const StateSpaceModel& model = doc.state_space();
  const Simulation sim = simulate(model, args.at("steps").get<std::size_t>(), args.at("seed").get<std::uint64_t>());
  std::ostringstream out;
  write_simulation_csv(out, model, sim);
  return {{"output", out.str()}};
}

struct RepRun {
  std::string label;
  Representation rep;
  Table table;
  std::vector<std::vector<double>> se;  // per step, per continuous variable
  double total_log_likelihood;
};

double squared(double x) { return x * x; }

std::vector<Output> compare(const Json& args) {
  const ModelDocument doc = load(args);
  const StateSpaceModel& model = doc.state_space();
  const Simulation data = load_data(args, model);
  const auto order = column_order(model.state);
  std::vector<Variable> continuous;
  std::vector<Variable> discrete;
  for (const auto& v : order) {
    (v.is_continuous() ? continuous : discrete).push_back(v);
  }

  std::vector<RepRun> runs;
  for (const auto& name : args.at("representations")) {
    const Representation rep = parse_representation(name.get<std::string>());
    check_representation(model, rep);
    std::string label(to_string(rep));
    std::size_t repeat = 1;
    for (const auto& r : runs) {
      repeat += r.rep == rep ? 1 : 0;
    }
    if (repeat > 1) {
      label += fmt::format("#{}", repeat);
    }
    const FilterResult result = run_filter(model, data.observations, settings_from(args, rep));
    RepRun run{label, rep, trajectory_table(model.state, result.posteriors, result.log_likelihoods), {},
               result.total_log_likelihood};
    if (is_particle(rep)) {
      for (const auto& posterior : result.posteriors) {
        const auto& s = posterior.get<SampleFactor>();
        const double ess = effective_sample_size(s);
        const PosteriorSummary summary = summarize(posterior);
        std::vector<double> se;
        for (const auto& v : continuous) {
          se.push_back(std::sqrt(summary.variance.at(v.name()) / ess));
        }
        run.se.push_back(std::move(se));
      }
    }
    runs.push_back(std::move(run));
  }

  const std::size_t steps = data.observations.size();
  const std::size_t n_cont = continuous.size();
  const auto mean_of = [&](const RepRun& r, std::size_t t, std::size_t i) { return r.table.rows[t][1 + i]; };
  const std::size_t p_offset = 1 + 2 * n_cont;

  Table table{{"t"}, {}, 1};
  for (const auto& r : runs) {
    for (std::size_t j = 1; j < r.table.columns.size(); ++j) {
      table.columns.push_back(r.label + "." + r.table.columns[j]);
    }
    if (!r.se.empty()) {
      for (const auto& v : continuous) {
        table.columns.push_back(r.label + ".se_" + lower(v.name()));
      }
    }
  }
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> row{static_cast<double>(t + 1)};
    for (const auto& r : runs) {
      row.insert(row.end(), r.table.rows[t].begin() + 1, r.table.rows[t].end());
      if (!r.se.empty()) {
        row.insert(row.end(), r.se[t].begin(), r.se[t].end());
      }
    }
    table.rows.push_back(std::move(row));
  }

  Json summary;
  summary["format"] = "polyfactor-compare-summary";
  summary["version"] = kOutputVersion;
  summary["steps"] = steps;
  Json reps = Json::array();
  for (const auto& r : runs) {
    Json entry;
    entry["label"] = r.label;
    entry["representation"] = to_string(r.rep);
    entry["particle"] = is_particle(r.rep);
    entry["negative_log_likelihood"] = -r.total_log_likelihood;
    if (!data.states.empty()) {
      if (n_cont > 0) {
        Json rmse;
        double total = 0.0;
        for (std::size_t i = 0; i < n_cont; ++i) {
          double acc = 0.0;
          for (std::size_t t = 0; t < steps; ++t) {
            acc += squared(mean_of(r, t, i) - data.states[t].at(continuous[i]));
          }
          total += acc;
          rmse[lower(continuous[i].name())] = std::sqrt(acc / static_cast<double>(steps));
        }
        rmse["overall"] = std::sqrt(total / static_cast<double>(steps * n_cont));
        entry["rmse_vs_truth"] = std::move(rmse);
      }
      Json accuracy = Json::object();
      std::size_t offset = p_offset;
      for (const auto& v : discrete) {
        std::size_t hits = 0;
        for (std::size_t t = 0; t < steps; ++t) {
          const auto& row = r.table.rows[t];
          const auto best = std::max_element(row.begin() + static_cast<std::ptrdiff_t>(offset),
                                             row.begin() + static_cast<std::ptrdiff_t>(offset + v.cardinality()));
          const auto k = static_cast<std::size_t>(best - row.begin()) - offset;
          hits += k == data.states[t].index(v) ? 1 : 0;
        }
        accuracy[lower(v.name())] = static_cast<double>(hits) / static_cast<double>(steps);
        offset += v.cardinality();
      }
      if (!discrete.empty()) {
        entry["state_accuracy"] = std::move(accuracy);
      }
    }
    reps.push_back(std::move(entry));
  }
  summary["representations"] = std::move(reps);

  Json pairs = Json::array();
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      const RepRun& ra = runs[a];
      const RepRun& rb = runs[b];
      Json pair;
      pair["a"] = ra.label;
      pair["b"] = rb.label;
      if (n_cont > 0) {
        Json rmse;
        double total = 0.0;
        double worst = 0.0;
        for (std::size_t i = 0; i < n_cont; ++i) {
          double acc = 0.0;
          for (std::size_t t = 0; t < steps; ++t) {
            const double d = mean_of(ra, t, i) - mean_of(rb, t, i);
            acc += d * d;
            worst = std::max(worst, std::abs(d));
          }
          total += acc;
          rmse[lower(continuous[i].name())] = std::sqrt(acc / static_cast<double>(steps));
        }
        rmse["overall"] = std::sqrt(total / static_cast<double>(steps * n_cont));
        pair["rmse"] = std::move(rmse);
        pair["max_abs_difference"] = worst;
        if (!ra.se.empty() || !rb.se.empty()) {
          std::size_t within = 0;
          for (std::size_t t = 0; t < steps; ++t) {
            bool ok = true;
            for (std::size_t i = 0; i < n_cont; ++i) {
              const double sa = ra.se.empty() ? 0.0 : ra.se[t][i];
              const double sb = rb.se.empty() ? 0.0 : rb.se[t][i];
              ok = ok && std::abs(mean_of(ra, t, i) - mean_of(rb, t, i)) <= 3.0 * std::sqrt(sa * sa + sb * sb);
            }
            within += ok ? 1 : 0;
          }
          pair["within_3se_fraction"] = static_cast<double>(within) / static_cast<double>(steps);
        }
      }
      if (!discrete.empty()) {
        double worst = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
          for (std::size_t j = p_offset; j + 1 < ra.table.columns.size(); ++j) {
            worst = std::max(worst, std::abs(ra.table.rows[t][j] - rb.table.rows[t][j]));
          }
        }
        pair["max_probability_difference"] = worst;
      }
      pairs.push_back(std::move(pair));
    }
  }
  summary["pairs"] = std::move(pairs);
  return {{"output", to_csv(table)}, {"summary", summary.dump(2) + "\n"}};
}

}  // namespace

std::vector<Output> execute(std::string_view command, const Json& arguments) {
  try {
    if (command == "query") {
      return query(arguments);
    }
    if (command == "filter" || command == "smooth") {
      return filter_or_smooth(arguments, command == "smooth");
    }
    if (command == "simulate") {
      return simulate_command(arguments);
    }
    if (command == "compare-reps") {
      return compare(arguments);
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::schema_error, fmt::format("arguments of '{}': {}", command, e.what()));
  }
  fail(ErrorCode::invalid_argument, fmt::format("unknown command '{}'", command));
}

}  // namespace polyfactor::cli
