#include "polyfactor/inference/elimination.hpp"

#include <map>
#include <set>

#include "polyfactor/core/operations.hpp"
#include "polyfactor/table/table_factor.hpp"

namespace polyfactor {

namespace {

using Graph = std::map<std::string, std::set<std::string>, std::less<>>;

std::size_t fill_in(const Graph& g, const std::string& v) {
  const auto& nb = g.at(v);
  std::size_t missing = 0;
  for (auto a = nb.begin(); a != nb.end(); ++a) {
    for (auto b = std::next(a); b != nb.end(); ++b) {
      if (g.at(*a).count(*b) == 0) {
        ++missing;
      }
    }
  }
  return missing;
}

void check_query(const FactorGraphModel& model, const Scope& query, const Assignment& evidence) {
  if (query.empty()) {
    fail(ErrorCode::empty_query, "the query scope is empty");
  }
  const Scope declared = model.scope();
  for (const auto& v : query) {
    if (!declared.contains(v.name())) {
      fail(ErrorCode::missing_variable, "query variable '" + v.name() + "' is not declared by the model");
    }
    if (evidence.contains(v.name())) {
      fail(ErrorCode::invalid_argument, "query variable '" + v.name() + "' is also observed");
    }
  }
  for (const auto& [name, value] : evidence.entries()) {
    const Variable* v = declared.find(name);
    if (v == nullptr) {
      fail(ErrorCode::missing_variable, "evidence variable '" + name + "' is not declared by the model");
    }
    check_value(*v, value);
  }
}

}  // namespace

std::vector<Variable> elimination_order(const FactorGraphModel& model, const Scope& query, const Assignment& evidence) {
  Graph g;
  for (const auto& v : model.variables) {
    if (!evidence.contains(v.name())) {
      g[v.name()];
    }
  }
  for (const auto& f : model.factors) {
    std::vector<std::string> clique;
    for (const auto& v : f.scope()) {
      if (!evidence.contains(v.name())) {
        clique.push_back(v.name());
      }
    }
    for (const auto& a : clique) {
      for (const auto& b : clique) {
        if (a != b) {
          g[a].insert(b);
        }
      }
    }
  }

  const Scope declared = model.scope();
  std::set<std::string, std::less<>> remaining;
  for (const auto& [name, nb] : g) {
    if (!query.contains(name)) {
      remaining.insert(name);
    }
  }
  std::vector<Variable> order;
  while (!remaining.empty()) {
    const std::string* best = nullptr;
    std::size_t best_fill = 0;
    for (const auto& name : remaining) {
      const std::size_t fill = fill_in(g, name);
      if (best == nullptr || fill < best_fill) {
        best = &name;
        best_fill = fill;
      }
    }
    const std::string v = *best;
    const auto nb = g.at(v);
    for (const auto& a : nb) {
      g[a].erase(v);
      for (const auto& b : nb) {
        if (a != b) {
          g[a].insert(b);
        }
      }
    }
    g.erase(v);
    remaining.erase(v);
    order.push_back(*declared.find(v));
  }
  return order;
}

Factor variable_elimination(const FactorGraphModel& model, const Scope& query, const Assignment& evidence,
                            const std::optional<std::vector<Variable>>& order) {
  check_query(model, query, evidence);
  const std::vector<Variable> elim = order ? *order : elimination_order(model, query, evidence);
  if (order) {
    const auto expected = elimination_order(model, query, evidence);
    if (Scope(*order) != Scope(expected)) {
      fail(ErrorCode::invalid_argument, "elimination order " + Scope(*order).to_string() + " must cover exactly " +
                                            Scope(expected).to_string());
    }
  }

  std::vector<Factor> pool;
  pool.reserve(model.factors.size());
  for (const auto& f : model.factors) {
    pool.push_back(reduce(f, evidence));
  }

  for (const auto& v : elim) {
    std::vector<Factor> keep;
    std::optional<Factor> product;
    for (auto& f : pool) {
      if (f.scope().contains(v.name())) {
        product = product ? multiply(*product, f) : f;
      } else {
        keep.push_back(std::move(f));
      }
    }
    if (product) {
      keep.push_back(sum_out(*product, Scope{v}));
    }
    pool = std::move(keep);
  }

  Factor result = TableFactor::scalar(1.0);
  for (const auto& f : pool) {
    result = multiply(result, f);
  }
  const Scope missing = query.minus(result.scope());
  if (!missing.empty()) {
    if (!missing.all_discrete()) {
      fail(ErrorCode::not_normalizable,
           "continuous query variables " + missing.continuous_part().to_string() + " appear in no factor");
    }
    result = multiply(result, TableFactor::filled(missing, 1.0));
  }
  return normalize(result);
}

}  // namespace polyfactor
