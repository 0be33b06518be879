#ifndef POLYFACTOR_TESTS_SUPPORT_RANDOM_NETWORK_HPP
#define POLYFACTOR_TESTS_SUPPORT_RANDOM_NETWORK_HPP

#include <random>
#include <string>
#include <vector>

#include <polyfactor/core/operations.hpp>
#include <polyfactor/inference/model.hpp>
#include <polyfactor/table/table_factor.hpp>

#include "oracles/enumeration.hpp"

namespace polyfactor::testing {

// Discrete models as plain arrays plus their library counterparts.

struct RandomNetwork {
  oracle::PlainModel plain;
  FactorGraphModel model;
};

inline std::string var_name(int i) { return "V" + std::to_string(i); }

inline RandomNetwork random_network(std::mt19937_64& gen, int n) {
  RandomNetwork net;
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::vector<Variable> vars;
  for (int i = 0; i < n; ++i) {
    vars.push_back(Variable::discrete(var_name(i), 2));
    net.plain.cardinality.push_back(2);
  }
  net.model.variables = vars;
  for (int i = 0; i < n; ++i) {
    oracle::PlainFactor f;
    for (int p = 0; p < i; ++p) {
      if (f.vars.size() < 2 && std::bernoulli_distribution(0.4)(gen)) {
        f.vars.push_back(p);
      }
    }
    f.vars.push_back(i);
    const std::size_t rows = std::size_t{1} << (f.vars.size() - 1);
    for (std::size_t r = 0; r < rows; ++r) {
      const double p = unit(gen);
      f.values.push_back(p);
      f.values.push_back(1.0 - p + 0.01);
    }
    std::vector<Variable> scope;
    for (int v : f.vars) {
      scope.push_back(vars[static_cast<std::size_t>(v)]);
    }
    net.model.factors.push_back(TableFactor::make(scope, f.values));
    net.plain.factors.push_back(std::move(f));
  }
  return net;
}

// Posterior table values in the oracle's layout (query variables in the given order).
inline std::vector<double> library_posterior(const Factor& post, const std::vector<int>& query) {
  std::vector<double> out;
  std::size_t size = std::size_t{1} << query.size();
  for (std::size_t index = 0; index < size; ++index) {
    Assignment a;
    for (std::size_t k = 0; k < query.size(); ++k) {
      const std::size_t bit = (index >> (query.size() - 1 - k)) & 1u;
      a.set(var_name(query[k]), static_cast<double>(bit));
    }
    out.push_back(evaluate(post, a));
  }
  return out;
}

}  // namespace polyfactor::testing

#endif
