#ifndef POLYFACTOR_TESTS_ORACLES_ENUMERATION_HPP
#define POLYFACTOR_TESTS_ORACLES_ENUMERATION_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <vector>

// Brute-force enumeration over small discrete models held as plain arrays.

namespace polyfactor::oracle {

struct PlainFactor {
  std::vector<int> vars;       // variable indices, first varies slowest
  std::vector<double> values;  // row-major over vars
};

struct PlainModel {
  std::vector<int> cardinality;
  std::vector<PlainFactor> factors;
};

inline double plain_value(const PlainFactor& f, const std::vector<int>& state, const std::vector<int>& card) {
  std::size_t index = 0;
  for (int v : f.vars) {
    index = index * static_cast<std::size_t>(card[v]) + static_cast<std::size_t>(state[v]);
  }
  return f.values[index];
}

/// Calls fn(state, joint value) for every joint state.
inline void for_each_state(const PlainModel& m, const std::function<void(const std::vector<int>&, double)>& fn) {
  std::vector<int> state(m.cardinality.size(), 0);
  while (true) {
    double p = 1.0;
    for (const auto& f : m.factors) {
      p *= plain_value(f, state, m.cardinality);
    }
    fn(state, p);
    std::size_t k = state.size();
    while (k > 0) {
      --k;
      if (++state[k] < m.cardinality[k]) {
        break;
      }
      state[k] = 0;
      if (k == 0) {
        return;
      }
    }
    if (state.empty()) {
      return;
    }
  }
}

/// Normalized posterior over `query` (row-major, first query variable slowest) given
/// evidence (variable index → state).
inline std::vector<double> enumerate_posterior(const PlainModel& m, const std::vector<int>& query,
                                               const std::map<int, int>& evidence) {
  std::size_t size = 1;
  for (int q : query) {
    size *= static_cast<std::size_t>(m.cardinality[q]);
  }
  std::vector<double> out(size, 0.0);
  for_each_state(m, [&](const std::vector<int>& state, double p) {
    for (const auto& [v, s] : evidence) {
      if (state[v] != s) {
        return;
      }
    }
    std::size_t index = 0;
    for (int q : query) {
      index = index * static_cast<std::size_t>(m.cardinality[q]) + static_cast<std::size_t>(state[q]);
    }
    out[index] += p;
  });
  double total = 0.0;
  for (double v : out) {
    total += v;
  }
  for (double& v : out) {
    v /= total;
  }
  return out;
}

/// Discrete HMM: pi[i], trans[i][j] = P(x_t = j | x_{t−1} = i), emit[i][k] = P(y = k | x = i).
/// The chain starts at x₀ ~ pi with observations y_1..y_T.
struct PlainHmm {
  std::vector<double> pi;
  std::vector<std::vector<double>> trans;
  std::vector<std::vector<double>> emit;
};

/// ln p(y_{1:T}) summed over all state paths x_{0:T}.
inline double hmm_path_log_likelihood(const PlainHmm& h, const std::vector<int>& ys) {
  const int n = static_cast<int>(h.pi.size());
  const std::size_t steps = ys.size() + 1;
  std::vector<int> path(steps, 0);
  double total = 0.0;
  while (true) {
    double p = h.pi[path[0]];
    for (std::size_t t = 1; t < steps; ++t) {
      p *= h.trans[path[t - 1]][path[t]] * h.emit[path[t]][ys[t - 1]];
    }
    total += p;
    std::size_t k = steps;
    bool done = true;
    while (k-- > 0) {
      if (++path[k] < n) {
        done = false;
        break;
      }
      path[k] = 0;
    }
    if (done) {
      break;
    }
  }
  return std::log(total);
}

/// P(x_t = i | y_{1:upto}) for t = 1..T by path enumeration; `upto` = T gives smoothing.
inline std::vector<std::vector<double>> hmm_path_marginals(const PlainHmm& h, const std::vector<int>& ys,
                                                           std::size_t upto) {
  const int n = static_cast<int>(h.pi.size());
  const std::size_t steps = ys.size() + 1;
  std::vector<std::vector<double>> out(ys.size(), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  std::vector<int> path(steps, 0);
  while (true) {
    double p = h.pi[path[0]];
    for (std::size_t t = 1; t < steps; ++t) {
      p *= h.trans[path[t - 1]][path[t]];
      if (t <= upto) {
        p *= h.emit[path[t]][ys[t - 1]];
      }
    }
    for (std::size_t t = 1; t < steps; ++t) {
      out[t - 1][static_cast<std::size_t>(path[t])] += p;
    }
    std::size_t k = steps;
    bool done = true;
    while (k-- > 0) {
      if (++path[k] < n) {
        done = false;
        break;
      }
      path[k] = 0;
    }
    if (done) {
      break;
    }
  }
  for (auto& row : out) {
    double total = 0.0;
    for (double v : row) {
      total += v;
    }
    for (double& v : row) {
      v /= total;
    }
  }
  return out;
}

}  // namespace polyfactor::oracle

#endif
