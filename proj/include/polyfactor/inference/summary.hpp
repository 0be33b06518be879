#ifndef POLYFACTOR_INFERENCE_SUMMARY_HPP
#define POLYFACTOR_INFERENCE_SUMMARY_HPP

#include <map>
#include <string>
#include <vector>

#include "polyfactor/core/factor.hpp"

namespace polyfactor {

/// Per-variable view of a posterior: means and variances of the continuous variables
/// and marginal distributions of the discrete ones, all keyed by name.
struct PosteriorSummary {
  std::map<std::string, double> mean;
  std::map<std::string, double> variance;
  std::map<std::string, std::vector<double>> marginal;
};

/// Summarizes a normalizable factor of any representation; particle factors use
/// their weighted estimates. ZeroMass when the factor has no mass.
[[nodiscard]] PosteriorSummary summarize(const Factor& posterior);

}  // namespace polyfactor

#endif
