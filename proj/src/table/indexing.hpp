#ifndef POLYFACTOR_SRC_TABLE_INDEXING_HPP
#define POLYFACTOR_SRC_TABLE_INDEXING_HPP

#include <cstddef>
#include <vector>

#include "polyfactor/core/scope.hpp"

namespace polyfactor::detail {

/// Strides of `target`'s layout seen from the variables of `iter` (0 where a variable is absent).
inline std::vector<std::size_t> strides_along(const Scope& iter, const Scope& target,
                                              const std::vector<std::size_t>& target_strides) {
  std::vector<std::size_t> out(iter.size(), 0);
  for (std::size_t i = 0; i < iter.size(); ++i) {
    if (auto j = target.index_of(iter[i].name())) {
      out[i] = target_strides[*j];
    }
  }
  return out;
}

/// Mixed-radix counter over the joint states of a discrete scope that tracks the
/// linear offsets of the current state in several other layouts at once.
class Odometer {
 public:
  Odometer(const Scope& iter, std::vector<std::vector<std::size_t>> stride_sets)
      : counters_(iter.size(), 0), strides_(std::move(stride_sets)), offsets_(strides_.size(), 0) {
    cards_.reserve(iter.size());
    for (const auto& v : iter) {
      cards_.push_back(v.cardinality());
    }
    total_ = iter.joint_cardinality();
  }

  [[nodiscard]] bool done() const noexcept { return position_ >= total_; }
  [[nodiscard]] std::size_t position() const noexcept { return position_; }
  [[nodiscard]] std::size_t offset(std::size_t k) const noexcept { return offsets_[k]; }
  [[nodiscard]] std::size_t counter(std::size_t i) const noexcept { return counters_[i]; }

  void advance() {
    ++position_;
    for (std::size_t i = counters_.size(); i-- > 0;) {
      if (++counters_[i] < cards_[i]) {
        for (std::size_t k = 0; k < strides_.size(); ++k) {
          offsets_[k] += strides_[k][i];
        }
        return;
      }
      counters_[i] = 0;
      for (std::size_t k = 0; k < strides_.size(); ++k) {
        offsets_[k] -= strides_[k][i] * (cards_[i] - 1);
      }
    }
  }

 private:
  std::vector<std::size_t> cards_;
  std::vector<std::size_t> counters_;
  std::vector<std::vector<std::size_t>> strides_;
  std::vector<std::size_t> offsets_;
  std::size_t position_ = 0;
  std::size_t total_ = 1;
};

/// Splits a canonical linear index into per-variable state indices.
inline std::vector<std::size_t> decode(std::size_t index, const Scope& scope, const std::vector<std::size_t>& strides) {
  std::vector<std::size_t> out(scope.size());
  for (std::size_t i = 0; i < scope.size(); ++i) {
    out[i] = index / strides[i];
    index %= strides[i];
  }
  return out;
}

}  // namespace polyfactor::detail

#endif
