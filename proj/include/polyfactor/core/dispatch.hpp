#ifndef POLYFACTOR_CORE_DISPATCH_HPP
#define POLYFACTOR_CORE_DISPATCH_HPP

#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "polyfactor/core/factor.hpp"

namespace polyfactor {

enum class BinaryOp { multiply, divide, add };

std::string_view to_string(BinaryOp op) noexcept;

using BinaryKernel = std::function<Factor(const Factor&, const Factor&)>;
using Promotion = std::function<Factor(const Factor&)>;

/// Registry of binary-operation kernels keyed on the ordered pair of representation tags.
///
/// Resolution order for op(f, g):
///   1. a kernel registered for (tag f, tag g);
///   2. for multiply/add, a kernel for (tag g, tag f) applied to swapped arguments;
///   3. scalar rules: multiplication by, or division by, an empty-scope factor;
///   4. one promotion step of either argument followed by 1-2;
///   5. otherwise UnsupportedPair.
class DispatchRegistry {
 public:
  /// Process-wide registry, populated with the built-in representations on first use.
  static DispatchRegistry& global();

  DispatchRegistry() = default;

  void register_kernel(BinaryOp op, std::string lhs, std::string rhs, BinaryKernel kernel);
  void register_promotion(std::string from, std::string to, Promotion promotion);

  [[nodiscard]] bool has_kernel(BinaryOp op, std::string_view lhs, std::string_view rhs) const;
  [[nodiscard]] Factor apply(BinaryOp op, const Factor& lhs, const Factor& rhs) const;

  [[nodiscard]] std::vector<std::tuple<BinaryOp, std::string, std::string>> kernels() const;

 private:
  using Key = std::tuple<BinaryOp, std::string, std::string>;

  [[nodiscard]] const BinaryKernel* find(BinaryOp op, std::string_view lhs, std::string_view rhs) const;
  [[nodiscard]] std::optional<Factor> try_direct(BinaryOp op, const Factor& lhs, const Factor& rhs) const;

  mutable std::shared_mutex mutex_;
  std::map<Key, BinaryKernel, std::less<>> kernels_;
  std::multimap<std::string, std::pair<std::string, Promotion>, std::less<>> promotions_;
};

/// Installs the kernels of every representation shipped with the library.
void register_builtin_kernels(DispatchRegistry& registry);

}  // namespace polyfactor

#endif
