#include "polyfactor/core/dispatch.hpp"
#include "polyfactor/gaussian/canonical_gaussian.hpp"
#include "polyfactor/hybrid/conditional_factor.hpp"
#include "polyfactor/sample/sample_factor.hpp"
#include "polyfactor/table/table_factor.hpp"

namespace polyfactor {

void register_builtin_kernels(DispatchRegistry& registry) {
  register_table_kernels(registry);
  register_gaussian_kernels(registry);
  register_hybrid_kernels(registry);
  register_sample_kernels(registry);
}

}  // namespace polyfactor
