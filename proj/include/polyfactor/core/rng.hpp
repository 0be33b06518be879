#ifndef POLYFACTOR_CORE_RNG_HPP
#define POLYFACTOR_CORE_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace polyfactor {

/// Seedable, splittable random generator.
///
/// `split(name)` derives an independent named sub-stream from the seed alone, so the
/// same seed and the same split names always reproduce the same numbers no matter
/// how much the parent stream has been consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] Rng split(std::string_view name) const;

  double uniform();  ///< [0, 1)
  double normal();   ///< standard normal
  std::uint64_t next_u64();

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64 finalizer.
std::uint64_t mix_seed(std::uint64_t x) noexcept;
/// Deterministic derivation of a child seed from a parent seed and a label.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept;

}  // namespace polyfactor

#endif
