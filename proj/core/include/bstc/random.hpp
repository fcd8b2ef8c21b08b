#pragma once

#include <cstdint>
#include <random>

namespace bstc {

/// Random stream owned by a single chain. Streams are derived from a
/// (seed, stream index) pair so that independent chains never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream `index` of the family rooted at `seed`.
  static Rng derive(std::uint64_t seed, std::uint64_t index);

  double uniform();  // open interval (0, 1)
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma with shape/rate parameterisation.
  double gamma(double shape, double rate);
  /// Inverse-gamma with shape/scale: mean scale / (shape - 1).
  double inv_gamma(double shape, double scale);
  double beta(double a, double b);
  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bstc
