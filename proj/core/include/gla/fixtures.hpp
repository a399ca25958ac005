#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "gla/instance.hpp"

namespace gla {

// SplitMix64 stream. Reproducible in any language from the seed alone.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Top 53 bits mapped to [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

struct ModelKind {
  enum class Tag { vanilla, retnet, gla_beta_one, general };
  Tag tag = Tag::general;
  double gamma = 0.9;  // retnet only, strictly inside (0, 1)

  static ModelKind vanilla() { return {Tag::vanilla, 0.0}; }
  static ModelKind retnet(double gamma) { return {Tag::retnet, gamma}; }
  static ModelKind gla_beta_one() { return {Tag::gla_beta_one, 0.0}; }
  static ModelKind general() { return {Tag::general, 0.0}; }
};

// "vanilla", "retnet", "retnet(0.9)", "gla_beta_one", "general".
ModelKind parse_model_kind(std::string_view text);
std::string to_string(const ModelKind& kind);

// Q, K, V are i.i.d. uniform in [-1, 1) drawn in that order (row-major); the
// sampled log-gates follow, uniform in (ln gate_floor, 0].
//   vanilla      log_alpha = log_beta = 0
//   retnet       log_alpha = ln gamma, log_beta = 0
//   gla_beta_one log_alpha sampled, log_beta = 0
//   general      both sampled
GlaInstance make_instance(const ModelKind& kind, std::size_t L, std::size_t dk, std::size_t dv,
                          std::uint64_t seed, double gate_floor = 0.5);

// Output cotangent dO, uniform in [-1, 1).
SeqTensor make_cotangent(std::size_t L, std::size_t dv, std::uint64_t seed);

}  // namespace gla
