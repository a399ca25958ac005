#include "gla/fixtures.hpp"

#include <cmath>
#include <sstream>

namespace gla {

namespace {

SeqTensor sample(SplitMix64& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  std::vector<double> data(rows * cols);
  for (double& x : data) x = rng.uniform(lo, hi);
  return SeqTensor(rows, cols, std::move(data));
}

SeqTensor sample_log_gates(SplitMix64& rng, std::size_t rows, std::size_t cols, double floor) {
  const double log_floor = std::log(floor);
  std::vector<double> data(rows * cols);
  for (double& x : data) x = log_floor * rng.uniform();
  return SeqTensor(rows, cols, std::move(data));
}

}  // namespace

ModelKind parse_model_kind(std::string_view text) {
  if (text == "vanilla") return ModelKind::vanilla();
  if (text == "gla_beta_one") return ModelKind::gla_beta_one();
  if (text == "general") return ModelKind::general();
  if (text == "retnet") return ModelKind::retnet(0.9);
  if (text.starts_with("retnet(") && text.ends_with(")")) {
    const std::string inner(text.substr(7, text.size() - 8));
    std::size_t used = 0;
    double gamma = 0.0;
    try {
      gamma = std::stod(inner, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != inner.size()) {
      throw DomainError("bad retnet decay in '" + std::string(text) + "'");
    }
    return ModelKind::retnet(gamma);
  }
  throw DomainError("unknown model kind '" + std::string(text) +
                    "' (expected vanilla, retnet(gamma), gla_beta_one or general)");
}

std::string to_string(const ModelKind& kind) {
  switch (kind.tag) {
    case ModelKind::Tag::vanilla:
      return "vanilla";
    case ModelKind::Tag::gla_beta_one:
      return "gla_beta_one";
    case ModelKind::Tag::general:
      return "general";
    case ModelKind::Tag::retnet: {
      std::ostringstream os;
      os.precision(17);
      os << "retnet(" << kind.gamma << ")";
      return os.str();
    }
  }
  return "general";
}

GlaInstance make_instance(const ModelKind& kind, std::size_t L, std::size_t dk, std::size_t dv,
                          std::uint64_t seed, double gate_floor) {
  if (L == 0 || dk == 0 || dv == 0) throw ShapeError("instance dimensions must be at least 1");
  if (!(gate_floor > 0.0 && gate_floor <= 1.0)) {
    throw DomainError("gate_floor must lie in (0, 1]");
  }
  if (kind.tag == ModelKind::Tag::retnet && !(kind.gamma > 0.0 && kind.gamma < 1.0)) {
    throw DomainError("retnet decay must lie strictly inside (0, 1)");
  }
  SplitMix64 rng(seed);
  SeqTensor q = sample(rng, L, dk, -1.0, 1.0);
  SeqTensor k = sample(rng, L, dk, -1.0, 1.0);
  SeqTensor v = sample(rng, L, dv, -1.0, 1.0);
  SeqTensor log_alpha = SeqTensor::zeros(L, dk);
  SeqTensor log_beta = SeqTensor::zeros(L, dv);
  switch (kind.tag) {
    case ModelKind::Tag::vanilla:
      break;
    case ModelKind::Tag::retnet:
      log_alpha = SeqTensor(L, dk, std::vector<double>(L * dk, std::log(kind.gamma)));
      break;
    case ModelKind::Tag::gla_beta_one:
      log_alpha = sample_log_gates(rng, L, dk, gate_floor);
      break;
    case ModelKind::Tag::general:
      log_alpha = sample_log_gates(rng, L, dk, gate_floor);
      log_beta = sample_log_gates(rng, L, dv, gate_floor);
      break;
  }
  return GlaInstance(std::move(q), std::move(k), std::move(v),
                     GateSeq(std::move(log_alpha), std::move(log_beta)));
}

SeqTensor make_cotangent(std::size_t L, std::size_t dv, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return sample(rng, L, dv, -1.0, 1.0);
}

}  // namespace gla
