#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gla/chunkwise.hpp"
#include "gla/instance.hpp"

namespace gla {

struct CheckReport {
  std::string name;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;  // max_rel_err <= tolerance
  std::chrono::duration<double> elapsed{0.0};
  std::string note;
};

CheckReport compare(std::string name, const SeqTensor& actual, const SeqTensor& expected,
                    double tolerance, std::chrono::duration<double> elapsed = {});

// "name max_rel_err=... max_abs_err=... tol=... PASS"
std::string format_report(const CheckReport& report);

// Parallel and chunkwise (each size in the sweep, both policies) against the
// recurrent form, plus materialize vs. recompute for each size.
std::vector<CheckReport> check_equivalence(const GlaInstance& inst,
                                           const std::vector<std::size_t>& chunk_sizes,
                                           double tolerance);

struct GradcheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-6;
  std::vector<std::size_t> chunk_sizes;  // empty: a single chunk of ceil(L/2)
  BackwardOptions backward;
};

// Gate entries above -2*eps are moved to -2*eps first so central differences
// stay inside the gate domain; every pass is evaluated at that shifted point.
GlaInstance shift_gates_for_fd(const GlaInstance& inst, double eps);

// Every analytic backward pass against the finite-difference oracle, one
// report per tensor per implementation.
std::vector<CheckReport> check_gradients(const GlaInstance& inst, const SeqTensor& d_out,
                                         const GradcheckOptions& options = {});

struct CausalityOptions {
  std::uint64_t seed = 0;
  // Number of leading positions that must stay unchanged; sampled when unset.
  std::optional<std::size_t> prefix;
  std::size_t chunk = 4;
  double tolerance = 1e-12;
};

// Perturbs every input at positions >= prefix and checks o_0 .. o_{prefix-1}:
// bitwise for the recurrent form, within tolerance for the others.
CheckReport check_causality(const GlaInstance& inst, const CausalityOptions& options = {});

}  // namespace gla
