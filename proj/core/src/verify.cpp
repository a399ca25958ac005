#include "gla/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gla/fixtures.hpp"
#include "gla/parallel_form.hpp"
#include "gla/recurrent.hpp"

namespace gla {

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
auto timed(F&& f, std::chrono::duration<double>& elapsed) {
  const auto start = Clock::now();
  auto result = f();
  elapsed = Clock::now() - start;
  return result;
}

CheckReport failed(std::string name, double tolerance, std::string note) {
  CheckReport r;
  r.name = std::move(name);
  r.max_abs_err = std::numeric_limits<double>::infinity();
  r.max_rel_err = std::numeric_limits<double>::infinity();
  r.tolerance = tolerance;
  r.pass = false;
  r.note = std::move(note);
  return r;
}

std::string chunk_label(std::size_t chunk, ChunkPolicy policy) {
  return "chunkwise[C=" + std::to_string(chunk) + "," + std::string(to_string(policy)) + "]";
}

SeqTensor leading_rows(const SeqTensor& t, std::size_t rows) {
  auto values = t.values();
  return SeqTensor(rows, t.cols(),
                   std::vector<double>(values.begin(), values.begin() + rows * t.cols()));
}

bool bitwise_equal(const SeqTensor& a, const SeqTensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

CheckReport compare(std::string name, const SeqTensor& actual, const SeqTensor& expected,
                    double tolerance, std::chrono::duration<double> elapsed) {
  if (!actual.same_shape(expected)) {
    return failed(std::move(name), tolerance,
                  "shape " + shape_string(actual) + " vs " + shape_string(expected));
  }
  CheckReport r;
  r.name = std::move(name);
  r.max_abs_err = max_abs_diff(actual.values(), expected.values());
  r.max_rel_err = relative_error(actual, expected);
  r.tolerance = tolerance;
  r.pass = r.max_rel_err <= tolerance;
  r.elapsed = elapsed;
  return r;
}

std::string format_report(const CheckReport& report) {
  std::ostringstream os;
  os << report.name << std::setprecision(3) << std::scientific
     << " max_rel_err=" << report.max_rel_err << " max_abs_err=" << report.max_abs_err
     << " tol=" << report.tolerance << (report.pass ? " PASS" : " FAIL");
  if (!report.note.empty()) os << " note=\"" << report.note << "\"";
  return os.str();
}

std::vector<CheckReport> check_equivalence(const GlaInstance& inst,
                                           const std::vector<std::size_t>& chunk_sizes,
                                           double tolerance) {
  std::vector<CheckReport> reports;
  const SeqTensor reference = forward_recurrent(inst).out;

  std::chrono::duration<double> elapsed{};
  try {
    SeqTensor out = timed([&] { return forward_parallel(inst); }, elapsed);
    reports.push_back(compare("parallel-vs-recurrent", out, reference, tolerance, elapsed));
  } catch (const DecayRangeError& e) {
    reports.push_back(failed("parallel-vs-recurrent", tolerance, e.what()));
  }

  for (std::size_t chunk : chunk_sizes) {
    const ChunkPlan plan(inst.length(), chunk);
    const SeqTensor mat = timed(
        [&] { return forward_chunkwise(inst, plan, ChunkPolicy::materialize).out; }, elapsed);
    reports.push_back(compare(chunk_label(chunk, ChunkPolicy::materialize) + "-vs-recurrent", mat,
                              reference, tolerance, elapsed));
    const SeqTensor rec = timed(
        [&] { return forward_chunkwise(inst, plan, ChunkPolicy::recompute).out; }, elapsed);
    reports.push_back(compare(chunk_label(chunk, ChunkPolicy::recompute) + "-vs-recurrent", rec,
                              reference, tolerance, elapsed));
    reports.push_back(compare("chunkwise[C=" + std::to_string(chunk) + "]-recompute-vs-materialize",
                              rec, mat, tolerance));
  }
  return reports;
}

GlaInstance shift_gates_for_fd(const GlaInstance& inst, double eps) {
  const double ceiling = -2.0 * eps;
  auto shift = [ceiling](const SeqTensor& t) {
    std::vector<double> data = t.to_vector();
    for (double& x : data) x = std::min(x, ceiling);
    return SeqTensor(t.rows(), t.cols(), std::move(data));
  };
  return GlaInstance(inst.q(), inst.k(), inst.v(),
                     GateSeq(shift(inst.gates().log_alpha()), shift(inst.gates().log_beta())));
}

std::vector<CheckReport> check_gradients(const GlaInstance& original, const SeqTensor& d_out,
                                         const GradcheckOptions& options) {
  const GlaInstance inst = shift_gates_for_fd(original, options.eps);
  const GradBundle oracle = backward_recurrent_fd(inst, d_out, options.eps);

  std::vector<std::pair<std::string, std::function<GradBundle()>>> passes;
  passes.emplace_back("recurrent-exact", [&] { return backward_recurrent_exact(inst, d_out); });
  passes.emplace_back("parallel",
                      [&] { return backward_parallel(inst, d_out, {}, options.backward); });
  std::vector<std::size_t> sizes = options.chunk_sizes;
  if (sizes.empty()) sizes.push_back((inst.length() + 1) / 2);
  for (std::size_t chunk : sizes) {
    for (ChunkPolicy policy : {ChunkPolicy::materialize, ChunkPolicy::recompute}) {
      passes.emplace_back(chunk_label(chunk, policy), [&inst, &d_out, &options, chunk, policy] {
        return backward_chunkwise(inst, d_out, ChunkPlan(inst.length(), chunk), policy,
                                  options.backward)
            .grads;
      });
    }
  }

  std::vector<CheckReport> reports;
  for (auto& [label, run] : passes) {
    std::chrono::duration<double> elapsed{};
    GradBundle grads;
    try {
      grads = timed(run, elapsed);
    } catch (const std::exception& e) {
      for (const char* tensor : {"dq", "dk", "dv", "dlog_alpha", "dlog_beta"})
        reports.push_back(failed("gradcheck/" + label + "/" + tensor, options.tolerance, e.what()));
      continue;
    }
    const std::pair<const char*, std::pair<const SeqTensor*, const SeqTensor*>> tensors[] = {
        {"dq", {&grads.dq, &oracle.dq}},
        {"dk", {&grads.dk, &oracle.dk}},
        {"dv", {&grads.dv, &oracle.dv}},
        {"dlog_alpha", {&grads.dlog_alpha, &oracle.dlog_alpha}},
        {"dlog_beta", {&grads.dlog_beta, &oracle.dlog_beta}},
    };
    for (const auto& [tensor, pair] : tensors) {
      reports.push_back(compare("gradcheck/" + label + "/" + tensor, *pair.first, *pair.second,
                                options.tolerance, elapsed));
    }
  }
  return reports;
}

CheckReport check_causality(const GlaInstance& inst, const CausalityOptions& options) {
  const std::size_t L = inst.length();
  const std::string name = "causality";
  if (L < 2) return failed(name, options.tolerance, "needs at least two positions");
  SplitMix64 rng(options.seed);
  std::size_t prefix = options.prefix.value_or(1 + rng.next() % (L - 1));
  if (prefix == 0 || prefix >= L) {
    return failed(name, options.tolerance, "prefix must lie in [1, L-1]");
  }

  auto perturb = [&](const SeqTensor& t, bool gate) {
    std::vector<double> data = t.to_vector();
    for (std::size_t i = prefix * t.cols(); i < data.size(); ++i)
      data[i] = gate ? std::log(0.5) * rng.uniform() : rng.uniform(-1.0, 1.0);
    return SeqTensor(t.rows(), t.cols(), std::move(data));
  };
  const GlaInstance changed(perturb(inst.q(), false), perturb(inst.k(), false),
                            perturb(inst.v(), false),
                            GateSeq(perturb(inst.gates().log_alpha(), true),
                                    perturb(inst.gates().log_beta(), true)));

  const auto start = Clock::now();
  const ChunkPlan plan(L, std::max<std::size_t>(1, options.chunk));
  std::vector<std::function<SeqTensor(const GlaInstance&)>> forms = {
      [&](const GlaInstance& x) { return forward_chunkwise(x, plan, ChunkPolicy::materialize).out; },
      [&](const GlaInstance& x) { return forward_chunkwise(x, plan, ChunkPolicy::recompute).out; },
      [](const GlaInstance& x) { return forward_parallel(x); },
  };

  CheckReport report;
  report.name = name + "[prefix=" + std::to_string(prefix) + "]";
  report.tolerance = options.tolerance;
  const SeqTensor base = leading_rows(forward_recurrent(inst).out, prefix);
  const SeqTensor after = leading_rows(forward_recurrent(changed).out, prefix);
  const bool recurrent_exact = bitwise_equal(base, after);
  for (const auto& form : forms) {
    try {
      const SeqTensor a = leading_rows(form(inst), prefix);
      const SeqTensor b = leading_rows(form(changed), prefix);
      report.max_abs_err = std::max(report.max_abs_err, max_abs_diff(a.values(), b.values()));
      report.max_rel_err = std::max(report.max_rel_err, relative_error(a, b));
    } catch (const DecayRangeError& e) {
      report.note = e.what();
    }
  }
  if (!recurrent_exact) {
    report.max_rel_err = std::numeric_limits<double>::infinity();
    report.note = "recurrent prefix changed";
  }
  report.pass = report.max_rel_err <= report.tolerance;
  report.elapsed = Clock::now() - start;
  return report;
}

}  // namespace gla
