#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gla/gla.hpp"
#include "oracles.hpp"

namespace {

using namespace gla;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << x;
  return os.str();
}

// Tracks the worst error seen against a tolerance.
struct Worst {
  double tolerance;
  double err = 0.0;
  std::string where;
  bool ok = true;

  void add(double e, const std::string& label) {
    if (e > err || std::isnan(e)) {
      err = e;
      where = label;
    }
    if (!(e <= tolerance)) ok = false;
  }
};

std::string worst_text(const Worst& w) {
  return "worst=" + sci(w.err) + " tol=" + sci(w.tolerance) +
         (w.where.empty() ? "" : " at " + w.where);
}

std::size_t non_divisor(std::size_t L) {
  for (std::size_t c = 2;; ++c)
    if (L % c != 0) return c;
}

Outcome three_form_equivalence() {
  const std::size_t lengths[] = {1, 2, 7, 32, 64, 256};
  const std::size_t dims[] = {1, 3, 8, 16};
  SplitMix64 pick(2024);
  Worst worst{1e-9};
  std::size_t failed = 0, checks = 0;
  const auto start = Clock::now();
  for (std::uint64_t i = 0; i < 50; ++i) {
    const std::size_t L = lengths[i % 6];
    const std::size_t dk = dims[pick.next() % 4];
    const std::size_t dv = dims[pick.next() % 4];
    const auto inst = make_instance(ModelKind::general(), L, dk, dv, 1000 + i, 0.5);
    const std::vector<std::size_t> sweep{1, 3, non_divisor(L), std::max<std::size_t>(1, L / 2), L};
    for (const auto& r : check_equivalence(inst, sweep, 1e-9)) {
      ++checks;
      if (!r.pass) ++failed;
      worst.add(r.max_rel_err, r.name + " L=" + std::to_string(L));
    }
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  std::ostringstream os;
  os << "50 instances, " << checks << " comparisons, " << failed << " failed, "
     << worst_text(worst) << ", runtime " << std::fixed << std::setprecision(2) << seconds
     << " s (limit 30 s)";
  return {worst.ok && failed == 0 && seconds < 30.0, os.str()};
}

Outcome gradient_correctness() {
  SplitMix64 pick(77);
  Worst worst{1e-6};
  std::size_t failed = 0, checks = 0;
  bool flipped_fails_everywhere = true;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t L = 1 + pick.next() % 12;
    const std::size_t dk = 1 + pick.next() % 4;
    const std::size_t dv = 1 + pick.next() % 4;
    const auto inst = make_instance(ModelKind::general(), L, dk, dv, 500 + i);
    const auto d_out = make_cotangent(L, dv, 900 + i);
    GradcheckOptions options;
    options.eps = 1e-5;
    options.tolerance = 1e-6;
    options.chunk_sizes = {std::max<std::size_t>(1, (L + 1) / 2), std::min<std::size_t>(3, L)};
    for (const auto& r : check_gradients(inst, d_out, options)) {
      ++checks;
      if (!r.pass) ++failed;
      worst.add(r.max_rel_err, r.name);
    }
    options.backward.flip_dlogb_sign = true;
    bool flipped_failed = false;
    for (const auto& r : check_gradients(inst, d_out, options))
      if (r.name.find("dlog_alpha") != std::string::npos && !r.pass) flipped_failed = true;
    // At L = 1 both signs give a zero gate gradient.
    if (!flipped_failed && L > 1) flipped_fails_everywhere = false;
  }
  std::ostringstream os;
  os << "20 instances, " << checks << " gradient comparisons vs central differences, " << failed
     << " failed, " << worst_text(worst)
     << "; adopted dlog_b = q*dq - k*dk, opposite sign rejected: "
     << (flipped_fails_everywhere ? "yes" : "no");
  return {worst.ok && failed == 0 && flipped_fails_everywhere, os.str()};
}

Outcome gate_gradient_structure() {
  Worst worst{1e-12};
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t L = 2 + i, dk = 1 + i % 4, dv = 1 + (i / 4) % 4;
    const auto inst = make_instance(ModelKind::general(), L, dk, dv, 40 + i);
    const auto d_out = make_cotangent(L, dv, 60 + i);
    const auto out = forward_recurrent(inst).out;

    auto check = [&](const GradBundle& g, const std::string& impl) {
      const auto lb = oracle::product_difference(inst.q(), g.dq, inst.k(), g.dk);
      const auto ld = oracle::product_difference(out, d_out, inst.v(), g.dv);
      if (g.dlog_b) worst.add(relative_error(*g.dlog_b, lb), impl + "/dlog_b");
      if (g.dlog_d) worst.add(relative_error(*g.dlog_d, ld), impl + "/dlog_d");
      worst.add(relative_error(g.dlog_alpha, oracle::reverse_cumsum(lb)), impl + "/dlog_alpha");
      worst.add(relative_error(g.dlog_beta, oracle::reverse_cumsum(ld)), impl + "/dlog_beta");
    };
    check(backward_parallel(inst, d_out), "parallel");
    for (ChunkPolicy p : {ChunkPolicy::materialize, ChunkPolicy::recompute}) {
      const ChunkPlan plan(L, 1 + i % 5);
      check(backward_chunkwise(inst, d_out, plan, p).grads,
            "chunkwise/" + std::string(to_string(p)));
    }
    check(backward_recurrent_exact(inst, d_out), "recurrent-exact");
  }
  return {worst.ok, "20 instances, parallel, chunkwise x2 and state-based recurrent, " +
                        worst_text(worst)};
}

Outcome reductions() {
  Worst vanilla{1e-12}, retnet{1e-10};
  for (std::uint64_t i = 0; i < 10; ++i) {
    const std::size_t L = 5 + 7 * i, dk = 1 + i % 4, dv = 1 + (i + 2) % 4;
    const ChunkPlan plan(L, 1 + i % 6);
    const auto v = make_instance(ModelKind::vanilla(), L, dk, dv, 300 + i);
    const auto r = make_instance(ModelKind::retnet(0.9), L, dk, dv, 400 + i);
    const auto v_ref = oracle::masked_attention(v.q(), v.k(), v.v());
    const auto r_ref = oracle::retention(r.q(), r.k(), r.v(), 0.9);
    vanilla.add(relative_error(forward_recurrent(v).out, v_ref), "vanilla/recurrent");
    vanilla.add(relative_error(forward_parallel(v), v_ref), "vanilla/parallel");
    retnet.add(relative_error(forward_recurrent(r).out, r_ref), "retnet/recurrent");
    retnet.add(relative_error(forward_parallel(r), r_ref), "retnet/parallel");
    for (ChunkPolicy p : {ChunkPolicy::materialize, ChunkPolicy::recompute}) {
      vanilla.add(relative_error(forward_chunkwise(v, plan, p).out, v_ref), "vanilla/chunkwise");
      retnet.add(relative_error(forward_chunkwise(r, plan, p).out, r_ref), "retnet/chunkwise");
    }
  }
  return {vanilla.ok && retnet.ok,
          "vanilla " + worst_text(vanilla) + "; retnet(0.9) " + worst_text(retnet)};
}

Outcome policy_and_cost() {
  Worst grads{1e-12};
  for (std::uint64_t i = 0; i < 10; ++i) {
    const std::size_t L = 3 + 3 * i, dk = 1 + i % 4, dv = 1 + (i + 1) % 4;
    const auto inst = make_instance(ModelKind::general(), L, dk, dv, 700 + i);
    const auto d_out = make_cotangent(L, dv, 800 + i);
    const ChunkPlan plan(L, 1 + i % 4);
    const auto a = backward_chunkwise(inst, d_out, plan, ChunkPolicy::materialize).grads;
    const auto b = backward_chunkwise(inst, d_out, plan, ChunkPolicy::recompute).grads;
    grads.add(relative_error(a.dq, b.dq), "dq");
    grads.add(relative_error(a.dk, b.dk), "dk");
    grads.add(relative_error(a.dv, b.dv), "dv");
    grads.add(relative_error(a.dlog_alpha, b.dlog_alpha), "dlog_alpha");
    grads.add(relative_error(a.dlog_beta, b.dlog_beta), "dlog_beta");
  }

  struct Shape {
    std::size_t L, dk, dv, C;
  };
  const Shape shapes[] = {{1, 1, 1, 1},   {4, 2, 2, 2},  {7, 3, 2, 3},   {8, 2, 2, 4},
                          {12, 4, 1, 5},  {16, 1, 4, 4}, {19, 3, 3, 6},  {24, 2, 3, 8},
                          {32, 4, 4, 7},  {33, 2, 2, 11}, {40, 3, 1, 40}, {64, 4, 4, 16}};
  std::size_t mismatches = 0, comparisons = 0;
  bool recompute_shape = true;
  for (const auto& s : shapes) {
    const auto inst = make_instance(ModelKind::general(), s.L, s.dk, s.dv, s.L * 31 + s.C);
    const auto d_out = make_cotangent(s.L, s.dv, s.L);
    const ChunkPlan plan(s.L, s.C);
    for (ChunkPolicy p : {ChunkPolicy::materialize, ChunkPolicy::recompute}) {
      const auto fwd = forward_chunkwise(inst, plan, p).cost;
      const auto bwd = backward_chunkwise(inst, d_out, plan, p).cost;
      comparisons += 2;
      if (!(fwd == predict_cost(s.L, s.dk, s.dv, plan, p, Pass::forward))) ++mismatches;
      if (!(bwd == predict_cost(s.L, s.dk, s.dv, plan, p, Pass::backward))) ++mismatches;
      if (p == ChunkPolicy::recompute) {
        recompute_shape = recompute_shape && fwd.state_writes == 0 && bwd.state_writes == 0 &&
                          bwd.recompute_passes == plan.num_chunks();
      }
    }
  }
  std::ostringstream os;
  os << "policy gradients " << worst_text(grads) << "; counters " << comparisons - mismatches
     << "/" << comparisons << " exact over 12 configurations; recompute writes 0 states and "
     << "replays every chunk: " << (recompute_shape ? "yes" : "no");
  return {grads.ok && mismatches == 0 && recompute_shape, os.str()};
}

Outcome causality() {
  SplitMix64 pick(31337);
  std::size_t failed = 0;
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const std::size_t L = 2 + pick.next() % 30;
    const std::size_t dk = 1 + pick.next() % 4, dv = 1 + pick.next() % 4;
    const auto inst = make_instance(ModelKind::general(), L, dk, dv, 5000 + trial);
    CausalityOptions options;
    options.seed = trial;
    options.chunk = 1 + pick.next() % L;
    const auto r = check_causality(inst, options);
    if (!r.pass) ++failed;
    worst = std::max(worst, r.max_rel_err);
  }
  return {failed == 0, "100 future-perturbation trials, " + std::to_string(failed) +
                           " failed, recurrent prefix bitwise, others worst=" + sci(worst) +
                           " tol=1.00e-12"};
}

template <typename F>
double median_ms(int repeats, F&& run) {
  std::vector<double> times;
  for (int r = 0; r < repeats; ++r) {
    const auto start = Clock::now();
    run();
    times.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

Outcome efficiency() {
  const std::size_t L = 4096, d = 64, C = 64;
  const auto inst = make_instance(ModelKind::general(), L, d, d, 0);
  const ChunkPlan plan(L, C);
  CostReport rec_cost, chunk_cost;
  const double rec_ms = median_ms(5, [&] { rec_cost = forward_recurrent(inst).cost; });
  const double chunk_ms =
      median_ms(5, [&] { chunk_cost = forward_chunkwise(inst, plan, ChunkPolicy::recompute).cost; });
  const bool faster = chunk_ms < rec_ms;
  const bool fewer = chunk_cost.flops < rec_cost.flops;
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << "L=4096 dk=dv=64 C=64, median of 5: chunkwise "
     << chunk_ms << " ms vs recurrent " << rec_ms << " ms (ratio " << chunk_ms / rec_ms
     << ", " << (faster ? "faster" : "not faster") << "); flops chunkwise " << chunk_cost.flops
     << " vs recurrent " << rec_cost.flops << " (ratio "
     << std::setprecision(4) << static_cast<double>(chunk_cost.flops) / rec_cost.flops << ", "
     << (fewer ? "fewer" : "not fewer") << ")";
  return {faster && fewer, os.str()};
}

Outcome io_round_trip() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gla_acceptance_io";
  fs::remove_all(dir);
  fs::create_directories(dir);
  SplitMix64 rng(8);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    RawTensor t;
    const std::size_t ndim = rng.next() % 4;
    std::size_t count = 1;
    for (std::size_t a = 0; a < ndim; ++a) {
      t.dims.push_back(static_cast<std::uint32_t>(rng.next() % 6));
      count *= t.dims.back();
    }
    t.data.resize(count);
    for (double& x : t.data) {
      const std::uint64_t bits = rng.next();
      std::memcpy(&x, &bits, sizeof x);
    }
    const fs::path p = dir / ("t" + std::to_string(i) + ".glat");
    write_tensor_file(p, t);
    const RawTensor back = read_tensor_file(p);
    const bool same = back.dims == t.dims && back.data.size() == t.data.size() &&
                      std::memcmp(back.data.data(), t.data.data(), count * sizeof(double)) == 0;
    if (!same) ++mismatches;
  }
  fs::remove_all(dir);
  return {mismatches == 0, "1000 random tensor files (arbitrary bit patterns incl. NaN/inf), " +
                               std::to_string(mismatches) + " mismatches"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"three-form equivalence", three_form_equivalence},
      {"gradient correctness", gradient_correctness},
      {"gate-gradient closed form", gate_gradient_structure},
      {"reductions", reductions},
      {"policy equivalence and cost model", policy_and_cost},
      {"causality", causality},
      {"efficiency signal", efficiency},
      {"tensor file round trip", io_round_trip},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << index << "] " << c.name << ": " << o.detail
              << std::endl;
  }
  std::cout << "acceptance: " << (8 - failures) << "/8 criteria pass" << std::endl;
  return failures == 0 ? 0 : 1;
}
