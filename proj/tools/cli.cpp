#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gla/gla.hpp"

namespace gla::cli {

namespace fs = std::filesystem;

namespace {

// RunConfig flags shared by every subcommand; applied over --config.
struct ConfigFlags {
  std::optional<std::string> config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "flat key = value config file");
    add(app, "--kind", "kind", "vanilla | retnet(gamma) | gla_beta_one | general");
    add(app, "--L", "L", "sequence length");
    add(app, "--dk", "dk", "key dimension");
    add(app, "--dv", "dv", "value dimension");
    add(app, "--seed", "seed", "generator seed");
    add(app, "--gate-floor", "gate_floor", "smallest sampled gate value, in (0, 1]");
    add(app, "--chunk", "chunk", "chunk length");
    add(app, "--policy", "policy", "materialize | recompute");
    add(app, "--form", "form", "recurrent | parallel | chunkwise");
    add(app, "--tol", "tol", "equivalence tolerance (relative)");
    add(app, "--grad-tol", "grad_tol", "gradient-check tolerance (relative)");
    add(app, "--eps", "eps", "finite-difference step");
  }

  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  RunConfig resolve() const {
    RunConfig config = config_path ? read_config_file(*config_path) : RunConfig{};
    for (const auto& [key, value] : values) set_config_value(config, key, value);
    config.validate();
    return config;
  }
};

const char* const kTensorNames[] = {"q", "k", "v", "log_alpha", "log_beta"};

fs::path tensor_path(const fs::path& dir, const std::string& name) { return dir / (name + ".glat"); }

std::vector<std::size_t> equivalence_sweep(const RunConfig& c) {
  std::vector<std::size_t> sizes{1, 3, c.chunk, std::max<std::size_t>(1, c.L / 2), c.L};
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  return sizes;
}

int print_reports(const std::vector<CheckReport>& reports, std::ostream& out) {
  std::size_t passed = 0;
  for (const auto& r : reports) {
    out << format_report(r) << "\n";
    passed += r.pass ? 1 : 0;
  }
  out << "summary total=" << reports.size() << " pass=" << passed
      << " fail=" << reports.size() - passed << "\n";
  return passed == reports.size() ? kExitOk : kExitCheckFailed;
}

int cmd_gen(const RunConfig& c, const fs::path& out_dir, std::ostream& out) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw FormatError("cannot create output directory: " + ec.message(), out_dir);
  const GlaInstance inst = make_instance(c.kind, c.L, c.dk, c.dv, c.seed, c.gate_floor);
  write_seq_tensor(tensor_path(out_dir, "q"), inst.q());
  write_seq_tensor(tensor_path(out_dir, "k"), inst.k());
  write_seq_tensor(tensor_path(out_dir, "v"), inst.v());
  write_seq_tensor(tensor_path(out_dir, "log_alpha"), inst.gates().log_alpha());
  write_seq_tensor(tensor_path(out_dir, "log_beta"), inst.gates().log_beta());
  std::ofstream cfg(out_dir / "config.txt", std::ios::trunc);
  if (!cfg) throw FormatError("cannot write config echo", out_dir / "config.txt");
  cfg << to_config_text(c);
  out << "wrote " << out_dir.string() << " (" << to_string(c.kind) << ", L=" << c.L
      << ", dk=" << c.dk << ", dv=" << c.dv << ", seed=" << c.seed << ")\n";
  return kExitOk;
}

GlaInstance load_instance(const fs::path& dir) {
  std::map<std::string, SeqTensor> t;
  for (const char* name : kTensorNames) t[name] = read_seq_tensor(tensor_path(dir, name));
  try {
    return GlaInstance(t["q"], t["k"], t["v"], GateSeq(t["log_alpha"], t["log_beta"]));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("inconsistent instance: ") + e.what(), dir);
  }
}

int cmd_run(const RunConfig& c, const fs::path& in_dir, const fs::path& out_dir,
            std::ostream& out) {
  const GlaInstance inst = load_instance(in_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw FormatError("cannot create output directory: " + ec.message(), out_dir);

  SeqTensor result;
  CostReport cost;
  std::optional<std::vector<State>> states;
  switch (c.form) {
    case Form::recurrent: {
      auto trace = forward_recurrent(inst);
      result = std::move(trace.out);
      cost = trace.cost;
      break;
    }
    case Form::parallel:
      result = forward_parallel(inst, {}, &cost);
      break;
    case Form::chunkwise: {
      auto fwd = forward_chunkwise(inst, ChunkPlan(inst.length(), c.chunk), c.policy);
      result = std::move(fwd.out);
      cost = fwd.cost;
      states = std::move(fwd.chunk_states);
      break;
    }
  }
  write_seq_tensor(out_dir / "o.glat", result);
  if (states) {
    const fs::path state_dir = out_dir / "states";
    fs::create_directories(state_dir, ec);
    if (ec) throw FormatError("cannot create states directory: " + ec.message(), state_dir);
    for (std::size_t i = 0; i < states->size(); ++i) {
      std::ostringstream name;
      name << "state_" << std::setw(4) << std::setfill('0') << i << ".glat";
      write_seq_tensor(state_dir / name.str(), (*states)[i].matrix());
    }
  }
  std::ostringstream report;
  report << "form = " << to_string(c.form) << "\n"
         << "L = " << inst.length() << "\n"
         << "dk = " << inst.dk() << "\n"
         << "dv = " << inst.dv() << "\n";
  if (c.form == Form::chunkwise) {
    report << "chunk = " << c.chunk << "\n"
           << "policy = " << to_string(c.policy) << "\n";
  }
  report << cost;
  std::ofstream cost_file(out_dir / "cost.txt", std::ios::trunc);
  if (!cost_file) throw FormatError("cannot write cost report", out_dir / "cost.txt");
  cost_file << report.str();
  out << report.str();
  return kExitOk;
}

int cmd_compare(const fs::path& a, const fs::path& b, double tol, std::ostream& out) {
  const SeqTensor x = read_seq_tensor(a);
  const SeqTensor y = read_seq_tensor(b);
  return print_reports({compare("compare[" + a.string() + "," + b.string() + "]", x, y,
                                tol)},
                       out);
}

int cmd_check(const RunConfig& c, std::ostream& out) {
  const GlaInstance inst = make_instance(c.kind, c.L, c.dk, c.dv, c.seed, c.gate_floor);
  auto reports = check_equivalence(inst, equivalence_sweep(c), c.tol);
  if (c.L >= 2) {
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      CausalityOptions options;
      options.seed = c.seed * 1000 + trial;
      options.chunk = c.chunk;
      reports.push_back(check_causality(inst, options));
    }
  }
  return print_reports(reports, out);
}

int cmd_gradcheck(const RunConfig& c, bool flip_sign, std::ostream& out) {
  const GlaInstance inst = make_instance(c.kind, c.L, c.dk, c.dv, c.seed, c.gate_floor);
  const SeqTensor d_out = make_cotangent(c.L, c.dv, c.seed + 1);
  GradcheckOptions options;
  options.eps = c.eps;
  options.tolerance = c.grad_tol;
  options.chunk_sizes = {c.chunk};
  options.backward.flip_dlogb_sign = flip_sign;
  return print_reports(check_gradients(inst, d_out, options), out);
}

template <typename F>
double median_ms(int repeats, F&& run) {
  std::vector<double> times;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    run();
    times.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

int cmd_bench(const RunConfig& c, int repeats, std::ostream& out) {
  if (repeats < 3) throw DomainError("bench needs --repeats >= 3");
  const GlaInstance inst = make_instance(c.kind, c.L, c.dk, c.dv, c.seed, c.gate_floor);
  const ChunkPlan plan(c.L, c.chunk);
  out << "form L C policy median_ms flops state_traffic\n";
  auto row = [&](std::string_view form, std::string_view chunk, std::string_view policy,
                 double ms, const CostReport& cost) {
    out << form << " " << c.L << " " << chunk << " " << policy << " " << std::fixed
        << std::setprecision(3) << ms << " " << cost.flops << " " << cost.state_traffic() << "\n";
  };

  CostReport cost;
  double ms = median_ms(repeats, [&] { cost = forward_recurrent(inst).cost; });
  row("recurrent", "-", "-", ms, cost);

  try {
    ms = median_ms(repeats, [&] { forward_parallel(inst, {}, &cost); });
    row("parallel", "-", "-", ms, cost);
  } catch (const DecayRangeError& e) {
    out << "parallel " << c.L << " - - SKIP - - # " << e.what() << "\n";
  }

  for (ChunkPolicy policy : {ChunkPolicy::materialize, ChunkPolicy::recompute}) {
    ms = median_ms(repeats, [&] { cost = forward_chunkwise(inst, plan, policy).cost; });
    row("chunkwise", std::to_string(c.chunk), to_string(policy), ms, cost);
  }
  return kExitOk;
}

int cmd_cost(const RunConfig& c, std::ostream& out) {
  const ChunkPlan plan(c.L, c.chunk);
  auto emit = [&](const std::string& prefix, const CostReport& cost) {
    out << prefix << ".flops = " << cost.flops << "\n"
        << prefix << ".state_writes = " << cost.state_writes << "\n"
        << prefix << ".state_reads = " << cost.state_reads << "\n"
        << prefix << ".recompute_passes = " << cost.recompute_passes << "\n";
  };
  out << "L = " << c.L << "\ndk = " << c.dk << "\ndv = " << c.dv << "\nchunk = " << c.chunk
      << "\nnum_chunks = " << plan.num_chunks() << "\n";
  emit("recurrent.forward", predict_recurrent_cost(c.L, c.dk, c.dv));
  emit("parallel.forward", predict_parallel_cost(c.L, c.dk, c.dv));
  for (ChunkPolicy policy : {ChunkPolicy::materialize, ChunkPolicy::recompute}) {
    const std::string base = "chunkwise." + std::string(to_string(policy));
    emit(base + ".forward", predict_cost(c.L, c.dk, c.dv, plan, policy, Pass::forward));
    emit(base + ".backward", predict_cost(c.L, c.dk, c.dv, plan, policy, Pass::backward));
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gated linear attention kernels: generate, run, verify, benchmark", "glacli"};
  app.require_subcommand(1);

  ConfigFlags flags;
  std::string out_dir, in_dir;
  std::vector<std::string> compare_files;
  bool flip_sign = false;
  int repeats = 5;

  auto* gen = app.add_subcommand("gen", "write Q/K/V/log-gate tensor files for a fixture");
  flags.attach(*gen);
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* run_cmd = app.add_subcommand("run", "evaluate one form on tensor files");
  flags.attach(*run_cmd);
  run_cmd->add_option("--in", in_dir, "directory written by gen")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* check = app.add_subcommand("check", "cross-form equivalence and causality checks");
  flags.attach(*check);
  check->add_option("--compare", compare_files, "compare two output tensor files instead")
      ->expected(2);

  auto* gradcheck = app.add_subcommand("gradcheck", "analytic gradients vs. finite differences");
  flags.attach(*gradcheck);
  gradcheck->add_flag("--debug-flip-dlogb", flip_sign, "negate dlog_b (debug)");

  auto* bench = app.add_subcommand("bench", "wall-clock medians and counters per form");
  flags.attach(*bench);
  bench->add_option("--repeats", repeats, "timed repetitions per form (>= 3)");

  auto* cost = app.add_subcommand("cost", "predicted flop and state-traffic counters");
  flags.attach(*cost);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInputError;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInputError;
  }

  try {
    const RunConfig config = flags.resolve();
    if (gen->parsed()) return cmd_gen(config, out_dir, out);
    if (run_cmd->parsed()) return cmd_run(config, in_dir, out_dir, out);
    if (check->parsed()) {
      if (!compare_files.empty()) {
        return cmd_compare(compare_files[0], compare_files[1], config.tol, out);
      }
      return cmd_check(config, out);
    }
    if (gradcheck->parsed()) return cmd_gradcheck(config, flip_sign, out);
    if (bench->parsed()) return cmd_bench(config, repeats, out);
    if (cost->parsed()) return cmd_cost(config, out);
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const DecayRangeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace gla::cli
