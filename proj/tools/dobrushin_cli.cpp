// dobrushin: coefficients, example sweeps, verification suites and
// Monte Carlo batches for inhomogeneous finite Markov chains.
//
// Exit codes: 0 success, 1 verification/degenerate failure, 2 usage or input error.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dobrushin.hpp"
#include "dobrushin/oracle.hpp"
#include "dobrushin/random_schedule.hpp"

namespace fs = std::filesystem;
using namespace dobrushin;
using io::json;

namespace {

struct ScheduleArgs {
  std::string schedule_file;
  std::string family;
  std::size_t n = 0;
  double alpha_exponent = 1.0 / 3.0;
  std::string observable;
  std::optional<double> beta;
  std::optional<double> eps;
};

void add_schedule_options(CLI::App* cmd, ScheduleArgs& a) {
  auto* file = cmd->add_option("--schedule", a.schedule_file, "schedule spec JSON");
  auto* fam = cmd->add_option("--family", a.family, "example1..example4 or bd")->excludes(file);
  cmd->add_option("--n", a.n, "series length")->needs(fam);
  cmd->add_option("--alpha-exponent", a.alpha_exponent, "bd: alpha_n = n^-exponent")->needs(fam);
  cmd->add_option("--observable", a.observable, "indicator:<state>, 1-based")->needs(fam);
  cmd->add_option("--beta", a.beta, "example beta_n (default n^-1/6)")->needs(fam);
  cmd->add_option("--eps", a.eps, "example eps_n (default n^-1/3)")->needs(fam);
}

io::ScheduleSpec resolve_spec(const ScheduleArgs& a) {
  if (!a.schedule_file.empty()) return io::load_schedule_spec(a.schedule_file);
  if (a.family.empty()) throw InputError("give --schedule or --family");
  if (a.n == 0) throw InputError("--family needs --n");
  json j{{"family", a.family}, {"n", a.n}};
  json params{{"alpha_exponent", a.alpha_exponent}};
  if (a.beta) params["beta"] = *a.beta;
  if (a.eps) params["eps"] = *a.eps;
  j["params"] = params;
  if (!a.observable.empty()) j["observable"] = a.observable;
  return io::schedule_spec_from_json(j);
}

std::vector<std::size_t> parse_sweep(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 3) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw InputError("bad --n-sweep entry \"" + item + "\"");
    }
  }
  if (out.empty()) throw InputError("--n-sweep is empty");
  return out;
}

// ---- coeff -------------------------------------------------------------

int cmd_coeff(const std::string& matrix, std::size_t steps, const std::string& format) {
  if (steps < 1) throw InputError("--steps must be >= 1");
  const Kernel k = io::load_kernel(matrix);
  const std::vector<Kernel> chain(steps, k);
  const CoefficientReport r = md_delta_multistep(chain);
  if (format == "csv") {
    std::cout << "quantity,value\n"
              << "steps," << steps << "\n"
              << "delta," << io::format_double(r.delta) << "\n"
              << "alpha," << io::format_double(r.alpha) << "\n\n"
              << "x1,x2,pairwise_alpha\n";
    for (std::size_t a = 0; a < r.size; ++a)
      for (std::size_t b = 0; b < r.size; ++b)
        std::cout << k.space().label(a) << ',' << k.space().label(b) << ',' << io::format_double(r.pair(a, b)) << '\n';
  } else {
    json j = io::coefficients_to_json(r);
    j["steps"] = steps;
    std::cout << j.dump(2) << '\n';
  }
  return 0;
}

// ---- example -----------------------------------------------------------

int cmd_example(int id, std::size_t n, const std::string& sweep_text, std::optional<double> beta,
                std::optional<double> eps, const std::string& out, bool check_trends) {
  std::vector<std::size_t> sweep;
  if (n) {
    sweep = {n};
  } else if (!sweep_text.empty()) {
    sweep = parse_sweep(sweep_text);
  } else {
    for (int p = 12; p <= 24; ++p) sweep.push_back(std::size_t{1} << p);
  }

  std::string csv = "n,alpha_n,alpha2_n,dobrushin_rate,new_rate\n";
  std::vector<double> drate, nrate;
  for (std::size_t m : sweep) {
    ExampleOptions opt;
    opt.beta = beta;
    opt.eps = eps;
    const SeriesCoefficients c = series_coefficients(build_example(id, m, opt));
    drate.push_back(dobrushin_rate(m, c.alpha_n));
    nrate.push_back(new_rate(m, c.alpha_n, c.alpha2_n));
    csv += std::to_string(m) + ',' + io::format_double(c.alpha_n) + ',' + io::format_double(c.alpha2_n) + ',' +
           io::format_double(drate.back()) + ',' + io::format_double(nrate.back()) + '\n';
  }
  if (out.empty()) {
    std::cout << csv;
  } else {
    io::write_file_atomic(out, csv);
  }

  if (!check_trends) return 0;
  // new_rate strictly increasing, dobrushin_rate within 10% of its mean
  bool ok = true;
  for (std::size_t i = 1; i < nrate.size(); ++i) ok = ok && nrate[i] > nrate[i - 1];
  double mean = 0.0;
  for (double v : drate) mean += v / static_cast<double>(drate.size());
  for (double v : drate) ok = ok && std::fabs(v - mean) <= 0.1 * mean;
  std::cerr << (ok ? "trends ok" : "trend check failed") << '\n';
  return ok ? 0 : 1;
}

// ---- verify ------------------------------------------------------------

struct Instance {
  std::string name;
  Schedule schedule;
};

std::vector<Instance> builtin_schedules(std::size_t n) {
  std::vector<Instance> v;
  for (int id = 1; id <= 4; ++id) v.push_back({"example" + std::to_string(id) + "_n" + std::to_string(n), build_example(id, n)});
  v.push_back({"bd_n" + std::to_string(n), build_bd(n, 1.0 / 3.0).schedule});
  return v;
}

json run_instances(const std::string& suite, const std::vector<Instance>& instances, std::size_t lemma1_trials,
                   std::uint64_t seed, std::vector<std::string>& failed) {
  json list = json::array();
  auto add = [&](const std::string& name, const CheckReport& r) {
    json j = io::report_to_json(r);
    j["instance"] = name;
    list.push_back(j);
    if (!r.pass) failed.push_back(name + ":" + r.check);
  };
  for (const auto& inst : instances) {
    if (suite == "lemmas") {
      add(inst.name, check_lemma1(inst.schedule, lemma1_trials, seed));
      add(inst.name, check_lemma2(inst.schedule));
    } else if (suite == "prop3") {
      add(inst.name, check_prop3(inst.schedule));
    } else if (suite == "decomposition") {
      add(inst.name, check_decomposition(inst.schedule));
    } else {
      add(inst.name, oracle::compare_with_paths(inst.schedule));
    }
  }
  return list;
}

int cmd_verify(const std::string& suite, std::size_t trials, std::uint64_t seed, bool verbose) {
  std::vector<std::string> failed;
  json out{{"suite", suite}, {"trials", trials}, {"seed", seed}};

  // Built-in schedules (not for the oracle suite: too long to enumerate).
  if (suite != "oracle") {
    out["builtin"] = run_instances(suite, builtin_schedules(4096), trials, seed, failed);
  }

  // Randomized schedules; instance r uses stream(seed, r).
  const std::size_t random_count = suite == "lemmas" ? 10 : trials;
  std::vector<Instance> rnd;
  for (std::size_t r = 0; r < random_count; ++r) {
    Xoshiro256 rng = Xoshiro256::stream(seed, r);
    RandomScheduleOptions opt;
    std::size_t states = 0, n = 0;
    if (suite == "oracle") {
      states = rng.uniform_int(2, 3);
      n = rng.uniform_int(2, 8);
      opt.lattice = rng.uniform() < 0.5;
      opt.sparsity = rng.uniform() < 0.3 ? 0.4 : 0.0;
    } else {
      states = rng.uniform_int(2, 6);
      n = rng.uniform_int(suite == "lemmas" ? 8 : 2, 80);
      opt.sparsity = suite == "lemmas" ? 0.0 : (rng.uniform() < 0.3 ? 0.5 : 0.0);
    }
    // Keep drawing until the sum is non-degenerate; constant paths carry no information.
    for (;;) {
      Schedule s = random_schedule(rng, states, n, opt);
      if (exact_mean_var(s).variance > 1e-12) {
        rnd.push_back({"random_" + std::to_string(r) + "_X" + std::to_string(states) + "_n" + std::to_string(n), std::move(s)});
        break;
      }
    }
  }
  std::vector<std::string> rnd_failed;
  const json rnd_reports = run_instances(suite, rnd, trials, seed, rnd_failed);
  failed.insert(failed.end(), rnd_failed.begin(), rnd_failed.end());
  double worst = -std::numeric_limits<double>::infinity();
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& r : rnd_reports) {
    if (r["max_violation"].is_number()) worst = std::max(worst, r["max_violation"].get<double>());
    if (r["slack"].is_number()) slack = std::min(slack, r["slack"].get<double>());
  }
  out["random"] = json{{"instances", rnd.size()},
                       {"max_violation", io::json_number(worst)},
                       {"slack", io::json_number(slack)},
                       {"failed", rnd_failed}};
  if (verbose) out["random"]["reports"] = rnd_reports;
  out["failed"] = failed;
  out["pass"] = failed.empty();
  std::cout << out.dump(2) << '\n';
  return failed.empty() ? 0 : 1;
}

// ---- simulate / distribution ---------------------------------------------

int cmd_simulate(const ScheduleArgs& a, std::size_t reps, std::uint64_t seed, const std::string& out_dir,
                 const std::string& normalization) {
  const io::ScheduleSpec spec = resolve_spec(a);
  const Schedule s = io::build_schedule(spec);
  SimulateOptions opt;
  opt.normalization = normalization == "plug-in" ? Normalization::plug_in : Normalization::exact;

  const auto t0 = std::chrono::steady_clock::now();
  const SampleBatch b = simulate(s, reps, seed, opt);
  const NormalityReport rep = normality_report(b);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json summary = io::batch_summary_json(b, rep);
  summary["family"] = spec.family;
  const fs::path dir(out_dir);
  io::write_file_atomic(dir / "batch.csv", io::batch_csv(b));
  io::write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

  // Timestamps only in the sidecar log, never in the primary outputs.
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::ostringstream log;
  log << "finished " << stamp << "\nworkers " << default_workers() << "\nseconds " << secs << '\n';
  io::write_file_atomic(dir / "simulate.log", log.str());

  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_distribution(const ScheduleArgs& a, const std::string& out, std::size_t budget) {
  const Schedule s = io::build_schedule(resolve_spec(a));
  const SumDistribution d = sum_distribution(s, budget);
  const MeanVar mv = exact_mean_var(s);
  json j{{"n", s.length()},
         {"lattice_step", d.lattice_step},
         {"support", d.masses.size()},
         {"mean", mv.mean},
         {"variance", mv.variance},
         {"total_mass", d.total_mass()},
         {"ks_to_normal", mv.variance > 0.0 ? io::json_number(ks_distance_to_normal(d, mv.mean, mv.variance)) : json(nullptr)}};
  if (!out.empty()) io::write_file_atomic(out, io::distribution_csv(d));
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dobrushin coefficients, exact variance engine and CLT experiments for inhomogeneous Markov chains"};
  app.require_subcommand(1);

  auto* coeff = app.add_subcommand("coeff", "MD coefficient of the m-step product of a kernel");
  std::string matrix, format = "json";
  std::size_t steps = 1;
  coeff->add_option("--matrix", matrix, "kernel JSON file")->required();
  coeff->add_option("--steps", steps, "m: number of steps");
  coeff->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* example = app.add_subcommand("example", "coefficient sweep for example family 1-4 (CSV)");
  int id = 0;
  std::size_t example_n = 0;
  std::string sweep, example_out;
  std::optional<double> ex_beta, ex_eps;
  bool check_trends = false;
  example->add_option("--id", id, "example family 1..4")->required()->check(CLI::Range(1, 4));
  auto* n_opt = example->add_option("--n", example_n, "single series length");
  example->add_option("--n-sweep", sweep, "comma-separated lengths (default 2^12..2^24)")->excludes(n_opt);
  example->add_option("--beta", ex_beta, "fixed beta (default n^-1/6)");
  example->add_option("--eps", ex_eps, "fixed eps (default n^-1/3)");
  example->add_option("--out", example_out, "CSV path (default stdout)");
  example->add_flag("--check-trends", check_trends,
                    "exit 1 unless new_rate strictly increases and dobrushin_rate stays within 10% of its mean");

  auto* verify = app.add_subcommand("verify", "run an exact-engine verification suite (JSON to stdout)");
  std::string suite;
  std::size_t trials = 100;
  std::uint64_t verify_seed = 1;
  bool verbose = false;
  verify->add_option("--suite", suite, "lemmas | prop3 | decomposition | oracle")
      ->required()
      ->check(CLI::IsMember({"lemmas", "prop3", "decomposition", "oracle"}));
  verify->add_option("--trials", trials, "random schedules (lemmas: triples per schedule)");
  verify->add_option("--seed", verify_seed, "seed for random instances");
  verify->add_flag("--verbose", verbose, "include every random instance report");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo batch of normalized sums");
  ScheduleArgs sim_args;
  std::size_t reps = 50'000;
  std::uint64_t seed = 0;
  std::string out_dir = ".", normalization = "exact";
  add_schedule_options(sim, sim_args);
  sim->add_option("--reps", reps, "replications (>= 100)");
  sim->add_option("--seed", seed, "batch seed")->required();
  sim->add_option("--out", out_dir, "output directory for batch.csv, summary.json");
  sim->add_option("--normalization", normalization, "exact or plug-in")->check(CLI::IsMember({"exact", "plug-in"}));

  auto* dist = app.add_subcommand("distribution", "exact law of S_n for lattice observables");
  ScheduleArgs dist_args;
  std::string dist_out;
  std::size_t budget = kDefaultLatticeBudget;
  add_schedule_options(dist, dist_args);
  dist->add_option("--out", dist_out, "CSV path for (lattice_value, mass)");
  dist->add_option("--budget", budget, "max n * lattice support");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*coeff) return cmd_coeff(matrix, steps, format);
    if (*example) return cmd_example(id, example_n, sweep, ex_beta, ex_eps, example_out, check_trends);
    if (*verify) return cmd_verify(suite, trials, verify_seed, verbose);
    if (*sim) return cmd_simulate(sim_args, reps, seed, out_dir, normalization);
    if (*dist) return cmd_distribution(dist_args, dist_out, budget);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DegenerateError& e) {
    std::cerr << "degenerate: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
