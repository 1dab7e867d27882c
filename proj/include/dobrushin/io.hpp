#pragma once

// File formats.
//
// Kernel JSON:    {"size": k, "rows": [[...], ...], "labels": ["a", ...]}
// Schedule JSON:  {"family": "example1".."example4" | "bd" | "custom",
//                  "n": N,
//                  "params": {"beta": b, "eps": e, "alpha_exponent": a},
//                  "observable": "indicator:S"   (S 1-based)  or  "values": [...],
//                  "initial": "uniform" | [...],
//                  "centered": true,
//                  "kernels": [{"from": i, "to": j, "rows": [[...]]} |
//                              {"from": i, "to": j, "file": "kernel.json"}, ...]}   (custom only)
// Report JSON:    {"check", "n", "max_violation", "slack", "pass", ...details}
// CSV:            plain comma-separated with a header row; doubles printed
//                 with 17 significant digits so files round-trip exactly.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dobrushin/error.hpp"
#include "dobrushin/exact.hpp"
#include "dobrushin/families.hpp"
#include "dobrushin/kernel.hpp"
#include "dobrushin/monte_carlo.hpp"
#include "dobrushin/schedule.hpp"

namespace dobrushin::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// JSON has no infinity; non-finite values are written as strings.
inline json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary and renames it into place.
inline void write_file_atomic(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const auto tmp = std::filesystem::path(p.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(source + ": " + e.what());
  }
}

inline Kernel kernel_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("rows")) throw InputError("kernel JSON needs a \"rows\" array");
    const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    if (j.contains("size") && j.at("size").get<std::size_t>() != rows.size()) {
      throw InputError("\"size\" is " + std::to_string(j.at("size").get<std::size_t>()) + " but " +
                       std::to_string(rows.size()) + " rows were given");
    }
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
    return Kernel::from_rows(rows, std::move(labels));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed kernel JSON: ") + e.what());
  }
}

inline json kernel_to_json(const Kernel& k) {
  json j;
  j["size"] = k.size();
  j["rows"] = k.rows();
  if (!k.space().labels().empty()) j["labels"] = k.space().labels();
  return j;
}

inline Kernel load_kernel(const std::filesystem::path& p) {
  try {
    return kernel_from_json(parse_json(read_file(p), p.string()));
  } catch (const InputError& e) {
    const std::string what = e.what();
    if (what.rfind(p.string(), 0) == 0) throw;
    throw InputError(p.string() + ": " + what);
  }
}

struct ScheduleSpec {
  std::string family;
  std::size_t n = 0;
  std::optional<double> beta;
  std::optional<double> eps;
  double alpha_exponent = 1.0 / 3.0;
  std::optional<std::size_t> indicator_state;  // 1-based
  std::optional<std::vector<double>> values;
  std::optional<std::vector<double>> initial;
  bool centered = true;
  struct KernelRange {
    std::size_t from;
    std::size_t to;
    Kernel kernel;
  };
  std::vector<KernelRange> custom_kernels;
};

inline ScheduleSpec schedule_spec_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  ScheduleSpec s;
  try {
    s.family = j.at("family").get<std::string>();
    s.n = j.at("n").get<std::size_t>();
    if (j.contains("params")) {
      const auto& p = j.at("params");
      if (p.contains("beta")) s.beta = p.at("beta").get<double>();
      if (p.contains("eps")) s.eps = p.at("eps").get<double>();
      if (p.contains("alpha_exponent")) s.alpha_exponent = p.at("alpha_exponent").get<double>();
    }
    if (j.contains("observable")) {
      const auto obs = j.at("observable").get<std::string>();
      const std::string prefix = "indicator:";
      if (obs.rfind(prefix, 0) != 0) throw InputError("observable must be \"indicator:<state>\", got \"" + obs + "\"");
      const long st = std::stol(obs.substr(prefix.size()));
      if (st < 1) throw InputError("indicator state is 1-based");
      s.indicator_state = static_cast<std::size_t>(st);
    }
    if (j.contains("values")) s.values = j.at("values").get<std::vector<double>>();
    if (j.contains("initial")) {
      const auto& ini = j.at("initial");
      if (ini.is_string()) {
        if (ini.get<std::string>() != "uniform") throw InputError("initial must be \"uniform\" or an array");
      } else {
        s.initial = ini.get<std::vector<double>>();
      }
    }
    if (j.contains("centered")) s.centered = j.at("centered").get<bool>();
    if (j.contains("kernels")) {
      for (const auto& kr : j.at("kernels")) {
        const auto from = kr.at("from").get<std::size_t>();
        const auto to = kr.at("to").get<std::size_t>();
        if (kr.contains("file")) {
          s.custom_kernels.push_back({from, to, load_kernel(base_dir / kr.at("file").get<std::string>())});
        } else {
          s.custom_kernels.push_back({from, to, kernel_from_json(kr)});
        }
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed schedule JSON: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw InputError("malformed observable specification");
  }
  return s;
}

inline ScheduleSpec load_schedule_spec(const std::filesystem::path& p) {
  return schedule_spec_from_json(parse_json(read_file(p), p.string()), p.parent_path());
}

namespace detail {

inline BoundedFunction spec_observable(const ScheduleSpec& s, std::size_t states) {
  if (s.values) {
    if (s.values->size() != states) {
      throw InputError("\"values\" has " + std::to_string(s.values->size()) + " entries for " + std::to_string(states) +
                       " states");
    }
    return BoundedFunction(*s.values);
  }
  const std::size_t st = s.indicator_state.value_or(1);
  if (st > states) throw InputError("indicator state " + std::to_string(st) + " exceeds " + std::to_string(states));
  return BoundedFunction::indicator(states, st - 1);
}

}  // namespace detail

/// Builds the schedule a spec describes; `bd_params` receives the blocking
/// parameters for the bd family.
inline Schedule build_schedule(const ScheduleSpec& s, BDParams* bd_params_out = nullptr) {
  if (s.family.rfind("example", 0) == 0 && s.family.size() == 8) {
    const int id = s.family[7] - '0';
    ExampleOptions opt;
    opt.beta = s.beta;
    opt.eps = s.eps;
    opt.centered = s.centered;
    if (id >= 1 && id <= 4) {
      opt.observable = detail::spec_observable(s, example_states(id));
      if (s.initial) opt.initial = s.initial;
    }
    return build_example(id, s.n, opt);
  }
  if (s.family == "bd") {
    if (s.indicator_state.value_or(1) != 1 || s.values || s.initial) {
      throw InputError("the bd family fixes its observable (indicator:1) and uniform start");
    }
    auto b = build_bd(s.n, s.alpha_exponent, s.centered);
    if (bd_params_out) *bd_params_out = b.params;
    return std::move(b.schedule);
  }
  if (s.family == "custom") {
    if (s.custom_kernels.empty()) throw InputError("custom family needs a \"kernels\" list");
    const std::size_t k = s.custom_kernels.front().kernel.size();
    std::vector<Kernel> kernels;
    std::vector<StepRange> ranges;
    for (const auto& kr : s.custom_kernels) {
      ranges.push_back({kr.from, kr.to, kernels.size()});
      kernels.push_back(kr.kernel);
    }
    std::vector<double> init = s.initial.value_or(std::vector<double>(k, 1.0 / static_cast<double>(k)));
    return Schedule(s.n, std::move(init), std::move(kernels), std::move(ranges), {detail::spec_observable(s, k)},
                    {{1, s.n, 0}}, s.centered);
  }
  throw InputError("unknown schedule family \"" + s.family + "\"");
}

inline json report_to_json(const CheckReport& r) {
  json j;
  j["check"] = r.check;
  j["n"] = r.n;
  j["max_violation"] = json_number(r.max_violation);
  j["slack"] = json_number(r.slack);
  j["pass"] = r.pass;
  for (const auto& [key, v] : r.details) j[key] = json_number(v);
  return j;
}

inline json coefficients_to_json(const CoefficientReport& c) {
  json j;
  j["delta"] = c.delta;
  j["alpha"] = c.alpha;
  std::vector<std::vector<double>> table(c.size, std::vector<double>(c.size));
  for (std::size_t a = 0; a < c.size; ++a)
    for (std::size_t b = 0; b < c.size; ++b) table[a][b] = c.pair(a, b);
  j["pairwise_alpha"] = table;
  return j;
}

inline json diagnostics_to_json(const ConditionDiagnostics& d) {
  return json{{"C_n", json_number(d.C_n)},
              {"sum_var", json_number(d.sum_var)},
              {"dobrushin_lhs", json_number(d.dobrushin_lhs)},
              {"dobrushin_rate", json_number(d.dobrushin_rate)},
              {"new_lhs", json_number(d.new_lhs)},
              {"new_rate", json_number(d.new_rate)},
              {"degenerate", d.degenerate}};
}

inline std::string batch_csv(const SampleBatch& b) {
  std::string out = "rep,normalized_sum\n";
  out.reserve(b.reps * 26);
  for (std::size_t r = 0; r < b.normalized_sums.size(); ++r) {
    out += std::to_string(r);
    out += ',';
    out += format_double(b.normalized_sums[r]);
    out += '\n';
  }
  return out;
}

inline json batch_summary_json(const SampleBatch& b, const NormalityReport& rep) {
  return json{{"n", b.n},
              {"reps", b.reps},
              {"seed", b.seed},
              {"normalization", b.normalization == Normalization::exact ? "exact" : "plug_in"},
              {"mean", json_number(b.summary.mean)},
              {"variance", json_number(b.summary.variance)},
              {"ks", json_number(rep.ks)},
              {"ks_se", json_number(rep.ks_se)},
              {"skew", json_number(rep.skewness)},
              {"skew_se", json_number(rep.skewness_se)},
              {"ex_kurtosis", json_number(rep.excess_kurtosis)},
              {"ex_kurtosis_se", json_number(rep.excess_kurtosis_se)},
              {"verdict", rep.verdict}};
}

inline std::string distribution_csv(const SumDistribution& d) {
  std::string out = "lattice_value,mass\n";
  for (std::size_t j = 0; j < d.masses.size(); ++j) {
    out += format_double(d.value(j));
    out += ',';
    out += format_double(d.masses[j]);
    out += '\n';
  }
  return out;
}

}  // namespace dobrushin::io
