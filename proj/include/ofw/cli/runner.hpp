#pragma once

// Wires a RunConfig to workload, oracle, stream and solver, and serializes
// the resulting trace (CSV) and summary (JSON).

#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "ofw/cli/config.hpp"
#include "ofw/metrics.hpp"
#include "ofw/workloads.hpp"

namespace ofw::cli {

inline constexpr const char* kCsvHeader = "t,n_t,kind,gamma,g_fw,g_aw,h_t,grad_err_inf,grad_err_op,f_value,elapsed_ns";

/// Synthetic workload for the config, with radius override, power settings
/// and (boundary LASSO) a reference optimum. Data-file runs get a bare
/// workload without objective closures.
Workload build_workload(const RunConfig& cfg);

/// The config's data file when set, else the workload's synthetic stream.
std::unique_ptr<SampleStream> open_stream(const RunConfig& cfg, const Workload& w);

Trace execute(const RunConfig& cfg, const Workload& w);

void write_trace_csv(std::ostream& out, const Trace& trace);
nlohmann::json summarize(const RunConfig& cfg, const Workload& w, const Trace& trace);

/// %.17g
std::string format_double(double v);

struct RunOutcome {
  Trace trace;
  nlohmann::json summary;
  std::string csv_path;
  std::string json_path;
};

/// Runs and writes <output>/trace.csv and <output>/summary.json.
RunOutcome run_config(const RunConfig& cfg);

/// `ofw run <config>`: 0 on success, 2 on invalid config, 1 on other failures.
int run_command(const std::string& config_path, std::ostream& out, std::ostream& err);

}  // namespace ofw::cli
