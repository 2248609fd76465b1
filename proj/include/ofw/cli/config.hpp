#pragma once

// JSON run configuration: parsing, validation with line-referenced errors,
// and the canonical digest recorded in every output.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ofw/core.hpp"
#include "ofw/lmo.hpp"
#include "ofw/metrics.hpp"
#include "ofw/solvers.hpp"
#include "ofw/workloads.hpp"

namespace ofw::cli {

/// Invalid configuration. `what()` reads "<source>:<line>: <pointer>: <message>".
class ConfigError : public ArgumentError {
 public:
  ConfigError(const std::string& source, int line, const std::string& pointer, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

enum class WorkloadKind { LassoFixed, LassoRandom, Mc, Classification };
enum class DataFormat { McTriplets, LabeledSparse };

const char* to_string(WorkloadKind kind);
const char* to_string(DataFormat format);

struct DataSpec {
  std::string path;
  DataFormat format = DataFormat::McTriplets;
  std::optional<Index> dim;  // labeled-sparse only; inferred when absent
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::LassoFixed;
  LassoParams lasso;
  McParams mc;
  ClassificationParams classification;
  std::optional<double> radius;  // absolute radius, overriding r_factor
  std::int64_t reference_budget = 1000000;
  PowerIterConfig power;
};

struct RunConfig {
  WorkloadSpec workload;
  SolverKind solver = SolverKind::OFW;
  StepSchedule schedule = Harmonic{2};
  RunOptions run;
  Cadence cadence = Cadence::Geometric;
  std::string output = "ofw-out";
  std::optional<DataSpec> data;

  /// Normalized form with every default filled in (output path excluded).
  nlohmann::json canonical() const;
  /// 16 hex digits of FNV-1a 64 over canonical().dump().
  std::string digest() const;
  std::vector<std::uint64_t> seeds() const;
};

/// Parses and validates. `source` names the text in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(const std::string& bytes);

/// Line of every JSON pointer in `text` (keys and array elements), 1-based.
std::map<std::string, int> pointer_lines(const std::string& text);

}  // namespace ofw::cli
