#pragma once

// Acceptance experiments behind `ofw verify` and the acceptance test binary.
// Every criterion reports its measured values next to the threshold.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ofw/solvers.hpp"

namespace ofw::cli {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// One line: "PASS [id] name: detail (x.x s)".
std::string format_result(const CriterionResult& r);

struct SuiteInfo {
  std::string name;
  std::vector<int> criteria;
};

/// Named suites, "all" first.
const std::vector<SuiteInfo>& suites();

class Verifier {
 public:
  /// Progress notes go to `log` when set.
  explicit Verifier(std::ostream* log = nullptr) : log_(log) {}

  /// Results ordered by criterion id. Unknown names throw ArgumentError
  /// listing the available suites.
  std::vector<CriterionResult> run(const std::string& suite);
  CriterionResult criterion(int id);

  CriterionResult interior_lasso();    // 1
  CriterionResult boundary_lasso();    // 2
  CriterionResult grad_error();        // 3
  CriterionResult nonconvex();         // 4
  CriterionResult drop_lemma();        // 5
  CriterionResult active_set();        // 6
  CriterionResult lmo();               // 7
  CriterionResult aggregators();       // 8
  CriterionResult solver_reference();  // 9
  CriterionResult mc();                // 10

 private:
  struct OawRun {
    std::string label;
    std::vector<StepRecord> records;
    std::string error;  // set when the run threw
  };

  void note(const std::string& msg) const;

  std::ostream* log_;
  std::optional<CriterionResult> boundary_;
  std::optional<CriterionResult> nonconvex_;
  std::vector<OawRun> oaw_runs_;
};

/// `ofw verify [suite]`: 0 iff every criterion passes, 2 for an unknown suite.
int verify_command(const std::string& suite, std::ostream& out, std::ostream& err);

/// `ofw lmo-check <dims> <trials>`: "m1xm2" checks the trace-norm LMO against a
/// dense SVD, "n" checks the l1 and vertex LMOs against exhaustive scans.
int lmo_check_command(const std::string& dims, std::int64_t trials, std::ostream& out, std::ostream& err);

}  // namespace ofw::cli
