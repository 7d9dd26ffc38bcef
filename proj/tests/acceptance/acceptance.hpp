// The nine-point acceptance matrix. Each criterion runs standalone, prints
// one pass/fail line, and pins its own tolerances; the harness is shared by
// the ctest binary and the CLI `accept` subcommand.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double wall_s = 0.0;
};

struct Options {
  double slack = 0.1;  // relative slack for the proof monitors
};

constexpr int criterion_count = 9;

CriterionResult run_one(int id, const Options& opts = {});
std::vector<CriterionResult> run_all(const Options& opts = {});

void print_report(const std::vector<CriterionResult>& results, std::ostream& out);
bool all_pass(const std::vector<CriterionResult>& results);

}  // namespace acceptance
