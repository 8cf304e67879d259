#ifndef CW_REPORT_H_
#define CW_REPORT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "cw/dataset.h"
#include "cw/harness.h"

namespace cw {

// CSV header of results.csv.
extern const char* const kResultColumns;

// Relative path of a row's stored adversarial inside a report directory.
std::filesystem::path adversarial_path(const ResultRow& row);

// Writes results.csv, summary.json, adv/... for every successful row and,
// per sweep, sweep_<param>.csv and sweep_<param>.svg. Creates dir as
// needed; throws std::runtime_error when a file cannot be written.
void emit_report(const ResultTable& table, const std::filesystem::path& dir,
                 const std::vector<SweepResult>& sweeps = {});

std::string results_csv(const ResultTable& table);
std::string summary_json(const std::map<std::string, CellStats>& cells);
std::string sweep_svg(const SweepResult& sweep);

// Rows of a results.csv (without adversarial images).
ResultTable read_results(const std::filesystem::path& csv);

struct VerifyReport {
  std::size_t checked = 0;
  std::size_t mismatched = 0;
  std::vector<std::string> problems;
};

// Reloads every stored adversarial of a report directory and asks its named
// target (uncounted) whether it still fools it; also checks that failed rows
// stored nothing.
VerifyReport verify_report(const std::filesystem::path& dir, const Zoo& zoo,
                           const Dataset& data);

}  // namespace cw

#endif  // CW_REPORT_H_
