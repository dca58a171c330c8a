// Experiment harness: runs a configured experiment, writes its outputs under
// a content-addressed directory, and compares result tables for regression
// checks.
//
// Output contract per run (directory `<out>/<experiment>-<hash12>/`):
//  * table.tsv     — tab-separated results; `#` header lines document the
//                    experiment, config hash, and every column.  Rerunning
//                    the same config reproduces this file byte for byte,
//                    independent of the worker count.
//  * records.jsonl — one JSON object per line (fits, spectra, diagnostics);
//                    deterministic for the same reason.
//  * meta.json     — provenance sidecar (tool version, timestamp, canonical
//                    config).  The timestamp lives here, and only here, so
//                    the data files stay reproducible.
//
// Exit-code convention (used by the command-line tool): 0 success, 2 bad
// configuration or arguments, 3 numerical failure in at least one point.

#pragma once

#include <iosfwd>
#include <string>

#include "dxyz/config.hpp"

namespace dxyz {

struct RunPaths {
  std::string dir;
  std::string table;
  std::string records;
  std::string meta;
};

struct RunOutcome {
  RunPaths paths;
  std::string hash;
  int points = 0;    // work items dispatched
  int failures = 0;  // points that raised; their errors land in records.jsonl
  int exit_code() const { return failures > 0 ? 3 : 0; }
};

// Run the experiment described by `cfg`, writing outputs as described above.
// Per-point numerical failures are recorded and counted, not thrown;
// configuration and I/O problems throw (ConfigError / runtime_error).
RunOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log);

struct CompareReport {
  bool compatible = false;     // same experiment, columns, and row count
  double max_deviation = 0.0;  // worst |a - b| over all numeric cells
  std::string worst_column;
  int worst_row = 0;  // 1-based data row of the worst deviation
  std::string message;
};

// Compare two result tables cell by cell.  NaN agrees with NaN; a NaN/number
// mismatch makes the tables incompatible.
CompareReport compare_tables(const std::string& path_a,
                             const std::string& path_b);

// Deterministic per-point seed stream derived from the run seed.
std::uint64_t point_seed(std::uint64_t base, std::uint64_t index);

}  // namespace dxyz
