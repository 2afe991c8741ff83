#pragma once

#include <string>
#include <vector>

#include "vpgen/config.hpp"

namespace vpgen {

std::string sha256_hex(const std::string& data);

struct ExperimentResult {
  std::string out_dir;
  std::vector<std::string> artifacts;  // relative file names, in write order
  std::vector<std::string> failures;   // per-run failures (also in manifest)
  std::string note;                    // short human-readable outcome line
};

// Executes the configured experiment: creates out_dir, writes the canonical
// config, the experiment's CSV artifacts, and manifest.json with
// {config_sha256, version, started, finished, failures}. Per-run failures are
// recorded and do not abort the experiment.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir, int threads = 1);

// Re-derives summary.csv from config.json + runs.csv + metrics CSVs already
// present in dir (the aggregation pass behind the "report" subcommand).
ExperimentResult run_report(const std::string& dir);

}  // namespace vpgen
