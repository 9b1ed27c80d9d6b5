#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vfedsim/config.hpp"
#include "vfedsim/records.hpp"

namespace vfedsim::sim {

struct SimResult {
  std::vector<RoundRecord> records;
  core::ModelParams global;
  nlohmann::json summary;
};

// Runs the full round loop: arrivals -> label sharing -> selection ->
// resource allocation -> training/aggregation -> bound -> clock advance.
// threads only parallelizes per-vehicle training and never changes results.
SimResult run_simulation(const RunConfig& cfg, int threads = 1);

std::string records_csv(const std::vector<RoundRecord>& records);

// rounds.csv and summary.json under out_dir (created if needed).
void write_outputs(const SimResult& res, const std::string& out_dir);

// One swept config field: dotted path into the config document plus the
// values to try. Paths are validated by strict re-parsing, so a typo fails
// fast instead of silently sweeping nothing.
struct SweepAxis {
  std::string path;
  std::vector<nlohmann::json> values;
};

struct SweepPoint {
  std::vector<nlohmann::json> values;  // aligned with axes
  nlohmann::json summary;
};

struct SweepResult {
  std::vector<SweepAxis> axes;
  std::vector<SweepPoint> points;  // row-major over the axis cross product
};

SweepResult run_sweep(const RunConfig& base, const std::vector<SweepAxis>& axes,
                      int jobs);

std::string sweep_csv(const SweepResult& sw);
void write_sweep(const SweepResult& sw, const std::string& out_path);

}  // namespace vfedsim::sim
