#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "vfedsim/core.hpp"

namespace vfedsim::selection {

struct SelectionConfig {
  double emd_threshold = 1.0;
  int min_selected = 0;  // reporting floor only; never force-includes anyone

  void validate() const;  // throws std::invalid_argument
};

// Built-in data-quality thresholds per (dataset, partition alpha). alpha is
// snapped to the nearest tabulated value. Throws std::invalid_argument on an
// unknown dataset name.
double default_emd_threshold(std::string_view dataset, double alpha);

// What a vehicle reveals before selection, plus round timing context.
struct Candidate {
  std::uint64_t vehicle_id = 0;
  core::LabelHistogram histogram;
  double emd = 0.0;
  double t_hold_s = 0.0;
  double deadline_s = 0.0;
  double estimated_latency_s = 0.0;
};

struct CandidateReport {
  std::uint64_t vehicle_id = 0;
  double emd = 0.0;
  double t_hold_s = 0.0;
  double deadline_s = 0.0;
  double estimated_latency_s = 0.0;
  bool selected = false;
};

struct SelectionResult {
  std::vector<std::uint64_t> selected;  // ids, ascending
  std::vector<CandidateReport> reports;
  bool shortfall = false;  // fewer selected than cfg.min_selected
};

struct VehicleMeta {
  std::uint64_t vehicle_id = 0;
  core::LabelHistogram histogram;
  double t_hold_s = 0.0;
  double deadline_s = 0.0;
};

// Label sharing is modeled with zero delay: metadata passes through and the
// EMD is computed against the uniform reference (or the one provided).
// Vehicles with empty histograms get emd = 2 so they can never pass a
// threshold <= 2 filter.
std::vector<Candidate> share_labels(std::span<const VehicleMeta> vehicles);
std::vector<Candidate> share_labels(std::span<const VehicleMeta> vehicles,
                                    std::span<const double> reference);

// Pure feasibility filter: selected iff the histogram is nonempty AND
// estimated_latency <= deadline AND emd <= threshold. If an estimator is
// given it overwrites each candidate's estimated_latency first. Throws
// std::invalid_argument on duplicate ids.
SelectionResult select_vehicles(
    std::vector<Candidate> candidates, const SelectionConfig& cfg,
    const std::function<double(const Candidate&)>& latency_estimator = nullptr);

}  // namespace vfedsim::selection
