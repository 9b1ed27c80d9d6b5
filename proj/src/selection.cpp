#include "vfedsim/selection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace vfedsim::selection {

void SelectionConfig::validate() const {
  if (!(emd_threshold >= 0.0 && emd_threshold <= 2.0))
    throw std::invalid_argument("selection: emd_threshold must be in [0, 2]");
  if (min_selected < 0)
    throw std::invalid_argument("selection: min_selected must be >= 0");
}

namespace {

constexpr std::array<double, 4> kAlphaGrid = {0.1, 0.3, 0.5, 1.0};
constexpr std::array<double, 4> kCifarThresholds = {1.5, 1.2, 1.0, 0.8};
constexpr std::array<double, 4> kGtsrbThresholds = {1.5, 1.3, 1.2, 1.0};

}  // namespace

double default_emd_threshold(std::string_view dataset, double alpha) {
  const std::array<double, 4>* row = nullptr;
  if (dataset == "cifar10" || dataset == "cifar100" || dataset == "synthetic")
    row = &kCifarThresholds;
  else if (dataset == "gtsrb")
    row = &kGtsrbThresholds;
  else
    throw std::invalid_argument("default_emd_threshold: unknown dataset '" +
                                std::string(dataset) + "'");
  std::size_t best = 0;
  for (std::size_t i = 1; i < kAlphaGrid.size(); ++i)
    if (std::abs(alpha - kAlphaGrid[i]) < std::abs(alpha - kAlphaGrid[best]))
      best = i;
  return (*row)[best];
}

std::vector<Candidate> share_labels(std::span<const VehicleMeta> vehicles) {
  return share_labels(vehicles, {});
}

std::vector<Candidate> share_labels(std::span<const VehicleMeta> vehicles,
                                    std::span<const double> reference) {
  std::vector<Candidate> out;
  out.reserve(vehicles.size());
  for (const auto& v : vehicles) {
    Candidate c;
    c.vehicle_id = v.vehicle_id;
    c.histogram = v.histogram;
    c.t_hold_s = v.t_hold_s;
    c.deadline_s = v.deadline_s;
    if (v.histogram.empty())
      c.emd = 2.0;  // worst possible quality: unselectable
    else
      c.emd = reference.empty() ? core::compute_emd(v.histogram).emd
                                : core::compute_emd(v.histogram, reference).emd;
    out.push_back(std::move(c));
  }
  return out;
}

SelectionResult select_vehicles(
    std::vector<Candidate> candidates, const SelectionConfig& cfg,
    const std::function<double(const Candidate&)>& latency_estimator) {
  cfg.validate();
  std::unordered_set<std::uint64_t> seen;
  for (const auto& c : candidates)
    if (!seen.insert(c.vehicle_id).second)
      throw std::invalid_argument("select_vehicles: duplicate vehicle id");

  SelectionResult result;
  for (auto& c : candidates) {
    if (latency_estimator) c.estimated_latency_s = latency_estimator(c);
    CandidateReport r;
    r.vehicle_id = c.vehicle_id;
    r.emd = c.emd;
    r.t_hold_s = c.t_hold_s;
    r.deadline_s = c.deadline_s;
    r.estimated_latency_s = c.estimated_latency_s;
    // empty datasets are never selectable, whatever the threshold
    r.selected = !c.histogram.empty() &&
                 c.estimated_latency_s <= c.deadline_s &&
                 c.emd <= cfg.emd_threshold;
    if (r.selected) result.selected.push_back(c.vehicle_id);
    result.reports.push_back(r);
  }
  std::sort(result.selected.begin(), result.selected.end());
  result.shortfall =
      static_cast<int>(result.selected.size()) < cfg.min_selected;
  return result;
}

}  // namespace vfedsim::selection
