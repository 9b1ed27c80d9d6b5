#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace vfedsim::sim {

// One CSV row per round. Per-vehicle columns are ';'-packed and aligned with
// selected_ids. Doubles are printed with %.17g so identical runs produce
// byte-identical files.
struct RoundRecord {
  int round = 0;
  double wall_s = 0.0;
  int active_vehicles = 0;
  int candidates = 0;
  int selected = 0;
  std::vector<std::uint64_t> selected_ids;
  double emd_mean = 0.0;
  double kappa1_policy = 1.0;
  double kappa2_policy = 0.0;
  double kappa1_applied = 1.0;
  double kappa2_applied = 0.0;
  double t_bar_s = 0.0;
  long long images = 0;
  long long images_cum = 0;
  double accuracy = 0.0;
  double bound = 0.0;  // nan when the bound section is disabled
  double total_energy_j = 0.0;
  int dual_iters = 0;
  int sca_iters = 0;
  int bcd_sweeps = 0;
  bool alloc_feasible = true;
  bool alloc_converged = true;
  bool empty_round = false;
  bool selection_shortfall = false;
  int deadline_violations = 0;
  std::vector<double> share;
  std::vector<double> phi_w;
  std::vector<double> latency_s;
  std::vector<double> energy_j;
};

std::string format_double(double v);  // %.17g
std::string csv_header();
std::string csv_row(const RoundRecord& r);

nlohmann::json summary_json(const std::vector<RoundRecord>& records,
                            std::uint64_t seed, const std::string& mode);

}  // namespace vfedsim::sim
