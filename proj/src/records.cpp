#include "vfedsim/records.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace vfedsim::sim {
namespace {

// Packs a list into a single CSV cell. Empty list prints as "-" so the column
// count stays fixed and the cell is never mistaken for an empty string.
template <typename T, typename Fmt>
std::string pack(const std::vector<T>& xs, Fmt fmt) {
  if (xs.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    out += fmt(xs[i]);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_header() {
  return "round,wall_s,active_vehicles,candidates,selected,selected_ids,"
         "emd_mean,kappa1_policy,kappa2_policy,kappa1_applied,kappa2_applied,"
         "t_bar_s,images,images_cum,accuracy,bound,total_energy_j,"
         "dual_iters,sca_iters,bcd_sweeps,alloc_feasible,alloc_converged,"
         "empty_round,selection_shortfall,deadline_violations,"
         "share,phi_w,latency_s,energy_j";
}

std::string csv_row(const RoundRecord& r) {
  std::ostringstream os;
  os << r.round << ',' << format_double(r.wall_s) << ',' << r.active_vehicles
     << ',' << r.candidates << ',' << r.selected << ','
     << pack(r.selected_ids, [](std::uint64_t v) { return std::to_string(v); })
     << ',' << format_double(r.emd_mean) << ','
     << format_double(r.kappa1_policy) << ',' << format_double(r.kappa2_policy)
     << ',' << format_double(r.kappa1_applied) << ','
     << format_double(r.kappa2_applied) << ',' << format_double(r.t_bar_s)
     << ',' << r.images << ',' << r.images_cum << ','
     << format_double(r.accuracy) << ',' << format_double(r.bound) << ','
     << format_double(r.total_energy_j) << ',' << r.dual_iters << ','
     << r.sca_iters << ',' << r.bcd_sweeps << ',' << (r.alloc_feasible ? 1 : 0)
     << ',' << (r.alloc_converged ? 1 : 0) << ',' << (r.empty_round ? 1 : 0)
     << ',' << (r.selection_shortfall ? 1 : 0) << ',' << r.deadline_violations
     << ',' << pack(r.share, format_double) << ','
     << pack(r.phi_w, format_double) << ','
     << pack(r.latency_s, format_double) << ','
     << pack(r.energy_j, format_double);
  return os.str();
}

nlohmann::json summary_json(const std::vector<RoundRecord>& records,
                            std::uint64_t seed, const std::string& mode) {
  nlohmann::json j;
  j["seed"] = seed;
  j["mode"] = mode;
  j["rounds"] = records.size();
  double wall = 0.0, energy = 0.0, final_acc = 0.0, final_bound = 0.0;
  double t_bar_sum = 0.0, selected_sum = 0.0;
  long long images = 0;
  int empty_rounds = 0, infeasible_rounds = 0, shortfalls = 0;
  double acc_best = 0.0;
  for (const auto& r : records) {
    wall += r.wall_s;
    energy += r.total_energy_j;
    images += r.images;
    t_bar_sum += r.t_bar_s;
    selected_sum += r.selected;
    if (r.empty_round) ++empty_rounds;
    if (!r.alloc_feasible) ++infeasible_rounds;
    if (r.selection_shortfall) ++shortfalls;
    if (r.accuracy > acc_best) acc_best = r.accuracy;
    final_acc = r.accuracy;
    final_bound = r.bound;
  }
  const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
  j["mean_t_bar_s"] = t_bar_sum / n;
  j["mean_selected"] = selected_sum / n;
  j["wall_s"] = wall;
  j["total_energy_j"] = energy;
  j["images"] = images;
  j["empty_rounds"] = empty_rounds;
  j["infeasible_rounds"] = infeasible_rounds;
  j["selection_shortfalls"] = shortfalls;
  j["final_accuracy"] = final_acc;
  j["best_accuracy"] = acc_best;
  if (std::isnan(final_bound))
    j["final_bound"] = nullptr;
  else
    j["final_bound"] = final_bound;
  return j;
}

}  // namespace vfedsim::sim
