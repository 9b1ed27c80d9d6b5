#include "vfedsim/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vfedsim/rng.hpp"

namespace vfedsim::mobility {

double RoadConfig::half_span_m() const {
  return std::sqrt(coverage_radius_m * coverage_radius_m -
                   road_offset_m * road_offset_m);
}

void RoadConfig::validate() const {
  if (!(coverage_radius_m > 0.0))
    throw std::invalid_argument("road: coverage_radius_m must be > 0");
  if (!(road_offset_m >= 0.0) || road_offset_m >= coverage_radius_m)
    throw std::invalid_argument("road: road_offset_m must be in [0, r)");
  if (!(v_min_kmh > 0.0) || v_min_kmh > v_max_kmh)
    throw std::invalid_argument("road: need 0 < v_min_kmh <= v_max_kmh");
  if (max_vehicles < 1)
    throw std::invalid_argument("road: max_vehicles must be >= 1");
  if (!(speed_std_coeff >= 0.0))
    throw std::invalid_argument("road: speed_std_coeff must be >= 0");
  if (!(arrival_rate >= 0.0))
    throw std::invalid_argument("road: arrival_rate must be >= 0");
  if (!(t_max_s > 0.0))
    throw std::invalid_argument("road: t_max_s must be > 0");
  if (initial_vehicles < 0)
    throw std::invalid_argument("road: initial_vehicles must be >= 0");
}

double kmh_to_mps(double kmh) { return kmh / 3.6; }

double mean_speed_kmh(const RoadConfig& cfg, int current_count) {
  const double congested =
      cfg.v_max_kmh *
      (1.0 - static_cast<double>(current_count) / cfg.max_vehicles);
  return std::max(congested, cfg.v_min_kmh);
}

double sample_speed_mps(const RoadConfig& cfg, double mean_kmh,
                        std::mt19937_64& rng) {
  double kmh = mean_kmh;
  const double stddev = cfg.speed_std_coeff * mean_kmh;
  if (stddev > 0.0) {
    std::normal_distribution<double> dist(mean_kmh, stddev);
    kmh = dist(rng);
  }
  kmh = std::clamp(kmh, cfg.v_min_kmh, cfg.v_max_kmh);
  return kmh_to_mps(kmh);
}

double holding_time_s(const RoadConfig& cfg, const VehicleKinematics& kin) {
  if (kin.speed_mps == 0.0)
    throw std::domain_error("holding_time: zero speed");
  const double span = cfg.half_span_m();
  const double sign = kin.speed_mps > 0.0 ? 1.0 : -1.0;
  const double remaining = std::max(span - sign * kin.position_m, 0.0);
  return remaining / std::abs(kin.speed_mps);
}

double round_deadline_s(const RoadConfig& cfg, double t_hold_s) {
  return std::min(t_hold_s, cfg.t_max_s);
}

double distance_to_rsu_m(const RoadConfig& cfg, const VehicleKinematics& kin) {
  return std::hypot(cfg.road_offset_m, kin.position_m);
}

Traffic::Traffic(const RoadConfig& cfg, std::uint64_t master_seed)
    : cfg_(cfg), rng_(make_rng(master_seed, "mobility")) {
  cfg_.validate();
}

void Traffic::spawn(bool uniform_position) {
  const double span = cfg_.half_span_m();
  Vehicle v;
  v.id = next_id_++;
  std::uniform_int_distribution<int> dir(0, 1);
  const double sign = dir(rng_) == 0 ? 1.0 : -1.0;
  if (uniform_position) {
    std::uniform_real_distribution<double> pos(-span, span);
    v.kin.position_m = pos(rng_);
  } else {
    // arrivals enter at the upstream edge of coverage
    v.kin.position_m = -sign * span;
  }
  const double mean =
      mean_speed_kmh(cfg_, static_cast<int>(active_.size()));
  v.kin.speed_mps = sign * sample_speed_mps(cfg_, mean, rng_);
  active_.push_back(v);
}

const std::vector<Vehicle>& Traffic::step_arrivals() {
  if (first_round_) {
    for (int i = 0; i < cfg_.initial_vehicles; ++i) spawn(true);
    first_round_ = false;
  }
  if (cfg_.arrival_rate > 0.0) {
    std::poisson_distribution<int> arrivals(cfg_.arrival_rate);
    const int n = arrivals(rng_);
    for (int i = 0; i < n; ++i) spawn(false);
  }
  return active_;
}

void Traffic::advance(double wall_s) {
  if (!(wall_s >= 0.0)) throw std::invalid_argument("advance: negative wall time");
  const double span = cfg_.half_span_m();
  for (auto& v : active_) v.kin.position_m += v.kin.speed_mps * wall_s;
  std::erase_if(active_, [span](const Vehicle& v) {
    return std::abs(v.kin.position_m) > span;
  });
}

}  // namespace vfedsim::mobility
