#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vfedsim::mobility {

// Straight road segment crossing a circular coverage area of radius r whose
// center sits at perpendicular distance e from the road. Vehicles live on
// x in [-L, L] with L = sqrt(r^2 - e^2); the RSU projects onto x = 0.
struct RoadConfig {
  double coverage_radius_m = 500.0;  // r
  double road_offset_m = 300.0;      // e
  double v_max_kmh = 120.0;
  double v_min_kmh = 60.0;
  int max_vehicles = 40;             // congestion knee of the speed model
  double speed_std_coeff = 0.1;      // k: stddev = k * mean
  double arrival_rate = 4.0;         // Poisson mean arrivals per round
  double t_max_s = 3.0;              // round deadline cap
  int initial_vehicles = 0;          // spawned at t = 0

  double half_span_m() const;        // L
  void validate() const;             // throws std::invalid_argument
};

struct VehicleKinematics {
  double position_m = 0.0;  // x, signed along the road
  double speed_mps = 0.0;   // signed; >0 drives toward +x
};

double kmh_to_mps(double kmh);

// Congestion-aware mean speed: max(v_max * (1 - m / M_max), v_min), km/h.
double mean_speed_kmh(const RoadConfig& cfg, int current_count);

// Normal(mean, (k*mean)^2) truncated to [v_min, v_max] by clamping, then
// converted to m/s. Unsigned magnitude; the caller picks direction.
double sample_speed_mps(const RoadConfig& cfg, double mean_kmh,
                        std::mt19937_64& rng);

// Remaining coverage distance over |speed|: ( L - sign(v) * x ) / |v|.
// Throws std::domain_error on zero speed.
double holding_time_s(const RoadConfig& cfg, const VehicleKinematics& kin);

double round_deadline_s(const RoadConfig& cfg, double t_hold_s);

double distance_to_rsu_m(const RoadConfig& cfg, const VehicleKinematics& kin);

struct Vehicle {
  std::uint64_t id = 0;
  VehicleKinematics kin;
};

// Poisson arrivals with uniform entry positions; vehicles persist across
// rounds and are dropped once they leave the coverage span. All draws come
// from one dedicated substream, so traffic is reproducible regardless of
// what the rest of the simulation consumes.
class Traffic {
 public:
  Traffic(const RoadConfig& cfg, std::uint64_t master_seed);

  // Spawns this round's Poisson arrivals (plus the initial fleet on the
  // first call) and returns the active set.
  const std::vector<Vehicle>& step_arrivals();

  // Advances positions by wall_s seconds and drops departed vehicles.
  void advance(double wall_s);

  const std::vector<Vehicle>& vehicles() const { return active_; }
  std::uint64_t spawned_total() const { return next_id_; }

 private:
  void spawn(bool uniform_position);

  RoadConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<Vehicle> active_;
  std::uint64_t next_id_ = 0;
  bool first_round_ = true;
};

}  // namespace vfedsim::mobility
