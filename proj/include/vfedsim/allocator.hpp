#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vfedsim/phy.hpp"

namespace vfedsim::alloc {

// Raised when a resource instance admits no feasible assignment (subcarrier
// budget below the energy-driven floor, or a vehicle that cannot meet its
// energy cap at phi_min).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// One selected vehicle as the allocator sees it: local compute cost plus the
// channel constant b' = h0 * d^-gamma / N0 so that snr = b' * phi.
struct VehicleLink {
  std::uint64_t id = 0;
  double compute_time_s = 0.0;        // A
  double compute_energy_j = 0.0;      // C (also the energy-block constant)
  double gain_over_noise_per_w = 0.0; // b'
  double deadline_s = 0.0;            // informational; checked by the harness
};

struct Tolerances {
  double eps_share = 1e-4;       // bandwidth stop: Linf change of l
  double eps_power_w = 1e-4;     // power stop: change of phi
  double eps_images = 1.0;       // budget stop: change of b
  int max_dual_iters = 200;
  int max_sca_iters = 50;
  int max_bcd_sweeps = 30;
  double dual_step0 = 1.0;       // relaxation on the gap-over-norm dual step, in (0, 2)
  double constraint_rel_tol = 1e-6;
};

struct Problem {
  std::vector<VehicleLink> vehicles;
  double model_size_bits = 5e7;
  double subcarrier_bandwidth_hz = 1e7;  // W per subchannel
  int subcarriers = 20;                  // M
  double energy_cap_j = 25.0;            // per-vehicle cap on compute + upload
  double phi_min_w = 0.1;
  double phi_max_w = 1.0;
  double l_min = 0.05;
  phy::RsuProfile rsu;
  long long prev_round_images = 0;       // sizes the stale training-time term
  double idle_window_s = 3.0;            // budget window when nobody is selected

  void validate() const;  // throws std::invalid_argument

  // Upload seconds at share 1: s / (W * log2(1 + b'_n * phi)).
  double upload_time_coeff(std::size_t n, double phi) const;
  double upload_seconds(std::size_t n, double phi, double share) const;
  double upload_energy_j(std::size_t n, double phi, double share) const;
  // Previous round's augmented-training time (stale term of the budget rule).
  double prev_train_time_s() const;
};

// Stationary share of the bandwidth Lagrangian: sqrt((l1*B + l2*D)/l3).
double stationary_share(double lambda1, double upload_coeff, double lambda2,
                        double energy_coeff, double lambda3);

struct BandwidthResult {
  std::vector<double> share;       // returned allocation, feasible
  std::vector<double> stationary;  // closed-form shares at the final multipliers
  std::vector<bool> interior;      // share == stationary, strictly inside [l_min, 1]
  std::vector<double> lambda1;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double t_bar_s = 0.0;
  double gap = 0.0;  // certified duality gap: t_bar_s is within gap of optimal
  bool converged = false;
  int iterations = 0;
  double min_multiplier_seen = 0.0;  // never negative: multipliers stay projected
};

// Dual ascent at fixed per-vehicle power. lambda1 lives on the probability
// simplex (the dual is finite only when the deadline multipliers sum to 1),
// lambda2 takes projected subgradient steps, and lambda3 is rebalanced
// exactly against the subcarrier budget every iteration. Because the clamped
// closed form is the exact inner minimizer, every iteration yields a valid
// dual lower bound; steps are sized by the remaining primal-dual gap and the
// loop stops once the share vector settles with that gap certified closed.
// Always returns a feasible share vector (best feasible iterate when the
// dual does not settle within max_dual_iters); throws InfeasibleError when
// no feasible share vector exists.
BandwidthResult bandwidth_allocate(const Problem& prob,
                                   std::span<const double> phi,
                                   const Tolerances& tol,
                                   const BandwidthResult* warm = nullptr,
                                   std::span<const double> seed_share = {});

// Upload time/energy and their power derivatives for one link, in the
// normalized form t(phi) = a / log2(1 + b*phi), e(phi) = phi * t(phi).
double upload_time(double a, double b, double phi);
double upload_time_deriv(double a, double b, double phi);
double upload_energy(double a, double b, double phi);
double upload_energy_deriv(double a, double b, double phi);

struct PowerResult {
  std::vector<double> phi;
  std::vector<bool> energy_capped;  // true when the cap, not the box, binds
  bool converged = false;
  int iterations = 0;       // max over vehicles
  bool backtracked = false; // a surrogate solution violated the true cap
};

// Successive convex approximation per vehicle at fixed shares: linearize
// t and e at the current power, push toward the largest power the linearized
// cap admits, then re-validate the true cap and bisect back if violated.
// Throws InfeasibleError when phi_min already busts a vehicle's cap.
PowerResult power_assign(const Problem& prob, std::span<const double> share,
                         std::span<const double> phi0, const Tolerances& tol);

// max(0, floor((window - prev_train) / seconds_per_image)), with a 1e-12
// relative guard so exact integer boundaries are not lost to rounding.
long long generation_budget(double window_s, double prev_train_s,
                            double seconds_per_image);

struct SweepTrace {
  double t_bar_s = 0.0;
  double share_delta = 0.0;
  double phi_delta_w = 0.0;
  long long images = 0;
  int dual_iters = 0;
  int sca_iters = 0;
};

struct Decision {
  std::vector<std::uint64_t> vehicle_ids;
  std::vector<double> share;
  std::vector<double> phi_w;
  std::vector<double> latency_s;   // per-vehicle compute + upload
  std::vector<double> energy_j;    // per-vehicle compute + upload
  double t_bar_s = 0.0;            // makespan over selected vehicles
  long long images = 0;
  double budget_window_s = 0.0;    // window the image budget was cut from
  double prev_train_time_s = 0.0;  // stale training-time term used
  bool feasible = false;
  bool empty_selection = false;
  std::string infeasible_reason;
  std::vector<SweepTrace> trace;   // one entry per sweep, objective non-increasing
  BandwidthResult bandwidth;       // certificate from the last accepted dual run
  int sweeps = 0;
  bool converged = false;
};

// Block-coordinate descent over (shares, powers, image budget). Blocks are
// accepted only when they do not worsen the feasible objective, so the trace
// is non-increasing by construction. Throws InfeasibleError only for
// structural infeasibility (share floor exceeds the subcarrier budget).
Decision bcd_solve(const Problem& prob, const Tolerances& tol);

struct Violation {
  std::string constraint;
  double relative_amount = 0.0;
};

// Re-checks every constraint of a decision against the instance; empty
// result means feasible within rel_tol.
std::vector<Violation> validate_decision(const Problem& prob,
                                         const Decision& d, double rel_tol);

}  // namespace vfedsim::alloc
