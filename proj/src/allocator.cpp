#include "vfedsim/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace vfedsim::alloc {

namespace {

constexpr double kLambda3Floor = 1e-12;  // keeps the closed form defined
constexpr double kTiny = 1e-12;
constexpr double kGapRelTol = 1e-7;  // duality gap required to declare convergence

double log2_1p(double x) { return std::log1p(x) / std::numbers::ln2_v<double>; }

}  // namespace

void Problem::validate() const {
  if (!(model_size_bits > 0.0))
    throw std::invalid_argument("alloc: model_size_bits must be > 0");
  if (!(subcarrier_bandwidth_hz > 0.0))
    throw std::invalid_argument("alloc: subcarrier_bandwidth_hz must be > 0");
  if (subcarriers < 1)
    throw std::invalid_argument("alloc: subcarriers must be >= 1");
  if (!(energy_cap_j > 0.0))
    throw std::invalid_argument("alloc: energy_cap_j must be > 0");
  if (!(phi_min_w > 0.0) || !(phi_min_w <= phi_max_w))
    throw std::invalid_argument("alloc: need 0 < phi_min_w <= phi_max_w");
  if (!(l_min > 0.0) || !(l_min <= 1.0))
    throw std::invalid_argument("alloc: l_min must be in (0, 1]");
  if (prev_round_images < 0)
    throw std::invalid_argument("alloc: prev_round_images must be >= 0");
  if (!(idle_window_s >= 0.0))
    throw std::invalid_argument("alloc: idle_window_s must be >= 0");
  rsu.validate();
  for (const auto& v : vehicles) {
    if (!(v.compute_time_s >= 0.0) || !(v.compute_energy_j >= 0.0))
      throw std::invalid_argument("alloc: vehicle compute terms must be >= 0");
    if (!(v.gain_over_noise_per_w > 0.0))
      throw std::invalid_argument("alloc: vehicle channel gain must be > 0");
  }
}

double Problem::upload_time_coeff(std::size_t n, double phi) const {
  const auto& v = vehicles[n];
  return model_size_bits /
         (subcarrier_bandwidth_hz * log2_1p(v.gain_over_noise_per_w * phi));
}

double Problem::upload_seconds(std::size_t n, double phi, double share) const {
  return upload_time_coeff(n, phi) / share;
}

double Problem::upload_energy_j(std::size_t n, double phi, double share) const {
  return phi * upload_seconds(n, phi, share);
}

double Problem::prev_train_time_s() const {
  const long long batches =
      (prev_round_images + rsu.images_per_batch - 1) / rsu.images_per_batch;
  return phy::augmented_train_time_s(rsu, batches);
}

double stationary_share(double lambda1, double upload_coeff, double lambda2,
                        double energy_coeff, double lambda3) {
  if (!(lambda3 > 0.0))
    throw std::domain_error("stationary_share: lambda3 must be > 0");
  return std::sqrt((lambda1 * upload_coeff + lambda2 * energy_coeff) / lambda3);
}

namespace {

struct BandwidthScratch {
  std::vector<double> a;      // compute time
  std::vector<double> c;      // compute energy
  std::vector<double> b;      // upload seconds at share 1
  std::vector<double> d;      // upload joules at share 1
  std::vector<double> floor;  // max(l_min, energy-driven lower bound)
};

BandwidthScratch make_scratch(const Problem& prob, std::span<const double> phi) {
  const std::size_t n = prob.vehicles.size();
  BandwidthScratch s;
  s.a.resize(n);
  s.c.resize(n);
  s.b.resize(n);
  s.d.resize(n);
  s.floor.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.a[i] = prob.vehicles[i].compute_time_s;
    s.c[i] = prob.vehicles[i].compute_energy_j;
    s.b[i] = prob.upload_time_coeff(i, phi[i]);
    s.d[i] = phi[i] * s.b[i];
    const double cap = prob.energy_cap_j - s.c[i];
    if (!(cap > 0.0))
      throw InfeasibleError("bandwidth: compute energy alone exceeds the cap (vehicle " +
                            std::to_string(prob.vehicles[i].id) + ")");
    s.floor[i] = std::max(prob.l_min, s.d[i] / cap);
    if (s.floor[i] > 1.0 + kTiny)
      throw InfeasibleError("bandwidth: upload energy exceeds the cap at full share (vehicle " +
                            std::to_string(prob.vehicles[i].id) + ")");
    s.floor[i] = std::min(s.floor[i], 1.0);
  }
  double floor_sum = 0.0;
  for (double f : s.floor) floor_sum += f;
  if (floor_sum > static_cast<double>(prob.subcarriers) * (1.0 + kTiny))
    throw InfeasibleError("bandwidth: share floor exceeds the subcarrier budget");
  return s;
}

double makespan(const BandwidthScratch& s, std::span<const double> share) {
  double t = 0.0;
  for (std::size_t i = 0; i < share.size(); ++i)
    t = std::max(t, s.a[i] + s.b[i] / share[i]);
  return t;
}

// Budget multiplier that balances the clamped closed form against the
// subcarrier budget. The clamped sum is continuous and non-increasing in
// lambda3, so bisection pins the root; the feasible (upper) end is returned.
double balance_lambda3(const BandwidthScratch& s,
                       std::span<const double> lambda1, double lambda2,
                       double budget) {
  auto total = [&](double l3) {
    double t = 0.0;
    for (std::size_t i = 0; i < s.b.size(); ++i) {
      const double raw = stationary_share(lambda1[i], s.b[i], lambda2, s.d[i], l3);
      t += std::clamp(raw, s.floor[i], 1.0);
    }
    return t;
  };
  if (total(kLambda3Floor) <= budget) return kLambda3Floor;
  double lo = kLambda3Floor, hi = 1.0;
  while (total(hi) > budget && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) > budget ? lo : hi) = mid;
  }
  return hi;
}

// Euclidean projection onto the probability simplex. Uniform shifts of the
// input land on the same point, so the subgradient can be centered freely.
std::vector<double> project_simplex(std::vector<double> x) {
  std::vector<double> u = x;
  std::sort(u.begin(), u.end(), std::greater<>());
  double run = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    run += u[j];
    const double t = (run - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  for (double& v : x) v = std::max(v - theta, 0.0);
  return x;
}

// Equalize the makespans of the unpinned coordinates over the budget they
// jointly hold. Candidates come out of std::clamp, so floor/top pins are
// exact and the classification has no tolerance in it. The sum of deadline
// shares b/(T - a) is strictly decreasing in T, which makes the equalizing
// level a bisection; misclassified sets simply produce a worse point and
// the caller's best-tracking discards it.
std::vector<double> equalize_interior(const BandwidthScratch& s,
                                      std::span<const double> cand,
                                      double budget) {
  const std::size_t n = cand.size();
  std::vector<double> out(cand.begin(), cand.end());
  std::vector<std::size_t> interior;
  double reserved = 0.0, t_lo = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cand[i] == s.floor[i] || cand[i] == 1.0) {
      reserved += cand[i];
    } else {
      interior.push_back(i);
      t_lo = std::max(t_lo, s.a[i]);
    }
  }
  const double room = budget - reserved;
  if (interior.empty() || room <= 0.0) return out;
  auto need = [&](double t) {
    double r = 0.0;
    for (std::size_t i : interior) r += s.b[i] / (t - s.a[i]);
    return r;
  };
  double hi = t_lo + 1.0;
  while (need(hi) > room && hi < 1e300) hi = t_lo + (hi - t_lo) * 2.0;
  double lo = t_lo;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (need(mid) > room ? lo : hi) = mid;
  }
  for (std::size_t i : interior)
    out[i] = std::clamp(s.b[i] / (hi - s.a[i]), s.floor[i], 1.0);
  return out;
}

// Scale down to the budget while keeping every share at or above its floor.
std::vector<double> project_budget(const BandwidthScratch& s,
                                   std::vector<double> share, double budget) {
  const std::size_t n = share.size();
  for (std::size_t i = 0; i < n; ++i)
    share[i] = std::clamp(share[i], s.floor[i], 1.0);
  for (std::size_t pass = 0; pass <= n; ++pass) {
    double total = 0.0;
    for (double v : share) total += v;
    if (total <= budget * (1.0 + kTiny)) break;
    double pinned = 0.0, free_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (share[i] <= s.floor[i] + kTiny)
        pinned += share[i];
      else
        free_sum += share[i];
    }
    if (free_sum <= 0.0) break;
    const double scale = std::max(budget - pinned, 0.0) / free_sum;
    for (std::size_t i = 0; i < n; ++i)
      if (share[i] > s.floor[i] + kTiny)
        share[i] = std::max(share[i] * scale, s.floor[i]);
  }
  return share;
}

}  // namespace

BandwidthResult bandwidth_allocate(const Problem& prob,
                                   std::span<const double> phi,
                                   const Tolerances& tol,
                                   const BandwidthResult* warm,
                                   std::span<const double> seed_share) {
  const std::size_t n = prob.vehicles.size();
  if (phi.size() != n)
    throw std::invalid_argument("bandwidth_allocate: phi size mismatch");
  const BandwidthScratch s = make_scratch(prob, phi);
  const double budget = static_cast<double>(prob.subcarriers);

  // The closed form only sees multiplier ratios once lambda3 is balanced, so
  // the all-ones start is normalized onto the dual-feasible simplex (warm
  // multipliers arrive already normalized; renormalizing is a no-op there).
  BandwidthResult res;
  res.lambda1.assign(n, 1.0);
  res.lambda2 = 1.0;
  if (warm && warm->lambda1.size() == n) {
    res.lambda1 = warm->lambda1;
    res.lambda2 = std::max(warm->lambda2, 0.0);
  }
  double scale = 0.0;
  for (double l : res.lambda1) scale += std::max(l, 0.0);
  if (scale > 0.0) {
    for (double& l : res.lambda1) l = std::max(l, 0.0) / scale;
    res.lambda2 /= scale;
  } else {
    res.lambda1.assign(n, 1.0 / static_cast<double>(n));
  }
  res.lambda3 = kLambda3Floor;
  res.min_multiplier_seen = std::numeric_limits<double>::infinity();

  // Guaranteed-feasible seed: floors plus an even spread of the leftover.
  std::vector<double> best(n);
  {
    double floor_sum = 0.0;
    for (double f : s.floor) floor_sum += f;
    const double spread = std::max(budget - floor_sum, 0.0) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) best[i] = std::min(s.floor[i] + spread, 1.0);
  }
  if (seed_share.size() == n) {
    std::vector<double> cand = project_budget(s, {seed_share.begin(), seed_share.end()}, budget);
    if (makespan(s, cand) < makespan(s, best)) best = cand;
  }
  double best_t = makespan(s, best);

  // Hybrid ascent: the deadline multipliers follow projected subgradient
  // steps on the simplex, the energy multiplier on the half-line, and the
  // budget multiplier is balanced exactly each iteration. The clamped closed
  // form is then the exact inner minimizer of the Lagrangian, so evaluating
  // it gives both the candidate and a valid dual lower bound; the step size
  // is the classic gap-over-norm rule, which vanishes only as the gap does.
  std::vector<double> raw(n), g1(n), prev_cand;
  double best_dual = -std::numeric_limits<double>::infinity();
  res.gap = std::numeric_limits<double>::infinity();

  // With a subcarrier per vehicle the box top is optimal outright: the
  // makespan falls in every share and every constraint is slack there. The
  // dual is a vertex with all deadline weight on the bottleneck vehicle.
  // Skipping the iteration also sidesteps its one degenerate regime: at a
  // slack budget the balanced lambda3 sits at its floor, the inner objective
  // goes flat, and candidates flip between box ends without settling.
  const bool roomy = static_cast<double>(n) <= budget;
  if (roomy) {
    best.assign(n, 1.0);
    best_t = makespan(s, best);
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (s.a[i] + s.b[i] > s.a[imax] + s.b[imax]) imax = i;
    res.lambda1.assign(n, 0.0);
    res.lambda1[imax] = 1.0;
    res.lambda2 = 0.0;
    res.min_multiplier_seen = 0.0;
    best_dual = best_t + kLambda3Floor * (static_cast<double>(n) - budget);
    res.gap = best_t - best_dual;
    res.converged = true;
    res.iterations = 1;
  }

  for (int k = 1; !roomy && k <= tol.max_dual_iters; ++k) {
    res.iterations = k;
    res.lambda3 = balance_lambda3(s, res.lambda1, res.lambda2, budget);
    for (std::size_t i = 0; i < n; ++i)
      raw[i] = stationary_share(res.lambda1[i], s.b[i], res.lambda2, s.d[i],
                                res.lambda3);

    std::vector<double> cand = project_budget(s, raw, budget);
    const double cand_t = makespan(s, cand);
    if (cand_t < best_t) {
      best_t = cand_t;
      best = cand;
    }

    // Primal recovery: close to the dual optimum the candidate's makespan
    // error is linear in the multiplier error while the dual value's is
    // quadratic, so the primal side is recovered separately by equalizing
    // the interior makespans. Once the candidate pins the right coordinates
    // this lands the exact optimum, which keeps the step numerator honest.
    {
      std::vector<double> eq = equalize_interior(s, cand, budget);
      double eq_sum = 0.0;
      for (double l : eq) eq_sum += l;
      if (eq_sum <= budget * (1.0 + kTiny)) {
        const double eq_t = makespan(s, eq);
        if (eq_t < best_t) {
          best_t = eq_t;
          best = std::move(eq);
        }
      }
    }

    double cand_sum = 0.0, dual_val = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cand_sum += cand[i];
      dual_val += res.lambda1[i] * (s.a[i] + s.b[i] / cand[i]);
      g1[i] = s.a[i] + s.b[i] / cand[i] - cand_t;
      g2 += s.c[i] + s.d[i] / cand[i] - prob.energy_cap_j;
    }
    dual_val += res.lambda2 * g2 + res.lambda3 * (cand_sum - budget);
    best_dual = std::max(best_dual, dual_val);
    res.gap = std::max(best_t - best_dual, 0.0);

    // Settled means the candidate stopped moving while the certificate says
    // there is nothing left to gain; a frozen candidate with an open gap is
    // a plateau (a coordinate mid-way through unpinning), not convergence.
    if (!prev_cand.empty()) {
      double delta = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        delta = std::max(delta, std::abs(cand[i] - prev_cand[i]));
      if (delta < tol.eps_share && res.gap <= kGapRelTol * std::max(1.0, best_t)) {
        res.converged = true;
        break;
      }
    }
    prev_cand = cand;

    // Drop the energy component from the step norm while it is pinned at
    // zero with an outward gradient, else its slack would stall lambda1.
    double norm2 = 0.0, g1_inf = 0.0;
    for (double g : g1) {
      norm2 += g * g;
      g1_inf = std::max(g1_inf, std::abs(g));
    }
    if (!(res.lambda2 == 0.0 && g2 < 0.0)) norm2 += g2 * g2;
    if (norm2 <= kTiny * kTiny || best_t - dual_val <= 0.0) {
      res.converged = true;
      break;
    }
    // Gap-over-norm step, capped so one iteration never moves a deadline
    // multiplier further than the simplex is wide: the gap numerator carries
    // the primal best's bias, which must not fling a settled dual away.
    double step = tol.dual_step0 * (best_t - dual_val) / norm2;
    if (g1_inf > kTiny) step = std::min(step, 0.5 / g1_inf);
    for (std::size_t i = 0; i < n; ++i) res.lambda1[i] += step * g1[i];
    res.lambda1 = project_simplex(std::move(res.lambda1));
    res.lambda2 = std::max(res.lambda2 + step * g2, 0.0);
    for (double l : res.lambda1)
      res.min_multiplier_seen = std::min(res.min_multiplier_seen, l);
    res.min_multiplier_seen = std::min({res.min_multiplier_seen, res.lambda2, res.lambda3});
  }

  // Read the multipliers off the best primal: at a contended optimum every
  // deadline-tight coordinate satisfies the stationarity identity, so weights
  // w_i = l_i^2/B_i normalized onto the simplex reproduce it exactly. The
  // budget carries a positive price only when some tight coordinate could
  // still use more of it (strictly below a full subchannel); a bottleneck
  // already at share 1 prices the budget at zero even when the repair step
  // spent every subcarrier, and then only full-share bottlenecks may carry
  // mass. The recovered point is adopted only when it certifies at least as
  // well as the loop's own iterate, so a suboptimal primal cannot
  // manufacture a certificate.
  if (!roomy) {
    double best_sum = 0.0;
    for (double l : best) best_sum += l;
    bool tight_below_cap = false;
    for (std::size_t i = 0; i < n; ++i)
      if (s.a[i] + s.b[i] / best[i] >= best_t * (1.0 - 1e-9) &&
          best[i] < 1.0 - 1e-12) {
        tight_below_cap = true;
        break;
      }
    const bool binding = tight_below_cap && best_sum >= budget * (1.0 - 1e-9);
    std::vector<double> lam(n, 0.0);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (s.a[i] + s.b[i] / best[i] < best_t * (1.0 - 1e-9)) continue;
      if (!binding && best[i] < 1.0 - 1e-12) continue;
      lam[i] = best[i] * best[i] / s.b[i];
      wsum += lam[i];
    }
    if (wsum > 0.0) {
      const double l3 = binding ? 1.0 / wsum : kLambda3Floor;
      for (double& v : lam) v /= wsum;
      double cand_sum = 0.0, qv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double raw = stationary_share(lam[i], s.b[i], 0.0, s.d[i], l3);
        const double ci = std::clamp(raw, s.floor[i], 1.0);
        cand_sum += ci;
        qv += lam[i] * (s.a[i] + s.b[i] / ci);
      }
      qv += l3 * (cand_sum - budget);
      if (qv >= best_dual) {
        best_dual = qv;
        res.lambda1 = std::move(lam);
        res.lambda2 = 0.0;
      }
    }
    res.gap = std::max(best_t - best_dual, 0.0);
    if (res.gap <= kGapRelTol * std::max(1.0, best_t)) res.converged = true;
  }

  // Rebalance so the reported multipliers are mutually consistent even when
  // the iteration budget ran out right after a lambda1/lambda2 step.
  res.lambda3 = balance_lambda3(s, res.lambda1, res.lambda2, budget);
  res.stationary.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    res.stationary[i] =
        stationary_share(res.lambda1[i], s.b[i], res.lambda2, s.d[i], res.lambda3);

  // Prefer the settled stationary point (projected) so the returned shares
  // carry the multiplier certificate; an earlier iterate can beat it only
  // inside the certified gap, which is exactly the band we allow.
  {
    std::vector<double> boxed_fin(n);
    for (std::size_t i = 0; i < n; ++i)
      boxed_fin[i] = std::clamp(res.stationary[i], prob.l_min, 1.0);
    std::vector<double> cand = project_budget(s, boxed_fin, budget);
    const double cand_t = makespan(s, cand);
    if (cand_t <= best_t + res.gap + 1e-9 * std::max(1.0, best_t)) {
      best_t = cand_t;
      best = cand;
    }
  }

  res.share = best;
  res.t_bar_s = best_t;
  if (std::isfinite(best_dual))
    res.gap = std::max(best_t - best_dual, 0.0);
  res.interior.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double st = res.stationary[i];
    res.interior[i] = res.converged && st > prob.l_min * (1.0 + 1e-9) &&
                      st < 1.0 - 1e-9 &&
                      std::abs(res.share[i] - st) <= 2e-5 * st;
  }
  return res;
}

double upload_time(double a, double b, double phi) {
  return a / log2_1p(b * phi);
}

double upload_time_deriv(double a, double b, double phi) {
  const double ln_term = std::log1p(b * phi);
  return -a * b * std::numbers::ln2_v<double> /
         ((1.0 + b * phi) * ln_term * ln_term);
}

double upload_energy(double a, double b, double phi) {
  return phi * upload_time(a, b, phi);
}

double upload_energy_deriv(double a, double b, double phi) {
  const double lg = log2_1p(b * phi);
  return a / lg - a * b * phi /
                      (std::numbers::ln2_v<double> * (1.0 + b * phi) * lg * lg);
}

PowerResult power_assign(const Problem& prob, std::span<const double> share,
                         std::span<const double> phi0, const Tolerances& tol) {
  const std::size_t n = prob.vehicles.size();
  if (share.size() != n || phi0.size() != n)
    throw std::invalid_argument("power_assign: size mismatch");

  PowerResult res;
  res.phi.resize(n);
  res.energy_capped.assign(n, false);
  res.converged = true;

  for (std::size_t i = 0; i < n; ++i) {
    const double a = prob.model_size_bits /
                     (share[i] * prob.subcarrier_bandwidth_hz);
    const double b = prob.vehicles[i].gain_over_noise_per_w;
    const double cap = prob.energy_cap_j - prob.vehicles[i].compute_energy_j;
    if (!(cap > 0.0))
      throw InfeasibleError("power: compute energy alone exceeds the cap (vehicle " +
                            std::to_string(prob.vehicles[i].id) + ")");
    if (upload_energy(a, b, prob.phi_min_w) > cap * (1.0 + tol.constraint_rel_tol))
      throw InfeasibleError("power: upload energy at phi_min exceeds the cap (vehicle " +
                            std::to_string(prob.vehicles[i].id) + ")");

    double phi = std::clamp(phi0[i], prob.phi_min_w, prob.phi_max_w);
    double last_feasible = prob.phi_min_w;
    if (upload_energy(a, b, phi) <= cap) last_feasible = phi;

    bool vehicle_converged = false;
    for (int it = 1; it <= tol.max_sca_iters; ++it) {
      res.iterations = std::max(res.iterations, it);
      const double e0 = upload_energy(a, b, phi);
      const double de = upload_energy_deriv(a, b, phi);
      // Linearized objective decreases in phi, so the surrogate optimum sits
      // where the linearized cap (or the box) stops it.
      double cand = prob.phi_max_w;
      if (de > 0.0) cand = std::min(cand, phi + (cap - e0) / de);
      cand = std::clamp(cand, prob.phi_min_w, prob.phi_max_w);
      if (upload_energy(a, b, cand) <= cap)
        last_feasible = std::max(last_feasible, cand);
      const double move = std::abs(cand - phi);
      phi = cand;
      if (move <= tol.eps_power_w) {
        vehicle_converged = true;
        break;
      }
    }
    if (!vehicle_converged) res.converged = false;

    // Re-validate the true cap; the tangent step can overshoot it.
    if (upload_energy(a, b, phi) > cap * (1.0 + kTiny)) {
      res.backtracked = true;
      double lo = last_feasible, hi = phi;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (upload_energy(a, b, mid) <= cap)
          lo = mid;
        else
          hi = mid;
      }
      phi = lo;
    }
    res.energy_capped[i] =
        phi < prob.phi_max_w - kTiny &&
        upload_energy(a, b, phi) >= cap * (1.0 - 1e-6);
    res.phi[i] = phi;
  }
  return res;
}

long long generation_budget(double window_s, double prev_train_s,
                            double seconds_per_image) {
  if (!(seconds_per_image > 0.0))
    throw std::invalid_argument("generation_budget: seconds_per_image must be > 0");
  if (!std::isfinite(window_s) || !std::isfinite(prev_train_s))
    throw std::invalid_argument("generation_budget: non-finite input");
  const double slack = window_s - prev_train_s;
  if (!(slack > 0.0)) return 0;
  const double q = slack / seconds_per_image;
  if (q > 9e15) throw std::invalid_argument("generation_budget: window too large");
  long long b = static_cast<long long>(std::floor(q));
  // exact-boundary guard: floor must not lose an integer quotient to rounding
  if (static_cast<double>(b + 1) * seconds_per_image <= slack * (1.0 + 1e-12))
    ++b;
  return b;
}

namespace {

struct Incumbent {
  std::vector<double> share;
  std::vector<double> phi;
  bool feasible = false;
  double t_bar = std::numeric_limits<double>::infinity();
};

bool energy_ok(const Problem& prob, const Incumbent& inc, double rel_tol) {
  for (std::size_t i = 0; i < inc.share.size(); ++i) {
    const double e = prob.vehicles[i].compute_energy_j +
                     prob.upload_energy_j(i, inc.phi[i], inc.share[i]);
    if (e > prob.energy_cap_j * (1.0 + rel_tol)) return false;
  }
  return true;
}

double incumbent_makespan(const Problem& prob, const Incumbent& inc) {
  double t = 0.0;
  for (std::size_t i = 0; i < inc.share.size(); ++i)
    t = std::max(t, prob.vehicles[i].compute_time_s +
                        prob.upload_seconds(i, inc.phi[i], inc.share[i]));
  return t;
}

}  // namespace

Decision bcd_solve(const Problem& prob, const Tolerances& tol) {
  prob.validate();
  const std::size_t n = prob.vehicles.size();

  Decision d;
  d.prev_train_time_s = prob.prev_train_time_s();
  const double t0_img = prob.rsu.seconds_per_image();

  if (n == 0) {
    d.empty_selection = true;
    d.feasible = true;
    d.converged = true;
    d.budget_window_s = prob.idle_window_s;
    d.images = generation_budget(prob.idle_window_s, d.prev_train_time_s, t0_img);
    return d;
  }

  if (static_cast<double>(n) * prob.l_min >
      static_cast<double>(prob.subcarriers) * (1.0 + kTiny))
    throw InfeasibleError("bcd: subcarrier budget below n * l_min");

  Incumbent inc;
  inc.share.assign(n, std::clamp(static_cast<double>(prob.subcarriers) /
                                     static_cast<double>(n),
                                 prob.l_min, 1.0));
  inc.phi.assign(n, 0.5 * (prob.phi_min_w + prob.phi_max_w));
  inc.feasible = energy_ok(prob, inc, tol.constraint_rel_tol);
  inc.t_bar = incumbent_makespan(prob, inc);

  BandwidthResult last_bw;
  bool have_bw = false;
  long long images = 0;
  std::vector<double> prev_share, prev_phi;
  long long prev_images = -1;
  bool converged = false;

  for (int sweep = 1; sweep <= tol.max_bcd_sweeps; ++sweep) {
    d.sweeps = sweep;
    SweepTrace tr;

    // Block 1: subcarrier shares at fixed power.
    try {
      const BandwidthResult bw = bandwidth_allocate(
          prob, inc.phi, tol, have_bw ? &last_bw : nullptr,
          inc.feasible ? std::span<const double>(inc.share) : std::span<const double>());
      Incumbent cand = inc;
      cand.share = bw.share;
      cand.t_bar = incumbent_makespan(prob, cand);
      cand.feasible = energy_ok(prob, cand, tol.constraint_rel_tol);
      if (cand.feasible && (!inc.feasible || cand.t_bar <= inc.t_bar)) {
        inc = cand;
        last_bw = bw;
        have_bw = true;
      }
      tr.dual_iters = bw.iterations;
    } catch (const InfeasibleError& e) {
      d.infeasible_reason = e.what();
      break;
    }

    // Block 2: transmit power at fixed shares; per-vehicle acceptance.
    try {
      const PowerResult pr = power_assign(prob, inc.share, inc.phi, tol);
      for (std::size_t i = 0; i < n; ++i) {
        const double e_new = prob.vehicles[i].compute_energy_j +
                             prob.upload_energy_j(i, pr.phi[i], inc.share[i]);
        const double e_old = prob.vehicles[i].compute_energy_j +
                             prob.upload_energy_j(i, inc.phi[i], inc.share[i]);
        const double cap = prob.energy_cap_j * (1.0 + tol.constraint_rel_tol);
        const bool new_ok = e_new <= cap;
        const bool old_ok = e_old <= cap;
        const double t_new = prob.upload_seconds(i, pr.phi[i], inc.share[i]);
        const double t_old = prob.upload_seconds(i, inc.phi[i], inc.share[i]);
        if (new_ok && (!old_ok || t_new <= t_old)) inc.phi[i] = pr.phi[i];
      }
      inc.t_bar = incumbent_makespan(prob, inc);
      inc.feasible = energy_ok(prob, inc, tol.constraint_rel_tol);
      tr.sca_iters = pr.iterations;
    } catch (const InfeasibleError& e) {
      d.infeasible_reason = e.what();
      break;
    }

    // Block 3: image budget from the current makespan; the training-time
    // term stays at the previous round's batch count.
    images = generation_budget(inc.t_bar, d.prev_train_time_s, t0_img);

    tr.t_bar_s = inc.t_bar;
    tr.images = images;
    if (!prev_share.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        tr.share_delta = std::max(tr.share_delta, std::abs(inc.share[i] - prev_share[i]));
        tr.phi_delta_w = std::max(tr.phi_delta_w, std::abs(inc.phi[i] - prev_phi[i]));
      }
    } else {
      tr.share_delta = std::numeric_limits<double>::infinity();
      tr.phi_delta_w = std::numeric_limits<double>::infinity();
    }
    d.trace.push_back(tr);

    const bool stable = !prev_share.empty() && tr.share_delta < tol.eps_share &&
                        tr.phi_delta_w < tol.eps_power_w &&
                        prev_images >= 0 &&
                        std::llabs(images - prev_images) <
                            static_cast<long long>(tol.eps_images);
    prev_share = inc.share;
    prev_phi = inc.phi;
    prev_images = images;
    if (stable) {
      converged = true;
      break;
    }
  }

  d.converged = converged;
  d.vehicle_ids.reserve(n);
  for (const auto& v : prob.vehicles) d.vehicle_ids.push_back(v.id);
  d.share = inc.share;
  d.phi_w = inc.phi;
  d.latency_s.resize(n);
  d.energy_j.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.latency_s[i] = prob.vehicles[i].compute_time_s +
                     prob.upload_seconds(i, inc.phi[i], inc.share[i]);
    d.energy_j[i] = prob.vehicles[i].compute_energy_j +
                    prob.upload_energy_j(i, inc.phi[i], inc.share[i]);
  }
  d.t_bar_s = inc.t_bar;
  d.budget_window_s = inc.t_bar;
  d.images = images;
  d.bandwidth = last_bw;
  if (d.infeasible_reason.empty()) {
    d.feasible = validate_decision(prob, d, tol.constraint_rel_tol).empty();
    if (!d.feasible) d.infeasible_reason = "constraint violation at exit";
  } else {
    d.feasible = false;
  }
  return d;
}

std::vector<Violation> validate_decision(const Problem& prob, const Decision& d,
                                         double rel_tol) {
  std::vector<Violation> out;
  auto flag = [&out](const std::string& name, double rel) {
    if (rel > 0.0) out.push_back({name, rel});
  };

  if (d.images < 0) flag("images >= 0", 1.0);
  if (d.images > 0) {
    const double t0 = prob.rsu.seconds_per_image();
    const double used = static_cast<double>(d.images) * t0 + d.prev_train_time_s;
    // one floor quantum of slack on the generation window
    flag("generation window", (used - (d.budget_window_s + t0)) /
                                  std::max(d.budget_window_s, 1e-9) - rel_tol);
  }
  if (d.empty_selection) return out;

  const std::size_t n = prob.vehicles.size();
  if (d.share.size() != n || d.phi_w.size() != n) {
    out.push_back({"decision size", 1.0});
    return out;
  }
  double total_share = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total_share += d.share[i];
    flag("share >= l_min", (prob.l_min - d.share[i]) / prob.l_min - rel_tol);
    flag("share <= 1", d.share[i] - 1.0 - rel_tol);
    flag("phi >= phi_min", (prob.phi_min_w - d.phi_w[i]) / prob.phi_min_w - rel_tol);
    flag("phi <= phi_max", (d.phi_w[i] - prob.phi_max_w) / prob.phi_max_w - rel_tol);
    const double t = prob.vehicles[i].compute_time_s +
                     prob.upload_seconds(i, d.phi_w[i], d.share[i]);
    const double e = prob.vehicles[i].compute_energy_j +
                     prob.upload_energy_j(i, d.phi_w[i], d.share[i]);
    flag("latency <= t_bar", (t - d.t_bar_s) / std::max(d.t_bar_s, 1e-9) - rel_tol);
    flag("energy <= cap", (e - prob.energy_cap_j) / prob.energy_cap_j - rel_tol);
  }
  flag("sum share <= budget",
       (total_share - prob.subcarriers) / prob.subcarriers - rel_tol);
  return out;
}

}  // namespace vfedsim::alloc
