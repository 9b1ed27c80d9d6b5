#pragma once

namespace vfedsim::phy {

// Per-vehicle GPU training profile. batches is the number of mini-batches
// processed per round (one per local step).
struct GpuProfile {
  double t0_s = 0.1;                // fixed setup time
  double c1 = 1.0;                  // memory cycle coefficient
  double c2 = 1.0;                  // core cycle coefficient
  double theta_mem_cycles = 1e8;    // memory cycles per batch
  double theta_core_cycles = 2e8;   // core cycles per batch
  double f_mem_hz = 1.25e9;
  double f_core_hz = 1e9;
  double p_g0_w = 3.0;              // static power
  double zeta_mem_w_per_hz = 1e-9;
  double zeta_core_w_per_v2hz = 1e-9;
  double v_core_v = 1.0;
  int batches = 5;

  void validate() const;  // throws std::invalid_argument
};

// Uplink state for one vehicle in one round. allocated_share is the
// (relaxed, continuous) number of subcarriers l in [l_min, 1].
struct RadioProfile {
  double subcarrier_bandwidth_hz = 1e7;  // W
  double allocated_share = 1.0;          // l
  double tx_power_w = 0.5;               // phi
  double h0 = 1e-3;                      // channel gain at unit distance
  double distance_m = 100.0;             // d
  double path_loss_exp = 2.0;            // gamma
  double noise_w = 4e-14;                // N0 (per subchannel)
  double model_size_bits = 5e7;          // s_omega

  void validate() const;
};

// RSU-side generator/trainer profile.
struct RsuProfile {
  double f_rsu_hz = 5e9;            // generator clock
  double d_step_cycles = 2e6;       // cycles per diffusion step
  int inference_steps = 50;         // steps per image
  double ts0_s = 0.05;              // augmented-training setup time
  double cs1 = 1.0;
  double cs2 = 1.0;
  double theta_s_mem_cycles = 1e8;  // memory cycles per batch
  double theta_s_core_cycles = 2e8;
  double f_s_mem_hz = 5e9;
  double f_s_core_hz = 4e9;
  int images_per_batch = 64;

  double seconds_per_image() const;  // t0_img
  void validate() const;
};

struct TimeEnergy {
  double seconds = 0.0;
  double joules = 0.0;
};

// t0 + c1*b*theta_mem/f_mem + c2*b*theta_core/f_core
double local_train_time_s(const GpuProfile& gpu);

// p_g0 + zeta_mem*f_mem + zeta_core*V^2*f_core
double gpu_power_w(const GpuProfile& gpu);

double local_train_energy_j(const GpuProfile& gpu);

// phi * h0 * d^-gamma / N0
double snr(const RadioProfile& radio);

// l * W * log2(1 + snr)
double uplink_rate_bps(const RadioProfile& radio);

// (s/rate, phi*s/rate); throws std::domain_error when the rate is zero
// (no allocated subcarrier share).
TimeEnergy upload_time_energy(const RadioProfile& radio);

// images * t0_img
double generation_latency_s(const RsuProfile& rsu, long long images);

// ts0 + cs1*b*theta_s_mem/f_s_mem + cs2*b*theta_s_core/f_s_core, b batches
double augmented_train_time_s(const RsuProfile& rsu, long long batches);

// local training + upload
double vehicle_round_latency_s(const GpuProfile& gpu, const RadioProfile& radio);

}  // namespace vfedsim::phy
