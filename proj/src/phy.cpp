#include "vfedsim/phy.hpp"

#include <cmath>
#include <stdexcept>

namespace vfedsim::phy {

void GpuProfile::validate() const {
  if (!(t0_s >= 0.0) || !(c1 >= 0.0) || !(c2 >= 0.0))
    throw std::invalid_argument("gpu: coefficients must be >= 0");
  if (!(theta_mem_cycles >= 0.0) || !(theta_core_cycles >= 0.0))
    throw std::invalid_argument("gpu: cycle counts must be >= 0");
  if (!(f_mem_hz > 0.0) || !(f_core_hz > 0.0))
    throw std::invalid_argument("gpu: frequencies must be > 0");
  if (!(p_g0_w >= 0.0) || !(zeta_mem_w_per_hz >= 0.0) ||
      !(zeta_core_w_per_v2hz >= 0.0) || !(v_core_v >= 0.0))
    throw std::invalid_argument("gpu: power terms must be >= 0");
  if (batches < 0) throw std::invalid_argument("gpu: batches must be >= 0");
}

void RadioProfile::validate() const {
  if (!(subcarrier_bandwidth_hz > 0.0))
    throw std::invalid_argument("radio: subcarrier_bandwidth_hz must be > 0");
  if (!(allocated_share >= 0.0))
    throw std::invalid_argument("radio: allocated_share must be >= 0");
  if (!(tx_power_w >= 0.0))
    throw std::invalid_argument("radio: tx_power_w must be >= 0");
  if (!(h0 > 0.0)) throw std::invalid_argument("radio: h0 must be > 0");
  if (!(distance_m > 0.0))
    throw std::invalid_argument("radio: distance_m must be > 0");
  if (!(path_loss_exp >= 0.0))
    throw std::invalid_argument("radio: path_loss_exp must be >= 0");
  if (!(noise_w > 0.0)) throw std::invalid_argument("radio: noise_w must be > 0");
  if (!(model_size_bits >= 0.0))
    throw std::invalid_argument("radio: model_size_bits must be >= 0");
}

double RsuProfile::seconds_per_image() const {
  return static_cast<double>(inference_steps) * d_step_cycles / f_rsu_hz;
}

void RsuProfile::validate() const {
  if (!(f_rsu_hz > 0.0) || !(f_s_mem_hz > 0.0) || !(f_s_core_hz > 0.0))
    throw std::invalid_argument("rsu: frequencies must be > 0");
  if (!(d_step_cycles > 0.0) || inference_steps < 1)
    throw std::invalid_argument("rsu: need d_step_cycles > 0, inference_steps >= 1");
  if (!(ts0_s >= 0.0) || !(cs1 >= 0.0) || !(cs2 >= 0.0) ||
      !(theta_s_mem_cycles >= 0.0) || !(theta_s_core_cycles >= 0.0))
    throw std::invalid_argument("rsu: training terms must be >= 0");
  if (images_per_batch < 1)
    throw std::invalid_argument("rsu: images_per_batch must be >= 1");
}

double local_train_time_s(const GpuProfile& gpu) {
  const double b = static_cast<double>(gpu.batches);
  return gpu.t0_s + gpu.c1 * b * gpu.theta_mem_cycles / gpu.f_mem_hz +
         gpu.c2 * b * gpu.theta_core_cycles / gpu.f_core_hz;
}

double gpu_power_w(const GpuProfile& gpu) {
  return gpu.p_g0_w + gpu.zeta_mem_w_per_hz * gpu.f_mem_hz +
         gpu.zeta_core_w_per_v2hz * gpu.v_core_v * gpu.v_core_v * gpu.f_core_hz;
}

double local_train_energy_j(const GpuProfile& gpu) {
  return gpu_power_w(gpu) * local_train_time_s(gpu);
}

double snr(const RadioProfile& radio) {
  return radio.tx_power_w * radio.h0 *
         std::pow(radio.distance_m, -radio.path_loss_exp) / radio.noise_w;
}

double uplink_rate_bps(const RadioProfile& radio) {
  return radio.allocated_share * radio.subcarrier_bandwidth_hz *
         std::log2(1.0 + snr(radio));
}

TimeEnergy upload_time_energy(const RadioProfile& radio) {
  const double rate = uplink_rate_bps(radio);
  if (!(rate > 0.0))
    throw std::domain_error("upload_time_energy: no subcarrier share (rate is 0)");
  TimeEnergy te;
  te.seconds = radio.model_size_bits / rate;
  te.joules = radio.tx_power_w * te.seconds;
  return te;
}

double generation_latency_s(const RsuProfile& rsu, long long images) {
  if (images < 0)
    throw std::invalid_argument("generation_latency: negative image count");
  return static_cast<double>(images) * rsu.seconds_per_image();
}

double augmented_train_time_s(const RsuProfile& rsu, long long batches) {
  if (batches < 0)
    throw std::invalid_argument("augmented_train_time: negative batch count");
  const double b = static_cast<double>(batches);
  return rsu.ts0_s + rsu.cs1 * b * rsu.theta_s_mem_cycles / rsu.f_s_mem_hz +
         rsu.cs2 * b * rsu.theta_s_core_cycles / rsu.f_s_core_hz;
}

double vehicle_round_latency_s(const GpuProfile& gpu, const RadioProfile& radio) {
  return local_train_time_s(gpu) + upload_time_energy(radio).seconds;
}

}  // namespace vfedsim::phy
