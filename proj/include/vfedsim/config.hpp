#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vfedsim/allocator.hpp"
#include "vfedsim/fl.hpp"
#include "vfedsim/mobility.hpp"
#include "vfedsim/phy.hpp"

namespace vfedsim::sim {

// Configuration problems carry the dotted field path; the CLI maps this to
// exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RadioConfig {
  int subcarriers = 20;
  double subcarrier_bandwidth_hz = 1e7;
  double phi_min_w = 0.1;
  double phi_max_w = 1.0;
  double h0_db = -30.0;
  double path_loss_exp = 2.0;
  double noise_dbm_per_hz = -174.0;
  double model_size_bits = 5e7;
  double l_min = 0.05;

  double h0() const;       // linear gain
  double noise_w() const;  // total noise power over one subchannel
};

// Vehicle GPUs are heterogeneous: frequencies are drawn per vehicle from the
// closed ranges below (a point range pins the value).
struct GpuConfig {
  double t0_s = 0.1;
  double c1 = 1.0;
  double c2 = 1.0;
  double theta_mem_cycles = 1e8;
  double theta_core_cycles = 2e8;
  double f_mem_hz_min = 1.25e9;
  double f_mem_hz_max = 1.75e9;
  double f_core_hz_min = 1.0e9;
  double f_core_hz_max = 1.6e9;
  double p_g0_w = 3.0;
  double zeta_mem_w_per_hz = 1e-9;
  double zeta_core_w_per_v2hz = 1e-9;
  double v_core_v = 1.0;
};

struct SelectionSection {
  std::string dataset = "cifar10";       // threshold table row
  std::optional<double> emd_threshold;   // overrides the table when set
  int min_selected = 0;
  std::vector<double> emd_reference;     // empty = uniform
};

struct AllocatorSection {
  alloc::Tolerances tol;
  double energy_cap_j = 25.0;
};

struct BoundSection {
  bool enabled = true;
  double beta = 4.0;
  double varrho = 2.0;
  double mu = 1.0;
  double eta = 0.25;
  double sigma = 0.5;     // uniform per-participant dispersion term
  double lambda_a = 0.2;
  double theta0 = 1.0;    // initial optimality gap
};

struct TaskSection {
  fl::SyntheticTask task;
  double alpha = 0.5;   // Dirichlet concentration for the partition
  int partitions = 40;  // data shards available to the fleet
};

struct RunConfig {
  int schema_version = 1;
  std::uint64_t seed = 1;
  std::string mode = "augmented";  // augmented | fedavg | generator_only
  int rounds = 50;
  double downlink_offset_s = 0.0;
  mobility::RoadConfig road;
  RadioConfig radio;
  GpuConfig gpu;
  phy::RsuProfile rsu;
  SelectionSection selection;
  AllocatorSection allocator;
  fl::TrainerConfig trainer;
  TaskSection task;
  BoundSection bound;
  std::string output_dir = "out";

  fl::Mode mode_enum() const;
  double emd_threshold() const;  // explicit override or table lookup
  void validate() const;         // throws ConfigError
};

// Strict parsing: wrong types and unknown keys raise ConfigError naming the
// offending field.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

// Stand-alone allocation instance for the allocate subcommand.
struct AllocInstance {
  alloc::Problem problem;
  alloc::Tolerances tol;
};

AllocInstance parse_instance(const nlohmann::json& j);
AllocInstance load_instance(const std::string& path);
nlohmann::json decision_to_json(const alloc::Decision& d);

}  // namespace vfedsim::sim
