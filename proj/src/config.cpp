#include "vfedsim/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "vfedsim/selection.hpp"

namespace vfedsim::sim {

using nlohmann::json;

namespace {

// Tracks which keys were consumed so leftovers can be rejected.
class Strict {
 public:
  Strict(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field(key) + ": missing");
    return j_.at(key);
  }

  double num(const char* key, double def) {
    if (!has(key)) return def;
    return as_num(key);
  }

  double req_num(const char* key) {
    if (!has(key)) throw ConfigError(field(key) + ": missing");
    return as_num(key);
  }

  long long integer(const char* key, long long def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer())
      throw ConfigError(field(key) + ": expected an integer");
    return v.get<long long>();
  }

  std::string str(const char* key, const std::string& def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key, bool def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected a boolean");
    return v.get<bool>();
  }

  std::vector<double> num_array(const char* key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(field(key) + ": expected an array");
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(field(key) + ": expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::string field(const char* key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  // Call after all known keys were touched.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(field(it.key().c_str()) + ": unknown key");
  }

 private:
  double as_num(const char* key) {
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    return v.get<double>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

double RadioConfig::h0() const { return std::pow(10.0, h0_db / 10.0); }

double RadioConfig::noise_w() const {
  const double dbm = noise_dbm_per_hz + 10.0 * std::log10(subcarrier_bandwidth_hz);
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

fl::Mode RunConfig::mode_enum() const {
  if (mode == "augmented") return fl::Mode::augmented;
  if (mode == "fedavg") return fl::Mode::fedavg;
  if (mode == "generator_only") return fl::Mode::generator_only;
  throw ConfigError("mode: expected augmented, fedavg or generator_only");
}

double RunConfig::emd_threshold() const {
  if (selection.emd_threshold) return *selection.emd_threshold;
  return ::vfedsim::selection::default_emd_threshold(selection.dataset, task.alpha);
}

void RunConfig::validate() const {
  auto rethrow = [](const char* section, const std::exception& e) {
    throw ConfigError(std::string(section) + ": " + e.what());
  };
  if (schema_version != 1) throw ConfigError("schema_version: expected 1");
  if (rounds < 1) throw ConfigError("rounds: must be >= 1");
  if (!(downlink_offset_s >= 0.0))
    throw ConfigError("downlink_offset_s: must be >= 0");
  mode_enum();
  try {
    road.validate();
  } catch (const std::exception& e) {
    rethrow("road", e);
  }
  if (radio.subcarriers < 1) throw ConfigError("radio.subcarriers: must be >= 1");
  if (!(radio.subcarrier_bandwidth_hz > 0.0))
    throw ConfigError("radio.subcarrier_bandwidth_hz: must be > 0");
  if (!(radio.phi_min_w > 0.0) || !(radio.phi_min_w <= radio.phi_max_w))
    throw ConfigError("radio.phi_min_w: need 0 < phi_min_w <= phi_max_w");
  if (!(radio.model_size_bits > 0.0))
    throw ConfigError("radio.model_size_bits: must be > 0");
  if (!(radio.l_min > 0.0 && radio.l_min <= 1.0))
    throw ConfigError("radio.l_min: must be in (0, 1]");
  if (!(gpu.f_mem_hz_min > 0.0) || gpu.f_mem_hz_min > gpu.f_mem_hz_max)
    throw ConfigError("gpu.f_mem_hz: need 0 < min <= max");
  if (!(gpu.f_core_hz_min > 0.0) || gpu.f_core_hz_min > gpu.f_core_hz_max)
    throw ConfigError("gpu.f_core_hz: need 0 < min <= max");
  try {
    rsu.validate();
  } catch (const std::exception& e) {
    rethrow("rsu", e);
  }
  if (selection.min_selected < 0)
    throw ConfigError("selection.min_selected: must be >= 0");
  if (selection.emd_threshold &&
      !(*selection.emd_threshold >= 0.0 && *selection.emd_threshold <= 2.0))
    throw ConfigError("selection.emd_threshold: must be in [0, 2]");
  if (!selection.emd_reference.empty()) {
    if (static_cast<int>(selection.emd_reference.size()) != task.task.classes)
      throw ConfigError("selection.emd_reference: size must equal task.classes");
    double sum = 0.0;
    for (double p : selection.emd_reference) {
      if (!(p >= 0.0)) throw ConfigError("selection.emd_reference: negative mass");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("selection.emd_reference: must sum to 1");
  }
  try {
    ::vfedsim::selection::default_emd_threshold(selection.dataset, task.alpha);
  } catch (const std::exception& e) {
    rethrow("selection.dataset", e);
  }
  if (!(allocator.energy_cap_j > 0.0))
    throw ConfigError("allocator.energy_cap_j: must be > 0");
  if (allocator.tol.max_dual_iters < 1 || allocator.tol.max_sca_iters < 1 ||
      allocator.tol.max_bcd_sweeps < 1)
    throw ConfigError("allocator: iteration caps must be >= 1");
  if (!(allocator.tol.eps_share > 0.0) || !(allocator.tol.eps_power_w > 0.0) ||
      !(allocator.tol.eps_images >= 1.0))
    throw ConfigError("allocator: tolerances must be positive (eps_images >= 1)");
  try {
    trainer.validate();
  } catch (const std::exception& e) {
    rethrow("trainer", e);
  }
  try {
    task.task.validate();
  } catch (const std::exception& e) {
    rethrow("task", e);
  }
  if (!(task.alpha > 0.0)) throw ConfigError("task.alpha: must be > 0");
  if (task.partitions < 1) throw ConfigError("task.partitions: must be >= 1");
  if (bound.enabled) {
    if (!(bound.beta > 0.0) || !(bound.varrho > 0.0) || !(bound.mu > 0.0))
      throw ConfigError("bound: beta, varrho, mu must be > 0");
    if (!(bound.eta > 0.0 && bound.eta < 1.0 / bound.varrho))
      throw ConfigError("bound.eta: premise eta < 1/varrho violated");
    if (!(bound.sigma >= 0.0) || !(bound.lambda_a >= 0.0) || !(bound.theta0 >= 0.0))
      throw ConfigError("bound: sigma, lambda_a, theta0 must be >= 0");
  }
  if (output_dir.empty()) throw ConfigError("output.dir: must not be empty");
}

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  Strict root(j, "");

  {
    const json& v = root.at("schema_version");
    if (!v.is_number_integer()) throw ConfigError("schema_version: expected an integer");
    cfg.schema_version = v.get<int>();
    if (cfg.schema_version != 1) throw ConfigError("schema_version: expected 1");
  }
  cfg.seed = static_cast<std::uint64_t>(root.integer("seed", 1));
  cfg.mode = root.str("mode", cfg.mode);
  cfg.rounds = static_cast<int>(root.integer("rounds", cfg.rounds));
  cfg.downlink_offset_s = root.num("downlink_offset_s", cfg.downlink_offset_s);

  if (root.has("road")) {
    Strict s(root.at("road"), "road");
    cfg.road.coverage_radius_m = s.num("coverage_radius_m", cfg.road.coverage_radius_m);
    cfg.road.road_offset_m = s.num("road_offset_m", cfg.road.road_offset_m);
    cfg.road.v_max_kmh = s.num("v_max_kmh", cfg.road.v_max_kmh);
    cfg.road.v_min_kmh = s.num("v_min_kmh", cfg.road.v_min_kmh);
    cfg.road.max_vehicles = static_cast<int>(s.integer("max_vehicles", cfg.road.max_vehicles));
    cfg.road.speed_std_coeff = s.num("speed_std_coeff", cfg.road.speed_std_coeff);
    cfg.road.arrival_rate = s.num("arrival_rate", cfg.road.arrival_rate);
    cfg.road.t_max_s = s.num("t_max_s", cfg.road.t_max_s);
    cfg.road.initial_vehicles =
        static_cast<int>(s.integer("initial_vehicles", cfg.road.initial_vehicles));
    s.finish();
  }

  if (root.has("radio")) {
    Strict s(root.at("radio"), "radio");
    cfg.radio.subcarriers = static_cast<int>(s.integer("subcarriers", cfg.radio.subcarriers));
    cfg.radio.subcarrier_bandwidth_hz =
        s.num("subcarrier_bandwidth_hz", cfg.radio.subcarrier_bandwidth_hz);
    cfg.radio.phi_min_w = s.num("phi_min_w", cfg.radio.phi_min_w);
    cfg.radio.phi_max_w = s.num("phi_max_w", cfg.radio.phi_max_w);
    cfg.radio.h0_db = s.num("h0_db", cfg.radio.h0_db);
    cfg.radio.path_loss_exp = s.num("path_loss_exp", cfg.radio.path_loss_exp);
    cfg.radio.noise_dbm_per_hz = s.num("noise_dbm_per_hz", cfg.radio.noise_dbm_per_hz);
    cfg.radio.model_size_bits = s.num("model_size_bits", cfg.radio.model_size_bits);
    cfg.radio.l_min = s.num("l_min", cfg.radio.l_min);
    s.finish();
  }

  if (root.has("gpu")) {
    Strict s(root.at("gpu"), "gpu");
    cfg.gpu.t0_s = s.num("t0_s", cfg.gpu.t0_s);
    cfg.gpu.c1 = s.num("c1", cfg.gpu.c1);
    cfg.gpu.c2 = s.num("c2", cfg.gpu.c2);
    cfg.gpu.theta_mem_cycles = s.num("theta_mem_cycles", cfg.gpu.theta_mem_cycles);
    cfg.gpu.theta_core_cycles = s.num("theta_core_cycles", cfg.gpu.theta_core_cycles);
    if (s.has("f_mem_hz")) {
      const auto r = s.num_array("f_mem_hz");
      if (r.size() != 2) throw ConfigError("gpu.f_mem_hz: expected [min, max]");
      cfg.gpu.f_mem_hz_min = r[0];
      cfg.gpu.f_mem_hz_max = r[1];
    }
    if (s.has("f_core_hz")) {
      const auto r = s.num_array("f_core_hz");
      if (r.size() != 2) throw ConfigError("gpu.f_core_hz: expected [min, max]");
      cfg.gpu.f_core_hz_min = r[0];
      cfg.gpu.f_core_hz_max = r[1];
    }
    cfg.gpu.p_g0_w = s.num("p_g0_w", cfg.gpu.p_g0_w);
    cfg.gpu.zeta_mem_w_per_hz = s.num("zeta_mem_w_per_hz", cfg.gpu.zeta_mem_w_per_hz);
    cfg.gpu.zeta_core_w_per_v2hz =
        s.num("zeta_core_w_per_v2hz", cfg.gpu.zeta_core_w_per_v2hz);
    cfg.gpu.v_core_v = s.num("v_core_v", cfg.gpu.v_core_v);
    s.finish();
  }

  if (root.has("rsu")) {
    Strict s(root.at("rsu"), "rsu");
    cfg.rsu.f_rsu_hz = s.num("f_rsu_hz", cfg.rsu.f_rsu_hz);
    cfg.rsu.d_step_cycles = s.num("d_step_cycles", cfg.rsu.d_step_cycles);
    cfg.rsu.inference_steps =
        static_cast<int>(s.integer("inference_steps", cfg.rsu.inference_steps));
    cfg.rsu.ts0_s = s.num("ts0_s", cfg.rsu.ts0_s);
    cfg.rsu.cs1 = s.num("cs1", cfg.rsu.cs1);
    cfg.rsu.cs2 = s.num("cs2", cfg.rsu.cs2);
    cfg.rsu.theta_s_mem_cycles = s.num("theta_s_mem_cycles", cfg.rsu.theta_s_mem_cycles);
    cfg.rsu.theta_s_core_cycles =
        s.num("theta_s_core_cycles", cfg.rsu.theta_s_core_cycles);
    cfg.rsu.f_s_mem_hz = s.num("f_s_mem_hz", cfg.rsu.f_s_mem_hz);
    cfg.rsu.f_s_core_hz = s.num("f_s_core_hz", cfg.rsu.f_s_core_hz);
    cfg.rsu.images_per_batch =
        static_cast<int>(s.integer("images_per_batch", cfg.rsu.images_per_batch));
    s.finish();
  }

  if (root.has("selection")) {
    Strict s(root.at("selection"), "selection");
    cfg.selection.dataset = s.str("dataset", cfg.selection.dataset);
    if (s.has("emd_threshold")) {
      const json& v = root.at("selection").at("emd_threshold");
      if (!v.is_number()) throw ConfigError("selection.emd_threshold: expected a number");
      cfg.selection.emd_threshold = v.get<double>();
    }
    cfg.selection.min_selected =
        static_cast<int>(s.integer("min_selected", cfg.selection.min_selected));
    cfg.selection.emd_reference = s.num_array("emd_reference");
    s.finish();
  }

  if (root.has("allocator")) {
    Strict s(root.at("allocator"), "allocator");
    cfg.allocator.energy_cap_j = s.num("energy_cap_j", cfg.allocator.energy_cap_j);
    cfg.allocator.tol.eps_share = s.num("eps_share", cfg.allocator.tol.eps_share);
    cfg.allocator.tol.eps_power_w = s.num("eps_power_w", cfg.allocator.tol.eps_power_w);
    cfg.allocator.tol.eps_images = s.num("eps_images", cfg.allocator.tol.eps_images);
    cfg.allocator.tol.max_dual_iters =
        static_cast<int>(s.integer("max_dual_iters", cfg.allocator.tol.max_dual_iters));
    cfg.allocator.tol.max_sca_iters =
        static_cast<int>(s.integer("max_sca_iters", cfg.allocator.tol.max_sca_iters));
    cfg.allocator.tol.max_bcd_sweeps =
        static_cast<int>(s.integer("max_bcd_sweeps", cfg.allocator.tol.max_bcd_sweeps));
    cfg.allocator.tol.dual_step0 = s.num("dual_step0", cfg.allocator.tol.dual_step0);
    cfg.allocator.tol.constraint_rel_tol =
        s.num("constraint_rel_tol", cfg.allocator.tol.constraint_rel_tol);
    s.finish();
  }

  if (root.has("trainer")) {
    Strict s(root.at("trainer"), "trainer");
    cfg.trainer.eta = s.num("eta", cfg.trainer.eta);
    cfg.trainer.local_steps =
        static_cast<int>(s.integer("local_steps", cfg.trainer.local_steps));
    cfg.trainer.batch_size =
        static_cast<int>(s.integer("batch_size", cfg.trainer.batch_size));
    s.finish();
  }

  if (root.has("task")) {
    Strict s(root.at("task"), "task");
    cfg.task.task.classes = static_cast<int>(s.integer("classes", cfg.task.task.classes));
    cfg.task.task.feature_dim =
        static_cast<int>(s.integer("feature_dim", cfg.task.task.feature_dim));
    cfg.task.task.train_samples =
        static_cast<int>(s.integer("train_samples", cfg.task.task.train_samples));
    cfg.task.task.test_samples =
        static_cast<int>(s.integer("test_samples", cfg.task.task.test_samples));
    cfg.task.task.mean_scale = s.num("mean_scale", cfg.task.task.mean_scale);
    cfg.task.task.noise_scale = s.num("noise_scale", cfg.task.task.noise_scale);
    cfg.task.task.shift = s.num("shift", cfg.task.task.shift);
    cfg.task.task.shift_scale = s.num("shift_scale", cfg.task.task.shift_scale);
    cfg.task.alpha = s.num("alpha", cfg.task.alpha);
    cfg.task.partitions = static_cast<int>(s.integer("partitions", cfg.task.partitions));
    s.finish();
  }

  if (root.has("bound")) {
    Strict s(root.at("bound"), "bound");
    cfg.bound.enabled = s.boolean("enabled", cfg.bound.enabled);
    cfg.bound.beta = s.num("beta", cfg.bound.beta);
    cfg.bound.varrho = s.num("varrho", cfg.bound.varrho);
    cfg.bound.mu = s.num("mu", cfg.bound.mu);
    cfg.bound.eta = s.num("eta", cfg.bound.eta);
    cfg.bound.sigma = s.num("sigma", cfg.bound.sigma);
    cfg.bound.lambda_a = s.num("lambda_a", cfg.bound.lambda_a);
    cfg.bound.theta0 = s.num("theta0", cfg.bound.theta0);
    s.finish();
  }

  if (root.has("output")) {
    Strict s(root.at("output"), "output");
    cfg.output_dir = s.str("dir", cfg.output_dir);
    s.finish();
  }

  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

json to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["seed"] = cfg.seed;
  j["mode"] = cfg.mode;
  j["rounds"] = cfg.rounds;
  j["downlink_offset_s"] = cfg.downlink_offset_s;
  j["road"] = {{"coverage_radius_m", cfg.road.coverage_radius_m},
               {"road_offset_m", cfg.road.road_offset_m},
               {"v_max_kmh", cfg.road.v_max_kmh},
               {"v_min_kmh", cfg.road.v_min_kmh},
               {"max_vehicles", cfg.road.max_vehicles},
               {"speed_std_coeff", cfg.road.speed_std_coeff},
               {"arrival_rate", cfg.road.arrival_rate},
               {"t_max_s", cfg.road.t_max_s},
               {"initial_vehicles", cfg.road.initial_vehicles}};
  j["radio"] = {{"subcarriers", cfg.radio.subcarriers},
                {"subcarrier_bandwidth_hz", cfg.radio.subcarrier_bandwidth_hz},
                {"phi_min_w", cfg.radio.phi_min_w},
                {"phi_max_w", cfg.radio.phi_max_w},
                {"h0_db", cfg.radio.h0_db},
                {"path_loss_exp", cfg.radio.path_loss_exp},
                {"noise_dbm_per_hz", cfg.radio.noise_dbm_per_hz},
                {"model_size_bits", cfg.radio.model_size_bits},
                {"l_min", cfg.radio.l_min}};
  j["gpu"] = {{"t0_s", cfg.gpu.t0_s},
              {"c1", cfg.gpu.c1},
              {"c2", cfg.gpu.c2},
              {"theta_mem_cycles", cfg.gpu.theta_mem_cycles},
              {"theta_core_cycles", cfg.gpu.theta_core_cycles},
              {"f_mem_hz", {cfg.gpu.f_mem_hz_min, cfg.gpu.f_mem_hz_max}},
              {"f_core_hz", {cfg.gpu.f_core_hz_min, cfg.gpu.f_core_hz_max}},
              {"p_g0_w", cfg.gpu.p_g0_w},
              {"zeta_mem_w_per_hz", cfg.gpu.zeta_mem_w_per_hz},
              {"zeta_core_w_per_v2hz", cfg.gpu.zeta_core_w_per_v2hz},
              {"v_core_v", cfg.gpu.v_core_v}};
  j["rsu"] = {{"f_rsu_hz", cfg.rsu.f_rsu_hz},
              {"d_step_cycles", cfg.rsu.d_step_cycles},
              {"inference_steps", cfg.rsu.inference_steps},
              {"ts0_s", cfg.rsu.ts0_s},
              {"cs1", cfg.rsu.cs1},
              {"cs2", cfg.rsu.cs2},
              {"theta_s_mem_cycles", cfg.rsu.theta_s_mem_cycles},
              {"theta_s_core_cycles", cfg.rsu.theta_s_core_cycles},
              {"f_s_mem_hz", cfg.rsu.f_s_mem_hz},
              {"f_s_core_hz", cfg.rsu.f_s_core_hz},
              {"images_per_batch", cfg.rsu.images_per_batch}};
  j["selection"] = {{"dataset", cfg.selection.dataset},
                    {"min_selected", cfg.selection.min_selected}};
  if (cfg.selection.emd_threshold)
    j["selection"]["emd_threshold"] = *cfg.selection.emd_threshold;
  if (!cfg.selection.emd_reference.empty())
    j["selection"]["emd_reference"] = cfg.selection.emd_reference;
  j["allocator"] = {{"energy_cap_j", cfg.allocator.energy_cap_j},
                    {"eps_share", cfg.allocator.tol.eps_share},
                    {"eps_power_w", cfg.allocator.tol.eps_power_w},
                    {"eps_images", cfg.allocator.tol.eps_images},
                    {"max_dual_iters", cfg.allocator.tol.max_dual_iters},
                    {"max_sca_iters", cfg.allocator.tol.max_sca_iters},
                    {"max_bcd_sweeps", cfg.allocator.tol.max_bcd_sweeps},
                    {"dual_step0", cfg.allocator.tol.dual_step0},
                    {"constraint_rel_tol", cfg.allocator.tol.constraint_rel_tol}};
  j["trainer"] = {{"eta", cfg.trainer.eta},
                  {"local_steps", cfg.trainer.local_steps},
                  {"batch_size", cfg.trainer.batch_size}};
  j["task"] = {{"classes", cfg.task.task.classes},
               {"feature_dim", cfg.task.task.feature_dim},
               {"train_samples", cfg.task.task.train_samples},
               {"test_samples", cfg.task.task.test_samples},
               {"mean_scale", cfg.task.task.mean_scale},
               {"noise_scale", cfg.task.task.noise_scale},
               {"shift", cfg.task.task.shift},
               {"shift_scale", cfg.task.task.shift_scale},
               {"alpha", cfg.task.alpha},
               {"partitions", cfg.task.partitions}};
  j["bound"] = {{"enabled", cfg.bound.enabled},
                {"beta", cfg.bound.beta},
                {"varrho", cfg.bound.varrho},
                {"mu", cfg.bound.mu},
                {"eta", cfg.bound.eta},
                {"sigma", cfg.bound.sigma},
                {"lambda_a", cfg.bound.lambda_a},
                {"theta0", cfg.bound.theta0}};
  j["output"] = {{"dir", cfg.output_dir}};
  return j;
}

AllocInstance parse_instance(const json& j) {
  AllocInstance inst;
  Strict root(j, "");
  {
    const json& v = root.at("schema_version");
    if (!v.is_number_integer() || v.get<int>() != 1)
      throw ConfigError("schema_version: expected 1");
  }
  inst.problem.model_size_bits =
      root.num("model_size_bits", inst.problem.model_size_bits);
  inst.problem.subcarrier_bandwidth_hz =
      root.num("subcarrier_bandwidth_hz", inst.problem.subcarrier_bandwidth_hz);
  inst.problem.subcarriers =
      static_cast<int>(root.integer("subcarriers", inst.problem.subcarriers));
  inst.problem.energy_cap_j = root.num("energy_cap_j", inst.problem.energy_cap_j);
  inst.problem.phi_min_w = root.num("phi_min_w", inst.problem.phi_min_w);
  inst.problem.phi_max_w = root.num("phi_max_w", inst.problem.phi_max_w);
  inst.problem.l_min = root.num("l_min", inst.problem.l_min);
  inst.problem.prev_round_images =
      root.integer("prev_round_images", inst.problem.prev_round_images);
  inst.problem.idle_window_s = root.num("idle_window_s", inst.problem.idle_window_s);

  if (root.has("rsu")) {
    Strict s(root.at("rsu"), "rsu");
    inst.problem.rsu.f_rsu_hz = s.num("f_rsu_hz", inst.problem.rsu.f_rsu_hz);
    inst.problem.rsu.d_step_cycles =
        s.num("d_step_cycles", inst.problem.rsu.d_step_cycles);
    inst.problem.rsu.inference_steps = static_cast<int>(
        s.integer("inference_steps", inst.problem.rsu.inference_steps));
    inst.problem.rsu.ts0_s = s.num("ts0_s", inst.problem.rsu.ts0_s);
    inst.problem.rsu.cs1 = s.num("cs1", inst.problem.rsu.cs1);
    inst.problem.rsu.cs2 = s.num("cs2", inst.problem.rsu.cs2);
    inst.problem.rsu.theta_s_mem_cycles =
        s.num("theta_s_mem_cycles", inst.problem.rsu.theta_s_mem_cycles);
    inst.problem.rsu.theta_s_core_cycles =
        s.num("theta_s_core_cycles", inst.problem.rsu.theta_s_core_cycles);
    inst.problem.rsu.f_s_mem_hz = s.num("f_s_mem_hz", inst.problem.rsu.f_s_mem_hz);
    inst.problem.rsu.f_s_core_hz = s.num("f_s_core_hz", inst.problem.rsu.f_s_core_hz);
    inst.problem.rsu.images_per_batch = static_cast<int>(
        s.integer("images_per_batch", inst.problem.rsu.images_per_batch));
    s.finish();
  }

  if (root.has("tolerances")) {
    Strict s(root.at("tolerances"), "tolerances");
    inst.tol.eps_share = s.num("eps_share", inst.tol.eps_share);
    inst.tol.eps_power_w = s.num("eps_power_w", inst.tol.eps_power_w);
    inst.tol.eps_images = s.num("eps_images", inst.tol.eps_images);
    inst.tol.max_dual_iters =
        static_cast<int>(s.integer("max_dual_iters", inst.tol.max_dual_iters));
    inst.tol.max_sca_iters =
        static_cast<int>(s.integer("max_sca_iters", inst.tol.max_sca_iters));
    inst.tol.max_bcd_sweeps =
        static_cast<int>(s.integer("max_bcd_sweeps", inst.tol.max_bcd_sweeps));
    inst.tol.dual_step0 = s.num("dual_step0", inst.tol.dual_step0);
    inst.tol.constraint_rel_tol =
        s.num("constraint_rel_tol", inst.tol.constraint_rel_tol);
    s.finish();
  }

  {
    const json& arr = root.at("vehicles");
    if (!arr.is_array()) throw ConfigError("vehicles: expected an array");
    int i = 0;
    for (const auto& e : arr) {
      Strict s(e, "vehicles[" + std::to_string(i) + "]");
      alloc::VehicleLink v;
      v.id = static_cast<std::uint64_t>(s.integer("id", i));
      v.compute_time_s = s.req_num("compute_time_s");
      v.compute_energy_j = s.req_num("compute_energy_j");
      v.gain_over_noise_per_w = s.req_num("gain_over_noise_per_w");
      v.deadline_s = s.num("deadline_s", 0.0);
      s.finish();
      inst.problem.vehicles.push_back(v);
      ++i;
    }
  }
  root.finish();
  try {
    inst.problem.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return inst;
}

AllocInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open instance file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("instance is not valid JSON: " + std::string(e.what()));
  }
  return parse_instance(j);
}

json decision_to_json(const alloc::Decision& d) {
  json j;
  j["vehicle_ids"] = d.vehicle_ids;
  j["share"] = d.share;
  j["phi_w"] = d.phi_w;
  j["latency_s"] = d.latency_s;
  j["energy_j"] = d.energy_j;
  j["t_bar_s"] = d.t_bar_s;
  j["images"] = d.images;
  j["budget_window_s"] = d.budget_window_s;
  j["prev_train_time_s"] = d.prev_train_time_s;
  j["feasible"] = d.feasible;
  j["empty_selection"] = d.empty_selection;
  j["infeasible_reason"] = d.infeasible_reason;
  j["sweeps"] = d.sweeps;
  j["converged"] = d.converged;
  json trace = json::array();
  for (const auto& tr : d.trace)
    trace.push_back({{"t_bar_s", tr.t_bar_s},
                     {"share_delta", tr.share_delta},
                     {"phi_delta_w", tr.phi_delta_w},
                     {"images", tr.images},
                     {"dual_iters", tr.dual_iters},
                     {"sca_iters", tr.sca_iters}});
  j["trace"] = trace;
  j["dual"] = {{"lambda1", d.bandwidth.lambda1},
               {"lambda2", d.bandwidth.lambda2},
               {"lambda3", d.bandwidth.lambda3},
               {"stationary", d.bandwidth.stationary},
               {"interior", d.bandwidth.interior},
               {"converged", d.bandwidth.converged},
               {"gap", d.bandwidth.gap},
               {"iterations", d.bandwidth.iterations},
               {"min_multiplier_seen", d.bandwidth.min_multiplier_seen}};
  return j;
}

}  // namespace vfedsim::sim
