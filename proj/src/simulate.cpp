#include "vfedsim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include "vfedsim/allocator.hpp"
#include "vfedsim/fl.hpp"
#include "vfedsim/mobility.hpp"
#include "vfedsim/phy.hpp"
#include "vfedsim/rng.hpp"
#include "vfedsim/selection.hpp"

namespace vfedsim::sim {
namespace {

// Frequencies are the only per-vehicle draws; keying the stream by vehicle id
// keeps a vehicle's hardware stable for its whole stay and independent of
// everything else the simulation samples.
phy::GpuProfile draw_gpu_profile(const GpuConfig& g, std::uint64_t master_seed,
                                 std::uint64_t vehicle_id, int batches) {
  phy::GpuProfile p;
  p.t0_s = g.t0_s;
  p.c1 = g.c1;
  p.c2 = g.c2;
  p.theta_mem_cycles = g.theta_mem_cycles;
  p.theta_core_cycles = g.theta_core_cycles;
  p.p_g0_w = g.p_g0_w;
  p.zeta_mem_w_per_hz = g.zeta_mem_w_per_hz;
  p.zeta_core_w_per_v2hz = g.zeta_core_w_per_v2hz;
  p.v_core_v = g.v_core_v;
  p.batches = batches;
  auto rng = make_rng(master_seed, "gpu-profile", vehicle_id);
  p.f_mem_hz =
      std::uniform_real_distribution<double>(g.f_mem_hz_min, g.f_mem_hz_max)(rng);
  p.f_core_hz = std::uniform_real_distribution<double>(g.f_core_hz_min,
                                                       g.f_core_hz_max)(rng);
  return p;
}

struct VehicleState {
  phy::GpuProfile gpu;
  int shard = -1;  // -1: arrived after all data shards were claimed
};

std::string dotted_to_pointer(const std::string& path) {
  if (path.empty()) throw ConfigError("sweep axis: empty path");
  std::string p = "/";
  for (char c : path) p += (c == '.') ? '/' : c;
  return p;
}

}  // namespace

SimResult run_simulation(const RunConfig& cfg, int threads) {
  cfg.validate();
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");

  const fl::TaskData data = fl::make_task_data(cfg.task.task, cfg.seed);
  auto part_rng = make_rng(cfg.seed, "partition");
  const fl::PartitionResult part =
      fl::dirichlet_partition(data.train.y, cfg.task.task.classes,
                              cfg.task.partitions, cfg.task.alpha, part_rng);

  mobility::Traffic traffic(cfg.road, cfg.seed);
  std::map<std::uint64_t, VehicleState> states;
  std::set<int> free_shards;
  for (int s = 0; s < cfg.task.partitions; ++s) free_shards.insert(s);

  selection::SelectionConfig selcfg;
  selcfg.emd_threshold = cfg.emd_threshold();
  selcfg.min_selected = cfg.selection.min_selected;

  const double h0 = cfg.radio.h0();
  const double noise_w = cfg.radio.noise_w();
  const double phi_est = cfg.radio.phi_min_w;
  const fl::Mode mode = cfg.mode_enum();
  const int classes = cfg.task.task.classes;

  SimResult res;
  res.global = fl::zero_params(classes, cfg.task.task.feature_dim);
  double last_acc = fl::eval_accuracy(res.global, data.test);
  long long prev_images = 0;
  long long images_cum = 0;

  for (int round = 0; round < cfg.rounds; ++round) {
    const auto& fleet = traffic.step_arrivals();

    // Shards stick to a vehicle for its whole stay; newcomers claim the
    // lowest free one. No free shard means no data, hence never selected.
    for (const auto& v : fleet) {
      auto [it, inserted] = states.try_emplace(v.id);
      if (inserted) {
        it->second.gpu =
            draw_gpu_profile(cfg.gpu, cfg.seed, v.id, cfg.trainer.local_steps);
        if (!free_shards.empty()) {
          it->second.shard = *free_shards.begin();
          free_shards.erase(free_shards.begin());
        }
      }
    }

    std::vector<selection::VehicleMeta> metas;
    std::map<std::uint64_t, double> dist_m;
    metas.reserve(fleet.size());
    int with_data = 0;
    for (const auto& v : fleet) {
      selection::VehicleMeta m;
      m.vehicle_id = v.id;
      const int shard = states.at(v.id).shard;
      if (shard >= 0)
        m.histogram = part.histograms[shard];
      else
        m.histogram.counts.assign(classes, 0);
      if (!m.histogram.empty()) ++with_data;
      m.t_hold_s = mobility::holding_time_s(cfg.road, v.kin);
      m.deadline_s = mobility::round_deadline_s(cfg.road, m.t_hold_s);
      metas.push_back(std::move(m));
      dist_m[v.id] = mobility::distance_to_rsu_m(cfg.road, v.kin);
    }

    auto candidates = cfg.selection.emd_reference.empty()
                          ? selection::share_labels(metas)
                          : selection::share_labels(metas,
                                                    cfg.selection.emd_reference);

    // Pre-allocation latency guess: full subchannel at minimum power, so
    // admission never depends on how much power headroom the round has and
    // the power block can only improve on the estimated upload.
    auto estimator = [&](const selection::Candidate& c) {
      const auto& st = states.at(c.vehicle_id);
      phy::RadioProfile rp;
      rp.subcarrier_bandwidth_hz = cfg.radio.subcarrier_bandwidth_hz;
      rp.allocated_share = 1.0;
      rp.tx_power_w = phi_est;
      rp.h0 = h0;
      rp.distance_m = dist_m.at(c.vehicle_id);
      rp.path_loss_exp = cfg.radio.path_loss_exp;
      rp.noise_w = noise_w;
      rp.model_size_bits = cfg.radio.model_size_bits;
      return cfg.downlink_offset_s + phy::local_train_time_s(st.gpu) +
             phy::upload_time_energy(rp).seconds;
    };
    const auto sel =
        selection::select_vehicles(std::move(candidates), selcfg, estimator);

    std::map<std::uint64_t, const selection::CandidateReport*> report_of;
    for (const auto& r : sel.reports) report_of[r.vehicle_id] = &r;

    alloc::Problem prob;
    prob.model_size_bits = cfg.radio.model_size_bits;
    prob.subcarrier_bandwidth_hz = cfg.radio.subcarrier_bandwidth_hz;
    prob.subcarriers = cfg.radio.subcarriers;
    prob.energy_cap_j = cfg.allocator.energy_cap_j;
    prob.phi_min_w = cfg.radio.phi_min_w;
    prob.phi_max_w = cfg.radio.phi_max_w;
    prob.l_min = cfg.radio.l_min;
    prob.rsu = cfg.rsu;
    prob.prev_round_images = prev_images;
    prob.idle_window_s = cfg.road.t_max_s;
    for (std::uint64_t id : sel.selected) {
      const auto& st = states.at(id);
      alloc::VehicleLink link;
      link.id = id;
      link.compute_time_s =
          cfg.downlink_offset_s + phy::local_train_time_s(st.gpu);
      link.compute_energy_j = phy::local_train_energy_j(st.gpu);
      link.gain_over_noise_per_w =
          h0 * std::pow(dist_m.at(id), -cfg.radio.path_loss_exp) / noise_w;
      link.deadline_s = report_of.at(id)->deadline_s;
      prob.vehicles.push_back(link);
    }

    alloc::Decision dec;
    bool alloc_threw = false;
    try {
      dec = alloc::bcd_solve(prob, cfg.allocator.tol);
    } catch (const alloc::InfeasibleError&) {
      alloc_threw = true;  // round is lost; the flag lands in the record
    }

    std::vector<fl::Participant> participants;
    std::vector<int> gen_labels;
    if (!alloc_threw) {
      std::set<int> label_set;
      for (std::uint64_t id : sel.selected) {
        const auto& st = states.at(id);
        fl::Participant p;
        p.vehicle_id = id;
        p.indices = &part.indices[st.shard];
        p.emd = report_of.at(id)->emd;
        participants.push_back(p);
        const auto& counts = part.histograms[st.shard].counts;
        for (int c = 0; c < classes; ++c)
          if (counts[c] > 0) label_set.insert(c);
      }
      if (label_set.empty())
        for (int c = 0; c < classes; ++c) label_set.insert(c);
      gen_labels.assign(label_set.begin(), label_set.end());
    }

    // Quality estimates use the pre-round model: the bound reasons about the
    // state the round started from.
    std::vector<double> lambdas;
    if (cfg.bound.enabled && !alloc_threw) {
      lambdas.reserve(participants.size());
      for (const auto& p : participants)
        lambdas.push_back(
            fl::estimate_lambda(res.global, data.train, *p.indices, p.emd));
    }

    fl::RoundResult rr;
    if (!alloc_threw) {
      rr = fl::run_round(res.global, data, participants, gen_labels, dec.images,
                         mode, cfg.trainer, cfg.seed,
                         static_cast<std::uint64_t>(round), threads);
      res.global = rr.global;
      last_acc = rr.test_accuracy;
    }

    double bound = std::numeric_limits<double>::quiet_NaN();
    if (cfg.bound.enabled && !alloc_threw) {
      fl::BoundParams bp;
      bp.beta = cfg.bound.beta;
      bp.varrho = cfg.bound.varrho;
      bp.mu = cfg.bound.mu;
      bp.eta = cfg.bound.eta;
      bp.local_steps = cfg.trainer.local_steps;
      bp.rounds = round + 1;
      bp.sigma.assign(participants.size(), cfg.bound.sigma);
      bp.lambda = lambdas;
      bp.lambda_a = cfg.bound.lambda_a;
      bp.policy.kappa1 = rr.kappa1_applied;
      bp.policy.kappa2 = rr.kappa2_applied;
      if (!participants.empty()) {
        std::vector<std::int64_t> sizes;
        sizes.reserve(participants.size());
        for (const auto& p : participants)
          sizes.push_back(static_cast<std::int64_t>(p.indices->size()));
        bp.policy.rho = core::data_size_weights(sizes);
      }
      bound = fl::evaluate_bound(bp, cfg.bound.theta0);
    }

    RoundRecord rec;
    rec.round = round;
    rec.active_vehicles = static_cast<int>(fleet.size());
    rec.candidates = with_data;
    rec.selected = static_cast<int>(sel.selected.size());
    rec.selected_ids = sel.selected;
    rec.emd_mean = rr.emd_mean;
    rec.kappa1_policy = rr.kappa1_policy;
    rec.kappa2_policy = rr.kappa2_policy;
    rec.kappa1_applied = rr.kappa1_applied;
    rec.kappa2_applied = rr.kappa2_applied;
    rec.t_bar_s = alloc_threw ? 0.0 : dec.t_bar_s;
    rec.images = alloc_threw ? 0 : rr.images_used;
    images_cum += rec.images;
    rec.images_cum = images_cum;
    rec.accuracy = last_acc;
    rec.bound = bound;
    if (!alloc_threw)
      for (double e : dec.energy_j) rec.total_energy_j += e;
    for (const auto& tr : dec.trace) {
      rec.dual_iters += tr.dual_iters;
      rec.sca_iters += tr.sca_iters;
    }
    rec.bcd_sweeps = dec.sweeps;
    rec.alloc_feasible = !alloc_threw && dec.feasible;
    rec.alloc_converged = !alloc_threw && dec.converged;
    rec.empty_round = rr.empty_round;
    rec.selection_shortfall = sel.shortfall;
    if (!alloc_threw) {
      for (std::size_t i = 0; i < dec.latency_s.size(); ++i) {
        const double deadline = prob.vehicles[i].deadline_s;
        if (dec.latency_s[i] > deadline * (1.0 + 1e-9)) ++rec.deadline_violations;
      }
      rec.share = dec.share;
      rec.phi_w = dec.phi_w;
      rec.latency_s = dec.latency_s;
      rec.energy_j = dec.energy_j;
    }

    double wall = cfg.road.t_max_s;
    if (!alloc_threw && !sel.selected.empty())
      wall = std::clamp(dec.t_bar_s, 0.0, cfg.road.t_max_s);
    rec.wall_s = wall;
    res.records.push_back(std::move(rec));

    prev_images = res.records.back().images;
    traffic.advance(wall);

    std::set<std::uint64_t> alive;
    for (const auto& v : traffic.vehicles()) alive.insert(v.id);
    for (auto it = states.begin(); it != states.end();) {
      if (!alive.count(it->first)) {
        if (it->second.shard >= 0) free_shards.insert(it->second.shard);
        it = states.erase(it);
      } else {
        ++it;
      }
    }
  }

  res.summary = summary_json(res.records, cfg.seed, cfg.mode);
  return res;
}

std::string records_csv(const std::vector<RoundRecord>& records) {
  std::string out = csv_header();
  out += '\n';
  for (const auto& r : records) {
    out += csv_row(r);
    out += '\n';
  }
  return out;
}

void write_outputs(const SimResult& res, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "rounds.csv", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_dir + "/rounds.csv");
    f << records_csv(res.records);
  }
  {
    std::ofstream f(fs::path(out_dir) / "summary.json", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_dir + "/summary.json");
    f << res.summary.dump(2) << '\n';
  }
}

SweepResult run_sweep(const RunConfig& base, const std::vector<SweepAxis>& axes,
                      int jobs) {
  if (jobs < 1) jobs = 1;
  if (axes.empty()) throw ConfigError("sweep: no axes given");
  for (const auto& ax : axes)
    if (ax.values.empty())
      throw ConfigError("sweep axis " + ax.path + ": no values");

  const nlohmann::json base_json = to_json(base);
  std::size_t total = 1;
  for (const auto& ax : axes) total *= ax.values.size();

  // Materialize every point's config first so a bad path or value fails the
  // whole sweep before any simulation starts.
  std::vector<SweepPoint> points(total);
  std::vector<RunConfig> cfgs;
  cfgs.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    nlohmann::json j = base_json;
    std::vector<nlohmann::json> vals(axes.size());
    std::size_t rem = idx;
    for (std::size_t a = axes.size(); a-- > 0;) {
      vals[a] = axes[a].values[rem % axes[a].values.size()];
      rem /= axes[a].values.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const nlohmann::json::json_pointer ptr(dotted_to_pointer(axes[a].path));
      if (!j.contains(ptr))
        throw ConfigError("sweep axis " + axes[a].path +
                          ": unknown config field");
      j[ptr] = vals[a];
    }
    cfgs.push_back(parse_config(j));
    points[idx].values = std::move(vals);
  }

  for (std::size_t start = 0; start < total;
       start += static_cast<std::size_t>(jobs)) {
    const std::size_t end =
        std::min(total, start + static_cast<std::size_t>(jobs));
    std::vector<std::future<nlohmann::json>> futs;
    futs.reserve(end - start);
    for (std::size_t i = start; i < end; ++i)
      futs.push_back(std::async(std::launch::async, [&cfgs, i] {
        return run_simulation(cfgs[i], 1).summary;
      }));
    for (std::size_t i = start; i < end; ++i)
      points[i].summary = futs[i - start].get();
  }

  SweepResult sw;
  sw.axes = axes;
  sw.points = std::move(points);
  return sw;
}

std::string sweep_csv(const SweepResult& sw) {
  std::string out;
  for (const auto& ax : sw.axes) {
    out += ax.path;
    out += ',';
  }
  out +=
      "rounds,mean_t_bar_s,mean_selected,final_accuracy,best_accuracy,"
      "total_energy_j,images,empty_rounds,infeasible_rounds\n";
  for (const auto& pt : sw.points) {
    for (const auto& v : pt.values) {
      out += v.dump();
      out += ',';
    }
    const auto& s = pt.summary;
    out += std::to_string(s.at("rounds").get<std::size_t>());
    out += ',';
    out += format_double(s.at("mean_t_bar_s").get<double>());
    out += ',';
    out += format_double(s.at("mean_selected").get<double>());
    out += ',';
    out += format_double(s.at("final_accuracy").get<double>());
    out += ',';
    out += format_double(s.at("best_accuracy").get<double>());
    out += ',';
    out += format_double(s.at("total_energy_j").get<double>());
    out += ',';
    out += std::to_string(s.at("images").get<long long>());
    out += ',';
    out += std::to_string(s.at("empty_rounds").get<int>());
    out += ',';
    out += std::to_string(s.at("infeasible_rounds").get<int>());
    out += '\n';
  }
  return out;
}

void write_sweep(const SweepResult& sw, const std::string& out_path) {
  namespace fs = std::filesystem;
  const fs::path p(out_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + out_path);
  f << sweep_csv(sw);
}

}  // namespace vfedsim::sim
