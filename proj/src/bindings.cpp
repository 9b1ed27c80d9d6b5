#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vfedsim/allocator.hpp"
#include "vfedsim/config.hpp"
#include "vfedsim/core.hpp"
#include "vfedsim/fl.hpp"
#include "vfedsim/mobility.hpp"
#include "vfedsim/rng.hpp"
#include "vfedsim/simulate.hpp"

namespace py = pybind11;
using namespace vfedsim;

// JSON-heavy structures cross the boundary as strings: callers json.loads()
// them, and the C++ side stays the single source of schema truth.
PYBIND11_MODULE(pyvfedsim, m) {
  m.doc() = "federated learning over a vehicular edge: simulator bindings";

  py::register_exception<alloc::InfeasibleError>(m, "InfeasibleError");
  py::register_exception<sim::ConfigError>(m, "ConfigError");

  m.def(
      "compute_emd",
      [](std::vector<std::int64_t> counts) {
        core::LabelHistogram h{std::move(counts)};
        return core::compute_emd(h).emd;
      },
      py::arg("counts"), "EMD of a label histogram against uniform");

  m.def(
      "compute_emd_ref",
      [](std::vector<std::int64_t> counts, const std::vector<double>& ref) {
        core::LabelHistogram h{std::move(counts)};
        return core::compute_emd(h, ref).emd;
      },
      py::arg("counts"), py::arg("reference"),
      "EMD of a label histogram against an explicit reference");

  m.def(
      "compute_kappa",
      [](const std::vector<double>& emds) {
        std::vector<core::DataQuality> q;
        q.reserve(emds.size());
        for (double e : emds) q.push_back({e});
        const auto w = core::compute_kappa(q);
        return py::make_tuple(w.kappa1, w.kappa2);
      },
      py::arg("emds"), "(kappa1, kappa2) from participant EMDs");

  m.def(
      "aggregate",
      [](std::vector<std::vector<double>> locals, std::vector<double> augmented,
         double kappa1, double kappa2, std::vector<double> rho) {
        std::vector<core::ModelParams> ls;
        ls.reserve(locals.size());
        for (auto& v : locals) ls.push_back({std::move(v)});
        const core::ModelParams aug{std::move(augmented)};
        core::WeightPolicy p;
        p.kappa1 = kappa1;
        p.kappa2 = kappa2;
        p.rho = std::move(rho);
        return core::aggregate(ls, aug, p).theta;
      },
      py::arg("locals"), py::arg("augmented"), py::arg("kappa1"),
      py::arg("kappa2"), py::arg("rho"), "quality-weighted model aggregation");

  m.def(
      "evaluate_bound",
      [](double beta, double varrho, double mu, double eta, int local_steps,
         int rounds, std::vector<double> sigma, std::vector<double> lambda,
         double lambda_a, double kappa1, double kappa2, std::vector<double> rho,
         double theta0) {
        fl::BoundParams p;
        p.beta = beta;
        p.varrho = varrho;
        p.mu = mu;
        p.eta = eta;
        p.local_steps = local_steps;
        p.rounds = rounds;
        p.sigma = std::move(sigma);
        p.lambda = std::move(lambda);
        p.lambda_a = lambda_a;
        p.policy.kappa1 = kappa1;
        p.policy.kappa2 = kappa2;
        p.policy.rho = std::move(rho);
        return fl::evaluate_bound(p, theta0);
      },
      py::arg("beta"), py::arg("varrho"), py::arg("mu"), py::arg("eta"),
      py::arg("local_steps"), py::arg("rounds"), py::arg("sigma"),
      py::arg("lambda_"), py::arg("lambda_a"), py::arg("kappa1"),
      py::arg("kappa2"), py::arg("rho"), py::arg("theta0"),
      "convergence bound after `rounds` aggregations");

  m.def("generation_budget", &alloc::generation_budget, py::arg("window_s"),
        py::arg("prev_train_s"), py::arg("seconds_per_image"),
        "images that fit the round window");

  m.def("stationary_share", &alloc::stationary_share, py::arg("lambda1"),
        py::arg("upload_coeff"), py::arg("lambda2"), py::arg("energy_coeff"),
        py::arg("lambda3"), "closed-form share at fixed multipliers");

  m.def(
      "dirichlet_partition",
      [](const std::vector<int>& labels, int classes, int shards, double alpha,
         std::uint64_t seed) {
        auto rng = make_rng(seed, "partition");
        const auto part =
            fl::dirichlet_partition(labels, classes, shards, alpha, rng);
        std::vector<std::vector<std::int64_t>> counts;
        counts.reserve(part.histograms.size());
        for (const auto& h : part.histograms) counts.push_back(h.counts);
        return counts;
      },
      py::arg("labels"), py::arg("classes"), py::arg("shards"),
      py::arg("alpha"), py::arg("seed"), "per-shard label counts");

  m.def(
      "mean_speed_kmh",
      [](double v_max_kmh, double v_min_kmh, int max_vehicles, int count) {
        mobility::RoadConfig c;
        c.v_max_kmh = v_max_kmh;
        c.v_min_kmh = v_min_kmh;
        c.max_vehicles = max_vehicles;
        return mobility::mean_speed_kmh(c, count);
      },
      py::arg("v_max_kmh"), py::arg("v_min_kmh"), py::arg("max_vehicles"),
      py::arg("count"), "congestion-aware mean speed");

  m.def(
      "holding_time_s",
      [](double coverage_radius_m, double road_offset_m, double position_m,
         double speed_mps) {
        mobility::RoadConfig c;
        c.coverage_radius_m = coverage_radius_m;
        c.road_offset_m = road_offset_m;
        return mobility::holding_time_s(c, {position_m, speed_mps});
      },
      py::arg("coverage_radius_m"), py::arg("road_offset_m"),
      py::arg("position_m"), py::arg("speed_mps"),
      "remaining time inside coverage");

  m.def(
      "allocate",
      [](const std::string& instance_json) {
        const auto inst =
            sim::parse_instance(nlohmann::json::parse(instance_json));
        const auto dec = alloc::bcd_solve(inst.problem, inst.tol);
        return sim::decision_to_json(dec).dump();
      },
      py::arg("instance_json"),
      "solve one resource instance; returns the decision as a JSON string");

  m.def(
      "simulate",
      [](const std::string& config_json, int threads) {
        const auto cfg = sim::parse_config(nlohmann::json::parse(config_json));
        const auto res = sim::run_simulation(cfg, threads);
        return py::make_tuple(res.summary.dump(), sim::records_csv(res.records));
      },
      py::arg("config_json"), py::arg("threads") = 1,
      "run a full simulation; returns (summary_json, rounds_csv)");
}
