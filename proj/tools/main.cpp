#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vfedsim/allocator.hpp"
#include "vfedsim/config.hpp"
#include "vfedsim/core.hpp"
#include "vfedsim/fl.hpp"
#include "vfedsim/rng.hpp"
#include "vfedsim/simulate.hpp"

namespace {

nlohmann::json parse_scalar(const std::string& s) {
  try {
    return nlohmann::json::parse(s);
  } catch (const nlohmann::json::parse_error&) {
    return nlohmann::json(s);  // bare words sweep string fields
  }
}

std::vector<vfedsim::sim::SweepAxis> parse_axes(
    const std::vector<std::string>& specs) {
  std::vector<vfedsim::sim::SweepAxis> axes;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
      throw vfedsim::sim::ConfigError("axis must look like path=v1,v2,...: " +
                                      spec);
    vfedsim::sim::SweepAxis ax;
    ax.path = spec.substr(0, eq);
    std::string rest = spec.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const auto end = (comma == std::string::npos) ? rest.size() : comma;
      if (end == pos)
        throw vfedsim::sim::ConfigError("axis has an empty value: " + spec);
      ax.values.push_back(parse_scalar(rest.substr(pos, end - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    axes.push_back(std::move(ax));
  }
  return axes;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vfedsim: federated learning over a vehicular edge, simulated"};
  app.require_subcommand(1);
  int rc = 0;

  auto* sim_cmd =
      app.add_subcommand("simulate", "run the round loop from a config file");
  std::string sim_config, sim_out;
  std::uint64_t sim_seed = 0;
  int sim_rounds = 0, sim_threads = 1;
  bool sim_quiet = false;
  sim_cmd->add_option("--config", sim_config, "config file (json)")->required();
  auto* seed_opt = sim_cmd->add_option("--seed", sim_seed, "master seed override");
  sim_cmd->add_option("--out", sim_out, "output directory override");
  auto* rounds_opt =
      sim_cmd->add_option("--max-rounds", sim_rounds, "round count override");
  sim_cmd->add_option("--threads", sim_threads,
                      "local-training threads; never changes results");
  sim_cmd->add_flag("--quiet", sim_quiet, "suppress the summary on stdout");
  sim_cmd->callback([&] {
    auto cfg = vfedsim::sim::load_config(sim_config);
    if (seed_opt->count()) cfg.seed = sim_seed;
    if (rounds_opt->count()) cfg.rounds = sim_rounds;
    if (!sim_out.empty()) cfg.output_dir = sim_out;
    cfg.validate();
    const auto res = vfedsim::sim::run_simulation(cfg, sim_threads);
    vfedsim::sim::write_outputs(res, cfg.output_dir);
    if (!sim_quiet) std::cout << res.summary.dump(2) << '\n';
  });

  auto* alloc_cmd =
      app.add_subcommand("allocate", "solve one standalone resource instance");
  std::string inst_path, alloc_out;
  alloc_cmd->add_option("--instance", inst_path, "instance file (json)")
      ->required();
  alloc_cmd->add_option("--out", alloc_out, "also write the decision here");
  alloc_cmd->callback([&] {
    const auto inst = vfedsim::sim::load_instance(inst_path);
    const auto dec = vfedsim::alloc::bcd_solve(inst.problem, inst.tol);
    const auto j = vfedsim::sim::decision_to_json(dec);
    if (!alloc_out.empty()) write_text(alloc_out, j.dump(2) + "\n");
    std::cout << j.dump(2) << '\n';
    if (!dec.feasible) {
      std::cerr << "infeasible: " << dec.infeasible_reason << '\n';
      rc = 3;
    }
  });

  auto* part_cmd =
      app.add_subcommand("partition", "report a Dirichlet label split");
  int part_classes = 10, part_shards = 20;
  long long part_samples = 8000;
  double part_alpha = 0.5;
  std::uint64_t part_seed = 1;
  std::string part_out = "partition.csv";
  part_cmd->add_option("--classes", part_classes, "label count");
  part_cmd->add_option("--samples", part_samples, "total samples, split evenly");
  part_cmd->add_option("--shards", part_shards, "number of shards (vehicles)");
  part_cmd->add_option("--alpha", part_alpha, "Dirichlet concentration");
  part_cmd->add_option("--seed", part_seed, "master seed");
  part_cmd->add_option("--out", part_out, "per-shard csv path");
  part_cmd->callback([&] {
    if (part_alpha <= 0.0)
      throw vfedsim::sim::ConfigError("partition: alpha must be > 0");
    if (part_classes < 2 || part_shards < 1 || part_samples < 1)
      throw vfedsim::sim::ConfigError(
          "partition: need classes >= 2, shards >= 1, samples >= 1");
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(part_samples));
    const auto counts = vfedsim::fl::split_uniform(part_samples, part_classes);
    for (int c = 0; c < part_classes; ++c)
      labels.insert(labels.end(), static_cast<std::size_t>(counts[c]), c);
    auto rng = vfedsim::make_rng(part_seed, "partition");
    const auto part = vfedsim::fl::dirichlet_partition(
        labels, part_classes, part_shards, part_alpha, rng);

    std::string csv = "shard,size,emd,counts\n";
    double emd_min = 2.0, emd_max = 0.0, emd_sum = 0.0;
    for (std::size_t s = 0; s < part.histograms.size(); ++s) {
      const auto& h = part.histograms[s];
      const double emd =
          h.empty() ? 2.0 : vfedsim::core::compute_emd(h).emd;
      emd_min = std::min(emd_min, emd);
      emd_max = std::max(emd_max, emd);
      emd_sum += emd;
      std::string packed;
      for (int c = 0; c < part_classes; ++c) {
        if (c) packed += ';';
        packed += std::to_string(h.counts[c]);
      }
      csv += std::to_string(s) + ',' + std::to_string(h.total()) + ',' +
             vfedsim::sim::format_double(emd) + ',' + packed + '\n';
    }
    write_text(part_out, csv);
    nlohmann::json j;
    j["shards"] = part.histograms.size();
    j["emd_min"] = emd_min;
    j["emd_mean"] = emd_sum / static_cast<double>(part.histograms.size());
    j["emd_max"] = emd_max;
    j["csv"] = part_out;
    std::cout << j.dump(2) << '\n';
  });

  auto* bound_cmd =
      app.add_subcommand("bound", "tabulate the convergence bound over rounds");
  double b_beta = 4.0, b_varrho = 2.0, b_mu = 1.0, b_eta = 0.25, b_sigma = 0.5;
  double b_lambda = 0.2, b_lambda_a = 0.2, b_theta0 = 1.0, b_kappa2 = 0.0;
  int b_h = 5, b_rounds = 50, b_n = 10;
  bound_cmd->add_option("--beta", b_beta, "loss Lipschitz constant");
  bound_cmd->add_option("--varrho", b_varrho, "smoothness constant");
  bound_cmd->add_option("--mu", b_mu, "strong-convexity constant");
  bound_cmd->add_option("--eta", b_eta, "step size; must be < 1/varrho");
  bound_cmd->add_option("--local-steps", b_h, "local steps per round");
  bound_cmd->add_option("--rounds", b_rounds, "largest T to tabulate");
  bound_cmd->add_option("--participants", b_n, "participant count");
  bound_cmd->add_option("--sigma", b_sigma, "per-participant gradient noise");
  bound_cmd->add_option("--lambda", b_lambda, "per-participant quality gap");
  bound_cmd->add_option("--lambda-a", b_lambda_a, "generator quality gap");
  bound_cmd->add_option("--kappa2", b_kappa2, "augmented-model weight");
  bound_cmd->add_option("--theta0", b_theta0, "initial optimality gap");
  bound_cmd->callback([&] {
    if (b_rounds < 1 || b_n < 1)
      throw vfedsim::sim::ConfigError("bound: rounds and participants >= 1");
    if (b_kappa2 < 0.0 || b_kappa2 > 1.0)
      throw vfedsim::sim::ConfigError("bound: kappa2 must lie in [0, 1]");
    vfedsim::fl::BoundParams bp;
    bp.beta = b_beta;
    bp.varrho = b_varrho;
    bp.mu = b_mu;
    bp.eta = b_eta;
    bp.local_steps = b_h;
    bp.sigma.assign(static_cast<std::size_t>(b_n), b_sigma);
    bp.lambda.assign(static_cast<std::size_t>(b_n), b_lambda);
    bp.lambda_a = b_lambda_a;
    bp.policy.kappa1 = 1.0 - b_kappa2;
    bp.policy.kappa2 = b_kappa2;
    bp.policy.rho.assign(static_cast<std::size_t>(b_n),
                         1.0 / static_cast<double>(b_n));
    std::cout << "T,bound\n";
    for (int t = 1; t <= b_rounds; ++t) {
      bp.rounds = t;
      std::cout << t << ','
                << vfedsim::sim::format_double(
                       vfedsim::fl::evaluate_bound(bp, b_theta0))
                << '\n';
    }
  });

  auto* sweep_cmd = app.add_subcommand(
      "sweep", "cross-product of config overrides, one summary row each");
  std::string sweep_config, sweep_out = "sweep.csv";
  std::vector<std::string> axis_specs;
  int sweep_jobs = 1;
  sweep_cmd->add_option("--config", sweep_config, "base config file (json)")
      ->required();
  sweep_cmd
      ->add_option("--axis", axis_specs,
                   "dotted.path=v1,v2,... (repeat per axis)")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "summary csv path");
  sweep_cmd->add_option("--jobs", sweep_jobs, "points run concurrently");
  sweep_cmd->callback([&] {
    const auto base = vfedsim::sim::load_config(sweep_config);
    const auto axes = parse_axes(axis_specs);
    const auto sw = vfedsim::sim::run_sweep(base, axes, sweep_jobs);
    vfedsim::sim::write_sweep(sw, sweep_out);
    std::cout << vfedsim::sim::sweep_csv(sw);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const vfedsim::sim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const vfedsim::alloc::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return rc;
}
