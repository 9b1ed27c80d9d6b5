#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vfedsim/core.hpp"

namespace vfedsim::fl {

// Class-conditional Gaussian task: x | y ~ N(mu_y, noise^2 I). The generator
// samples from the same family with means offset by shift * shift_scale along
// a fixed per-class unit direction.
struct SyntheticTask {
  int classes = 10;
  int feature_dim = 16;
  int train_samples = 8000;
  int test_samples = 2000;
  double mean_scale = 0.8;
  double noise_scale = 1.0;
  double shift = 0.0;       // generator distribution shift knob, >= 0
  double shift_scale = 3.0;

  void validate() const;  // throws std::invalid_argument
};

struct Dataset {
  int features = 0;
  std::vector<double> x;  // row-major, size() * features
  std::vector<int> y;

  int size() const { return static_cast<int>(y.size()); }
  std::span<const double> row(int i) const {
    return {x.data() + static_cast<std::size_t>(i) * features,
            static_cast<std::size_t>(features)};
  }
};

struct TaskData {
  SyntheticTask task;
  Dataset train;
  Dataset test;
  std::vector<std::vector<double>> class_means;  // Y x F
  std::vector<std::vector<double>> shift_dirs;   // Y x F, unit norm
};

TaskData make_task_data(const SyntheticTask& task, std::uint64_t master_seed);

struct TrainerConfig {
  double eta = 0.1;
  int local_steps = 5;  // one mini-batch per step
  int batch_size = 32;

  void validate() const;
};

// count split evenly over buckets, remainder to the lowest indices.
std::vector<long long> split_uniform(long long count, int buckets);

struct PartitionResult {
  std::vector<core::LabelHistogram> histograms;  // per shard
  std::vector<std::vector<int>> indices;         // per shard, into labels
};

// Per-class Dirichlet(alpha) proportions across shards, converted to integer
// counts by largest-remainder rounding (ties to the lower shard id). Every
// sample lands in exactly one shard.
PartitionResult dirichlet_partition(std::span<const int> labels, int num_classes,
                                    int num_shards, double alpha,
                                    std::mt19937_64& rng);

// Multinomial logistic regression; theta = [W (Y x F, row-major), bias (Y)].
core::ModelParams zero_params(int classes, int feature_dim);
double eval_loss(const core::ModelParams& params, const Dataset& data);
double eval_accuracy(const core::ModelParams& params, const Dataset& data);

// Mean cross-entropy gradient over the given sample indices.
std::vector<double> loss_gradient(const core::ModelParams& params,
                                  const Dataset& data,
                                  std::span<const int> indices);

// local_steps SGD steps; each step draws batch_size indices uniformly with
// replacement from `indices`. Empty index list returns params unchanged.
core::ModelParams local_train(const core::ModelParams& start,
                              const Dataset& data, std::span<const int> indices,
                              const TrainerConfig& cfg, std::mt19937_64& rng);

// count samples spread uniformly over the given labels (remainder to the
// lowest label values), drawn from the shifted class-conditional family.
Dataset generate_synthetic(const TaskData& data, std::span<const int> labels,
                           long long count, std::mt19937_64& rng);

// Same SGD loop over the whole generated dataset; empty data is a no-op.
core::ModelParams train_augmented(const core::ModelParams& start,
                                  const Dataset& generated,
                                  const TrainerConfig& cfg,
                                  std::mt19937_64& rng);

// Convergence-bound inputs. sigma/lambda are per participant and must match
// policy.rho in length; eta here is the bound's own step size.
struct BoundParams {
  double beta = 4.0;
  double varrho = 2.0;
  double mu = 1.0;
  double eta = 0.25;
  int local_steps = 5;   // h
  int rounds = 50;       // T
  std::vector<double> sigma;
  std::vector<double> lambda;
  double lambda_a = 0.2;
  core::WeightPolicy policy;

  void validate() const;  // throws; eta >= 1/varrho is a domain error
};

double bound_chi(double mu, double varrho, double eta);
double bound_psi(const BoundParams& p);
double bound_quality_term(const BoundParams& p);  // Lambda

// chi^(hT) * theta0 + (1 - chi^(hT)) * psi * Lambda
double evaluate_bound(const BoundParams& p, double theta0_gap);

// Empirical per-participant quality estimate: emd times the largest
// per-class mean gradient norm at the given parameters.
double estimate_lambda(const core::ModelParams& params, const Dataset& data,
                       std::span<const int> indices, double emd);

enum class Mode { augmented, fedavg, generator_only };

struct Participant {
  std::uint64_t vehicle_id = 0;
  const std::vector<int>* indices = nullptr;  // into the task train set
  double emd = 0.0;
};

struct RoundResult {
  core::ModelParams global;
  double test_accuracy = 0.0;
  double kappa1_policy = 1.0;   // from mean participant EMD
  double kappa2_policy = 0.0;
  double kappa1_applied = 1.0;  // what the aggregation actually used
  double kappa2_applied = 0.0;
  double emd_mean = 0.0;
  long long images_used = 0;
  bool empty_round = false;
};

// One communication round: local training on every participant (its own RNG
// substream, so thread count never changes results), server-side generation
// and augmented training, quality-weighted aggregation, test evaluation.
// With no generated images the applied weights degrade to (1, 0) and the
// round reduces to weighted FedAvg; with no participants the augmented model
// becomes the global model and the round is flagged.
RoundResult run_round(const core::ModelParams& global, const TaskData& data,
                      std::span<const Participant> participants,
                      std::span<const int> generation_labels, long long images,
                      Mode mode, const TrainerConfig& cfg,
                      std::uint64_t master_seed, std::uint64_t round,
                      int threads);

}  // namespace vfedsim::fl
