#include "vfedsim/fl.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "vfedsim/rng.hpp"

namespace vfedsim::fl {

void SyntheticTask::validate() const {
  if (classes < 2) throw std::invalid_argument("task: classes must be >= 2");
  if (feature_dim < 1) throw std::invalid_argument("task: feature_dim must be >= 1");
  if (train_samples < 1 || test_samples < 1)
    throw std::invalid_argument("task: sample counts must be >= 1");
  if (!(mean_scale >= 0.0) || !(noise_scale > 0.0))
    throw std::invalid_argument("task: need mean_scale >= 0 and noise_scale > 0");
  if (!(shift >= 0.0) || !(shift_scale >= 0.0))
    throw std::invalid_argument("task: shift knobs must be >= 0");
}

void TrainerConfig::validate() const {
  if (!(eta >= 0.0)) throw std::invalid_argument("trainer: eta must be >= 0");
  if (local_steps < 1) throw std::invalid_argument("trainer: local_steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("trainer: batch_size must be >= 1");
}

std::vector<long long> split_uniform(long long count, int buckets) {
  if (buckets < 1) throw std::invalid_argument("split_uniform: buckets must be >= 1");
  if (count < 0) throw std::invalid_argument("split_uniform: count must be >= 0");
  std::vector<long long> out(buckets, count / buckets);
  const long long rem = count % buckets;
  for (long long i = 0; i < rem; ++i) ++out[i];
  return out;
}

namespace {

void fill_gaussian_row(std::vector<double>& x, std::span<const double> mean,
                       double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  for (double m : mean) x.push_back(m + noise * unit(rng));
}

}  // namespace

TaskData make_task_data(const SyntheticTask& task, std::uint64_t master_seed) {
  task.validate();
  TaskData data;
  data.task = task;

  {
    auto rng = make_rng(master_seed, "task-means");
    std::normal_distribution<double> unit(0.0, 1.0);
    data.class_means.assign(task.classes, std::vector<double>(task.feature_dim));
    for (auto& mean : data.class_means)
      for (auto& v : mean) v = task.mean_scale * unit(rng);
  }
  {
    auto rng = make_rng(master_seed, "task-shift-dirs");
    std::normal_distribution<double> unit(0.0, 1.0);
    data.shift_dirs.assign(task.classes, std::vector<double>(task.feature_dim));
    for (auto& dir : data.shift_dirs) {
      double norm2 = 0.0;
      for (auto& v : dir) {
        v = unit(rng);
        norm2 += v * v;
      }
      const double norm = std::sqrt(norm2);
      if (norm > 0.0)
        for (auto& v : dir) v /= norm;
      else
        dir[0] = 1.0;
    }
  }

  auto fill_split = [&](Dataset& ds, int total, const char* stream) {
    ds.features = task.feature_dim;
    ds.x.reserve(static_cast<std::size_t>(total) * task.feature_dim);
    ds.y.reserve(total);
    auto rng = make_rng(master_seed, stream);
    const auto counts = split_uniform(total, task.classes);
    for (int y = 0; y < task.classes; ++y)
      for (long long i = 0; i < counts[y]; ++i) {
        fill_gaussian_row(ds.x, data.class_means[y], task.noise_scale, rng);
        ds.y.push_back(y);
      }
  };
  fill_split(data.train, task.train_samples, "task-train");
  fill_split(data.test, task.test_samples, "task-test");
  return data;
}

PartitionResult dirichlet_partition(std::span<const int> labels, int num_classes,
                                    int num_shards, double alpha,
                                    std::mt19937_64& rng) {
  if (num_classes < 1)
    throw std::invalid_argument("dirichlet_partition: num_classes must be >= 1");
  if (num_shards < 1)
    throw std::invalid_argument("dirichlet_partition: num_shards must be >= 1");
  if (!(alpha > 0.0))
    throw std::invalid_argument("dirichlet_partition: alpha must be > 0");
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("dirichlet_partition: label out of range");

  std::vector<std::vector<int>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<int>(i));

  PartitionResult res;
  res.histograms.assign(num_shards, core::LabelHistogram{
                                        std::vector<std::int64_t>(num_classes, 0)});
  res.indices.resize(num_shards);

  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> prop(num_shards);
  for (int y = 0; y < num_classes; ++y) {
    auto& members = by_class[y];
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);

    double sum = 0.0;
    for (auto& p : prop) {
      p = gamma(rng);
      sum += p;
    }
    if (!(sum > 0.0)) {
      std::fill(prop.begin(), prop.end(), 1.0);
      sum = static_cast<double>(num_shards);
    }

    // largest-remainder rounding, ties to the lower shard id
    const long long total = static_cast<long long>(members.size());
    std::vector<long long> take(num_shards);
    std::vector<std::pair<double, int>> rema(num_shards);
    long long assigned = 0;
    for (int s = 0; s < num_shards; ++s) {
      const double target = static_cast<double>(total) * prop[s] / sum;
      take[s] = static_cast<long long>(std::floor(target));
      assigned += take[s];
      rema[s] = {target - std::floor(target), s};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (long long r = 0; r < total - assigned; ++r) ++take[rema[r].second];

    std::size_t cursor = 0;
    for (int s = 0; s < num_shards; ++s) {
      for (long long r = 0; r < take[s]; ++r)
        res.indices[s].push_back(members[cursor++]);
      res.histograms[s].counts[y] += take[s];
    }
  }
  for (auto& idx : res.indices) std::sort(idx.begin(), idx.end());
  return res;
}

core::ModelParams zero_params(int classes, int feature_dim) {
  core::ModelParams p;
  p.theta.assign(static_cast<std::size_t>(classes) * feature_dim + classes, 0.0);
  return p;
}

namespace {

struct Shape {
  int classes;
  int features;
};

Shape infer_shape(const core::ModelParams& params, int features) {
  if (features < 1) throw std::invalid_argument("model: features must be >= 1");
  const std::size_t dim = params.dim();
  if (dim % static_cast<std::size_t>(features + 1) != 0)
    throw std::invalid_argument("model: parameter size does not match features");
  return {static_cast<int>(dim / (features + 1)), features};
}

// softmax probabilities for one row, numerically stabilized
void softmax_row(const core::ModelParams& params, const Shape& sh,
                 std::span<const double> x, std::vector<double>& probs) {
  probs.assign(sh.classes, 0.0);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < sh.classes; ++c) {
    double z = params.theta[static_cast<std::size_t>(sh.classes) * sh.features + c];
    const double* w = params.theta.data() + static_cast<std::size_t>(c) * sh.features;
    for (int f = 0; f < sh.features; ++f) z += w[f] * x[f];
    probs[c] = z;
    max_logit = std::max(max_logit, z);
  }
  double denom = 0.0;
  for (auto& p : probs) {
    p = std::exp(p - max_logit);
    denom += p;
  }
  for (auto& p : probs) p /= denom;
}

}  // namespace

double eval_loss(const core::ModelParams& params, const Dataset& data) {
  if (data.size() == 0) throw std::domain_error("eval_loss: empty dataset");
  const Shape sh = infer_shape(params, data.features);
  std::vector<double> probs;
  double loss = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    softmax_row(params, sh, data.row(i), probs);
    loss += -std::log(std::max(probs[data.y[i]], 1e-300));
  }
  return loss / data.size();
}

double eval_accuracy(const core::ModelParams& params, const Dataset& data) {
  if (data.size() == 0) throw std::domain_error("eval_accuracy: empty dataset");
  const Shape sh = infer_shape(params, data.features);
  std::vector<double> probs;
  int correct = 0;
  for (int i = 0; i < data.size(); ++i) {
    softmax_row(params, sh, data.row(i), probs);
    int arg = 0;
    for (int c = 1; c < sh.classes; ++c)
      if (probs[c] > probs[arg]) arg = c;  // ties keep the lower class
    if (arg == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

std::vector<double> loss_gradient(const core::ModelParams& params,
                                  const Dataset& data,
                                  std::span<const int> indices) {
  if (indices.empty()) throw std::domain_error("loss_gradient: empty batch");
  const Shape sh = infer_shape(params, data.features);
  std::vector<double> grad(params.dim(), 0.0);
  std::vector<double> probs;
  for (int i : indices) {
    const auto x = data.row(i);
    softmax_row(params, sh, x, probs);
    for (int c = 0; c < sh.classes; ++c) {
      const double coef = probs[c] - (c == data.y[i] ? 1.0 : 0.0);
      double* gw = grad.data() + static_cast<std::size_t>(c) * sh.features;
      for (int f = 0; f < sh.features; ++f) gw[f] += coef * x[f];
      grad[static_cast<std::size_t>(sh.classes) * sh.features + c] += coef;
    }
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (auto& g : grad) g *= inv;
  return grad;
}

core::ModelParams local_train(const core::ModelParams& start,
                              const Dataset& data, std::span<const int> indices,
                              const TrainerConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  if (indices.empty()) return start;
  core::ModelParams params = start;
  std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
  std::vector<int> batch(cfg.batch_size);
  for (int step = 0; step < cfg.local_steps; ++step) {
    for (auto& b : batch) b = indices[pick(rng)];
    const auto grad = loss_gradient(params, data, batch);
    for (std::size_t j = 0; j < params.dim(); ++j)
      params.theta[j] -= cfg.eta * grad[j];
  }
  return params;
}

Dataset generate_synthetic(const TaskData& data, std::span<const int> labels,
                           long long count, std::mt19937_64& rng) {
  if (count < 0) throw std::invalid_argument("generate_synthetic: negative count");
  Dataset out;
  out.features = data.task.feature_dim;
  if (count == 0 || labels.empty()) return out;

  std::vector<int> uniq(labels.begin(), labels.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  for (int y : uniq)
    if (y < 0 || y >= data.task.classes)
      throw std::invalid_argument("generate_synthetic: label out of range");

  const auto counts = split_uniform(count, static_cast<int>(uniq.size()));
  const double offset = data.task.shift * data.task.shift_scale;
  std::vector<double> mean(data.task.feature_dim);
  for (std::size_t k = 0; k < uniq.size(); ++k) {
    const int y = uniq[k];
    for (int f = 0; f < data.task.feature_dim; ++f)
      mean[f] = data.class_means[y][f] + offset * data.shift_dirs[y][f];
    for (long long i = 0; i < counts[k]; ++i) {
      fill_gaussian_row(out.x, mean, data.task.noise_scale, rng);
      out.y.push_back(y);
    }
  }
  return out;
}

core::ModelParams train_augmented(const core::ModelParams& start,
                                  const Dataset& generated,
                                  const TrainerConfig& cfg,
                                  std::mt19937_64& rng) {
  if (generated.size() == 0) return start;
  std::vector<int> all(generated.size());
  std::iota(all.begin(), all.end(), 0);
  return local_train(start, generated, all, cfg, rng);
}

void BoundParams::validate() const {
  if (!(beta > 0.0) || !(varrho > 0.0) || !(mu > 0.0))
    throw std::invalid_argument("bound: beta, varrho, mu must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("bound: eta must be > 0");
  if (!(eta < 1.0 / varrho))
    throw std::domain_error("bound: premise eta < 1/varrho violated");
  if (local_steps < 1) throw std::invalid_argument("bound: local_steps must be >= 1");
  if (rounds < 0) throw std::invalid_argument("bound: rounds must be >= 0");
  if (sigma.size() != policy.rho.size() || lambda.size() != policy.rho.size())
    throw std::invalid_argument("bound: sigma/lambda/rho size mismatch");
  for (double v : sigma)
    if (!(v >= 0.0)) throw std::invalid_argument("bound: sigma must be >= 0");
  for (double v : lambda)
    if (!(v >= 0.0)) throw std::invalid_argument("bound: lambda must be >= 0");
  if (!(lambda_a >= 0.0)) throw std::invalid_argument("bound: lambda_a must be >= 0");
  if (!(policy.kappa1 >= 0.0) || !(policy.kappa2 >= 0.0) ||
      std::abs(policy.kappa1 + policy.kappa2 - 1.0) > 1e-9)
    throw std::invalid_argument("bound: kappa weights must be >= 0 and sum to 1");
}

double bound_chi(double mu, double varrho, double eta) {
  if (!(eta < 1.0 / varrho))
    throw std::domain_error("bound: premise eta < 1/varrho violated");
  return 1.0 - 2.0 * mu * eta + 2.0 * mu * varrho * eta * eta;
}

double bound_psi(const BoundParams& p) {
  const double chi = bound_chi(p.mu, p.varrho, p.eta);
  const double h = static_cast<double>(p.local_steps);
  return (p.beta * std::pow(p.eta * p.varrho + 1.0, h) - 1.0) /
         (p.varrho * (1.0 + std::pow(chi, h)));
}

double bound_quality_term(const BoundParams& p) {
  double fl_term = 0.0;
  for (std::size_t i = 0; i < p.policy.rho.size(); ++i)
    fl_term += p.policy.rho[i] * (p.sigma[i] + p.lambda[i]);
  return p.policy.kappa1 * fl_term + p.policy.kappa2 * p.lambda_a;
}

double evaluate_bound(const BoundParams& p, double theta0_gap) {
  p.validate();
  if (!(theta0_gap >= 0.0))
    throw std::invalid_argument("bound: theta0_gap must be >= 0");
  const double chi = bound_chi(p.mu, p.varrho, p.eta);
  const double decay =
      std::pow(chi, static_cast<double>(p.local_steps) *
                        static_cast<double>(p.rounds));
  return decay * theta0_gap + (1.0 - decay) * bound_psi(p) * bound_quality_term(p);
}

double estimate_lambda(const core::ModelParams& params, const Dataset& data,
                       std::span<const int> indices, double emd) {
  if (indices.empty()) return 0.0;
  const Shape sh = infer_shape(params, data.features);
  std::vector<std::vector<int>> by_class(sh.classes);
  for (int i : indices) by_class[data.y[i]].push_back(i);
  double worst = 0.0;
  for (const auto& members : by_class) {
    if (members.empty()) continue;
    const auto grad = loss_gradient(params, data, members);
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    worst = std::max(worst, std::sqrt(norm2));
  }
  return emd * worst;
}

RoundResult run_round(const core::ModelParams& global, const TaskData& data,
                      std::span<const Participant> participants,
                      std::span<const int> generation_labels, long long images,
                      Mode mode, const TrainerConfig& cfg,
                      std::uint64_t master_seed, std::uint64_t round,
                      int threads) {
  cfg.validate();
  RoundResult res;
  res.images_used = (mode == Mode::fedavg) ? 0 : images;

  // Server side: generate and train the augmented model.
  core::ModelParams augmented = global;
  bool augmented_trained = false;
  if (res.images_used > 0 && !generation_labels.empty()) {
    auto gen_rng = make_rng(master_seed, "generate", round);
    const Dataset synth =
        generate_synthetic(data, generation_labels, res.images_used, gen_rng);
    auto train_rng = make_rng(master_seed, "augmented-train", round);
    augmented = train_augmented(global, synth, cfg, train_rng);
    augmented_trained = synth.size() > 0;
  }
  if (!augmented_trained) res.images_used = 0;

  // Participant side.
  std::vector<std::int64_t> sizes;
  std::vector<core::DataQuality> qualities;
  sizes.reserve(participants.size());
  for (const auto& p : participants) {
    sizes.push_back(p.indices ? static_cast<std::int64_t>(p.indices->size()) : 0);
    qualities.push_back({p.emd});
  }
  std::int64_t total_data = 0;
  for (auto s : sizes) total_data += s;

  if (participants.empty() || total_data == 0) {
    res.empty_round = true;
    res.global = augmented;
    res.kappa1_policy = 0.0;
    res.kappa2_policy = 1.0;
    res.kappa1_applied = 0.0;
    res.kappa2_applied = 1.0;
    res.test_accuracy = eval_accuracy(res.global, data.test);
    return res;
  }

  const core::WeightPolicy quality = core::compute_kappa(qualities);
  res.kappa1_policy = quality.kappa1;
  res.kappa2_policy = quality.kappa2;
  double emd_sum = 0.0;
  for (const auto& q : qualities) emd_sum += q.emd;
  res.emd_mean = emd_sum / static_cast<double>(qualities.size());

  if (mode == Mode::generator_only) {
    res.global = augmented;
    res.kappa1_applied = 0.0;
    res.kappa2_applied = 1.0;
    res.test_accuracy = eval_accuracy(res.global, data.test);
    return res;
  }

  std::vector<core::ModelParams> locals(participants.size());
  auto train_one = [&](std::size_t i) {
    const auto& p = participants[i];
    auto rng = make_rng(master_seed, "local-train", round, p.vehicle_id);
    locals[i] = local_train(global, data.train,
                            p.indices ? std::span<const int>(*p.indices)
                                      : std::span<const int>(),
                            cfg, rng);
  };
  if (threads > 1 && participants.size() > 1) {
    std::vector<std::future<void>> futs;
    futs.reserve(participants.size());
    for (std::size_t i = 0; i < participants.size(); ++i)
      futs.push_back(std::async(std::launch::async, train_one, i));
    for (auto& f : futs) f.get();
  } else {
    for (std::size_t i = 0; i < participants.size(); ++i) train_one(i);
  }

  core::WeightPolicy applied = quality;
  applied.rho = core::data_size_weights(sizes);
  if (mode == Mode::fedavg || !augmented_trained) {
    // no augmented signal this round: plain size-weighted FedAvg
    applied.kappa1 = 1.0;
    applied.kappa2 = 0.0;
  }
  res.kappa1_applied = applied.kappa1;
  res.kappa2_applied = applied.kappa2;
  res.global = core::aggregate(locals, augmented, applied);
  res.test_accuracy = eval_accuracy(res.global, data.test);
  return res;
}

}  // namespace vfedsim::fl
