#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vfedsim::core {

// Per-dataset label counts. counts.size() is the number of classes Y.
struct LabelHistogram {
  std::vector<std::int64_t> counts;

  int num_classes() const { return static_cast<int>(counts.size()); }
  std::int64_t total() const;
  bool empty() const { return total() == 0; }
};

struct DataQuality {
  double emd = 0.0;  // L1 distance between label distribution and reference
};

// Aggregation weights. kappa1 + kappa2 == 1, rho sums to 1 over participants.
struct WeightPolicy {
  double kappa1 = 1.0;
  double kappa2 = 0.0;
  std::vector<double> rho;
};

struct ModelParams {
  std::vector<double> theta;

  std::size_t dim() const { return theta.size(); }
};

// EMD against the uniform reference 1/Y. Range [0, 2(1-1/Y)].
// Throws std::domain_error on an empty dataset.
DataQuality compute_emd(const LabelHistogram& hist);

// EMD against an explicit reference distribution (must sum to ~1, size Y).
DataQuality compute_emd(const LabelHistogram& hist,
                        std::span<const double> reference);

// kappa2 = (mean EMD / 2)^2, kappa1 = 1 - kappa2. rho is left empty.
// Throws std::domain_error on an empty list, std::invalid_argument on an
// EMD outside [0, 2].
WeightPolicy compute_kappa(const std::vector<DataQuality>& qualities);

// rho_n = sizes[n] / sum(sizes). Throws std::domain_error if the sum is 0.
std::vector<double> data_size_weights(const std::vector<std::int64_t>& sizes);

// theta = kappa1 * sum_n rho_n * locals[n] + kappa2 * augmented, elementwise.
// Requires policy.rho.size() == locals.size() and all dims equal; throws
// std::invalid_argument on mismatch or non-finite inputs.
ModelParams aggregate(std::span<const ModelParams> locals,
                      const ModelParams& augmented,
                      const WeightPolicy& policy);

}  // namespace vfedsim::core
