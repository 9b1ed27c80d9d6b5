#include "vfedsim/core.hpp"

#include <cmath>
#include <stdexcept>

namespace vfedsim::core {

std::int64_t LabelHistogram::total() const {
  std::int64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

DataQuality compute_emd(const LabelHistogram& hist) {
  const int y = hist.num_classes();
  if (y == 0 || hist.empty()) throw std::domain_error("compute_emd: empty dataset");
  for (auto c : hist.counts)
    if (c < 0) throw std::invalid_argument("compute_emd: negative count");
  const double total = static_cast<double>(hist.total());
  const double ref = 1.0 / static_cast<double>(y);
  double emd = 0.0;
  for (int i = 0; i < y; ++i)
    emd += std::abs(static_cast<double>(hist.counts[i]) / total - ref);
  return DataQuality{emd};
}

DataQuality compute_emd(const LabelHistogram& hist,
                        std::span<const double> reference) {
  const int y = hist.num_classes();
  if (y == 0 || hist.empty()) throw std::domain_error("compute_emd: empty dataset");
  if (static_cast<int>(reference.size()) != y)
    throw std::invalid_argument("compute_emd: reference size mismatch");
  double ref_sum = 0.0;
  for (double r : reference) {
    if (!(r >= 0.0)) throw std::invalid_argument("compute_emd: negative reference mass");
    ref_sum += r;
  }
  if (std::abs(ref_sum - 1.0) > 1e-9)
    throw std::invalid_argument("compute_emd: reference does not sum to 1");
  const double total = static_cast<double>(hist.total());
  double emd = 0.0;
  for (int i = 0; i < y; ++i)
    emd += std::abs(static_cast<double>(hist.counts[i]) / total - reference[i]);
  return DataQuality{emd};
}

WeightPolicy compute_kappa(const std::vector<DataQuality>& qualities) {
  if (qualities.empty()) throw std::domain_error("compute_kappa: empty list");
  double sum = 0.0;
  for (const auto& q : qualities) {
    if (!(q.emd >= 0.0 && q.emd <= 2.0))
      throw std::invalid_argument("compute_kappa: emd outside [0, 2]");
    sum += q.emd;
  }
  const double mean = sum / static_cast<double>(qualities.size());
  WeightPolicy policy;
  policy.kappa2 = (mean / 2.0) * (mean / 2.0);
  policy.kappa1 = 1.0 - policy.kappa2;
  return policy;
}

std::vector<double> data_size_weights(const std::vector<std::int64_t>& sizes) {
  std::int64_t sum = 0;
  for (auto s : sizes) {
    if (s < 0) throw std::invalid_argument("data_size_weights: negative size");
    sum += s;
  }
  if (sum == 0) throw std::domain_error("data_size_weights: all sizes zero");
  std::vector<double> rho(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i)
    rho[i] = static_cast<double>(sizes[i]) / static_cast<double>(sum);
  return rho;
}

ModelParams aggregate(std::span<const ModelParams> locals,
                      const ModelParams& augmented,
                      const WeightPolicy& policy) {
  if (policy.rho.size() != locals.size())
    throw std::invalid_argument("aggregate: rho size mismatch");
  const std::size_t dim = augmented.dim();
  for (const auto& m : locals)
    if (m.dim() != dim) throw std::invalid_argument("aggregate: dimension mismatch");
  for (double v : augmented.theta)
    if (!std::isfinite(v)) throw std::invalid_argument("aggregate: non-finite input");
  for (const auto& m : locals)
    for (double v : m.theta)
      if (!std::isfinite(v)) throw std::invalid_argument("aggregate: non-finite input");

  ModelParams out;
  out.theta.assign(dim, 0.0);
  for (std::size_t n = 0; n < locals.size(); ++n) {
    const double w = policy.kappa1 * policy.rho[n];
    for (std::size_t j = 0; j < dim; ++j) out.theta[j] += w * locals[n].theta[j];
  }
  for (std::size_t j = 0; j < dim; ++j)
    out.theta[j] += policy.kappa2 * augmented.theta[j];
  for (double v : out.theta)
    if (!std::isfinite(v)) throw std::invalid_argument("aggregate: non-finite result");
  return out;
}

}  // namespace vfedsim::core
