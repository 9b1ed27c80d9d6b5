#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <random>
#include <vector>

#include "vfedsim/selection.hpp"

using namespace vfedsim;

namespace {

selection::VehicleMeta meta(std::uint64_t id, std::vector<std::int64_t> counts,
                            double t_hold, double deadline) {
  selection::VehicleMeta m;
  m.vehicle_id = id;
  m.histogram.counts = std::move(counts);
  m.t_hold_s = t_hold;
  m.deadline_s = deadline;
  return m;
}

std::vector<selection::Candidate> random_candidates(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<selection::Candidate> out;
  for (int i = 0; i < n; ++i) {
    selection::Candidate c;
    c.vehicle_id = static_cast<std::uint64_t>(i);
    c.histogram.counts = {1, 1};  // nonempty unless we blank it below
    if (u(rng) < 0.15) c.histogram.counts = {0, 0};
    c.emd = 2.0 * u(rng);
    c.deadline_s = 0.5 + 2.5 * u(rng);
    c.estimated_latency_s = 0.5 + 2.5 * u(rng);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

TEST_CASE("built-in emd threshold table") {
  CHECK(selection::default_emd_threshold("cifar10", 0.1) == doctest::Approx(1.5));
  CHECK(selection::default_emd_threshold("cifar10", 0.3) == doctest::Approx(1.2));
  CHECK(selection::default_emd_threshold("cifar10", 0.5) == doctest::Approx(1.0));
  CHECK(selection::default_emd_threshold("cifar10", 1.0) == doctest::Approx(0.8));
  CHECK(selection::default_emd_threshold("gtsrb", 0.5) == doctest::Approx(1.2));
  CHECK(selection::default_emd_threshold("gtsrb", 0.1) == doctest::Approx(1.5));

  // alpha snaps to the nearest tabulated value; far alphas use the end rows
  CHECK(selection::default_emd_threshold("cifar10", 0.05) == doctest::Approx(1.5));
  CHECK(selection::default_emd_threshold("cifar10", 4.0) == doctest::Approx(0.8));
  CHECK(selection::default_emd_threshold("cifar10", 0.45) == doctest::Approx(1.0));

  // cifar100 and the synthetic task reuse the cifar10 row
  CHECK(selection::default_emd_threshold("cifar100", 1.0) == doctest::Approx(0.8));
  CHECK(selection::default_emd_threshold("synthetic", 0.5) == doctest::Approx(1.0));

  CHECK_THROWS_AS(selection::default_emd_threshold("imagenet", 0.5),
                  std::invalid_argument);
}

TEST_CASE("label sharing computes emd and marks empty datasets unselectable") {
  std::vector<selection::VehicleMeta> fleet;
  fleet.push_back(meta(3, {3, 1}, 10.0, 3.0));
  fleet.push_back(meta(4, {0, 0}, 12.0, 2.0));

  const auto cands = selection::share_labels(fleet);
  REQUIRE(cands.size() == 2);
  CHECK(cands[0].vehicle_id == 3);
  CHECK(cands[0].emd == doctest::Approx(0.5));
  CHECK(cands[0].t_hold_s == doctest::Approx(10.0));
  CHECK(cands[0].deadline_s == doctest::Approx(3.0));
  CHECK(cands[1].emd == doctest::Approx(2.0));  // empty: worst quality

  // explicit reference changes the score
  const std::vector<double> ref = {0.75, 0.25};
  const auto vs_ref = selection::share_labels(fleet, ref);
  CHECK(vs_ref[0].emd == doctest::Approx(0.0));
  CHECK(vs_ref[1].emd == doctest::Approx(2.0));
}

TEST_CASE("selection equals the feasibility predicate on random fleets") {
  std::mt19937_64 rng(17);
  selection::SelectionConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    cfg.emd_threshold = 2.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto cands = random_candidates(rng, 12);
    const auto res = selection::select_vehicles(cands, cfg);

    std::vector<std::uint64_t> oracle;
    for (const auto& c : cands)
      if (!c.histogram.empty() && c.estimated_latency_s <= c.deadline_s &&
          c.emd <= cfg.emd_threshold)
        oracle.push_back(c.vehicle_id);
    std::sort(oracle.begin(), oracle.end());
    CHECK(res.selected == oracle);
    CHECK(std::is_sorted(res.selected.begin(), res.selected.end()));

    REQUIRE(res.reports.size() == cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const bool in = std::find(res.selected.begin(), res.selected.end(),
                                res.reports[i].vehicle_id) != res.selected.end();
      CHECK(res.reports[i].selected == in);
    }
  }
}

TEST_CASE("raising the threshold or deadline never deselects anyone") {
  std::mt19937_64 rng(23);
  selection::SelectionConfig lo, hi;
  for (int trial = 0; trial < 200; ++trial) {
    auto cands = random_candidates(rng, 10);
    lo.emd_threshold = 0.7;
    hi.emd_threshold = 1.4;
    const auto a = selection::select_vehicles(cands, lo).selected;
    const auto b = selection::select_vehicles(cands, hi).selected;
    CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));

    auto relaxed = cands;
    for (auto& c : relaxed) c.deadline_s += 1.0;
    const auto c2 = selection::select_vehicles(relaxed, lo).selected;
    CHECK(std::includes(c2.begin(), c2.end(), a.begin(), a.end()));
  }
}

TEST_CASE("latency estimator overwrites the advertised estimate") {
  std::vector<selection::Candidate> cands(1);
  cands[0].vehicle_id = 9;
  cands[0].histogram.counts = {5, 5};
  cands[0].emd = 0.0;
  cands[0].deadline_s = 1.0;
  cands[0].estimated_latency_s = 100.0;  // stale value, estimator wins

  selection::SelectionConfig cfg;
  cfg.emd_threshold = 1.0;
  auto res = selection::select_vehicles(
      cands, cfg, [](const selection::Candidate&) { return 0.5; });
  CHECK(res.selected == std::vector<std::uint64_t>{9});
  CHECK(res.reports[0].estimated_latency_s == doctest::Approx(0.5));

  res = selection::select_vehicles(
      cands, cfg, [](const selection::Candidate&) { return 1.5; });
  CHECK(res.selected.empty());
}

TEST_CASE("duplicate vehicle ids are rejected") {
  std::vector<selection::Candidate> cands(2);
  cands[0].vehicle_id = 1;
  cands[1].vehicle_id = 1;
  selection::SelectionConfig cfg;
  CHECK_THROWS_AS(selection::select_vehicles(cands, cfg), std::invalid_argument);
}

TEST_CASE("shortfall flags rounds below the reporting floor") {
  std::vector<selection::Candidate> cands(1);
  cands[0].vehicle_id = 2;
  cands[0].histogram.counts = {4};
  cands[0].emd = 1.9;
  cands[0].deadline_s = 1.0;
  cands[0].estimated_latency_s = 0.1;

  selection::SelectionConfig cfg;
  cfg.emd_threshold = 0.5;  // filters the only candidate out
  cfg.min_selected = 1;
  auto res = selection::select_vehicles(cands, cfg);
  CHECK(res.selected.empty());
  CHECK(res.shortfall);

  cfg.emd_threshold = 2.0;
  res = selection::select_vehicles(cands, cfg);
  CHECK(res.selected.size() == 1);
  CHECK(!res.shortfall);
}

TEST_CASE("selection config validation") {
  selection::SelectionConfig cfg;
  cfg.emd_threshold = 2.5;
  CHECK_THROWS_AS(selection::select_vehicles({}, cfg), std::invalid_argument);
  cfg.emd_threshold = -0.1;
  CHECK_THROWS_AS(selection::select_vehicles({}, cfg), std::invalid_argument);
  cfg = {};
  cfg.min_selected = -1;
  CHECK_THROWS_AS(selection::select_vehicles({}, cfg), std::invalid_argument);
}
