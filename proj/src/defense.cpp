#include "frls/defense.hpp"

#include <algorithm>
#include <numeric>

#include "frls/federation.hpp"

namespace frls {

const char* to_string(DistanceMode mode) {
  return mode == DistanceMode::Scalar ? "scalar" : "vector";
}

DistanceMode distance_mode_from_string(const std::string& name) {
  if (name == "scalar") return DistanceMode::Scalar;
  if (name == "vector") return DistanceMode::Vector;
  throw ConfigError("unknown distance mode '" + name + "'");
}

const char* to_string(KrumBranch branch) {
  switch (branch) {
    case KrumBranch::Selection:
      return "selection";
    case KrumBranch::Threshold:
      return "threshold";
    case KrumBranch::Fallback:
      return "fallback";
    case KrumBranch::TooFew:
      return "too_few";
  }
  return "unknown";
}

double global_distance(const ModelParams& model, const ModelParams& previous_global) {
  if (model.size() != previous_global.size())
    throw std::invalid_argument("global_distance: length mismatch");
  return (model - previous_global).norm();
}

KrumReport krum_distances(const std::vector<ModelParams>& models,
                          const ModelParams& previous_global, DistanceMode mode) {
  const int n = static_cast<int>(models.size());
  if (n < 2) throw std::invalid_argument("krum_distances: need at least two models");
  KrumReport report;
  report.global_distances.resize(n);
  for (int i = 0; i < n; ++i) report.global_distances[i] = global_distance(models[i], previous_global);

  report.pairwise = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      const double d = mode == DistanceMode::Scalar
                           ? std::abs(report.global_distances[i] - report.global_distances[k])
                           : (models[i] - models[k]).norm();
      report.pairwise(i, k) = report.pairwise(k, i) = d;
    }
  }
  // Summed in index order so the result does not depend on vectorized reduction order.
  report.krum_distances = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) report.krum_distances[i] += report.pairwise(i, k);

  report.order.resize(n);
  std::iota(report.order.begin(), report.order.end(), 0);
  std::stable_sort(report.order.begin(), report.order.end(), [&](int a, int b) {
    return report.krum_distances[a] < report.krum_distances[b];
  });
  report.gaps.resize(n - 1);
  for (int i = 0; i + 1 < n; ++i)
    report.gaps[i] = report.krum_distances[report.order[i + 1]] -
                     report.krum_distances[report.order[i]];
  return report;
}

int krum_select(const std::vector<ModelParams>& models, const ModelParams& previous_global,
                DistanceMode mode) {
  return krum_distances(models, previous_global, mode).order.front();
}

namespace {

void select_single(KrumReport& report, int n) {
  const int chosen = report.order.front();
  report.accepted = {chosen};
  report.rejected.clear();
  for (int i = 0; i < n; ++i)
    if (i != chosen) report.rejected.push_back(i);
}

}  // namespace

AggregationResult krum_aggregate(const std::vector<ModelParams>& models,
                                 const ModelParams& previous_global, DistanceMode mode) {
  AggregationResult out;
  out.report = krum_distances(models, previous_global, mode);
  out.report.branch = KrumBranch::Selection;
  select_single(out.report, static_cast<int>(models.size()));
  out.global = models[out.report.accepted.front()];
  return out;
}

GapTest gap_test(const Eigen::Ref<const Eigen::VectorXd>& sorted_distances, double kappa) {
  const Eigen::Index n = sorted_distances.size();
  if (n < 2) throw std::invalid_argument("gap_test: need at least two distances");
  const Eigen::VectorXd gaps = sorted_distances.tail(n - 1) - sorted_distances.head(n - 1);
  GapTest out;
  Eigen::Index split = 0;
  out.max_gap = gaps.maxCoeff(&split);
  out.mean_gap = gaps.mean();
  out.below = static_cast<int>(split) + 1;
  out.fired = out.max_gap > kappa * out.mean_gap && 2 * out.below > n;
  return out;
}

AggregationResult refined_krum(const std::vector<ModelParams>& models,
                               const ModelParams& previous_global, double kappa,
                               DistanceMode mode) {
  const int n = static_cast<int>(models.size());
  if (n < 3) {
    AggregationResult out = krum_aggregate(models, previous_global, mode);
    out.report.branch = KrumBranch::TooFew;
    return out;
  }
  AggregationResult out;
  out.report = krum_distances(models, previous_global, mode);
  KrumReport& report = out.report;

  std::vector<int> kept(n);
  std::iota(kept.begin(), kept.end(), 0);
  KrumReport pass = report;
  while (true) {
    const int m = static_cast<int>(kept.size());
    Eigen::VectorXd sorted(m);
    for (int i = 0; i < m; ++i) sorted[i] = pass.krum_distances[pass.order[i]];
    const GapTest test = gap_test(sorted, kappa);
    // The majority guard counts against all n models, not the shrinking subset.
    if (!test.fired || 2 * test.below <= n) break;
    std::vector<int> next;
    for (int i = 0; i < test.below; ++i) next.push_back(kept[pass.order[i]]);
    kept = std::move(next);
    ++report.gap_passes;
    if (static_cast<int>(kept.size()) < 2) break;
    std::vector<ModelParams> subset;
    for (int i : kept) subset.push_back(models[i]);
    pass = krum_distances(subset, previous_global, mode);
  }

  if (report.gap_passes > 0) {
    report.branch = KrumBranch::Threshold;
    std::sort(kept.begin(), kept.end());
    report.accepted = kept;
    report.rejected.clear();
    for (int i = 0; i < n; ++i)
      if (!std::binary_search(kept.begin(), kept.end(), i)) report.rejected.push_back(i);
    double threshold = 0.0;
    for (int i : kept) threshold = std::max(threshold, report.krum_distances[i]);
    report.threshold = threshold;
    std::vector<ModelParams> accepted;
    for (int i : kept) accepted.push_back(models[i]);
    out.global = fedavg(accepted, uniform_weights(static_cast<int>(accepted.size())));
    out.flagged = report.rejected;
    return out;
  }

  report.branch = KrumBranch::Fallback;
  select_single(report, n);
  out.global = models[report.accepted.front()];
  return out;
}

SleepMode takeover_mode(double recent_load_mbps, double load_scale_mbps) {
  const double share = recent_load_mbps / load_scale_mbps;
  if (share > 0.20) return SleepMode::Active;
  if (share > 0.05) return SleepMode::Sleep;
  return SleepMode::DeepSleep;
}

std::vector<SleepMode> mbs_takeover_policy(const NetworkState& state,
                                           const std::vector<int>& flagged,
                                           double load_scale_mbps) {
  std::vector<SleepMode> modes;
  modes.reserve(flagged.size());
  for (int sbs : flagged) {
    if (sbs < 0 || sbs >= static_cast<int>(state.load_history_sbs.size()))
      throw std::invalid_argument("mbs_takeover_policy: SBS index out of range");
    const auto& hist = state.load_history_sbs[sbs];
    const double mean = std::accumulate(hist.begin(), hist.end(), 0.0) / hist.size();
    modes.push_back(takeover_mode(mean, load_scale_mbps));
  }
  return modes;
}

}  // namespace frls
