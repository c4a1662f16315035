#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frls/agent.hpp"
#include "frls/radio.hpp"

namespace frls {

/// How pairwise model distances are formed. `Scalar` compares the norms
/// G_n = |theta_n - theta_G| with each other; `Vector` uses |theta_n - theta_k|.
enum class DistanceMode { Scalar, Vector };

const char* to_string(DistanceMode mode);
DistanceMode distance_mode_from_string(const std::string& name);

enum class KrumBranch {
  Selection,  // plain Krum: one model chosen
  Threshold,  // refined: gap test fired, accepted set averaged
  Fallback,   // refined: gap test failed, one model chosen
  TooFew,     // refined with fewer than three models
};

const char* to_string(KrumBranch branch);

struct KrumReport {
  Eigen::VectorXd global_distances;  // G_n
  Eigen::MatrixXd pairwise;          // D_nk
  Eigen::VectorXd krum_distances;    // D_n
  std::vector<int> order;            // indices sorted by D_n ascending, ties by index
  Eigen::VectorXd gaps;              // D_(i+1) - D_(i) along `order`
  std::optional<double> threshold;   // largest accepted D_n when the gap test fires
  int gap_passes = 0;                // times the gap test fired (refined Krum only)
  std::vector<int> accepted;
  std::vector<int> rejected;
  KrumBranch branch = KrumBranch::Selection;
};

/// ||theta - theta_prev||_2.
double global_distance(const ModelParams& model, const ModelParams& previous_global);

/// Distances through D_n = sum_k D_nk; accepted/rejected are left empty.
KrumReport krum_distances(const std::vector<ModelParams>& models,
                          const ModelParams& previous_global,
                          DistanceMode mode = DistanceMode::Scalar);

/// Index with the smallest Krum distance, lowest index on ties.
int krum_select(const std::vector<ModelParams>& models, const ModelParams& previous_global,
                DistanceMode mode = DistanceMode::Scalar);

struct AggregationResult {
  ModelParams global;
  KrumReport report;
  std::vector<int> flagged;  // participants handed to MBS control
};

/// Plain Krum: the selected local model becomes the global model.
AggregationResult krum_aggregate(const std::vector<ModelParams>& models,
                                 const ModelParams& previous_global,
                                 DistanceMode mode = DistanceMode::Scalar);

/// Outcome of the gap test on Krum distances sorted ascending.
struct GapTest {
  double max_gap = 0.0;
  double mean_gap = 0.0;
  int below = 0;       // models before the largest gap (first one on ties)
  bool fired = false;  // max_gap > kappa * mean_gap and `below` is a strict majority
};

GapTest gap_test(const Eigen::Ref<const Eigen::VectorXd>& sorted_distances, double kappa);

/// Gap-thresholded Krum. Sorts D_n, finds the largest adjacent gap, and if it
/// exceeds kappa times the mean gap while leaving a strict majority of all
/// models below it, keeps the models below the gap. The test is then repeated
/// on the kept models (distances recomputed among them) until it stops firing,
/// so a spread-out minority cannot shelter one of its members below the
/// largest gap. The kept models are averaged and the rest flagged. When the
/// first test does not fire this behaves as Krum.
AggregationResult refined_krum(const std::vector<ModelParams>& models,
                               const ModelParams& previous_global, double kappa,
                               DistanceMode mode = DistanceMode::Scalar);

/// Load-threshold sleep rule the MBS applies to flagged SBSs, on the mean of
/// each SBS's recent load history relative to `load_scale_mbps`.
std::vector<SleepMode> mbs_takeover_policy(const NetworkState& state,
                                           const std::vector<int>& flagged,
                                           double load_scale_mbps);

SleepMode takeover_mode(double recent_load_mbps, double load_scale_mbps);

}  // namespace frls
