#pragma once

#include "ssn/intervals.hpp"
#include "ssn/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ssn {

// Temporal actionness grouping: a 1D watershed over the complemented
// actionness signal followed by coverage-driven grouping of basins.

/// Tolerance on the flooding test `1 - a <= gamma`. Float32 actionness that
/// sits on a grid value (e.g. 0.7f) still floods at the matching level.
inline constexpr double kFloodTolerance = 1e-6;

/// Maximal runs of snippets whose complemented actionness is at or below
/// `gamma`, in temporal order. Bounds are integer snippet indices.
std::vector<Interval> flood_basins(std::span<const double> actionness, double gamma);

/// Starts at basins[seed] and absorbs the following basins while the fraction
/// of basin durations over the grouped span stays >= tau. The first basin that
/// breaks the criterion and everything after it are left out.
Interval group_from_seed(std::span<const Interval> basins, std::size_t seed, double tau);

/// {step, 2*step, ...} strictly inside (0, 1).
std::vector<double> threshold_grid(double step);

/// Mean actionness over the snippets of `interval` (with the nearest-snippet
/// fallback for intervals that contain no snippet index).
double mean_actionness(std::span<const double> actionness, const Interval& interval);

struct TagConfig {
    double grid_step = 0.05;
    double nms_iou = 0.95;
    std::size_t max_proposals = 0; // 0 keeps every survivor
};

/// Union over the (gamma, tau) grid of every seed's group, deduplicated,
/// scored by mean actionness, NMS'd and sorted best-first.
std::vector<ScoredInterval> generate_proposals(std::span<const double> actionness, const TagConfig& config = {});

struct ProbeOptions {
    int epochs = 100;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
};

/// Logistic-regression actionness scorer over snippet features. Stands in for
/// the actionness network when only snippet features are available.
class ActionnessProbe {
public:
    ActionnessProbe() = default;
    explicit ActionnessProbe(Eigen::Index feature_dim);
    ActionnessProbe(Vector weights, double bias);

    /// Seeded per-sample SGD on the logistic loss, starting from zero weights.
    static ActionnessProbe train(const FeatureMatrix& features, std::span<const int> labels, const ProbeOptions& options);

    double score(const Eigen::Ref<const Eigen::RowVectorXd>& snippet) const;
    std::vector<double> predict(const FeatureMatrix& features) const;

    const Vector& weights() const noexcept { return weights_; }
    double bias() const noexcept { return bias_; }

private:
    Vector weights_;
    double bias_ = 0.0;
};

} // namespace ssn
