#include "ssn/tag.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <utility>

namespace ssn {

namespace {

bool floods(double actionness, double gamma) noexcept {
    return 1.0 - actionness <= gamma + kFloodTolerance;
}

double logistic(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_actionness(std::span<const double> actionness) {
    for (double a : actionness) {
        if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("actionness values must lie in [0, 1]");
    }
}

} // namespace

std::vector<Interval> flood_basins(std::span<const double> actionness, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("flood_basins: gamma must be in (0, 1)");

    std::vector<Interval> basins;
    std::size_t t = 0;
    const std::size_t n = actionness.size();
    while (t < n) {
        if (!floods(actionness[t], gamma)) {
            ++t;
            continue;
        }
        const std::size_t first = t;
        while (t < n && floods(actionness[t], gamma)) ++t;
        basins.push_back({static_cast<double>(first), static_cast<double>(t)});
    }
    return basins;
}

Interval group_from_seed(std::span<const Interval> basins, std::size_t seed, double tau) {
    if (seed >= basins.size()) throw std::out_of_range("group_from_seed: seed index out of range");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("group_from_seed: tau must be in (0, 1)");

    const double origin = basins[seed].start;
    double covered = basins[seed].duration();
    double last_end = basins[seed].end;
    for (std::size_t j = seed + 1; j < basins.size(); ++j) {
        const double grown = covered + basins[j].duration();
        if (grown / (basins[j].end - origin) < tau) break;
        covered = grown;
        last_end = basins[j].end;
    }
    return {origin, last_end};
}

std::vector<double> threshold_grid(double step) {
    if (!(step > 0.0 && step < 1.0)) throw std::invalid_argument("threshold grid step must be in (0, 1)");
    std::vector<double> grid;
    for (int k = 1;; ++k) {
        const double v = k * step;
        if (v >= 1.0 - 1e-9) break;
        grid.push_back(v);
    }
    return grid;
}

double mean_actionness(std::span<const double> actionness, const Interval& interval) {
    const SnippetRange r = snippet_members(interval, actionness.size());
    double sum = 0.0;
    for (std::size_t t = r.first; t < r.last; ++t) sum += actionness[t];
    return sum / static_cast<double>(r.size());
}

std::vector<ScoredInterval> generate_proposals(std::span<const double> actionness, const TagConfig& config) {
    check_actionness(actionness);
    const std::vector<double> grid = threshold_grid(config.grid_step);

    // Keyed on integer bounds; basins are integer aligned.
    std::set<std::pair<long, long>> unique;
    for (double gamma : grid) {
        const std::vector<Interval> basins = flood_basins(actionness, gamma);
        for (double tau : grid) {
            for (std::size_t seed = 0; seed < basins.size(); ++seed) {
                const Interval g = group_from_seed(basins, seed, tau);
                unique.emplace(static_cast<long>(g.start), static_cast<long>(g.end));
            }
        }
    }

    std::vector<ScoredInterval> candidates;
    candidates.reserve(unique.size());
    for (const auto& [s, e] : unique) {
        const Interval iv{static_cast<double>(s), static_cast<double>(e)};
        candidates.push_back({iv, mean_actionness(actionness, iv)});
    }

    std::vector<ScoredInterval> kept = nms(candidates, config.nms_iou);
    if (config.max_proposals > 0 && kept.size() > config.max_proposals) kept.resize(config.max_proposals);
    return kept;
}

ActionnessProbe::ActionnessProbe(Eigen::Index feature_dim) : weights_(Vector::Zero(feature_dim)) {}

ActionnessProbe::ActionnessProbe(Vector weights, double bias) : weights_(std::move(weights)), bias_(bias) {}

ActionnessProbe ActionnessProbe::train(const FeatureMatrix& features, std::span<const int> labels,
                                       const ProbeOptions& options) {
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw DimensionError("actionness probe: feature rows and label count differ");
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("actionness probe: labels must be 0 or 1");
    }
    if (!features.allFinite()) throw std::invalid_argument("actionness probe: non-finite feature values");

    ActionnessProbe probe(features.cols());
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t t : order) {
            const double err = probe.score(features.row(static_cast<Eigen::Index>(t))) - labels[t];
            probe.weights_.noalias() -= options.learning_rate * err * features.row(static_cast<Eigen::Index>(t)).transpose();
            probe.bias_ -= options.learning_rate * err;
        }
    }
    return probe;
}

double ActionnessProbe::score(const Eigen::Ref<const Eigen::RowVectorXd>& snippet) const {
    if (snippet.size() != weights_.size()) throw DimensionError("actionness probe: feature dimension mismatch");
    return logistic(snippet.dot(weights_.transpose()) + bias_);
}

std::vector<double> ActionnessProbe::predict(const FeatureMatrix& features) const {
    if (features.cols() != weights_.size()) throw DimensionError("actionness probe: feature dimension mismatch");
    std::vector<double> out(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index t = 0; t < features.rows(); ++t) out[static_cast<std::size_t>(t)] = score(features.row(t));
    return out;
}

} // namespace ssn
