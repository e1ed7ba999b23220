#include "ssn/evaluation.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

namespace ssn {

std::vector<double> activitynet_thresholds() {
    std::vector<double> out;
    for (int i = 50; i <= 95; i += 5) out.push_back(i / 100.0);
    return out;
}

std::vector<double> thumos_thresholds() { return {0.1, 0.2, 0.3, 0.4, 0.5}; }

std::vector<double> report_thresholds() { return {0.5, 0.75, 0.95}; }

std::size_t matched_instances(std::span<const Interval> proposals, std::span<const Interval> instances,
                              double threshold) {
    // Kuhn's augmenting paths; each instance tries its candidates best IoU first.
    std::vector<std::vector<std::size_t>> candidates(instances.size());
    for (std::size_t g = 0; g < instances.size(); ++g) {
        for (std::size_t p = 0; p < proposals.size(); ++p) {
            if (iou(proposals[p], instances[g]) >= threshold) candidates[g].push_back(p);
        }
        std::stable_sort(candidates[g].begin(), candidates[g].end(), [&](std::size_t a, std::size_t b) {
            return iou(proposals[a], instances[g]) > iou(proposals[b], instances[g]);
        });
    }

    constexpr std::size_t kFree = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(proposals.size(), kFree);
    std::vector<char> visited;
    std::function<bool(std::size_t)> augment_from = [&](std::size_t g) {
        for (std::size_t p : candidates[g]) {
            if (visited[p]) continue;
            visited[p] = 1;
            if (owner[p] == kFree || augment_from(owner[p])) {
                owner[p] = g;
                return true;
            }
        }
        return false;
    };

    std::size_t matched = 0;
    for (std::size_t g = 0; g < instances.size(); ++g) {
        visited.assign(proposals.size(), 0);
        if (augment_from(g)) ++matched;
    }
    return matched;
}

double recall_at_iou(const ProposalSet& proposals, std::span<const GroundTruth> instances, double threshold,
                     std::size_t max_per_video) {
    if (instances.empty()) throw std::invalid_argument("recall is undefined without ground-truth instances");

    std::map<std::string, std::vector<Interval>> by_video;
    for (const GroundTruth& g : instances) by_video[g.video_id].push_back(g.interval);

    std::size_t matched = 0;
    for (const auto& [video, gts] : by_video) {
        auto it = proposals.find(video);
        if (it == proposals.end()) continue;
        std::span<const Interval> props(it->second);
        if (max_per_video > 0 && props.size() > max_per_video) props = props.first(max_per_video);
        matched += matched_instances(props, gts, threshold);
    }
    return static_cast<double>(matched) / static_cast<double>(instances.size());
}

double average_recall(const ProposalSet& proposals, std::span<const GroundTruth> instances,
                      std::span<const double> thresholds, std::size_t max_per_video) {
    if (thresholds.empty()) throw std::invalid_argument("average recall needs at least one threshold");
    double sum = 0.0;
    for (double t : thresholds) sum += recall_at_iou(proposals, instances, t, max_per_video);
    return sum / static_cast<double>(thresholds.size());
}

namespace {

struct RankedOutcome {
    std::vector<char> true_positive;
    std::vector<double> scores;
    std::size_t num_instances = 0;
};

RankedOutcome rank_and_match(std::span<const Detection> detections, std::span<const GroundTruth> instances, int label,
                             double threshold) {
    RankedOutcome out;
    std::map<std::string, std::vector<std::size_t>> gts_by_video;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].label == label) {
            gts_by_video[instances[i].video_id].push_back(i);
            ++out.num_instances;
        }
    }

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        if (detections[i].label == label) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });

    std::vector<char> used(instances.size(), 0);
    for (std::size_t d : order) {
        const Detection& det = detections[d];
        std::size_t best = instances.size();
        double best_iou = threshold;
        if (auto it = gts_by_video.find(det.video_id); it != gts_by_video.end()) {
            for (std::size_t g : it->second) {
                if (used[g]) continue;
                const double v = iou(det.interval, instances[g].interval);
                if (v >= best_iou && (best == instances.size() || v > best_iou)) {
                    best_iou = v;
                    best = g;
                }
            }
        }
        const bool tp = best < instances.size();
        if (tp) used[best] = 1;
        out.true_positive.push_back(tp ? 1 : 0);
        out.scores.push_back(det.score);
    }
    return out;
}

} // namespace

std::vector<PrPoint> precision_recall(std::span<const Detection> detections, std::span<const GroundTruth> instances,
                                      int label, double threshold) {
    const RankedOutcome ranked = rank_and_match(detections, instances, label, threshold);
    std::vector<PrPoint> curve;
    curve.reserve(ranked.true_positive.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < ranked.true_positive.size(); ++i) {
        tp += ranked.true_positive[i];
        const double recall = ranked.num_instances ? static_cast<double>(tp) / ranked.num_instances : 0.0;
        curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(i + 1), ranked.scores[i]});
    }
    return curve;
}

std::optional<double> average_precision(std::span<const Detection> detections, std::span<const GroundTruth> instances,
                                        int label, double threshold, Interpolation interpolation) {
    const RankedOutcome ranked = rank_and_match(detections, instances, label, threshold);
    if (ranked.num_instances == 0) return std::nullopt;
    const std::size_t n = ranked.true_positive.size();

    std::vector<double> precision(n);
    std::vector<std::size_t> tp_count(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        tp += ranked.true_positive[i];
        tp_count[i] = tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }

    // Precision envelope: best precision at any rank at or below i.
    std::vector<double> envelope(precision);
    for (std::size_t i = n; i-- > 1;) envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);

    const double num_gt = static_cast<double>(ranked.num_instances);
    if (interpolation == Interpolation::AllPoint) {
        // Recall grows by 1/num_gt exactly at true-positive ranks.
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (ranked.true_positive[i]) sum += envelope[i];
        }
        return sum / num_gt;
    }

    double sum = 0.0;
    for (int r = 0; r <= 10; ++r) {
        // First rank whose recall reaches r/10; the envelope there is the max precision beyond it.
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (10 * tp_count[i] >= static_cast<std::size_t>(r) * ranked.num_instances) {
                best = envelope[i];
                break;
            }
        }
        sum += best;
    }
    return sum / 11.0;
}

MapReport mean_ap(std::span<const Detection> detections, std::span<const GroundTruth> instances,
                  std::span<const double> thresholds, Interpolation interpolation) {
    MapReport report;
    report.thresholds.assign(thresholds.begin(), thresholds.end());
    std::set<int> labels;
    for (const GroundTruth& g : instances) labels.insert(g.label);

    for (int label : labels) report.per_class[label] = {};
    for (double t : thresholds) {
        double sum = 0.0;
        for (int label : labels) {
            const double ap = average_precision(detections, instances, label, t, interpolation).value_or(0.0);
            report.per_class[label].push_back(ap);
            sum += ap;
        }
        report.map.push_back(labels.empty() ? 0.0 : sum / static_cast<double>(labels.size()));
    }
    if (!report.map.empty())
        report.average = std::accumulate(report.map.begin(), report.map.end(), 0.0) / report.map.size();
    return report;
}

} // namespace ssn
