#pragma once

#include "ssn/inference.hpp"
#include "ssn/intervals.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssn {

/// Proposals per video id, best first.
using ProposalSet = std::map<std::string, std::vector<Interval>>;

/// 0.50, 0.55, ..., 0.95
std::vector<double> activitynet_thresholds();
/// 0.1, 0.2, 0.3, 0.4, 0.5
std::vector<double> thumos_thresholds();
/// The three single-threshold columns reported next to the average mAP.
std::vector<double> report_thresholds();

/// Maximum number of one-to-one (proposal, instance) pairs with IoU >= threshold.
std::size_t matched_instances(std::span<const Interval> proposals, std::span<const Interval> instances,
                              double threshold);

/// Fraction of instances recovered by a one-to-one matching between
/// proposals and instances of the same video at IoU >= threshold. Only the
/// first `max_per_video` proposals of each video count (0 = all). Throws
/// std::invalid_argument when there are no instances.
double recall_at_iou(const ProposalSet& proposals, std::span<const GroundTruth> instances, double threshold,
                     std::size_t max_per_video = 0);

double average_recall(const ProposalSet& proposals, std::span<const GroundTruth> instances,
                      std::span<const double> thresholds, std::size_t max_per_video = 0);

enum class Interpolation : std::uint8_t { AllPoint, ElevenPoint };

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
    double score = 0.0;
};

/// Ranked precision/recall of class `label`. Detections are ranked by score
/// with ties kept in input order; each takes the unmatched instance of its
/// video with the highest IoU >= threshold.
std::vector<PrPoint> precision_recall(std::span<const Detection> detections, std::span<const GroundTruth> instances,
                                      int label, double threshold);

/// nullopt when the class has no instances.
std::optional<double> average_precision(std::span<const Detection> detections, std::span<const GroundTruth> instances,
                                        int label, double threshold,
                                        Interpolation interpolation = Interpolation::AllPoint);

struct MapReport {
    std::vector<double> thresholds;
    std::vector<double> map;                           // per threshold
    std::map<int, std::vector<double>> per_class;       // label -> AP per threshold
    double average = 0.0;                                // mean over thresholds
};

/// mAP over the classes present in `instances`, per threshold, plus the
/// average over the grid.
MapReport mean_ap(std::span<const Detection> detections, std::span<const GroundTruth> instances,
                  std::span<const double> thresholds, Interpolation interpolation = Interpolation::AllPoint);

} // namespace ssn
