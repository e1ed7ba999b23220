#pragma once

#include "ssn/intervals.hpp"
#include "ssn/model.hpp"
#include "ssn/types.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssn {

/// Per-snippet linear responses for every region slot of the model's pyramid.
///
/// Column layout for slot j (regions in concatenation order): when the slot
/// is a course region, K+1 activity responses; then K completeness
/// responses and 2K regression responses. `prefix` holds running column sums
/// (T+1 rows) so that any region average is two row reads.
struct SnippetResponses {
    struct Slot {
        Stage stage;
        Eigen::Index activity_col = -1; // -1 when the slot feeds no activity weights
        Eigen::Index completeness_col = 0;
        Eigen::Index regression_col = 0;
    };

    std::size_t num_snippets = 0;
    std::size_t num_classes = 0;
    std::vector<Slot> slots;
    RowMatrix values; // T x columns
    RowMatrix prefix; // (T+1) x columns
    std::size_t multiply_count = 0; // scalar multiplies spent against model weights

    Eigen::Index columns() const noexcept { return values.cols(); }
};

/// Runs every weight block over every snippet once. Requires average pooling.
SnippetResponses compute_snippet_responses(const FeatureMatrix& features, const ModelParams& params);

struct Detection {
    std::string video_id;
    int label = 0;
    Interval interval;       // refined, clamped to the video
    Interval proposal;       // as given
    double score = 0.0;      // joint P(c, b | p)
    double activity = 0.0;   // P(c | p)
    double completeness = 0.0;
    std::size_t proposal_index = 0;
};

/// Detection-side counters of the most recent score_proposals call.
struct ScoringStats {
    std::size_t weight_multiplies = 0;
    std::size_t region_reads = 0;
};

/// Scores proposals by pooling precomputed responses. One detection per
/// proposal: the class with the highest joint score (lowest k on ties),
/// refined by that class's regressor.
std::vector<Detection> score_proposals(const SnippetResponses& responses, std::span<const Interval> proposals,
                                       const ModelParams& params, std::string_view video_id,
                                       ScoringStats* stats = nullptr);

/// Reference path: STPP on dense features, then the heads.
std::vector<Detection> score_proposals_naive(const FeatureMatrix& features, std::span<const Interval> proposals,
                                             const ModelParams& params, std::string_view video_id);

struct PostprocessConfig {
    double score_threshold = 0.01;
    double nms_iou = 0.6;
};

/// Per-class score filtering and NMS. Output is ranked by score, then
/// start, then duration, then input order.
std::vector<Detection> postprocess(std::span<const Detection> detections, const PostprocessConfig& config = {});

} // namespace ssn
