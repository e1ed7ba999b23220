#include "ssn/inference.hpp"
#include "ssn/stpp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ssn {

namespace {

double logistic(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Slot layout matching region_layout's concatenation order.
std::vector<Stage> slot_stages(const PyramidConfig& cfg) {
    std::vector<Stage> stages;
    if (cfg.use_augmentation) stages.push_back(Stage::Starting);
    stages.insert(stages.end(), cfg.course_parts(), Stage::Course);
    if (cfg.use_augmentation) stages.push_back(Stage::Ending);
    return stages;
}

std::size_t pick_class(const Vector& joint) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < joint.size(); ++k) {
        if (joint(k) > joint(best)) best = k;
    }
    return static_cast<std::size_t>(best);
}

Interval clamp_to_video(const Interval& refined, const Interval& fallback, double length) {
    Interval out{std::clamp(refined.start, 0.0, length), std::clamp(refined.end, 0.0, length)};
    return out.valid() ? out : fallback;
}

Detection make_detection(std::string_view video_id, std::size_t index, const Interval& proposal, int label,
                         double activity, double completeness, const RegressionTarget& offsets, double length) {
    Detection d;
    d.video_id = std::string(video_id);
    d.label = label;
    d.proposal = proposal;
    d.interval = clamp_to_video(apply_regression(proposal, offsets), proposal, length);
    d.activity = activity;
    d.completeness = completeness;
    d.score = activity * completeness;
    d.proposal_index = index;
    return d;
}

} // namespace

SnippetResponses compute_snippet_responses(const FeatureMatrix& features, const ModelParams& params) {
    params.validate();
    if (params.pyramid.mode != PoolMode::Average)
        throw std::invalid_argument("reordered scoring needs average pooling; use the naive path for max pooling");
    if (static_cast<std::size_t>(features.cols()) != params.feature_dim)
        throw DimensionError("snippet features have dimension " + std::to_string(features.cols()) +
                             ", model expects " + std::to_string(params.feature_dim));
    if (features.rows() == 0) throw std::invalid_argument("empty snippet sequence");

    const auto D = static_cast<Eigen::Index>(params.feature_dim);
    const auto K = static_cast<Eigen::Index>(params.num_classes);

    SnippetResponses out;
    out.num_snippets = static_cast<std::size_t>(features.rows());
    out.num_classes = params.num_classes;

    // Stack the per-slot weight blocks so one product covers everything.
    const std::vector<Stage> stages = slot_stages(params.pyramid);
    Eigen::Index cols = 0;
    for (Stage s : stages) cols += (s == Stage::Course ? K + 1 : 0) + 3 * K;
    Matrix stacked(cols, D);

    Eigen::Index col = 0;
    Eigen::Index course_slot = 0;
    for (std::size_t j = 0; j < stages.size(); ++j) {
        SnippetResponses::Slot slot{stages[j]};
        const Eigen::Index global_off = static_cast<Eigen::Index>(j) * D;
        if (stages[j] == Stage::Course) {
            slot.activity_col = col;
            stacked.middleRows(col, K + 1) = params.activity_w.middleCols(course_slot * D, D);
            col += K + 1;
            ++course_slot;
        }
        slot.completeness_col = col;
        stacked.middleRows(col, K) = params.completeness_w.middleCols(global_off, D);
        col += K;
        slot.regression_col = col;
        stacked.middleRows(col, 2 * K) = params.regression_w.middleCols(global_off, D);
        col += 2 * K;
        out.slots.push_back(slot);
    }

    out.values.noalias() = features * stacked.transpose();
    out.multiply_count = static_cast<std::size_t>(features.rows() * D * cols);

    out.prefix = RowMatrix::Zero(features.rows() + 1, cols);
    for (Eigen::Index t = 0; t < features.rows(); ++t) out.prefix.row(t + 1) = out.prefix.row(t) + out.values.row(t);
    return out;
}

std::vector<Detection> score_proposals(const SnippetResponses& responses, std::span<const Interval> proposals,
                                       const ModelParams& params, std::string_view video_id, ScoringStats* stats) {
    if (responses.num_classes != params.num_classes || responses.slots.size() != params.pyramid.num_regions())
        throw DimensionError("snippet responses were computed for a different model");

    const auto K = static_cast<Eigen::Index>(params.num_classes);
    const double length = static_cast<double>(responses.num_snippets);
    ScoringStats local;

    std::vector<Detection> out;
    out.reserve(proposals.size());
    Vector act(K + 1), comp(K), reg(2 * K);
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        const AugmentedProposal ap = augment(proposals[i], length);
        const std::vector<Region> regions = region_layout(params.pyramid, ap);

        act = params.activity_b;
        comp = params.completeness_b;
        reg = params.regression_b;
        for (std::size_t j = 0; j < regions.size(); ++j) {
            const SnippetRange r = snippet_members(regions[j].interval, responses.num_snippets);
            const auto& slot = responses.slots[j];
            const auto hi = responses.prefix.row(static_cast<Eigen::Index>(r.last));
            const auto lo = responses.prefix.row(static_cast<Eigen::Index>(r.first));
            const double inv = 1.0 / static_cast<double>(r.size());
            ++local.region_reads;

            if (slot.activity_col >= 0)
                act += (hi.segment(slot.activity_col, K + 1) - lo.segment(slot.activity_col, K + 1)).transpose() * inv;
            comp += (hi.segment(slot.completeness_col, K) - lo.segment(slot.completeness_col, K)).transpose() * inv;
            reg += (hi.segment(slot.regression_col, 2 * K) - lo.segment(slot.regression_col, 2 * K)).transpose() * inv;
        }

        act.array() -= act.maxCoeff();
        act = act.array().exp();
        act /= act.sum();

        Vector joint(K);
        Vector completeness(K);
        for (Eigen::Index k = 0; k < K; ++k) {
            completeness(k) = logistic(comp(k));
            joint(k) = act(k + 1) * completeness(k);
        }
        const std::size_t best = pick_class(joint);
        const auto b = static_cast<Eigen::Index>(best);
        out.push_back(make_detection(video_id, i, proposals[i], static_cast<int>(best + 1), act(b + 1),
                                     completeness(b), {reg(2 * b), reg(2 * b + 1)}, length));
    }
    if (stats) *stats = local;
    return out;
}

std::vector<Detection> score_proposals_naive(const FeatureMatrix& features, std::span<const Interval> proposals,
                                             const ModelParams& params, std::string_view video_id) {
    params.validate();
    if (static_cast<std::size_t>(features.cols()) != params.feature_dim)
        throw DimensionError("snippet features have dimension " + std::to_string(features.cols()) +
                             ", model expects " + std::to_string(params.feature_dim));
    const double length = static_cast<double>(features.rows());
    std::vector<Detection> out;
    out.reserve(proposals.size());
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        const AugmentedProposal ap = augment(proposals[i], length);
        const StageFeatures f = stpp_features(features, ap, params.pyramid);
        const Vector act = activity_forward(params, f.course);
        const Vector global = f.global();
        Vector joint(static_cast<Eigen::Index>(params.num_classes));
        for (int k = 1; k <= static_cast<int>(params.num_classes); ++k)
            joint(k - 1) = act(k) * completeness_forward(params, global, k);
        const int k = static_cast<int>(pick_class(joint)) + 1;
        out.push_back(make_detection(video_id, i, proposals[i], k, act(k), completeness_forward(params, global, k),
                                     regression_forward(params, global, k), length));
    }
    return out;
}

std::vector<Detection> postprocess(std::span<const Detection> detections, const PostprocessConfig& config) {
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        if (detections[i].score >= config.score_threshold)
            groups[{detections[i].video_id, detections[i].label}].push_back(i);
    }

    std::vector<std::size_t> kept;
    for (const auto& [key, members] : groups) {
        std::vector<ScoredInterval> items;
        items.reserve(members.size());
        for (std::size_t i : members) items.push_back({detections[i].interval, detections[i].score});
        for (std::size_t local : nms_indices(items, config.nms_iou)) kept.push_back(members[local]);
    }

    std::sort(kept.begin(), kept.end());
    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        return ranks_before({detections[a].interval, detections[a].score}, {detections[b].interval, detections[b].score});
    });

    std::vector<Detection> out;
    out.reserve(kept.size());
    for (std::size_t i : kept) out.push_back(detections[i]);
    return out;
}

} // namespace ssn
