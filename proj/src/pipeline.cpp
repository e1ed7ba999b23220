#include "ssn/pipeline.hpp"
#include "ssn/synthetic.hpp"

#include <stdexcept>

namespace ssn {

VideoProposals propose(std::span<const Video> videos, const TagConfig& config) {
    VideoProposals out;
    for (const Video& v : videos) {
        if (v.actionness.empty()) throw std::runtime_error("video '" + v.id + "' has no actionness scores");
        out[v.id] = generate_proposals(v.actionness, config);
    }
    return out;
}

std::vector<std::vector<ScoredInterval>> align_proposals(std::span<const Video> videos, const VideoProposals& proposals) {
    std::vector<std::vector<ScoredInterval>> out;
    out.reserve(videos.size());
    for (const Video& v : videos) {
        auto it = proposals.find(v.id);
        out.push_back(it == proposals.end() ? std::vector<ScoredInterval>{} : it->second);
    }
    return out;
}

ProposalSet to_proposal_set(const VideoProposals& proposals) {
    ProposalSet out;
    for (const auto& [id, list] : proposals) out[id] = intervals_of(list);
    return out;
}

std::vector<Interval> intervals_of(std::span<const ScoredInterval> scored) {
    std::vector<Interval> out;
    out.reserve(scored.size());
    for (const ScoredInterval& s : scored) out.push_back(s.interval);
    return out;
}

ActionnessProbe fit_actionness(std::span<Video> videos, const ProbeOptions& options) {
    if (videos.empty()) throw std::invalid_argument("no videos to fit the actionness probe on");
    Eigen::Index rows = 0;
    for (const Video& v : videos) rows += v.features.rows();
    FeatureMatrix all(rows, videos.front().features.cols());
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(rows));
    Eigen::Index at = 0;
    for (const Video& v : videos) {
        if (v.features.cols() != all.cols()) throw DimensionError("videos disagree on feature dimension");
        all.middleRows(at, v.features.rows()) = v.features;
        at += v.features.rows();
        const std::vector<int> l = actionness_labels(v);
        labels.insert(labels.end(), l.begin(), l.end());
    }
    ActionnessProbe probe = ActionnessProbe::train(all, labels, options);
    apply_actionness(videos, probe);
    return probe;
}

void apply_actionness(std::span<Video> videos, const ActionnessProbe& probe) {
    for (Video& v : videos) v.actionness = probe.predict(v.features);
}

std::vector<Detection> detect(std::span<const Video> videos, const VideoProposals& proposals,
                              const ModelParams& params, const DetectOptions& options) {
    params.validate();
    for (const Video& v : videos) {
        if (v.feature_dim() != params.feature_dim)
            throw DimensionError("video '" + v.id + "' has feature dimension " + std::to_string(v.feature_dim()) +
                                 ", model expects " + std::to_string(params.feature_dim));
    }
    std::vector<Detection> out;
    for (const Video& v : videos) {
        auto it = proposals.find(v.id);
        if (it == proposals.end() || it->second.empty()) continue;
        const std::vector<Interval> props = intervals_of(it->second);
        std::vector<Detection> scored;
        if (options.naive || params.pyramid.mode != PoolMode::Average) {
            scored = score_proposals_naive(v.features, props, params, v.id);
        } else {
            const SnippetResponses responses = compute_snippet_responses(v.features, params);
            scored = score_proposals(responses, props, params, v.id);
        }
        const std::vector<Detection> kept = postprocess(scored, options.post);
        out.insert(out.end(), kept.begin(), kept.end());
    }
    return out;
}

std::vector<GroundTruth> all_instances(std::span<const Video> videos) {
    std::vector<GroundTruth> out;
    for (const Video& v : videos) out.insert(out.end(), v.instances.begin(), v.instances.end());
    return out;
}

} // namespace ssn
