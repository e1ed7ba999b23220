#pragma once

#include "ssn/evaluation.hpp"
#include "ssn/inference.hpp"
#include "ssn/tag.hpp"
#include "ssn/training.hpp"
#include "ssn/video.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace ssn {

using VideoProposals = std::map<std::string, std::vector<ScoredInterval>>;

/// TAG proposals for every video; each video must carry actionness.
VideoProposals propose(std::span<const Video> videos, const TagConfig& config = {});

/// Proposal lists aligned with `videos` (missing ids give empty lists).
std::vector<std::vector<ScoredInterval>> align_proposals(std::span<const Video> videos, const VideoProposals& proposals);

ProposalSet to_proposal_set(const VideoProposals& proposals);

std::vector<Interval> intervals_of(std::span<const ScoredInterval> scored);

/// Fits one actionness probe on all snippets of all videos (1 inside
/// instances) and fills each video's actionness with its predictions.
ActionnessProbe fit_actionness(std::span<Video> videos, const ProbeOptions& options);
void apply_actionness(std::span<Video> videos, const ActionnessProbe& probe);

struct DetectOptions {
    PostprocessConfig post{};
    bool naive = false; // pool-then-classify reference path
};

/// Scores every video's proposals and post-processes them. Output is
/// grouped by video in `videos` order, ranked within each video.
std::vector<Detection> detect(std::span<const Video> videos, const VideoProposals& proposals,
                              const ModelParams& params, const DetectOptions& options = {});

std::vector<GroundTruth> all_instances(std::span<const Video> videos);

} // namespace ssn
