#include "ssn/intervals.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ssn {

double intersection(const Interval& a, const Interval& b) noexcept {
    return std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

double iou(const Interval& a, const Interval& b) noexcept {
    const double inter = intersection(a, b);
    if (inter <= 0.0) return 0.0;
    const double uni = a.duration() + b.duration() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

SnippetRange snippet_members(const Interval& region, std::size_t num_snippets) {
    if (num_snippets == 0) throw std::invalid_argument("snippet_members: empty sequence");
    const double n = static_cast<double>(num_snippets);
    const double lo = std::clamp(std::ceil(region.start), 0.0, n);
    const double hi = std::clamp(std::ceil(region.end), 0.0, n);
    if (hi > lo) return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};

    const double nearest = std::clamp(std::floor(region.center()), 0.0, n - 1.0);
    const auto t = static_cast<std::size_t>(nearest);
    return {t, t + 1};
}

const char* to_string(Stage stage) noexcept {
    switch (stage) {
    case Stage::Starting: return "starting";
    case Stage::Course: return "course";
    case Stage::Ending: return "ending";
    }
    return "?";
}

const Interval& AugmentedProposal::stage(Stage s) const noexcept {
    switch (s) {
    case Stage::Starting: return starting;
    case Stage::Ending: return ending;
    default: return course;
    }
}

AugmentedProposal augment(const Interval& proposal, double video_length) {
    if (!(video_length > 0.0)) throw std::invalid_argument("augment: video length must be positive");
    if (!proposal.valid()) throw std::invalid_argument("augment: invalid proposal interval");
    if (proposal.start < 0.0 || proposal.end > video_length)
        throw std::invalid_argument("augment: proposal lies outside the video");

    const double half = 0.5 * proposal.duration();
    AugmentedProposal ap;
    ap.original = proposal;
    ap.starting = {std::max(0.0, proposal.start - half), proposal.start};
    ap.course = proposal;
    ap.ending = {proposal.end, std::min(video_length, proposal.end + half)};
    return ap;
}

bool ranks_before(const ScoredInterval& a, const ScoredInterval& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    if (a.interval.start != b.interval.start) return a.interval.start < b.interval.start;
    return a.interval.duration() < b.interval.duration();
}

std::vector<std::size_t> nms_indices(std::span<const ScoredInterval> items, double threshold) {
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return ranks_before(items[i], items[j]); });

    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        const Interval& cand = items[idx].interval;
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return iou(items[k].interval, cand) > threshold;
        });
        if (!suppressed) kept.push_back(idx);
    }
    return kept;
}

std::vector<ScoredInterval> nms(std::span<const ScoredInterval> items, double threshold) {
    std::vector<ScoredInterval> out;
    for (std::size_t idx : nms_indices(items, threshold)) out.push_back(items[idx]);
    return out;
}

} // namespace ssn
