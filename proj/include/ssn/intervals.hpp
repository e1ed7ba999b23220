#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ssn {

/// Half-open temporal interval [start, end) in snippet units.
struct Interval {
    double start = 0.0;
    double end = 0.0;

    double duration() const noexcept { return end - start; }
    double center() const noexcept { return 0.5 * (start + end); }
    bool valid() const noexcept { return std::isfinite(start) && std::isfinite(end) && end > start; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

double intersection(const Interval& a, const Interval& b) noexcept;

/// Temporal IoU; 0 for disjoint intervals.
double iou(const Interval& a, const Interval& b) noexcept;

/// Contiguous snippet index range [first, last).
struct SnippetRange {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t size() const noexcept { return last - first; }
    bool empty() const noexcept { return last <= first; }
    bool contains(std::size_t t) const noexcept { return t >= first && t < last; }
};

/// Snippets t with start <= t < end inside [0, num_snippets). An interval
/// holding no integer index falls back to the snippet containing its center,
/// so the result always has at least one member. num_snippets must be > 0.
SnippetRange snippet_members(const Interval& region, std::size_t num_snippets);

enum class Stage : std::uint8_t { Starting, Course, Ending };

const char* to_string(Stage stage) noexcept;

/// A proposal extended by half its duration on each side and split into
/// starting / course / ending stages. Stages are clamped to the video, so the
/// starting or ending stage can be zero-length at the video boundaries.
struct AugmentedProposal {
    Interval original;
    Interval starting;
    Interval course;
    Interval ending;

    Interval span() const noexcept { return {starting.start, ending.end}; }
    const Interval& stage(Stage s) const noexcept;
};

/// Throws std::invalid_argument when `proposal` is invalid or leaves [0, video_length].
AugmentedProposal augment(const Interval& proposal, double video_length);

struct GroundTruth {
    std::string video_id;
    Interval interval;
    int label = 1; // 1..K, 0 is background
};

struct ScoredInterval {
    Interval interval;
    double score = 0.0;

    friend bool operator==(const ScoredInterval&, const ScoredInterval&) = default;
};

/// Ranking used everywhere a list is ordered by score: higher score first,
/// then earlier start, then shorter duration.
bool ranks_before(const ScoredInterval& a, const ScoredInterval& b) noexcept;

/// Greedy non-maximum suppression. Returns indices into `items` of the
/// survivors in rank order. An item is suppressed when its IoU with an already
/// kept item is strictly greater than `threshold`.
std::vector<std::size_t> nms_indices(std::span<const ScoredInterval> items, double threshold);

std::vector<ScoredInterval> nms(std::span<const ScoredInterval> items, double threshold);

} // namespace ssn
