#pragma once

#include "ssn/intervals.hpp"
#include "ssn/types.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ssn {

enum class PoolMode : std::uint8_t { Average, Max };

/// Pyramid layout written (B1,...,BL)-A: course-stage levels with B parts each,
/// plus one-level starting/ending pooling when A is set.
struct PyramidConfig {
    std::vector<int> course_levels{1, 2};
    bool use_augmentation = true;
    PoolMode mode = PoolMode::Average;

    std::size_t course_parts() const noexcept;
    std::size_t num_regions() const noexcept;
    void validate() const;
    std::string label() const; // e.g. "(1,2)-1"

    friend bool operator==(const PyramidConfig&, const PyramidConfig&) = default;
};

/// Parses "(1,2)-1" style labels.
PyramidConfig parse_pyramid(const std::string& label);

struct Region {
    Stage stage;
    Interval interval;
};

/// Regions in concatenation order: starting, course level 1 parts, ...,
/// course level L parts, ending. Starting/ending are omitted without
/// augmentation.
std::vector<Region> region_layout(const PyramidConfig& config, const AugmentedProposal& proposal);

/// Average (or max) of the snippet features that fall in `region`.
Vector pool_region(const FeatureMatrix& features, const Interval& region, PoolMode mode = PoolMode::Average);

struct StageFeatures {
    Vector starting; // empty without augmentation
    Vector course;
    Vector ending; // empty without augmentation

    Vector global() const;
};

inline constexpr std::size_t kSparseSegments = 9;
inline constexpr std::array<std::size_t, 3> kSegmentsPerStage{2, 5, 2};

enum class SamplingMode : std::uint8_t { Random, Center };

/// One sampling segment of a stage: the snippet range it owns (may be empty
/// for stages shorter than their segment count) and the chosen snippet.
struct SparseSegment {
    Stage stage = Stage::Course;
    SnippetRange range;
    std::size_t sample = 0;
};

struct SparseSample {
    std::array<SparseSegment, kSparseSegments> segments;

    std::vector<std::size_t> indices() const;
};

/// Splits the starting, course and ending stages into 2, 5 and 2 equal
/// segments and picks one snippet per segment: uniformly at random, or the
/// middle snippet in Center mode. Empty segments reuse the stage's first
/// snippet.
SparseSample sparse_sample(const AugmentedProposal& proposal, std::size_t num_snippets, SamplingMode mode,
                           std::mt19937_64& rng);
SparseSample sparse_sample(const AugmentedProposal& proposal, std::size_t num_snippets, std::uint64_t seed);
SparseSample sparse_sample_center(const AugmentedProposal& proposal, std::size_t num_snippets);

/// Structured temporal pyramid pooling of one augmented proposal.
///
/// Dense when `sample` is null. With a sparse sample each region is pooled
/// from the sampled snippets of its stage, each standing in for its segment
/// and weighted by how many of the region's snippets that segment holds. For
/// features that are constant within every segment this reproduces the dense
/// result exactly. A region that overlaps no segment takes the sampled
/// snippet nearest its center.
StageFeatures stpp_features(const FeatureMatrix& features, const AugmentedProposal& proposal,
                            const PyramidConfig& config, const SparseSample* sample = nullptr);

} // namespace ssn
