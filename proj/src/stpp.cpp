#include "ssn/stpp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <regex>
#include <sstream>

namespace ssn {

std::size_t PyramidConfig::course_parts() const noexcept {
    return static_cast<std::size_t>(std::accumulate(course_levels.begin(), course_levels.end(), 0));
}

std::size_t PyramidConfig::num_regions() const noexcept {
    return course_parts() + (use_augmentation ? 2 : 0);
}

void PyramidConfig::validate() const {
    if (course_levels.empty()) throw std::invalid_argument("pyramid needs at least one course level");
    for (int b : course_levels) {
        if (b < 1) throw std::invalid_argument("pyramid level part counts must be >= 1");
    }
}

std::string PyramidConfig::label() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < course_levels.size(); ++i) os << (i ? "," : "") << course_levels[i];
    os << ")-" << (use_augmentation ? 1 : 0);
    return os.str();
}

PyramidConfig parse_pyramid(const std::string& label) {
    static const std::regex pattern(R"(\s*\(\s*(\d+(?:\s*,\s*\d+)*)\s*\)\s*-\s*([01])\s*)");
    std::smatch m;
    if (!std::regex_match(label, m, pattern)) throw std::invalid_argument("bad pyramid label '" + label + "'");
    PyramidConfig cfg;
    cfg.course_levels.clear();
    std::string levels = m[1].str();
    std::replace(levels.begin(), levels.end(), ',', ' ');
    std::istringstream is(levels);
    for (int b; is >> b;) cfg.course_levels.push_back(b);
    cfg.use_augmentation = m[2].str() == "1";
    cfg.validate();
    return cfg;
}

std::vector<Region> region_layout(const PyramidConfig& config, const AugmentedProposal& proposal) {
    config.validate();
    std::vector<Region> regions;
    regions.reserve(config.num_regions());
    if (config.use_augmentation) regions.push_back({Stage::Starting, proposal.starting});

    const Interval& course = proposal.course;
    for (int parts : config.course_levels) {
        const double width = course.duration() / parts;
        for (int i = 0; i < parts; ++i) {
            const double s = course.start + i * width;
            const double e = i + 1 == parts ? course.end : course.start + (i + 1) * width;
            regions.push_back({Stage::Course, {s, e}});
        }
    }

    if (config.use_augmentation) regions.push_back({Stage::Ending, proposal.ending});
    return regions;
}

Vector pool_region(const FeatureMatrix& features, const Interval& region, PoolMode mode) {
    const SnippetRange r = snippet_members(region, static_cast<std::size_t>(features.rows()));
    const auto first = static_cast<Eigen::Index>(r.first);
    const auto count = static_cast<Eigen::Index>(r.size());
    const auto block = features.middleRows(first, count);
    if (mode == PoolMode::Max) return block.colwise().maxCoeff().transpose();
    return (block.colwise().sum() / static_cast<double>(count)).transpose();
}

Vector StageFeatures::global() const {
    Vector g(starting.size() + course.size() + ending.size());
    g << starting, course, ending;
    return g;
}

std::vector<std::size_t> SparseSample::indices() const {
    std::vector<std::size_t> out;
    out.reserve(segments.size());
    for (const auto& s : segments) out.push_back(s.sample);
    return out;
}

namespace {

SparseSample layout_segments(const AugmentedProposal& proposal, std::size_t num_snippets) {
    SparseSample sample;
    std::size_t slot = 0;
    const std::array<Stage, 3> stages{Stage::Starting, Stage::Course, Stage::Ending};
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const SnippetRange members = snippet_members(proposal.stage(stages[s]), num_snippets);
        const std::size_t k = kSegmentsPerStage[s];
        const std::size_t n = members.size();
        for (std::size_t i = 0; i < k; ++i, ++slot) {
            SparseSegment& seg = sample.segments[slot];
            seg.stage = stages[s];
            seg.range = {members.first + i * n / k, members.first + (i + 1) * n / k};
            seg.sample = members.first;
        }
    }
    return sample;
}

} // namespace

SparseSample sparse_sample(const AugmentedProposal& proposal, std::size_t num_snippets, SamplingMode mode,
                           std::mt19937_64& rng) {
    SparseSample sample = layout_segments(proposal, num_snippets);
    for (SparseSegment& seg : sample.segments) {
        if (seg.range.empty()) continue;
        if (mode == SamplingMode::Center) {
            seg.sample = seg.range.first + seg.range.size() / 2;
        } else {
            std::uniform_int_distribution<std::size_t> pick(seg.range.first, seg.range.last - 1);
            seg.sample = pick(rng);
        }
    }
    return sample;
}

SparseSample sparse_sample(const AugmentedProposal& proposal, std::size_t num_snippets, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sparse_sample(proposal, num_snippets, SamplingMode::Random, rng);
}

SparseSample sparse_sample_center(const AugmentedProposal& proposal, std::size_t num_snippets) {
    std::mt19937_64 unused(0);
    return sparse_sample(proposal, num_snippets, SamplingMode::Center, unused);
}

namespace {

Vector pool_sparse(const FeatureMatrix& features, const Region& region, const SparseSample& sample, PoolMode mode) {
    const SnippetRange members = snippet_members(region.interval, static_cast<std::size_t>(features.rows()));
    const auto dim = features.cols();

    Vector acc = mode == PoolMode::Max ? Vector::Constant(dim, -std::numeric_limits<double>::infinity())
                                       : Vector::Zero(dim);
    std::size_t total = 0;
    for (const SparseSegment& seg : sample.segments) {
        if (seg.stage != region.stage) continue;
        const std::size_t lo = std::max(seg.range.first, members.first);
        const std::size_t hi = std::min(seg.range.last, members.last);
        if (hi <= lo) continue;
        const std::size_t weight = hi - lo;
        const auto row = features.row(static_cast<Eigen::Index>(seg.sample)).transpose();
        if (mode == PoolMode::Max) {
            acc = acc.cwiseMax(row);
        } else {
            acc.noalias() += static_cast<double>(weight) * row;
        }
        total += weight;
    }

    if (total > 0) return mode == PoolMode::Max ? acc : Vector(acc / static_cast<double>(total));

    // Nearest sampled snippet to the region center.
    const double center = region.interval.center();
    std::size_t best = sample.segments.front().sample;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const SparseSegment& seg : sample.segments) {
        const double d = std::abs(static_cast<double>(seg.sample) + 0.5 - center);
        if (d < best_dist) {
            best_dist = d;
            best = seg.sample;
        }
    }
    return features.row(static_cast<Eigen::Index>(best)).transpose();
}

} // namespace

StageFeatures stpp_features(const FeatureMatrix& features, const AugmentedProposal& proposal,
                            const PyramidConfig& config, const SparseSample* sample) {
    if (features.rows() == 0) throw std::invalid_argument("stpp_features: empty snippet sequence");
    const std::vector<Region> regions = region_layout(config, proposal);
    const auto dim = features.cols();

    StageFeatures out;
    out.course.resize(static_cast<Eigen::Index>(config.course_parts()) * dim);
    Eigen::Index course_slot = 0;
    for (const Region& region : regions) {
        Vector pooled = sample ? pool_sparse(features, region, *sample, config.mode)
                               : pool_region(features, region.interval, config.mode);
        switch (region.stage) {
        case Stage::Starting: out.starting = std::move(pooled); break;
        case Stage::Ending: out.ending = std::move(pooled); break;
        case Stage::Course: out.course.segment(course_slot++ * dim, dim) = pooled; break;
        }
    }
    return out;
}

} // namespace ssn
