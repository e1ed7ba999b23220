#pragma once

#include "ssn/intervals.hpp"
#include "ssn/types.hpp"

#include <string>
#include <vector>

namespace ssn {

/// One video's snippet features, optional actionness and annotations.
struct Video {
    std::string id;
    FeatureMatrix features;
    std::vector<double> actionness; // empty when not available
    std::vector<GroundTruth> instances;
    int stride_frames = 6;

    std::size_t num_snippets() const noexcept { return static_cast<std::size_t>(features.rows()); }
    std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(features.cols()); }
    double length() const noexcept { return static_cast<double>(features.rows()); }
};

} // namespace ssn
