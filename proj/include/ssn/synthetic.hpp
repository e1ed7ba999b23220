#pragma once

#include "ssn/video.hpp"

#include <cstdint>
#include <vector>

namespace ssn {

/// Videos with planted activity instances. Class k owns a block of feature
/// channels that sits at `signal` inside its instances and at 0 elsewhere;
/// every channel carries Gaussian noise of standard deviation `noise`.
struct SyntheticConfig {
    std::size_t num_videos = 200;
    std::size_t num_snippets = 200;
    std::size_t feature_dim = 16;
    std::size_t num_classes = 3;
    double noise = 0.3;
    double signal = 1.0;
    std::size_t min_instances = 1;
    std::size_t max_instances = 3;
    std::size_t min_length = 20;
    std::size_t max_length = 50;
    std::size_t min_gap = 10;
    std::uint64_t seed = 0;
};

/// Channels [first, first + width) of class k (1-based).
struct ClassChannels {
    std::size_t first = 0;
    std::size_t width = 0;
};

ClassChannels class_channels(const SyntheticConfig& config, int label);

/// Deterministic in `config.seed`. Video ids are "<prefix>_<index>".
std::vector<Video> generate_synthetic(const SyntheticConfig& config, const std::string& prefix = "video");

/// 1 inside any annotated instance, 0 elsewhere.
std::vector<int> actionness_labels(const Video& video);

} // namespace ssn
