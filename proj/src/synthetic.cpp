#include "ssn/synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace ssn {

ClassChannels class_channels(const SyntheticConfig& config, int label) {
    if (label < 1 || static_cast<std::size_t>(label) > config.num_classes)
        throw std::out_of_range("class label outside 1..K");
    const std::size_t width = std::max<std::size_t>(1, config.feature_dim / (config.num_classes + 1));
    const std::size_t first = (static_cast<std::size_t>(label) - 1) * width;
    if (first + width > config.feature_dim) throw std::invalid_argument("feature dimension too small for class count");
    return {first, width};
}

std::vector<Video> generate_synthetic(const SyntheticConfig& config, const std::string& prefix) {
    if (config.num_classes < 1 || config.num_snippets < 1 || config.feature_dim < 1)
        throw std::invalid_argument("synthetic config needs K, T and D >= 1");
    if (config.min_length < 1 || config.min_length > config.max_length || config.min_instances > config.max_instances)
        throw std::invalid_argument("synthetic config has inconsistent ranges");
    class_channels(config, static_cast<int>(config.num_classes));

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> noise(0.0, config.noise);
    std::uniform_int_distribution<std::size_t> count_dist(config.min_instances, config.max_instances);
    std::uniform_int_distribution<std::size_t> length_dist(config.min_length, config.max_length);
    std::uniform_int_distribution<int> class_dist(1, static_cast<int>(config.num_classes));

    std::vector<Video> videos;
    videos.reserve(config.num_videos);
    const std::size_t T = config.num_snippets;
    for (std::size_t v = 0; v < config.num_videos; ++v) {
        Video video;
        video.id = prefix + "_" + std::to_string(v);

        // Lay instances left to right with random gaps; drop any that do not fit.
        const std::size_t wanted = count_dist(rng);
        std::vector<std::size_t> lengths(wanted);
        for (auto& l : lengths) l = length_dist(rng);
        std::size_t needed = config.min_gap * (wanted + 1);
        for (std::size_t l : lengths) needed += l;
        while (!lengths.empty() && needed > T) {
            needed -= lengths.back() + config.min_gap;
            lengths.pop_back();
        }
        std::size_t slack = T - needed;
        std::size_t cursor = 0;
        for (std::size_t l : lengths) {
            std::uniform_int_distribution<std::size_t> extra_dist(0, slack);
            const std::size_t extra = extra_dist(rng);
            slack -= extra;
            cursor += config.min_gap + extra;
            GroundTruth g;
            g.video_id = video.id;
            g.label = class_dist(rng);
            g.interval = {static_cast<double>(cursor), static_cast<double>(cursor + l)};
            video.instances.push_back(g);
            cursor += l;
        }

        video.features.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(config.feature_dim));
        for (Eigen::Index t = 0; t < video.features.rows(); ++t)
            for (Eigen::Index d = 0; d < video.features.cols(); ++d) video.features(t, d) = noise(rng);
        for (const GroundTruth& g : video.instances) {
            const ClassChannels ch = class_channels(config, g.label);
            for (auto t = static_cast<Eigen::Index>(g.interval.start); t < static_cast<Eigen::Index>(g.interval.end); ++t)
                video.features.row(t).segment(static_cast<Eigen::Index>(ch.first), static_cast<Eigen::Index>(ch.width))
                    .array() += config.signal;
        }
        videos.push_back(std::move(video));
    }
    return videos;
}

std::vector<int> actionness_labels(const Video& video) {
    std::vector<int> labels(video.num_snippets(), 0);
    for (const GroundTruth& g : video.instances) {
        const SnippetRange r = snippet_members(g.interval, video.num_snippets());
        for (std::size_t t = r.first; t < r.last; ++t) labels[t] = 1;
    }
    return labels;
}

} // namespace ssn
