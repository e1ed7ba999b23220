#pragma once

#include "ssn/evaluation.hpp"
#include "ssn/inference.hpp"
#include "ssn/model.hpp"
#include "ssn/training.hpp"
#include "ssn/types.hpp"
#include "ssn/video.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ssn::io {

namespace fs = std::filesystem;

// Binary snippet files. All integers and floats are little-endian.
//
//   features:   "SSNF" u32 T u32 D, then T*D float32 row-major (snippet-major)
//   actionness: "SSNA" u32 T, then T float32 in [0, 1]

void write_features(const fs::path& path, const FeatureMatrix& features);
FeatureMatrix read_features(const fs::path& path);

void write_actionness(const fs::path& path, const std::vector<double>& actionness);
std::vector<double> read_actionness(const fs::path& path);

struct ManifestVideo {
    std::string id;
    std::string feature_path;
    std::optional<std::string> actionness_path;
    int stride_frames = 6;
    std::vector<GroundTruth> instances;
};

/// Dataset description. Relative paths resolve against `base_dir`, the
/// manifest's own directory.
struct Manifest {
    std::vector<std::string> classes; // names for labels 1..K
    std::vector<ManifestVideo> videos;
    fs::path base_dir;

    std::size_t num_classes() const noexcept { return classes.size(); }
    std::vector<GroundTruth> instances() const;
};

Manifest parse_manifest(const nlohmann::json& doc, const std::string& source = "<manifest>");
Manifest read_manifest(const fs::path& path);
nlohmann::json manifest_to_json(const Manifest& manifest);
void write_manifest(const fs::path& path, const Manifest& manifest);

/// Loads features (and actionness when present or required) for every video.
/// Instances are checked against the loaded snippet count.
std::vector<Video> load_videos(const Manifest& manifest, bool require_actionness = false);

using ProposalFile = std::map<std::string, std::vector<ScoredInterval>>;

nlohmann::json proposals_to_json(const ProposalFile& proposals);
ProposalFile parse_proposals(const nlohmann::json& doc, const std::string& source = "<proposals>");
void write_proposals(const fs::path& path, const ProposalFile& proposals);
ProposalFile read_proposals(const fs::path& path);

nlohmann::json detections_to_json(const std::vector<Detection>& detections);
std::vector<Detection> parse_detections(const nlohmann::json& doc, const std::string& source = "<detections>");
void write_detections(const fs::path& path, const std::vector<Detection>& detections);
std::vector<Detection> read_detections(const fs::path& path);

/// Model checkpoint, little-endian:
///
///   "SSNM" u32 version(=1) u32 K u32 D u32 L u32 B[L] u8 augmentation u8 pool_mode u16 0 f64 lambda
///   f64 blocks, row-major: activity_w ((K+1) x C), activity_b (K+1),
///   completeness_w (K x G), completeness_b (K), regression_w (2K x G), regression_b (2K)
///
/// with C = sum(B) * D and G = (sum(B) + 2*augmentation) * D.
void write_checkpoint(const fs::path& path, const ModelParams& params);
ModelParams read_checkpoint(const fs::path& path);

/// Training options as JSON; keys absent from `doc` keep the values of `base`.
TrainConfig parse_train_config(const nlohmann::json& doc, TrainConfig base = {},
                               const std::string& source = "<config>");
TrainConfig read_train_config(const fs::path& path, TrainConfig base = {});
nlohmann::json train_config_to_json(const TrainConfig& config);

/// Parses a JSON file; syntax errors become FormatError with the line number.
nlohmann::json read_json(const fs::path& path);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const fs::path& path, const std::string& bytes);
void write_json(const fs::path& path, const nlohmann::json& doc);

} // namespace ssn::io
