#pragma once

#include "ssn/intervals.hpp"
#include "ssn/model.hpp"
#include "ssn/stpp.hpp"
#include "ssn/video.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace ssn {

struct AssignmentRule {
    double positive_iou = 0.7;
    double incomplete_containment = 0.8;
    double incomplete_iou_max = 0.3;
    /// Background proposals may overlap every instance by at most this IoU.
    double background_iou_max = 0.0;

    void validate() const;
};

struct Assignment {
    SampleType type = SampleType::Background;
    int label = 0;
    RegressionTarget target{};
    std::size_t instance = 0; // matched instance; unused for background
};

/// Positive when the best-IoU instance reaches positive_iou; background when
/// no instance overlaps beyond background_iou_max; incomplete when some
/// instance holds >= incomplete_containment of the proposal's span at IoU
/// below incomplete_iou_max. Anything else is discarded (nullopt).
std::optional<Assignment> assign_label(const Interval& proposal, std::span<const GroundTruth> instances,
                                       const AssignmentRule& rule = {});

struct BatchComposition {
    std::size_t positive = 0;
    std::size_t background = 0;
    std::size_t incomplete = 0;

    std::size_t total() const noexcept { return positive + background + incomplete; }
    friend bool operator==(const BatchComposition&, const BatchComposition&) = default;
};

/// Splits batch_size by the positive:background:incomplete ratio. The ratio
/// sum must divide batch_size.
BatchComposition batch_composition(std::size_t batch_size, const std::array<std::size_t, 3>& ratio);

struct TrainConfig {
    std::size_t batch_size = 128;
    std::array<std::size_t, 3> ratio{1, 1, 6}; // positive : background : incomplete
    double learning_rate = 0.1;
    double momentum = 0.9;
    std::size_t lr_step = 0; // iterations between decays, 0 keeps lr constant
    double lr_decay = 0.1;
    double ohem_fraction = 1.0 / 6.0;
    std::size_t epochs = 30;
    std::size_t iterations_per_epoch = 0; // 0 derives it from the pool size
    std::uint64_t seed = 0;
    SamplingMode sampling = SamplingMode::Random;
    AssignmentRule rule{};
    PyramidConfig pyramid{};
    double lambda = 1.0;
    bool include_ground_truth = false; // add every instance as a positive sample

    void validate() const;
};

struct LabeledProposal {
    std::size_t video = 0;
    Interval interval;
    Assignment assignment;
};

struct SamplePools {
    std::vector<LabeledProposal> positive;
    std::vector<LabeledProposal> background;
    std::vector<LabeledProposal> incomplete;

    const std::vector<LabeledProposal>& of(SampleType type) const noexcept;
    std::size_t size() const noexcept { return positive.size() + background.size() + incomplete.size(); }
};

/// Labels every proposal of every video; `proposals[i]` belongs to `videos[i]`.
SamplePools build_pools(std::span<const Video> videos, std::span<const std::vector<ScoredInterval>> proposals,
                        const AssignmentRule& rule = {}, bool include_ground_truth = false);

/// Draws a minibatch with the configured type ratio, in type order
/// (positives, backgrounds, incompletes). A type is drawn without
/// replacement when its pool covers the quota, with replacement otherwise.
/// Throws TrainingError naming the type when a pool is empty.
std::vector<LabeledProposal> sample_minibatch(const SamplePools& pools, const TrainConfig& config,
                                              std::mt19937_64& rng);

/// Number of samples OHEM keeps: ceil(batch_size * fraction).
std::size_t ohem_keep_count(std::size_t batch_size, double fraction);

/// Indices of the ceil(n * fraction) largest losses, ties resolved by index.
/// Returned in ascending index order.
std::vector<std::size_t> ohem_completeness(std::span<const double> losses, double fraction = 1.0 / 6.0);

struct StepStats {
    double loss = 0.0;
    double activity = 0.0;
    double completeness = 0.0;
    double regression = 0.0;
};

/// Batch objective: activity and regression terms averaged over the batch,
/// completeness averaged over the OHEM-retained samples only. Fills `grad`.
StepStats batch_gradient(const ModelParams& params, std::span<const ProposalSample> batch, double ohem_fraction,
                         ModelGradient& grad);

/// Momentum SGD: v <- momentum * v - lr * grad; w <- w + v.
class SgdMomentum {
public:
    SgdMomentum(const ModelParams& params, double momentum);
    void step(ModelParams& params, const ModelGradient& grad, double learning_rate);

private:
    double momentum_;
    ModelGradient velocity_;
};

struct TrainResult {
    ModelParams params;
    std::vector<StepStats> iterations;
    std::vector<double> epoch_loss; // mean loss per epoch
    BatchComposition composition;
    std::size_t pool_positive = 0;
    std::size_t pool_background = 0;
    std::size_t pool_incomplete = 0;
};

/// Pools features for the labeled proposal with a fresh sparse sample.
ProposalSample extract_sample(const Video& video, const LabeledProposal& proposal, const PyramidConfig& pyramid,
                              SamplingMode mode, std::mt19937_64& rng);

/// Seeded SGD over the multi-task loss with OHEM on the completeness term.
/// Throws TrainingError when a pool is empty or the loss stops being finite.
TrainResult train(std::span<const Video> videos, std::span<const std::vector<ScoredInterval>> proposals,
                  const TrainConfig& config, std::size_t num_classes);

/// Same loop over prebuilt pools, starting from `init`.
TrainResult train_from_pools(std::span<const Video> videos, const SamplePools& pools, const TrainConfig& config,
                             ModelParams init);

} // namespace ssn
