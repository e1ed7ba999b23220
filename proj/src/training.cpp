#include "ssn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ssn {

void AssignmentRule::validate() const {
    if (!(positive_iou > incomplete_iou_max))
        throw std::invalid_argument("assignment rule: positive IoU must exceed the incomplete IoU ceiling");
    if (!(incomplete_containment > 0.0 && incomplete_containment <= 1.0))
        throw std::invalid_argument("assignment rule: containment must be in (0, 1]");
    if (background_iou_max < 0.0 || background_iou_max >= incomplete_iou_max)
        throw std::invalid_argument("assignment rule: background tolerance must be in [0, incomplete IoU ceiling)");
}

std::optional<Assignment> assign_label(const Interval& proposal, std::span<const GroundTruth> instances,
                                       const AssignmentRule& rule) {
    double best_iou = 0.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const double v = iou(proposal, instances[i].interval);
        if (v > best_iou) {
            best_iou = v;
            best = i;
        }
    }

    if (!instances.empty() && best_iou >= rule.positive_iou) {
        const GroundTruth& gt = instances[best];
        return Assignment{SampleType::Positive, gt.label, regression_targets(proposal, gt.interval), best};
    }
    if (best_iou <= rule.background_iou_max) return Assignment{SampleType::Background, 0, {}, 0};

    std::optional<Assignment> incomplete;
    double best_containment = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const Interval& g = instances[i].interval;
        const double containment = intersection(proposal, g) / proposal.duration();
        if (containment >= rule.incomplete_containment && iou(proposal, g) < rule.incomplete_iou_max &&
            containment > best_containment) {
            best_containment = containment;
            incomplete = Assignment{SampleType::Incomplete, instances[i].label, {}, i};
        }
    }
    return incomplete;
}

BatchComposition batch_composition(std::size_t batch_size, const std::array<std::size_t, 3>& ratio) {
    const std::size_t parts = ratio[0] + ratio[1] + ratio[2];
    if (parts == 0 || batch_size == 0 || batch_size % parts != 0)
        throw std::invalid_argument("batch size " + std::to_string(batch_size) +
                                    " is not a multiple of the sample ratio sum " + std::to_string(parts));
    const std::size_t unit = batch_size / parts;
    return {ratio[0] * unit, ratio[1] * unit, ratio[2] * unit};
}

void TrainConfig::validate() const {
    batch_composition(batch_size, ratio);
    if (!(ohem_fraction > 0.0 && ohem_fraction <= 1.0)) throw std::invalid_argument("ohem fraction must be in (0, 1]");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning rate must be finite and non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    rule.validate();
    pyramid.validate();
}

const std::vector<LabeledProposal>& SamplePools::of(SampleType type) const noexcept {
    switch (type) {
    case SampleType::Positive: return positive;
    case SampleType::Incomplete: return incomplete;
    default: return background;
    }
}

SamplePools build_pools(std::span<const Video> videos, std::span<const std::vector<ScoredInterval>> proposals,
                        const AssignmentRule& rule, bool include_ground_truth) {
    if (videos.size() != proposals.size()) throw std::invalid_argument("one proposal list per video is required");
    rule.validate();
    SamplePools pools;
    auto add = [&](std::size_t v, const Interval& iv, const Assignment& a) {
        LabeledProposal lp{v, iv, a};
        switch (a.type) {
        case SampleType::Positive: pools.positive.push_back(lp); break;
        case SampleType::Background: pools.background.push_back(lp); break;
        case SampleType::Incomplete: pools.incomplete.push_back(lp); break;
        }
    };
    for (std::size_t v = 0; v < videos.size(); ++v) {
        const auto& instances = videos[v].instances;
        for (const ScoredInterval& p : proposals[v]) {
            if (auto a = assign_label(p.interval, instances, rule)) add(v, p.interval, *a);
        }
        if (include_ground_truth) {
            for (std::size_t i = 0; i < instances.size(); ++i)
                add(v, instances[i].interval, {SampleType::Positive, instances[i].label, {}, i});
        }
    }
    return pools;
}

std::vector<LabeledProposal> sample_minibatch(const SamplePools& pools, const TrainConfig& config,
                                              std::mt19937_64& rng) {
    const BatchComposition comp = batch_composition(config.batch_size, config.ratio);
    std::vector<LabeledProposal> batch;
    batch.reserve(comp.total());

    const std::array<std::pair<SampleType, std::size_t>, 3> quotas{
        {{SampleType::Positive, comp.positive},
         {SampleType::Background, comp.background},
         {SampleType::Incomplete, comp.incomplete}}};
    for (const auto& [type, quota] : quotas) {
        const auto& pool = pools.of(type);
        if (quota == 0) continue;
        if (pool.empty())
            throw TrainingError(std::string("no ") + to_string(type) + " proposals available for training");
        if (pool.size() >= quota) {
            // Partial Fisher-Yates: the first `quota` slots become a uniform draw.
            std::vector<std::size_t> idx(pool.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            for (std::size_t i = 0; i < quota; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
                std::swap(idx[i], idx[pick(rng)]);
                batch.push_back(pool[idx[i]]);
            }
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (std::size_t i = 0; i < quota; ++i) batch.push_back(pool[pick(rng)]);
        }
    }
    return batch;
}

std::size_t ohem_keep_count(std::size_t batch_size, double fraction) {
    if (batch_size == 0) return 0;
    const auto keep = static_cast<std::size_t>(std::ceil(static_cast<double>(batch_size) * fraction - 1e-9));
    return std::clamp<std::size_t>(keep, 1, batch_size);
}

std::vector<std::size_t> ohem_completeness(std::span<const double> losses, double fraction) {
    std::vector<std::size_t> order(losses.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t keep = ohem_keep_count(losses.size(), fraction);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
    order.resize(keep);
    std::sort(order.begin(), order.end());
    return order;
}

StepStats batch_gradient(const ModelParams& params, std::span<const ProposalSample> batch, double ohem_fraction,
                         ModelGradient& grad) {
    grad.set_zero();
    StepStats stats;
    if (batch.empty()) return stats;

    std::vector<LossTerms> terms;
    terms.reserve(batch.size());
    std::vector<double> comp_losses;
    comp_losses.reserve(batch.size());
    for (const ProposalSample& s : batch) {
        terms.push_back(loss_terms(params, s));
        comp_losses.push_back(terms.back().completeness);
    }
    const std::vector<std::size_t> kept = ohem_completeness(comp_losses, ohem_fraction);
    std::vector<char> retained(batch.size(), 0);
    for (std::size_t i : kept) retained[i] = 1;

    const double n = static_cast<double>(batch.size());
    const double k = static_cast<double>(kept.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TermWeights w{1.0 / n, retained[i] ? 1.0 / k : 0.0, 1.0 / n};
        accumulate_gradient(params, batch[i], w, grad);
        stats.activity += terms[i].activity / n;
        stats.regression += terms[i].regression / n;
        if (retained[i]) stats.completeness += terms[i].completeness / k;
    }
    stats.loss = stats.activity + stats.completeness + params.lambda * stats.regression;
    return stats;
}

SgdMomentum::SgdMomentum(const ModelParams& params, double momentum)
    : momentum_(momentum), velocity_(ModelGradient::zeros_like(params)) {}

void SgdMomentum::step(ModelParams& params, const ModelGradient& grad, double learning_rate) {
    auto update = [&](auto& w, auto& v, const auto& g) {
        v = momentum_ * v - learning_rate * g;
        w += v;
    };
    update(params.activity_w, velocity_.activity_w, grad.activity_w);
    update(params.activity_b, velocity_.activity_b, grad.activity_b);
    update(params.completeness_w, velocity_.completeness_w, grad.completeness_w);
    update(params.completeness_b, velocity_.completeness_b, grad.completeness_b);
    update(params.regression_w, velocity_.regression_w, grad.regression_w);
    update(params.regression_b, velocity_.regression_b, grad.regression_b);
}

ProposalSample extract_sample(const Video& video, const LabeledProposal& proposal, const PyramidConfig& pyramid,
                              SamplingMode mode, std::mt19937_64& rng) {
    const AugmentedProposal ap = augment(proposal.interval, video.length());
    const SparseSample sample = sparse_sample(ap, video.num_snippets(), mode, rng);
    const StageFeatures f = stpp_features(video.features, ap, pyramid, &sample);
    return make_sample(f, proposal.assignment.type, proposal.assignment.label, proposal.assignment.target);
}

TrainResult train_from_pools(std::span<const Video> videos, const SamplePools& pools, const TrainConfig& config,
                             ModelParams init) {
    config.validate();
    init.validate();
    if (!(init.pyramid == config.pyramid)) throw std::invalid_argument("model and training pyramid layouts differ");
    for (const Video& v : videos) {
        if (v.feature_dim() != init.feature_dim)
            throw DimensionError("video '" + v.id + "' has feature dimension " + std::to_string(v.feature_dim()) +
                                 ", model expects " + std::to_string(init.feature_dim));
    }
    for (SampleType t : {SampleType::Positive, SampleType::Background, SampleType::Incomplete}) {
        if (pools.of(t).empty())
            throw TrainingError(std::string("no ") + to_string(t) + " proposals available for training");
    }

    TrainResult result;
    result.params = std::move(init);
    result.composition = batch_composition(config.batch_size, config.ratio);
    result.pool_positive = pools.positive.size();
    result.pool_background = pools.background.size();
    result.pool_incomplete = pools.incomplete.size();

    const std::size_t iters_per_epoch =
        config.iterations_per_epoch > 0 ? config.iterations_per_epoch
                                        : std::max<std::size_t>(1, (pools.size() + config.batch_size - 1) / config.batch_size);

    std::mt19937_64 rng(config.seed);
    SgdMomentum sgd(result.params, config.momentum);
    ModelGradient grad = ModelGradient::zeros_like(result.params);
    std::vector<ProposalSample> batch;
    std::size_t iteration = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_sum = 0.0;
        for (std::size_t it = 0; it < iters_per_epoch; ++it, ++iteration) {
            const std::vector<LabeledProposal> picked = sample_minibatch(pools, config, rng);
            batch.clear();
            for (const LabeledProposal& lp : picked)
                batch.push_back(extract_sample(videos[lp.video], lp, config.pyramid, config.sampling, rng));

            const StepStats stats = batch_gradient(result.params, batch, config.ohem_fraction, grad);
            if (!std::isfinite(stats.loss)) {
                std::ostringstream os;
                os << "training diverged: loss is " << stats.loss << " at iteration " << iteration << " (epoch "
                   << epoch << "); activity=" << stats.activity << " completeness=" << stats.completeness
                   << " regression=" << stats.regression << ". Lower the learning rate.";
                throw TrainingError(os.str());
            }

            double lr = config.learning_rate;
            if (config.lr_step > 0)
                lr *= std::pow(config.lr_decay, static_cast<double>(iteration / config.lr_step));
            sgd.step(result.params, grad, lr);

            result.iterations.push_back(stats);
            epoch_sum += stats.loss;
        }
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(iters_per_epoch));
    }
    return result;
}

TrainResult train(std::span<const Video> videos, std::span<const std::vector<ScoredInterval>> proposals,
                  const TrainConfig& config, std::size_t num_classes) {
    if (videos.empty()) throw TrainingError("no training videos");
    const SamplePools pools = build_pools(videos, proposals, config.rule, config.include_ground_truth);
    return train_from_pools(videos, pools, config,
                            ModelParams::zeros(num_classes, videos.front().feature_dim(), config.pyramid, config.lambda));
}

} // namespace ssn
