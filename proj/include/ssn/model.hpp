#pragma once

#include "ssn/intervals.hpp"
#include "ssn/stpp.hpp"
#include "ssn/types.hpp"

#include <cstdint>

namespace ssn {

/// Linear heads over STPP features.
///
/// The activity classifier sees only the course features and scores K+1
/// classes (row 0 is background). Completeness classifier k (row k-1) and
/// regressor k (rows 2(k-1) for the center shift and 2(k-1)+1 for the log
/// span) see the global feature.
struct ModelParams {
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;
    PyramidConfig pyramid;
    double lambda = 1.0;

    Matrix activity_w; // (K+1) x course_dim
    Vector activity_b;
    Matrix completeness_w; // K x global_dim
    Vector completeness_b;
    Matrix regression_w; // 2K x global_dim
    Vector regression_b;

    static ModelParams zeros(std::size_t num_classes, std::size_t feature_dim, PyramidConfig pyramid = {},
                             double lambda = 1.0);

    Eigen::Index course_dim() const noexcept;
    Eigen::Index global_dim() const noexcept;

    /// Throws DimensionError / std::invalid_argument on inconsistent shapes,
    /// non-finite weights, K < 1 or lambda <= 0.
    void validate() const;
};

/// softmax(W_act f_c + b); size K+1.
Vector activity_forward(const ModelParams& params, const Vector& course);

/// P(complete | class k) for 1 <= k <= K.
double completeness_forward(const ModelParams& params, const Vector& global, int k);

/// Entry k-1 holds P(c = k) * P(complete | k) for k = 1..K.
Vector joint_score(const ModelParams& params, const StageFeatures& features);

struct RegressionTarget {
    double center_shift = 0.0; // (center(g) - center(p)) / duration(p)
    double log_span = 0.0;     // log(duration(g) / duration(p))

    friend bool operator==(const RegressionTarget&, const RegressionTarget&) = default;
};

RegressionTarget regression_targets(const Interval& proposal, const Interval& target);
Interval apply_regression(const Interval& proposal, const RegressionTarget& offsets);

/// Regressor output for class k on the given global feature.
RegressionTarget regression_forward(const ModelParams& params, const Vector& global, int k);

double smooth_l1(double x) noexcept;
double regression_loss(const RegressionTarget& predicted, const RegressionTarget& target) noexcept;

enum class SampleType : std::uint8_t { Positive, Background, Incomplete };

const char* to_string(SampleType type) noexcept;

/// A labeled proposal together with its pooled features.
struct ProposalSample {
    Vector course;
    Vector global;
    SampleType type = SampleType::Background;
    int label = 0;             // 0 for background
    RegressionTarget target{}; // meaningful for positives only

    bool complete() const noexcept { return type == SampleType::Positive; }
};

ProposalSample make_sample(const StageFeatures& features, SampleType type, int label, RegressionTarget target = {});

/// The three per-sample loss terms before weighting. `completeness` and
/// `regression` are zero where their indicator is off.
struct LossTerms {
    double activity = 0.0;
    double completeness = 0.0;
    double regression = 0.0;
};

LossTerms loss_terms(const ModelParams& params, const ProposalSample& sample);

/// -log P(c|p) - [c >= 1] log P(b|c,p)
double classification_loss(const ModelParams& params, const ProposalSample& sample);

/// classification_loss + lambda [c >= 1 and b = 1] * smooth-L1 regression loss
double multi_task_loss(const ModelParams& params, const ProposalSample& sample);

struct ModelGradient {
    Matrix activity_w;
    Vector activity_b;
    Matrix completeness_w;
    Vector completeness_b;
    Matrix regression_w;
    Vector regression_b;

    static ModelGradient zeros_like(const ModelParams& params);
    void set_zero();
};

/// Per-term multipliers applied while accumulating a gradient. The
/// regression term is additionally scaled by the model's lambda.
struct TermWeights {
    double activity = 1.0;
    double completeness = 1.0;
    double regression = 1.0;
};

/// Adds weights . d(terms)/d(params) of one sample to `grad` and returns
/// the unweighted loss terms.
LossTerms accumulate_gradient(const ModelParams& params, const ProposalSample& sample, const TermWeights& weights,
                              ModelGradient& grad);

} // namespace ssn
