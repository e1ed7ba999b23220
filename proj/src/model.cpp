#include "ssn/model.hpp"

#include <cmath>

namespace ssn {

namespace {

double log_sum_exp(const Vector& z) {
    const double m = z.maxCoeff();
    return m + std::log((z.array() - m).exp().sum());
}

// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_class(const ModelParams& params, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > params.num_classes)
        throw std::out_of_range("class index " + std::to_string(k) + " outside 1.." +
                                std::to_string(params.num_classes));
}

void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want)
        throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
                             std::to_string(got));
}

} // namespace

ModelParams ModelParams::zeros(std::size_t num_classes, std::size_t feature_dim, PyramidConfig pyramid,
                               double lambda) {
    if (num_classes < 1) throw std::invalid_argument("model needs at least one activity class");
    if (feature_dim < 1) throw std::invalid_argument("model needs a positive feature dimension");
    ModelParams p;
    p.num_classes = num_classes;
    p.feature_dim = feature_dim;
    p.pyramid = std::move(pyramid);
    p.lambda = lambda;
    p.pyramid.validate();
    const auto k = static_cast<Eigen::Index>(num_classes);
    p.activity_w = Matrix::Zero(k + 1, p.course_dim());
    p.activity_b = Vector::Zero(k + 1);
    p.completeness_w = Matrix::Zero(k, p.global_dim());
    p.completeness_b = Vector::Zero(k);
    p.regression_w = Matrix::Zero(2 * k, p.global_dim());
    p.regression_b = Vector::Zero(2 * k);
    return p;
}

Eigen::Index ModelParams::course_dim() const noexcept {
    return static_cast<Eigen::Index>(pyramid.course_parts() * feature_dim);
}

Eigen::Index ModelParams::global_dim() const noexcept {
    return static_cast<Eigen::Index>(pyramid.num_regions() * feature_dim);
}

void ModelParams::validate() const {
    if (num_classes < 1) throw std::invalid_argument("model needs at least one activity class");
    if (feature_dim < 1) throw std::invalid_argument("model feature dimension must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
    pyramid.validate();
    const auto k = static_cast<Eigen::Index>(num_classes);
    auto shape = [](const auto& m, Eigen::Index r, Eigen::Index c, const char* name) {
        if (m.rows() != r || m.cols() != c) throw DimensionError(std::string("model block ") + name + " has wrong shape");
        if (!m.allFinite()) throw std::invalid_argument(std::string("model block ") + name + " is not finite");
    };
    shape(activity_w, k + 1, course_dim(), "activity_w");
    shape(activity_b, k + 1, 1, "activity_b");
    shape(completeness_w, k, global_dim(), "completeness_w");
    shape(completeness_b, k, 1, "completeness_b");
    shape(regression_w, 2 * k, global_dim(), "regression_w");
    shape(regression_b, 2 * k, 1, "regression_b");
}

Vector activity_forward(const ModelParams& params, const Vector& course) {
    check_dim(course.size(), params.course_dim(), "activity classifier");
    Vector z = params.activity_w * course + params.activity_b;
    z.array() -= z.maxCoeff();
    z = z.array().exp();
    return z / z.sum();
}

double completeness_forward(const ModelParams& params, const Vector& global, int k) {
    check_class(params, k);
    check_dim(global.size(), params.global_dim(), "completeness classifier");
    return logistic(params.completeness_w.row(k - 1).dot(global) + params.completeness_b(k - 1));
}

Vector joint_score(const ModelParams& params, const StageFeatures& features) {
    const Vector activity = activity_forward(params, features.course);
    const Vector global = features.global();
    Vector out(static_cast<Eigen::Index>(params.num_classes));
    for (int k = 1; k <= static_cast<int>(params.num_classes); ++k)
        out(k - 1) = activity(k) * completeness_forward(params, global, k);
    return out;
}

RegressionTarget regression_targets(const Interval& proposal, const Interval& target) {
    const double d = proposal.duration();
    return {(target.center() - proposal.center()) / d, std::log(target.duration() / d)};
}

Interval apply_regression(const Interval& proposal, const RegressionTarget& offsets) {
    const double d = proposal.duration();
    const double center = proposal.center() + offsets.center_shift * d;
    const double half = 0.5 * d * std::exp(offsets.log_span);
    return {center - half, center + half};
}

RegressionTarget regression_forward(const ModelParams& params, const Vector& global, int k) {
    check_class(params, k);
    check_dim(global.size(), params.global_dim(), "location regressor");
    const Eigen::Index r = 2 * (k - 1);
    return {params.regression_w.row(r).dot(global) + params.regression_b(r),
            params.regression_w.row(r + 1).dot(global) + params.regression_b(r + 1)};
}

double smooth_l1(double x) noexcept {
    const double a = std::abs(x);
    return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double regression_loss(const RegressionTarget& predicted, const RegressionTarget& target) noexcept {
    return smooth_l1(predicted.center_shift - target.center_shift) + smooth_l1(predicted.log_span - target.log_span);
}

const char* to_string(SampleType type) noexcept {
    switch (type) {
    case SampleType::Positive: return "positive";
    case SampleType::Background: return "background";
    case SampleType::Incomplete: return "incomplete";
    }
    return "?";
}

ProposalSample make_sample(const StageFeatures& features, SampleType type, int label, RegressionTarget target) {
    ProposalSample s;
    s.course = features.course;
    s.global = features.global();
    s.type = type;
    s.label = type == SampleType::Background ? 0 : label;
    s.target = target;
    return s;
}

LossTerms loss_terms(const ModelParams& params, const ProposalSample& sample) {
    LossTerms terms;
    check_dim(sample.course.size(), params.course_dim(), "activity classifier");
    if (sample.label < 0 || static_cast<std::size_t>(sample.label) > params.num_classes)
        throw std::out_of_range("sample label outside 0.." + std::to_string(params.num_classes));
    const Vector z = params.activity_w * sample.course + params.activity_b;
    terms.activity = log_sum_exp(z) - z(sample.label);
    if (sample.label >= 1) {
        check_class(params, sample.label);
        check_dim(sample.global.size(), params.global_dim(), "completeness classifier");
        const double u = params.completeness_w.row(sample.label - 1).dot(sample.global) +
                         params.completeness_b(sample.label - 1);
        terms.completeness = sample.complete() ? softplus(-u) : softplus(u);
        if (sample.complete())
            terms.regression = regression_loss(regression_forward(params, sample.global, sample.label), sample.target);
    }
    return terms;
}

double classification_loss(const ModelParams& params, const ProposalSample& sample) {
    const LossTerms t = loss_terms(params, sample);
    return t.activity + t.completeness;
}

double multi_task_loss(const ModelParams& params, const ProposalSample& sample) {
    const LossTerms t = loss_terms(params, sample);
    return t.activity + t.completeness + params.lambda * t.regression;
}

ModelGradient ModelGradient::zeros_like(const ModelParams& params) {
    ModelGradient g;
    g.activity_w = Matrix::Zero(params.activity_w.rows(), params.activity_w.cols());
    g.activity_b = Vector::Zero(params.activity_b.size());
    g.completeness_w = Matrix::Zero(params.completeness_w.rows(), params.completeness_w.cols());
    g.completeness_b = Vector::Zero(params.completeness_b.size());
    g.regression_w = Matrix::Zero(params.regression_w.rows(), params.regression_w.cols());
    g.regression_b = Vector::Zero(params.regression_b.size());
    return g;
}

void ModelGradient::set_zero() {
    activity_w.setZero();
    activity_b.setZero();
    completeness_w.setZero();
    completeness_b.setZero();
    regression_w.setZero();
    regression_b.setZero();
}

LossTerms accumulate_gradient(const ModelParams& params, const ProposalSample& sample, const TermWeights& weights,
                              ModelGradient& grad) {
    const LossTerms terms = loss_terms(params, sample);

    if (weights.activity != 0.0) {
        Vector dz = activity_forward(params, sample.course);
        dz(sample.label) -= 1.0;
        dz *= weights.activity;
        grad.activity_w.noalias() += dz * sample.course.transpose();
        grad.activity_b += dz;
    }

    if (sample.label < 1) return terms;
    const int row = sample.label - 1;

    if (weights.completeness != 0.0) {
        const double p = completeness_forward(params, sample.global, sample.label);
        const double du = weights.completeness * (p - (sample.complete() ? 1.0 : 0.0));
        grad.completeness_w.row(row) += du * sample.global.transpose();
        grad.completeness_b(row) += du;
    }

    if (sample.complete() && weights.regression != 0.0) {
        const RegressionTarget pred = regression_forward(params, sample.global, sample.label);
        auto dsmooth = [](double x) { return std::abs(x) < 1.0 ? x : (x > 0.0 ? 1.0 : -1.0); };
        const double scale = weights.regression * params.lambda;
        const double d0 = scale * dsmooth(pred.center_shift - sample.target.center_shift);
        const double d1 = scale * dsmooth(pred.log_span - sample.target.log_span);
        grad.regression_w.row(2 * row) += d0 * sample.global.transpose();
        grad.regression_w.row(2 * row + 1) += d1 * sample.global.transpose();
        grad.regression_b(2 * row) += d0;
        grad.regression_b(2 * row + 1) += d1;
    }
    return terms;
}

} // namespace ssn
