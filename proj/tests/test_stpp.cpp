#include "oracles.hpp"
#include "ssn/stpp.hpp"

#include <doctest.h>

#include <random>

using namespace ssn;

namespace {

FeatureMatrix random_features(std::mt19937_64& rng, Eigen::Index t, Eigen::Index d) {
    std::normal_distribution<double> n(0.0, 1.0);
    FeatureMatrix f(t, d);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = n(rng);
    return f;
}

Vector concat(const StageFeatures& s) { return s.global(); }

} // namespace

TEST_CASE("pyramid labels") {
    const PyramidConfig d;
    CHECK(d.label() == "(1,2)-1");
    CHECK(d.num_regions() == 5);
    CHECK(parse_pyramid("(1,2)-1") == d);
    const auto p = parse_pyramid("(1,2,4)-1");
    CHECK(p.num_regions() == 9);
    CHECK(parse_pyramid("(1)-0").num_regions() == 1);
    CHECK_THROWS(parse_pyramid("(0)-1"));
    CHECK_THROWS(parse_pyramid("1,2-1"));
    CHECK_THROWS(parse_pyramid("(1,2)-2"));
}

TEST_CASE("region layout examples") {
    const auto ap = augment({10, 20}, 100);
    const auto r = region_layout(PyramidConfig{}, ap);
    REQUIRE(r.size() == 5);
    CHECK(r[0].stage == Stage::Starting);
    CHECK(r[0].interval == Interval{5, 10});
    CHECK(r[1].interval == Interval{10, 20});
    CHECK(r[2].interval == Interval{10, 15});
    CHECK(r[3].interval == Interval{15, 20});
    CHECK(r[4].stage == Stage::Ending);
    CHECK(r[4].interval == Interval{20, 25});

    const auto r0 = region_layout(parse_pyramid("(1)-0"), augment({0, 10}, 100));
    REQUIRE(r0.size() == 1);
    CHECK(r0[0].interval == Interval{0, 10});
    CHECK(region_layout(parse_pyramid("(1,2,4)-1"), ap).size() == 9);
}

TEST_CASE("pool_region examples") {
    FeatureMatrix f(2, 1);
    f << 1, 3;
    CHECK(pool_region(f, {0, 2})(0) == 2.0);
    CHECK(pool_region(f, {1, 2})(0) == 3.0);
    CHECK(pool_region(f, {0, 2}, PoolMode::Max)(0) == 3.0);
    const FeatureMatrix c = FeatureMatrix::Constant(30, 4, 2.5);
    for (const Interval r : {Interval{0, 30}, Interval{3.5, 9.1}, Interval{29, 30}}) CHECK(pool_region(c, r).isApproxToConstant(2.5));
}

TEST_CASE("dense STPP matches per-region loops and has the documented dimensions") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const char* label : {"(1,2)-1", "(1)-0", "(1)-1", "(1,2,4)-1", "(3)-0"}) {
        const PyramidConfig cfg = parse_pyramid(label);
        for (int trial = 0; trial < 40; ++trial) {
            const Eigen::Index T = 20 + static_cast<Eigen::Index>(80 * u(rng)), D = 5;
            const FeatureMatrix f = random_features(rng, T, D);
            const double s = std::floor(u(rng) * (T - 2));
            const double e = s + 1 + std::floor(u(rng) * (T - s - 1));
            const auto ap = augment({s, e}, static_cast<double>(T));
            const StageFeatures sf = stpp_features(f, ap, cfg);
            CHECK(sf.course.size() == static_cast<Eigen::Index>(cfg.course_parts()) * D);
            CHECK(sf.global().size() ==
                  static_cast<Eigen::Index>(cfg.course_parts() + (cfg.use_augmentation ? 2 : 0)) * D);
            const auto regions = region_layout(cfg, ap);
            Vector expect(static_cast<Eigen::Index>(regions.size()) * D);
            for (std::size_t i = 0; i < regions.size(); ++i)
                expect.segment(static_cast<Eigen::Index>(i) * D, D) = oracle::pool(f, regions[i].interval);
            CHECK((concat(sf) - expect).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("average pooling is linear and permutation invariant within a region") {
    std::mt19937_64 rng(8);
    const FeatureMatrix a = random_features(rng, 30, 3), b = random_features(rng, 30, 3);
    const Interval r{4, 17};
    const Vector lhs = pool_region(2.0 * a + b, r);
    const Vector rhs = 2.0 * pool_region(a, r) + pool_region(b, r);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    FeatureMatrix p = a;
    p.row(4).swap(p.row(16));
    p.row(7).swap(p.row(12));
    CHECK((pool_region(p, r) - pool_region(a, r)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sparse sampling layout") {
    SUBCASE("18-snippet span, center mode") {
        // proposal [6,12) in a long video augments to [3,15); shift so the span is [0,18)
        AugmentedProposal ap;
        ap.original = {4, 14};
        ap.starting = {0, 4};
        ap.course = {4, 14};
        ap.ending = {14, 18};
        const auto s = sparse_sample_center(ap, 100);
        CHECK(s.indices() == std::vector<std::size_t>{1, 3, 5, 7, 9, 11, 13, 15, 17});
        CHECK(s.segments[0].stage == Stage::Starting);
        CHECK(s.segments[2].stage == Stage::Course);
        CHECK(s.segments[8].stage == Stage::Ending);
    }
    SUBCASE("9-snippet span selects everything") {
        AugmentedProposal ap;
        ap.original = {2, 7};
        ap.starting = {0, 2};
        ap.course = {2, 7};
        ap.ending = {7, 9};
        const auto idx = sparse_sample_center(ap, 9).indices();
        CHECK(idx == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8});
    }
    SUBCASE("seeded sampling is deterministic and stays inside its segments") {
        const auto ap = augment({30, 70}, 120);
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto a = sparse_sample(ap, 120, seed);
            CHECK(a.indices() == sparse_sample(ap, 120, seed).indices());
            for (const auto& seg : a.segments) CHECK(seg.range.contains(seg.sample));
        }
    }
    SUBCASE("degenerate stages reuse a boundary snippet") {
        const auto ap = augment({0, 10}, 40);
        const auto s = sparse_sample_center(ap, 40);
        CHECK(s.segments[0].sample == 0);
        CHECK(s.segments[1].sample == 0);
    }
}

TEST_CASE("sparse STPP is exact on segment-constant features") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> val(-50, 50);
    for (int trial = 0; trial < 300; ++trial) {
        const Eigen::Index T = 30 + static_cast<Eigen::Index>(200 * u(rng)), D = 3;
        const double s = std::floor(u(rng) * (T - 2));
        const double e = s + 1 + std::floor(u(rng) * (T - s - 1));
        const auto ap = augment({s, e}, static_cast<double>(T));
        const auto sample = sparse_sample(ap, static_cast<std::size_t>(T), static_cast<std::uint64_t>(trial));
        FeatureMatrix f = FeatureMatrix::Zero(T, D);
        for (const auto& seg : sample.segments) {
            if (seg.range.empty()) continue;
            Eigen::RowVectorXd v(D);
            for (Eigen::Index d = 0; d < D; ++d) v(d) = val(rng);
            for (std::size_t t = seg.range.first; t < seg.range.last; ++t) f.row(static_cast<Eigen::Index>(t)) = v;
        }
        const Vector dense = stpp_features(f, ap, PyramidConfig{}).global();
        const Vector sparse = stpp_features(f, ap, PyramidConfig{}, &sample).global();
        CHECK(dense == sparse);
    }
}
