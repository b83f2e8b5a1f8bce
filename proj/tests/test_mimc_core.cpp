// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mimc/mimc_core.hpp"
#include "mimc/synthetic_model.hpp"

using mimc::IndexSet;
using mimc::IndexStats;
using mimc::MultiIndex;

namespace {

// g_l(w) = sum_i (i + 1) * 10^i * l_i + u(w), with work 1 + |l|_1.
class ToyModel : public mimc::ModelProblem {
public:
    explicit ToyModel(std::size_t d, MultiIndex broken = {}) : d_(d), broken_(std::move(broken)) {}
    std::size_t dim() const override { return d_; }
    std::vector<int> max_levels() const override { return std::vector<int>(d_, 6); }
    double evaluate(const MultiIndex& l, const mimc::EventKey& e) const override {
        if (l == broken_) throw std::runtime_error("boom");
        double g = mimc::CounterStream(e).normal(0);
        for (std::size_t i = 0; i < d_; ++i) g += (i + 1) * std::pow(10.0, i) * l[i] * l[i];
        return g;
    }
    double work(const MultiIndex& l) const override { return 1.0 + l.l1(); }
    std::string name() const override { return "toy"; }

private:
    std::size_t d_;
    MultiIndex broken_;
};

std::map<MultiIndex, double> as_map(const IndexSet& s, const std::vector<double>& values) {
    std::map<MultiIndex, double> m;
    std::size_t i = 0;
    for (const auto& l : s) m[l] = values[i++];
    return m;
}

}  // namespace

TEST(DifferenceCorners, Examples) {
    const auto c0 = mimc::difference_corners(MultiIndex{0, 0});
    ASSERT_EQ(c0.size(), 1u);
    EXPECT_EQ(c0[0].index, (MultiIndex{0, 0}));
    EXPECT_EQ(c0[0].sign, 1);

    std::map<MultiIndex, int> c11;
    for (const auto& c : mimc::difference_corners(MultiIndex{1, 1})) c11[c.index] = c.sign;
    EXPECT_EQ(c11, (std::map<MultiIndex, int>{{{1, 1}, 1}, {{0, 1}, -1}, {{1, 0}, -1}, {{0, 0}, 1}}));

    std::map<MultiIndex, int> c201;
    for (const auto& c : mimc::difference_corners(MultiIndex{2, 0, 1})) c201[c.index] = c.sign;
    EXPECT_EQ(c201,
              (std::map<MultiIndex, int>{{{2, 0, 1}, 1}, {{1, 0, 1}, -1}, {{2, 0, 0}, -1}, {{1, 0, 0}, 1}}));
    EXPECT_EQ(mimc::difference_corners(MultiIndex{2, 0, 1}).front().index, (MultiIndex{2, 0, 1}));
}

TEST(DeltaSample, SignedSumWithCommonEvent) {
    const ToyModel model(2);
    const auto e = mimc::event_key(1, MultiIndex{1, 1}, 0);
    const auto d = mimc::delta_sample(model, MultiIndex{1, 1}, e);
    const double manual = model.evaluate({1, 1}, e) - model.evaluate({0, 1}, e) - model.evaluate({1, 0}, e) +
                          model.evaluate({0, 0}, e);
    EXPECT_EQ(d.value, manual);
    // The noise cancels and the quadratic levels have no mixed term.
    EXPECT_NEAR(d.value, 0.0, 1e-12);
    EXPECT_EQ(d.work, 3.0 + 2.0 + 2.0 + 1.0);
    EXPECT_EQ(mimc::delta_work(model, MultiIndex{1, 1}), 8.0);
    const auto d20 = mimc::delta_sample(model, MultiIndex{2, 0}, e);
    EXPECT_NEAR(d20.value, 3.0, 1e-12);
    const auto d00 = mimc::delta_sample(model, MultiIndex{0, 0}, e);
    EXPECT_EQ(d00.value, model.evaluate({0, 0}, e));
}

TEST(DeltaSample, OneDimensionalIsLevelDifference) {
    const mimc::SyntheticModel model(mimc::SyntheticConfig::with_dim(1));
    for (int l = 1; l < 5; ++l) {
        const auto e = mimc::event_key(2, MultiIndex{l}, 7);
        EXPECT_EQ(mimc::delta_sample(model, MultiIndex{l}, e).value,
                  model.evaluate(MultiIndex{l}, e) - model.evaluate(MultiIndex{l - 1}, e));
    }
}

TEST(DeltaSample, ErrorCarriesCorner) {
    const ToyModel model(2, MultiIndex{0, 1});
    try {
        mimc::delta_sample(model, MultiIndex{1, 1}, mimc::shared_event_key(0, 0));
        FAIL() << "expected an error";
    } catch (const mimc::ModelEvaluationError& e) {
        EXPECT_EQ(e.corner(), (MultiIndex{0, 1}));
        EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
    }
}

TEST(IndexStats, MeanVarianceAndContracts) {
    IndexStats s;
    EXPECT_THROW(s.mean(), std::logic_error);
    s.add(1.0);
    EXPECT_THROW(s.variance(), std::logic_error);
    s.add(2.0);
    s.add(3.0);
    EXPECT_EQ(s.count(), 3u);
    EXPECT_DOUBLE_EQ(s.mean(), 2.0);
    EXPECT_DOUBLE_EQ(s.variance(), 1.0);
    IndexStats c;
    for (int i = 0; i < 5; ++i) c.add(1e8 + 0.1);
    EXPECT_GE(c.variance(), 0.0);
    EXPECT_NEAR(c.variance(), 0.0, 1e-6);
}

TEST(IndexStats, MergeIsOrderIndependent) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd(3.0, 2.0);
    IndexStats a, b, all;
    for (int i = 0; i < 500; ++i) {
        const double x = nd(rng);
        (i % 3 == 0 ? a : b).add(x);
        all.add(x);
    }
    IndexStats ab = a, ba = b;
    ab.merge(b);
    ba.merge(a);
    EXPECT_EQ(ab.count(), all.count());
    EXPECT_EQ(ab.sum(), ba.sum());
    EXPECT_EQ(ab.sum_sq(), ba.sum_sq());
    EXPECT_NEAR(ab.mean(), all.mean(), 1e-13);
    EXPECT_NEAR(ab.variance(), all.variance(), 1e-11);
}

TEST(OptimalSamples, Examples) {
    const IndexSet one{{0}};
    auto n = mimc::optimal_samples(one, as_map(one, {1.0}), as_map(one, {1.0}), std::sqrt(2.0), 0.5);
    EXPECT_NEAR(n.at(MultiIndex{0}), 1.0, 1e-14);

    const IndexSet two{{0}, {1}};
    n = mimc::optimal_samples(two, as_map(two, {1.0, 1.0}), as_map(two, {1.0, 1.0}), 1.0, 0.5);
    EXPECT_NEAR(n.at(MultiIndex{0}), 4.0, 1e-14);
    EXPECT_NEAR(n.at(MultiIndex{1}), 4.0, 1e-14);
    EXPECT_NEAR(1.0 / n.at(MultiIndex{0}) + 1.0 / n.at(MultiIndex{1}), 0.5, 1e-15);

    n = mimc::optimal_samples(two, as_map(two, {0.0, 0.0}), as_map(two, {1.0, 2.0}), 1.0, 0.5);
    EXPECT_EQ(n.at(MultiIndex{0}), 0.0);
    EXPECT_EQ(n.at(MultiIndex{1}), 0.0);
}

TEST(OptimalSamples, Validation) {
    const IndexSet two{{0}, {1}};
    const auto v = as_map(two, {1.0, 1.0});
    const auto w = as_map(two, {1.0, 1.0});
    EXPECT_THROW(mimc::optimal_samples(two, as_map(two, {-1.0, 1.0}), w, 1.0, 0.5), std::invalid_argument);
    EXPECT_THROW(mimc::optimal_samples(two, v, as_map(two, {0.0, 1.0}), 1.0, 0.5), std::invalid_argument);
    EXPECT_THROW(mimc::optimal_samples(two, v, w, 0.0, 0.5), std::invalid_argument);
    EXPECT_THROW(mimc::optimal_samples(two, v, w, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(mimc::optimal_samples(two, as_map(IndexSet{{0}}, {1.0}), w, 1.0, 0.5), std::invalid_argument);
}

TEST(OptimalSamples, ProportionalityAndTotalWork) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> lv(-6.0, 2.0), lw(-3.0, 4.0);
    for (int trial = 0; trial < 50; ++trial) {
        IndexSet set;
        for (int i = 0; i < 5; ++i) set.insert(MultiIndex{i});
        std::vector<double> vs, ws;
        for (int i = 0; i < 5; ++i) {
            vs.push_back(std::pow(10.0, lv(rng)));
            ws.push_back(std::pow(10.0, lw(rng)));
        }
        const double eps = 0.01;
        const auto n = mimc::optimal_samples(set, as_map(set, vs), as_map(set, ws), eps, 0.5);
        double sum_root = 0, work = 0, variance = 0;
        for (int i = 0; i < 5; ++i) {
            const double ni = n.at(MultiIndex{i});
            sum_root += std::sqrt(vs[i] * ws[i]);
            work += ni * ws[i];
            variance += vs[i] / ni;
            for (int j = 0; j < i; ++j) {
                const double ratio = (ni / n.at(MultiIndex{j})) / std::sqrt(vs[i] / ws[i] * ws[j] / vs[j]);
                EXPECT_NEAR(ratio, 1.0, 1e-12);
            }
        }
        EXPECT_NEAR(work / (2.0 / (eps * eps) * sum_root * sum_root), 1.0, 1e-10);
        EXPECT_NEAR(variance / (0.5 * eps * eps), 1.0, 1e-12);
    }
}

TEST(Profit, Examples) {
    EXPECT_DOUBLE_EQ(mimc::profit(2.0, 4.0, 1.0), 1.0);
    EXPECT_EQ(mimc::profit(0.0, 3.0, 7.0), 0.0);
    EXPECT_EQ(mimc::profit(0.0, 0.0, 7.0), 0.0);
    EXPECT_DOUBLE_EQ(mimc::profit(1.0, 1.0, 4.0), 0.5);
    EXPECT_DOUBLE_EQ(mimc::profit(1.0, 0.0, 1.0), 1.0 / std::sqrt(mimc::kVarianceFloor));
}

TEST(BiasEstimate, Examples) {
    mimc::StatsMap stats;
    stats[MultiIndex{1, 0}].add(0.3);
    stats[MultiIndex{0, 1}].add(-0.2);
    stats[MultiIndex{0, 0}].add(5.0);
    EXPECT_NEAR(mimc::bias_estimate(stats, {{1, 0}, {0, 1}}), 0.5, 1e-15);
    EXPECT_EQ(mimc::bias_estimate(stats, {}), 0.0);
    mimc::StatsMap single;
    single[MultiIndex{2}].add(-1.5);
    EXPECT_EQ(mimc::bias_estimate(single, {MultiIndex{2}}), 1.5);
    EXPECT_THROW(mimc::bias_estimate(stats, {MultiIndex{2, 2}}), std::logic_error);
    stats[MultiIndex{3, 3}];
    EXPECT_THROW(mimc::bias_estimate(stats, {MultiIndex{3, 3}}), std::logic_error);
}

TEST(Assemble, Examples) {
    mimc::StatsMap stats;
    for (double x : {1.0, 2.0, 3.0}) stats[MultiIndex{0}].add(x);
    auto e = mimc::assemble(stats, {MultiIndex{0}}, {MultiIndex{0}});
    EXPECT_DOUBLE_EQ(e.mean, 2.0);
    EXPECT_DOUBLE_EQ(e.std_error, std::sqrt(1.0 / 3.0));
    EXPECT_DOUBLE_EQ(e.bias, 2.0);
    EXPECT_DOUBLE_EQ(e.rmse(), std::sqrt(1.0 / 3.0 + 4.0));

    for (double x : {0.05, 0.15}) stats[MultiIndex{1}].add(x);
    e = mimc::assemble(stats, {MultiIndex{0}, MultiIndex{1}}, {MultiIndex{1}});
    EXPECT_NEAR(e.mean, 2.1, 1e-15);
    EXPECT_NEAR(e.bias, 0.1, 1e-15);

    stats[MultiIndex{2}].add(1.0);
    EXPECT_THROW(mimc::assemble(stats, {MultiIndex{2}}, {}), std::logic_error);
}

TEST(Sampler, TelescopingOnSyntheticModel) {
    const mimc::SyntheticModel model(mimc::SyntheticConfig{});
    const MultiIndex corner{2, 1, 2};
    const std::uint64_t seed = 12;
    const mimc::Sampler shared(model, seed, 1, [seed](const MultiIndex&, std::uint64_t n) {
        return mimc::shared_event_key(seed, n);
    });
    const IndexSet rect = mimc::rectangle(corner);
    std::map<MultiIndex, std::size_t> targets;
    for (const auto& l : rect) targets[l] = 40;
    mimc::StatsMap stats;
    shared.top_up(stats, targets);
    const auto e = mimc::assemble(stats, rect, mimc::maximal_elements(rect));
    double plain = 0;
    for (std::uint64_t n = 0; n < 40; ++n) plain += model.evaluate(corner, mimc::shared_event_key(seed, n));
    EXPECT_NEAR(e.mean, plain / 40, 1e-12);
}

TEST(Sampler, WorkerCountDoesNotChangeResults) {
    const mimc::SyntheticModel model(mimc::SyntheticConfig{});
    std::map<MultiIndex, std::size_t> targets;
    for (const auto& l : mimc::rectangle(MultiIndex{2, 2, 1})) targets[l] = 37;
    std::vector<mimc::StatsMap> results;
    std::vector<double> works;
    for (std::size_t w : {1u, 2u, 8u}) {
        const mimc::Sampler sampler(model, 5, w);
        mimc::StatsMap stats;
        works.push_back(sampler.top_up(stats, targets));
        results.push_back(stats);
    }
    for (std::size_t k = 1; k < results.size(); ++k) {
        EXPECT_EQ(works[k], works[0]);
        for (const auto& [l, s] : results[0]) {
            EXPECT_EQ(results[k].at(l).sum(), s.sum());
            EXPECT_EQ(results[k].at(l).sum_sq(), s.sum_sq());
        }
    }
}

TEST(Sampler, TopUpExtendsSampleSequence) {
    const mimc::SyntheticModel model(mimc::SyntheticConfig{});
    const mimc::Sampler sampler(model, 3, 2);
    const MultiIndex l{1, 0, 1};
    mimc::StatsMap once, twice;
    sampler.top_up(once, {{l, 30}});
    sampler.top_up(twice, {{l, 10}});
    const double work = sampler.top_up(twice, {{l, 30}});
    EXPECT_EQ(work, 20 * mimc::delta_work(model, l));
    EXPECT_EQ(sampler.top_up(twice, {{l, 5}}), 0.0);
    EXPECT_EQ(twice.at(l).count(), 30u);
    EXPECT_NEAR(twice.at(l).sum(), once.at(l).sum(), 1e-13);
}
