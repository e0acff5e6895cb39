#include "helpers.hpp"
#include "waum/aggregation.hpp"

#include <doctest.h>

#include <cmath>

using namespace waum;

namespace {

CrowdDataset generative_ds(std::uint64_t seed, std::size_t n_task, std::size_t n_worker, std::size_t k, double diag,
                           std::vector<std::size_t>* truth_out = nullptr) {
    Rng rng(seed);
    const auto pi = ConfusionMatrix::symmetric(k, diag);
    std::vector<std::vector<Vote>> votes(n_task);
    std::vector<std::size_t> truth(n_task);
    for (std::size_t i = 0; i < n_task; ++i) {
        truth[i] = uniform_index(rng, k);
        for (std::size_t j = 0; j < n_worker; ++j) {
            std::vector<double> p(k);
            for (std::size_t c = 0; c < k; ++c) p[c] = pi(truth[i], c);
            std::discrete_distribution<std::size_t> draw(p.begin(), p.end());
            votes[i].push_back({j, draw(rng)});
        }
    }
    if (truth_out) *truth_out = truth;
    return CrowdDataset(std::move(votes), n_worker, k);
}

}  // namespace

TEST_CASE("majority vote") {
    const CrowdDataset d({{{0, 2}, {1, 2}, {2, 1}}, {{0, 1}, {1, 1}}}, 3, 3);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto mv = majority_vote(d, s);
        CHECK(mv[0].cls == 2);
        CHECK(mv[1].cls == 1);
    }
}

TEST_CASE("majority vote tie break is seeded and fair") {
    const CrowdDataset d({{{0, 0}, {1, 1}}}, 2, 2);
    CHECK(majority_vote(d, 17) == majority_vote(d, 17));
    std::size_t zeros = 0;
    for (std::uint64_t s = 0; s < 10000; ++s) zeros += majority_vote(d, s)[0].cls == 0 ? 1 : 0;
    CHECK(zeros >= 4700);
    CHECK(zeros <= 5300);
}

TEST_CASE("naive soft counts votes") {
    const CrowdDataset d({{{0, 0}, {1, 0}, {2, 1}}}, 3, 3);
    const auto ns = naive_soft(d);
    CHECK(ns[0][0] == doctest::Approx(2.0 / 3.0));
    CHECK(ns[0][1] == doctest::Approx(1.0 / 3.0));
    CHECK(ns[0][2] == 0.0);
    const CrowdDataset one({{{0, 2}}}, 1, 4);
    CHECK(naive_soft(one)[0].probs() == std::vector<double>{0, 0, 1, 0});
}

TEST_CASE("confusion matrix validation") {
    Matrix bad(2, 2);
    bad << 0.5, 0.6, 0.5, 0.5;
    CHECK_THROWS_AS(ConfusionMatrix{bad}, ValidationError);
    CHECK_THROWS_AS(ConfusionMatrix{Matrix::Constant(2, 3, 1.0 / 3.0)}, ValidationError);
    const auto s = ConfusionMatrix::symmetric(3, 0.7);
    CHECK(s(0, 0) == doctest::Approx(0.7));
    CHECK(s(0, 1) == doctest::Approx(0.15));
}

TEST_CASE("dawid skene with perfect workers") {
    const std::vector<std::size_t> truth{0, 1, 1, 0, 1, 1};
    std::vector<std::vector<Vote>> votes(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        for (std::size_t j = 0; j < 3; ++j) votes[i].push_back({j, truth[i]});
    }
    const CrowdDataset d(votes, 3, 2);
    const auto st = dawid_skene(d);
    for (const auto& pi : st.confusions) {
        CHECK(pi(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(pi(1, 1) == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(st.prevalence[0] == doctest::Approx(2.0 / 6.0).epsilon(1e-6));
    CHECK(st.prevalence[1] == doctest::Approx(4.0 / 6.0).epsilon(1e-6));
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK(st.posteriors[i][truth[i]] == doctest::Approx(1.0));
}

TEST_CASE("dawid skene recovers planted confusions") {
    const auto d = generative_ds(3, 500, 10, 3, 0.8);
    const auto st = dawid_skene(d);
    double dev = 0.0;
    for (const auto& pi : st.confusions) {
        for (std::size_t k = 0; k < 3; ++k) dev += std::abs(pi(k, k) - 0.8);
    }
    CHECK(dev / 30.0 <= 0.1);
    CHECK(st.converged);
}

TEST_CASE("dawid skene likelihood never decreases") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = testing_support::random_dataset(seed, 40, 5, 3);
        const auto st = dawid_skene(d);
        REQUIRE(!st.log_likelihood_history.empty());
        for (std::size_t t = 1; t < st.log_likelihood_history.size(); ++t) {
            CHECK(st.log_likelihood_history[t] >= st.log_likelihood_history[t - 1] - 1e-9);
        }
        CHECK(st.log_likelihood == doctest::Approx(ds_log_likelihood(d, st.confusions, st.prevalence)));
        for (const auto& pi : st.confusions) {
            for (Eigen::Index r = 0; r < 3; ++r) CHECK(pi.entries().row(r).sum() == doctest::Approx(1.0));
        }
        for (const auto& p : st.posteriors) {
            double s = 0.0;
            for (double v : p.probs()) s += v;
            CHECK(s == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("dawid skene is equivariant under task permutation") {
    const auto d = testing_support::random_dataset(21, 30, 4, 3);
    std::vector<std::size_t> order(d.n_task());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
    const auto a = dawid_skene(d);
    const auto b = dawid_skene(d.subset(order));
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t k = 0; k < 3; ++k) CHECK(b.posteriors[i][k] == doctest::Approx(a.posteriors[order[i]][k]));
    }
}

TEST_CASE("non convergence is a flag") {
    const auto d = generative_ds(5, 100, 4, 3, 0.6);
    EmConfig cfg;
    cfg.max_iter = 1;
    cfg.epsilon = 1e-300;
    const auto st = dawid_skene(d, cfg);
    CHECK_FALSE(st.converged);
    CHECK(st.iterations == 1);
}

TEST_CASE("weighted ds vote") {
    const CrowdDataset d({{{0, 0}, {1, 1}}}, 2, 2);
    Matrix a(2, 2);
    a << 0.9, 0.1, 0.2, 0.8;
    Matrix b(2, 2);
    b << 0.5, 0.5, 0.7, 0.3;
    const auto w = weighted_ds(d, {ConfusionMatrix(a), ConfusionMatrix(b)});
    CHECK(w[0][0] == doctest::Approx(0.75));
    CHECK(w[0][1] == doctest::Approx(0.25));

    const auto r = testing_support::random_dataset(8, 20, 4, 3);
    const std::vector<ConfusionMatrix> eye(4, ConfusionMatrix::identity(3));
    const auto ws = weighted_ds(r, eye);
    const auto ns = naive_soft(r);
    for (std::size_t i = 0; i < ws.size(); ++i) {
        for (std::size_t k = 0; k < 3; ++k) CHECK(ws[i][k] == doctest::Approx(ns[i][k]));
    }

    const CrowdDataset single({{{0, 1}}}, 1, 3);
    CHECK(weighted_ds(single, {ConfusionMatrix::symmetric(3, 0.4)})[0].probs() == std::vector<double>{0, 1, 0});
}

TEST_CASE("targets from labels") {
    const std::vector<Label> mixed{HardLabel{2}, SoftLabel({0.5, 0.5, 0.0, 0.0})};
    const Matrix t = aggregate_to_targets(mixed, 4);
    CHECK(t.rows() == 2);
    CHECK(t(0, 2) == 1.0);
    CHECK(t.row(0).sum() == 1.0);
    CHECK(t(1, 0) == 0.5);
    CHECK(t(1, 1) == 0.5);
    CHECK_THROWS_AS(aggregate_to_targets(std::vector<Label>{SoftLabel({0.5, 0.5})}, 3), DimensionError);
}

TEST_CASE("dawid skene is equivariant under worker relabelling") {
    const auto d = testing_support::random_dataset(31, 40, 4, 3);
    const std::vector<std::size_t> perm{2, 0, 3, 1};  // old worker j becomes perm[j]
    std::vector<std::vector<Vote>> votes;
    for (const auto& task : d.all_votes()) {
        std::vector<Vote> t;
        for (const Vote& v : task) t.push_back({perm[v.worker], v.label});
        votes.push_back(t);
    }
    const auto a = dawid_skene(d);
    const auto b = dawid_skene(CrowdDataset(votes, 4, 3));
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK((a.confusions[j].entries() - b.confusions[perm[j]].entries()).cwiseAbs().maxCoeff() < 1e-12);
    }
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.prevalence[k] == doctest::Approx(b.prevalence[k]));
    for (std::size_t i = 0; i < d.n_task(); ++i) CHECK(a.posteriors[i][0] == doctest::Approx(b.posteriors[i][0]));
}
