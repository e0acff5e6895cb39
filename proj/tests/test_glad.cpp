#include "helpers.hpp"
#include "waum/glad.hpp"

#include <doctest.h>

#include <cmath>

using namespace waum;

namespace {

// Worker 0 copies the truth, worker 1 flips it, worker 2 is right 80% of the time.
CrowdDataset flipping_crowd(std::uint64_t seed) {
    Rng rng(seed);
    std::bernoulli_distribution good(0.8);
    std::vector<std::vector<Vote>> votes(200);
    for (auto& v : votes) {
        const std::size_t truth = uniform_index(rng, 2);
        v = {{0, truth}, {1, 1 - truth}, {2, good(rng) ? truth : 1 - truth}};
    }
    return CrowdDataset(std::move(votes), 3, 2);
}

}  // namespace

TEST_CASE("first E-step with unit parameters") {
    const CrowdDataset d({{{0, 1}}}, 1, 2);
    const GladParams p{{1.0}, {0.0}};
    const auto post = glad_posteriors(d, p);
    CHECK(post[0][1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
    CHECK(post[0][1] == doctest::Approx(0.731).epsilon(1e-3));
}

TEST_CASE("adversarial worker gets negative ability") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto st = glad(flipping_crowd(seed));
        CHECK(st.abilities[0] > 0.0);
        CHECK(st.abilities[1] < 0.0);
        for (double b : st.difficulties) CHECK(b > 0.0);
    }
}

TEST_CASE("GLAD likelihood never decreases") {
    std::vector<std::vector<Vote>> votes(30);
    for (std::size_t i = 0; i < votes.size(); ++i) {
        for (std::size_t j = 0; j < 4; ++j) votes[i].push_back({j, i % 3});
    }
    const CrowdDataset consistent(votes, 4, 3);
    for (const auto& d : {consistent, testing_support::random_dataset(2, 40, 5, 3)}) {
        const auto st = glad(d);
        REQUIRE(st.log_likelihood_history.size() >= 2);
        for (std::size_t t = 1; t < st.log_likelihood_history.size(); ++t) {
            CHECK(st.log_likelihood_history[t] >= st.log_likelihood_history[t - 1] - 1e-7);
        }
        CHECK_FALSE(st.numerically_failed);
    }
}

TEST_CASE("auxiliary gradient matches finite differences") {
    const auto d = testing_support::random_dataset(11, 15, 4, 3);
    Rng rng(5);
    std::normal_distribution<double> gauss(0.0, 0.5);
    GladParams p;
    for (std::size_t j = 0; j < d.n_worker(); ++j) p.alpha.push_back(1.0 + gauss(rng));
    for (std::size_t i = 0; i < d.n_task(); ++i) p.log_beta.push_back(gauss(rng));
    const auto post = glad_posteriors(d, p);
    const auto g = glad_auxiliary_gradient(d, post, p);
    const double h = 1e-6;
    auto check = [&](std::vector<double>& slot, const std::vector<double>& analytic) {
        for (std::size_t k = 0; k < slot.size(); ++k) {
            const double saved = slot[k];
            slot[k] = saved + h;
            const double up = glad_auxiliary(d, post, p);
            slot[k] = saved - h;
            const double down = glad_auxiliary(d, post, p);
            slot[k] = saved;
            const double fd = (up - down) / (2 * h);
            CHECK(std::abs(fd - analytic[k]) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
    };
    check(p.alpha, g.alpha);
    check(p.log_beta, g.log_beta);
}
