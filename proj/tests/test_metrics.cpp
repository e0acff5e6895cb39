#include "waum/metrics.hpp"
#include "waum/seeding.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace waum;

namespace {

std::vector<HardLabel> labels(std::initializer_list<std::size_t> c) {
    std::vector<HardLabel> out;
    for (std::size_t k : c) out.push_back(HardLabel{k});
    return out;
}

}  // namespace

TEST_CASE("accuracy") {
    Matrix one_hot(3, 3);
    one_hot << 1, 0, 0, 0, 0, 1, 0, 1, 0;
    CHECK(accuracy(one_hot, labels({0, 2, 1})) == 1.0);
    CHECK(accuracy(one_hot, labels({1, 0, 0})) == 0.0);
    CHECK_THROWS_AS(accuracy(one_hot, labels({0, 1})), DimensionError);
    CHECK_THROWS_AS(accuracy(one_hot, labels({0, 1, 3})), ValidationError);
}

TEST_CASE("uniform predictions score about one half") {
    const Matrix u = Matrix::Constant(2000, 2, 0.5);
    std::vector<HardLabel> truth;
    for (std::size_t i = 0; i < 2000; ++i) truth.push_back(HardLabel{i % 2});
    for (std::uint64_t s = 0; s < 5; ++s) CHECK(accuracy(u, truth, s) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(accuracy(u, truth, 3) == accuracy(u, truth, 3));
}

TEST_CASE("ECE hand cases") {
    Matrix perfect(2, 2);
    perfect << 1, 0, 0, 1;
    CHECK(ece(perfect, labels({0, 1})) == 0.0);

    Matrix p(2, 2);
    p << 0.8, 0.2, 0.8, 0.2;
    CHECK(std::abs(ece(p, labels({0, 1})) - 0.3) < 1e-12);
}

TEST_CASE("ECE bin edges") {
    // confidence exactly 1 lands in the last bin, 1/M in the first
    Matrix p(2, 2);
    p << 1.0, 0.0, 0.5, 0.5;
    EceConfig cfg{2, 0};
    // sample 0: bin 2, conf 1, correct -> 0; sample 1: bin 1, conf 0.5
    const double e = ece(p, labels({0, 0}), cfg);
    const auto arg = seeded_argmax(p, 0);
    const double hit = arg[1] == 0 ? 1.0 : 0.0;
    CHECK(e == doctest::Approx(0.5 * std::abs(hit - 0.5)));
}

TEST_CASE("ECE ignores sample order") {
    Rng rng(4);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix p(50, 3);
    std::vector<HardLabel> truth;
    for (Eigen::Index i = 0; i < 50; ++i) {
        for (Eigen::Index k = 0; k < 3; ++k) p(i, k) = unif(rng);
        p.row(i) /= p.row(i).sum();
        truth.push_back(HardLabel{uniform_index(rng, 3)});
    }
    std::vector<Eigen::Index> order(50);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Matrix q(50, 3);
    std::vector<HardLabel> t2;
    for (Eigen::Index i = 0; i < 50; ++i) {
        q.row(i) = p.row(order[static_cast<std::size_t>(i)]);
        t2.push_back(truth[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    }
    CHECK(ece(p, truth) == ece(q, t2));
    const double e = ece(p, truth);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
}
