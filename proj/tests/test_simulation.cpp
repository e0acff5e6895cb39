#include "waum/simulation.hpp"

#include <doctest.h>

#include <algorithm>

using namespace waum;

TEST_CASE("circles split sizes") {
    SyntheticSpec spec;
    spec.n_task = 750;
    spec.test_fraction = 0.3;
    const auto s = generate_tasks(spec);
    CHECK(s.train_features.rows() == 525);
    CHECK(s.test_features.rows() == 225);
    CHECK(s.train_truth.size() == 525);
    CHECK(s.test_truth.size() == 225);
}

TEST_CASE("generation is deterministic") {
    for (Generator g : {Generator::circles, Generator::moons, Generator::blobs}) {
        SyntheticSpec spec;
        spec.generator = g;
        spec.n_task = 100;
        spec.seed = 12;
        const auto a = generate_tasks(spec);
        const auto b = generate_tasks(spec);
        CHECK(a.train_features == b.train_features);
        CHECK(a.train_truth == b.train_truth);
        CHECK(a.test_features == b.test_features);
        spec.seed = 13;
        CHECK_FALSE(generate_tasks(spec).train_features == a.train_features);
    }
    CHECK(generator_from_string(to_string(Generator::moons)) == Generator::moons);
    CHECK_THROWS_AS(generator_from_string("spirals"), ValidationError);
}

TEST_CASE("a linear worker nails separated blobs") {
    SyntheticSpec spec;
    spec.generator = Generator::blobs;
    spec.n_class = 3;
    spec.n_task = 300;
    spec.noise = 0.5;
    spec.spread = 6.0;
    spec.test_fraction = 0.0;
    const auto s = generate_tasks(spec);
    WorkerSpec w;
    w.kind = WorkerKind::weak_linear;
    const auto ans = worker_answers(w, s.train_features, s.train_truth, 3, 0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ans.size(); ++i) hits += ans[i] == s.train_truth[i] ? 1 : 0;
    CHECK(static_cast<double>(hits) / static_cast<double>(ans.size()) >= 0.95);
}

TEST_CASE("confusion workers") {
    SyntheticSpec spec;
    spec.n_task = 10000;
    spec.test_fraction = 0.0;
    const auto s = generate_tasks(spec);
    WorkerSpec eye;
    eye.confusion = ConfusionMatrix::identity(3);
    CHECK(worker_answers(eye, s.train_features, s.train_truth, 3, 1) == s.train_truth);

    WorkerSpec flat;
    flat.confusion = ConfusionMatrix::uniform(3);
    const auto ans = worker_answers(flat, s.train_features, s.train_truth, 3, 1);
    for (std::size_t k = 0; k < 3; ++k) {
        const double f = static_cast<double>(std::count(ans.begin(), ans.end(), k)) / 10000.0;
        CHECK(std::abs(f - 1.0 / 3.0) <= 0.05);
    }
}

TEST_CASE("vote assignment") {
    SyntheticSpec spec;
    spec.n_task = 200;
    spec.test_fraction = 0.0;
    const auto s = generate_tasks(spec);
    std::vector<WorkerSpec> workers(3);
    for (auto& w : workers) w.confusion = ConfusionMatrix::symmetric(3, 0.7);
    const auto full = simulate_votes(s.train_features, s.train_truth, 3, workers, {3, 3}, 0);
    for (const auto& a : annotator_sets(full)) CHECK(a.size() == 3);
    const auto sparse = simulate_votes(s.train_features, s.train_truth, 3, workers, {1, 2}, 0);
    for (const auto& a : annotator_sets(sparse)) {
        CHECK(a.size() >= 1);
        CHECK(a.size() <= 2);
    }
    CHECK(votes_to_json(sparse) == votes_to_json(simulate_votes(s.train_features, s.train_truth, 3, workers, {1, 2}, 0)));
    CHECK_THROWS_AS(simulate_votes(s.train_features, s.train_truth, 3, workers, {2, 4}, 0), ValidationError);
}

TEST_CASE("workers from JSON") {
    const auto w = parse_workers(R"([{"kind":"confusion","diag":0.6},{"kind":"weak_boosted","n_stumps":3,"seed":9},
                                    {"kind":"confusion","confusion":[[1,0],[0.5,0.5]]}])",
                                 2);
    REQUIRE(w.size() == 3);
    CHECK(w[0].confusion(0, 0) == doctest::Approx(0.6));
    CHECK(w[1].kind == WorkerKind::weak_boosted);
    CHECK(w[1].n_stumps == 3);
    CHECK(w[1].seed == 9);
    CHECK(w[2].confusion(1, 0) == 0.5);
    CHECK_THROWS_AS(parse_workers("[", 2), ParseError);
    CHECK_THROWS_AS(parse_workers(R"([{"kind":"confusion","confusion":[[1,0,0]]}])", 2), ValidationError);
}

TEST_CASE("protocols") {
    const auto tc = three_circles(0);
    CHECK(tc.train.n_task() == 525);
    CHECK(tc.test_truth.size() == 225);
    CHECK(tc.train.n_worker() == 3);
    for (const auto& a : annotator_sets(tc.train)) CHECK(a.size() == 3);
    CHECK(std::count(tc.planted.begin(), tc.planted.end(), true) > 0);

    const auto pc = planted_corruption(1);
    CHECK(pc.train.n_task() == 200);
    CHECK(std::count(pc.planted.begin(), pc.planted.end(), true) == 10);
    for (std::size_t i = 0; i < 200; ++i) {
        if (!pc.planted[i]) continue;
        for (const auto& v : pc.train.votes(i)) CHECK(v.label != pc.train_truth[i]);
    }

    const auto mw = many_workers(2);
    CHECK(mw.train.n_worker() == 30);
    CHECK(mw.train.n_class() == 4);
    CHECK_THROWS_AS(scenario_by_name("nope", 0), ValidationError);
}
