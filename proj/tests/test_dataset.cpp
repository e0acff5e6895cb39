#include "helpers.hpp"
#include "waum/dataset.hpp"

#include <doctest.h>

#include <numeric>

using namespace waum;

TEST_CASE("votes file structure") {
    const auto d = parse_votes(R"({"0":{"0":1,"2":1},"1":{"1":0}})", 2);
    CHECK(d.n_task() == 2);
    CHECK(d.n_worker() == 3);
    CHECK(d.n_votes() == 3);
    const auto A = annotator_sets(d);
    const auto T = task_sets(d);
    CHECK(A[0] == std::vector<std::size_t>{0, 2});
    CHECK(A[1] == std::vector<std::size_t>{1});
    CHECK(T[1] == std::vector<std::size_t>{1});
}

TEST_CASE("rejects bad votes") {
    CHECK_THROWS_WITH_AS(parse_votes("{}", 2), doctest::Contains("no tasks"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_votes(R"({"0":{"0":5}})", 3), doctest::Contains("5"), ValidationError);
    CHECK_THROWS_AS(parse_votes(R"({"0":{}})", 3), ValidationError);
    CHECK_THROWS_AS(parse_votes(R"({"0":{"0":1},"2":{"0":1}})", 3), ValidationError);  // task 1 has no votes
    CHECK_THROWS_AS(parse_votes(R"({"0":{"x":1}})", 3), ValidationError);
    CHECK_THROWS_AS(parse_votes(R"({"0":{"0":-1}})", 3), ValidationError);
    CHECK_THROWS_AS(CrowdDataset({{{0, 1}, {0, 0}}}, 1, 2), ValidationError);  // worker twice on one task
    CHECK_THROWS_AS(CrowdDataset({{{3, 1}}}, 2, 2), ValidationError);
}

TEST_CASE("malformed JSON names the line") {
    const std::string text = "{\n\"0\": {\"0\": 1},\n\"1\": {\"0\" 1}\n}";
    CHECK_THROWS_WITH_AS(parse_votes(text, 2), doctest::Contains("line 3"), ParseError);
}

TEST_CASE("figure-one style annotator and task sets") {
    // worker 3 answered tasks 1 and 3; task 3 was answered by workers 1, 3, 4
    std::vector<std::vector<Vote>> votes{
        {{0, 0}, {1, 1}},
        {{2, 0}, {3, 1}},
        {{0, 1}, {4, 0}},
        {{1, 0}, {3, 0}, {4, 1}},
    };
    const CrowdDataset d(votes, 5, 2);
    CHECK(task_sets(d)[3] == std::vector<std::size_t>{1, 3});
    CHECK(annotator_sets(d)[3] == std::vector<std::size_t>{1, 3, 4});
}

TEST_CASE("small structural cases") {
    const CrowdDataset one({{{0, 0}}}, 1, 2);
    CHECK(annotator_sets(one)[0] == std::vector<std::size_t>{0});
    CHECK(task_sets(one)[0] == std::vector<std::size_t>{0});

    const CrowdDataset full({{{0, 0}, {1, 1}}, {{0, 1}, {1, 1}}, {{1, 0}, {0, 0}}}, 2, 2);
    for (const auto& a : annotator_sets(full)) CHECK(a.size() == 2);
    for (const auto& t : task_sets(full)) CHECK(t.size() == 3);
}

TEST_CASE("annotator and task sets are inverse") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = testing_support::random_dataset(seed, 30, 7, 3);
        const auto A = annotator_sets(d);
        const auto T = task_sets(d);
        std::size_t sum_a = 0;
        std::size_t sum_t = 0;
        for (const auto& a : A) sum_a += a.size();
        for (const auto& t : T) sum_t += t.size();
        CHECK(sum_a == d.n_votes());
        CHECK(sum_t == d.n_votes());
        for (std::size_t i = 0; i < A.size(); ++i) {
            for (std::size_t j : A[i]) CHECK(std::binary_search(T[j].begin(), T[j].end(), i));
        }
    }
}

TEST_CASE("canonical round trip") {
    const auto d = testing_support::random_dataset(4, 25, 6, 4, 3);
    const std::string canonical = votes_to_json(d);
    CHECK(votes_to_json(parse_votes(canonical, 4)) == canonical);

    const auto dir = testing_support::scratch_dir("roundtrip");
    save_votes(d, dir / "votes.json");
    save_features(d.features(), dir / "features.csv");
    const auto back = load_dataset(dir / "votes.json", dir / "features.csv", 4);
    CHECK(back == d);
    CHECK(read_text_file(dir / "votes.json") == canonical);

    save_ground_truth({2, 0, 1}, dir / "truth.csv");
    CHECK(load_ground_truth(dir / "truth.csv", 3) == std::vector<std::size_t>{2, 0, 1});
    CHECK_THROWS_AS(load_ground_truth(dir / "truth.csv", 2), ValidationError);
}

TEST_CASE("feature rows must cover every task") {
    const auto dir = testing_support::scratch_dir("features");
    write_text_file(dir / "votes.json", R"({"0":{"0":1},"1":{"0":0},"2":{"1":1}})");
    write_text_file(dir / "short.csv", "0.5,1\n1,2\n");
    write_text_file(dir / "long.csv", "0.5,1\n1,2\n3,4\n5,6\n");
    CHECK_THROWS_AS(load_dataset(dir / "votes.json", dir / "short.csv", 2), DimensionError);
    const auto d = load_dataset(dir / "votes.json", dir / "long.csv", 2);
    CHECK(d.features().rows() == 3);
    CHECK(d.features()(2, 1) == 4.0);
    CHECK_THROWS_AS(parse_features_csv("1,2\n3\n"), DimensionError);
    CHECK_THROWS_AS(parse_features_csv("1,abc\n"), ParseError);
}

TEST_CASE("subset re-indexes tasks and keeps workers") {
    const auto d = testing_support::random_dataset(9, 10, 4, 3, 2);
    const auto s = d.subset({7, 2});
    CHECK(s.n_task() == 2);
    CHECK(s.n_worker() == d.n_worker());
    CHECK(s.votes(0) == d.votes(7));
    CHECK(s.votes(1) == d.votes(2));
    CHECK(s.features().row(0) == d.features().row(7));
}

TEST_CASE("soft labels live on the simplex") {
    CHECK_NOTHROW(SoftLabel({0.25, 0.75}));
    CHECK_THROWS_AS(SoftLabel({0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(SoftLabel({-0.1, 1.1}), ValidationError);
    CHECK(SoftLabel::one_hot(2, 4).probs() == std::vector<double>{0, 0, 1, 0});
    CHECK(SoftLabel::normalized({1, 3})[1] == doctest::Approx(0.75));
}
