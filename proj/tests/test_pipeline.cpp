#include "helpers.hpp"
#include "waum/pipeline.hpp"
#include "waum/seeding.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>

using namespace waum;

namespace {

PipelineConfig quick(std::size_t repeat) {
    PipelineConfig cfg;
    cfg.protocol = "two_moons";
    cfg.repeat = repeat;
    cfg.identification_train.epochs = 4;
    cfg.classifier_train.epochs = 6;
    cfg.classifier_train.lr_decay_epochs = {3};
    cfg.master_seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("alpha zero is plain aggregation") {
    PipelineConfig cfg = quick(1);
    cfg.alphas = {0.0, 0.25};
    const auto res = run_pipeline(cfg);
    REQUIRE(res.runs.size() == 2);

    Scenario s = scenario_by_name("two_moons", derive_seed(5, "data", 0));
    const auto labels = aggregate(s.train, Strategy::wds, cfg.em, cfg.glad, derive_seed(5, "aggregate", 0));
    MlpSpec net = cfg.classifier_net;
    net.n_class = 2;
    net.seed = derive_seed(5, "classifier_net", 0);
    TrainConfig tc = cfg.classifier_train;
    tc.shuffle_seed = derive_seed(5, "classifier_shuffle", 0);
    const Mlp model = train(net, tc, s.train.features(), aggregate_to_targets(labels));
    std::vector<HardLabel> truth;
    for (std::size_t t : s.test_truth) truth.push_back(HardLabel{t});
    const double acc = accuracy(model.predict_proba(s.test_features), truth, derive_seed(5, "evaluate", 0));
    CHECK(res.runs[0].accuracy == acc);
    CHECK(res.runs[0].kept_tasks == s.train.n_task());
    CHECK(res.runs[1].kept_tasks < s.train.n_task());
}

TEST_CASE("repeat bookkeeping and JSON") {
    PipelineConfig cfg = quick(3);
    cfg.strategies = {Strategy::mv, Strategy::wds};
    cfg.alphas = {0.0, 0.1};
    const auto res = run_pipeline(cfg);
    CHECK(res.runs.size() == 3 * 2 * 2);
    REQUIRE(res.rows.size() == 4);
    CHECK(res.rows[0].strategy == Strategy::mv);
    CHECK(res.rows[1].alpha == 0.1);

    std::vector<double> acc;
    for (const auto& r : res.runs) {
        if (r.strategy == Strategy::wds && r.alpha == 0.1) acc.push_back(r.accuracy);
    }
    REQUIRE(acc.size() == 3);
    const double m = (acc[0] + acc[1] + acc[2]) / 3.0;
    double ss = 0.0;
    for (double a : acc) ss += (a - m) * (a - m);
    CHECK(res.rows[3].acc_mean == doctest::Approx(m));
    CHECK(res.rows[3].acc_std == doctest::Approx(std::sqrt(ss / 2.0)));

    const std::string text = results_to_json(res.rows);
    const auto doc = nlohmann::json::parse(text);
    REQUIRE(doc.size() == 4);
    CHECK(doc[3]["strategy"] == "wds");
    CHECK(text.back() == '\n');
    CHECK(text.find("\"alpha\": 0.1000") != std::string::npos);
    CHECK(run_pipeline(cfg).rows.size() == 4);
    CHECK(results_to_json(run_pipeline(cfg).rows) == text);
}

TEST_CASE("pipeline input validation") {
    PipelineConfig cfg = quick(1);
    cfg.alphas = {1.5};
    CHECK_THROWS_AS(run_pipeline(cfg), ValidationError);
    cfg = quick(0);
    CHECK_THROWS_AS(run_pipeline(cfg), ValidationError);
    cfg = quick(1);
    cfg.protocol = "planted_corruption";
    CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("load"), ValidationError);
    CHECK(strategy_from_string("glad") == Strategy::glad);
    CHECK_THROWS_AS(strategy_from_string("em"), ValidationError);
}

TEST_CASE("pipeline from files") {
    const auto dir = testing_support::scratch_dir("pipeline_files");
    const Scenario s = two_moons(3);
    save_votes(s.train, dir / "votes.json");
    save_features(s.train.features(), dir / "features.csv");
    save_features(s.test_features, dir / "test_features.csv");
    save_ground_truth(s.test_truth, dir / "test_truth.csv");
    PipelineConfig cfg = quick(1);
    cfg.files = FileSources{dir / "votes.json", dir / "features.csv", dir / "test_features.csv", dir / "test_truth.csv", 2};
    cfg.alphas = {0.0};
    const auto res = run_pipeline(cfg);
    CHECK(res.rows.size() == 1);
    CHECK(res.rows[0].acc_mean > 0.5);
}
