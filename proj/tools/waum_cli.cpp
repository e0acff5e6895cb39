// waum: command-line front end for aggregation, ambiguity identification,
// pruning, training and evaluation.

#include "waum/pipeline.hpp"
#include "waum/seeding.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool quiet = false;
};

void say(const Globals& g, const std::string& line) {
    if (!g.quiet) std::cout << line << '\n';
}

fs::path output_path(const Globals& g, const std::string& given, const std::string& fallback) {
    return given.empty() ? fs::path(g.out_dir) / fallback : fs::path(given);
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const unsigned long v = std::stoul(item, &used);
            if (used != item.size() || v == 0) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw waum::ValidationError("bad layer size \"" + item + "\" in --spec");
        }
    }
    return out;
}

std::string labels_to_json(const std::vector<waum::SoftLabel>& labels) {
    json out = json::array();
    for (const auto& l : labels) out.push_back(l.probs());
    return out.dump() + "\n";
}

std::vector<waum::SoftLabel> load_labels(const fs::path& path) {
    const std::string text = waum::read_text_file(path);
    std::vector<waum::SoftLabel> out;
    try {
        for (const auto& row : json::parse(text)) out.emplace_back(row.get<std::vector<double>>());
    } catch (const json::exception& e) {
        throw waum::ParseError(path.string() + ": " + e.what());
    }
    if (out.empty()) throw waum::ValidationError(path.string() + ": no labels");
    return out;
}

waum::Matrix load_matrix_json(const fs::path& path) {
    const auto labels = load_labels(path);
    waum::Matrix m(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(labels.front().size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].size() != labels.front().size()) throw waum::DimensionError(path.string() + ": rows differ in length");
        for (std::size_t k = 0; k < labels[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = labels[i][k];
    }
    return m;
}

std::string matrix_to_json(const waum::Matrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
        out.push_back(row);
    }
    return out.dump() + "\n";
}

void write_scenario(const waum::Scenario& s, const fs::path& dir) {
    waum::save_votes(s.train, dir / "votes.json");
    waum::save_features(s.train.features(), dir / "features.csv");
    waum::save_ground_truth(s.train_truth, dir / "truth.csv");
    if (!s.test_truth.empty()) {
        waum::save_features(s.test_features, dir / "test_features.csv");
        waum::save_ground_truth(s.test_truth, dir / "test_truth.csv");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crowdsourced label aggregation and ambiguous task identification"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Directory for default output files")->capture_default_str();
    app.add_flag("--quiet", g.quiet, "Print nothing on success");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate tasks and simulated votes");
    sim->fallthrough();
    std::string sim_protocol, sim_generator = "circles", sim_workers;
    std::size_t sim_n_task = 750, sim_n_class = 3, sim_votes_min = 0, sim_votes_max = 0;
    double sim_noise = 0.05, sim_test_fraction = 0.3;
    sim->add_option("--protocol", sim_protocol, "three_circles | two_moons | many_workers | planted_corruption");
    sim->add_option("--generator", sim_generator, "circles | moons | blobs")->capture_default_str();
    sim->add_option("--n-task", sim_n_task)->capture_default_str();
    sim->add_option("--n-class", sim_n_class)->capture_default_str();
    sim->add_option("--noise", sim_noise)->capture_default_str();
    sim->add_option("--test-fraction", sim_test_fraction)->capture_default_str();
    sim->add_option("--workers", sim_workers, "Worker specs (JSON)");
    sim->add_option("--votes-min", sim_votes_min, "Default: every worker answers every task");
    sim->add_option("--votes-max", sim_votes_max);

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "Aggregate votes into labels");
    agg->fallthrough();
    std::string agg_strategy, agg_votes, agg_out, agg_dump;
    std::size_t agg_n_class = 0;
    waum::EmConfig em;
    waum::GladConfig glad_cfg;
    agg->add_option("--strategy", agg_strategy, "mv | ns | ds | wds | glad")->required();
    agg->add_option("--votes", agg_votes)->required();
    agg->add_option("--n-class", agg_n_class)->required();
    agg->add_option("--epsilon", em.epsilon)->capture_default_str();
    agg->add_option("--max-iter", em.max_iter)->capture_default_str();
    agg->add_option("--out", agg_out, "Default: <out-dir>/labels.json");
    agg->add_option("--dump-params", agg_dump, "Write fitted worker/task parameters (ds, wds, glad)");

    // train
    auto* trn = app.add_subcommand("train", "Train the classifier on soft labels");
    trn->fallthrough();
    std::string trn_labels, trn_features, trn_spec = "30,20,20", trn_trace, trn_test, trn_pred;
    waum::TrainConfig trn_cfg;
    trn->add_option("--labels", trn_labels, "JSON array of K-vectors")->required();
    trn->add_option("--features", trn_features, "CSV")->required();
    trn->add_option("--spec", trn_spec, "Hidden layer sizes")->capture_default_str();
    trn->add_option("--epochs", trn_cfg.epochs)->capture_default_str();
    trn->add_option("--batch-size", trn_cfg.batch_size)->capture_default_str();
    trn->add_option("--lr", trn_cfg.learning_rate)->capture_default_str();
    trn->add_option("--trace-out", trn_trace, "Softmax trace (JSON)");
    trn->add_option("--test-features", trn_test);
    trn->add_option("--pred-out", trn_pred, "Default: <out-dir>/predictions.json");

    // identify
    auto* idf = app.add_subcommand("identify", "Score and prune ambiguous tasks");
    idf->fallthrough();
    std::string idf_method = "waum", idf_votes, idf_features, idf_out;
    std::size_t idf_n_class = 0;
    double idf_alpha = 0.1;
    waum::TrainConfig idf_cfg;
    std::string idf_spec = "30,20,20";
    idf->add_option("--method", idf_method, "aum | aumc | waum | waum-ww")->capture_default_str();
    idf->add_option("--votes", idf_votes)->required();
    idf->add_option("--features", idf_features)->required();
    idf->add_option("--n-class", idf_n_class)->required();
    idf->add_option("--alpha", idf_alpha)->capture_default_str();
    idf->add_option("--epochs", idf_cfg.epochs)->capture_default_str();
    idf->add_option("--spec", idf_spec)->capture_default_str();
    idf->add_option("--out", idf_out, "Default: <out-dir>/report.json");

    // evaluate
    auto* evl = app.add_subcommand("evaluate", "Accuracy and calibration of predictions");
    evl->fallthrough();
    std::string evl_pred, evl_truth, evl_out;
    waum::EceConfig ece_cfg;
    evl->add_option("--pred", evl_pred, "JSON array of K-vectors")->required();
    evl->add_option("--truth", evl_truth, "One class per line")->required();
    evl->add_option("--bins", ece_cfg.n_bins)->capture_default_str();
    evl->add_option("--out", evl_out, "Default: <out-dir>/evaluation.json");

    // pipeline
    auto* pip = app.add_subcommand("pipeline", "Identify, prune, aggregate, retrain and evaluate over repetitions");
    pip->fallthrough();
    waum::PipelineConfig pcfg;
    std::vector<std::string> pip_strategies{"wds"};
    std::string pip_method = "waum", pip_out;
    std::string pip_votes, pip_features, pip_test_features, pip_test_truth;
    std::size_t pip_n_class = 0;
    pip->add_option("--protocol", pcfg.protocol)->capture_default_str();
    pip->add_option("--votes", pip_votes, "Use files instead of a protocol");
    pip->add_option("--features", pip_features);
    pip->add_option("--test-features", pip_test_features);
    pip->add_option("--test-truth", pip_test_truth);
    pip->add_option("--n-class", pip_n_class);
    pip->add_option("--strategy", pip_strategies, "mv | ns | ds | wds | glad")->delimiter(',')->capture_default_str();
    pip->add_option("--alpha", pcfg.alphas, "Pruning fractions")->delimiter(',')->capture_default_str();
    pip->add_option("--method", pip_method, "aum | aumc | waum | waum-ww")->capture_default_str();
    pip->add_option("--repeat", pcfg.repeat)->capture_default_str();
    pip->add_option("--identification-epochs", pcfg.identification_train.epochs)->capture_default_str();
    pip->add_option("--out", pip_out, "Default: <out-dir>/results.json");

    // repro-three-circles
    auto* rep = app.add_subcommand("repro-three-circles", "WDS with and without pruning on the three_circles protocol");
    rep->fallthrough();
    std::size_t rep_repeat = 10;
    std::string rep_out;
    rep->add_option("--repeat", rep_repeat)->capture_default_str();
    rep->add_option("--out", rep_out, "Default: <out-dir>/results.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (sim->parsed()) {
            const waum::Scenario s = [&] {
                if (!sim_protocol.empty()) return waum::scenario_by_name(sim_protocol, g.seed);
                if (sim_workers.empty()) throw waum::ValidationError("simulate needs --protocol or --workers");
                waum::SyntheticSpec spec;
                spec.generator = waum::generator_from_string(sim_generator);
                spec.n_task = sim_n_task;
                spec.n_class = spec.generator == waum::Generator::moons ? 2 : sim_n_class;
                spec.noise = sim_noise;
                spec.test_fraction = sim_test_fraction;
                spec.seed = waum::derive_seed(g.seed, "tasks", 0);
                const auto split = waum::generate_tasks(spec);
                const auto workers = waum::parse_workers(waum::read_text_file(sim_workers), spec.n_class);
                const std::size_t lo = sim_votes_min == 0 ? workers.size() : sim_votes_min;
                const std::size_t hi = sim_votes_max == 0 ? std::max(lo, workers.size()) : sim_votes_max;
                return waum::Scenario{"custom",
                                      waum::simulate_votes(split.train_features, split.train_truth, spec.n_class, workers,
                                                           {lo, hi}, waum::derive_seed(g.seed, "votes", 0)),
                                      split.train_truth,
                                      split.test_features,
                                      split.test_truth,
                                      {}};
            }();
            write_scenario(s, g.out_dir);
            say(g, "wrote " + std::to_string(s.train.n_task()) + " tasks, " + std::to_string(s.train.n_votes()) +
                       " votes to " + g.out_dir);
        } else if (agg->parsed()) {
            const auto d = waum::load_votes(agg_votes, agg_n_class);
            const auto strategy = waum::strategy_from_string(agg_strategy);
            std::vector<waum::SoftLabel> labels;
            json params;
            if (strategy == waum::Strategy::ds || strategy == waum::Strategy::wds) {
                const auto ds = waum::dawid_skene(d, em);
                labels = strategy == waum::Strategy::ds ? ds.posteriors : waum::weighted_ds(d, ds.confusions);
                params["prevalence"] = ds.prevalence.probs();
                params["confusions"] = json::array();
                for (const auto& c : ds.confusions) params["confusions"].push_back(json::parse(matrix_to_json(c.entries())));
                params["iterations"] = ds.iterations;
                params["converged"] = ds.converged;
                params["log_likelihood"] = ds.log_likelihood;
                if (!ds.converged) std::cerr << "warning: EM stopped after " << ds.iterations << " iterations without converging\n";
            } else if (strategy == waum::Strategy::glad) {
                const auto state = waum::glad(d, glad_cfg);
                if (state.numerically_failed) throw waum::NumericalError("GLAD produced a non-finite likelihood");
                labels = state.posteriors;
                params["alpha"] = state.abilities;
                params["beta"] = state.difficulties;
                params["iterations"] = state.iterations;
                params["converged"] = state.converged;
                params["log_likelihood"] = state.log_likelihood;
            } else {
                labels = waum::aggregate(d, strategy, em, glad_cfg, g.seed);
            }
            const fs::path out = output_path(g, agg_out, "labels.json");
            waum::write_text_file(out, labels_to_json(labels));
            if (!agg_dump.empty()) {
                if (params.is_null()) throw waum::ValidationError("--dump-params needs ds, wds or glad");
                waum::write_text_file(agg_dump, params.dump(2) + "\n");
            }
            say(g, "wrote " + std::to_string(labels.size()) + " labels to " + out.string());
        } else if (trn->parsed()) {
            const waum::Matrix targets = load_matrix_json(trn_labels);
            const waum::Matrix features = waum::load_features(trn_features);
            if (features.rows() != targets.rows()) throw waum::DimensionError("labels and features differ in length");
            waum::MlpSpec spec;
            spec.input_dim = static_cast<std::size_t>(features.cols());
            spec.hidden_sizes = parse_sizes(trn_spec);
            spec.n_class = static_cast<std::size_t>(targets.cols());
            spec.seed = waum::derive_seed(g.seed, "train_net", 0);
            trn_cfg.shuffle_seed = waum::derive_seed(g.seed, "train_shuffle", 0);
            const auto result = waum::train_with_trace(spec, trn_cfg, features, targets, features);
            if (!trn_trace.empty()) {
                const auto& t = result.trace;
                json trace{{"T", t.epochs()}, {"n_task", t.n_task()}, {"K", t.n_class()}, {"softmax", t.data()}};
                waum::write_text_file(trn_trace, trace.dump() + "\n");
            }
            if (!trn_test.empty()) {
                const fs::path out = output_path(g, trn_pred, "predictions.json");
                waum::write_text_file(out, matrix_to_json(result.model.predict_proba(waum::load_features(trn_test))));
                say(g, "wrote predictions to " + out.string());
            }
            say(g, "trained " + std::to_string(result.model.parameter_count()) + " parameters for " +
                       std::to_string(trn_cfg.epochs) + " epochs");
        } else if (idf->parsed()) {
            const auto d = waum::load_dataset(idf_votes, idf_features, idf_n_class);
            const auto method = waum::identification_method_from_string(idf_method);
            waum::MlpSpec spec;
            spec.hidden_sizes = parse_sizes(idf_spec);
            spec.seed = waum::derive_seed(g.seed, "identification_net", 0);
            idf_cfg.shuffle_seed = waum::derive_seed(g.seed, "identification_shuffle", 0);
            const auto report = waum::identify(d, method, idf_alpha, spec, idf_cfg, em,
                                               waum::derive_seed(g.seed, "identification_mv", 0));
            json out{{"method", waum::to_string(report.method)},
                     {"alpha", report.alpha},
                     {"threshold", report.threshold},
                     {"scores", report.scores},
                     {"fallback_tasks", report.fallback_tasks},
                     {"training_runs", report.training_runs}};
            json pruned = json::array();
            for (std::size_t i = 0; i < report.pruned_mask.size(); ++i) {
                if (report.pruned_mask[i]) pruned.push_back(i);
            }
            out["pruned"] = pruned;
            json aums = json::array();
            for (const auto& [key, v] : report.per_vote_aum) aums.push_back({{"task", key.task}, {"worker", key.worker}, {"aum", v}});
            out["per_vote_aum"] = aums;
            json trust = json::array();
            for (const auto& [key, v] : report.trust) trust.push_back({{"task", key.task}, {"worker", key.worker}, {"trust", v}});
            out["trust"] = trust;
            for (std::size_t i : report.fallback_tasks) {
                std::cerr << "warning: task " << i << " has zero total trust, used the unweighted mean\n";
            }
            const fs::path path = output_path(g, idf_out, "report.json");
            waum::write_text_file(path, out.dump(2) + "\n");
            say(g, "pruned " + std::to_string(pruned.size()) + " of " + std::to_string(d.n_task()) + " tasks (q = " +
                       std::to_string(report.threshold) + "), report in " + path.string());
        } else if (evl->parsed()) {
            const waum::Matrix pred = load_matrix_json(evl_pred);
            std::vector<waum::HardLabel> truth;
            for (std::size_t t : waum::load_ground_truth(evl_truth, static_cast<std::size_t>(pred.cols()))) truth.push_back({t});
            ece_cfg.seed = g.seed;
            const double acc = waum::accuracy(pred, truth, g.seed);
            const double e = waum::ece(pred, truth, ece_cfg);
            char line[160];
            std::snprintf(line, sizeof line, "accuracy=%.4f, ece=%.4f, one_minus_ece=%.4f", acc, e, 1.0 - e);
            if (!g.quiet) std::cout << line << '\n';
            const json out{{"accuracy", acc}, {"ece", e}, {"one_minus_ece", 1.0 - e}, {"n_bins", ece_cfg.n_bins}};
            waum::write_text_file(output_path(g, evl_out, "evaluation.json"), out.dump(2) + "\n");
        } else if (pip->parsed() || rep->parsed()) {
            std::string out_given;
            if (rep->parsed()) {
                pcfg = waum::three_circles_config(g.seed, rep_repeat);
                out_given = rep_out;
            } else {
                pcfg.master_seed = g.seed;
                pcfg.method = waum::identification_method_from_string(pip_method);
                pcfg.strategies.clear();
                for (const auto& s : pip_strategies) pcfg.strategies.push_back(waum::strategy_from_string(s));
                if (!pip_votes.empty()) {
                    if (pip_features.empty() || pip_test_features.empty() || pip_test_truth.empty() || pip_n_class == 0) {
                        throw waum::ValidationError("--votes needs --features, --test-features, --test-truth and --n-class");
                    }
                    pcfg.files = waum::FileSources{pip_votes, pip_features, pip_test_features, pip_test_truth, pip_n_class};
                }
                out_given = pip_out;
            }
            const auto result = waum::run_pipeline(pcfg);
            const std::string text = waum::results_to_json(result.rows);
            const fs::path path = output_path(g, out_given, "results.json");
            waum::write_text_file(path, text);
            if (!g.quiet) {
                for (const auto& row : result.rows) {
                    char line[200];
                    std::snprintf(line, sizeof line, "%-5s alpha=%.4f  acc=%.4f +- %.4f  1-ece=%.4f +- %.4f",
                                  waum::to_string(row.strategy).c_str(), row.alpha, row.acc_mean, row.acc_std,
                                  1.0 - row.ece_mean, row.ece_std);
                    std::cout << line << '\n';
                }
                std::cout << "results in " << path.string() << '\n';
            }
        }
    } catch (const waum::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const waum::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
