#include "waum/simulation.hpp"

#include "waum/seeding.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace waum {

std::string to_string(Generator g) {
    switch (g) {
        case Generator::circles: return "circles";
        case Generator::moons: return "moons";
        case Generator::blobs: return "blobs";
    }
    return "unknown";
}

Generator generator_from_string(const std::string& name) {
    if (name == "circles") return Generator::circles;
    if (name == "moons") return Generator::moons;
    if (name == "blobs") return Generator::blobs;
    throw ValidationError("unknown generator \"" + name + "\"");
}

std::string to_string(WorkerKind k) {
    switch (k) {
        case WorkerKind::confusion: return "confusion";
        case WorkerKind::weak_linear: return "weak_linear";
        case WorkerKind::weak_boosted: return "weak_boosted";
    }
    return "unknown";
}

WorkerKind worker_kind_from_string(const std::string& name) {
    if (name == "confusion") return WorkerKind::confusion;
    if (name == "weak_linear") return WorkerKind::weak_linear;
    if (name == "weak_boosted") return WorkerKind::weak_boosted;
    throw ValidationError("unknown worker kind \"" + name + "\"");
}

namespace {

void check_spec(const SyntheticSpec& spec) {
    if (spec.n_task == 0) throw ValidationError("n_task must be positive");
    if (!(spec.noise >= 0.0)) throw ValidationError("noise must be non-negative");
    if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) throw ValidationError("test_fraction must lie in [0, 1)");
    const std::size_t K = spec.generator == Generator::moons ? 2 : spec.n_class;
    if (K < 2) throw ValidationError("need at least two classes");
    if (spec.n_task < K) throw ValidationError("n_task must be at least the number of classes");
    if (spec.generator == Generator::blobs && spec.n_features < 2) throw ValidationError("blobs need at least two features");
}

void circles(const SyntheticSpec& spec, Rng& rng, Matrix& x, std::vector<std::size_t>& y) {
    const std::size_t K = spec.n_class;
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> gauss(0.0, 1.0);
    x.resize(static_cast<Eigen::Index>(spec.n_task), 2);
    y.resize(spec.n_task);
    for (std::size_t i = 0; i < spec.n_task; ++i) {
        const std::size_t k = i % K;
        const double theta = angle(rng);
        double sd = spec.noise;
        if (spec.sector && theta >= spec.sector->start && theta <= spec.sector->stop) sd = spec.sector->noise;
        const double r = static_cast<double>(k + 1) / static_cast<double>(K) + sd * gauss(rng);
        x(static_cast<Eigen::Index>(i), 0) = r * std::cos(theta);
        x(static_cast<Eigen::Index>(i), 1) = r * std::sin(theta);
        y[i] = k;
    }
}

void moons(const SyntheticSpec& spec, Rng& rng, Matrix& x, std::vector<std::size_t>& y) {
    const std::size_t n_out = spec.n_task / 2;
    const std::size_t n_in = spec.n_task - n_out;
    std::normal_distribution<double> gauss(0.0, spec.noise);
    x.resize(static_cast<Eigen::Index>(spec.n_task), 2);
    y.resize(spec.n_task);
    auto step = [](std::size_t i, std::size_t n) {
        return n > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    };
    for (std::size_t i = 0; i < n_out; ++i) {
        const double t = step(i, n_out);
        x(static_cast<Eigen::Index>(i), 0) = std::cos(t);
        x(static_cast<Eigen::Index>(i), 1) = std::sin(t);
        y[i] = 0;
    }
    for (std::size_t i = 0; i < n_in; ++i) {
        const double t = step(i, n_in);
        const auto r = static_cast<Eigen::Index>(n_out + i);
        x(r, 0) = 1.0 - std::cos(t);
        x(r, 1) = 1.0 - std::sin(t) - 0.5;
        y[n_out + i] = 1;
    }
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        x(r, 0) += gauss(rng);
        x(r, 1) += gauss(rng);
    }
}

void blobs(const SyntheticSpec& spec, Rng& rng, Matrix& x, std::vector<std::size_t>& y) {
    const std::size_t K = spec.n_class;
    std::normal_distribution<double> gauss(0.0, spec.noise);
    x = Matrix::Zero(static_cast<Eigen::Index>(spec.n_task), static_cast<Eigen::Index>(spec.n_features));
    y.resize(spec.n_task);
    for (std::size_t i = 0; i < spec.n_task; ++i) {
        const std::size_t k = i % K;
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(K);
        const auto r = static_cast<Eigen::Index>(i);
        x(r, 0) = spec.spread * std::cos(phi);
        x(r, 1) = spec.spread * std::sin(phi);
        for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) += gauss(rng);
        y[i] = k;
    }
}

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
    return out;
}

}  // namespace

TaskSplit generate_tasks(const SyntheticSpec& spec) {
    check_spec(spec);
    Rng rng(derive_seed(spec.seed, "points", 0));
    Matrix x;
    std::vector<std::size_t> y;
    switch (spec.generator) {
        case Generator::circles: circles(spec, rng, x, y); break;
        case Generator::moons: moons(spec, rng, x, y); break;
        case Generator::blobs: blobs(spec, rng, x, y); break;
    }
    std::vector<std::size_t> perm(spec.n_task);
    std::iota(perm.begin(), perm.end(), 0);
    Rng split_rng(derive_seed(spec.seed, "split", 0));
    std::shuffle(perm.begin(), perm.end(), split_rng);
    const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(spec.n_task)));
    if (n_test >= spec.n_task) throw ValidationError("test split leaves no training tasks");
    const std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    const std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());

    TaskSplit out;
    out.train_features = take_rows(x, train);
    out.test_features = take_rows(x, test);
    for (std::size_t i : train) out.train_truth.push_back(y[i]);
    for (std::size_t i : test) out.test_truth.push_back(y[i]);
    return out;
}

namespace {

Matrix one_hot(const std::vector<std::size_t>& truth, std::size_t K) {
    Matrix y = Matrix::Zero(static_cast<Eigen::Index>(truth.size()), static_cast<Eigen::Index>(K));
    for (std::size_t i = 0; i < truth.size(); ++i) y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(truth[i])) = 1.0;
    return y;
}

std::vector<std::size_t> row_argmax(const Matrix& scores) {
    std::vector<std::size_t> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        Eigen::Index best = 0;
        scores.row(r).maxCoeff(&best);
        out[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
    }
    return out;
}

Matrix row_softmax(Matrix s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        s.row(r) = (s.row(r).array() - s.row(r).maxCoeff()).exp().matrix();
        s.row(r) /= s.row(r).sum();
    }
    return s;
}

// multinomial logistic regression, full-batch gradient descent from zero
std::vector<std::size_t> fit_linear(const WorkerSpec& w, const Matrix& x, const std::vector<std::size_t>& truth,
                                    std::size_t K) {
    const Matrix y = one_hot(truth, K);
    const double n = static_cast<double>(x.rows());
    Matrix weight = Matrix::Zero(x.cols(), static_cast<Eigen::Index>(K));
    Vector bias = Vector::Zero(static_cast<Eigen::Index>(K));
    auto scores = [&] {
        Matrix s = x * weight;
        s.rowwise() += bias.transpose();
        return s;
    };
    for (std::size_t it = 0; it < w.max_iter; ++it) {
        const Matrix residual = row_softmax(scores()) - y;
        weight -= w.learning_rate * (x.transpose() * residual) / n;
        bias -= w.learning_rate * residual.colwise().sum().transpose() / n;
    }
    return row_argmax(scores());
}

struct Stump {
    Eigen::Index feature = 0;
    double threshold = 0.0;
    double left = 0.0;
    double right = 0.0;
    [[nodiscard]] double operator()(const Matrix& x, Eigen::Index r) const { return x(r, feature) <= threshold ? left : right; }
};

double friedman_leaf(const std::vector<double>& r, std::size_t K) {
    double num = 0.0;
    double den = 0.0;
    for (double v : r) {
        num += v;
        den += std::abs(v) * (1.0 - std::abs(v));
    }
    if (den < 1e-12) return 0.0;
    return (static_cast<double>(K) - 1.0) / static_cast<double>(K) * num / den;
}

Stump fit_stump(const Matrix& x, const Vector& residual, const std::vector<std::size_t>& rows, std::size_t K) {
    Stump best;
    double best_gain = -1.0;
    std::vector<std::size_t> order = rows;
    double total = 0.0;
    for (std::size_t r : rows) total += residual(static_cast<Eigen::Index>(r));
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return x(static_cast<Eigen::Index>(a), f) < x(static_cast<Eigen::Index>(b), f);
        });
        double left_sum = 0.0;
        for (std::size_t p = 0; p + 1 < order.size(); ++p) {
            left_sum += residual(static_cast<Eigen::Index>(order[p]));
            const double here = x(static_cast<Eigen::Index>(order[p]), f);
            const double next = x(static_cast<Eigen::Index>(order[p + 1]), f);
            if (here == next) continue;
            const double nl = static_cast<double>(p + 1);
            const double nr = static_cast<double>(order.size()) - nl;
            const double right_sum = total - left_sum;
            const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
            if (gain > best_gain) {
                best_gain = gain;
                best.feature = f;
                best.threshold = 0.5 * (here + next);
            }
        }
    }
    std::vector<double> left;
    std::vector<double> right;
    for (std::size_t r : rows) {
        const auto ri = static_cast<Eigen::Index>(r);
        (x(ri, best.feature) <= best.threshold ? left : right).push_back(residual(ri));
    }
    best.left = friedman_leaf(left, K);
    best.right = friedman_leaf(right, K);
    return best;
}

// multiclass gradient boosting with one stump per class and round
std::vector<std::size_t> fit_boosted(const WorkerSpec& w, const Matrix& x, const std::vector<std::size_t>& truth,
                                     std::size_t K, Rng& rng) {
    const Matrix y = one_hot(truth, K);
    const auto n = static_cast<std::size_t>(x.rows());
    Matrix f = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(K));
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const auto n_sub = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(w.subsample * static_cast<double>(n))), 2, n);
    for (std::size_t round = 0; round < w.n_stumps; ++round) {
        const Matrix residual = y - row_softmax(f);
        std::vector<std::size_t> rows = all;
        if (n_sub < n) {
            std::shuffle(rows.begin(), rows.end(), rng);
            rows.resize(n_sub);
        }
        for (std::size_t k = 0; k < K; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const Stump s = fit_stump(x, residual.col(kk), rows, K);
            for (Eigen::Index r = 0; r < x.rows(); ++r) f(r, kk) += w.learning_rate * s(x, r);
        }
    }
    return row_argmax(f);
}

}  // namespace

std::vector<std::size_t> worker_answers(const WorkerSpec& worker, const Matrix& features,
                                        const std::vector<std::size_t>& truth, std::size_t n_class,
                                        std::uint64_t seed) {
    if (static_cast<std::size_t>(features.rows()) != truth.size()) throw DimensionError("one truth label per task required");
    for (std::size_t t : truth) {
        if (t >= n_class) throw ValidationError("truth label out of range");
    }
    Rng rng(derive_seed(seed, "answers", worker.seed));
    switch (worker.kind) {
        case WorkerKind::confusion: {
            if (worker.confusion.n_class() != n_class) throw DimensionError("worker confusion matrix has the wrong size");
            std::vector<std::size_t> out(truth.size());
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (std::size_t i = 0; i < truth.size(); ++i) {
                const double u = unit(rng);
                double acc = 0.0;
                std::size_t k = 0;
                for (; k + 1 < n_class; ++k) {
                    acc += worker.confusion(truth[i], k);
                    if (u < acc) break;
                }
                out[i] = k;
            }
            return out;
        }
        case WorkerKind::weak_linear: return fit_linear(worker, features, truth, n_class);
        case WorkerKind::weak_boosted: return fit_boosted(worker, features, truth, n_class, rng);
    }
    return {};
}

CrowdDataset simulate_votes(const Matrix& features, const std::vector<std::size_t>& truth, std::size_t n_class,
                            const std::vector<WorkerSpec>& workers, VotesPerTask votes_per_task, std::uint64_t seed) {
    if (workers.empty()) throw ValidationError("no workers");
    if (votes_per_task.min < 1 || votes_per_task.min > votes_per_task.max || votes_per_task.max > workers.size()) {
        throw ValidationError("votes per task must satisfy 1 <= min <= max <= n_worker");
    }
    std::vector<std::vector<std::size_t>> answers;
    answers.reserve(workers.size());
    for (std::size_t j = 0; j < workers.size(); ++j) {
        answers.push_back(worker_answers(workers[j], features, truth, n_class, derive_seed(seed, "worker", j)));
    }
    Rng rng(derive_seed(seed, "assignment", 0));
    std::vector<std::size_t> pool(workers.size());
    std::vector<std::vector<Vote>> votes(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const std::size_t count = votes_per_task.min + uniform_index(rng, votes_per_task.max - votes_per_task.min + 1);
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t c = 0; c < count; ++c) {
            std::swap(pool[c], pool[c + uniform_index(rng, pool.size() - c)]);
            votes[i].push_back(Vote{pool[c], answers[pool[c]][i]});
        }
    }
    return CrowdDataset(std::move(votes), workers.size(), n_class, features);
}

std::vector<WorkerSpec> parse_workers(const std::string& json_text, std::size_t n_class) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("workers file: ") + e.what());
    }
    if (!doc.is_array() || doc.empty()) throw ParseError("workers file must hold a non-empty JSON array");
    std::vector<WorkerSpec> out;
    try {
        for (std::size_t j = 0; j < doc.size(); ++j) {
            const auto& item = doc[j];
            WorkerSpec w;
            w.kind = worker_kind_from_string(item.at("kind").get<std::string>());
            w.seed = item.value("seed", static_cast<std::uint64_t>(j));
            w.max_iter = item.value("max_iter", w.max_iter);
            w.learning_rate = item.value("learning_rate", w.learning_rate);
            w.n_stumps = item.value("n_stumps", w.n_stumps);
            w.subsample = item.value("subsample", w.subsample);
            if (w.kind == WorkerKind::confusion) {
                if (item.contains("confusion")) {
                    const auto rows = item.at("confusion").get<std::vector<std::vector<double>>>();
                    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_class));
                    for (std::size_t r = 0; r < rows.size(); ++r) {
                        if (rows[r].size() != n_class) throw DimensionError("worker " + std::to_string(j) + ": confusion row has the wrong length");
                        for (std::size_t c = 0; c < n_class; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
                    }
                    w.confusion = ConfusionMatrix(m);
                } else {
                    w.confusion = ConfusionMatrix::symmetric(n_class, item.at("diag").get<double>());
                }
                if (w.confusion.n_class() != n_class) throw DimensionError("worker " + std::to_string(j) + ": confusion matrix is not K x K");
            }
            out.push_back(std::move(w));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("workers file: ") + e.what());
    }
    return out;
}

CrowdDataset scramble_sector(const CrowdDataset& d, const DisagreementSector& sector, std::uint64_t seed) {
    if (!d.has_features() || d.features().cols() < 2) throw ValidationError("scramble_sector needs 2-D features");
    if (!(sector.rate >= 0.0 && sector.rate <= 1.0)) throw ValidationError("scramble rate must lie in [0, 1]");
    Rng rng(derive_seed(seed, "scramble", 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto votes = d.all_votes();
    for (std::size_t i = 0; i < votes.size(); ++i) {
        double theta = std::atan2(d.features()(static_cast<Eigen::Index>(i), 1), d.features()(static_cast<Eigen::Index>(i), 0));
        if (theta < 0.0) theta += 2.0 * std::numbers::pi;
        if (theta < sector.start || theta > sector.stop) continue;
        for (Vote& v : votes[i]) {
            if (unit(rng) < sector.rate) v.label = uniform_index(rng, d.n_class());
        }
    }
    return CrowdDataset(std::move(votes), d.n_worker(), d.n_class(), d.features());
}

namespace {

Scenario from_split(std::string name, const TaskSplit& split, std::size_t K, const std::vector<WorkerSpec>& workers,
                    VotesPerTask effort, std::uint64_t seed) {
    return Scenario{std::move(name),
                    simulate_votes(split.train_features, split.train_truth, K, workers, effort, derive_seed(seed, "votes", 0)),
                    split.train_truth,
                    split.test_features,
                    split.test_truth,
                    {}};
}

std::vector<WorkerSpec> feature_workers() {
    WorkerSpec linear;
    linear.kind = WorkerKind::weak_linear;
    linear.max_iter = 20;
    linear.learning_rate = 0.5;
    linear.seed = 0;
    WorkerSpec small;
    small.kind = WorkerKind::weak_boosted;
    small.n_stumps = 5;
    small.learning_rate = 0.5;
    small.subsample = 0.5;
    small.seed = 1;
    WorkerSpec large;
    large.kind = WorkerKind::weak_boosted;
    large.n_stumps = 60;
    large.learning_rate = 0.3;
    large.subsample = 0.8;
    large.seed = 2;
    return {linear, small, large};
}

}  // namespace

Scenario three_circles(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.generator = Generator::circles;
    spec.n_task = 750;
    spec.n_class = 3;
    spec.noise = 0.1;
    spec.seed = derive_seed(seed, "three_circles", 0);
    Scenario s = from_split("three_circles", generate_tasks(spec), 3, feature_workers(), {3, 3}, seed);
    const DisagreementSector sector{std::numbers::pi / 12.0, 5.0 * std::numbers::pi / 12.0, 1.0};
    s.train = scramble_sector(s.train, sector, derive_seed(seed, "three_circles_sector", 0));
    s.planted.resize(s.train.n_task());
    for (std::size_t i = 0; i < s.train.n_task(); ++i) {
        double theta = std::atan2(s.train.features()(static_cast<Eigen::Index>(i), 1),
                                  s.train.features()(static_cast<Eigen::Index>(i), 0));
        if (theta < 0.0) theta += 2.0 * std::numbers::pi;
        s.planted[i] = theta >= sector.start && theta <= sector.stop;
    }
    return s;
}

Scenario two_moons(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.generator = Generator::moons;
    spec.n_task = 500;
    spec.n_class = 2;
    spec.noise = 0.2;
    spec.seed = derive_seed(seed, "two_moons", 0);
    return from_split("two_moons", generate_tasks(spec), 2, feature_workers(), {3, 3}, seed);
}

Scenario many_workers(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.generator = Generator::blobs;
    spec.n_task = 1000;
    spec.n_class = 4;
    spec.noise = 1.0;
    spec.spread = 2.5;
    spec.seed = derive_seed(seed, "many_workers", 0);
    Rng rng(derive_seed(seed, "many_workers_crowd", 0));
    std::uniform_real_distribution<double> diag(0.4, 0.95);
    std::vector<WorkerSpec> workers;
    for (std::size_t j = 0; j < 30; ++j) {
        WorkerSpec w;
        w.seed = j;
        switch (j % 3) {
            case 0:
                w.kind = WorkerKind::confusion;
                w.confusion = ConfusionMatrix::symmetric(4, diag(rng));
                break;
            case 1:
                w.kind = WorkerKind::weak_linear;
                w.max_iter = 1 + uniform_index(rng, 30);
                w.learning_rate = 0.3;
                break;
            default:
                w.kind = WorkerKind::weak_boosted;
                w.n_stumps = 1 + uniform_index(rng, 20);
                w.learning_rate = 0.3;
                w.subsample = 0.5;
                break;
        }
        workers.push_back(std::move(w));
    }
    return from_split("many_workers", generate_tasks(spec), 4, workers, {1, 5}, seed);
}

Scenario planted_corruption(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.generator = Generator::blobs;
    spec.n_task = 200;
    spec.n_class = 2;
    spec.noise = 1.0;
    spec.spread = 5.0;
    spec.test_fraction = 0.0;
    spec.seed = derive_seed(seed, "planted_corruption", 0);
    const TaskSplit split = generate_tasks(spec);
    std::vector<WorkerSpec> workers(5);
    for (std::size_t j = 0; j < workers.size(); ++j) {
        workers[j].kind = WorkerKind::confusion;
        workers[j].confusion = ConfusionMatrix::symmetric(2, 0.9);
        workers[j].seed = j;
    }
    Scenario s = from_split("planted_corruption", split, 2, workers, {5, 5}, seed);

    std::vector<std::size_t> blob;
    for (std::size_t i = 0; i < split.train_truth.size(); ++i) {
        if (split.train_truth[i] == 0) blob.push_back(i);
    }
    Rng rng(derive_seed(seed, "corrupted_tasks", 0));
    std::shuffle(blob.begin(), blob.end(), rng);
    blob.resize(10);
    s.planted.assign(s.train.n_task(), false);
    auto votes = s.train.all_votes();
    for (std::size_t i : blob) {
        s.planted[i] = true;
        for (Vote& v : votes[i]) v.label = 1 - split.train_truth[i];
    }
    s.train = CrowdDataset(std::move(votes), s.train.n_worker(), 2, s.train.features());
    return s;
}

Scenario scenario_by_name(const std::string& name, std::uint64_t seed) {
    if (name == "three_circles") return three_circles(seed);
    if (name == "two_moons") return two_moons(seed);
    if (name == "many_workers") return many_workers(seed);
    if (name == "planted_corruption") return planted_corruption(seed);
    throw ValidationError("unknown protocol \"" + name + "\"");
}

}  // namespace waum
