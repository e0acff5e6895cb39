#include "waum/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace waum {

using nlohmann::json;

// ---- labels --------------------------------------------------------------

SoftLabel::SoftLabel(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ValidationError("soft label: empty probability vector");
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("soft label: negative or non-finite entry");
        total += p;
    }
    if (std::abs(total - 1.0) > simplex_tolerance) {
        throw ValidationError("soft label: entries sum to " + std::to_string(total) + ", expected 1");
    }
}

SoftLabel SoftLabel::one_hot(std::size_t cls, std::size_t n_class) {
    if (cls >= n_class) throw ValidationError("one-hot class " + std::to_string(cls) + " out of range");
    std::vector<double> p(n_class, 0.0);
    p[cls] = 1.0;
    return SoftLabel(std::move(p));
}

SoftLabel SoftLabel::uniform(std::size_t n_class) {
    return SoftLabel(std::vector<double>(n_class, 1.0 / static_cast<double>(n_class)));
}

SoftLabel SoftLabel::normalized(std::vector<double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw ValidationError("cannot normalize a vector with non-positive sum");
    for (double& w : weights) w /= total;
    return SoftLabel(std::move(weights));
}

// ---- dataset -------------------------------------------------------------

CrowdDataset::CrowdDataset(std::vector<std::vector<Vote>> votes, std::size_t n_worker, std::size_t n_class,
                           Matrix features)
    : votes_(std::move(votes)), n_worker_(n_worker), n_class_(n_class), features_(std::move(features)) {
    if (votes_.empty()) throw ValidationError("no tasks");
    if (n_class_ == 0) throw ValidationError("n_class must be positive");
    if (n_worker_ == 0) throw ValidationError("n_worker must be positive");
    if (features_.cols() > 0 && static_cast<std::size_t>(features_.rows()) != votes_.size()) {
        throw DimensionError("features have " + std::to_string(features_.rows()) + " rows for " +
                             std::to_string(votes_.size()) + " tasks");
    }
    for (std::size_t i = 0; i < votes_.size(); ++i) {
        auto& task_votes = votes_[i];
        if (task_votes.empty()) throw ValidationError("task " + std::to_string(i) + " has no votes");
        std::sort(task_votes.begin(), task_votes.end(),
                  [](const Vote& a, const Vote& b) { return a.worker < b.worker; });
        for (std::size_t v = 0; v < task_votes.size(); ++v) {
            const Vote& vote = task_votes[v];
            if (vote.worker >= n_worker_) {
                throw ValidationError("task " + std::to_string(i) + ": worker index " + std::to_string(vote.worker) +
                                      " out of range (n_worker=" + std::to_string(n_worker_) + ")");
            }
            if (vote.label >= n_class_) {
                throw ValidationError("task " + std::to_string(i) + ", worker " + std::to_string(vote.worker) +
                                      ": class index " + std::to_string(vote.label) + " out of range (n_class=" +
                                      std::to_string(n_class_) + ")");
            }
            if (v > 0 && task_votes[v - 1].worker == vote.worker) {
                throw ValidationError("task " + std::to_string(i) + ": worker " + std::to_string(vote.worker) +
                                      " voted twice");
            }
        }
        n_votes_ += task_votes.size();
    }
}

CrowdDataset CrowdDataset::subset(const std::vector<std::size_t>& tasks) const {
    std::vector<std::vector<Vote>> votes;
    votes.reserve(tasks.size());
    Matrix features;
    if (has_features()) features.resize(static_cast<Eigen::Index>(tasks.size()), features_.cols());
    for (std::size_t r = 0; r < tasks.size(); ++r) {
        votes.push_back(votes_.at(tasks[r]));
        if (has_features()) features.row(static_cast<Eigen::Index>(r)) = features_.row(static_cast<Eigen::Index>(tasks[r]));
    }
    return CrowdDataset(std::move(votes), n_worker_, n_class_, std::move(features));
}

bool operator==(const CrowdDataset& a, const CrowdDataset& b) {
    return a.n_worker_ == b.n_worker_ && a.n_class_ == b.n_class_ && a.votes_ == b.votes_ &&
           a.features_.rows() == b.features_.rows() && a.features_.cols() == b.features_.cols() &&
           a.features_ == b.features_;
}

std::vector<std::vector<std::size_t>> annotator_sets(const CrowdDataset& d) {
    std::vector<std::vector<std::size_t>> sets(d.n_task());
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        for (const Vote& v : d.votes(i)) sets[i].push_back(v.worker);
    }
    return sets;
}

std::vector<std::vector<std::size_t>> task_sets(const CrowdDataset& d) {
    std::vector<std::vector<std::size_t>> sets(d.n_worker());
    // tasks are visited in increasing order, so each list comes out sorted
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        for (const Vote& v : d.votes(i)) sets[v.worker].push_back(i);
    }
    return sets;
}

// ---- I/O -----------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

namespace {

std::size_t parse_index(const std::string& key, const char* what) {
    std::size_t value = 0;
    const char* first = key.data();
    const char* last = key.data() + key.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (key.empty() || ec != std::errc() || ptr != last) {
        throw ValidationError(std::string("invalid ") + what + " index \"" + key + "\"");
    }
    return value;
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

CrowdDataset parse_votes(const std::string& json_text, std::size_t n_class) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError("votes: malformed JSON at line " + std::to_string(line_of_offset(json_text, e.byte)) + ": " +
                         e.what());
    }
    if (!doc.is_object()) throw ValidationError("votes: top-level value must be an object");
    if (doc.empty()) throw ValidationError("votes: no tasks");

    std::size_t n_task = 0;
    std::size_t n_worker = 0;
    std::vector<std::pair<std::size_t, std::vector<Vote>>> parsed;
    for (const auto& [task_key, workers] : doc.items()) {
        const std::size_t task = parse_index(task_key, "task");
        if (!workers.is_object()) throw ValidationError("votes: task " + task_key + " must map to an object");
        std::vector<Vote> task_votes;
        for (const auto& [worker_key, label] : workers.items()) {
            const std::size_t worker = parse_index(worker_key, "worker");
            if (!label.is_number_integer() || label.get<long long>() < 0) {
                throw ValidationError("votes: task " + task_key + ", worker " + worker_key +
                                      ": class must be a non-negative integer");
            }
            task_votes.push_back({worker, label.get<std::size_t>()});
            n_worker = std::max(n_worker, worker + 1);
        }
        n_task = std::max(n_task, task + 1);
        parsed.emplace_back(task, std::move(task_votes));
    }
    std::vector<std::vector<Vote>> votes(n_task);
    for (auto& [task, task_votes] : parsed) votes[task] = std::move(task_votes);
    return CrowdDataset(std::move(votes), n_worker, n_class);
}

CrowdDataset load_votes(const std::filesystem::path& votes_path, std::size_t n_class) {
    return parse_votes(read_text_file(votes_path), n_class);
}

CrowdDataset load_dataset(const std::filesystem::path& votes_path, const std::filesystem::path& features_path,
                          std::size_t n_class) {
    CrowdDataset votes_only = load_votes(votes_path, n_class);
    Matrix features = load_features(features_path);
    const auto n_task = static_cast<Eigen::Index>(votes_only.n_task());
    if (features.rows() < n_task) {
        throw DimensionError("features file has " + std::to_string(features.rows()) + " rows but votes reference " +
                             std::to_string(n_task) + " tasks");
    }
    Matrix used = features.topRows(n_task);
    return CrowdDataset(votes_only.all_votes(), votes_only.n_worker(), n_class, std::move(used));
}

std::string votes_to_json(const CrowdDataset& d) {
    json doc = json::object();
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        json workers = json::object();
        for (const Vote& v : d.votes(i)) workers[std::to_string(v.worker)] = v.label;
        doc[std::to_string(i)] = std::move(workers);
    }
    return doc.dump() + "\n";
}

void save_votes(const CrowdDataset& d, const std::filesystem::path& votes_path) {
    write_text_file(votes_path, votes_to_json(d));
}

Matrix parse_features_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            std::string cell = line.substr(start, end - start);
            cell.erase(0, cell.find_first_not_of(" \t"));
            cell.erase(cell.find_last_not_of(" \t") + 1);
            char* parse_end = nullptr;
            const double value = std::strtod(cell.c_str(), &parse_end);
            if (cell.empty() || parse_end != cell.c_str() + cell.size()) {
                throw ParseError("features: line " + std::to_string(line_no) + ": cannot parse \"" + cell + "\"");
            }
            row.push_back(value);
            start = end + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DimensionError("features: line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                                 " columns, expected " + std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("features: file is empty");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

Matrix load_features(const std::filesystem::path& path) {
    return parse_features_csv(read_text_file(path));
}

void save_features(const Matrix& features, const std::filesystem::path& path) {
    std::string out;
    char buf[32];
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        for (Eigen::Index c = 0; c < features.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", features(r, c));
            if (c > 0) out += ',';
            out += buf;
        }
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<std::size_t> load_ground_truth(const std::filesystem::path& path, std::size_t n_class) {
    std::istringstream in(read_text_file(path));
    std::vector<std::size_t> truth;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t cls = parse_index(line, "class");
        if (cls >= n_class) {
            throw ValidationError("truth: line " + std::to_string(line_no) + ": class " + std::to_string(cls) +
                                  " out of range (n_class=" + std::to_string(n_class) + ")");
        }
        truth.push_back(cls);
    }
    return truth;
}

void save_ground_truth(const std::vector<std::size_t>& truth, const std::filesystem::path& path) {
    std::string out;
    for (std::size_t t : truth) out += std::to_string(t) + "\n";
    write_text_file(path, out);
}

}  // namespace waum
