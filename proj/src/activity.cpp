#include "pulselabel/activity.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pulselabel::activity {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

forest::Dataset to_dataset(const std::vector<LabeledRow>& rows) {
    forest::Dataset d;
    d.x.reserve(rows.size());
    d.y.reserve(rows.size());
    for (const auto& r : rows) {
        d.x.push_back(r.x);
        d.y.push_back(static_cast<int>(r.label));
    }
    return d;
}

nlohmann::json params_json(const forest::ForestParams& p) {
    return {{"n_trees", p.n_trees},
            {"max_depth", p.max_depth},
            {"max_features", p.max_features},
            {"min_samples_split", p.min_samples_split},
            {"min_samples_per_class", p.min_samples_per_class}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::string_view to_string(ActivityLabel a) {
    switch (a) {
        case ActivityLabel::Sit: return "sit";
        case ActivityLabel::Stand: return "stand";
        case ActivityLabel::Walk: return "walk";
        case ActivityLabel::Jog: return "jog";
        case ActivityLabel::Others: return "others";
    }
    return "others";
}

ActivityLabel label_from_string(std::string_view s) {
    const auto l = lower(s);
    if (l == "sit" || l == "sitting") return ActivityLabel::Sit;
    if (l == "stand" || l == "standing") return ActivityLabel::Stand;
    if (l == "walk" || l == "walking") return ActivityLabel::Walk;
    if (l == "jog" || l == "jogging") return ActivityLabel::Jog;
    return ActivityLabel::Others;
}

ActivityLabel label_for(Context c) {
    switch (c) {
        case Context::Sit: return ActivityLabel::Sit;
        case Context::Stand: return ActivityLabel::Stand;
        case Context::Walk: return ActivityLabel::Walk;
        case Context::Jog: return ActivityLabel::Jog;
        case Context::LyingDown:
        case Context::Other: return ActivityLabel::Others;
    }
    return ActivityLabel::Others;
}

const std::vector<std::string>& label_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (std::size_t i = 0; i < kActivityCount; ++i) {
            v.emplace_back(to_string(static_cast<ActivityLabel>(i)));
        }
        return v;
    }();
    return names;
}

ActivityLabel ActivityModel::predict(const MotionFeatures& x) const {
    return static_cast<ActivityLabel>(forest.predict(x));
}

ActivityModel train_activity_model(std::vector<LabeledRow> rows,
                                   const forest::ForestParams& params, std::uint64_t seed) {
    std::sort(rows.begin(), rows.end(), [](const LabeledRow& a, const LabeledRow& b) {
        if (a.label != b.label) return a.label < b.label;
        if (a.x != b.x) return a.x < b.x;
        return a.subject_id < b.subject_id;
    });
    for (const auto& r : rows) {
        if (r.x.size() != kMotionFeatureCount) {
            throw ConfigError("training row has " + std::to_string(r.x.size()) +
                              " features, expected " + std::to_string(kMotionFeatureCount));
        }
    }
    ActivityModel m;
    m.forest = forest::train_forest(to_dataset(rows), kActivityCount, params, seed, label_names());
    m.feature_names = motion_feature_names();
    return m;
}

DominantActivity predict_dominant(const ActivityModel& model, const MotionWindow& m) {
    const auto subs = extract_motion_features(m);
    DominantActivity d;
    for (const auto& f : subs) ++d.subwindow_counts[static_cast<std::size_t>(model.predict(f))];
    // max_element keeps the first maximum, i.e. the least active label.
    const auto it = std::max_element(d.subwindow_counts.begin(), d.subwindow_counts.end());
    d.label = static_cast<ActivityLabel>(it - d.subwindow_counts.begin());
    d.confidence = static_cast<double>(*it) / static_cast<double>(subs.size());
    return d;
}

LeaveKOutReport evaluate_leave_k_out(const std::vector<LabeledRow>& rows, std::size_t k,
                                     const forest::ForestParams& params, std::uint64_t seed) {
    std::set<std::string> subject_set;
    for (const auto& r : rows) subject_set.insert(r.subject_id);
    const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
    if (k == 0) throw ConfigError("k must be at least 1");
    if (subjects.size() < k + 1) {
        throw ConfigError("leave-" + std::to_string(k) + "-out needs at least " +
                          std::to_string(k + 1) + " subjects, have " +
                          std::to_string(subjects.size()));
    }

    LeaveKOutReport report;
    // Lexicographic k-combinations via a selection mask.
    std::vector<bool> mask(subjects.size(), false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
        std::set<std::string> held;
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            if (mask[i]) held.insert(subjects[i]);
        }
        std::vector<LabeledRow> train, test;
        for (const auto& r : rows) (held.count(r.subject_id) ? test : train).push_back(r);
        const auto model = train_activity_model(std::move(train), params, seed);
        std::size_t correct = 0;
        for (const auto& r : test) correct += model.predict(r.x) == r.label ? 1 : 0;

        FoldResult f;
        f.held_out.assign(held.begin(), held.end());
        f.rows = test.size();
        f.accuracy = test.empty() ? 0.0
                                  : static_cast<double>(correct) / static_cast<double>(test.size());
        report.folds.push_back(std::move(f));
    } while (std::prev_permutation(mask.begin(), mask.end()));

    double sum = 0.0;
    for (const auto& f : report.folds) sum += f.accuracy;
    report.mean_accuracy = sum / static_cast<double>(report.folds.size());
    return report;
}

nlohmann::json model_to_json(const ActivityModel& m) {
    return {{"format", "pulselabel-activity-forest"},
            {"version", kModelFormatVersion},
            {"classes", label_names()},
            {"features", m.feature_names},
            {"params", params_json(m.forest.params)},
            {"seed", m.forest.seed},
            {"digest", m.forest.digest()},
            {"trees", forest::trees_to_json(m.forest)}};
}

ActivityModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "pulselabel-activity-forest") {
        throw ConfigError("model: not a pulselabel activity model");
    }
    if (j.value("version", 0) != kModelFormatVersion) {
        throw ConfigError("model: unsupported version " + j.value("version", nlohmann::json()).dump());
    }
    if (j.at("classes").get<std::vector<std::string>>() != label_names()) {
        throw ConfigError("model: class list does not match");
    }
    ActivityModel m;
    m.feature_names = j.at("features").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    m.forest.params.n_trees = p.at("n_trees").get<int>();
    m.forest.params.max_depth = p.at("max_depth").get<int>();
    m.forest.params.max_features = p.at("max_features").get<int>();
    m.forest.params.min_samples_split = p.at("min_samples_split").get<int>();
    m.forest.params.min_samples_per_class = p.at("min_samples_per_class").get<int>();
    m.forest.seed = j.at("seed").get<std::uint64_t>();
    m.forest.n_features = m.feature_names.size();
    m.forest.n_classes = kActivityCount;
    forest::trees_from_json(j.at("trees"), m.forest);
    if (j.contains("digest") && j["digest"].get<std::uint64_t>() != m.forest.digest()) {
        throw ConfigError("model: digest mismatch (file corrupted or edited)");
    }
    return m;
}

void save_model(const ActivityModel& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model_to_json(m).dump() << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ActivityModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("model " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

std::vector<LabeledRow> read_labeled_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("header", "empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "subject_id" || header[1] != "label") {
        throw ValidationError("header", "expected subject_id,label,<features>");
    }
    const std::size_t nf = header.size() - 2;
    if (nf != kMotionFeatureCount) {
        throw ValidationError("header", "expected " + std::to_string(kMotionFeatureCount) +
                                            " feature columns, got " + std::to_string(nf));
    }
    std::vector<LabeledRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        const std::string where = "line " + std::to_string(lineno);
        if (cells.size() != header.size()) throw ValidationError(where, "wrong column count");
        LabeledRow r;
        r.subject_id = cells[0];
        r.label = label_from_string(cells[1]);
        r.x.resize(nf);
        for (std::size_t i = 0; i < nf; ++i) {
            const auto& c = cells[i + 2];
            const auto res = std::from_chars(c.data(), c.data() + c.size(), r.x[i]);
            if (res.ec != std::errc() || res.ptr != c.data() + c.size() || !std::isfinite(r.x[i])) {
                throw ValidationError(where, "bad number in column " + header[i + 2]);
            }
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_labeled_csv(const std::vector<LabeledRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "subject_id,label";
    for (const auto& n : motion_feature_names()) out << ',' << n;
    out << '\n';
    char buf[64];
    for (const auto& r : rows) {
        out << r.subject_id << ',' << to_string(r.label);
        for (double v : r.x) {
            const auto res = std::to_chars(buf, buf + sizeof buf, v);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
}

std::vector<LabeledRow> simulated_corpus(const std::vector<sim::SubjectProfile>& profiles,
                                         std::size_t windows_per_context) {
    std::vector<LabeledRow> rows;
    for (const auto& p : profiles) {
        if (p.slots() == 0) continue;
        const std::size_t stride = std::max<std::size_t>(1, p.slots() / (windows_per_context + 1));
        for (std::size_t c = 0; c < kContextCount; ++c) {
            const auto ctx = static_cast<Context>(c);
            for (std::size_t i = 0; i < windows_per_context; ++i) {
                const std::size_t slot = (i * stride + c) % p.slots();
                sim::WindowOverrides ov;
                ov.activity = ctx;
                const auto w = sim::generate_window(p, slot, ov);
                for (auto& f : extract_motion_features(MotionWindow::from_payload(w.payload))) {
                    rows.push_back({p.subject_id, label_for(ctx), std::move(f)});
                }
            }
        }
    }
    return rows;
}

}  // namespace pulselabel::activity
