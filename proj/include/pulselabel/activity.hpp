#pragma once

#include "pulselabel/forest.hpp"
#include "pulselabel/motion.hpp"
#include "pulselabel/types.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pulselabel::sim {
struct SubjectProfile;
}

namespace pulselabel::activity {

// Declaration order is the tie-break priority: less active first.
enum class ActivityLabel { Sit, Stand, Walk, Jog, Others };
inline constexpr std::size_t kActivityCount = 5;

std::string_view to_string(ActivityLabel a);
// Accepts class names and EMA context names; anything else is Others.
ActivityLabel label_from_string(std::string_view s);
ActivityLabel label_for(Context c);
const std::vector<std::string>& label_names();

struct LabeledRow {
    std::string subject_id;
    ActivityLabel label = ActivityLabel::Others;
    MotionFeatures x;
};

struct ActivityModel {
    forest::ForestModel forest;
    std::vector<std::string> feature_names;

    ActivityLabel predict(const MotionFeatures& x) const;
    std::uint64_t digest() const { return forest.digest(); }
};

inline constexpr int kModelFormatVersion = 1;

// Rows are put in a canonical order before training, so any permutation of
// the same rows yields the same model.
ActivityModel train_activity_model(std::vector<LabeledRow> rows,
                                   const forest::ForestParams& params, std::uint64_t seed);

struct DominantActivity {
    ActivityLabel label = ActivityLabel::Others;
    double confidence = 0.0;  // modal fraction of subwindows
    std::array<std::size_t, kActivityCount> subwindow_counts{};
};

// Majority vote per subwindow, then the modal label across subwindows; ties
// go to the less active label.
DominantActivity predict_dominant(const ActivityModel& model, const MotionWindow& m);

struct FoldResult {
    std::vector<std::string> held_out;
    double accuracy = 0.0;  // over held-out subwindow rows
    std::size_t rows = 0;
};

struct LeaveKOutReport {
    std::vector<FoldResult> folds;
    double mean_accuracy = 0.0;
};

// Every k-subset of subjects (lexicographic) is held out once. Throws
// ConfigError with fewer than k + 1 subjects.
LeaveKOutReport evaluate_leave_k_out(const std::vector<LabeledRow>& rows, std::size_t k,
                                     const forest::ForestParams& params, std::uint64_t seed);

// Model file: JSON with format, version, class and feature names, params,
// seed and trees. Round trips exactly.
void save_model(const ActivityModel& m, const std::filesystem::path& path);
ActivityModel load_model(const std::filesystem::path& path);
nlohmann::json model_to_json(const ActivityModel& m);
ActivityModel model_from_json(const nlohmann::json& j);

// CSV with header: subject_id,label,<feature columns in layout order>.
std::vector<LabeledRow> read_labeled_csv(const std::filesystem::path& path);
void write_labeled_csv(const std::vector<LabeledRow>& rows, const std::filesystem::path& path);

// Labeled subwindow rows from simulated windows: `windows_per_context`
// windows of each context per profile.
std::vector<LabeledRow> simulated_corpus(const std::vector<sim::SubjectProfile>& profiles,
                                         std::size_t windows_per_context);

}  // namespace pulselabel::activity
