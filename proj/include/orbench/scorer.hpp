#pragma once

#include "orbench/core.hpp"
#include "orbench/qa_io.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace orbench::scorer {

/// Bumped whenever any scoring rule or band changes.
inline constexpr std::string_view kScoringRulesVersion = "1";

/// Relative-error denominator guard; |truth| below this requires an exact match.
inline constexpr double kRelativeEpsilon = 1e-6;

/// Band thresholds are exclusive upper bounds. A measured value within this
/// distance of a threshold counts as reaching it, so exactly 10% relative
/// error lands in the 0.5 band, and IoU exactly 0.75 in the 1.0 band.
inline constexpr double kBoundaryTolerance = 1e-9;

struct ScoreContext {
    /// Image size of the gaze view; the scorer's default is used when absent.
    std::optional<ImageDims> image;
};

struct Scored {
    double score = 0.0;
    bool unparseable = false;
};

inline constexpr ImageDims kDefaultImage{1280, 720};

/// Scores a free-text prediction against a canonical truth answer. Never
/// throws on odd predictions: unparseable text scores 0 with the flag set.
Scored score_answer(TaskKind task, std::string_view predicted, std::string_view truth, const ScoreContext& ctx = {});

// Rule primitives, exposed for testing.
double set_iou(std::vector<std::string> a, std::vector<std::string> b);
double rect_iou(double ax, double ay, double aw, double ah, double bx, double by, double bw, double bh);
double iou_band(double iou);
double relative_band(double predicted, double truth);
double absolute_band(double error, double full, double half);
std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b);
double sequence_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b);
double predicate_macro_f1(const std::vector<Triplet>& predicted, const std::vector<Triplet>& truth);
double bleu1(std::string_view predicted, std::string_view truth);

// ---- aggregation --------------------------------------------------------------

enum class Hierarchy {
    /// Mean per (dataset, task); dataset = mean of its task means; overall =
    /// mean of dataset means; per_task = mean over datasets of (dataset, task) means.
    dataset_task,
    /// Plain sample means at every level.
    flat,
};
std::string_view hierarchy_name(Hierarchy h);
Hierarchy parse_hierarchy(std::string_view s);

struct SampleScore {
    std::string qa_id;
    std::string dataset;
    TaskKind task = TaskKind::PeopleCounting;
    double score = 0.0;
    bool missing = false;
    bool unparseable = false;
};

using DatasetTask = std::pair<std::string, TaskKind>;

struct Aggregate {
    double overall = 0.0;
    std::map<std::string, double> per_dataset;
    std::map<TaskKind, double> per_task;
    std::map<DatasetTask, double> per_dataset_task;
};

Aggregate aggregate(std::span<const SampleScore> samples, Hierarchy hierarchy = Hierarchy::dataset_task);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

struct Intervals {
    Interval overall;
    std::map<std::string, Interval> per_dataset;
    std::map<TaskKind, Interval> per_task;
    std::map<DatasetTask, Interval> per_dataset_task;
};

/// Fills `indices` (pre-sized to the sample count) for resample number `r`.
using Resampler = std::function<void(std::size_t r, std::vector<std::size_t>& indices)>;

/// Uniform draws with replacement; resample r uses a seed derived from (seed, r).
Resampler uniform_resampler(std::uint64_t seed);

/// Linear-interpolated percentile of `values` (sorted in place), q in [0, 1].
double percentile(std::vector<double>& values, double q);

struct BootstrapOptions {
    std::size_t n_resamples = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    Hierarchy hierarchy = Hierarchy::dataset_task;
    unsigned threads = 1;
    /// Overrides uniform_resampler(seed) when set.
    Resampler resampler;
};

/// Percentile intervals of every aggregate, recomputed over whole-hierarchy
/// resamples. Each interval is widened to contain its point estimate. A group
/// absent from a resample contributes no value for that resample.
/// Throws InsufficientData with fewer than 2 samples.
Intervals bootstrap_ci(std::span<const SampleScore> samples, const BootstrapOptions& opts);

// ---- benchmark scoring ----------------------------------------------------------

struct ScoreOptions {
    Hierarchy hierarchy = Hierarchy::dataset_task;
    std::size_t n_resamples = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    ImageDims default_image = kDefaultImage;
    /// Gaze-view image size keyed by "dataset/clip_id/timepoint_id".
    std::map<std::string, ImageDims> gaze_images;
};

struct ScoreReport {
    Hierarchy hierarchy = Hierarchy::dataset_task;
    std::size_t n_resamples = 0;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::size_t n_missing = 0;
    std::size_t n_unparseable = 0;
    std::vector<SampleScore> per_sample;  // benchmark order
    Aggregate point;
    std::optional<Intervals> ci;  // absent when fewer than 2 samples
};

/// Scores every benchmark pair. A prediction naming an unknown qa_id, or a
/// second prediction for the same id, is a ValidationError; a pair without a
/// prediction scores 0 and is counted as missing.
ScoreReport score_benchmark(std::span<const QAPair> benchmark, std::span<const qa_io::Prediction> predictions,
                            const ScoreOptions& opts);

nlohmann::ordered_json report_to_json(const ScoreReport& report);

/// Per-task table plus dataset and overall rows, rendered from a report document.
std::string render_text(const nlohmann::json& report);
/// scope,dataset,task,mean,ci_low,ci_high
std::string render_csv(const nlohmann::json& report);

// ---- most-frequent-answer baseline ------------------------------------------------

struct BaselinePredictor {
    std::map<DatasetTask, std::string> answers;
};

/// Categorical tasks: modal answer key per (dataset, task), ties to the
/// lexicographically smallest. Counts, integers and decimals: the training
/// mean in the task's grammar. Boxes and points: component-wise mean. Sets,
/// sequences and triplet lists: the modal full answer string.
BaselinePredictor baseline_fit(std::span<const QAPair> train);
/// Empty string for a (dataset, task) never seen in training.
std::string baseline_predict(const BaselinePredictor& predictor, const QAPair& pair);

} // namespace orbench::scorer
