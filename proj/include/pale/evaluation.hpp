#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pale/cm_detector.hpp"
#include "pale/dataset.hpp"
#include "pale/gaussian_model.hpp"
#include "pale/llm_client.hpp"
#include "pale/tensor_io.hpp"

namespace pale {

/// A detector score with its ground truth; hallucinated is the positive class.
struct LabeledScore {
    double delta = 0.0;
    bool hallucinated = false;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Mann-Whitney AUROC: (#pairs with delta_pos > delta_neg + 0.5 * #ties) /
/// (n_pos * n_neg). Throws DegenerateLabelsError unless both classes occur
/// and ParameterError on NaN scores.
double auroc(std::span<const LabeledScore> scores);

/// Points from (0,0) to (1,1), one per distinct delta in descending order.
/// Trapezoidal area equals auroc().
std::vector<RocPoint> roc_curve(std::span<const LabeledScore> scores);

double trapezoid_area(std::span<const RocPoint> points);

/// Fraction of scores whose verdict at tau (hallucinated iff delta >= tau)
/// matches the label.
double accuracy(std::span<const LabeledScore> scores, double tau);

struct ScoreHistogram {
    std::vector<double> edges;  // bins + 1 shared edges over [min delta, max delta]
    std::vector<std::size_t> truthful;
    std::vector<std::size_t> hallucinated;
};

/// Throws ParameterError on bins < 2 or empty input and
/// DegenerateLabelsError when a class is missing.
ScoreHistogram score_histogram(std::span<const LabeledScore> scores, std::size_t bins);

/// Columns bin_lo,bin_hi,count_truthful,count_hallucinated.
std::string histogram_to_csv(const ScoreHistogram& h);
std::string export_score_distribution(std::span<const LabeledScore> scores, std::size_t bins);
std::string roc_to_csv(std::span<const RocPoint> points);

struct EvalReport {
    double auroc = 0.0;
    double accuracy = 0.0;  // at `tau`
    double tau = 0.0;
    std::vector<RocPoint> roc_points;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    ScoreHistogram score_histograms;
};

EvalReport evaluate(std::span<const LabeledScore> scores, double tau, std::size_t bins = 20);
nlohmann::ordered_json to_json(const EvalReport& r);

/// Embeddings with per-row ground truth.
struct LabeledMatrix {
    EmbeddingMatrix embeddings;
    std::vector<Label> labels;  // Truthful or Hallucinated per row

    /// Throws ShapeError on a length mismatch and DegenerateLabelsError on
    /// Unlabeled entries.
    void validate() const;
};

/// Rows of `m` paired with labels from `d`. Examples with embedding_index use
/// it; otherwise example order is row order.
LabeledMatrix attach_labels(EmbeddingMatrix m, const Dataset& d);

std::vector<LabeledScore> score_labeled(const CmDetector& det, const LabeledMatrix& test);

/// Training matrices of both classes plus a labeled held-out split.
struct DetectionTask {
    EmbeddingMatrix train_truthful;
    EmbeddingMatrix train_hallucinated;
    LabeledMatrix test;

    std::size_t dim() const { return train_truthful.cols(); }
    void validate() const;
};

enum class SweepAxis { K, Tau, Layer, Template };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view text);

struct SweepPoint {
    double setting = 0.0;
    double value = 0.0;   // AUROC, or accuracy on the tau axis
    double auroc = 0.0;   // always the threshold-free AUROC
};

struct SweepResult {
    SweepAxis axis = SweepAxis::K;
    std::string metric;  // "auroc" or "accuracy"
    std::vector<SweepPoint> points;  // sorted by setting, unique
};

nlohmann::ordered_json to_json(const SweepResult& r);
std::string sweep_to_csv(const SweepResult& r);

/// Fits a detector per setting (a layer or template id) and reports AUROC on
/// its held-out rows. Throws ParameterError with fewer than 2 settings and
/// ShapeError when a setting's matrices disagree on d.
SweepResult setting_sweep(SweepAxis axis, const std::map<int, DetectionTask>& per_setting,
                          const MahalanobisConfig& cfg, double tau);

SweepResult layer_sweep(const std::map<int, DetectionTask>& per_layer,
                        const MahalanobisConfig& cfg, double tau);

/// K axis: one fit per k, AUROC. Tau axis: one fit, accuracy per tau. Values
/// are deduplicated and sorted. Throws ParameterError on an empty or invalid
/// value list (k < 1, NaN tau).
SweepResult hyperparam_sweep(SweepAxis axis, std::span<const double> values,
                             const DetectionTask& task, const MahalanobisConfig& cfg, double tau);

struct TransferMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> auroc;  // [source][target]
};

nlohmann::ordered_json to_json(const TransferMatrix& t);
std::string transfer_to_csv(const TransferMatrix& t);

/// Fits on each source's training split and scores every target's test split.
/// Throws ParameterError with fewer than 2 datasets and ShapeError when d
/// differs between datasets.
TransferMatrix transfer_eval(const std::map<std::string, DetectionTask>& datasets,
                             const MahalanobisConfig& cfg, double tau);

struct JudgeVerdict {
    bool truthful = false;  // "Answer: Yes"
    std::string justification;
    std::string raw;
};

/// Parses "- Answer: Yes/No" (case-insensitive). Returns nullopt when absent.
std::optional<JudgeVerdict> parse_judge_verdict(std::string_view reply);

/// LLM-as-judge truthfulness check. An unparseable reply is retried once,
/// then JudgeParseError. Transport errors propagate.
JudgeVerdict judge_truthfulness(std::string_view question,
                                std::span<const std::string> gold_answers,
                                std::string_view generated, LlmClient& client,
                                const std::string& model, double temperature = 0.0);

}  // namespace pale
