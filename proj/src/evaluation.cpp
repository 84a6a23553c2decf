#include "pale/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "pale/error.hpp"
#include "pale/file_util.hpp"
#include "pale/prompts.hpp"

namespace pale {

namespace {

struct ClassCounts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

ClassCounts count_classes(std::span<const LabeledScore> scores) {
    ClassCounts c;
    for (const auto& s : scores) {
        if (std::isnan(s.delta)) {
            throw ParameterError("score list contains NaN");
        }
        (s.hallucinated ? c.pos : c.neg) += 1;
    }
    if (c.pos == 0 || c.neg == 0) {
        throw DegenerateLabelsError("AUROC needs both hallucinated and truthful examples (got " +
                                    std::to_string(c.pos) + " hallucinated, " +
                                    std::to_string(c.neg) + " truthful)");
    }
    return c;
}

std::vector<LabeledScore> sorted_descending(std::span<const LabeledScore> scores) {
    std::vector<LabeledScore> v(scores.begin(), scores.end());
    std::sort(v.begin(), v.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.delta > b.delta; });
    return v;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// "- Key: value" -> value when the key matches case-insensitively.
std::optional<std::string_view> field_value(std::string_view line, std::string_view key) {
    line = trim(line);
    while (!line.empty() && (line.front() == '-' || line.front() == '*')) {
        line.remove_prefix(1);
    }
    line = trim(line);
    if (line.size() < key.size() || lower(line.substr(0, key.size())) != key) {
        return std::nullopt;
    }
    line.remove_prefix(key.size());
    line = trim(line);
    if (line.empty() || line.front() != ':') return std::nullopt;
    line.remove_prefix(1);
    return trim(line);
}

CmDetector fit_task(const DetectionTask& task, const MahalanobisConfig& cfg, double tau) {
    return fit_detector(task.train_truthful, task.train_hallucinated, cfg, tau);
}

}  // namespace

double auroc(std::span<const LabeledScore> scores) {
    const ClassCounts counts = count_classes(scores);
    std::vector<LabeledScore> v(scores.begin(), scores.end());
    std::sort(v.begin(), v.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.delta < b.delta; });
    // Twice the Mann-Whitney count, so ties stay integral.
    std::uint64_t twice_wins = 0;
    std::uint64_t neg_below = 0;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        std::uint64_t pos_here = 0;
        std::uint64_t neg_here = 0;
        while (j < v.size() && v[j].delta == v[i].delta) {
            (v[j].hallucinated ? pos_here : neg_here) += 1;
            ++j;
        }
        twice_wins += 2 * pos_here * neg_below + pos_here * neg_here;
        neg_below += neg_here;
        i = j;
    }
    return static_cast<double>(twice_wins) /
           (2.0 * static_cast<double>(counts.pos) * static_cast<double>(counts.neg));
}

std::vector<RocPoint> roc_curve(std::span<const LabeledScore> scores) {
    const ClassCounts counts = count_classes(scores);
    const auto v = sorted_descending(scores);
    std::vector<RocPoint> points{{0.0, 0.0}};
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j < v.size() && v[j].delta == v[i].delta) {
            (v[j].hallucinated ? tp : fp) += 1;
            ++j;
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(counts.neg),
                          static_cast<double>(tp) / static_cast<double>(counts.pos)});
        i = j;
    }
    return points;
}

double trapezoid_area(std::span<const RocPoint> points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
    }
    return area;
}

double accuracy(std::span<const LabeledScore> scores, double tau) {
    if (scores.empty()) {
        throw ParameterError("accuracy of an empty score list");
    }
    std::size_t correct = 0;
    for (const auto& s : scores) {
        const bool predicted = verdict_for(s.delta, tau) == Verdict::Hallucinated;
        correct += predicted == s.hallucinated ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

ScoreHistogram score_histogram(std::span<const LabeledScore> scores, std::size_t bins) {
    if (bins < 2) {
        throw ParameterError("histogram needs at least 2 bins");
    }
    if (scores.empty()) {
        throw ParameterError("histogram of an empty score list");
    }
    count_classes(scores);
    const auto [min_it, max_it] = std::minmax_element(
        scores.begin(), scores.end(),
        [](const LabeledScore& a, const LabeledScore& b) { return a.delta < b.delta; });
    const double lo = min_it->delta;
    const double hi = max_it->delta;
    const double width = (hi - lo) / static_cast<double>(bins);

    ScoreHistogram h;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
        h.edges[b] = lo + width * static_cast<double>(b);
    }
    h.edges[bins] = hi;
    h.truthful.assign(bins, 0);
    h.hallucinated.assign(bins, 0);
    for (const auto& s : scores) {
        std::size_t b = 0;
        if (width > 0.0) {
            b = static_cast<std::size_t>(std::floor((s.delta - lo) / width));
            b = std::min(b, bins - 1);
        }
        (s.hallucinated ? h.hallucinated : h.truthful)[b] += 1;
    }
    return h;
}

std::string histogram_to_csv(const ScoreHistogram& h) {
    std::string out = "bin_lo,bin_hi,count_truthful,count_hallucinated\n";
    for (std::size_t b = 0; b < h.truthful.size(); ++b) {
        out += format_double(h.edges[b]) + ',' + format_double(h.edges[b + 1]) + ',' +
               std::to_string(h.truthful[b]) + ',' + std::to_string(h.hallucinated[b]) + '\n';
    }
    return out;
}

std::string export_score_distribution(std::span<const LabeledScore> scores, std::size_t bins) {
    return histogram_to_csv(score_histogram(scores, bins));
}

std::string roc_to_csv(std::span<const RocPoint> points) {
    std::string out = "fpr,tpr\n";
    for (const auto& p : points) {
        out += format_double(p.fpr) + ',' + format_double(p.tpr) + '\n';
    }
    return out;
}

EvalReport evaluate(std::span<const LabeledScore> scores, double tau, std::size_t bins) {
    EvalReport r;
    const ClassCounts counts = count_classes(scores);
    r.n_pos = counts.pos;
    r.n_neg = counts.neg;
    r.tau = tau;
    r.auroc = auroc(scores);
    r.accuracy = accuracy(scores, tau);
    r.roc_points = roc_curve(scores);
    r.score_histograms = score_histogram(scores, bins);
    return r;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["auroc"] = r.auroc;
    j["accuracy"] = r.accuracy;
    j["tau"] = r.tau;
    j["n_pos"] = r.n_pos;
    j["n_neg"] = r.n_neg;
    auto roc = nlohmann::ordered_json::array();
    for (const auto& p : r.roc_points) roc.push_back({p.fpr, p.tpr});
    j["roc_points"] = std::move(roc);
    nlohmann::ordered_json hist;
    hist["edges"] = r.score_histograms.edges;
    hist["truthful"] = r.score_histograms.truthful;
    hist["hallucinated"] = r.score_histograms.hallucinated;
    j["score_histograms"] = std::move(hist);
    return j;
}

void LabeledMatrix::validate() const {
    if (labels.size() != embeddings.rows()) {
        throw ShapeError("got " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(embeddings.rows()) + " rows");
    }
    for (Label l : labels) {
        if (l == Label::Unlabeled) {
            throw DegenerateLabelsError("evaluation rows must be labeled");
        }
    }
}

LabeledMatrix attach_labels(EmbeddingMatrix m, const Dataset& d) {
    const std::size_t rows = m.rows();
    d.validate_against(rows);
    std::vector<Label> labels(rows, Label::Unlabeled);
    std::vector<bool> seen(rows, false);
    const bool indexed = std::any_of(d.examples.begin(), d.examples.end(),
                                     [](const LabeledExample& e) { return e.embedding_index; });
    if (!indexed && d.examples.size() != rows) {
        throw ShapeError("dataset has " + std::to_string(d.examples.size()) +
                         " examples for " + std::to_string(rows) + " embedding rows");
    }
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
        const auto& ex = d.examples[i];
        if (indexed && !ex.embedding_index) {
            throw ShapeError("example '" + ex.id + "' lacks an embedding_index");
        }
        const std::size_t row = indexed ? *ex.embedding_index : i;
        if (seen[row]) {
            throw ShapeError("embedding row " + std::to_string(row) + " labeled twice");
        }
        seen[row] = true;
        labels[row] = ex.label;
    }
    if (const auto gap = std::find(seen.begin(), seen.end(), false); gap != seen.end()) {
        throw ShapeError("embedding row " + std::to_string(gap - seen.begin()) +
                         " has no example");
    }
    LabeledMatrix out{std::move(m), std::move(labels)};
    out.validate();
    return out;
}

std::vector<LabeledScore> score_labeled(const CmDetector& det, const LabeledMatrix& test) {
    test.validate();
    if (test.embeddings.cols() != det.dim()) {
        throw ShapeError("test embeddings have d=" + std::to_string(test.embeddings.cols()) +
                         ", detector expects d=" + std::to_string(det.dim()));
    }
    std::vector<LabeledScore> out;
    out.reserve(test.embeddings.rows());
    for (std::size_t i = 0; i < test.embeddings.rows(); ++i) {
        out.push_back({cm_score(det, test.embeddings.row(i)).delta,
                       test.labels[i] == Label::Hallucinated});
    }
    return out;
}

void DetectionTask::validate() const {
    const std::size_t d = train_truthful.cols();
    if (train_hallucinated.cols() != d || test.embeddings.cols() != d) {
        throw ShapeError("train/test embeddings disagree on dimension");
    }
    test.validate();
}

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::K:
            return "k";
        case SweepAxis::Tau:
            return "tau";
        case SweepAxis::Layer:
            return "layer";
        case SweepAxis::Template:
            return "template";
    }
    return "k";
}

SweepAxis parse_sweep_axis(std::string_view text) {
    if (text == "k") return SweepAxis::K;
    if (text == "tau") return SweepAxis::Tau;
    if (text == "layer") return SweepAxis::Layer;
    if (text == "template") return SweepAxis::Template;
    throw ParameterError("unknown sweep axis '" + std::string(text) + "'");
}

nlohmann::ordered_json to_json(const SweepResult& r) {
    nlohmann::ordered_json j;
    j["axis"] = std::string(to_string(r.axis));
    j["metric"] = r.metric;
    auto points = nlohmann::ordered_json::array();
    for (const auto& p : r.points) {
        nlohmann::ordered_json pj;
        pj["setting"] = p.setting;
        pj["value"] = p.value;
        pj["auroc"] = p.auroc;
        points.push_back(std::move(pj));
    }
    j["points"] = std::move(points);
    return j;
}

std::string sweep_to_csv(const SweepResult& r) {
    std::string out = std::string(to_string(r.axis)) + ',' + r.metric + ",auroc\n";
    for (const auto& p : r.points) {
        out += format_double(p.setting) + ',' + format_double(p.value) + ',' +
               format_double(p.auroc) + '\n';
    }
    return out;
}

SweepResult setting_sweep(SweepAxis axis, const std::map<int, DetectionTask>& per_setting,
                          const MahalanobisConfig& cfg, double tau) {
    if (per_setting.size() < 2) {
        throw ParameterError(std::string(to_string(axis)) + " sweep needs at least 2 settings");
    }
    SweepResult r;
    r.axis = axis;
    r.metric = "auroc";
    for (const auto& [setting, task] : per_setting) {
        task.validate();
        const auto det = fit_task(task, cfg, tau);
        const double a = auroc(score_labeled(det, task.test));
        r.points.push_back({static_cast<double>(setting), a, a});
    }
    return r;
}

SweepResult layer_sweep(const std::map<int, DetectionTask>& per_layer,
                        const MahalanobisConfig& cfg, double tau) {
    return setting_sweep(SweepAxis::Layer, per_layer, cfg, tau);
}

SweepResult hyperparam_sweep(SweepAxis axis, std::span<const double> values,
                             const DetectionTask& task, const MahalanobisConfig& cfg, double tau) {
    if (axis != SweepAxis::K && axis != SweepAxis::Tau) {
        throw ParameterError("hyperparameter sweeps run over k or tau");
    }
    if (values.empty()) {
        throw ParameterError("sweep value list is empty");
    }
    for (double v : values) {
        if (std::isnan(v)) {
            throw ParameterError("sweep value is NaN");
        }
        if (axis == SweepAxis::K && (v < 1.0 || v != std::floor(v) || !std::isfinite(v))) {
            throw ParameterError("k values must be integers >= 1");
        }
    }
    const std::set<double> settings(values.begin(), values.end());
    task.validate();

    SweepResult r;
    r.axis = axis;
    if (axis == SweepAxis::K) {
        r.metric = "auroc";
        for (double k : settings) {
            MahalanobisConfig c = cfg;
            c.k = static_cast<std::size_t>(k);
            const double a = auroc(score_labeled(fit_task(task, c, tau), task.test));
            r.points.push_back({k, a, a});
        }
    } else {
        r.metric = "accuracy";
        const auto scores = score_labeled(fit_task(task, cfg, tau), task.test);
        const double a = auroc(scores);
        for (double t : settings) {
            r.points.push_back({t, accuracy(scores, t), a});
        }
    }
    return r;
}

nlohmann::ordered_json to_json(const TransferMatrix& t) {
    nlohmann::ordered_json j;
    j["sources"] = t.names;
    j["targets"] = t.names;
    j["auroc"] = t.auroc;
    return j;
}

std::string transfer_to_csv(const TransferMatrix& t) {
    std::string out = "source";
    for (const auto& n : t.names) out += ',' + n;
    out += '\n';
    for (std::size_t s = 0; s < t.names.size(); ++s) {
        out += t.names[s];
        for (double v : t.auroc[s]) out += ',' + format_double(v);
        out += '\n';
    }
    return out;
}

TransferMatrix transfer_eval(const std::map<std::string, DetectionTask>& datasets,
                             const MahalanobisConfig& cfg, double tau) {
    if (datasets.size() < 2) {
        throw ParameterError("transfer evaluation needs at least 2 datasets");
    }
    const std::size_t d = datasets.begin()->second.dim();
    for (const auto& [name, task] : datasets) {
        task.validate();
        if (task.dim() != d) {
            throw ShapeError("dataset '" + name + "' has d=" + std::to_string(task.dim()) +
                             ", expected " + std::to_string(d) +
                             " (embeddings must come from one model and layer)");
        }
    }
    TransferMatrix t;
    for (const auto& [source, source_task] : datasets) {
        t.names.push_back(source);
        const auto det = fit_task(source_task, cfg, tau);
        std::vector<double> row;
        for (const auto& [target, target_task] : datasets) {
            row.push_back(auroc(score_labeled(det, target_task.test)));
        }
        t.auroc.push_back(std::move(row));
    }
    return t;
}

std::optional<JudgeVerdict> parse_judge_verdict(std::string_view reply) {
    std::optional<JudgeVerdict> verdict;
    std::string justification;
    std::istringstream in{std::string(reply)};
    std::string line;
    while (std::getline(in, line)) {
        if (auto v = field_value(line, "answer"); v && !verdict) {
            std::string value = lower(*v);
            if (!value.empty() && value.front() == '[') value.erase(0, 1);
            if (value.starts_with("yes")) {
                verdict = JudgeVerdict{true, {}, std::string(reply)};
            } else if (value.starts_with("no")) {
                verdict = JudgeVerdict{false, {}, std::string(reply)};
            }
        } else if (auto j = field_value(line, "justification"); j && justification.empty()) {
            justification = std::string(*j);
        }
    }
    if (verdict) verdict->justification = std::move(justification);
    return verdict;
}

JudgeVerdict judge_truthfulness(std::string_view question,
                                std::span<const std::string> gold_answers,
                                std::string_view generated, LlmClient& client,
                                const std::string& model, double temperature) {
    ChatRequest req;
    req.model = model;
    req.messages = render_judge_prompt(question, gold_answers, generated);
    req.temperature = temperature;
    std::string last;
    for (int ask = 0; ask < 2; ++ask) {
        last = client.complete(req).content;
        if (auto v = parse_judge_verdict(last)) {
            return *v;
        }
    }
    throw JudgeParseError("judge reply has no 'Answer: Yes/No' line: " + last.substr(0, 200));
}

}  // namespace pale
