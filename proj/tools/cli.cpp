#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pale/augmentation.hpp"
#include "pale/cm_detector.hpp"
#include "pale/dataset.hpp"
#include "pale/error.hpp"
#include "pale/evaluation.hpp"
#include "pale/file_util.hpp"
#include "pale/gaussian_model.hpp"
#include "pale/llm_client.hpp"
#include "pale/log.hpp"
#include "pale/tensor_io.hpp"

namespace pale::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::uint64_t seed = 0;
};

struct DetectorOptions {
    std::size_t k = 5;
    double tau = kDefaultTau;
    double epsilon_rel = 1e-6;
    std::string residual_mode = "ignore";

    MahalanobisConfig config() const {
        MahalanobisConfig cfg;
        cfg.k = k;
        cfg.epsilon_rel = epsilon_rel;
        cfg.residual_mode = parse_residual_mode(residual_mode);
        cfg.validate();
        return cfg;
    }
};

struct AugmentOptions {
    std::string questions;
    std::string out;
    std::string audit;
    std::string journal;
    std::string endpoint = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
    int template_id = 1;
    std::string generator_model = "gpt-4o";
    std::string judge_model = "gpt-4o";
    std::size_t concurrency = 4;
    int max_retries = 3;
    int retry_base_ms = 1000;
    double temperature = 0.5;
    int timeout_s = 60;
    std::string source;
};

struct FitOptions {
    std::string truthful;
    std::string hallucinated;
    std::string out;
};

struct ScoreOptions {
    std::string model;
    std::string embeddings;
    std::string ids;
    std::string dataset;
    std::string out;
};

struct EvalOptions {
    std::vector<std::string> scores;
    std::vector<std::string> labels;
    std::string label_source = "label";
    double similarity_threshold = 0.5;
    std::size_t bins = 20;
    std::string out;
};

struct SweepOptions {
    std::string axis;
    std::string train_truthful;
    std::string train_hallucinated;
    std::string test;
    std::string test_labels;
    std::string manifest;
    std::vector<double> values;
    std::string out;
};

struct TransferOptions {
    std::string manifest;
    std::string out;
};

std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << v;
    return ss.str();
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Hash covers settings only; file locations do not change results.
std::string settings_string(const CLI::App& sub) {
    static const std::set<std::string> kPathKeys = {
        "questions", "out",      "audit",         "journal",            "truthful",
        "hallucinated", "model", "embeddings",    "ids",                "dataset",
        "scores",    "labels",   "train-truthful", "train-hallucinated", "test",
        "test-labels", "manifest"};
    std::istringstream in(sub.config_to_str(true, false));
    std::string kept, line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) {
            std::string key = line.substr(0, eq);
            while (!key.empty() && key.back() == ' ') key.pop_back();
            if (kPathKeys.count(key) != 0) continue;
        }
        kept += line;
        kept += '\n';
    }
    return kept;
}

nlohmann::ordered_json metadata(const CLI::App& sub, std::uint64_t seed) {
    nlohmann::ordered_json meta;
    meta["tool"] = "pale";
    meta["version"] = PALE_VERSION;
    meta["command"] = sub.get_name();
    meta["seed"] = seed;
    meta["config_hash"] = hex64(fnv1a(settings_string(sub)));
    return meta;
}

void require_file(const std::string& path, const char* what) {
    if (path.empty() || !fs::is_regular_file(path)) {
        throw ParameterError(std::string(what) + " not found: " + path);
    }
}

fs::path with_suffix(const fs::path& base, const std::string& suffix) {
    fs::path p = base;
    p.replace_extension();
    p += suffix;
    return p;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

// Writes `<csv>` plus `<csv stem>.meta.json` describing how it was produced.
void write_csv_with_meta(const fs::path& path, const std::string& csv,
                         const nlohmann::ordered_json& meta) {
    write_file_atomic(path, csv);
    write_json(with_suffix(path, ".meta.json"), meta);
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

Label example_label(const LabeledExample& ex, const EvalOptions& o) {
    if (o.label_source == "similarity") {
        if (!ex.similarity) {
            throw ValidationError("example '" + ex.id + "' has no similarity score");
        }
        return label_from_similarity(*ex.similarity, o.similarity_threshold);
    }
    return ex.label;
}

LabeledMatrix load_labeled(const fs::path& embeddings, const fs::path& labels) {
    require_file(embeddings.string(), "embeddings file");
    require_file(labels.string(), "labels file");
    return attach_labels(read_matrix_file(embeddings), read_dataset_file(labels));
}

DetectionTask load_task(const fs::path& train_truthful, const fs::path& train_hallucinated,
                        const fs::path& test, const fs::path& test_labels) {
    require_file(train_truthful.string(), "truthful training embeddings");
    require_file(train_hallucinated.string(), "hallucinated training embeddings");
    DetectionTask task{read_matrix_file(train_truthful), read_matrix_file(train_hallucinated),
                       load_labeled(test, test_labels)};
    task.validate();
    return task;
}

// {"entries": {"<name>": {"train_truthful", "train_hallucinated", "test",
// "test_labels"}}}; relative paths resolve against the manifest directory.
std::map<std::string, DetectionTask> load_manifest(const fs::path& path) {
    require_file(path.string(), "manifest");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    if (!j.contains("entries") || !j["entries"].is_object()) {
        throw ValidationError("manifest needs an 'entries' object");
    }
    const fs::path dir = path.parent_path();
    auto resolve = [&](const nlohmann::json& entry, const char* key) {
        fs::path p = entry.at(key).get<std::string>();
        return p.is_absolute() ? p : dir / p;
    };
    std::map<std::string, DetectionTask> out;
    for (const auto& [name, entry] : j["entries"].items()) {
        try {
            out.emplace(name, load_task(resolve(entry, "train_truthful"),
                                        resolve(entry, "train_hallucinated"),
                                        resolve(entry, "test"), resolve(entry, "test_labels")));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("manifest entry '" + name + "': " + e.what());
        }
    }
    return out;
}

std::map<int, DetectionTask> numeric_keys(std::map<std::string, DetectionTask> tasks) {
    std::map<int, DetectionTask> out;
    for (auto& [name, task] : tasks) {
        int key = 0;
        try {
            std::size_t used = 0;
            key = std::stoi(name, &used);
            if (used != name.size()) throw std::invalid_argument(name);
        } catch (const std::exception&) {
            throw ValidationError("manifest key '" + name + "' is not an integer setting");
        }
        out.emplace(key, std::move(task));
    }
    return out;
}

int cmd_augment(const CLI::App& sub, const AugmentOptions& o, const CommonOptions& common,
                std::ostream& out) {
    require_file(o.questions, "questions file");
    const auto questions = read_questions_file(o.questions);

    AugmentationConfig cfg;
    cfg.template_id = o.template_id;
    cfg.generator_model = o.generator_model;
    cfg.judge_model = o.judge_model;
    cfg.concurrency = o.concurrency;
    cfg.max_retries = o.max_retries;
    cfg.retry_base_delay = std::chrono::milliseconds(o.retry_base_ms);
    cfg.temperature = o.temperature;
    cfg.seed = common.seed;
    cfg.validate();

    Endpoint endpoint = endpoint_from_env(o.endpoint, o.api_key_env);
    endpoint.timeout = std::chrono::seconds(o.timeout_s);
    HttpChatClient client(endpoint, static_cast<std::ptrdiff_t>(cfg.concurrency));

    const fs::path out_path = o.out;
    BuildOptions build;
    build.journal_path = o.journal.empty() ? with_suffix(out_path, ".journal.jsonl")
                                           : fs::path(o.journal);
    build.metadata.source = o.source.empty() ? fs::path(o.questions).stem().string() : o.source;
    const auto meta = metadata(sub, common.seed);
    for (const auto& [key, value] : meta.items()) {
        build.metadata.extra[key] = value;
    }

    const BuildResult result = build_dataset(cfg, questions, client, build);
    write_dataset_file(result.dataset, out_path);
    const fs::path audit_path =
        o.audit.empty() ? with_suffix(out_path, ".audit.jsonl") : fs::path(o.audit);
    write_file_atomic(audit_path, audit_jsonl(cfg, result.records));

    out << "questions=" << questions.size() << " passed=" << result.passed
        << " filtered=" << result.filtered << " failed=" << result.failed
        << " resumed=" << result.resumed << " examples=" << result.dataset.examples.size()
        << "\n";
    out << "wrote " << out_path.string() << "\n";
    return kExitOk;
}

int cmd_fit(const CLI::App& sub, const FitOptions& o, const DetectorOptions& d,
            const CommonOptions& common, std::ostream& out, std::ostream& err) {
    require_file(o.truthful, "truthful embeddings");
    require_file(o.hallucinated, "hallucinated embeddings");
    const auto cfg = d.config();
    const auto truthful = read_matrix_file(o.truthful);
    const auto hallucinated = read_matrix_file(o.hallucinated);
    const CmDetector det = fit_detector(truthful, hallucinated, cfg, d.tau);

    for (const GaussianModel* g : {&det.truthful(), &det.hallucinated()}) {
        if (g->rank() < cfg.k) {
            err << "warning: k=" << cfg.k << " exceeds the rank bound of a class with n="
                << g->sample_count() << ", d=" << g->dim() << "; clamped to " << g->rank()
                << "\n";
        }
    }
    write_file_atomic(o.out, save_detector(det, metadata(sub, common.seed)));

    out << "d=" << det.dim() << " k_truthful=" << det.truthful().rank()
        << " k_hallucinated=" << det.hallucinated().rank() << " tau=" << format_double(det.tau())
        << "\n";
    auto print_top = [&](const char* name, const GaussianModel& g) {
        out << "top eigenvalues (" << name << "):";
        for (Eigen::Index j = 0; j < std::min<Eigen::Index>(g.eigenvalues().size(), 5); ++j) {
            out << ' ' << format_double(g.eigenvalues()(j));
        }
        out << "\n";
    };
    print_top("truthful", det.truthful());
    print_top("hallucinated", det.hallucinated());
    out << "wrote " << o.out << "\n";
    return kExitOk;
}

int cmd_score(const CLI::App& sub, const ScoreOptions& o, const CommonOptions& common,
              std::ostream& out) {
    require_file(o.model, "model file");
    require_file(o.embeddings, "embeddings file");
    const CmDetector det = load_detector(read_file(o.model));
    const auto m = read_matrix_file(o.embeddings);

    std::vector<std::string> ids(m.rows());
    if (!o.ids.empty()) {
        require_file(o.ids, "ids file");
        ids = read_lines(o.ids);
    } else if (!o.dataset.empty()) {
        require_file(o.dataset, "dataset file");
        const Dataset ds = read_dataset_file(o.dataset);
        ds.validate_against(m.rows());
        if (ds.examples.size() != m.rows()) {
            throw ShapeError("dataset has " + std::to_string(ds.examples.size()) +
                             " examples for " + std::to_string(m.rows()) + " rows");
        }
        for (std::size_t i = 0; i < ds.examples.size(); ++i) {
            const auto& ex = ds.examples[i];
            ids[ex.embedding_index.value_or(i)] = ex.id;
        }
    } else {
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);
    }

    const auto scores = batch_score(det, m, ids);
    write_csv_with_meta(o.out, scores_to_csv(scores), metadata(sub, common.seed));

    std::size_t hallucinated = 0;
    for (const auto& s : scores) hallucinated += s.verdict == Verdict::Hallucinated ? 1 : 0;
    out << "scored " << scores.size() << " rows: hallucinated=" << hallucinated
        << " truthful=" << scores.size() - hallucinated << "\n";
    return kExitOk;
}

int cmd_eval(const CLI::App& sub, const EvalOptions& o, const DetectorOptions& d,
             const CommonOptions& common, std::ostream& out) {
    std::map<std::string, Label> labels;
    for (const auto& path : o.labels) {
        require_file(path, "labels file");
        for (const auto& ex : read_dataset_file(path).examples) {
            labels[ex.id] = example_label(ex, o);
        }
    }
    std::vector<LabeledScore> scored;
    for (const auto& path : o.scores) {
        require_file(path, "scores file");
        for (const auto& s : scores_from_csv(read_file(path))) {
            const auto it = labels.find(s.id);
            if (it == labels.end()) {
                throw ShapeError("no label for scored id '" + s.id + "'");
            }
            if (it->second == Label::Unlabeled) continue;
            scored.push_back({s.delta, it->second == Label::Hallucinated});
        }
    }
    const EvalReport report = evaluate(scored, d.tau, o.bins);

    auto j = to_json(report);
    auto meta = metadata(sub, common.seed);
    meta["label_source"] = o.label_source;
    j["meta"] = meta;
    const fs::path report_path = o.out;
    write_json(report_path, j);
    write_file_atomic(with_suffix(report_path, ".roc.csv"), roc_to_csv(report.roc_points));
    write_file_atomic(with_suffix(report_path, ".hist.csv"),
                      histogram_to_csv(report.score_histograms));

    out << "auroc=" << format_double(report.auroc) << " accuracy@tau=" << format_double(d.tau)
        << ":" << format_double(report.accuracy) << " n_pos=" << report.n_pos
        << " n_neg=" << report.n_neg << "\n";
    return kExitOk;
}

int cmd_sweep(const CLI::App& sub, const SweepOptions& o, const DetectorOptions& d,
              const CommonOptions& common, std::ostream& out) {
    const SweepAxis axis = parse_sweep_axis(o.axis);
    const auto cfg = d.config();
    SweepResult result;
    if (axis == SweepAxis::K || axis == SweepAxis::Tau) {
        const auto task =
            load_task(o.train_truthful, o.train_hallucinated, o.test, o.test_labels);
        result = hyperparam_sweep(axis, o.values, task, cfg, d.tau);
    } else {
        result = setting_sweep(axis, numeric_keys(load_manifest(o.manifest)), cfg, d.tau);
    }
    auto j = to_json(result);
    j["meta"] = metadata(sub, common.seed);
    write_json(o.out, j);
    write_file_atomic(with_suffix(o.out, ".csv"), sweep_to_csv(result));
    for (const auto& p : result.points) {
        out << to_string(axis) << "=" << format_double(p.setting) << " " << result.metric << "="
            << format_double(p.value) << "\n";
    }
    return kExitOk;
}

int cmd_transfer(const CLI::App& sub, const TransferOptions& o, const DetectorOptions& d,
                 const CommonOptions& common, std::ostream& out) {
    const auto cfg = d.config();
    const TransferMatrix t = transfer_eval(load_manifest(o.manifest), cfg, d.tau);
    auto j = to_json(t);
    j["meta"] = metadata(sub, common.seed);
    write_json(o.out, j);
    write_file_atomic(with_suffix(o.out, ".csv"), transfer_to_csv(t));
    out << transfer_to_csv(t);
    return kExitOk;
}

void add_seed(CLI::App* sub, CommonOptions& common) {
    sub->add_option("--seed", common.seed, "Seed recorded in output metadata")
        ->capture_default_str();
}

void add_detector_options(CLI::App* sub, DetectorOptions& d) {
    sub->add_option("--k", d.k, "Retained rank per class model")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--tau", d.tau, "Decision threshold on the CM score")->capture_default_str();
    sub->add_option("--epsilon-rel", d.epsilon_rel,
                    "Variance floor relative to the largest eigenvalue")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--residual-mode", d.residual_mode,
                    "Out-of-subspace residual handling: ignore or floor")
        ->capture_default_str()
        ->check(CLI::IsMember({"ignore", "floor"}));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hallucination detection with contrastive Mahalanobis scores", "pale"};
    app.set_version_flag("--version", std::string(PALE_VERSION));
    app.set_config("--config", "", "TOML config file with one table per subcommand");
    app.require_subcommand(1);

    CommonOptions common;
    DetectorOptions det_opts;

    AugmentOptions aug;
    auto* augment = app.add_subcommand("augment", "Generate truthful/hallucinated QA pairs");
    augment->add_option("--questions", aug.questions, "Questions JSONL {id, question, reference_answer}")
        ->required();
    augment->add_option("--out", aug.out, "Output dataset JSONL")->required();
    augment->add_option("--audit", aug.audit, "Audit JSONL (default <out>.audit.jsonl)");
    augment->add_option("--journal", aug.journal, "Resume journal (default <out>.journal.jsonl)");
    augment->add_option("--endpoint", aug.endpoint, "OpenAI-compatible base URL")
        ->capture_default_str();
    augment->add_option("--api-key-env", aug.api_key_env, "Environment variable holding the API key")
        ->capture_default_str();
    augment->add_option("--template", aug.template_id, "Prompt template id")
        ->capture_default_str()
        ->check(CLI::Range(1, 10));
    augment->add_option("--generator-model", aug.generator_model, "Model generating answers")
        ->capture_default_str();
    augment->add_option("--judge-model", aug.judge_model, "Model judging answer pairs")
        ->capture_default_str();
    augment->add_option("--concurrency", aug.concurrency, "Questions in flight")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    augment->add_option("--max-retries", aug.max_retries, "Retries per call on transport errors")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    augment->add_option("--retry-base-ms", aug.retry_base_ms, "Backoff base delay in milliseconds")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    augment->add_option("--temperature", aug.temperature, "Generation sampling temperature")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    augment->add_option("--timeout", aug.timeout_s, "Per-request timeout in seconds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    augment->add_option("--source", aug.source, "Dataset source name (default questions file stem)");
    add_seed(augment, common);

    FitOptions fit_opts;
    auto* fit = app.add_subcommand("fit", "Fit a detector from truthful and hallucinated embeddings");
    fit->add_option("--truthful", fit_opts.truthful, "Truthful EMB1 matrix")->required();
    fit->add_option("--hallucinated", fit_opts.hallucinated, "Hallucinated EMB1 matrix")->required();
    fit->add_option("--out", fit_opts.out, "Output CMD1 model")->required();
    add_detector_options(fit, det_opts);
    add_seed(fit, common);

    ScoreOptions score_opts;
    auto* score = app.add_subcommand("score", "Score embeddings with a fitted detector");
    score->add_option("--model", score_opts.model, "CMD1 model")->required();
    score->add_option("--embeddings", score_opts.embeddings, "EMB1 matrix to score")->required();
    auto* ids_opt = score->add_option("--ids", score_opts.ids, "Text file with one id per row");
    score->add_option("--dataset", score_opts.dataset, "Dataset JSONL providing row ids")
        ->excludes(ids_opt);
    score->add_option("--out", score_opts.out, "Output scores CSV")->required();
    add_seed(score, common);

    EvalOptions eval_opts;
    auto* eval = app.add_subcommand("eval", "AUROC, accuracy and score histograms");
    eval->add_option("--scores", eval_opts.scores, "Scores CSV (repeatable)")->required();
    eval->add_option("--labels", eval_opts.labels, "Dataset JSONL with labels (repeatable)")
        ->required();
    eval->add_option("--label-source", eval_opts.label_source,
                     "Ground truth from 'label' or 'similarity'")
        ->capture_default_str()
        ->check(CLI::IsMember({"label", "similarity"}));
    eval->add_option("--similarity-threshold", eval_opts.similarity_threshold,
                     "Similarity above which an answer counts as truthful")
        ->capture_default_str();
    eval->add_option("--tau", det_opts.tau, "Threshold for the reported accuracy")
        ->capture_default_str();
    eval->add_option("--bins", eval_opts.bins, "Histogram bins")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
    eval->add_option("--out", eval_opts.out, "Report JSON; .roc.csv and .hist.csv written alongside")
        ->required();
    add_seed(eval, common);

    SweepOptions sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Ablation over k, tau, layer or template");
    sweep->add_option("--axis", sweep_opts.axis, "k, tau, layer or template")
        ->required()
        ->check(CLI::IsMember({"k", "tau", "layer", "template"}));
    sweep->add_option("--train-truthful", sweep_opts.train_truthful, "Truthful training EMB1 (k/tau)");
    sweep->add_option("--train-hallucinated", sweep_opts.train_hallucinated,
                      "Hallucinated training EMB1 (k/tau)");
    sweep->add_option("--test", sweep_opts.test, "Test EMB1 (k/tau)");
    sweep->add_option("--test-labels", sweep_opts.test_labels, "Test dataset JSONL (k/tau)");
    sweep->add_option("--values", sweep_opts.values, "Comma-separated settings (k/tau)")
        ->delimiter(',');
    sweep->add_option("--manifest", sweep_opts.manifest, "Per-setting manifest JSON (layer/template)");
    sweep->add_option("--out", sweep_opts.out, "Report JSON; .csv written alongside")->required();
    add_detector_options(sweep, det_opts);
    add_seed(sweep, common);

    TransferOptions transfer_opts;
    auto* transfer = app.add_subcommand("transfer", "Cross-dataset AUROC grid");
    transfer->add_option("--manifest", transfer_opts.manifest, "Per-dataset manifest JSON")
        ->required();
    transfer->add_option("--out", transfer_opts.out, "Report JSON; .csv written alongside")
        ->required();
    add_detector_options(transfer, det_opts);
    add_seed(transfer, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (augment->parsed()) return cmd_augment(*augment, aug, common, out);
        if (fit->parsed()) return cmd_fit(*fit, fit_opts, det_opts, common, out, err);
        if (score->parsed()) return cmd_score(*score, score_opts, common, out);
        if (eval->parsed()) return cmd_eval(*eval, eval_opts, det_opts, common, out);
        if (sweep->parsed()) {
            const bool hyper = sweep_opts.axis == "k" || sweep_opts.axis == "tau";
            if (hyper && (sweep_opts.train_truthful.empty() || sweep_opts.values.empty())) {
                throw ParameterError("k/tau sweeps need --train-truthful, --train-hallucinated, "
                                     "--test, --test-labels and --values");
            }
            if (!hyper && sweep_opts.manifest.empty()) {
                throw ParameterError("layer/template sweeps need --manifest");
            }
            return cmd_sweep(*sweep, sweep_opts, det_opts, common, out);
        }
        if (transfer->parsed()) return cmd_transfer(*transfer, transfer_opts, det_opts, common, out);
    } catch (const GenerationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const FilterError& e) {
        err << "error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const TransportError& e) {
        err << "error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const ProtocolError& e) {
        err << "error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace pale::cli
