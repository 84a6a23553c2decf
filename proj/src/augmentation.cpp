#include "pale/augmentation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pale/error.hpp"
#include "pale/file_util.hpp"
#include "pale/log.hpp"

namespace pale {

namespace {

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

struct CallResult {
    std::string content;
    int attempts = 0;
};

// Runs one chat call with the augmentation retry budget. Only transport
// errors are retried; the last one is rethrown when the budget runs out.
CallResult call_with_retries(const AugmentationConfig& cfg, LlmClient& client,
                             const ChatRequest& req, Backoff& backoff) {
    const int max_attempts = cfg.max_retries + 1;
    for (int attempt = 1;; ++attempt) {
        try {
            return {client.complete(req).content, attempt};
        } catch (const TransportError&) {
            if (attempt >= max_attempts) throw;
            backoff.sleep(backoff.delay(attempt));
        }
    }
}

Backoff make_backoff(const AugmentationConfig& cfg) {
    RetryPolicy policy;
    policy.max_attempts = cfg.max_retries + 1;
    policy.base_delay = cfg.retry_base_delay;
    policy.seed = cfg.seed;
    return Backoff(policy);
}

ChatRequest generation_request(const AugmentationConfig& cfg, std::vector<ChatMessage> messages) {
    ChatRequest req;
    req.model = cfg.generator_model;
    req.messages = std::move(messages);
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    return req;
}

std::string generate_one(const AugmentationConfig& cfg, LlmClient& client, Backoff& backoff,
                         GenerationKind kind, const PromptTemplate& tmpl,
                         std::string_view question, std::string_view reference,
                         AugmentationRecord& record, int& attempts) {
    const auto req = generation_request(
        cfg, render_generation_prompt(kind, tmpl, question, reference));
    CallResult result;
    try {
        result = call_with_retries(cfg, client, req, backoff);
    } catch (const TransportError& e) {
        throw GenerationError("generation failed after " + std::to_string(cfg.max_retries + 1) +
                              " attempts: " + e.what());
    }
    attempts = result.attempts;
    record.raw_responses.push_back(result.content);
    const std::string_view answer = strip_cue(record.raw_responses.back(), cue_for(kind));
    if (is_blank(answer)) {
        throw EmptyGenerationError(std::string("empty ") +
                                   (kind == GenerationKind::Truth ? "truthful" : "hallucinated") +
                                   " generation");
    }
    return std::string(answer);
}

std::string status_of(const AugmentationRecord& r) {
    if (r.filter_passed.value_or(false)) return "passed";
    if (r.filter_reason == kReasonJudgePreferredHallucination) return "filtered";
    return "failed";
}

std::map<std::string, AugmentationRecord> load_journal(const std::filesystem::path& path) {
    std::map<std::string, AugmentationRecord> done;
    if (path.empty() || !std::filesystem::exists(path)) {
        return done;
    }
    std::ifstream in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            auto record = record_from_json(j.at("record"));
            done[j.at("question_id").get<std::string>()] = std::move(record);
        } catch (const std::exception& e) {
            log_warn("skipping unreadable journal line " + std::to_string(lineno) + ": " +
                     e.what());
        }
    }
    return done;
}

}  // namespace

void AugmentationConfig::validate() const {
    if (max_retries < 0) {
        throw ParameterError("max retries must be >= 0");
    }
    if (concurrency < 1) {
        throw ParameterError("concurrency must be >= 1");
    }
    if (!(temperature >= 0.0) || !(judge_temperature >= 0.0)) {
        throw ParameterError("temperatures must be >= 0");
    }
    if (retry_base_delay.count() < 0) {
        throw ParameterError("retry base delay must be >= 0");
    }
    template_by_id(template_id);
}

std::vector<QuestionItem> parse_questions_jsonl(std::string_view text) {
    std::vector<QuestionItem> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            QuestionItem q{j.at("id").get<std::string>(), j.at("question").get<std::string>(),
                           j.at("reference_answer").get<std::string>()};
            if (q.id.empty() || q.question.empty()) {
                throw ValidationError("questions line " + std::to_string(lineno) +
                                      ": id and question must be non-empty");
            }
            out.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("questions line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    std::vector<std::string_view> ids;
    for (const auto& q : out) ids.push_back(q.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw ValidationError("duplicate question id in questions file");
    }
    return out;
}

std::vector<QuestionItem> read_questions_file(const std::filesystem::path& path) {
    return parse_questions_jsonl(read_file(path));
}

nlohmann::ordered_json to_json(const AugmentationRecord& r) {
    nlohmann::ordered_json j;
    j["question_id"] = r.question_id;
    j["question"] = r.question;
    j["reference_answer"] = r.reference_answer;
    j["template_id"] = r.template_id;
    j["truthful_answer"] = r.truthful_answer;
    j["hallucinated_answer"] = r.hallucinated_answer;
    j["filter_passed"] = r.filter_passed ? nlohmann::ordered_json(*r.filter_passed)
                                         : nlohmann::ordered_json();
    j["filter_reason"] = r.filter_reason;
    j["raw_responses"] = r.raw_responses;
    j["truth_attempts"] = r.truth_attempts;
    j["hallucination_attempts"] = r.hallucination_attempts;
    j["judge_attempts"] = r.judge_attempts;
    return j;
}

AugmentationRecord record_from_json(const nlohmann::json& j) {
    AugmentationRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.reference_answer = j.at("reference_answer").get<std::string>();
    r.template_id = j.at("template_id").get<int>();
    r.truthful_answer = j.at("truthful_answer").get<std::string>();
    r.hallucinated_answer = j.at("hallucinated_answer").get<std::string>();
    if (!j.at("filter_passed").is_null()) {
        r.filter_passed = j.at("filter_passed").get<bool>();
    }
    r.filter_reason = j.at("filter_reason").get<std::string>();
    r.raw_responses = j.at("raw_responses").get<std::vector<std::string>>();
    r.truth_attempts = j.at("truth_attempts").get<int>();
    r.hallucination_attempts = j.at("hallucination_attempts").get<int>();
    r.judge_attempts = j.at("judge_attempts").get<int>();
    return r;
}

std::string_view strip_cue(std::string_view response, std::string_view cue) {
    if (!response.starts_with(cue)) {
        return response;
    }
    response.remove_prefix(cue.size());
    while (!response.empty() && std::isspace(static_cast<unsigned char>(response.front()))) {
        response.remove_prefix(1);
    }
    return response;
}

JudgeChoice parse_judge_choice(std::string_view reply) {
    const bool one = reply.find(kJudgeAnswer1) != std::string_view::npos;
    const bool two = reply.find(kJudgeAnswer2) != std::string_view::npos;
    if (one == two) return JudgeChoice::Unparseable;
    return one ? JudgeChoice::Answer1 : JudgeChoice::Answer2;
}

AugmentationRecord generate_pair(const AugmentationConfig& cfg, const QuestionItem& question,
                                 LlmClient& client) {
    cfg.validate();
    const PromptTemplate& tmpl = template_by_id(cfg.template_id);
    Backoff backoff = make_backoff(cfg);
    AugmentationRecord record;
    record.question_id = question.id;
    record.question = question.question;
    record.reference_answer = question.reference_answer;
    record.template_id = cfg.template_id;
    record.truthful_answer =
        generate_one(cfg, client, backoff, GenerationKind::Truth, tmpl, question.question,
                     question.reference_answer, record, record.truth_attempts);
    record.hallucinated_answer =
        generate_one(cfg, client, backoff, GenerationKind::Hallucination, tmpl,
                     question.question, question.reference_answer, record,
                     record.hallucination_attempts);
    return record;
}

AugmentationRecord generate_pair(const AugmentationConfig& cfg, std::string_view question,
                                 std::string_view reference_answer, LlmClient& client) {
    return generate_pair(
        cfg, QuestionItem{"", std::string(question), std::string(reference_answer)}, client);
}

AugmentationRecord filter_pair(const AugmentationConfig& cfg, AugmentationRecord record,
                               LlmClient& client) {
    if (record.truthful_answer.empty() || record.hallucinated_answer.empty()) {
        throw StateError("record '" + record.question_id + "' has no answer pair to filter");
    }
    Backoff backoff = make_backoff(cfg);
    ChatRequest req;
    req.model = cfg.judge_model;
    req.messages = render_filter_prompt(record.truthful_answer, record.hallucinated_answer);
    req.temperature = cfg.judge_temperature;
    req.max_tokens = cfg.max_tokens;

    for (int ask = 0; ask < 2; ++ask) {
        CallResult result;
        try {
            result = call_with_retries(cfg, client, req, backoff);
        } catch (const TransportError& e) {
            throw FilterError("judge call failed after " + std::to_string(cfg.max_retries + 1) +
                              " attempts: " + e.what());
        }
        record.judge_attempts += result.attempts;
        record.raw_responses.push_back(result.content);
        switch (parse_judge_choice(result.content)) {
            case JudgeChoice::Answer1:
                record.filter_passed = true;
                record.filter_reason.clear();
                return record;
            case JudgeChoice::Answer2:
                record.filter_passed = false;
                record.filter_reason = kReasonJudgePreferredHallucination;
                return record;
            case JudgeChoice::Unparseable:
                break;
        }
    }
    record.filter_passed = false;
    record.filter_reason = kReasonUnparseableJudge;
    return record;
}

BuildResult build_dataset(const AugmentationConfig& cfg, std::span<const QuestionItem> questions,
                          LlmClient& client, const BuildOptions& options) {
    cfg.validate();
    if (questions.empty()) {
        throw ParameterError("question list is empty");
    }

    std::map<std::string, AugmentationRecord> finished = load_journal(options.journal_path);
    BuildResult result;
    std::vector<const QuestionItem*> pending;
    for (const auto& q : questions) {
        if (finished.contains(q.id)) {
            ++result.resumed;
        } else {
            pending.push_back(&q);
        }
    }

    std::ofstream journal;
    if (!options.journal_path.empty() && !pending.empty()) {
        journal.open(options.journal_path, std::ios::app);
        if (!journal) {
            throw IoError("cannot open journal " + options.journal_path.string());
        }
    }

    std::mutex mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;

    auto worker = [&] {
        while (!abort.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const QuestionItem& q = *pending[i];
            AugmentationRecord record;
            try {
                record = filter_pair(cfg, generate_pair(cfg, q, client), client);
            } catch (const EmptyGenerationError& e) {
                record.question_id = q.id;
                record.question = q.question;
                record.reference_answer = q.reference_answer;
                record.template_id = cfg.template_id;
                record.filter_passed = false;
                record.filter_reason = kReasonEmptyGeneration;
                log_warn("question '" + q.id + "' excluded: " + e.what());
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!first_error) first_error = std::current_exception();
                abort = true;
                return;
            }
            if (!record.filter_passed.value_or(false) &&
                record.filter_reason != kReasonEmptyGeneration) {
                log_info("question '" + q.id + "' rejected: " + record.filter_reason);
            }
            std::lock_guard lock(mutex);
            if (journal.is_open()) {
                nlohmann::ordered_json line;
                line["question_id"] = record.question_id;
                line["status"] = status_of(record);
                line["attempt_count"] = record.attempt_count();
                line["record"] = to_json(record);
                journal << line.dump() << '\n';
                journal.flush();
            }
            finished[record.question_id] = std::move(record);
        }
    };

    const std::size_t n_threads = std::min(cfg.concurrency, pending.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    result.dataset.metadata = options.metadata;
    result.dataset.metadata.extra["template_id"] = cfg.template_id;
    result.dataset.metadata.extra["generator_model"] = cfg.generator_model;
    result.dataset.metadata.extra["judge_model"] = cfg.judge_model;

    std::size_t truthful_rows = 0;
    std::size_t hallucinated_rows = 0;
    std::set<std::string_view> wanted;
    for (const auto& q : questions) wanted.insert(q.id);
    for (auto& [id, record] : finished) {
        if (!wanted.contains(id)) continue;
        const std::string status = status_of(record);
        if (status == "passed") {
            ++result.passed;
            result.dataset.examples.push_back({id + ":truthful", record.question,
                                               record.truthful_answer, Label::Truthful,
                                               truthful_rows++, std::nullopt});
            result.dataset.examples.push_back({id + ":hallucinated", record.question,
                                               record.hallucinated_answer, Label::Hallucinated,
                                               hallucinated_rows++, std::nullopt});
        } else if (status == "filtered") {
            ++result.filtered;
        } else {
            ++result.failed;
        }
        result.records.push_back(record);
    }
    if (result.dataset.examples.empty()) {
        log_warn("augmentation produced an empty dataset: every question failed or was filtered");
    }
    return result;
}

std::string audit_jsonl(const AugmentationConfig& cfg,
                        std::span<const AugmentationRecord> records) {
    std::string out;
    for (const auto& r : records) {
        auto j = to_json(r);
        j["generator_model"] = cfg.generator_model;
        j["judge_model"] = cfg.judge_model;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace pale
