#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pale/dataset.hpp"
#include "pale/llm_client.hpp"
#include "pale/prompts.hpp"

namespace pale {

struct AugmentationConfig {
    int template_id = 1;
    std::string generator_model = "gpt-4o";
    std::string judge_model = "gpt-4o";
    int max_retries = 3;
    std::size_t concurrency = 4;
    double temperature = 0.5;
    double judge_temperature = 0.0;
    std::optional<int> max_tokens;
    std::chrono::milliseconds retry_base_delay{1000};
    std::uint64_t seed = 0;

    /// Throws ParameterError on retries < 0, concurrency < 1 or an unknown
    /// template id.
    void validate() const;
};

struct QuestionItem {
    std::string id;
    std::string question;
    std::string reference_answer;
};

/// Lines of {id, question, reference_answer}. Throws ParseError/ValidationError.
std::vector<QuestionItem> parse_questions_jsonl(std::string_view text);
std::vector<QuestionItem> read_questions_file(const std::filesystem::path& path);

inline constexpr std::string_view kReasonJudgePreferredHallucination = "judge-preferred-hallucination";
inline constexpr std::string_view kReasonUnparseableJudge = "unparseable-judge";
inline constexpr std::string_view kReasonEmptyGeneration = "empty-generation";

struct AugmentationRecord {
    std::string question_id;
    std::string question;
    std::string reference_answer;
    int template_id = 1;
    std::string truthful_answer;
    std::string hallucinated_answer;
    std::optional<bool> filter_passed;  // unset until filter_pair runs
    std::string filter_reason;
    // Model outputs in call order: truth, hallucination, then judge replies.
    std::vector<std::string> raw_responses;
    int truth_attempts = 0;
    int hallucination_attempts = 0;
    int judge_attempts = 0;

    int attempt_count() const { return truth_attempts + hallucination_attempts + judge_attempts; }
};

nlohmann::ordered_json to_json(const AugmentationRecord& r);
AugmentationRecord record_from_json(const nlohmann::json& j);

/// Removes a leading `cue` and the whitespace right after it. Returns a view
/// into `response`; anything else is left untouched.
std::string_view strip_cue(std::string_view response, std::string_view cue);

enum class JudgeChoice { Answer1, Answer2, Unparseable };

/// Answer1/Answer2 when exactly one of the two sentinel sentences occurs.
JudgeChoice parse_judge_choice(std::string_view reply);

/// Issues the truth and the hallucination generation calls, retrying each up
/// to cfg.max_retries times on transport errors. Throws GenerationError when
/// retries run out and EmptyGenerationError when the model returns nothing.
AugmentationRecord generate_pair(const AugmentationConfig& cfg, const QuestionItem& question,
                                 LlmClient& client);
AugmentationRecord generate_pair(const AugmentationConfig& cfg, std::string_view question,
                                 std::string_view reference_answer, LlmClient& client);

/// Asks the judge with Answer 1 = truthful, Answer 2 = hallucinated. Passes iff
/// the judge picks Answer 1. An unparseable reply is retried once, then the
/// record fails with reason "unparseable-judge". Throws StateError when an
/// answer is missing and FilterError when transport retries run out.
AugmentationRecord filter_pair(const AugmentationConfig& cfg, AugmentationRecord record,
                               LlmClient& client);

struct BuildOptions {
    // Resumption journal; empty path disables it.
    std::filesystem::path journal_path;
    DatasetMetadata metadata;
};

struct BuildResult {
    Dataset dataset;
    std::vector<AugmentationRecord> records;  // every finished question, by id
    std::size_t passed = 0;
    std::size_t filtered = 0;
    std::size_t failed = 0;
    std::size_t resumed = 0;  // questions taken from the journal
};

/// Generates and filters one pair per question with up to cfg.concurrency
/// questions in flight. Passed pairs become two examples sharing the question;
/// embedding_index numbers rows within each label class. Finished questions
/// are journaled and skipped on rerun. Transport exhaustion aborts the run
/// after in-flight questions settle (GenerationError/FilterError).
BuildResult build_dataset(const AugmentationConfig& cfg, std::span<const QuestionItem> questions,
                          LlmClient& client, const BuildOptions& options = {});

/// One JSON object per record with prompts and raw model output.
std::string audit_jsonl(const AugmentationConfig& cfg, std::span<const AugmentationRecord> records);

}  // namespace pale
