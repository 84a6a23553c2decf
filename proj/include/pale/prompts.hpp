#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pale/llm_client.hpp"

namespace pale {

/// A paired truth / hallucination instruction.
struct PromptTemplate {
    int id = 0;
    std::string truth_text;
    std::string hallucination_text;
};

/// The ten built-in augmentation templates, ids 1..10.
std::span<const PromptTemplate> builtin_templates();

/// Throws ParameterError for an unknown id.
const PromptTemplate& template_by_id(int id);

enum class GenerationKind { Truth, Hallucination };

inline constexpr std::string_view kTruthCue = "The Answer is:";
inline constexpr std::string_view kHallucinationCue = "The Hallucinated Answer is:";
inline constexpr std::string_view kJudgeAnswer1 = "The best answer is Answer 1.";
inline constexpr std::string_view kJudgeAnswer2 = "The best answer is Answer 2.";

std::string_view cue_for(GenerationKind kind);

/// Single user message:
///
///   <instruction>
///   Question: <question>
///   Right Answer: <answer>        (hallucination kind only)
///
///   <cue>
///
/// Throws ParameterError on an empty question, or when the hallucination
/// kind has no reference answer.
std::vector<ChatMessage> render_generation_prompt(GenerationKind kind,
                                                  const PromptTemplate& tmpl,
                                                  std::string_view question,
                                                  std::optional<std::string_view> reference_answer);

/// Answer-judge prompt asking which of two answers is better. Throws
/// ParameterError when either answer is empty.
std::vector<ChatMessage> render_filter_prompt(std::string_view answer1, std::string_view answer2);

/// Truthfulness-evaluation prompt. Gold answers are joined with "; ".
/// Throws ParameterError when gold_answers is empty.
std::vector<ChatMessage> render_judge_prompt(std::string_view question,
                                             std::span<const std::string> gold_answers,
                                             std::string_view generated_answer);

}  // namespace pale
