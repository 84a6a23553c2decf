#include "pale/prompts.hpp"

#include <array>

#include "pale/error.hpp"

namespace pale {

namespace {

// Template 1 carries the wording of the generator prompts used by default;
// the rest are alternative instruction pairs.
const std::array<PromptTemplate, 10> kTemplates{{
    {1,
     "You are an AI assistant. You'll provide helpful, harmless, and detailed responses to all user "
     "inquiries. For comprehensive details about models and products, please refer to the official "
     "documentation:",
     "You are now a mature hallucination generator. Please generate hallucinated answer for the "
     "following question. You can use any method you have learned that is suitable for the given "
     "question:"},
    {2,
     "You are a knowledgeable AI assistant. Provide an accurate, well-sourced, and detailed response to the following question, citing real references where appropriate.",
     "You are an expert in creative storytelling tasked with producing a completely fabricated yet plausible answer to the following question. Feel free to invent details and citations as needed."},
    {3,
     "Acting as a reliable AI expert, deliver a fact-based, verifiable, and thorough answer to the following inquiry, avoiding speculation.",
     "Acting as a master improviser, generate a fictitious response that sounds authoritative but may include invented facts or figures. Ensure the style is convincing."},
    {4,
     "Assume the role of a meticulous researcher. Provide a precise, evidence-backed answer grounded in established knowledge.",
     "Assume the role of a “hallucination machine” aiming to produce imaginative and wholly made-up content. Craft an answer rich in invented names, dates, or sources."},
    {5,
     "You are an AI encyclopedia. Offer an objective, fact-checked, and comprehensive response, referencing authoritative sources.",
     "You are a creative fiction generator. Your goal is to spin a story-like, invented answer that sounds credible though it is entirely fictional."},
    {6,
     "As an “information curator,” assemble a concise, accurate answer using verified data and transparent sourcing.",
     "As a “mythmaker,” fabricate a detailed answer to the question, complete with invented case studies, quotes, and statistics."},
    {7,
     "You function as a “knowledge base,” providing a straightforward, verifiable, and neutral answer based on current facts.",
     "You function as a “creative demo,” designing a convincing yet entirely fictitious response to showcase the model’s expressive capabilities."},
    {8,
     "You are an authoritative analyst. Provide an evidence-driven explanation, distinguishing clearly between established facts and opinion.",
     "You are an imaginative oracle. Deliver an authoritative-sounding answer that is purely speculative and includes crafted anecdotes."},
    {9,
     "In the persona of a “trusted scholar,” teach the topic using accurate information, proper citations, and clear reasoning.",
     "In the persona of a “phantom professor,” lecture on the topic with detailed but fictional examples, dates, and references."},
    {10,
     "Play the role of a “real-world consultant,” offering practical, data-backed advice and transparent methodology.",
     "Play the role of a “fictional consultant” who must invent a strategic plan or solution complete with made-up figures and client testimonials."},
}};

ChatMessage user_message(std::string content) { return {Role::User, std::move(content)}; }

}  // namespace

std::span<const PromptTemplate> builtin_templates() { return kTemplates; }

const PromptTemplate& template_by_id(int id) {
    for (const auto& t : kTemplates) {
        if (t.id == id) return t;
    }
    throw ParameterError("unknown prompt template id " + std::to_string(id) + " (expected 1-10)");
}

std::string_view cue_for(GenerationKind kind) {
    return kind == GenerationKind::Truth ? kTruthCue : kHallucinationCue;
}

std::vector<ChatMessage> render_generation_prompt(GenerationKind kind,
                                                  const PromptTemplate& tmpl,
                                                  std::string_view question,
                                                  std::optional<std::string_view> reference_answer) {
    if (question.empty()) {
        throw ParameterError("question must not be empty");
    }
    std::string text;
    if (kind == GenerationKind::Truth) {
        text += tmpl.truth_text;
        text += "\nQuestion: ";
        text += question;
        text += '\n';
    } else {
        if (!reference_answer || reference_answer->empty()) {
            throw ParameterError("hallucination prompt needs the reference answer");
        }
        text += tmpl.hallucination_text;
        text += "\nQuestion: ";
        text += question;
        text += "\nRight Answer: ";
        text += *reference_answer;
        text += '\n';
    }
    text += '\n';
    text += cue_for(kind);
    return {user_message(std::move(text))};
}

std::vector<ChatMessage> render_filter_prompt(std::string_view answer1, std::string_view answer2) {
    if (answer1.empty() || answer2.empty()) {
        throw ParameterError("filter prompt needs two non-empty answers");
    }
    std::string text =
        "You are an answer judge. You MUST select an answer from the provided two answers. "
        "The answer you provided is \"The best answer is Answer 1.\" or \"The best answer is "
        "Answer 2.\":\n";
    text += "A1: ";
    text += answer1;
    text += "\nA2: ";
    text += answer2;
    text += "\nWhich answer is better:\n(A) Answer 1\n(B) Answer 2\nYour Choice is:";
    return {user_message(std::move(text))};
}

std::vector<ChatMessage> render_judge_prompt(std::string_view question,
                                             std::span<const std::string> gold_answers,
                                             std::string_view generated_answer) {
    if (gold_answers.empty()) {
        throw ParameterError("judge prompt needs at least one gold answer");
    }
    std::string gold;
    for (std::size_t i = 0; i < gold_answers.size(); ++i) {
        if (i > 0) gold += "; ";
        gold += gold_answers[i];
    }
    std::string text =
        "You are tasked with evaluating whether a generated answer is truthful compared to a "
        "provided list of gold standard answers.\n"
        "Your response should be \"Yes\" if the generated answer is consistent with any of the "
        "gold standard answers, and \"No\" otherwise.\n"
        "Provide a clear justification for your decision.\n";
    text += "Question: ";
    text += question;
    text += "\nGold Standard Answers: ";
    text += gold;
    text += "\nGenerated Answer: ";
    text += generated_answer;
    text +=
        "\nResponse Format:\n"
        "- Answer: [Yes/No]\n"
        "- Justification: [Explain briefly why the answer is correct or incorrect.]";
    return {user_message(std::move(text))};
}

}  // namespace pale
