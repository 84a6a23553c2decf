#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace pale {

/// Truthful is the negative class (-1), Hallucinated the positive class (+1).
enum class Label { Truthful, Hallucinated, Unlabeled };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

enum class Pooling { Mean, LastToken };

std::string_view to_string(Pooling pooling);
Pooling parse_pooling(std::string_view text);

struct LabeledExample {
    std::string id;
    std::string question;
    std::string answer;
    Label label = Label::Unlabeled;
    std::optional<std::size_t> embedding_index;
    // Precomputed similarity to the reference answer (e.g. BLEURT).
    std::optional<double> similarity;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct DatasetMetadata {
    std::string source;
    int layer = 0;
    Pooling pooling = Pooling::LastToken;
    std::string model;
    // Anything else found on the #meta line (tool version, seed, ...).
    nlohmann::json extra = nlohmann::json::object();

    friend bool operator==(const DatasetMetadata&, const DatasetMetadata&) = default;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    DatasetMetadata metadata;

    /// Throws ValidationError on duplicate ids or a negative layer.
    void validate() const;
    /// Throws ShapeError when an embedding_index is >= rows.
    void validate_against(std::size_t rows) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::string write_dataset_jsonl(const Dataset& d);
Dataset parse_dataset_jsonl(std::string_view text);

void write_dataset_file(const Dataset& d, const std::filesystem::path& path);
Dataset read_dataset_file(const std::filesystem::path& path);

/// Label from a similarity score: truthful when it exceeds the threshold.
Label label_from_similarity(double similarity, double threshold = 0.5);

/// Stratified, seeded split. The test side holds round(N * test_fraction)
/// examples, allocated across label classes by largest remainder. Both halves
/// keep the input order.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double test_fraction,
                                          std::uint64_t seed);

}  // namespace pale
