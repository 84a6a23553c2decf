#include "pale/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "pale/error.hpp"
#include "pale/file_util.hpp"

namespace pale {

namespace {

constexpr std::string_view kMetaPrefix = "#meta ";

LabeledExample example_from_json(const nlohmann::json& j) {
    LabeledExample ex;
    ex.id = j.at("id").get<std::string>();
    ex.question = j.at("question").get<std::string>();
    ex.answer = j.at("answer").get<std::string>();
    ex.label = parse_label(j.at("label").get<std::string>());
    if (auto it = j.find("embedding_index"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
            throw ValidationError("embedding_index must be a non-negative integer");
        }
        ex.embedding_index = it->get<std::size_t>();
    }
    if (auto it = j.find("similarity"); it != j.end() && !it->is_null()) {
        ex.similarity = it->get<double>();
    }
    return ex;
}

nlohmann::ordered_json example_to_json(const LabeledExample& ex) {
    nlohmann::ordered_json j;
    j["id"] = ex.id;
    j["question"] = ex.question;
    j["answer"] = ex.answer;
    j["label"] = to_string(ex.label);
    if (ex.embedding_index) {
        j["embedding_index"] = *ex.embedding_index;
    }
    if (ex.similarity) {
        j["similarity"] = *ex.similarity;
    }
    return j;
}

std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

}  // namespace

std::string_view to_string(Label label) {
    switch (label) {
        case Label::Truthful:
            return "truthful";
        case Label::Hallucinated:
            return "hallucinated";
        case Label::Unlabeled:
            return "unlabeled";
    }
    return "unlabeled";
}

Label parse_label(std::string_view text) {
    if (text == "truthful") return Label::Truthful;
    if (text == "hallucinated") return Label::Hallucinated;
    if (text == "unlabeled") return Label::Unlabeled;
    throw ValidationError("unknown label '" + std::string(text) + "'");
}

std::string_view to_string(Pooling pooling) {
    return pooling == Pooling::Mean ? "mean" : "last-token";
}

Pooling parse_pooling(std::string_view text) {
    if (text == "mean") return Pooling::Mean;
    if (text == "last-token") return Pooling::LastToken;
    throw ValidationError("unknown pooling mode '" + std::string(text) + "'");
}

void Dataset::validate() const {
    if (metadata.layer < 0) {
        throw ValidationError("layer index must be >= 0");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& ex : examples) {
        if (!seen.insert(ex.id).second) {
            throw ValidationError("duplicate example id '" + ex.id + "'");
        }
    }
}

void Dataset::validate_against(std::size_t rows) const {
    for (const auto& ex : examples) {
        if (ex.embedding_index && *ex.embedding_index >= rows) {
            throw ShapeError("example '" + ex.id + "' has embedding_index " +
                             std::to_string(*ex.embedding_index) + " but the matrix has " +
                             std::to_string(rows) + " rows");
        }
    }
}

std::string write_dataset_jsonl(const Dataset& d) {
    d.validate();
    nlohmann::ordered_json meta;
    meta["layer"] = d.metadata.layer;
    meta["pooling"] = to_string(d.metadata.pooling);
    meta["model"] = d.metadata.model;
    meta["source"] = d.metadata.source;
    for (const auto& [key, value] : d.metadata.extra.items()) {
        meta[key] = value;
    }
    std::string out;
    out += kMetaPrefix;
    out += meta.dump();
    out += '\n';
    for (const auto& ex : d.examples) {
        out += example_to_json(ex).dump();
        out += '\n';
    }
    return out;
}

Dataset parse_dataset_jsonl(std::string_view text) {
    Dataset d;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            if (line.starts_with(kMetaPrefix)) {
                if (lineno != 1) {
                    throw ValidationError("#meta line must be the first line");
                }
                auto meta = nlohmann::json::parse(line.substr(kMetaPrefix.size()));
                d.metadata.layer = meta.value("layer", 0);
                d.metadata.pooling = parse_pooling(meta.value("pooling", "last-token"));
                d.metadata.model = meta.value("model", "");
                d.metadata.source = meta.value("source", "");
                for (const auto& [key, value] : meta.items()) {
                    if (key != "layer" && key != "pooling" && key != "model" && key != "source") {
                        d.metadata.extra[key] = value;
                    }
                }
                continue;
            }
            d.examples.push_back(example_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    d.validate();
    return d;
}

void write_dataset_file(const Dataset& d, const std::filesystem::path& path) {
    write_file_atomic(path, write_dataset_jsonl(d));
}

Dataset read_dataset_file(const std::filesystem::path& path) {
    return parse_dataset_jsonl(read_file(path));
}

Label label_from_similarity(double similarity, double threshold) {
    return similarity > threshold ? Label::Truthful : Label::Hallucinated;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double test_fraction,
                                          std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ParameterError("test fraction must lie strictly between 0 and 1");
    }
    if (d.examples.empty()) {
        throw ParameterError("cannot split an empty dataset");
    }
    const std::size_t n = d.examples.size();
    const auto test_total =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));

    std::array<std::vector<std::size_t>, 3> groups;
    for (std::size_t i = 0; i < n; ++i) {
        groups[static_cast<std::size_t>(d.examples[i].label)].push_back(i);
    }

    // Largest-remainder allocation of the test quota across classes.
    std::array<std::size_t, 3> quota{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double exact = static_cast<double>(groups[c].size()) * test_fraction;
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - static_cast<double>(quota[c]);
        assigned += quota[c];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    while (assigned < test_total) {
        bool progressed = false;
        for (std::size_t c : order) {
            if (assigned == test_total) break;
            if (quota[c] < groups[c].size()) {
                ++quota[c];
                ++assigned;
                progressed = true;
            }
        }
        if (!progressed) break;
    }

    std::mt19937_64 rng(seed);
    std::vector<bool> in_test(n, false);
    for (std::size_t c = 0; c < 3; ++c) {
        auto& g = groups[c];
        for (std::size_t i = g.size(); i > 1; --i) {
            std::swap(g[i - 1], g[bounded(rng, i)]);
        }
        for (std::size_t i = 0; i < quota[c]; ++i) {
            in_test[g[i]] = true;
        }
    }

    Dataset train{{}, d.metadata};
    Dataset test{{}, d.metadata};
    for (std::size_t i = 0; i < n; ++i) {
        (in_test[i] ? test : train).examples.push_back(d.examples[i]);
    }
    return {std::move(train), std::move(test)};
}

}  // namespace pale
