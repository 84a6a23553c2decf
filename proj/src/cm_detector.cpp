#include "pale/cm_detector.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "pale/error.hpp"
#include "pale/file_util.hpp"

namespace pale {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

double parse_double(const std::string& s, std::size_t lineno) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) {
        throw ParseError("scores CSV line " + std::to_string(lineno) + ": bad number '" + s +
                         "'");
    }
    return v;
}

}  // namespace

std::string_view to_string(Verdict verdict) {
    return verdict == Verdict::Hallucinated ? "hallucinated" : "truthful";
}

CmDetector::CmDetector(GaussianModel truthful, GaussianModel hallucinated, double tau)
    : truthful_(std::move(truthful)), hallucinated_(std::move(hallucinated)), tau_(tau) {
    if (truthful_.dim() != hallucinated_.dim()) {
        throw ShapeError("truthful model has dimension " + std::to_string(truthful_.dim()) +
                         ", hallucinated model has " + std::to_string(hallucinated_.dim()));
    }
    if (!std::isfinite(tau_)) {
        throw ValidationError("tau must be finite");
    }
}

CmDetector fit_detector(const EmbeddingMatrix& truthful, const EmbeddingMatrix& hallucinated,
                        const MahalanobisConfig& cfg, double tau) {
    if (truthful.cols() != hallucinated.cols()) {
        throw ShapeError("truthful embeddings have d=" + std::to_string(truthful.cols()) +
                         ", hallucinated have d=" + std::to_string(hallucinated.cols()));
    }
    return CmDetector(fit_gaussian(truthful, cfg), fit_gaussian(hallucinated, cfg), tau);
}

CmScore cm_score(const CmDetector& det, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (!z.allFinite()) {
        throw ValidationError("probe contains non-finite values");
    }
    CmScore s;
    s.md_true = mahalanobis(det.truthful(), z);
    s.md_hal = mahalanobis(det.hallucinated(), z);
    s.delta = s.md_true - s.md_hal;
    return s;
}

CmScore cm_score(const CmDetector& det, std::span<const float> z) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = static_cast<double>(z[i]);
    }
    return cm_score(det, v);
}

Verdict verdict_for(double delta, double tau) {
    return delta >= tau ? Verdict::Hallucinated : Verdict::Truthful;
}

Verdict classify(const CmDetector& det, const Eigen::Ref<const Eigen::VectorXd>& z) {
    return verdict_for(cm_score(det, z).delta, det.tau());
}

Verdict classify(const CmDetector& det, std::span<const float> z) {
    return verdict_for(cm_score(det, z).delta, det.tau());
}

std::vector<ScoredExample> batch_score(const CmDetector& det, const EmbeddingMatrix& m,
                                       std::span<const std::string> ids) {
    if (ids.size() != m.rows()) {
        throw ShapeError("got " + std::to_string(ids.size()) + " ids for " +
                         std::to_string(m.rows()) + " rows");
    }
    if (m.cols() != det.dim()) {
        throw ShapeError("embeddings have d=" + std::to_string(m.cols()) +
                         ", detector expects d=" + std::to_string(det.dim()));
    }
    std::vector<ScoredExample> out;
    out.reserve(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const CmScore s = cm_score(det, m.row(i));
        out.push_back({ids[i], s.delta, verdict_for(s.delta, det.tau()), s.md_true, s.md_hal});
    }
    return out;
}

std::string save_detector(const CmDetector& det, const nlohmann::ordered_json& meta) {
    nlohmann::ordered_json j;
    j["format"] = "CMD1";
    j["tau"] = det.tau();
    j["truthful"] = to_json(det.truthful());
    j["hallucinated"] = to_json(det.hallucinated());
    if (!meta.is_null()) {
        j["meta"] = meta;
    }
    return j.dump();
}

CmDetector load_detector(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed CMD1 JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("format") || !j["format"].is_string() ||
        j["format"].get<std::string>() != "CMD1") {
        throw FormatError("expected format tag CMD1");
    }
    if (!j.contains("tau") || !j["tau"].is_number()) {
        throw ValidationError("CMD1 is missing a numeric tau");
    }
    if (!j.contains("truthful") || !j.contains("hallucinated")) {
        throw ValidationError("CMD1 must hold truthful and hallucinated models");
    }
    return CmDetector(gaussian_from_json(j["truthful"]), gaussian_from_json(j["hallucinated"]),
                      j["tau"].get<double>());
}

std::string scores_to_csv(std::span<const ScoredExample> scores) {
    std::string out = "id,delta,md_true,md_hal,verdict\n";
    for (const auto& s : scores) {
        out += csv_field(s.id);
        out += ',';
        out += format_double(s.delta);
        out += ',';
        out += format_double(s.md_true);
        out += ',';
        out += format_double(s.md_hal);
        out += ',';
        out += to_string(s.verdict);
        out += '\n';
    }
    return out;
}

std::vector<ScoredExample> scores_from_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    std::vector<ScoredExample> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "id,delta,md_true,md_hal,verdict") {
                throw FormatError("scores CSV header must be id,delta,md_true,md_hal,verdict");
            }
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 5) {
            throw ParseError("scores CSV line " + std::to_string(lineno) + ": expected 5 fields");
        }
        ScoredExample s;
        s.id = f[0];
        s.delta = parse_double(f[1], lineno);
        s.md_true = parse_double(f[2], lineno);
        s.md_hal = parse_double(f[3], lineno);
        if (f[4] == "hallucinated") {
            s.verdict = Verdict::Hallucinated;
        } else if (f[4] == "truthful") {
            s.verdict = Verdict::Truthful;
        } else {
            throw ParseError("scores CSV line " + std::to_string(lineno) + ": bad verdict");
        }
        out.push_back(std::move(s));
    }
    if (lineno == 0) {
        throw FormatError("scores CSV is empty");
    }
    return out;
}

}  // namespace pale
