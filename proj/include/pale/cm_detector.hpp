#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pale/gaussian_model.hpp"
#include "pale/tensor_io.hpp"

namespace pale {

inline constexpr double kDefaultTau = 0.15;

enum class Verdict { Truthful = -1, Hallucinated = 1 };

std::string_view to_string(Verdict verdict);

struct CmScore {
    double delta = 0.0;  // md_true - md_hal; larger means closer to the hallucinated class
    double md_true = 0.0;
    double md_hal = 0.0;
};

struct ScoredExample {
    std::string id;
    double delta = 0.0;
    Verdict verdict = Verdict::Truthful;
    double md_true = 0.0;
    double md_hal = 0.0;
};

/// Truthful and hallucinated Gaussians plus the decision threshold tau.
class CmDetector {
public:
    /// Throws ShapeError when the two models differ in dimension and
    /// ValidationError when tau is not finite.
    CmDetector(GaussianModel truthful, GaussianModel hallucinated, double tau = kDefaultTau);

    const GaussianModel& truthful() const noexcept { return truthful_; }
    const GaussianModel& hallucinated() const noexcept { return hallucinated_; }
    double tau() const noexcept { return tau_; }
    std::size_t dim() const noexcept { return truthful_.dim(); }

private:
    GaussianModel truthful_;
    GaussianModel hallucinated_;
    double tau_;
};

/// Fits both class models with one shared config.
CmDetector fit_detector(const EmbeddingMatrix& truthful, const EmbeddingMatrix& hallucinated,
                        const MahalanobisConfig& cfg, double tau = kDefaultTau);

CmScore cm_score(const CmDetector& det, const Eigen::Ref<const Eigen::VectorXd>& z);
CmScore cm_score(const CmDetector& det, std::span<const float> z);

/// Hallucinated iff delta >= tau.
Verdict verdict_for(double delta, double tau);
Verdict classify(const CmDetector& det, const Eigen::Ref<const Eigen::VectorXd>& z);
Verdict classify(const CmDetector& det, std::span<const float> z);

/// Scores every row of `m`; output order follows the rows. Throws ShapeError
/// when ids.size() != m.rows() or the dimension differs from the detector's.
std::vector<ScoredExample> batch_score(const CmDetector& det, const EmbeddingMatrix& m,
                                       std::span<const std::string> ids);

/// CMD1 envelope. `meta` is stored verbatim under "meta" when non-null.
std::string save_detector(const CmDetector& det,
                          const nlohmann::ordered_json& meta = nlohmann::ordered_json());
/// Throws ParseError on malformed JSON, FormatError on a wrong tag and
/// ShapeError when the inner models disagree on dimension.
CmDetector load_detector(std::string_view text);

/// CSV with header id,delta,md_true,md_hal,verdict.
std::string scores_to_csv(std::span<const ScoredExample> scores);
std::vector<ScoredExample> scores_from_csv(std::string_view text);

}  // namespace pale
