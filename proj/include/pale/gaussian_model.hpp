#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pale/tensor_io.hpp"

namespace pale {

enum class ResidualMode {
    Ignore,  // distance lives in the retained rank-k subspace only
    Floor,   // out-of-subspace residual contributes |r|^2 / epsilon
};

std::string_view to_string(ResidualMode mode);
ResidualMode parse_residual_mode(std::string_view text);

struct MahalanobisConfig {
    std::size_t k = 5;
    double epsilon_rel = 1e-6;
    ResidualMode residual_mode = ResidualMode::Ignore;

    /// Throws ParameterError unless k >= 1 and epsilon_rel > 0.
    void validate() const;
};

inline constexpr double kEpsilonAbsoluteFloor = 1e-12;

struct CenteredMatrix {
    Eigen::MatrixXd data;  // N x d, column means zero
    Eigen::VectorXd mean;
};

/// Subtracts the column means, accumulated in double.
/// Throws InsufficientSamplesError when N < 2.
CenteredMatrix center(const EmbeddingMatrix& m);

/// Gaussian summary of one class: mean, top-k principal directions of the
/// centered embeddings and their variances lambda_j = sigma_j^2 / N.
class GaussianModel {
public:
    /// Validates shapes, eigenvalue ordering and epsilon > 0; throws
    /// ValidationError otherwise.
    GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd basis, Eigen::VectorXd eigenvalues,
                  std::size_t sample_count, double epsilon,
                  ResidualMode residual_mode = ResidualMode::Ignore);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
    std::size_t rank() const noexcept { return static_cast<std::size_t>(basis_.cols()); }
    std::size_t sample_count() const noexcept { return sample_count_; }
    double epsilon() const noexcept { return epsilon_; }
    ResidualMode residual_mode() const noexcept { return residual_mode_; }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& basis() const noexcept { return basis_; }
    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

    /// basis * diag(lambda) * basis^T.
    Eigen::MatrixXd covariance() const;

    /// Exact (bitwise-value) equality of every field.
    friend bool operator==(const GaussianModel& a, const GaussianModel& b);

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd basis_;  // d x k, orthonormal columns
    Eigen::VectorXd eigenvalues_;
    std::size_t sample_count_;
    double epsilon_;
    ResidualMode residual_mode_;
};

/// Centers the rows and keeps the top min(cfg.k, N - 1, d) right singular
/// vectors. Each basis column is signed so its largest-magnitude entry is
/// non-negative.
GaussianModel fit_gaussian(const EmbeddingMatrix& m, const MahalanobisConfig& cfg);

/// sqrt(sum_j c_j^2 / (lambda_j + eps) [+ |r|^2 / eps]) with c = basis^T (z - mu).
/// Throws ShapeError when z has the wrong length.
double mahalanobis(const GaussianModel& g, const Eigen::Ref<const Eigen::VectorXd>& z);
double mahalanobis(const GaussianModel& g, std::span<const float> z);

/// CMG1 JSON object. Basis is stored column-major (one array per column).
nlohmann::ordered_json to_json(const GaussianModel& g);
/// Throws FormatError on a wrong tag and ValidationError/ShapeError on
/// inconsistent fields.
GaussianModel gaussian_from_json(const nlohmann::json& j);

}  // namespace pale
