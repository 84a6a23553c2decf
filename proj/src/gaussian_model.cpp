#include "pale/gaussian_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "pale/error.hpp"

namespace pale {

namespace {

constexpr double kOrthonormalityTolerance = 1e-6;

Eigen::VectorXd vector_from_json(const nlohmann::json& j, const char* name) {
    if (!j.is_array()) {
        throw ValidationError(std::string("CMG1 field '") + name + "' must be an array");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

}  // namespace

std::string_view to_string(ResidualMode mode) {
    return mode == ResidualMode::Ignore ? "ignore" : "floor";
}

ResidualMode parse_residual_mode(std::string_view text) {
    if (text == "ignore") return ResidualMode::Ignore;
    if (text == "floor") return ResidualMode::Floor;
    throw ParameterError("unknown residual mode '" + std::string(text) + "'");
}

void MahalanobisConfig::validate() const {
    if (k < 1) {
        throw ParameterError("k must be >= 1");
    }
    if (!(epsilon_rel > 0.0) || !std::isfinite(epsilon_rel)) {
        throw ParameterError("epsilon_rel must be a positive finite number");
    }
}

CenteredMatrix center(const EmbeddingMatrix& m) {
    if (m.rows() < 2) {
        throw InsufficientSamplesError("centering needs at least 2 rows, got " +
                                       std::to_string(m.rows()));
    }
    const auto n = static_cast<Eigen::Index>(m.rows());
    const auto d = static_cast<Eigen::Index>(m.cols());
    CenteredMatrix out{Eigen::MatrixXd(n, d), Eigen::VectorXd::Zero(d)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = m.row(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < d; ++j) {
            out.data(i, j) = static_cast<double>(row[static_cast<std::size_t>(j)]);
            out.mean(j) += out.data(i, j);
        }
    }
    out.mean /= static_cast<double>(n);
    out.data.rowwise() -= out.mean.transpose();
    return out;
}

GaussianModel::GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd basis,
                             Eigen::VectorXd eigenvalues, std::size_t sample_count,
                             double epsilon, ResidualMode residual_mode)
    : mean_(std::move(mean)),
      basis_(std::move(basis)),
      eigenvalues_(std::move(eigenvalues)),
      sample_count_(sample_count),
      epsilon_(epsilon),
      residual_mode_(residual_mode) {
    const auto d = mean_.size();
    const auto k = basis_.cols();
    if (d < 1) {
        throw ValidationError("gaussian model needs dimension >= 1");
    }
    if (basis_.rows() != d) {
        throw ShapeError("basis has " + std::to_string(basis_.rows()) + " rows, expected " +
                         std::to_string(d));
    }
    if (k < 1 || k > d) {
        throw ValidationError("retained rank " + std::to_string(k) + " outside [1, " +
                              std::to_string(d) + "]");
    }
    if (eigenvalues_.size() != k) {
        throw ShapeError("expected " + std::to_string(k) + " eigenvalues, got " +
                         std::to_string(eigenvalues_.size()));
    }
    if (sample_count_ < 2) {
        throw ValidationError("sample count must be >= 2");
    }
    if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) {
        throw ValidationError("epsilon must be a positive finite number");
    }
    if (!mean_.allFinite() || !basis_.allFinite() || !eigenvalues_.allFinite()) {
        throw ValidationError("gaussian model contains non-finite values");
    }
    for (Eigen::Index j = 0; j < k; ++j) {
        if (eigenvalues_(j) < 0.0) {
            throw ValidationError("negative eigenvalue");
        }
        if (j > 0 && eigenvalues_(j) > eigenvalues_(j - 1)) {
            throw ValidationError("eigenvalues must be non-increasing");
        }
    }
    const Eigen::MatrixXd gram = basis_.transpose() * basis_;
    if ((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() >
        kOrthonormalityTolerance) {
        throw ValidationError("basis columns are not orthonormal");
    }
}

Eigen::MatrixXd GaussianModel::covariance() const {
    return basis_ * eigenvalues_.asDiagonal() * basis_.transpose();
}

bool operator==(const GaussianModel& a, const GaussianModel& b) {
    return a.sample_count_ == b.sample_count_ && a.epsilon_ == b.epsilon_ &&
           a.residual_mode_ == b.residual_mode_ && a.mean_.size() == b.mean_.size() &&
           a.basis_.cols() == b.basis_.cols() && a.mean_ == b.mean_ && a.basis_ == b.basis_ &&
           a.eigenvalues_ == b.eigenvalues_;
}

GaussianModel fit_gaussian(const EmbeddingMatrix& m, const MahalanobisConfig& cfg) {
    cfg.validate();
    auto centered = center(m);
    const auto n = static_cast<std::size_t>(centered.data.rows());
    const auto d = static_cast<std::size_t>(centered.data.cols());
    const std::size_t k = std::min({cfg.k, n - 1, d});

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered.data, Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    Eigen::MatrixXd basis = svd.matrixV().leftCols(static_cast<Eigen::Index>(k));
    Eigen::VectorXd lambda = sigma.head(static_cast<Eigen::Index>(k)).array().square() /
                             static_cast<double>(n);

    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
        Eigen::Index arg = 0;
        basis.col(j).cwiseAbs().maxCoeff(&arg);
        if (basis(arg, j) < 0.0) {
            basis.col(j) = -basis.col(j);
        }
    }

    const double epsilon = std::max(cfg.epsilon_rel * lambda(0), kEpsilonAbsoluteFloor);
    return GaussianModel(std::move(centered.mean), std::move(basis), std::move(lambda), n,
                         epsilon, cfg.residual_mode);
}

double mahalanobis(const GaussianModel& g, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (static_cast<std::size_t>(z.size()) != g.dim()) {
        throw ShapeError("probe has dimension " + std::to_string(z.size()) + ", model expects " +
                         std::to_string(g.dim()));
    }
    const Eigen::VectorXd dev = z - g.mean();
    const Eigen::VectorXd coeff = g.basis().transpose() * dev;
    double sum = 0.0;
    for (Eigen::Index j = 0; j < coeff.size(); ++j) {
        sum += coeff(j) * coeff(j) / (g.eigenvalues()(j) + g.epsilon());
    }
    if (g.residual_mode() == ResidualMode::Floor) {
        const Eigen::VectorXd residual = dev - g.basis() * coeff;
        sum += residual.squaredNorm() / g.epsilon();
    }
    return std::sqrt(sum);
}

double mahalanobis(const GaussianModel& g, std::span<const float> z) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = static_cast<double>(z[i]);
    }
    return mahalanobis(g, v);
}

nlohmann::ordered_json to_json(const GaussianModel& g) {
    nlohmann::ordered_json j;
    j["format"] = "CMG1";
    j["d"] = g.dim();
    j["k"] = g.rank();
    j["n"] = g.sample_count();
    j["epsilon"] = g.epsilon();
    j["residual_mode"] = to_string(g.residual_mode());
    j["mean"] = std::vector<double>(g.mean().begin(), g.mean().end());
    j["eigenvalues"] = std::vector<double>(g.eigenvalues().begin(), g.eigenvalues().end());
    auto basis = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < g.basis().cols(); ++c) {
        const Eigen::VectorXd col = g.basis().col(c);
        basis.push_back(std::vector<double>(col.begin(), col.end()));
    }
    j["basis"] = std::move(basis);
    return j;
}

GaussianModel gaussian_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object() || j.value("format", "") != "CMG1") {
            throw FormatError("expected a CMG1 object");
        }
        const auto d = j.at("d").get<std::size_t>();
        const auto k = j.at("k").get<std::size_t>();
        const auto n = j.at("n").get<std::size_t>();
        const double epsilon = j.at("epsilon").get<double>();
        const ResidualMode mode = parse_residual_mode(j.value("residual_mode", "ignore"));
        Eigen::VectorXd mean = vector_from_json(j.at("mean"), "mean");
        Eigen::VectorXd lambda = vector_from_json(j.at("eigenvalues"), "eigenvalues");
        const auto& cols = j.at("basis");
        if (static_cast<std::size_t>(mean.size()) != d) {
            throw ShapeError("CMG1 mean length does not match d");
        }
        if (!cols.is_array() || cols.size() != k) {
            throw ShapeError("CMG1 basis must hold k columns");
        }
        Eigen::MatrixXd basis(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
        for (std::size_t c = 0; c < k; ++c) {
            Eigen::VectorXd col = vector_from_json(cols[c], "basis");
            if (static_cast<std::size_t>(col.size()) != d) {
                throw ShapeError("CMG1 basis column length does not match d");
            }
            basis.col(static_cast<Eigen::Index>(c)) = col;
        }
        return GaussianModel(std::move(mean), std::move(basis), std::move(lambda), n, epsilon,
                             mode);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed CMG1: ") + e.what());
    } catch (const ParameterError& e) {
        throw ValidationError(std::string("malformed CMG1: ") + e.what());
    }
}

}  // namespace pale
