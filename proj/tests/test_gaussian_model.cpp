#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "pale/error.hpp"
#include "pale/gaussian_model.hpp"

using namespace pale;
using namespace pale::testing;

namespace {

MahalanobisConfig full_rank(std::size_t k, double eps_rel = 1e-12) {
    MahalanobisConfig cfg;
    cfg.k = k;
    cfg.epsilon_rel = eps_rel;
    return cfg;
}

Eigen::MatrixXd random_orthogonal(std::size_t d, std::mt19937_64& rng) {
    Eigen::MatrixXd a(d, d);
    std::normal_distribution<double> dist;
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = dist(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ();
}

}  // namespace

TEST(Center, AlreadyCentered) {
    const auto c = center(EmbeddingMatrix(2, 2, {1, 0, -1, 0}));
    EXPECT_EQ(c.mean, Eigen::Vector2d(0, 0));
    EXPECT_EQ(c.data(0, 0), 1.0);
    EXPECT_EQ(c.data(1, 0), -1.0);
}

TEST(Center, Arithmetic) {
    const auto c = center(EmbeddingMatrix(2, 2, {2, 2, 4, 4}));
    EXPECT_EQ(c.mean, Eigen::Vector2d(3, 3));
    EXPECT_EQ(c.data.row(0), Eigen::RowVector2d(-1, -1));
    EXPECT_EQ(c.data.row(1), Eigen::RowVector2d(1, 1));
}

TEST(Center, ColumnSumsVanish) {
    std::mt19937_64 rng(20);
    const auto c = center(random_matrix(20, 6, rng, 5.0));
    EXPECT_LT(c.data.colwise().sum().cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Center, NeedsTwoRows) {
    EXPECT_THROW(center(EmbeddingMatrix(1, 3, {1, 2, 3})), InsufficientSamplesError);
    MahalanobisConfig cfg;
    EXPECT_THROW(fit_gaussian(EmbeddingMatrix(1, 3, {1, 2, 3}), cfg), InsufficientSamplesError);
}

TEST(Fit, RankOneAnalytic) {
    const auto g = fit_gaussian(EmbeddingMatrix(2, 2, {1, 0, -1, 0}), full_rank(1, 1e-6));
    EXPECT_EQ(g.rank(), 1u);
    EXPECT_NEAR(g.mean().norm(), 0.0, 1e-15);
    EXPECT_NEAR(g.basis()(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(g.basis()(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(g.eigenvalues()(0), 1.0, 1e-12);
}

TEST(Fit, IdenticalRowsGiveZeroEigenvalues) {
    const auto g = fit_gaussian(EmbeddingMatrix(3, 2, {1, 2, 1, 2, 1, 2}), full_rank(2));
    for (Eigen::Index j = 0; j < g.eigenvalues().size(); ++j) EXPECT_EQ(g.eigenvalues()(j), 0.0);
    EXPECT_GE(g.epsilon(), kEpsilonAbsoluteFloor);
    const Eigen::Vector2d z(1, 2);
    EXPECT_EQ(mahalanobis(g, z), 0.0);
}

TEST(Fit, RankClampedToNMinusOne) {
    std::mt19937_64 rng(1);
    const auto g = fit_gaussian(random_matrix(4, 10, rng), full_rank(8));
    EXPECT_EQ(g.rank(), 3u);
}

TEST(Fit, CovarianceMatchesDenseOracle) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const auto m = random_matrix(50, 16, rng);
        const auto g = fit_gaussian(m, full_rank(16));
        const Eigen::MatrixXd diff = g.covariance() - dense_covariance(m);
        EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
    }
}

TEST(Fit, BasisOrthonormalAndEigenvaluesSorted) {
    std::mt19937_64 rng(32);
    const auto g = fit_gaussian(random_matrix(40, 12, rng), full_rank(7));
    const Eigen::MatrixXd gram = g.basis().transpose() * g.basis();
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index j = 1; j < g.eigenvalues().size(); ++j) {
        EXPECT_GE(g.eigenvalues()(j - 1), g.eigenvalues()(j));
    }
}

TEST(Fit, SignConventionAndDeterminism) {
    std::mt19937_64 rng(33);
    const auto m = random_matrix(30, 8, rng);
    const auto a = fit_gaussian(m, full_rank(5));
    const auto b = fit_gaussian(m, full_rank(5));
    EXPECT_TRUE(a == b);
    for (Eigen::Index j = 0; j < a.basis().cols(); ++j) {
        Eigen::Index arg = 0;
        a.basis().col(j).cwiseAbs().maxCoeff(&arg);
        EXPECT_GE(a.basis()(arg, j), 0.0);
    }
}

TEST(Mahalanobis, ZeroAtMeanInBothModes) {
    std::mt19937_64 rng(34);
    const auto m = random_matrix(30, 6, rng);
    for (auto mode : {ResidualMode::Ignore, ResidualMode::Floor}) {
        auto cfg = full_rank(3, 1e-6);
        cfg.residual_mode = mode;
        const auto g = fit_gaussian(m, cfg);
        EXPECT_NEAR(mahalanobis(g, g.mean()), 0.0, 1e-12);
    }
}

TEST(Mahalanobis, EuclideanCase) {
    const GaussianModel g(Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 1),
                          10, 1e-15);
    EXPECT_NEAR(mahalanobis(g, Eigen::Vector2d(3, 4)), 5.0, 1e-12);
    const std::vector<float> z{3.0f, 4.0f};
    EXPECT_NEAR(mahalanobis(g, z), 5.0, 1e-12);
}

TEST(Mahalanobis, MatchesDenseInverseOracle) {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = random_matrix(50, 16, rng);
        const auto g = fit_gaussian(m, full_rank(16));
        const Eigen::VectorXd z = random_vector(16, rng, 2.0);
        const double oracle = dense_mahalanobis(m, z);
        EXPECT_NEAR(mahalanobis(g, z), oracle, 1e-6 * oracle) << "trial " << trial;
    }
}

TEST(Mahalanobis, FloorModeAddsResidual) {
    const Eigen::Vector3d mu(0, 0, 0);
    Eigen::MatrixXd basis(3, 1);
    basis << 1, 0, 0;
    const GaussianModel ignore(mu, basis, Eigen::VectorXd::Constant(1, 4.0), 5, 0.25,
                               ResidualMode::Ignore);
    const GaussianModel floor(mu, basis, Eigen::VectorXd::Constant(1, 4.0), 5, 0.25,
                              ResidualMode::Floor);
    const Eigen::Vector3d z(2, 1, 0);
    EXPECT_NEAR(mahalanobis(ignore, z), std::sqrt(4.0 / 4.25), 1e-12);
    EXPECT_NEAR(mahalanobis(floor, z), std::sqrt(4.0 / 4.25 + 1.0 / 0.25), 1e-12);
}

TEST(Mahalanobis, ShapeMismatch) {
    const GaussianModel g(Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 1),
                          10, 1e-6);
    EXPECT_THROW(mahalanobis(g, Eigen::Vector3d(1, 2, 3)), ShapeError);
}

TEST(Mahalanobis, MonotoneAlongRay) {
    std::mt19937_64 rng(36);
    const auto g = fit_gaussian(random_matrix(40, 8, rng), full_rank(4, 1e-6));
    const Eigen::VectorXd v = random_vector(8, rng);
    double prev = 0.0;
    for (double t = 0.0; t <= 5.0; t += 0.25) {
        const double md = mahalanobis(g, g.mean() + t * v);
        EXPECT_GE(md, prev - 1e-12);
        prev = md;
    }
}

TEST(Mahalanobis, RotationAndTranslationInvariant) {
    std::mt19937_64 rng(37);
    const auto m = random_matrix(40, 6, rng);
    const Eigen::MatrixXd x = to_eigen(m);
    const Eigen::MatrixXd q = random_orthogonal(6, rng);
    const Eigen::VectorXd shift = random_vector(6, rng, 3.0);
    const auto base = fit_gaussian(m, full_rank(6));

    // Transform in float space, then recompute on the float data the model sees.
    const auto rotated = from_eigen(x * q.transpose());
    const auto shifted = from_eigen(x.rowwise() + shift.transpose());
    const auto g_rot = fit_gaussian(rotated, full_rank(6));
    const auto g_shift = fit_gaussian(shifted, full_rank(6));
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd z = random_vector(6, rng);
        const double ref_rot = dense_mahalanobis(rotated, q * z);
        const double ref_shift = dense_mahalanobis(shifted, z + shift);
        EXPECT_NEAR(mahalanobis(g_rot, q * z), mahalanobis(base, z), 1e-3 * ref_rot);
        EXPECT_NEAR(mahalanobis(g_rot, q * z), ref_rot, 1e-8 * std::max(1.0, ref_rot));
        EXPECT_NEAR(mahalanobis(g_shift, z + shift), ref_shift, 1e-8 * std::max(1.0, ref_shift));
    }
}

TEST(Mahalanobis, ExactTranslationInDoubleSpace) {
    // Integer-valued rows shift exactly in float, so invariance holds to 1e-8.
    std::mt19937_64 rng(38);
    std::uniform_int_distribution<int> dist(-8, 8);
    std::vector<float> data(30 * 4);
    for (auto& v : data) v = static_cast<float>(dist(rng));
    std::vector<float> moved(data);
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += static_cast<float>(i % 4 * 16);
    const auto a = fit_gaussian(EmbeddingMatrix(30, 4, data), full_rank(4));
    const auto b = fit_gaussian(EmbeddingMatrix(30, 4, moved), full_rank(4));
    const Eigen::Vector4d offset(0, 16, 32, 48);
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd z = random_vector(4, rng, 4.0);
        EXPECT_NEAR(mahalanobis(a, z), mahalanobis(b, z + offset), 1e-8);
    }
}

TEST(Cmg1, JsonRoundtripIsExact) {
    std::mt19937_64 rng(39);
    auto cfg = full_rank(4, 1e-6);
    cfg.residual_mode = ResidualMode::Floor;
    const auto g = fit_gaussian(random_matrix(25, 7, rng), cfg);
    const auto j = to_json(g);
    EXPECT_EQ(j["format"], "CMG1");
    EXPECT_EQ(j["basis"].size(), 4u);
    EXPECT_EQ(j["basis"][0].size(), 7u);
    const auto back = gaussian_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_TRUE(back == g);
}

TEST(Cmg1, RejectsWrongTagAndBadFields) {
    std::mt19937_64 rng(40);
    auto j = to_json(fit_gaussian(random_matrix(10, 3, rng), full_rank(2)));
    auto bad_tag = j;
    bad_tag["format"] = "CMG9";
    EXPECT_THROW(gaussian_from_json(bad_tag), FormatError);
    auto bad_eps = j;
    bad_eps["epsilon"] = 0.0;
    EXPECT_THROW(gaussian_from_json(bad_eps), Error);
    auto bad_order = j;
    bad_order["eigenvalues"] = {0.1, 5.0};
    EXPECT_THROW(gaussian_from_json(bad_order), Error);
}

TEST(MahalanobisConfig, Validation) {
    MahalanobisConfig cfg;
    cfg.k = 0;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg.k = 1;
    cfg.epsilon_rel = 0.0;
    EXPECT_THROW(cfg.validate(), ParameterError);
}
