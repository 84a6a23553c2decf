#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pale/dataset.hpp"
#include "pale/evaluation.hpp"
#include "pale/gaussian_model.hpp"
#include "pale/tensor_io.hpp"

namespace pale::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                              double scale = 1.0);

/// Rows drawn from N(mean, diag(stddev^2)).
EmbeddingMatrix gaussian_rows(std::size_t rows, std::span<const double> mean,
                              std::span<const double> stddev, std::mt19937_64& rng);

Eigen::VectorXd random_vector(std::size_t d, std::mt19937_64& rng, double scale = 1.0);

Eigen::MatrixXd to_eigen(const EmbeddingMatrix& m);
EmbeddingMatrix from_eigen(const Eigen::MatrixXd& m);

/// Dense (1/N) Z^T Z of the mean-centered rows, built entry by entry.
Eigen::MatrixXd dense_covariance(const EmbeddingMatrix& m);
Eigen::VectorXd dense_mean(const EmbeddingMatrix& m);

/// sqrt((z - mu)^T C^{-1} (z - mu)) through an LDLT solve on the dense covariance.
double dense_mahalanobis(const EmbeddingMatrix& train, const Eigen::VectorXd& z);

/// Counts (pos, neg) pairs directly: wins + ties / 2 over n_pos * n_neg.
double pairwise_auroc(std::span<const LabeledScore> scores);

/// Two-class fixture: shared anisotropic diagonal covariance (stddev 1 on
/// the first `strong` axes, `weak_std` elsewhere), class means +-half_gap on
/// axis 0. Truthful sits at -half_gap.
struct SyntheticClasses {
    EmbeddingMatrix train_truthful;
    EmbeddingMatrix train_hallucinated;
    EmbeddingMatrix test;        // truthful rows first, then hallucinated
    std::vector<Label> test_labels;
};

struct SyntheticSpec {
    std::size_t dim = 64;
    std::size_t strong = 5;
    double weak_std = 0.25;
    double half_gap = 3.0;
    std::size_t train_per_class = 500;
    std::size_t test_per_class = 200;
    std::uint64_t seed = 1;
    std::vector<double> offset;  // added to every row when non-empty
};

SyntheticClasses make_synthetic(const SyntheticSpec& spec);

/// Both classes drawn from the same distribution.
SyntheticClasses make_noise(const SyntheticSpec& spec);

DetectionTask to_task(const SyntheticClasses& s);

/// Dataset whose examples label the rows of `s.test` in order.
Dataset test_dataset(const SyntheticClasses& s, const std::string& prefix = "t");

}  // namespace pale::testing
