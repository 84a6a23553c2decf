#include "fixtures.hpp"

#include <atomic>
#include <chrono>

namespace pale::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("pale-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                              double scale) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<float> data(rows * cols);
    for (auto& v : data) v = static_cast<float>(dist(rng));
    return EmbeddingMatrix(rows, cols, std::move(data));
}

EmbeddingMatrix gaussian_rows(std::size_t rows, std::span<const double> mean,
                              std::span<const double> stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    const std::size_t d = mean.size();
    std::vector<float> data(rows * d);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            data[i * d + j] = static_cast<float>(mean[j] + stddev[j] * dist(rng));
        }
    }
    return EmbeddingMatrix(rows, d, std::move(data));
}

Eigen::VectorXd random_vector(std::size_t d, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> dist(0.0, scale);
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
    return v;
}

Eigen::MatrixXd to_eigen(const EmbeddingMatrix& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    }
    return out;
}

EmbeddingMatrix from_eigen(const Eigen::MatrixXd& m) {
    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(static_cast<float>(m(i, j)));
    }
    return EmbeddingMatrix(m.rows(), m.cols(), std::move(data));
}

Eigen::VectorXd dense_mean(const EmbeddingMatrix& m) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) mu(j) += m(i, j);
    }
    return mu / static_cast<double>(m.rows());
}

Eigen::MatrixXd dense_covariance(const EmbeddingMatrix& m) {
    const Eigen::VectorXd mu = dense_mean(m);
    const auto d = static_cast<Eigen::Index>(m.cols());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (Eigen::Index a = 0; a < d; ++a) {
            const double za = m(i, a) - mu(a);
            for (Eigen::Index b = 0; b < d; ++b) c(a, b) += za * (m(i, b) - mu(b));
        }
    }
    return c / static_cast<double>(m.rows());
}

double dense_mahalanobis(const EmbeddingMatrix& train, const Eigen::VectorXd& z) {
    const Eigen::VectorXd diff = z - dense_mean(train);
    const Eigen::MatrixXd c = dense_covariance(train);
    return std::sqrt(diff.dot(c.ldlt().solve(diff)));
}

double pairwise_auroc(std::span<const LabeledScore> scores) {
    double credit = 0.0;
    std::size_t pos = 0;
    std::size_t neg = 0;
    for (const auto& s : scores) (s.hallucinated ? pos : neg)++;
    for (const auto& p : scores) {
        if (!p.hallucinated) continue;
        for (const auto& n : scores) {
            if (n.hallucinated) continue;
            if (p.delta > n.delta) credit += 1.0;
            else if (p.delta == n.delta) credit += 0.5;
        }
    }
    return credit / (static_cast<double>(pos) * static_cast<double>(neg));
}

namespace {

EmbeddingMatrix stack(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    std::vector<float> data(a.data().begin(), a.data().end());
    data.insert(data.end(), b.data().begin(), b.data().end());
    return EmbeddingMatrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

SyntheticClasses build(const SyntheticSpec& spec, double half_gap) {
    std::mt19937_64 rng(spec.seed);
    std::vector<double> stddev(spec.dim, spec.weak_std);
    for (std::size_t j = 0; j < std::min(spec.strong, spec.dim); ++j) stddev[j] = 1.0;
    std::vector<double> mu_t(spec.dim, 0.0);
    std::vector<double> mu_h(spec.dim, 0.0);
    if (!spec.offset.empty()) {
        for (std::size_t j = 0; j < spec.dim; ++j) mu_t[j] = mu_h[j] = spec.offset[j];
    }
    mu_t[0] -= half_gap;
    mu_h[0] += half_gap;

    auto train_t = gaussian_rows(spec.train_per_class, mu_t, stddev, rng);
    auto train_h = gaussian_rows(spec.train_per_class, mu_h, stddev, rng);
    auto test_t = gaussian_rows(spec.test_per_class, mu_t, stddev, rng);
    auto test_h = gaussian_rows(spec.test_per_class, mu_h, stddev, rng);

    std::vector<Label> labels(spec.test_per_class, Label::Truthful);
    labels.insert(labels.end(), spec.test_per_class, Label::Hallucinated);
    return {std::move(train_t), std::move(train_h), stack(test_t, test_h), std::move(labels)};
}

}  // namespace

SyntheticClasses make_synthetic(const SyntheticSpec& spec) { return build(spec, spec.half_gap); }

SyntheticClasses make_noise(const SyntheticSpec& spec) { return build(spec, 0.0); }

DetectionTask to_task(const SyntheticClasses& s) {
    return {s.train_truthful, s.train_hallucinated, LabeledMatrix{s.test, s.test_labels}};
}

Dataset test_dataset(const SyntheticClasses& s, const std::string& prefix) {
    Dataset d;
    d.metadata.source = "synthetic";
    for (std::size_t i = 0; i < s.test_labels.size(); ++i) {
        LabeledExample ex;
        ex.id = prefix + std::to_string(i);
        ex.question = "q" + std::to_string(i);
        ex.answer = "a" + std::to_string(i);
        ex.label = s.test_labels[i];
        ex.embedding_index = i;
        d.examples.push_back(std::move(ex));
    }
    return d;
}

}  // namespace pale::testing
