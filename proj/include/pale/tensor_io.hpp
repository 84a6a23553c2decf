#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace pale {

/// N x d matrix of pooled hidden-state embeddings, one row per example.
/// Stored row-major as 32-bit floats; every entry is finite.
class EmbeddingMatrix {
public:
    /// Throws ValidationError when rows or cols is zero, the data length is
    /// not rows * cols, or any entry is NaN/Inf.
    EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> row(std::size_t i) const;
    float operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<float> data_;
};

/// Per-token hidden states h_i of one sequence at one layer, T x d.
class TokenSequenceEmbedding {
public:
    /// Throws EmptySequenceError when tokens is zero and ValidationError on
    /// shape mismatch or non-finite entries.
    TokenSequenceEmbedding(std::size_t tokens, std::size_t dim, std::vector<float> data);

    std::size_t tokens() const noexcept { return tokens_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const float> token(std::size_t i) const;
    std::span<const float> data() const noexcept { return data_; }

private:
    std::size_t tokens_;
    std::size_t dim_;
    std::vector<float> data_;
};

inline constexpr std::size_t kEmb1HeaderBytes = 12;

/// Writes the EMB1 encoding: "EMB1", u32le N, u32le d, then N*d f32le.
/// Returns the number of bytes written.
std::size_t write_matrix(const EmbeddingMatrix& m, std::ostream& out);

/// Reads one EMB1 matrix. Throws FormatError on bad magic, LengthError on a
/// short payload and ValidationError (naming row/col) on non-finite entries.
EmbeddingMatrix read_matrix(std::istream& in);

std::vector<std::uint8_t> encode_matrix(const EmbeddingMatrix& m);
EmbeddingMatrix decode_matrix(std::span<const std::uint8_t> bytes);

void write_matrix_file(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_matrix_file(const std::filesystem::path& path);

/// Token average accumulated sequentially in double over token index, then
/// divided by T and narrowed to float.
std::vector<float> mean_pool(const TokenSequenceEmbedding& seq);

/// The final token's hidden state, unchanged.
std::vector<float> last_token_pool(const TokenSequenceEmbedding& seq);

}  // namespace pale
