#include "pale/tensor_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "pale/error.hpp"
#include "pale/file_util.hpp"

namespace pale {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'M', 'B', '1'};

void put_u32(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
    p[2] = static_cast<std::uint8_t>(v >> 16);
    p[3] = static_cast<std::uint8_t>(v >> 24);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void check_finite(std::span<const float> data, std::size_t cols, const char* what) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw ValidationError(std::string("non-finite ") + what + " entry at row " +
                                  std::to_string(i / cols) + ", col " +
                                  std::to_string(i % cols));
        }
    }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ == 0 || cols_ == 0) {
        throw ValidationError("embedding matrix needs at least one row and one column");
    }
    if (rows_ > std::numeric_limits<std::uint32_t>::max() ||
        cols_ > std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError("embedding matrix dimensions exceed 32 bits");
    }
    if (data_.size() != rows_ * cols_) {
        throw ValidationError("embedding data length " + std::to_string(data_.size()) +
                              " does not match " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
    check_finite(data_, cols_, "matrix");
}

std::span<const float> EmbeddingMatrix::row(std::size_t i) const {
    if (i >= rows_) {
        throw ShapeError("row " + std::to_string(i) + " out of range for " +
                         std::to_string(rows_) + " rows");
    }
    return std::span<const float>(data_).subspan(i * cols_, cols_);
}

TokenSequenceEmbedding::TokenSequenceEmbedding(std::size_t tokens, std::size_t dim,
                                               std::vector<float> data)
    : tokens_(tokens), dim_(dim), data_(std::move(data)) {
    if (tokens_ == 0) {
        throw EmptySequenceError("token sequence is empty");
    }
    if (dim_ == 0 || data_.size() != tokens_ * dim_) {
        throw ValidationError("token sequence data does not match " + std::to_string(tokens_) +
                              "x" + std::to_string(dim_));
    }
    check_finite(data_, dim_, "token");
}

std::span<const float> TokenSequenceEmbedding::token(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * dim_, dim_);
}

std::vector<std::uint8_t> encode_matrix(const EmbeddingMatrix& m) {
    std::vector<std::uint8_t> bytes(kEmb1HeaderBytes + m.data().size() * 4);
    std::memcpy(bytes.data(), kMagic.data(), kMagic.size());
    put_u32(bytes.data() + 4, static_cast<std::uint32_t>(m.rows()));
    put_u32(bytes.data() + 8, static_cast<std::uint32_t>(m.cols()));
    std::uint8_t* p = bytes.data() + kEmb1HeaderBytes;
    for (float v : m.data()) {
        put_u32(p, std::bit_cast<std::uint32_t>(v));
        p += 4;
    }
    return bytes;
}

EmbeddingMatrix decode_matrix(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size() ||
        std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
        throw FormatError("missing EMB1 magic");
    }
    if (bytes.size() < kEmb1HeaderBytes) {
        throw LengthError(kEmb1HeaderBytes, bytes.size());
    }
    const std::size_t rows = get_u32(bytes.data() + 4);
    const std::size_t cols = get_u32(bytes.data() + 8);
    const std::size_t expected = rows * cols * 4;
    const std::size_t actual = bytes.size() - kEmb1HeaderBytes;
    if (actual != expected) {
        throw LengthError(expected, actual);
    }
    std::vector<float> data(rows * cols);
    const std::uint8_t* p = bytes.data() + kEmb1HeaderBytes;
    for (auto& v : data) {
        v = std::bit_cast<float>(get_u32(p));
        p += 4;
    }
    return EmbeddingMatrix(rows, cols, std::move(data));
}

std::size_t write_matrix(const EmbeddingMatrix& m, std::ostream& out) {
    const auto bytes = encode_matrix(m);
    constexpr std::size_t kChunk = 1 << 16;
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const std::size_t n = std::min(kChunk, bytes.size() - offset);
        out.write(reinterpret_cast<const char*>(bytes.data() + offset),
                  static_cast<std::streamsize>(n));
        if (!out) {
            throw IoError("EMB1 write failed", offset);
        }
        offset += n;
    }
    return bytes.size();
}

EmbeddingMatrix read_matrix(std::istream& in) {
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
    return decode_matrix(bytes);
}

void write_matrix_file(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    const auto bytes = encode_matrix(m);
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                             bytes.size()));
}

EmbeddingMatrix read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read_matrix(in);
}

std::vector<float> mean_pool(const TokenSequenceEmbedding& seq) {
    std::vector<double> acc(seq.dim(), 0.0);
    for (std::size_t i = 0; i < seq.tokens(); ++i) {
        const auto tok = seq.token(i);
        for (std::size_t j = 0; j < seq.dim(); ++j) {
            acc[j] += static_cast<double>(tok[j]);
        }
    }
    std::vector<float> out(seq.dim());
    const double t = static_cast<double>(seq.tokens());
    for (std::size_t j = 0; j < seq.dim(); ++j) {
        out[j] = static_cast<float>(acc[j] / t);
    }
    return out;
}

std::vector<float> last_token_pool(const TokenSequenceEmbedding& seq) {
    const auto last = seq.token(seq.tokens() - 1);
    return {last.begin(), last.end()};
}

}  // namespace pale
