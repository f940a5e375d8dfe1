#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace webshop {

/// Hashed token ids for one side of the scorer.
using TokenIds = std::vector<std::uint32_t>;

/// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Gradient of a loss with respect to every scorer parameter. Embedding
/// gradients are sparse: only rows that were looked up appear.
struct ScorerGradient {
    std::vector<double> w1, w2, w3, w6, wv;
    Matrix w4, w5;
    std::map<std::uint32_t, std::vector<double>> embedding;

    explicit ScorerGradient(std::size_t dim = 0);
    std::vector<double>& embedding_row(std::uint32_t id);
    void add(const ScorerGradient& other, double scale = 1.0);
};

/// Cross-attention action scorer over hashed token embeddings.
///
///   alpha_ij = w1.o_i + w2.a_j + w3.(o_i * a_j)
///   c_j      = sum_i softmax_i(alpha_ij) o_i
///   q        = sum_j softmax_j(max_i alpha_ij) a_j
///   ca_j     = W5 leakyRelu(W4 [a_j, c_j, a_j*c_j, q*c_j])
///   S(o, a)  = w6 . mean_j ca_j
///
/// W4 maps 4d -> d and W5 maps d -> d. The value head reads the mean
/// observation embedding through the same table: V(o) = wv . mean_i o_i.
class CrossAttentionScorer {
public:
    static constexpr double kLeakySlope = 0.01;

    CrossAttentionScorer() = default;
    /// All parameters zero.
    CrossAttentionScorer(std::size_t dim, std::size_t vocab_size, double gamma = 0.99);

    /// Uniform(-scale, scale) init for every parameter.
    static CrossAttentionScorer random(std::size_t dim, std::size_t vocab_size, std::uint64_t seed,
                                       double scale = 0.1, double gamma = 0.99);
    /// Training init: embeddings Uniform(-embedding_scale, embedding_scale),
    /// weights Uniform(+-sqrt(3 / fan_in)), value head zero.
    static CrossAttentionScorer fan_in_init(std::size_t dim, std::size_t vocab_size, std::uint64_t seed,
                                            double embedding_scale = 0.5, double gamma = 0.99);

    std::size_t dim() const { return dim_; }
    std::size_t vocab_size() const { return vocab_size_; }
    double gamma() const { return gamma_; }
    void set_gamma(double gamma) { gamma_ = gamma; }

    std::uint32_t token_id(const std::string& token) const;
    TokenIds token_ids(const std::vector<std::string>& tokens) const;

    /// Throws Error(kInvalidArgument) on empty token lists.
    double score(const TokenIds& observation, const TokenIds& action) const;
    /// Accumulates upstream * dS/dtheta into grad.
    void score_backward(const TokenIds& observation, const TokenIds& action, double upstream,
                        ScorerGradient& grad) const;

    double value(const TokenIds& observation) const;
    void value_backward(const TokenIds& observation, double upstream, ScorerGradient& grad) const;

    /// theta <- theta - lr * grad
    void apply(const ScorerGradient& grad, double learning_rate);

    /// Flat view of every parameter (embedding rows included), for
    /// finite-difference checks and checkpoint comparison.
    std::vector<double*> parameter_pointers();
    bool all_finite() const;

    // Parameters are public data, as in a plain parameter bundle.
    Matrix embedding;
    std::vector<double> w1, w2, w3, w6, wv;
    Matrix w4, w5;

    friend bool operator==(const CrossAttentionScorer&, const CrossAttentionScorer&) = default;

private:
    std::size_t dim_ = 0;
    std::size_t vocab_size_ = 0;
    double gamma_ = 0.99;
};

/// Numerically stable softmax (max subtracted).
std::vector<double> softmax(std::span<const double> logits);

struct ScoredActions {
    std::vector<double> scores;
    std::vector<double> probs;
};

/// Scores every candidate and normalizes. Throws on an empty candidate list.
ScoredActions policy_distribution(const CrossAttentionScorer& scorer, const TokenIds& observation,
                                  const std::vector<TokenIds>& actions);

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const CrossAttentionScorer& scorer, const std::filesystem::path& path);
CrossAttentionScorer load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_json(const CrossAttentionScorer& scorer);
CrossAttentionScorer checkpoint_from_json(const std::string& text);

}  // namespace webshop
