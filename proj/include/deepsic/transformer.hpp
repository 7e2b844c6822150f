#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deepsic/rng.hpp"

namespace deepsic {

struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct WindowTooShort : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major real matrix used by the network.
struct RMat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> d;

    RMat() = default;
    RMat(std::size_t r, std::size_t c) : rows(r), cols(c), d(r * c, 0.0) {}
    double& at(std::size_t i, std::size_t j) { return d[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return d[i * cols + j]; }
    void zero() { std::fill(d.begin(), d.end(), 0.0); }
};

RMat matmul(const RMat& a, const RMat& b);
RMat matmul_tn(const RMat& a, const RMat& b);  // a^T b
RMat matmul_nt(const RMat& a, const RMat& b);  // a b^T

struct TransformerConfig {
    int seq_len = 10;       // T
    int d_model = 32;
    int n_heads = 2;
    int d_ff = 128;         // 4 * d_model
    int n_layers = 2;
    int d_out = 2;
    int input_features = 4;  // RSRQ, CQI, PDD, SNR

    void validate() const;
};

/// Per-feature standardization statistics, stored with the model.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Standardizer fit(const std::vector<RMat>& windows);
    RMat apply(const RMat& window) const;
};

struct TokenSequence {
    RMat tokens;  // T x input_features, standardized
};

/// One training sample: a raw (unstandardized) feature window plus targets.
struct Sample {
    RMat window;
    std::vector<double> target;
};
using Dataset = std::vector<Sample>;

struct LayerParams {
    RMat wq, wk, wv, wo;
    std::vector<double> ln1_g, ln1_b, ln2_g, ln2_b;
    RMat ff1, ff2;
    std::vector<double> ff1_b, ff2_b;
};

/// Attention(Q,K,V) = softmax(Q K^T / sqrt(d_k)) V, row-max stabilized.
RMat attention_forward(const RMat& q, const RMat& k, const RMat& v, int d_k);

class TransformerModel {
  public:
    TransformerModel(const TransformerConfig& cfg, SeededRng& rng);

    const TransformerConfig& config() const { return cfg_; }

    /// Standardize a raw window into a token sequence.
    TokenSequence encode(const RMat& window) const;

    /// Embedding plus sinusoidal positional encoding (exposed for tests).
    RMat embed_with_pe(const TokenSequence& seq) const;

    /// Full forward pass; increments the per-epoch complexity counter by the
    /// dominant-term bracket T^2 D + T D D_ff + D D_out.
    std::vector<double> forward(const TokenSequence& seq) const;

    /// Forward + manual reverse-mode gradients + one gradient-descent step.
    /// Loss is 1/2 sum of squared output errors.
    double backward_and_step(const TokenSequence& seq, const std::vector<double>& target,
                             double eta);

    /// Freeze the backbone; afterwards only the head trains.
    void freeze_backbone() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    /// Algorithm-style transfer fit: backbone frozen, head trained by plain
    /// gradient descent on the pooled embeddings.
    double transfer_fit(const Dataset& dataset, int epochs, double eta);

    double w_att_frobenius() const;
    std::uint64_t flop_counter() const { return flops_; }
    void reset_flop_counter() { flops_ = 0; }

    /// Hash of every backbone parameter byte (freeze contract witness).
    std::uint64_t backbone_hash() const;

    Standardizer& standardizer() { return std_; }
    const Standardizer& standardizer() const { return std_; }

    /// All trainable tensors with names, for checkpointing and grad checks.
    std::vector<std::pair<std::string, RMat*>> named_matrices();
    std::vector<std::pair<std::string, std::vector<double>*>> named_vectors();

    std::string to_json() const;
    static TransformerModel from_json(const std::string& json_text);

  private:
    struct LayerCache;
    struct ForwardCache;
    void forward_cached(const TokenSequence& seq, ForwardCache& cache) const;

    TransformerConfig cfg_;
    RMat embed_;                 // F x D
    RMat pe_;                    // T x D, fixed sinusoidal
    std::vector<LayerParams> layers_;
    RMat head_;                  // D x d_out
    std::vector<double> head_b_;
    Standardizer std_;
    bool frozen_ = false;
    mutable std::uint64_t flops_ = 0;
};

/// Gaussian feature jitter with sigma = noise_scale * per-feature stddev;
/// returns the original samples followed by one jittered copy of each.
Dataset augment_dataset(const Dataset& dataset, SeededRng& rng, double noise_scale);

}  // namespace deepsic
