#include "deepsic/transformer.hpp"

#include <cmath>
#include <cstring>

#include "json.hpp"

namespace deepsic {

namespace {
constexpr double kLnEps = 1e-5;

void check(bool ok, const char* msg) {
    if (!ok) throw ShapeMismatch(msg);
}
}  // namespace

RMat matmul(const RMat& a, const RMat& b) {
    check(a.cols == b.rows, "matmul shape mismatch");
    RMat y(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) y.at(i, j) += aik * b.at(k, j);
        }
    return y;
}

RMat matmul_tn(const RMat& a, const RMat& b) {
    check(a.rows == b.rows, "matmul_tn shape mismatch");
    RMat y(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k)
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = a.at(k, i);
            if (aki == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) y.at(i, j) += aki * b.at(k, j);
        }
    return y;
}

RMat matmul_nt(const RMat& a, const RMat& b) {
    check(a.cols == b.cols, "matmul_nt shape mismatch");
    RMat y(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(j, k);
            y.at(i, j) = s;
        }
    return y;
}

void TransformerConfig::validate() const {
    if (seq_len < 1 || d_model < 1 || n_heads < 1 || d_ff < 1 || n_layers < 1 || d_out < 1 ||
        input_features < 1)
        throw ShapeMismatch("TransformerConfig: all dims must be >= 1");
    if (d_model % n_heads != 0) throw ShapeMismatch("d_model must be divisible by n_heads");
}

Standardizer Standardizer::fit(const std::vector<RMat>& windows) {
    Standardizer st;
    if (windows.empty()) return st;
    const std::size_t f = windows[0].cols;
    st.mean.assign(f, 0.0);
    st.stddev.assign(f, 0.0);
    std::size_t n = 0;
    for (const RMat& w : windows) {
        for (std::size_t t = 0; t < w.rows; ++t)
            for (std::size_t j = 0; j < f; ++j) st.mean[j] += w.at(t, j);
        n += w.rows;
    }
    for (std::size_t j = 0; j < f; ++j) st.mean[j] /= static_cast<double>(n);
    for (const RMat& w : windows)
        for (std::size_t t = 0; t < w.rows; ++t)
            for (std::size_t j = 0; j < f; ++j) {
                const double d = w.at(t, j) - st.mean[j];
                st.stddev[j] += d * d;
            }
    for (std::size_t j = 0; j < f; ++j) {
        st.stddev[j] = std::sqrt(st.stddev[j] / static_cast<double>(n));
        if (st.stddev[j] < 1e-12) st.stddev[j] = 1.0;
    }
    return st;
}

RMat Standardizer::apply(const RMat& window) const {
    RMat out = window;
    if (mean.empty()) return out;
    check(window.cols == mean.size(), "Standardizer feature count mismatch");
    for (std::size_t t = 0; t < out.rows; ++t)
        for (std::size_t j = 0; j < out.cols; ++j)
            out.at(t, j) = (out.at(t, j) - mean[j]) / stddev[j];
    return out;
}

RMat attention_forward(const RMat& q, const RMat& k, const RMat& v, int d_k) {
    check(d_k > 0, "attention: d_k must be > 0");
    check(q.cols == k.cols && k.rows == v.rows, "attention shape mismatch");
    RMat scores = matmul_nt(q, k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
    for (double& s : scores.d) s *= scale;
    // Row-softmax with max subtraction.
    for (std::size_t i = 0; i < scores.rows; ++i) {
        double m = scores.at(i, 0);
        for (std::size_t j = 1; j < scores.cols; ++j) m = std::max(m, scores.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < scores.cols; ++j) {
            scores.at(i, j) = std::exp(scores.at(i, j) - m);
            z += scores.at(i, j);
        }
        for (std::size_t j = 0; j < scores.cols; ++j) scores.at(i, j) /= z;
    }
    return matmul(scores, v);
}

struct TransformerModel::LayerCache {
    RMat input;                 // T x D
    RMat q, k, v;               // T x D
    std::vector<RMat> probs;    // per head, T x T
    RMat concat;                // T x D
    RMat m_out;                 // T x D
    RMat r1, n1_xhat, n1;       // T x D
    std::vector<double> n1_invstd;
    RMat f1pre, f1;             // T x Dff
    RMat f2, r2, n2_xhat, out;  // T x D
    std::vector<double> n2_invstd;
};

struct TransformerModel::ForwardCache {
    RMat h0;
    std::vector<LayerCache> layers;
    std::vector<double> pooled;
    std::vector<double> out;
};

namespace {

void layer_norm_forward(const RMat& in, const std::vector<double>& g,
                        const std::vector<double>& b, RMat& out, RMat& xhat,
                        std::vector<double>& invstd) {
    const std::size_t t = in.rows, d = in.cols;
    out = RMat(t, d);
    xhat = RMat(t, d);
    invstd.assign(t, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += in.at(i, j);
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = in.at(i, j) - mu;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + kLnEps);
        invstd[i] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double xh = (in.at(i, j) - mu) * is;
            xhat.at(i, j) = xh;
            out.at(i, j) = g[j] * xh + b[j];
        }
    }
}

// dIn from dOut; accumulates dG/dB.
RMat layer_norm_backward(const RMat& d_out, const RMat& xhat, const std::vector<double>& invstd,
                         const std::vector<double>& g, std::vector<double>& d_g,
                         std::vector<double>& d_b) {
    const std::size_t t = d_out.rows, d = d_out.cols;
    RMat d_in(t, d);
    for (std::size_t i = 0; i < t; ++i) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            d_b[j] += d_out.at(i, j);
            d_g[j] += d_out.at(i, j) * xhat.at(i, j);
            const double dxh = d_out.at(i, j) * g[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhat.at(i, j);
        }
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double dxh = d_out.at(i, j) * g[j];
            d_in.at(i, j) =
                invstd[i] * (dxh - inv_d * sum_dxhat - xhat.at(i, j) * inv_d * sum_dxhat_xhat);
        }
    }
    return d_in;
}

RMat init_matrix(std::size_t rows, std::size_t cols, SeededRng& rng) {
    RMat m(rows, cols);
    const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& v : m.d) v = (2.0 * rng.uniform() - 1.0) * r;
    return m;
}

}  // namespace

TransformerModel::TransformerModel(const TransformerConfig& cfg, SeededRng& rng) : cfg_(cfg) {
    cfg.validate();
    const auto t = static_cast<std::size_t>(cfg.seq_len);
    const auto d = static_cast<std::size_t>(cfg.d_model);
    const auto f = static_cast<std::size_t>(cfg.input_features);
    const auto dff = static_cast<std::size_t>(cfg.d_ff);
    const auto dout = static_cast<std::size_t>(cfg.d_out);

    embed_ = init_matrix(f, d, rng);
    pe_ = RMat(t, d);
    for (std::size_t pos = 0; pos < t; ++pos)
        for (std::size_t j = 0; j < d; ++j) {
            const double freq =
                std::pow(10000.0, -2.0 * static_cast<double>(j / 2) / static_cast<double>(d));
            pe_.at(pos, j) = (j % 2 == 0) ? std::sin(static_cast<double>(pos) * freq)
                                          : std::cos(static_cast<double>(pos) * freq);
        }
    for (int l = 0; l < cfg.n_layers; ++l) {
        LayerParams lp;
        lp.wq = init_matrix(d, d, rng);
        lp.wk = init_matrix(d, d, rng);
        lp.wv = init_matrix(d, d, rng);
        lp.wo = init_matrix(d, d, rng);
        lp.ln1_g.assign(d, 1.0);
        lp.ln1_b.assign(d, 0.0);
        lp.ln2_g.assign(d, 1.0);
        lp.ln2_b.assign(d, 0.0);
        lp.ff1 = init_matrix(d, dff, rng);
        lp.ff2 = init_matrix(dff, d, rng);
        lp.ff1_b.assign(dff, 0.0);
        lp.ff2_b.assign(d, 0.0);
        layers_.push_back(std::move(lp));
    }
    head_ = RMat(d, dout);  // zero head: prediction starts at the bias
    head_b_.assign(dout, 0.0);
}

TokenSequence TransformerModel::encode(const RMat& window) const {
    if (static_cast<int>(window.rows) != cfg_.seq_len)
        throw WindowTooShort("encode: window length must equal seq_len");
    check(static_cast<int>(window.cols) == cfg_.input_features, "encode: feature count mismatch");
    TokenSequence seq;
    seq.tokens = std_.apply(window);
    for (double v : seq.tokens.d)
        if (!std::isfinite(v)) throw ShapeMismatch("encode: non-finite token");
    return seq;
}

RMat TransformerModel::embed_with_pe(const TokenSequence& seq) const {
    RMat h0 = matmul(seq.tokens, embed_);
    for (std::size_t i = 0; i < h0.rows; ++i)
        for (std::size_t j = 0; j < h0.cols; ++j) h0.at(i, j) += pe_.at(i, j);
    return h0;
}

void TransformerModel::forward_cached(const TokenSequence& seq, ForwardCache& cache) const {
    const auto t = static_cast<std::size_t>(cfg_.seq_len);
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    const auto nh = static_cast<std::size_t>(cfg_.n_heads);
    const std::size_t dh = d / nh;
    check(seq.tokens.rows == t && seq.tokens.cols == static_cast<std::size_t>(cfg_.input_features),
          "forward: token shape mismatch");

    cache.h0 = embed_with_pe(seq);
    cache.layers.assign(static_cast<std::size_t>(cfg_.n_layers), {});
    RMat h = cache.h0;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const LayerParams& lp = layers_[l];
        LayerCache& lc = cache.layers[l];
        lc.input = h;
        lc.q = matmul(h, lp.wq);
        lc.k = matmul(h, lp.wk);
        lc.v = matmul(h, lp.wv);
        lc.concat = RMat(t, d);
        lc.probs.assign(nh, {});
        for (std::size_t hd = 0; hd < nh; ++hd) {
            const std::size_t off = hd * dh;
            RMat scores(t, t);
            for (std::size_t i = 0; i < t; ++i)
                for (std::size_t j = 0; j < t; ++j) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < dh; ++c)
                        s += lc.q.at(i, off + c) * lc.k.at(j, off + c);
                    scores.at(i, j) = s * scale;
                }
            for (std::size_t i = 0; i < t; ++i) {
                double m = scores.at(i, 0);
                for (std::size_t j = 1; j < t; ++j) m = std::max(m, scores.at(i, j));
                double z = 0.0;
                for (std::size_t j = 0; j < t; ++j) {
                    scores.at(i, j) = std::exp(scores.at(i, j) - m);
                    z += scores.at(i, j);
                }
                for (std::size_t j = 0; j < t; ++j) scores.at(i, j) /= z;
            }
            lc.probs[hd] = scores;
            for (std::size_t i = 0; i < t; ++i)
                for (std::size_t c = 0; c < dh; ++c) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < t; ++j)
                        s += scores.at(i, j) * lc.v.at(j, off + c);
                    lc.concat.at(i, off + c) = s;
                }
        }
        lc.m_out = matmul(lc.concat, lp.wo);
        lc.r1 = lc.input;
        for (std::size_t i = 0; i < lc.r1.d.size(); ++i) lc.r1.d[i] += lc.m_out.d[i];
        layer_norm_forward(lc.r1, lp.ln1_g, lp.ln1_b, lc.n1, lc.n1_xhat, lc.n1_invstd);

        lc.f1pre = matmul(lc.n1, lp.ff1);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < lc.f1pre.cols; ++j) lc.f1pre.at(i, j) += lp.ff1_b[j];
        lc.f1 = lc.f1pre;
        for (double& v : lc.f1.d) v = v > 0.0 ? v : 0.0;
        lc.f2 = matmul(lc.f1, lp.ff2);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < d; ++j) lc.f2.at(i, j) += lp.ff2_b[j];
        lc.r2 = lc.n1;
        for (std::size_t i = 0; i < lc.r2.d.size(); ++i) lc.r2.d[i] += lc.f2.d[i];
        layer_norm_forward(lc.r2, lp.ln2_g, lp.ln2_b, lc.out, lc.n2_xhat, lc.n2_invstd);
        h = lc.out;
    }

    cache.pooled.assign(d, 0.0);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j) cache.pooled[j] += h.at(i, j);
    for (double& v : cache.pooled) v /= static_cast<double>(t);

    cache.out.assign(static_cast<std::size_t>(cfg_.d_out), 0.0);
    for (std::size_t o = 0; o < cache.out.size(); ++o) {
        double s = head_b_[o];
        for (std::size_t j = 0; j < d; ++j) s += cache.pooled[j] * head_.at(j, o);
        cache.out[o] = s;
    }

    // Complexity accounting: dominant-term bracket per processed sample.
    flops_ += static_cast<std::uint64_t>(cfg_.seq_len) * cfg_.seq_len * cfg_.d_model +
              static_cast<std::uint64_t>(cfg_.seq_len) * cfg_.d_model * cfg_.d_ff +
              static_cast<std::uint64_t>(cfg_.d_model) * cfg_.d_out;
}

std::vector<double> TransformerModel::forward(const TokenSequence& seq) const {
    ForwardCache cache;
    forward_cached(seq, cache);
    return cache.out;
}

double TransformerModel::backward_and_step(const TokenSequence& seq,
                                           const std::vector<double>& target, double eta) {
    check(target.size() == static_cast<std::size_t>(cfg_.d_out), "target size mismatch");
    ForwardCache cache;
    forward_cached(seq, cache);

    const auto t = static_cast<std::size_t>(cfg_.seq_len);
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    const auto nh = static_cast<std::size_t>(cfg_.n_heads);
    const std::size_t dh = d / nh;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // Local stability guard on the head Jacobian (pooled vector, plus bias).
    double pooled_sq = 1.0;
    for (double v : cache.pooled) pooled_sq += v * v;
    if (eta >= 0.9 * 2.0 / pooled_sq)
        throw std::invalid_argument("backward_and_step: eta exceeds 0.9x the local bound");

    double loss = 0.0;
    std::vector<double> d_out_vec(cache.out.size());
    for (std::size_t o = 0; o < cache.out.size(); ++o) {
        const double e = cache.out[o] - target[o];
        loss += 0.5 * e * e;
        d_out_vec[o] = e;
    }
    if (!std::isfinite(loss)) throw NonFiniteLoss("backward_and_step: loss is not finite");

    // Head gradients.
    RMat d_head(d, cache.out.size());
    std::vector<double> d_head_b(cache.out.size());
    std::vector<double> d_pooled(d, 0.0);
    for (std::size_t o = 0; o < cache.out.size(); ++o) {
        d_head_b[o] = d_out_vec[o];
        for (std::size_t j = 0; j < d; ++j) {
            d_head.at(j, o) = cache.pooled[j] * d_out_vec[o];
            d_pooled[j] += head_.at(j, o) * d_out_vec[o];
        }
    }

    RMat d_h(t, d);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j) d_h.at(i, j) = d_pooled[j] / static_cast<double>(t);

    struct LayerGrads {
        RMat wq, wk, wv, wo, ff1, ff2;
        std::vector<double> ln1_g, ln1_b, ln2_g, ln2_b, ff1_b, ff2_b;
    };
    std::vector<LayerGrads> grads(layers_.size());

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const LayerParams& lp = layers_[li];
        const LayerCache& lc = cache.layers[li];
        LayerGrads& g = grads[li];
        g.ln1_g.assign(d, 0.0);
        g.ln1_b.assign(d, 0.0);
        g.ln2_g.assign(d, 0.0);
        g.ln2_b.assign(d, 0.0);
        g.ff1_b.assign(static_cast<std::size_t>(cfg_.d_ff), 0.0);
        g.ff2_b.assign(d, 0.0);

        // LN2 backward: d_h -> d_r2
        RMat d_r2 = layer_norm_backward(d_h, lc.n2_xhat, lc.n2_invstd, lp.ln2_g, g.ln2_g,
                                        g.ln2_b);
        // r2 = n1 + f2
        RMat d_n1 = d_r2;
        const RMat& d_f2 = d_r2;
        // f2 = relu(f1pre) ff2 + b
        g.ff2 = matmul_tn(lc.f1, d_f2);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < d; ++j) g.ff2_b[j] += d_f2.at(i, j);
        RMat d_f1 = matmul_nt(d_f2, layers_[li].ff2);
        for (std::size_t i = 0; i < d_f1.d.size(); ++i)
            if (lc.f1pre.d[i] <= 0.0) d_f1.d[i] = 0.0;
        g.ff1 = matmul_tn(lc.n1, d_f1);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < d_f1.cols; ++j) g.ff1_b[j] += d_f1.at(i, j);
        RMat d_n1_from_ff = matmul_nt(d_f1, lp.ff1);
        for (std::size_t i = 0; i < d_n1.d.size(); ++i) d_n1.d[i] += d_n1_from_ff.d[i];

        // LN1 backward: d_n1 -> d_r1
        RMat d_r1 = layer_norm_backward(d_n1, lc.n1_xhat, lc.n1_invstd, lp.ln1_g, g.ln1_g,
                                        g.ln1_b);
        // r1 = input + m_out
        RMat d_input = d_r1;
        const RMat& d_m = d_r1;
        // m = concat wo
        g.wo = matmul_tn(lc.concat, d_m);
        RMat d_concat = matmul_nt(d_m, lp.wo);

        RMat d_q(t, d), d_k(t, d), d_v(t, d);
        for (std::size_t hd = 0; hd < nh; ++hd) {
            const std::size_t off = hd * dh;
            const RMat& p = lc.probs[hd];
            // dP = dOh Vh^T ; dVh = P^T dOh
            RMat d_p(t, t);
            for (std::size_t i = 0; i < t; ++i)
                for (std::size_t j = 0; j < t; ++j) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < dh; ++c)
                        s += d_concat.at(i, off + c) * lc.v.at(j, off + c);
                    d_p.at(i, j) = s;
                }
            for (std::size_t j = 0; j < t; ++j)
                for (std::size_t c = 0; c < dh; ++c) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < t; ++i)
                        s += p.at(i, j) * d_concat.at(i, off + c);
                    d_v.at(j, off + c) += s;
                }
            // Softmax rows backward.
            RMat d_s(t, t);
            for (std::size_t i = 0; i < t; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < t; ++j) dot += d_p.at(i, j) * p.at(i, j);
                for (std::size_t j = 0; j < t; ++j)
                    d_s.at(i, j) = p.at(i, j) * (d_p.at(i, j) - dot);
            }
            // dQh = dS Kh * scale ; dKh = dS^T Qh * scale
            for (std::size_t i = 0; i < t; ++i)
                for (std::size_t c = 0; c < dh; ++c) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < t; ++j)
                        s += d_s.at(i, j) * lc.k.at(j, off + c);
                    d_q.at(i, off + c) += s * scale;
                }
            for (std::size_t j = 0; j < t; ++j)
                for (std::size_t c = 0; c < dh; ++c) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < t; ++i)
                        s += d_s.at(i, j) * lc.q.at(i, off + c);
                    d_k.at(j, off + c) += s * scale;
                }
        }
        g.wq = matmul_tn(lc.input, d_q);
        g.wk = matmul_tn(lc.input, d_k);
        g.wv = matmul_tn(lc.input, d_v);
        RMat d_in_q = matmul_nt(d_q, lp.wq);
        RMat d_in_k = matmul_nt(d_k, lp.wk);
        RMat d_in_v = matmul_nt(d_v, lp.wv);
        for (std::size_t i = 0; i < d_input.d.size(); ++i)
            d_input.d[i] += d_in_q.d[i] + d_in_k.d[i] + d_in_v.d[i];

        d_h = std::move(d_input);
    }

    // dW_embed = X^T dH0; after the loop d_h holds dH0.
    RMat d_embed = matmul_tn(seq.tokens, d_h);

    // Apply the step (head always; backbone only when not frozen).
    auto step_mat = [eta](RMat& w, const RMat& gw) {
        for (std::size_t i = 0; i < w.d.size(); ++i) w.d[i] -= eta * gw.d[i];
    };
    auto step_vec = [eta](std::vector<double>& w, const std::vector<double>& gw) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * gw[i];
    };
    step_mat(head_, d_head);
    step_vec(head_b_, d_head_b);
    if (!frozen_) {
        step_mat(embed_, d_embed);
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            LayerParams& lp = layers_[li];
            LayerGrads& g = grads[li];
            step_mat(lp.wq, g.wq);
            step_mat(lp.wk, g.wk);
            step_mat(lp.wv, g.wv);
            step_mat(lp.wo, g.wo);
            step_mat(lp.ff1, g.ff1);
            step_mat(lp.ff2, g.ff2);
            step_vec(lp.ff1_b, g.ff1_b);
            step_vec(lp.ff2_b, g.ff2_b);
            step_vec(lp.ln1_g, g.ln1_g);
            step_vec(lp.ln1_b, g.ln1_b);
            step_vec(lp.ln2_g, g.ln2_g);
            step_vec(lp.ln2_b, g.ln2_b);
        }
    }
    return loss;
}

double TransformerModel::transfer_fit(const Dataset& dataset, int epochs, double eta) {
    if (!frozen_)
        throw std::logic_error("transfer_fit: model must be frozen first");
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    const auto dout = static_cast<std::size_t>(cfg_.d_out);
    // Backbone is frozen, so pooled embeddings are fixed per sample.
    std::vector<std::vector<double>> pooled;
    std::vector<std::vector<double>> targets;
    for (const Sample& s : dataset) {
        ForwardCache cache;
        forward_cached(encode(s.window), cache);
        pooled.push_back(cache.pooled);
        check(s.target.size() == dout, "transfer_fit: target size mismatch");
        targets.push_back(s.target);
    }
    const double n = static_cast<double>(dataset.size());
    double mse = 0.0;
    for (int ep = 0; ep < epochs; ++ep) {
        RMat g(d, dout);
        std::vector<double> gb(dout, 0.0);
        mse = 0.0;
        for (std::size_t i = 0; i < pooled.size(); ++i) {
            for (std::size_t o = 0; o < dout; ++o) {
                double pred = head_b_[o];
                for (std::size_t j = 0; j < d; ++j) pred += pooled[i][j] * head_.at(j, o);
                const double e = pred - targets[i][o];
                mse += e * e;
                gb[o] += e / n;
                for (std::size_t j = 0; j < d; ++j) g.at(j, o) += pooled[i][j] * e / n;
            }
        }
        mse /= n;
        for (std::size_t i = 0; i < g.d.size(); ++i) head_.d[i] -= eta * g.d[i];
        for (std::size_t o = 0; o < dout; ++o) head_b_[o] -= eta * gb[o];
    }
    return mse;
}

double TransformerModel::w_att_frobenius() const {
    double s = 0.0;
    for (const LayerParams& lp : layers_) {
        for (double v : lp.wq.d) s += v * v;
        for (double v : lp.wk.d) s += v * v;
        for (double v : lp.wv.d) s += v * v;
        for (double v : lp.wo.d) s += v * v;
    }
    return std::sqrt(s);
}

namespace {
void hash_doubles(std::uint64_t& h, const std::vector<double>& v) {
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        h ^= bits;
        h *= 0x100000001b3ULL;
    }
}
}  // namespace

std::uint64_t TransformerModel::backbone_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    hash_doubles(h, embed_.d);
    for (const LayerParams& lp : layers_) {
        hash_doubles(h, lp.wq.d);
        hash_doubles(h, lp.wk.d);
        hash_doubles(h, lp.wv.d);
        hash_doubles(h, lp.wo.d);
        hash_doubles(h, lp.ff1.d);
        hash_doubles(h, lp.ff2.d);
        hash_doubles(h, lp.ff1_b);
        hash_doubles(h, lp.ff2_b);
        hash_doubles(h, lp.ln1_g);
        hash_doubles(h, lp.ln1_b);
        hash_doubles(h, lp.ln2_g);
        hash_doubles(h, lp.ln2_b);
    }
    return h;
}

std::vector<std::pair<std::string, RMat*>> TransformerModel::named_matrices() {
    std::vector<std::pair<std::string, RMat*>> out;
    out.emplace_back("embed", &embed_);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        out.emplace_back(p + "wq", &layers_[l].wq);
        out.emplace_back(p + "wk", &layers_[l].wk);
        out.emplace_back(p + "wv", &layers_[l].wv);
        out.emplace_back(p + "wo", &layers_[l].wo);
        out.emplace_back(p + "ff1", &layers_[l].ff1);
        out.emplace_back(p + "ff2", &layers_[l].ff2);
    }
    out.emplace_back("head", &head_);
    return out;
}

std::vector<std::pair<std::string, std::vector<double>*>> TransformerModel::named_vectors() {
    std::vector<std::pair<std::string, std::vector<double>*>> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        out.emplace_back(p + "ff1_b", &layers_[l].ff1_b);
        out.emplace_back(p + "ff2_b", &layers_[l].ff2_b);
        out.emplace_back(p + "ln1_g", &layers_[l].ln1_g);
        out.emplace_back(p + "ln1_b", &layers_[l].ln1_b);
        out.emplace_back(p + "ln2_g", &layers_[l].ln2_g);
        out.emplace_back(p + "ln2_b", &layers_[l].ln2_b);
    }
    out.emplace_back("head_b", &head_b_);
    return out;
}

std::string TransformerModel::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["config"] = {{"seq_len", cfg_.seq_len},       {"d_model", cfg_.d_model},
                   {"n_heads", cfg_.n_heads},       {"d_ff", cfg_.d_ff},
                   {"n_layers", cfg_.n_layers},     {"d_out", cfg_.d_out},
                   {"input_features", cfg_.input_features}};
    j["frozen"] = frozen_;
    j["standardizer"] = {{"mean", std_.mean}, {"stddev", std_.stddev}};
    auto* self = const_cast<TransformerModel*>(this);
    for (auto& [name, m] : self->named_matrices())
        j["matrices"][name] = {{"rows", m->rows}, {"cols", m->cols}, {"data", m->d}};
    for (auto& [name, v] : self->named_vectors()) j["vectors"][name] = *v;
    return j.dump();
}

TransformerModel TransformerModel::from_json(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    TransformerConfig cfg;
    const auto& jc = j.at("config");
    cfg.seq_len = jc.at("seq_len");
    cfg.d_model = jc.at("d_model");
    cfg.n_heads = jc.at("n_heads");
    cfg.d_ff = jc.at("d_ff");
    cfg.n_layers = jc.at("n_layers");
    cfg.d_out = jc.at("d_out");
    cfg.input_features = jc.at("input_features");
    SeededRng rng(0);
    TransformerModel model(cfg, rng);
    model.frozen_ = j.at("frozen");
    model.std_.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    model.std_.stddev = j.at("standardizer").at("stddev").get<std::vector<double>>();
    for (auto& [name, m] : model.named_matrices()) {
        const auto& jm = j.at("matrices").at(name);
        m->rows = jm.at("rows");
        m->cols = jm.at("cols");
        m->d = jm.at("data").get<std::vector<double>>();
    }
    for (auto& [name, v] : model.named_vectors())
        *v = j.at("vectors").at(name).get<std::vector<double>>();
    return model;
}

Dataset augment_dataset(const Dataset& dataset, SeededRng& rng, double noise_scale) {
    if (noise_scale < 0.0)
        throw std::invalid_argument("augment_dataset: noise_scale must be >= 0");
    std::vector<RMat> windows;
    for (const Sample& s : dataset) windows.push_back(s.window);
    const Standardizer st = Standardizer::fit(windows);
    Dataset out = dataset;
    for (const Sample& s : dataset) {
        Sample jittered = s;
        for (std::size_t t = 0; t < jittered.window.rows; ++t)
            for (std::size_t f = 0; f < jittered.window.cols; ++f)
                jittered.window.at(t, f) += noise_scale * st.stddev[f] * rng.gaussian();
        out.push_back(std::move(jittered));
    }
    return out;
}

}  // namespace deepsic
