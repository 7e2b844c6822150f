#include "deepsic/noma.hpp"

#include <algorithm>
#include <cmath>

namespace deepsic {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
}

double PowerAllocation::total() const {
    double s = 0.0;
    for (double p : powers) s += p;
    return s;
}

cplx qpsk_modulate(int b0, int b1) {
    return {(1 - 2 * b0) * kInvSqrt2, (1 - 2 * b1) * kInvSqrt2};
}

cplx qpsk_hard_decision(cplx z) {
    return {std::copysign(kInvSqrt2, z.real()), std::copysign(kInvSqrt2, z.imag())};
}

void qpsk_bits(cplx s, int& b0, int& b1) {
    b0 = s.real() < 0.0 ? 1 : 0;
    b1 = s.imag() < 0.0 ? 1 : 0;
}

QpskLlr qpsk_llr(cplx y, cplx effective_gain, double amplitude, double sigma_sq) {
    // Metric per constellation point: -|y - g a s|^2 / sigma^2.
    double metric[2][2];
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1) {
            const cplx s = qpsk_modulate(b0, b1);
            metric[b0][b1] = -std::norm(y - effective_gain * amplitude * s) / sigma_sq;
        }
    auto log_sum = [](double a, double b) {
        const double m = std::max(a, b);
        return m + std::log(std::exp(a - m) + std::exp(b - m));
    };
    QpskLlr out;
    out.b0 = log_sum(metric[1][0], metric[1][1]) - log_sum(metric[0][0], metric[0][1]);
    out.b1 = log_sum(metric[0][1], metric[1][1]) - log_sum(metric[0][0], metric[1][0]);
    return out;
}

void PddReliability::add(cplx residual) {
    const double v = std::norm(residual);
    if (samples_.size() < window_) {
        samples_.push_back(v);
    } else {
        samples_[next_] = v;
        next_ = (next_ + 1) % window_;
    }
}

double PddReliability::score() const {
    if (samples_.empty()) return 0.0;
    double s = 0.0;
    for (double v : samples_) s += v;
    return s / static_cast<double>(samples_.size());
}

CVec superpose(const std::vector<cplx>& symbols, const PowerAllocation& pa, const Precoders& pre) {
    const std::size_t k = symbols.size();
    if (pa.powers.size() != k || pre.w.size() != k)
        throw DimensionMismatch("superpose: per-user sizes differ");
    if (k == 0) throw DimensionMismatch("superpose: no users");
    const std::size_t m = pre.w[0].dim();
    CVec x(m);
    for (std::size_t i = 0; i < k; ++i) {
        if (pre.w[i].dim() != m) throw DimensionMismatch("superpose: precoder dims differ");
        const cplx c = std::sqrt(pa.powers[i]) * symbols[i];
        for (std::size_t a = 0; a < m; ++a) x[a] += c * pre.w[i][a];
    }
    return x;
}

cplx receive(const CVec& x, const CVec& h, SeededRng& rng, double sigma_n_sq) {
    cplx y = inner(h, x);
    if (sigma_n_sq > 0.0) y += rng.complex_gaussian(sigma_n_sq);
    return y;
}

SicResult sic_decode(cplx y, const std::vector<cplx>& gains, const PowerAllocation& pa,
                     const std::vector<int>& order, double sigma_sq,
                     const std::vector<cplx>* truth) {
    if (order.empty()) throw EmptyOrder("sic_decode: empty decode order");
    SicResult res;
    res.stage_order = order;
    cplx running = y;
    for (std::size_t si = 0; si < order.size(); ++si) {
        const int u = order[si];
        const cplx g = gains.at(static_cast<std::size_t>(u));
        const double a = std::sqrt(pa.powers.at(static_cast<std::size_t>(u)));
        if (si + 1 == order.size()) res.post_cancel_signal = running;

        SicStage st;
        st.user = u;
        st.llr = qpsk_llr(running, g, a, std::max(sigma_sq, 1e-300));
        const cplx ga = g * a;
        st.decoded_symbol = (std::abs(ga) > 0.0) ? qpsk_hard_decision(running / ga)
                                                 : qpsk_modulate(0, 0);
        if (truth != nullptr) {
            st.pdd_residual = truth->at(static_cast<std::size_t>(u)) - st.decoded_symbol;
        }
        const double rel = std::min(std::abs(st.llr.b0), std::abs(st.llr.b1));
        st.soft_residual = st.decoded_symbol * (1.0 - std::tanh(rel / 2.0));
        running -= ga * st.decoded_symbol;
        res.stages.push_back(st);
    }
    return res;
}

double ber_measure(const std::vector<int>& truth, const std::vector<int>& decoded) {
    if (truth.size() != decoded.size() || truth.empty())
        throw LengthMismatch("ber_measure: sequences must be equal length >= 1");
    std::size_t errs = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if ((truth[i] != 0) != (decoded[i] != 0)) ++errs;
    return static_cast<double>(errs) / static_cast<double>(truth.size());
}

}  // namespace deepsic
