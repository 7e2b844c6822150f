#pragma once

#include <optional>
#include <vector>

#include "deepsic/complex_linalg.hpp"
#include "deepsic/rng.hpp"

namespace deepsic {

struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyOrder : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Per-user transmit powers, linear scale. Weaker-channel users get more power.
struct PowerAllocation {
    std::vector<double> powers;
    double total() const;
};

/// Unit-norm precoding vectors, one per user.
struct Precoders {
    std::vector<CVec> w;
};

/// Gray-mapped unit-energy QPSK. Bit 0 selects the real sign, bit 1 the
/// imaginary sign; bit value 1 maps to the negative half-plane.
cplx qpsk_modulate(int b0, int b1);
/// Nearest constellation point (hard decision).
cplx qpsk_hard_decision(cplx z);
/// Bits of a constellation point.
void qpsk_bits(cplx s, int& b0, int& b1);

struct QpskLlr {
    double b0 = 0.0;
    double b1 = 0.0;
};

/// Exact per-bit LLR log(P(b=1)/P(b=0)) by summation over the four QPSK
/// points, max-subtraction stabilized. Positive LLR means bit decision 1.
QpskLlr qpsk_llr(cplx y, cplx effective_gain, double amplitude, double sigma_sq);

/// One SIC stage outcome for a single user.
struct SicStage {
    int user = -1;
    cplx decoded_symbol;                 // hard decision
    QpskLlr llr;
    std::optional<cplx> pdd_residual;    // s - s_hat, only when truth is known
    cplx soft_residual;                  // LLR-derived reliability proxy
};

struct SicResult {
    std::vector<SicStage> stages;        // in decode order
    cplx post_cancel_signal = 0.0;       // running signal before the final stage
    std::vector<int> stage_order;
};

/// Mean |residual|^2 over a sliding window; 0 means fully reliable decoding.
class PddReliability {
  public:
    explicit PddReliability(std::size_t window_len = 16) : window_(window_len) {}
    void add(cplx residual);
    double score() const;
    std::size_t window_len() const { return window_; }

  private:
    std::size_t window_ = 16;
    std::vector<double> samples_;
    std::size_t next_ = 0;
};

/// x = sum_k sqrt(P_k) w_k s_k.
CVec superpose(const std::vector<cplx>& symbols, const PowerAllocation& pa, const Precoders& pre);

/// y = h^H x + n with n ~ CN(0, sigma_n_sq).
cplx receive(const CVec& x, const CVec& h, SeededRng& rng, double sigma_n_sq);

/// Successive interference cancellation at one receiver. `gains[k]` is the
/// (estimated) complex effective channel for user k at this receiver; `order`
/// lists users in decode order, own signal last. When `truth` is supplied
/// (simulation mode) the exact PDD residual s - s_hat is recorded per stage.
SicResult sic_decode(cplx y, const std::vector<cplx>& gains, const PowerAllocation& pa,
                     const std::vector<int>& order, double sigma_sq,
                     const std::vector<cplx>* truth = nullptr);

/// Fraction of differing bits.
double ber_measure(const std::vector<int>& truth, const std::vector<int>& decoded);

}  // namespace deepsic
