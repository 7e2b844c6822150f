#pragma once

#include <string>
#include <vector>

#include <stdexcept>

namespace deepsic {

struct ConstantActual : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ZeroNaiveDenominator : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct MetricReport {
    double nrmse = 0.0;
    double mase = 0.0;
    double mse = 0.0;
    double r2 = 0.0;
    std::size_t n_samples = 0;
};

double mse(const std::vector<double>& predicted, const std::vector<double>& actual);
/// RMSE normalized by the population standard deviation of `actual`.
double nrmse(const std::vector<double>& predicted, const std::vector<double>& actual);
/// S * sum|e| / sum|naive diff| — the leading S factor follows the source
/// expression; `mase_standard` divides by means instead.
double mase(const std::vector<double>& predicted, const std::vector<double>& actual);
double mase_standard(const std::vector<double>& predicted, const std::vector<double>& actual);
double r_squared(const std::vector<double>& predicted, const std::vector<double>& actual);

MetricReport metric_report(const std::vector<double>& predicted,
                           const std::vector<double>& actual);

/// Fitted envelope for mse(T) <= c1 exp(-gamma T) + c2 K^3/N_pilot + c3 BER/||LLR||.
struct BoundFit {
    double c1 = 0.0;
    double gamma = 0.0;
    double c2_term = 0.0;  // c2 * K^3 / N_pilot
    double c3_term = 0.0;  // c3 * BER / ||LLR||
    double c2 = 0.0;
    double c3 = 0.0;
    double fit_r2 = 0.0;
    bool exponential_certified = false;
    bool monotone_warning = false;
};

BoundFit fit_theorem1_bound(const std::vector<std::pair<double, double>>& mse_vs_t, int k_users,
                            int n_pilot, double ber, double llr_norm);

/// Grid-searched pilot length minimizing c2 K^3/N + overhead_cost N.
int optimal_pilot_length(double c2, int k_users, double overhead_cost,
                         const std::vector<int>& grid);

/// L (v/lambda dt + eta ||grad||), evaluated verbatim.
double theorem2_tracking_bound(double l_coh, double v, double lambda, double dt, double eta,
                               double grad_pdd_norm);

struct Lemma1Result {
    double observed_ratio = 0.0;
    double predicted_shape = 0.0;
};

/// Ratio of baseline to refined BER vs the exponential gain shape
/// exp((g_pdd^2 - g_base^2)/N0); proportionality only, never equality.
Lemma1Result lemma1_ber_ratio(double ber_baseline, double ber_deepsic, double gain_pdd_sq,
                              double gain_base_sq, double n0);

struct Theorem3Fit {
    double c = 0.0;
    // (T, S) points where nrmse increased along T or S.
    std::vector<std::pair<int, int>> shape_violations;
};

struct NrmseGridPoint {
    int t = 0;
    int s = 0;
    double nrmse = 0.0;
};

/// Smallest C with nrmse <= C sqrt(1/T + 1/S) over the whole grid.
Theorem3Fit theorem3_nrmse_bound(const std::vector<NrmseGridPoint>& grid);

struct MobilityBoundCurve {
    double delta = 0.0, length = 0.0, stiffness = 0.0;
    std::vector<std::pair<double, double>> samples;  // (omega, bound)
};

/// M(omega) = delta L k / (delta k + L omega^2), evaluated over the grid.
MobilityBoundCurve mobility_bound_curve(double delta, double length, double stiffness,
                                        const std::vector<double>& omega_grid);

/// Spearman rank correlation.
double rank_correlation(const std::vector<double>& a, const std::vector<double>& b);

/// Simple least-squares line fit y = a + b x; returns (a, b, r2).
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace deepsic
