#include "deepsic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deepsic {

namespace {
void check_lengths(const std::vector<double>& p, const std::vector<double>& a,
                   std::size_t min_len) {
    if (p.size() != a.size() || p.size() < min_len)
        throw std::invalid_argument("metric: sequences must be equal length");
}

double population_std(const std::vector<double>& a) {
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    double var = 0.0;
    for (double v : a) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(a.size()));
}
}  // namespace

double mse(const std::vector<double>& predicted, const std::vector<double>& actual) {
    check_lengths(predicted, actual, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double e = predicted[i] - actual[i];
        s += e * e;
    }
    return s / static_cast<double>(predicted.size());
}

double nrmse(const std::vector<double>& predicted, const std::vector<double>& actual) {
    check_lengths(predicted, actual, 2);
    const double sigma = population_std(actual);
    if (sigma == 0.0) throw ConstantActual("nrmse: actual sequence is constant");
    return std::sqrt(mse(predicted, actual)) / sigma;
}

double mase(const std::vector<double>& predicted, const std::vector<double>& actual) {
    check_lengths(predicted, actual, 2);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        num += std::abs(predicted[i] - actual[i]);
    for (std::size_t i = 1; i < actual.size(); ++i) den += std::abs(actual[i] - actual[i - 1]);
    if (den == 0.0) throw ZeroNaiveDenominator("mase: naive denominator is zero");
    return static_cast<double>(predicted.size()) * num / den;
}

double mase_standard(const std::vector<double>& predicted, const std::vector<double>& actual) {
    check_lengths(predicted, actual, 2);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        num += std::abs(predicted[i] - actual[i]);
    num /= static_cast<double>(predicted.size());
    for (std::size_t i = 1; i < actual.size(); ++i) den += std::abs(actual[i] - actual[i - 1]);
    den /= static_cast<double>(actual.size() - 1);
    if (den == 0.0) throw ZeroNaiveDenominator("mase_standard: naive denominator is zero");
    return num / den;
}

double r_squared(const std::vector<double>& predicted, const std::vector<double>& actual) {
    check_lengths(predicted, actual, 2);
    const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) /
                        static_cast<double>(actual.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ss_res += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if (ss_tot == 0.0) throw ConstantActual("r_squared: actual sequence is constant");
    return 1.0 - ss_res / ss_tot;
}

MetricReport metric_report(const std::vector<double>& predicted,
                           const std::vector<double>& actual) {
    MetricReport r;
    r.nrmse = nrmse(predicted, actual);
    r.mase = mase(predicted, actual);
    r.mse = mse(predicted, actual);
    r.r2 = r_squared(predicted, actual);
    r.n_samples = predicted.size();
    return r;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    const double denom = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ymean = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double fit = f.intercept + f.slope * x[i];
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - ymean) * (y[i] - ymean);
    }
    f.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return f;
}

BoundFit fit_theorem1_bound(const std::vector<std::pair<double, double>>& mse_vs_t, int k_users,
                            int n_pilot, double ber, double llr_norm) {
    if (mse_vs_t.size() < 10)
        throw std::invalid_argument("fit_theorem1_bound: need >= 10 points");
    BoundFit fit;
    auto pts = mse_vs_t;
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].second > pts[i - 1].second + 1e-12) fit.monotone_warning = true;

    // Plateau floor from the final segment.
    const std::size_t tail = std::max<std::size_t>(3, pts.size() / 10);
    double floor = 0.0;
    for (std::size_t i = pts.size() - tail; i < pts.size(); ++i) floor += pts[i].second;
    floor /= static_cast<double>(tail);

    // Points whose excess over the plateau is comparable to the plateau
    // estimation error would distort the log fit; keep only clear excess.
    const double excess_cut = std::max(1e-12, 0.05 * floor);
    std::vector<double> xs, ys;
    for (const auto& [t, m] : pts) {
        const double excess = m - floor;
        if (excess > excess_cut) {
            xs.push_back(t);
            ys.push_back(std::log(excess));
        }
    }
    if (xs.size() >= 3) {
        const LineFit lf = fit_line(xs, ys);
        fit.gamma = -lf.slope;
        fit.c1 = std::exp(lf.intercept);
        fit.fit_r2 = lf.r2;
        fit.exponential_certified = fit.fit_r2 >= 0.9 && fit.gamma > 0.0;
    }
    if (!fit.exponential_certified) {
        fit.gamma = 0.0;
        fit.c1 = 0.0;
    }

    // Smallest constant plateau making the full curve dominate >= 95% of points.
    std::vector<double> needed;
    for (const auto& [t, m] : pts) {
        const double expo = fit.exponential_certified ? fit.c1 * std::exp(-fit.gamma * t) : 0.0;
        needed.push_back(m - expo);
    }
    std::sort(needed.begin(), needed.end());
    const std::size_t idx =
        std::min(needed.size() - 1,
                 static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(needed.size()))));
    double plateau = std::max(0.0, needed[idx]);

    // Split the plateau between the pilot and PDD terms.
    const double pilot_unit = std::pow(static_cast<double>(k_users), 3.0) / n_pilot;
    const double pdd_unit = llr_norm > 0.0 ? ber / llr_norm : 0.0;
    fit.c2_term = plateau * 0.5;
    fit.c3_term = plateau * 0.5;
    fit.c2 = pilot_unit > 0.0 ? fit.c2_term / pilot_unit : 0.0;
    fit.c3 = pdd_unit > 0.0 ? fit.c3_term / pdd_unit : 0.0;
    if (pdd_unit == 0.0) {
        fit.c2_term = plateau;
        fit.c3_term = 0.0;
        fit.c2 = pilot_unit > 0.0 ? plateau / pilot_unit : 0.0;
        fit.c3 = 0.0;
    }
    return fit;
}

int optimal_pilot_length(double c2, int k_users, double overhead_cost,
                         const std::vector<int>& grid) {
    double best = HUGE_VAL;
    int best_n = grid.empty() ? 0 : grid.front();
    const double k3 = std::pow(static_cast<double>(k_users), 3.0);
    for (int n : grid) {
        const double cost = c2 * k3 / n + overhead_cost * n;
        if (cost < best) {
            best = cost;
            best_n = n;
        }
    }
    return best_n;
}

double theorem2_tracking_bound(double l_coh, double v, double lambda, double dt, double eta,
                               double grad_pdd_norm) {
    return l_coh * ((v / lambda) * dt + eta * grad_pdd_norm);
}

Lemma1Result lemma1_ber_ratio(double ber_baseline, double ber_deepsic, double gain_pdd_sq,
                              double gain_base_sq, double n0) {
    if (ber_baseline <= 0.0 || ber_baseline > 1.0 || ber_deepsic <= 0.0 || ber_deepsic > 1.0)
        throw std::invalid_argument("lemma1_ber_ratio: BERs must be in (0, 1]");
    if (n0 <= 0.0) throw std::invalid_argument("lemma1_ber_ratio: N0 must be > 0");
    Lemma1Result r;
    r.observed_ratio = ber_baseline / ber_deepsic;
    r.predicted_shape = std::exp((gain_pdd_sq - gain_base_sq) / n0);
    return r;
}

Theorem3Fit theorem3_nrmse_bound(const std::vector<NrmseGridPoint>& grid) {
    if (grid.size() < 9) throw std::invalid_argument("theorem3_nrmse_bound: grid must be >= 3x3");
    Theorem3Fit fit;
    for (const auto& p : grid) {
        const double denom = std::sqrt(1.0 / p.t + 1.0 / p.s);
        fit.c = std::max(fit.c, p.nrmse / denom);
    }
    // Shape check: nrmse should not increase along T (at fixed S) or S (fixed T).
    for (const auto& a : grid)
        for (const auto& b : grid) {
            const bool along_t = a.s == b.s && b.t > a.t;
            const bool along_s = a.t == b.t && b.s > a.s;
            if ((along_t || along_s) && b.nrmse > a.nrmse + 1e-12)
                fit.shape_violations.emplace_back(b.t, b.s);
        }
    return fit;
}

MobilityBoundCurve mobility_bound_curve(double delta, double length, double stiffness,
                                        const std::vector<double>& omega_grid) {
    if (delta <= 0.0 || length <= 0.0 || stiffness <= 0.0)
        throw std::invalid_argument("mobility_bound_curve: delta, L, k must be > 0");
    MobilityBoundCurve c;
    c.delta = delta;
    c.length = length;
    c.stiffness = stiffness;
    for (double w : omega_grid) {
        const double bound =
            delta * length * stiffness / (delta * stiffness + length * w * w);
        c.samples.emplace_back(w, bound);
    }
    return c;
}

double rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    check_lengths(a, b, 2);
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    const LineFit lf = fit_line(ra, rb);
    const double sign = lf.slope >= 0.0 ? 1.0 : -1.0;
    return sign * std::sqrt(std::max(0.0, lf.r2));
}

}  // namespace deepsic
