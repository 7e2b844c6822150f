#include "deepsic/estimation.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace deepsic {

PilotBlock PilotBlock::dft(int num_users, int n_pilot) {
    if (n_pilot < num_users)
        throw DimensionMismatch("PilotBlock: n_pilot must be >= num_users");
    PilotBlock pb;
    pb.n_pilot = n_pilot;
    for (int u = 0; u < num_users; ++u) {
        CVec row(static_cast<std::size_t>(n_pilot));
        for (int t = 0; t < n_pilot; ++t) {
            const double phase = -2.0 * std::numbers::pi * u * t / n_pilot;
            row[static_cast<std::size_t>(t)] = {std::cos(phase), std::sin(phase)};
        }
        pb.symbols.push_back(std::move(row));
    }
    return pb;
}

cplx ls_estimate(const CVec& y, const CVec& s) {
    const double denom = s.norm_sq();
    if (denom == 0.0) throw DimensionMismatch("ls_estimate: zero pilot");
    return inner(s, y) / denom;
}

CVec mmse_estimate(const CVec& z, const CMat& r_hh, const CMat& r_ss, double n) {
    // A = R_hh + n R_ss^{-1}; solve A h = R_hh z.
    const std::size_t m = r_hh.rows();
    CMat r_ss_inv(m, m);
    for (std::size_t col = 0; col < m; ++col) {
        CVec e(m);
        e[col] = 1.0;
        CVec x = hermitian_solve(r_ss, e);
        for (std::size_t row = 0; row < m; ++row) r_ss_inv.at(row, col) = x[row];
    }
    const CMat a = r_hh.add(r_ss_inv.scaled(n));
    return hermitian_solve(a, r_hh.mul(z));
}

cplx mmse_estimate_scalar(cplx z, double n) {
    CVec zz(1);
    zz[0] = z;
    return mmse_estimate(zz, CMat::identity(1), CMat::identity(1), n)[0];
}

EstimatorState pdd_corrected_update(EstimatorState state, const LinearModel& model,
                                    const CVec& pdd_residual, const std::vector<double>& llrs,
                                    double llr_gate, bool override_guard) {
    if (!state.guard_certified && !override_guard)
        throw GuardViolated("pdd_corrected_update: eta not certified and no override");

    const CMat jh = model.j.adjoint();
    CVec grad = jh.mul(model.j.mul(state.h_hat) - model.y);

    bool gate_open = !llrs.empty() && pdd_residual.dim() > 0;
    for (double l : llrs)
        if (std::abs(l) < llr_gate) gate_open = false;
    if (gate_open) grad += jh.mul(pdd_residual);

    grad *= state.eta;
    state.h_hat -= grad;
    state.iteration += 1;
    const CVec resid = model.y - model.j.mul(state.h_hat);
    state.loss_history.push_back(0.5 * resid.norm_sq());
    return state;
}

BoundCertificate certify_convergence(const CMat& j, double beta, double eta, double eps_pdd,
                                     double w_att_frobenius, double gamma_e) {
    BoundCertificate cert;
    const CMat jtj = j.adjoint().mul(j);
    cert.lambda_max = power_iteration_lambda_max(jtj);
    cert.lambda_min = smallest_eigenvalue(jtj);
    cert.eta_bound = 2.0 / (cert.lambda_max + beta);
    cert.pdd_error_bound =
        (w_att_frobenius > 0.0) ? eta * gamma_e / (2.0 * w_att_frobenius) : HUGE_VAL;
    cert.contraction_factor =
        std::max(std::abs(1.0 - eta * cert.lambda_max), std::abs(1.0 - eta * cert.lambda_min)) +
        eta * beta;
    cert.certified = eta > 0.0 && eta < cert.eta_bound && eps_pdd < cert.pdd_error_bound &&
                     cert.contraction_factor < 1.0;
    return cert;
}

double estimate_beta_lipschitz(const std::function<CVec(const CVec&)>& psi, SeededRng& rng,
                               std::size_t dim, std::size_t n_pairs) {
    if (n_pairs < 100) n_pairs = 100;
    double sup = 0.0;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const CVec a = draw_complex_gaussian(rng, dim, 1.0);
        const CVec b = draw_complex_gaussian(rng, dim, 1.0);
        const double db = (a - b).norm();
        if (db < 1e-12) continue;
        const double ratio = (psi(a) - psi(b)).norm() / db;
        if (ratio > sup) sup = ratio;
    }
    return 1.5 * sup;
}

std::string certificate_to_json(const BoundCertificate& cert) {
    std::ostringstream os;
    os.precision(12);
    os << "{\"lambda_max\": " << cert.lambda_max << ", \"eta_bound\": " << cert.eta_bound
       << ", \"pdd_error_bound\": " << cert.pdd_error_bound
       << ", \"contraction_factor\": " << cert.contraction_factor
       << ", \"certified\": " << (cert.certified ? "true" : "false") << "}";
    return os.str();
}

}  // namespace deepsic
