#pragma once

#include <functional>
#include <vector>

#include "deepsic/complex_linalg.hpp"
#include "deepsic/rng.hpp"

namespace deepsic {

struct GuardViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-user unit-modulus pilot rows of a unitary DFT matrix; rows are pairwise
/// orthogonal, which keeps the pilot autocorrelation invertible.
struct PilotBlock {
    std::vector<CVec> symbols;  // one length-n_pilot row per user
    int n_pilot = 0;

    static PilotBlock dft(int num_users, int n_pilot);
};

/// Stability certificate for the PDD-corrected gradient refinement.
struct BoundCertificate {
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    double eta_bound = 0.0;
    double pdd_error_bound = 0.0;
    double contraction_factor = 0.0;
    bool certified = false;
};

struct EstimatorState {
    CVec h_hat;
    int iteration = 0;
    double eta = 0.0;
    double beta = 0.0;
    double gamma_e = 0.0;
    bool guard_certified = false;
    std::vector<double> loss_history;
};

/// h_LS = <s, y> / ||s||^2 for a scalar effective channel.
cplx ls_estimate(const CVec& y, const CVec& s);

/// h = (R_hh + n R_ss^{-1})^{-1} R_hh z where z is the matched-filter product
/// s^H y for the observation block. Solved with Cholesky, never inverted.
CVec mmse_estimate(const CVec& z, const CMat& r_hh, const CMat& r_ss, double n);

/// Scalar convenience overload (R_hh = R_ss = 1): h = z / (1 + n).
cplx mmse_estimate_scalar(cplx z, double n);

/// Linear observation model y = J h (+ noise) used by the refinement loop.
struct LinearModel {
    CMat j;
    CVec y;
};

/// One PDD-corrected gradient step on L(h) = 1/2 ||y - J h||^2:
///   h <- h - eta [ J^H (J h - y) + psi ],  psi = J^H e_pdd
/// applied only when every |LLR| clears llr_gate. Requires a passed stability
/// guard unless `override_guard` is set.
EstimatorState pdd_corrected_update(EstimatorState state, const LinearModel& model,
                                    const CVec& pdd_residual, const std::vector<double>& llrs,
                                    double llr_gate, bool override_guard = false);

/// Proposition-style certificate: eta < 2/(lambda_max + beta) and
/// eps_pdd < eta gamma_e / (2 ||W_att||_F); contraction factor
/// max_i |1 - eta lambda_i| + eta beta from the extreme eigenvalues.
BoundCertificate certify_convergence(const CMat& j, double beta, double eta, double eps_pdd,
                                     double w_att_frobenius, double gamma_e);

/// Empirical Lipschitz constant of a correction operator, sup of pairwise
/// difference ratios over sampled inputs, times a 1.5 safety factor.
double estimate_beta_lipschitz(const std::function<CVec(const CVec&)>& psi, SeededRng& rng,
                               std::size_t dim, std::size_t n_pairs = 200);

/// JSON certificate export.
std::string certificate_to_json(const BoundCertificate& cert);

}  // namespace deepsic
