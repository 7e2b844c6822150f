#include "deepsic/complex_linalg.hpp"

#include <cmath>

namespace deepsic {

namespace {
void check_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        throw DimensionMismatch("vector dims differ: " + std::to_string(a) + " vs " +
                                std::to_string(b));
    }
}
}  // namespace

CVec& CVec::operator+=(const CVec& o) {
    check_same_dim(dim(), o.dim());
    for (std::size_t i = 0; i < e_.size(); ++i) e_[i] += o.e_[i];
    return *this;
}

CVec& CVec::operator-=(const CVec& o) {
    check_same_dim(dim(), o.dim());
    for (std::size_t i = 0; i < e_.size(); ++i) e_[i] -= o.e_[i];
    return *this;
}

CVec& CVec::operator*=(cplx s) {
    for (auto& v : e_) v *= s;
    return *this;
}

double CVec::norm_sq() const {
    double s = 0.0;
    for (const auto& v : e_) s += std::norm(v);
    return s;
}

double CVec::norm() const { return std::sqrt(norm_sq()); }

CVec operator+(CVec a, const CVec& b) { return a += b; }
CVec operator-(CVec a, const CVec& b) { return a -= b; }
CVec operator*(cplx s, CVec v) { return v *= s; }

cplx inner(const CVec& a, const CVec& b) {
    check_same_dim(a.dim(), b.dim());
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

CMat CMat::identity(std::size_t n) {
    CMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

CMat CMat::diagonal(const std::vector<cplx>& d) {
    CMat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m.at(i, i) = d[i];
    return m;
}

CMat CMat::adjoint() const {
    CMat m(c_, r_);
    for (std::size_t i = 0; i < r_; ++i)
        for (std::size_t j = 0; j < c_; ++j) m.at(j, i) = std::conj(at(i, j));
    return m;
}

CVec CMat::mul(const CVec& x) const {
    if (c_ != x.dim()) throw DimensionMismatch("matrix-vector dim mismatch");
    CVec y(r_);
    for (std::size_t i = 0; i < r_; ++i) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < c_; ++j) s += at(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

CMat CMat::mul(const CMat& b) const {
    if (c_ != b.r_) throw DimensionMismatch("matrix-matrix dim mismatch");
    CMat y(r_, b.c_);
    for (std::size_t i = 0; i < r_; ++i)
        for (std::size_t k = 0; k < c_; ++k) {
            const cplx aik = at(i, k);
            for (std::size_t j = 0; j < b.c_; ++j) y.at(i, j) += aik * b.at(k, j);
        }
    return y;
}

CMat CMat::scaled(cplx s) const {
    CMat y = *this;
    for (std::size_t i = 0; i < r_; ++i)
        for (std::size_t j = 0; j < c_; ++j) y.at(i, j) *= s;
    return y;
}

CMat CMat::add(const CMat& b) const {
    if (r_ != b.r_ || c_ != b.c_) throw DimensionMismatch("matrix add shape mismatch");
    CMat y = *this;
    for (std::size_t i = 0; i < e_.size(); ++i) y.e_[i] += b.e_[i];
    return y;
}

CMat CMat::sub(const CMat& b) const {
    if (r_ != b.r_ || c_ != b.c_) throw DimensionMismatch("matrix sub shape mismatch");
    CMat y = *this;
    for (std::size_t i = 0; i < e_.size(); ++i) y.e_[i] -= b.e_[i];
    return y;
}

double CMat::frobenius_norm() const {
    double s = 0.0;
    for (const auto& v : e_) s += std::norm(v);
    return std::sqrt(s);
}

CVec hermitian_solve(const CMat& a, const CVec& b) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionMismatch("hermitian_solve: matrix not square");
    if (b.dim() != n) throw DimensionMismatch("hermitian_solve: rhs dim mismatch");

    // Cholesky A = L L^H, L lower triangular.
    CMat l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a.at(j, j).real();
        for (std::size_t k = 0; k < j; ++k) diag -= std::norm(l.at(j, k));
        if (diag <= 1e-12) throw NotPositiveDefinite("Cholesky pivot <= 1e-12");
        const double ljj = std::sqrt(diag);
        l.at(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cplx s = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * std::conj(l.at(j, k));
            l.at(i, j) = s / ljj;
        }
    }
    // Forward solve L z = b.
    CVec z(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l.at(i, k) * z[k];
        z[i] = s / l.at(i, i);
    }
    // Back solve L^H x = z.
    CVec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        cplx s = z[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l.at(k, ii)) * x[k];
        x[ii] = s / l.at(ii, ii);
    }
    return x;
}

namespace {
double power_iterate(const CMat& a, CVec v, double tol, int max_iters) {
    const double nv = v.norm();
    if (nv == 0.0) throw NoConvergence("power iteration: zero start vector");
    v *= 1.0 / nv;
    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        CVec w = a.mul(v);
        const double next = inner(v, w).real();  // Rayleigh quotient, v unit norm
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;  // v in the null space: eigenvalue 0
        w *= 1.0 / nw;
        if (it > 0 && std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
            return next;
        }
        lambda = next;
        v = w;
    }
    throw NoConvergence("power iteration did not converge");
}
}  // namespace

double power_iteration_lambda_max(const CMat& a, double tol, int max_iters) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionMismatch("power iteration: matrix not square");
    CVec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0;
    try {
        return power_iterate(a, v, tol, max_iters);
    } catch (const NoConvergence&) {
        // Retry with a fixed perturbation in case the start was orthogonal to
        // the dominant eigenvector.
        for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.137 * static_cast<double>(i + 1);
        return power_iterate(a, v, tol, max_iters);
    }
}

double smallest_eigenvalue(const CMat& a, double tol, int max_iters) {
    const double lmax = power_iteration_lambda_max(a, tol, max_iters);
    if (lmax == 0.0) return 0.0;
    CMat shifted = CMat::identity(a.rows()).scaled(lmax).sub(a);
    const double shifted_max = power_iteration_lambda_max(shifted, tol, max_iters);
    double lmin = lmax - shifted_max;
    return lmin < 0.0 ? 0.0 : lmin;
}

}  // namespace deepsic
