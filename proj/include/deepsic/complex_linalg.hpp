#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepsic {

using cplx = std::complex<double>;

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NotPositiveDefinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense complex vector. Entries are dimensionless amplitudes.
class CVec {
  public:
    CVec() = default;
    explicit CVec(std::size_t dim) : e_(dim) {}
    CVec(std::initializer_list<cplx> init) : e_(init) {}

    std::size_t dim() const { return e_.size(); }
    cplx& operator[](std::size_t i) { return e_[i]; }
    const cplx& operator[](std::size_t i) const { return e_[i]; }
    const std::vector<cplx>& entries() const { return e_; }

    CVec& operator+=(const CVec& o);
    CVec& operator-=(const CVec& o);
    CVec& operator*=(cplx s);

    double norm() const;
    double norm_sq() const;

  private:
    std::vector<cplx> e_;
};

CVec operator+(CVec a, const CVec& b);
CVec operator-(CVec a, const CVec& b);
CVec operator*(cplx s, CVec v);

/// Hermitian inner product <a,b> = sum conj(a_i) b_i.
cplx inner(const CVec& a, const CVec& b);

/// Dense row-major complex matrix.
class CMat {
  public:
    CMat() = default;
    CMat(std::size_t rows, std::size_t cols) : r_(rows), c_(cols), e_(rows * cols) {}

    static CMat identity(std::size_t n);
    static CMat diagonal(const std::vector<cplx>& d);

    std::size_t rows() const { return r_; }
    std::size_t cols() const { return c_; }
    cplx& at(std::size_t i, std::size_t j) { return e_[i * c_ + j]; }
    const cplx& at(std::size_t i, std::size_t j) const { return e_[i * c_ + j]; }

    CMat adjoint() const;              // conjugate transpose
    CVec mul(const CVec& x) const;     // A x
    CMat mul(const CMat& b) const;     // A B
    CMat scaled(cplx s) const;
    CMat add(const CMat& b) const;
    CMat sub(const CMat& b) const;
    double frobenius_norm() const;

  private:
    std::size_t r_ = 0, c_ = 0;
    std::vector<cplx> e_;
};

/// Solve A x = b for Hermitian positive definite A via Cholesky.
/// Throws NotPositiveDefinite when a pivot falls at or below 1e-12.
CVec hermitian_solve(const CMat& a, const CVec& b);

/// Dominant eigenvalue of a Hermitian PSD matrix by power iteration with a
/// deterministic all-ones start vector. A fixed perturbation retry covers the
/// orthogonal-start corner.
double power_iteration_lambda_max(const CMat& a, double tol = 1e-8, int max_iters = 10000);

/// Smallest eigenvalue of a Hermitian PSD matrix, via power iteration on the
/// spectrally shifted matrix (lambda_max I - A).
double smallest_eigenvalue(const CMat& a, double tol = 1e-8, int max_iters = 10000);

}  // namespace deepsic
