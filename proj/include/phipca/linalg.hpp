#pragma once

#include <Eigen/Dense>
#include <functional>

#include "phipca/common.hpp"
#include "phipca/phi_spec.hpp"

namespace phipca {

// Dense symmetric matrix. Construction symmetrizes via (A + A^T)/2 after
// checking that the input is finite and within the symmetry tolerance, so
// floating-point asymmetry from aggregation arithmetic is absorbed.
class SymMatrix {
public:
    explicit SymMatrix(Eigen::MatrixXd a);

    static SymMatrix Identity(int p) { return SymMatrix(Eigen::MatrixXd::Identity(p, p)); }
    static SymMatrix Zero(int p) { return SymMatrix(Eigen::MatrixXd::Zero(p, p)); }

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Eigen::MatrixXd& mat() const { return mat_; }

private:
    Eigen::MatrixXd mat_;
};

// Ordered eigensystem: values strictly descending, orthonormal columns,
// each column's largest-magnitude entry positive.
struct SpectralDecomp {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;

    int dim() const { return static_cast<int>(values.size()); }
    Eigen::MatrixXd leading(int r) const { return vectors.leftCols(r); }
};

SpectralDecomp eigh(const SymMatrix& a);

// Admissible eigenvalue domain of a spectral transform. NonNegative clamps
// tiny negative rounding eigenvalues (|l| <= 1e-12 * max(1, l_max)) to zero;
// Any passes eigenvalues through untouched (exp of a log-scale average).
enum class EigDomain { StrictlyPositive, NonNegative, Any };

// sum_j f(lambda_j) gamma_j gamma_j^T with domain checking per `domain`.
SymMatrix apply_spectral(const SymMatrix& a, const std::function<double(double)>& f,
                         EigDomain domain, const char* op_name);

// Eigenvalue domain of phi^{-1} (the range of phi): all reals for the
// log-limit, [0, inf) for positive powers, (0, inf) otherwise.
EigDomain phi_inverse_domain(const PhiSpec& phi);

SymMatrix matrix_phi(const SymMatrix& a, const PhiSpec& phi);
SymMatrix matrix_log(const SymMatrix& a);
SymMatrix matrix_exp(const SymMatrix& a);
SymMatrix matrix_sqrt(const SymMatrix& a);

// M_j = (lambda_j I - Sigma)^+ = sum_{l != j} (lambda_j - lambda_l)^{-1}
// gamma_l gamma_l^T. Requires distinct eigenvalues; j is zero-based.
SymMatrix pinv_shift(const SpectralDecomp& d, int j);

// Descending singular values of Bq^T Gr; both inputs must have orthonormal
// columns (to 1e-8) and Bq at least as many columns as Gr.
Eigen::VectorXd principal_singulars(const Eigen::MatrixXd& bq, const Eigen::MatrixXd& gr);

// K_pp with K vec(A) = vec(A^T); p <= 50.
Eigen::MatrixXd commutation_matrix(int p);

// cov{vec(XX^T)} = (I + K_pp)(Sigma (x) Sigma) for X ~ N(0, Sigma); p <= 50.
Eigen::MatrixXd gaussian_fourth_moment(const SymMatrix& sigma);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace phipca
