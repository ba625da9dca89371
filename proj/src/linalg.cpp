#include "phipca/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <sstream>

namespace phipca {

SymMatrix::SymMatrix(Eigen::MatrixXd a) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw DomainError("SymMatrix: matrix must be square and nonempty");
    if (!a.allFinite())
        throw DomainError("SymMatrix: entries must be finite");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        std::ostringstream os;
        os << "SymMatrix: asymmetry " << asym << " exceeds tolerance " << 1e-10 * scale;
        throw DomainError(os.str());
    }
    mat_ = 0.5 * (a + a.transpose());
}

SpectralDecomp eigh(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat());
    if (solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "eigh: eigensolver did not converge (dim " << a.dim()
           << ", max |entry| " << a.mat().cwiseAbs().maxCoeff()
           << ", trace " << a.mat().trace() << ")";
        throw DomainError(os.str());
    }
    const int p = a.dim();
    SpectralDecomp d;
    d.values.resize(p);
    d.vectors.resize(p, p);
    // Eigen returns ascending order; flip to descending.
    for (int j = 0; j < p; ++j) {
        d.values[j] = solver.eigenvalues()[p - 1 - j];
        d.vectors.col(j) = solver.eigenvectors().col(p - 1 - j);
    }
    // Sign convention: largest-magnitude entry of each column positive.
    for (int j = 0; j < p; ++j) {
        int imax = 0;
        d.vectors.col(j).cwiseAbs().maxCoeff(&imax);
        if (d.vectors(imax, j) < 0.0) d.vectors.col(j) = -d.vectors.col(j);
    }
    return d;
}

SymMatrix apply_spectral(const SymMatrix& a, const std::function<double(double)>& f,
                         EigDomain domain, const char* op_name) {
    SpectralDecomp d = eigh(a);
    const int p = a.dim();
    const double lmax = d.values[0];
    Eigen::VectorXd fv(p);
    for (int j = 0; j < p; ++j) {
        double l = d.values[j];
        if (domain == EigDomain::StrictlyPositive) {
            if (l <= 0.0) {
                std::ostringstream os;
                os << op_name << ": eigenvalue " << j << " = " << l
                   << " is not strictly positive";
                throw DomainError(os.str());
            }
        } else if (domain == EigDomain::NonNegative && l < 0.0) {
            if (l >= -1e-12 * std::max(1.0, lmax)) {
                l = 0.0;
            } else {
                std::ostringstream os;
                os << op_name << ": eigenvalue " << j << " = " << l << " is negative";
                throw DomainError(os.str());
            }
        }
        fv[j] = f(l);
        if (!std::isfinite(fv[j])) {
            std::ostringstream os;
            os << op_name << ": transform of eigenvalue " << j << " = " << l << " is not finite";
            throw DomainError(os.str());
        }
    }
    return SymMatrix(d.vectors * fv.asDiagonal() * d.vectors.transpose());
}

SymMatrix matrix_phi(const SymMatrix& a, const PhiSpec& phi) {
    return apply_spectral(a, [&phi](double u) { return phi.value(u); },
                          phi.requires_positive() ? EigDomain::StrictlyPositive
                                                  : EigDomain::NonNegative,
                          "matrix_phi");
}

SymMatrix matrix_log(const SymMatrix& a) {
    return apply_spectral(a, [](double u) { return std::log(u); }, EigDomain::StrictlyPositive,
                          "matrix_log");
}

SymMatrix matrix_exp(const SymMatrix& a) {
    return apply_spectral(a, [](double u) { return std::exp(u); }, EigDomain::Any, "matrix_exp");
}

SymMatrix matrix_sqrt(const SymMatrix& a) {
    return apply_spectral(a, [](double u) { return std::sqrt(u); }, EigDomain::NonNegative,
                          "matrix_sqrt");
}

EigDomain phi_inverse_domain(const PhiSpec& phi) {
    if (phi.is_log_limit()) return EigDomain::Any;
    if (phi.is_power() && phi.beta() > 0.0) return EigDomain::NonNegative;
    return EigDomain::StrictlyPositive;
}

SymMatrix pinv_shift(const SpectralDecomp& d, int j) {
    const int p = d.dim();
    if (j < 0 || j >= p) throw ConfigError("pinv_shift: index out of range");
    const double scale = std::abs(d.values[0]);
    for (int l = 0; l < p; ++l) {
        if (l == j) continue;
        if (std::abs(d.values[j] - d.values[l]) < 1e-12 * scale) {
            std::ostringstream os;
            os << "pinv_shift: eigenvalues " << j << " and " << l
               << " are nearly degenerate (gap " << std::abs(d.values[j] - d.values[l]) << ")";
            throw DomainError(os.str());
        }
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
    for (int l = 0; l < p; ++l) {
        if (l == j) continue;
        m += d.vectors.col(l) * d.vectors.col(l).transpose() / (d.values[j] - d.values[l]);
    }
    return SymMatrix(m);
}

Eigen::VectorXd principal_singulars(const Eigen::MatrixXd& bq, const Eigen::MatrixXd& gr) {
    if (bq.rows() != gr.rows())
        throw ConfigError("principal_singulars: bases live in different dimensions");
    if (bq.cols() < gr.cols())
        throw ConfigError("principal_singulars: first basis must have at least as many columns");
    for (const auto* b : {&bq, &gr}) {
        Eigen::MatrixXd g = b->transpose() * (*b) -
                            Eigen::MatrixXd::Identity(b->cols(), b->cols());
        if (g.cwiseAbs().maxCoeff() > 1e-8)
            throw DomainError("principal_singulars: input columns are not orthonormal");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(bq.transpose() * gr);
    Eigen::VectorXd s = svd.singularValues();
    if (s.size() > 0 && s[0] > 1.0 + 1e-10)
        throw DomainError("principal_singulars: singular value exceeds 1");
    return s;
}

Eigen::MatrixXd commutation_matrix(int p) {
    if (p < 1 || p > 50) throw ConfigError("commutation_matrix: p must be in [1, 50]");
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(p * p, p * p);
    // vec is column-major: vec(A)[i + p*j] = A(i, j).
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) k(j + p * i, i + p * j) = 1.0;
    return k;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::MatrixXd gaussian_fourth_moment(const SymMatrix& sigma) {
    const int p = sigma.dim();
    if (p > 50) throw ConfigError("gaussian_fourth_moment: p must be <= 50");
    Eigen::MatrixXd ss = kron(sigma.mat(), sigma.mat());
    Eigen::MatrixXd k = commutation_matrix(p);
    return ss + k * ss;
}

}  // namespace phipca
