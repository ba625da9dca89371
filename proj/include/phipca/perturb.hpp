#pragma once

#include <string>
#include <vector>

#include "phipca/aggregate.hpp"
#include "phipca/linalg.hpp"

namespace phipca {

// Population with a distinguished signal rank r (zero-based code indexing:
// signal components are 0..r-1). Eigenvalues must be distinct.
struct PopulationModel {
    SymMatrix sigma;
    SpectralDecomp decomp;
    int r = 1;

    PopulationModel(SymMatrix s, int signal_rank);

    int p() const { return sigma.dim(); }
    double lambda(int j) const { return decomp.values[j]; }
    Eigen::VectorXd gamma(int j) const { return decomp.vectors.col(j); }
    double mahalanobis(const Eigen::VectorXd& x) const;
};

// Point-mass contamination of strength eps hitting one block of an m-way
// partition (effective fraction delta = m * eps within that block).
struct ContaminationSpec {
    Eigen::VectorXd x;
    double eps = 0.0;
    int m = 1;

    ContaminationSpec(Eigen::VectorXd point, double epsilon, int partitions);
    double delta() const { return m * eps; }
};

struct PerturbationReport {
    double delta = 0.0;                      // Delta(x)
    double delta_beta = 0.0;                 // Delta_beta(x)
    std::vector<double> xi_weights;          // length p
    double tau_analytic = 0.0;               // eps^2 coefficient
    double tau_numeric = 0.0;                // oracle tau / eps^2
    std::vector<double> eigvec_parallel_diff;  // length r
    double eigvec_cross_diff = 0.0;
    std::vector<double> eigval_rel_diff;     // length p
    double maha = 0.0;
};

// lambda_j / (lambda_j + lambda_k); both arguments must be positive.
double rho(double lam_j, double lam_k);

// d_j = (gamma_j^T x)^2 / lambda_j.
double d_coeff(const PopulationModel& model, const Eigen::VectorXd& x, int j);

// W_j = (phi''/2phi') P_j + M_j - (1/phi'){phi_j I - phi(Sigma)} M_j^2.
SymMatrix W_matrix(const PopulationModel& model, const PhiSpec& phi, int j);

// eps^2 coefficient of (1/lambda_j){lambda_j(F^(m)) - lambda_j(F^(1))}:
// (m-1){d_j(x^T W_j x - 1 - phi'' lambda_j / phi') + phi'' lambda_j / (2 phi')}.
double thm2_eigenvalue_shift(const PopulationModel& model, const PhiSpec& phi,
                             const ContaminationSpec& cont, int j);

// eps^2 coefficient of the summed cross cosine-similarity difference over
// j != k <= r; independent of phi.
double thm2_eigvec_cross_shift(const PopulationModel& model, const ContaminationSpec& cont);

// Analytic tau expansion: fills delta, delta_beta, xi_weights, tau_analytic
// and maha. beta_mode must be a power or log-limit spec.
PerturbationReport tau_expansion(const PopulationModel& model, const ContaminationSpec& cont,
                                 const PhiSpec& beta_mode);

// Closed form of Delta_beta(x) for x orthogonal to the signal subspace;
// beta = 0 is understood in the limiting sense and returns exactly 0 there,
// as do beta = -1 and beta = 1.
double corollary1_delta_beta(const PopulationModel& model, const Eigen::VectorXd& x, double beta);

double Delta(const PopulationModel& model, const Eigen::VectorXd& x);
double Delta0(const PopulationModel& model, const Eigen::VectorXd& x);
double DeltaPPCA(const PopulationModel& model, const Eigen::VectorXd& x);

// eps^2 coefficients of the total ordering-robustness improvement.
double tau_hm(const PopulationModel& model, const ContaminationSpec& cont);
double tau_gm(const PopulationModel& model, const ContaminationSpec& cont);
double tau_am(const PopulationModel& model, const ContaminationSpec& cont);
// PPCA is intrinsically two-block; no (m-1) factor.
double tau_ppca(const PopulationModel& model, const Eigen::VectorXd& x);

// Contaminated covariance functional convention. SecondMoment uses
// (1-d)Sigma + d x x^T; Centered subtracts the contaminated mean, giving
// (1-d)Sigma + d(1-d) x x^T. Centered is the convention whose eps^2 terms
// match the analytic expansions (pinned by the convergence suite).
enum class MomentMode { SecondMoment, Centered };

constexpr MomentMode kVerifiedMomentMode = MomentMode::Centered;

struct OraclePair {
    SpectralDecomp m_arm;    // phi-aggregate of (contaminated block, m-1 clean)
    SpectralDecomp one_arm;  // standard PCA functional at F_{x,eps}
};

// Exact population-level eigensystems of both arms; no series truncation.
OraclePair oracle_perturbed_spectrum(const PopulationModel& model, const PhiSpec& phi,
                                     const ContaminationSpec& cont, MomentMode mode);

// PPCA population functional: singular values (and left singular vectors) of
// C(2 eps)^{1/2} Sigma^{1/2} against the one-block arm at F_{x,eps}.
struct PpcaOraclePair {
    Eigen::VectorXd ppca_values;  // descending
    SpectralDecomp one_arm;
};
PpcaOraclePair oracle_ppca_spectrum(const PopulationModel& model, const Eigen::VectorXd& x,
                                    double eps, MomentMode mode);

// Oracle tau(x)/eps^2 for a phi-PCA member, and for PPCA.
double tau_numeric(const PopulationModel& model, const PhiSpec& phi,
                   const ContaminationSpec& cont, MomentMode mode);
double tau_ppca_numeric(const PopulationModel& model, const Eigen::VectorXd& x, double eps,
                        MomentMode mode);

struct ExpansionRow {
    std::string quantity;
    double beta = 0.0;  // 0 encodes the log-limit member
    int m = 1;
    double eps = 0.0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
    std::string moment_mode;
};

// Numeric-vs-analytic convergence report over an eps sequence; validates
// the eigenvalue shifts, the cross cosine shift, the o(eps^2) parallel
// component, and tau.
std::vector<ExpansionRow> verify_expansion(const PopulationModel& model, const PhiSpec& phi,
                                           const Eigen::VectorXd& x, int m,
                                           const std::vector<double>& eps_list,
                                           MomentMode mode = kVerifiedMomentMode);

// V = H^T cov{vec(XX^T)} H with Gaussian fourth moments; p <= 20. Ordering:
// p eigenvalue coordinates, then p blocks of p eigenvector coordinates.
Eigen::MatrixXd gaussian_asym_cov(const PopulationModel& model);

}  // namespace phipca
