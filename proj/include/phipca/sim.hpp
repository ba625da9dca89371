#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "phipca/perturb.hpp"

namespace phipca {

enum class MethodKind { HM, GM, AM, GM2, PPCA, PCA, OptPCA };

std::string method_name(MethodKind k);
MethodKind method_from_name(const std::string& name);

struct SimConfig {
    int n = 400;
    int p = 200;
    int r = 10;
    double pi = 0.05;          // contamination proportion
    double sigma_out = 1.0;    // outlier scale
    int t_dof = 1;             // degrees of freedom of the outlier t distribution
    int replicates = 20;
    int q_max = 50;
    int m = 0;                 // 0 means floor(sqrt(n))
    std::vector<MethodKind> methods{MethodKind::HM,  MethodKind::GM,   MethodKind::AM,
                                    MethodKind::GM2, MethodKind::PPCA, MethodKind::PCA,
                                    MethodKind::OptPCA};
    std::uint64_t seed = 1;

    void validate() const;
    int effective_m() const;
};

struct SimilarityCurve {
    MethodKind method;
    std::vector<int> q;          // r .. q_max
    std::vector<double> mean_sq;
    std::vector<double> stderr_sq;
};

struct SimResult {
    std::vector<SimilarityCurve> curves;
    int failed_fits = 0;
    SimConfig config;
};

// Population per the simulation recipe: signal eigenvalues
// 1 + sqrt(p/n) + p^{1/(1+j)}, noise eigenvalues U(0.5, 1.5) sorted
// descending, Haar eigenvectors from QR with the R-diagonal sign fix.
PopulationModel make_population(int p, int n, int r, std::uint64_t seed);

// Rows from (1-pi) N(0, Sigma) + pi t_dof(0, sigma_out^2 I).
Eigen::MatrixXd sample_mixture(const PopulationModel& model, const SimConfig& config,
                               std::uint64_t seed);

// s_q = mean of the r principal singular values of B_q^T Gamma_r for
// q = r .. q_max.
SimilarityCurve s_q_curve(MethodKind method, const Eigen::MatrixXd& fitted_basis,
                          const Eigen::MatrixXd& gamma_r);

SimResult run_experiment(const SimConfig& config);

struct EfficiencyReport {
    struct Entry {
        MethodKind method;
        double variance;        // Monte Carlo var of sqrt(n)(lambda_hat_1 - lambda_1)
        double ratio_to_avar;   // variance / (2 lambda_1^2)
    };
    std::vector<Entry> entries;
    double lambda1 = 0.0;
};

EfficiencyReport efficiency_invariance_check(int p, int n, int replicates,
                                             const std::vector<MethodKind>& methods,
                                             std::uint64_t seed);

}  // namespace phipca
