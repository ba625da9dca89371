#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phipca/linalg.hpp"
#include "phipca/phi_spec.hpp"

namespace phipca {

// Per-block covariance form. Centered subtracts the block mean (divisor
// n_k, maximum-likelihood form); SecondMoment uses raw second moments and
// matches the mu = 0 theory functional.
enum class CovMode { Centered, SecondMoment };

struct PartitionPlan {
    int n = 0;
    int m = 0;
    std::vector<int> assignment;  // length n, block ids in [0, m)
    std::uint64_t seed = 0;

    std::vector<int> block_sizes() const;
};

// Random partition into m blocks of size floor(n/m) or floor(n/m)+1; which
// blocks receive the extra sample is randomized from the same seed.
PartitionPlan make_partition(int n, int m, std::uint64_t seed);

std::vector<SymMatrix> subsample_covariances(const Eigen::MatrixXd& x, const PartitionPlan& plan,
                                             CovMode mode = CovMode::Centered);

// phi^{-1}((1/m) sum_k phi(S_k + ridge_eps I)); for m = 1 and ridge_eps = 0
// this returns S_1 unchanged for every phi.
SymMatrix aggregate(const std::vector<SymMatrix>& subcovs, const PhiSpec& phi, double ridge_eps);

// 1e-8 tr(S)/p, the recommended ridge.
double default_ridge(const SymMatrix& s_full);

// floor(sqrt(n)); requires n >= 4.
int default_m(int n);

struct AggregatedModel {
    SymMatrix sigma_hat;
    SpectralDecomp decomp;
    int m = 1;
    std::optional<PhiSpec> phi;  // empty for the PPCA baseline
    double ridge_eps = 0.0;
    int subcov_count = 1;
    std::string method_tag = "phi-pca";

    Eigen::MatrixXd subspace(int r) const { return decomp.leading(r); }
};

AggregatedModel fit_phi_pca(const Eigen::MatrixXd& x, int m, const PhiSpec& phi,
                            std::uint64_t seed, std::optional<double> ridge_eps = {},
                            CovMode mode = CovMode::Centered);

// Fit with a caller-supplied partition (permutation equivariance tests and
// site-defined assignments go through here).
AggregatedModel fit_phi_pca(const Eigen::MatrixXd& x, const PartitionPlan& plan,
                            const PhiSpec& phi, std::optional<double> ridge_eps = {},
                            CovMode mode = CovMode::Centered);

// Product-PCA baseline: two blocks, G = S_1^{1/2} S_2^{1/2}; component
// directions are the left singular vectors of G and the component values its
// singular values.
AggregatedModel fit_ppca(const Eigen::MatrixXd& x, std::uint64_t seed,
                         CovMode mode = CovMode::Centered);

// Serial reference implementations of the OpenMP kernels; kept for testing
// and benchmarking.
namespace ref {
std::vector<SymMatrix> subsample_covariances(const Eigen::MatrixXd& x, const PartitionPlan& plan,
                                             CovMode mode = CovMode::Centered);
SymMatrix aggregate(const std::vector<SymMatrix>& subcovs, const PhiSpec& phi, double ridge_eps);
}  // namespace ref

}  // namespace phipca
