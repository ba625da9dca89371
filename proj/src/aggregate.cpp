#include "phipca/aggregate.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <exception>
#include <numeric>
#include <sstream>

#include "phipca/rng.hpp"

namespace phipca {

std::vector<int> PartitionPlan::block_sizes() const {
    std::vector<int> sizes(m, 0);
    for (int id : assignment) ++sizes[id];
    return sizes;
}

PartitionPlan make_partition(int n, int m, std::uint64_t seed) {
    if (m < 1 || m > n) {
        std::ostringstream os;
        os << "make_partition: need 1 <= m <= n, got m = " << m << ", n = " << n;
        throw ConfigError(os.str());
    }
    std::mt19937_64 eng = substream(seed, 0, /*purpose=*/0x70617274);  // "part"
    const int base = n / m;
    const int rem = n % m;

    // Randomize which blocks receive the +1 sample.
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), eng);

    std::vector<int> labels;
    labels.reserve(n);
    for (int k = 0; k < m; ++k) {
        const int size = base + (std::find(order.begin(), order.begin() + rem, k) !=
                                         order.begin() + rem
                                     ? 1
                                     : 0);
        labels.insert(labels.end(), size, k);
    }
    std::shuffle(labels.begin(), labels.end(), eng);

    PartitionPlan plan;
    plan.n = n;
    plan.m = m;
    plan.assignment = std::move(labels);
    plan.seed = seed;
    return plan;
}

namespace {

SymMatrix block_covariance(const Eigen::MatrixXd& x, const std::vector<int>& rows, CovMode mode) {
    const int nk = static_cast<int>(rows.size());
    const int p = static_cast<int>(x.cols());
    Eigen::MatrixXd xb(nk, p);
    for (int i = 0; i < nk; ++i) xb.row(i) = x.row(rows[i]);
    Eigen::MatrixXd c;
    if (mode == CovMode::Centered) {
        Eigen::RowVectorXd mean = xb.colwise().mean();
        Eigen::MatrixXd centered = xb.rowwise() - mean;
        c = centered.transpose() * centered / static_cast<double>(nk);
    } else {
        c = xb.transpose() * xb / static_cast<double>(nk);
    }
    return SymMatrix(std::move(c));
}

std::vector<std::vector<int>> block_rows(const PartitionPlan& plan) {
    std::vector<std::vector<int>> rows(plan.m);
    for (int i = 0; i < plan.n; ++i) rows[plan.assignment[i]].push_back(i);
    for (int k = 0; k < plan.m; ++k) {
        if (rows[k].size() < 2) {
            std::ostringstream os;
            os << "subsample_covariances: block " << k << " has " << rows[k].size()
               << " sample(s); need at least 2";
            throw DomainError(os.str());
        }
    }
    return rows;
}

}  // namespace

std::vector<SymMatrix> subsample_covariances(const Eigen::MatrixXd& x, const PartitionPlan& plan,
                                             CovMode mode) {
    if (static_cast<int>(x.rows()) != plan.n)
        throw ConfigError("subsample_covariances: plan does not match data row count");
    auto rows = block_rows(plan);
    std::vector<SymMatrix> covs;
    covs.reserve(plan.m);
    for (int k = 0; k < plan.m; ++k) covs.push_back(SymMatrix::Zero(static_cast<int>(x.cols())));

    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < plan.m; ++k) {
        try {
            covs[k] = block_covariance(x, rows[k], mode);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return covs;
}

namespace {

SymMatrix aggregate_impl(const std::vector<SymMatrix>& subcovs, const PhiSpec& phi,
                         double ridge_eps, bool parallel) {
    const int m = static_cast<int>(subcovs.size());
    if (m < 1) throw ConfigError("aggregate: need at least one subsample covariance");
    if (ridge_eps < 0.0) throw ConfigError("aggregate: ridge_eps must be >= 0");
    const int p = subcovs[0].dim();
    if (m == 1) {
        // phi^{-1}(phi(S + eps I)) = S + eps I exactly for every phi.
        if (ridge_eps == 0.0) return subcovs[0];
        return SymMatrix(subcovs[0].mat() +
                         ridge_eps * Eigen::MatrixXd::Identity(p, p));
    }

    std::vector<Eigen::MatrixXd> transformed(m);
    std::exception_ptr err;
    int err_block = -1;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int k = 0; k < m; ++k) {
        try {
            SymMatrix ridged(subcovs[k].mat() + ridge_eps * Eigen::MatrixXd::Identity(p, p));
            transformed[k] = matrix_phi(ridged, phi).mat();
        } catch (...) {
#pragma omp critical
            if (!err) {
                err = std::current_exception();
                err_block = k;
            }
        }
    }
    if (err) {
        try {
            std::rethrow_exception(err);
        } catch (const DomainError& e) {
            std::ostringstream os;
            os << "aggregate: block " << err_block << ": " << e.what();
            if (ridge_eps == 0.0) os << " (pass a positive ridge_eps)";
            throw DomainError(os.str());
        }
    }

    // Fixed summation order by block index keeps results bitwise reproducible.
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
    for (int k = 0; k < m; ++k) acc += transformed[k];
    acc /= static_cast<double>(m);

    return apply_spectral(SymMatrix(std::move(acc)),
                          [&phi](double u) { return phi.inverse(u); },
                          phi_inverse_domain(phi), "aggregate");
}

}  // namespace

SymMatrix aggregate(const std::vector<SymMatrix>& subcovs, const PhiSpec& phi, double ridge_eps) {
    return aggregate_impl(subcovs, phi, ridge_eps, true);
}

double default_ridge(const SymMatrix& s_full) {
    return 1e-8 * s_full.mat().trace() / static_cast<double>(s_full.dim());
}

int default_m(int n) {
    if (n < 4) throw ConfigError("default_m: need n >= 4");
    return static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
}

namespace {

SymMatrix pooled_covariance(const Eigen::MatrixXd& x, CovMode mode) {
    PartitionPlan one;
    one.n = static_cast<int>(x.rows());
    one.m = 1;
    one.assignment.assign(one.n, 0);
    return subsample_covariances(x, one, mode)[0];
}

void check_psd(const SpectralDecomp& d) {
    const double tol = 1e-10 * std::max(1.0, d.values[0]);
    if (d.values[d.dim() - 1] < -tol) {
        std::ostringstream os;
        os << "fit: aggregated matrix is not PSD (min eigenvalue " << d.values[d.dim() - 1] << ")";
        throw DomainError(os.str());
    }
}

}  // namespace

AggregatedModel fit_phi_pca(const Eigen::MatrixXd& x, const PartitionPlan& plan,
                            const PhiSpec& phi, std::optional<double> ridge_eps, CovMode mode) {
    auto covs = subsample_covariances(x, plan, mode);
    // m = 1 is the standard PCA path; no ridge there so the collapse to
    // standard PCA is exact.
    double eps = ridge_eps ? *ridge_eps
                           : (plan.m == 1 ? 0.0 : default_ridge(pooled_covariance(x, mode)));
    SymMatrix sigma = aggregate(covs, phi, eps);
    AggregatedModel model{sigma, eigh(sigma), plan.m, phi, eps, plan.m, "phi-pca"};
    check_psd(model.decomp);
    return model;
}

AggregatedModel fit_phi_pca(const Eigen::MatrixXd& x, int m, const PhiSpec& phi,
                            std::uint64_t seed, std::optional<double> ridge_eps, CovMode mode) {
    return fit_phi_pca(x, make_partition(static_cast<int>(x.rows()), m, seed), phi, ridge_eps,
                       mode);
}

AggregatedModel fit_ppca(const Eigen::MatrixXd& x, std::uint64_t seed, CovMode mode) {
    const int n = static_cast<int>(x.rows());
    if (n < 4) throw ConfigError("fit_ppca: need n >= 4");
    auto plan = make_partition(n, 2, seed);
    auto covs = subsample_covariances(x, plan, mode);
    Eigen::MatrixXd g = matrix_sqrt(covs[0]).mat() * matrix_sqrt(covs[1]).mat();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeFullU);
    SpectralDecomp d;
    d.values = svd.singularValues();
    d.vectors = svd.matrixU();
    for (int j = 0; j < d.dim(); ++j) {
        int imax = 0;
        d.vectors.col(j).cwiseAbs().maxCoeff(&imax);
        if (d.vectors(imax, j) < 0.0) d.vectors.col(j) = -d.vectors.col(j);
    }
    SymMatrix sigma(d.vectors * d.values.asDiagonal() * d.vectors.transpose());
    return AggregatedModel{sigma, std::move(d), 2, std::nullopt, 0.0, 2, "ppca"};
}

namespace ref {

std::vector<SymMatrix> subsample_covariances(const Eigen::MatrixXd& x, const PartitionPlan& plan,
                                             CovMode mode) {
    if (static_cast<int>(x.rows()) != plan.n)
        throw ConfigError("subsample_covariances: plan does not match data row count");
    auto rows = block_rows(plan);
    std::vector<SymMatrix> covs;
    covs.reserve(plan.m);
    for (int k = 0; k < plan.m; ++k) covs.push_back(block_covariance(x, rows[k], mode));
    return covs;
}

SymMatrix aggregate(const std::vector<SymMatrix>& subcovs, const PhiSpec& phi, double ridge_eps) {
    return aggregate_impl(subcovs, phi, ridge_eps, false);
}

}  // namespace ref

}  // namespace phipca
