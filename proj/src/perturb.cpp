#include "phipca/perturb.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace phipca {

PopulationModel::PopulationModel(SymMatrix s, int signal_rank)
    : sigma(std::move(s)), decomp(eigh(sigma)), r(signal_rank) {
    const int p = sigma.dim();
    if (r < 1 || r >= p)
        throw ConfigError("PopulationModel: need 1 <= r < p");
    if (decomp.values[p - 1] <= 0.0)
        throw DomainError("PopulationModel: covariance must be positive definite");
    const double scale = decomp.values[0];
    for (int j = 1; j < p; ++j) {
        if (decomp.values[j - 1] - decomp.values[j] < 1e-12 * scale) {
            std::ostringstream os;
            os << "PopulationModel: eigenvalues " << j - 1 << " and " << j
               << " are nearly degenerate";
            throw DomainError(os.str());
        }
    }
}

double PopulationModel::mahalanobis(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (int j = 0; j < p(); ++j) {
        const double c = decomp.vectors.col(j).dot(x);
        s += c * c / decomp.values[j];
    }
    return s;
}

ContaminationSpec::ContaminationSpec(Eigen::VectorXd point, double epsilon, int partitions)
    : x(std::move(point)), eps(epsilon), m(partitions) {
    if (eps <= 0.0) throw ConfigError("ContaminationSpec: eps must be > 0");
    if (m < 1) throw ConfigError("ContaminationSpec: m must be >= 1");
    if (eps * m >= 1.0) throw ConfigError("ContaminationSpec: need eps * m < 1");
}

double rho(double lam_j, double lam_k) {
    if (lam_j <= 0.0 || lam_k <= 0.0)
        throw DomainError("rho: eigenvalues must be positive");
    return lam_j / (lam_j + lam_k);
}

double d_coeff(const PopulationModel& model, const Eigen::VectorXd& x, int j) {
    const double c = model.gamma(j).dot(x);
    return c * c / model.lambda(j);
}

SymMatrix W_matrix(const PopulationModel& model, const PhiSpec& phi, int j) {
    const int p = model.p();
    const double lj = model.lambda(j);
    const double d1 = phi.deriv(lj);
    const double d2 = phi.deriv2(lj);
    if (d1 == 0.0) throw DomainError("W_matrix: phi'(lambda_j) = 0, degenerate phi");
    Eigen::MatrixXd mj = pinv_shift(model.decomp, j).mat();
    Eigen::MatrixXd pj = model.gamma(j) * model.gamma(j).transpose();
    Eigen::MatrixXd phi_sigma = matrix_phi(model.sigma, phi).mat();
    Eigen::MatrixXd w = (d2 / (2.0 * d1)) * pj + mj -
                        (1.0 / d1) *
                            (phi.value(lj) * Eigen::MatrixXd::Identity(p, p) - phi_sigma) * mj *
                            mj;
    return SymMatrix(std::move(w));
}

double thm2_eigenvalue_shift(const PopulationModel& model, const PhiSpec& phi,
                             const ContaminationSpec& cont, int j) {
    if (cont.m == 1) return 0.0;
    const double lj = model.lambda(j);
    const double d1 = phi.deriv(lj);
    const double d2 = phi.deriv2(lj);
    if (d1 == 0.0) throw DomainError("thm2_eigenvalue_shift: phi'(lambda_j) = 0");
    const double dj = d_coeff(model, cont.x, j);
    const double ratio = d2 * lj / d1;
    const double quad = cont.x.dot(W_matrix(model, phi, j).mat() * cont.x);
    return (cont.m - 1) * (dj * (quad - 1.0 - ratio) + 0.5 * ratio);
}

double thm2_eigvec_cross_shift(const PopulationModel& model, const ContaminationSpec& cont) {
    double s = 0.0;
    for (int j = 0; j < model.r; ++j) {
        for (int k = j + 1; k < model.r; ++k) {
            const double lj = model.lambda(j), lk = model.lambda(k);
            const double dj = d_coeff(model, cont.x, j), dk = d_coeff(model, cont.x, k);
            const double cj = model.gamma(j).dot(cont.x), ck = model.gamma(k).dot(cont.x);
            s += -(lj * dj + lk * dk) / ((lj - lk) * (lj - lk)) * cj * ck;
        }
    }
    return (cont.m - 1) * s;
}

namespace {

// (1 - t^beta)/beta with the beta -> 0 limit -ln(t).
double power_gap(double t, double beta) {
    if (beta == 0.0) return -std::log(t);
    return (1.0 - std::pow(t, beta)) / beta;
}

double beta_of(const PhiSpec& mode) {
    if (!mode.is_power() && !mode.is_log_limit())
        throw ConfigError("tau expansion: beta_mode must be a power or log-limit spec");
    return mode.is_log_limit() ? 0.0 : mode.beta();
}

}  // namespace

PerturbationReport tau_expansion(const PopulationModel& model, const ContaminationSpec& cont,
                                 const PhiSpec& beta_mode) {
    const double beta = beta_of(beta_mode);
    const int p = model.p();
    const int r = model.r;

    std::vector<double> d(p);
    for (int j = 0; j < p; ++j) d[j] = d_coeff(model, cont.x, j);

    PerturbationReport rep;
    rep.xi_weights.assign(p, 0.0);
    for (int j = 0; j < p; ++j) {
        const double lj = model.lambda(j);
        double xi = 0.0;
        for (int l = 0; l < p; ++l) {
            if (l == j) continue;
            const double ll = model.lambda(l);
            const double gap = lj - ll;
            xi += (ll * lj / (gap * gap) * power_gap(ll / lj, beta) - ll / gap -
                   0.5 * (1.0 - beta)) *
                  d[l];
        }
        rep.xi_weights[j] = xi;
    }

    double sig_d = 0.0, noise_d = 0.0, sig_xd = 0.0, noise_xd = 0.0;
    for (int j = 0; j < r; ++j) {
        sig_d += d[j];
        sig_xd += rep.xi_weights[j] * d[j];
    }
    for (int k = r; k < p; ++k) {
        noise_d += d[k];
        noise_xd += rep.xi_weights[k] * d[k];
    }
    rep.delta = noise_d / (p - r) - sig_d / r;
    rep.delta_beta = noise_xd / (p - r) - sig_xd / r;
    rep.maha = model.mahalanobis(cont.x);
    rep.tau_analytic =
        (cont.m - 1) * ((0.5 * (1.0 - beta) * rep.maha + beta) * rep.delta + rep.delta_beta);

    // For beta in {-1, 1} the xi weights vanish identically, hence so does
    // Delta_beta; anything beyond rounding noise here is a bug.
    if (beta == 1.0 || beta == -1.0) {
        double scale = 1.0;
        for (int j = 0; j < p; ++j) scale = std::max(scale, std::abs(d[j]));
        if (std::abs(rep.delta_beta) > 1e-10 * scale * scale)
            throw DomainError("tau_expansion: Delta_beta failed to vanish at beta = +-1");
    }
    return rep;
}

double corollary1_delta_beta(const PopulationModel& model, const Eigen::VectorXd& x,
                             double beta) {
    const int p = model.p();
    const int r = model.r;
    const double xnorm = x.norm();
    for (int j = 0; j < r; ++j) {
        if (std::abs(model.gamma(j).dot(x)) > 1e-10 * xnorm)
            throw DomainError("corollary1_delta_beta: x is not orthogonal to the signal subspace");
    }
    if (beta == 1.0 || beta == -1.0 || beta == 0.0) return 0.0;
    std::vector<double> d(p);
    for (int k = r; k < p; ++k) d[k] = d_coeff(model, x, k);
    double s = 0.0;
    for (int k = r; k < p; ++k) {
        for (int l = r; l < k; ++l) {
            const double t = model.lambda(l) / model.lambda(k);  // note l < k => t > 1
            const double num = std::pow(t, beta) + std::pow(t, -beta) - 2.0;
            const double den = t + 1.0 / t - 2.0;
            s += (beta - num / (beta * den)) * d[k] * d[l];
        }
    }
    return s / (p - r);
}

double Delta(const PopulationModel& model, const Eigen::VectorXd& x) {
    const int p = model.p();
    const int r = model.r;
    double sig = 0.0, noise = 0.0;
    for (int j = 0; j < r; ++j) sig += d_coeff(model, x, j);
    for (int k = r; k < p; ++k) noise += d_coeff(model, x, k);
    return noise / (p - r) - sig / r;
}

double Delta0(const PopulationModel& model, const Eigen::VectorXd& x) {
    const int p = model.p();
    const int r = model.r;
    double s = 0.0;
    for (int j = 0; j < r; ++j) {
        for (int k = r; k < p; ++k) {
            const double lj = model.lambda(j), lk = model.lambda(k);
            const double gap = lj - lk;
            const double w = lj * lk / (gap * gap);
            const double term = 0.5 * (lj / lk - lk / lj) - std::log(lj / lk);
            s += w * term * d_coeff(model, x, j) * d_coeff(model, x, k);
        }
    }
    return s * p / (static_cast<double>(r) * (p - r));
}

double DeltaPPCA(const PopulationModel& model, const Eigen::VectorXd& x) {
    const int p = model.p();
    const int r = model.r;
    double s = 0.0;
    for (int j = 0; j < r; ++j) {
        for (int k = r; k < p; ++k) {
            const double lj = model.lambda(j), lk = model.lambda(k);
            s += (lj - lk) / (2.0 * (lj + lk)) * d_coeff(model, x, j) * d_coeff(model, x, k);
        }
    }
    return s * p / (static_cast<double>(r) * (p - r));
}

double tau_hm(const PopulationModel& model, const ContaminationSpec& cont) {
    return (cont.m - 1) * (model.mahalanobis(cont.x) - 1.0) * Delta(model, cont.x);
}

double tau_gm(const PopulationModel& model, const ContaminationSpec& cont) {
    const double d0 = Delta0(model, cont.x);
    if (d0 < -1e-12) throw DomainError("tau_gm: Delta_0 must be nonnegative");
    return (cont.m - 1) * (0.5 * model.mahalanobis(cont.x) * Delta(model, cont.x) + d0);
}

double tau_am(const PopulationModel& model, const ContaminationSpec& cont) {
    return (cont.m - 1) * Delta(model, cont.x);
}

double tau_ppca(const PopulationModel& model, const Eigen::VectorXd& x) {
    const double dp = DeltaPPCA(model, x);
    const double d0 = Delta0(model, x);
    if (dp < -1e-12) throw DomainError("tau_ppca: Delta_PPCA must be nonnegative");
    if (dp < d0 - 1e-10 * std::max(1.0, std::abs(d0)))
        throw DomainError("tau_ppca: Delta_PPCA < Delta_0, which contradicts theory");
    return 0.5 * model.mahalanobis(x) * Delta(model, x) + dp;
}

namespace {

SymMatrix contaminated_cov(const PopulationModel& model, const Eigen::VectorXd& x, double delta,
                           MomentMode mode) {
    const double w = (mode == MomentMode::SecondMoment) ? delta : delta * (1.0 - delta);
    return SymMatrix((1.0 - delta) * model.sigma.mat() + w * x * x.transpose());
}

}  // namespace

OraclePair oracle_perturbed_spectrum(const PopulationModel& model, const PhiSpec& phi,
                                     const ContaminationSpec& cont, MomentMode mode) {
    SymMatrix c1 = contaminated_cov(model, cont.x, cont.delta(), mode);
    SymMatrix one = contaminated_cov(model, cont.x, cont.eps, mode);
    {
        SpectralDecomp dc = eigh(c1);
        if (dc.values[dc.dim() - 1] <= 0.0)
            throw DomainError("oracle_perturbed_spectrum: contaminated block lost positive "
                              "definiteness; eps too large");
    }
    OraclePair pair{SpectralDecomp{}, eigh(one)};
    if (cont.m == 1) {
        pair.m_arm = pair.one_arm;
        return pair;
    }
    const int p = model.p();
    Eigen::MatrixXd acc = matrix_phi(c1, phi).mat() +
                          (cont.m - 1) * matrix_phi(model.sigma, phi).mat();
    acc /= static_cast<double>(cont.m);
    SymMatrix agg = apply_spectral(SymMatrix(std::move(acc)),
                                   [&phi](double u) { return phi.inverse(u); },
                                   phi_inverse_domain(phi), "oracle aggregate");
    (void)p;
    pair.m_arm = eigh(agg);
    return pair;
}

PpcaOraclePair oracle_ppca_spectrum(const PopulationModel& model, const Eigen::VectorXd& x,
                                    double eps, MomentMode mode) {
    SymMatrix c1 = contaminated_cov(model, x, 2.0 * eps, mode);
    Eigen::MatrixXd g = matrix_sqrt(c1).mat() * matrix_sqrt(model.sigma).mat();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
    PpcaOraclePair pair{svd.singularValues(), eigh(contaminated_cov(model, x, eps, mode))};
    return pair;
}

namespace {

double tau_from_spectra(const PopulationModel& model, const Eigen::VectorXd& lam_m,
                        const Eigen::VectorXd& lam_1, double eps) {
    const int p = model.p();
    const int r = model.r;
    double s = 0.0;
    for (int j = 0; j < r; ++j) {
        for (int k = r; k < p; ++k) {
            const double rho0 = rho(model.lambda(j), model.lambda(k));
            const double eta = rho0 * (1.0 - rho0);
            s += (rho(lam_m[j], lam_m[k]) - rho(lam_1[j], lam_1[k])) / eta;
        }
    }
    return s / (static_cast<double>(r) * (p - r)) / (eps * eps);
}

}  // namespace

double tau_numeric(const PopulationModel& model, const PhiSpec& phi,
                   const ContaminationSpec& cont, MomentMode mode) {
    OraclePair pair = oracle_perturbed_spectrum(model, phi, cont, mode);
    return tau_from_spectra(model, pair.m_arm.values, pair.one_arm.values, cont.eps);
}

double tau_ppca_numeric(const PopulationModel& model, const Eigen::VectorXd& x, double eps,
                        MomentMode mode) {
    PpcaOraclePair pair = oracle_ppca_spectrum(model, x, eps, mode);
    return tau_from_spectra(model, pair.ppca_values, pair.one_arm.values, eps);
}

namespace {

// Sign-align column j of the perturbed basis with the unperturbed gamma_j.
Eigen::VectorXd aligned_col(const SpectralDecomp& d, const Eigen::VectorXd& ref, int j) {
    Eigen::VectorXd v = d.vectors.col(j);
    if (v.dot(ref) < 0.0) v = -v;
    return v;
}

}  // namespace

std::vector<ExpansionRow> verify_expansion(const PopulationModel& model, const PhiSpec& phi,
                                           const Eigen::VectorXd& x, int m,
                                           const std::vector<double>& eps_list, MomentMode mode) {
    std::vector<ExpansionRow> rows;
    const double beta = beta_of(phi);
    const std::string mode_name = (mode == MomentMode::Centered) ? "centered" : "second_moment";
    const int p = model.p();
    const int r = model.r;

    auto push = [&](const std::string& q, double eps, double analytic, double numeric) {
        ExpansionRow row;
        row.quantity = q;
        row.beta = beta;
        row.m = m;
        row.eps = eps;
        row.analytic = analytic;
        row.numeric = numeric;
        row.rel_error = (analytic != 0.0) ? std::abs(numeric - analytic) / std::abs(analytic)
                                          : std::abs(numeric);
        row.moment_mode = mode_name;
        rows.push_back(std::move(row));
    };

    for (double eps : eps_list) {
        ContaminationSpec cont(x, eps, m);
        OraclePair pair = oracle_perturbed_spectrum(model, phi, cont, mode);
        const double e2 = eps * eps;

        for (int j = 0; j < p; ++j) {
            const double numeric =
                (pair.m_arm.values[j] - pair.one_arm.values[j]) / model.lambda(j) / e2;
            push("eigval_shift_" + std::to_string(j), eps,
                 thm2_eigenvalue_shift(model, phi, cont, j), numeric);
        }

        double cross = 0.0;
        for (int j = 0; j < r; ++j) {
            Eigen::VectorXd gm = aligned_col(pair.m_arm, model.gamma(j), j);
            Eigen::VectorXd g1 = aligned_col(pair.one_arm, model.gamma(j), j);
            for (int k = 0; k < r; ++k) {
                if (k == j) continue;
                cross += model.gamma(k).dot(gm - g1);
            }
        }
        push("cross_shift", eps, thm2_eigvec_cross_shift(model, cont), cross / e2);

        for (int j = 0; j < r; ++j) {
            Eigen::VectorXd gm = aligned_col(pair.m_arm, model.gamma(j), j);
            Eigen::VectorXd g1 = aligned_col(pair.one_arm, model.gamma(j), j);
            const double numeric = std::abs(model.gamma(j).dot(gm - g1)) / e2;
            push("eigvec_parallel_" + std::to_string(j), eps, 0.0, numeric);
        }

        PerturbationReport rep = tau_expansion(model, cont, phi);
        push("tau", eps, rep.tau_analytic,
             tau_from_spectra(model, pair.m_arm.values, pair.one_arm.values, eps));
    }
    return rows;
}

Eigen::MatrixXd gaussian_asym_cov(const PopulationModel& model) {
    const int p = model.p();
    if (p > 20) throw ConfigError("gaussian_asym_cov: p must be <= 20");
    Eigen::MatrixXd h(p * p, p * (p + 1));
    for (int j = 0; j < p; ++j) {
        Eigen::VectorXd gj = model.gamma(j);
        h.col(j) = kron(gj, gj);
    }
    for (int j = 0; j < p; ++j) {
        Eigen::MatrixXd mj = pinv_shift(model.decomp, j).mat();
        Eigen::MatrixXd gj = model.gamma(j);
        h.block(0, p + j * p, p * p, p) = kron(gj, mj);
    }
    Eigen::MatrixXd cov4 = gaussian_fourth_moment(model.sigma);
    return h.transpose() * cov4 * h;
}

}  // namespace phipca
