#include "phipca/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "phipca/rng.hpp"

namespace phipca {

namespace {
constexpr std::uint64_t kPopPurpose = 0x706f7075;    // "popu"
constexpr std::uint64_t kSamplePurpose = 0x73616d70; // "samp"
constexpr std::uint64_t kCleanPurpose = 0x636c656e;  // "clen"
constexpr std::uint64_t kFitPurpose = 0x66697420;    // "fit "
}  // namespace

std::string method_name(MethodKind k) {
    switch (k) {
        case MethodKind::HM: return "HM";
        case MethodKind::GM: return "GM";
        case MethodKind::AM: return "AM";
        case MethodKind::GM2: return "GM2";
        case MethodKind::PPCA: return "PPCA";
        case MethodKind::PCA: return "PCA";
        case MethodKind::OptPCA: return "optPCA";
    }
    return "?";
}

MethodKind method_from_name(const std::string& name) {
    for (MethodKind k : {MethodKind::HM, MethodKind::GM, MethodKind::AM, MethodKind::GM2,
                         MethodKind::PPCA, MethodKind::PCA, MethodKind::OptPCA}) {
        if (method_name(k) == name) return k;
    }
    throw ConfigError("unknown method: " + name);
}

void SimConfig::validate() const {
    if (r >= p) throw ConfigError("SimConfig: need r < p");
    if (q_max > p) throw ConfigError("SimConfig: need q_max <= p");
    if (q_max < r) throw ConfigError("SimConfig: need q_max >= r");
    if (pi < 0.0 || pi >= 1.0) throw ConfigError("SimConfig: need 0 <= pi < 1");
    if (sigma_out <= 0.0) throw ConfigError("SimConfig: need sigma_out > 0");
    if (replicates < 1) throw ConfigError("SimConfig: need replicates >= 1");
    if (t_dof != 1 && t_dof != 3) throw ConfigError("SimConfig: t_dof must be 1 or 3");
    if (methods.empty()) throw ConfigError("SimConfig: methods must be nonempty");
}

int SimConfig::effective_m() const { return m > 0 ? m : default_m(n); }

PopulationModel make_population(int p, int n, int r, std::uint64_t seed) {
    if (r >= p) throw ConfigError("make_population: need r < p");
    std::mt19937_64 eng = substream(seed, 0, kPopPurpose);
    Eigen::VectorXd lam(p);
    for (int j = 1; j <= r; ++j)
        lam[j - 1] = 1.0 + std::sqrt(static_cast<double>(p) / n) +
                     std::pow(static_cast<double>(p), 1.0 / (1.0 + j));
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    std::vector<double> noise(p - r);
    for (double& v : noise) v = unif(eng);
    std::sort(noise.begin(), noise.end(), std::greater<>());
    for (int k = 0; k < p - r; ++k) lam[r + k] = noise[k];

    // Haar-distributed Gamma: QR of a Gaussian matrix with the R-diagonal
    // sign correction (uncorrected QR is not uniform).
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) g(i, j) = gauss(eng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < p; ++j)
        if (rmat(j, j) < 0.0) q.col(j) = -q.col(j);

    SymMatrix sigma(q * lam.asDiagonal() * q.transpose());
    return PopulationModel(std::move(sigma), r);
}

namespace {

Eigen::MatrixXd draw_mixture(const PopulationModel& model, int n, double pi, double sigma_out,
                             int t_dof, std::mt19937_64& eng) {
    const int p = model.p();
    Eigen::MatrixXd root =
        model.decomp.vectors * model.decomp.values.cwiseSqrt().asDiagonal();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::chi_squared_distribution<double> chi2(static_cast<double>(t_dof));
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd z(p);
    for (int i = 0; i < n; ++i) {
        const bool outlier = unif(eng) < pi;
        for (int j = 0; j < p; ++j) z[j] = gauss(eng);
        if (outlier) {
            const double w = chi2(eng);
            x.row(i) = (sigma_out * std::sqrt(t_dof / w) * z).transpose();
        } else {
            x.row(i) = (root * z).transpose();
        }
    }
    return x;
}

}  // namespace

Eigen::MatrixXd sample_mixture(const PopulationModel& model, const SimConfig& config,
                               std::uint64_t seed) {
    std::mt19937_64 eng = substream(seed, 0, kSamplePurpose);
    return draw_mixture(model, config.n, config.pi, config.sigma_out, config.t_dof, eng);
}

SimilarityCurve s_q_curve(MethodKind method, const Eigen::MatrixXd& fitted_basis,
                          const Eigen::MatrixXd& gamma_r) {
    const int r = static_cast<int>(gamma_r.cols());
    const int q_max = static_cast<int>(fitted_basis.cols());
    if (q_max < r) throw ConfigError("s_q_curve: need q_max >= r");
    SimilarityCurve curve;
    curve.method = method;
    for (int q = r; q <= q_max; ++q) {
        Eigen::VectorXd s = principal_singulars(fitted_basis.leftCols(q), gamma_r);
        curve.q.push_back(q);
        curve.mean_sq.push_back(s.mean());
        curve.stderr_sq.push_back(0.0);
    }
    return curve;
}

namespace {

AggregatedModel fit_method(MethodKind k, const Eigen::MatrixXd& x, const Eigen::MatrixXd& clean,
                           int m, std::uint64_t fit_seed) {
    switch (k) {
        case MethodKind::HM: return fit_phi_pca(x, m, PhiSpec::power(-1.0), fit_seed);
        case MethodKind::GM: return fit_phi_pca(x, m, PhiSpec::log_limit(), fit_seed);
        case MethodKind::AM: return fit_phi_pca(x, m, PhiSpec::power(1.0), fit_seed);
        case MethodKind::GM2: return fit_phi_pca(x, 2, PhiSpec::log_limit(), fit_seed);
        case MethodKind::PPCA: return fit_ppca(x, fit_seed);
        case MethodKind::PCA: return fit_phi_pca(x, 1, PhiSpec::power(1.0), fit_seed);
        case MethodKind::OptPCA: return fit_phi_pca(clean, 1, PhiSpec::power(1.0), fit_seed);
    }
    throw ConfigError("fit_method: unknown method");
}

}  // namespace

SimResult run_experiment(const SimConfig& config) {
    config.validate();
    const int reps = config.replicates;
    const int n_methods = static_cast<int>(config.methods.size());
    const int n_q = config.q_max - config.r + 1;
    const int m = config.effective_m();

    // [rep][method][q]; NaN marks a failed fit.
    std::vector<std::vector<std::vector<double>>> sq(
        reps, std::vector<std::vector<double>>(
                  n_methods, std::vector<double>(n_q, std::numeric_limits<double>::quiet_NaN())));
    std::vector<int> failures(reps, 0);

#pragma omp parallel for schedule(dynamic)
    for (int rep = 0; rep < reps; ++rep) {
        PopulationModel pop = make_population(config.p, config.n, config.r,
                                              mix_seed(config.seed, rep, kPopPurpose));
        Eigen::MatrixXd x = sample_mixture(pop, config, mix_seed(config.seed, rep, kSamplePurpose));
        SimConfig clean_cfg = config;
        clean_cfg.pi = 0.0;
        // opt-PCA's clean sample is drawn from its own substream per replicate.
        Eigen::MatrixXd clean =
            sample_mixture(pop, clean_cfg, mix_seed(config.seed, rep, kCleanPurpose));
        Eigen::MatrixXd gamma_r = pop.decomp.leading(config.r);
        for (int mi = 0; mi < n_methods; ++mi) {
            try {
                AggregatedModel fit =
                    fit_method(config.methods[mi], x, clean, m,
                               mix_seed(config.seed, rep, kFitPurpose + mi));
                SimilarityCurve c =
                    s_q_curve(config.methods[mi], fit.subspace(config.q_max), gamma_r);
                sq[rep][mi] = c.mean_sq;
            } catch (const std::exception&) {
                ++failures[rep];
            }
        }
    }

    SimResult result;
    result.config = config;
    for (int f : failures) result.failed_fits += f;
    for (int mi = 0; mi < n_methods; ++mi) {
        SimilarityCurve curve;
        curve.method = config.methods[mi];
        for (int qi = 0; qi < n_q; ++qi) {
            double sum = 0.0;
            int count = 0;
            for (int rep = 0; rep < reps; ++rep) {
                if (std::isnan(sq[rep][mi][qi])) continue;
                sum += sq[rep][mi][qi];
                ++count;
            }
            const double mean = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
            double var = 0.0;
            for (int rep = 0; rep < reps; ++rep) {
                if (std::isnan(sq[rep][mi][qi])) continue;
                var += (sq[rep][mi][qi] - mean) * (sq[rep][mi][qi] - mean);
            }
            const double se = count > 1 ? std::sqrt(var / (count - 1) / count) : 0.0;
            curve.q.push_back(config.r + qi);
            curve.mean_sq.push_back(mean);
            curve.stderr_sq.push_back(se);
        }
        result.curves.push_back(std::move(curve));
    }
    return result;
}

EfficiencyReport efficiency_invariance_check(int p, int n, int replicates,
                                             const std::vector<MethodKind>& methods,
                                             std::uint64_t seed) {
    PopulationModel pop = make_population(p, n, std::min(2, p - 1), mix_seed(seed, 0, kPopPurpose));
    const double lambda1 = pop.lambda(0);
    const int m = default_m(n);
    const int n_methods = static_cast<int>(methods.size());

    std::vector<std::vector<double>> lam_hat(n_methods, std::vector<double>(replicates, 0.0));
#pragma omp parallel for schedule(dynamic)
    for (int rep = 0; rep < replicates; ++rep) {
        std::mt19937_64 eng = substream(seed, rep + 1, kSamplePurpose);
        Eigen::MatrixXd x = draw_mixture(pop, n, 0.0, 1.0, 1, eng);
        for (int mi = 0; mi < n_methods; ++mi) {
            AggregatedModel fit =
                fit_method(methods[mi], x, x, m, mix_seed(seed, rep, kFitPurpose + mi));
            lam_hat[mi][rep] = fit.decomp.values[0];
        }
    }

    EfficiencyReport report;
    report.lambda1 = lambda1;
    for (int mi = 0; mi < n_methods; ++mi) {
        double mean = 0.0;
        for (double v : lam_hat[mi]) mean += std::sqrt(static_cast<double>(n)) * (v - lambda1);
        mean /= replicates;
        double var = 0.0;
        for (double v : lam_hat[mi]) {
            const double c = std::sqrt(static_cast<double>(n)) * (v - lambda1) - mean;
            var += c * c;
        }
        var /= (replicates - 1);
        report.entries.push_back({methods[mi], var, var / (2.0 * lambda1 * lambda1)});
    }
    return report;
}

}  // namespace phipca
