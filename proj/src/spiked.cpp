#include "phipca/spiked.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "phipca/aggregate.hpp"

namespace phipca {

namespace {

void validate(const SpikedModel& m) {
    if (m.p < 2) throw ConfigError("SpikedModel: need p >= 2");
    if (m.a <= 1.0) throw ConfigError("SpikedModel: signal strength a must be > 1");
    if (m.eta <= 1.0) throw ConfigError("SpikedModel: noise strength eta must be > 1");
    if (m.delta <= 0.0 || m.delta >= 1.0)
        throw ConfigError("SpikedModel: delta must lie in (0, 1)");
    if (m.m < 1) throw ConfigError("SpikedModel: m must be >= 1");
    if (std::abs(m.signal_dir.norm() - 1.0) > 1e-10 || std::abs(m.noise_dir.norm() - 1.0) > 1e-10)
        throw ConfigError("SpikedModel: xi and nu must be unit vectors");
    if (std::abs(m.signal_dir.dot(m.noise_dir)) > 1e-12)
        throw ConfigError("SpikedModel: xi and nu must be orthogonal");
}

}  // namespace

SpikedModel::SpikedModel(int dim, double signal, double noise, double frac, int partitions)
    : p(dim), a(signal), eta(noise), delta(frac), m(partitions),
      signal_dir(Eigen::VectorXd::Unit(dim, 0)), noise_dir(Eigen::VectorXd::Unit(dim, 1)) {
    validate(*this);
}

SpikedModel::SpikedModel(double signal, double noise, double frac, int partitions,
                         Eigen::VectorXd xi, Eigen::VectorXd nu)
    : p(static_cast<int>(xi.size())), a(signal), eta(noise), delta(frac), m(partitions),
      signal_dir(std::move(xi)), noise_dir(std::move(nu)) {
    validate(*this);
}

SymMatrix SpikedModel::sigma() const {
    Eigen::MatrixXd xxt = signal_dir * signal_dir.transpose();
    return SymMatrix(a * xxt + (Eigen::MatrixXd::Identity(p, p) - xxt));
}

SymMatrix SpikedModel::contaminated_block() const {
    return SymMatrix((1.0 - delta) * sigma().mat() +
                     delta * eta * noise_dir * noise_dir.transpose());
}

namespace {

// Spectral inverse with an explicit positivity guard; singularity cannot
// occur under the model invariants but is guarded anyway.
Eigen::MatrixXd spd_inverse(const SymMatrix& a, const char* what) {
    return apply_spectral(a, [](double u) { return 1.0 / u; }, EigDomain::StrictlyPositive, what).mat();
}

}  // namespace

SymMatrix hm_population_aggregate(const SpikedModel& model) {
    const double mm = static_cast<double>(model.m);
    Eigen::MatrixXd mix =
        spd_inverse(model.contaminated_block(), "hm_population_aggregate (block)") / mm +
        (mm - 1.0) / mm * spd_inverse(model.sigma(), "hm_population_aggregate (sigma)");
    return apply_spectral(SymMatrix(std::move(mix)), [](double u) { return 1.0 / u; }, EigDomain::StrictlyPositive,
                          "hm_population_aggregate");
}

SymMatrix gm_population_aggregate(const SpikedModel& model) {
    const double mm = static_cast<double>(model.m);
    Eigen::MatrixXd acc = matrix_log(model.contaminated_block()).mat() +
                          (mm - 1.0) * matrix_log(model.sigma()).mat();
    return matrix_exp(SymMatrix(acc / mm));
}

HmSpikedEigs hm_spiked_eigenvalues(const SpikedModel& model) {
    const double m = static_cast<double>(model.m);
    const double a = model.a, d = model.delta, cnt = 1.0 - d + d * model.eta;
    HmSpikedEigs e;
    e.signal = m * a * (1.0 - d) / (1.0 + (m - 1.0) * (1.0 - d));
    e.noise = m * cnt / (1.0 + (m - 1.0) * cnt);
    e.bulk = 1.0 - d / (m - (m - 1.0) * d);
    return e;
}

double hm_flip_rhs(const SpikedModel& model) {
    const double m = static_cast<double>(model.m);
    const double d = model.delta, cnt = 1.0 - d + d * model.eta;
    return (1.0 + (m - 1.0) * (1.0 - d)) * cnt / ((1.0 - d) * (1.0 + (m - 1.0) * cnt));
}

bool hm_flip_holds(const SpikedModel& model) {
    HmSpikedEigs e = hm_spiked_eigenvalues(model);
    const double scale = std::max(e.signal, e.noise);
    if (std::abs(e.signal - e.noise) < 1e-12 * scale)
        throw DomainError("hm_flip_holds: degenerate tie between signal and noise eigenvalues");
    return e.noise > e.signal;
}

double immunity_threshold(int m, double delta) {
    if (m < 1) throw ConfigError("immunity_threshold: m must be >= 1");
    if (m == 1) return std::numeric_limits<double>::infinity();
    return 1.0 + 1.0 / ((m - 1) * (1.0 - delta));
}

bool is_immune(const SpikedModel& model) {
    return model.a > immunity_threshold(model.m, model.delta);
}

double gm_flip_eta_threshold(const SpikedModel& model) {
    return (1.0 - model.delta) / model.delta * (std::pow(model.a, model.m) - 1.0);
}

bool gm_flip_holds(const SpikedModel& model) {
    return model.eta > gm_flip_eta_threshold(model);
}

int select_m(int n, std::optional<double> eps, std::optional<double> alpha) {
    if (!eps && !alpha) return default_m(n);
    if (!eps || !alpha)
        throw ConfigError("select_m: eps and alpha must be given together");
    if (*eps <= 0.0 || *eps >= 1.0) throw ConfigError("select_m: need 0 < eps < 1");
    if (*alpha <= 0.0) throw ConfigError("select_m: need alpha > 0");
    const int m_max = static_cast<int>(std::floor(1.0 / (2.0 * *eps)));
    if (m_max < 2) throw ConfigError("select_m: empty feasible range; eps too large");
    int best_m = 2;
    double best = std::numeric_limits<double>::infinity();
    for (int m = 2; m <= m_max; ++m) {
        const double delta = m * *eps;
        const double value = 1.0 / ((m - 1) * (1.0 - delta)) + *alpha * delta;
        if (value < best) {
            best = value;
            best_m = m;
        }
    }
    return best_m;
}

}  // namespace phipca
