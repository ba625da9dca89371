#pragma once

#include <cstdint>
#include <optional>

#include "phipca/linalg.hpp"

namespace phipca {

// Single-spike working model Sigma = a xi xi^T + (I - xi xi^T) contaminated
// along a unit direction nu orthogonal to xi, with contaminated fraction
// delta = m * eps inside the hit block.
struct SpikedModel {
    int p = 2;
    double a = 2.0;    // signal strength, > 1
    double eta = 2.0;  // noise strength, > 1
    double delta = 0.1;
    int m = 2;
    Eigen::VectorXd signal_dir;  // xi
    Eigen::VectorXd noise_dir;   // nu

    // Canonical embedding: xi = e1, nu = e2.
    SpikedModel(int dim, double signal, double noise, double frac, int partitions);
    SpikedModel(double signal, double noise, double frac, int partitions,
                Eigen::VectorXd xi, Eigen::VectorXd nu);

    SymMatrix sigma() const;
    SymMatrix contaminated_block() const;  // (1-delta) Sigma + delta eta nu nu^T
};

// [(1/m) C1^{-1} + ((m-1)/m) Sigma^{-1}]^{-1}.
SymMatrix hm_population_aggregate(const SpikedModel& model);

// exp{(1/m)[ln C1 + (m-1) ln Sigma]}.
SymMatrix gm_population_aggregate(const SpikedModel& model);

// Closed-form eigenvalues of the HM aggregate on the xi / nu / bulk
// directions.
struct HmSpikedEigs {
    double signal;  // along xi
    double noise;   // along nu
    double bulk;    // multiplicity p - 2
};
HmSpikedEigs hm_spiked_eigenvalues(const SpikedModel& model);

double hm_flip_rhs(const SpikedModel& model);
bool hm_flip_holds(const SpikedModel& model);

// a > 1 + 1/((m-1)(1-delta)); +inf for m = 1.
double immunity_threshold(int m, double delta);
bool is_immune(const SpikedModel& model);

bool gm_flip_holds(const SpikedModel& model);
double gm_flip_eta_threshold(const SpikedModel& model);

// Exhaustive-scan minimizer of R(m) + alpha m eps over m in
// {2, ..., floor(1/(2 eps))}; with penalties unset returns floor(sqrt(n)).
int select_m(int n, std::optional<double> eps = {}, std::optional<double> alpha = {});

}  // namespace phipca
