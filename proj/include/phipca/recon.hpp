#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phipca/aggregate.hpp"
#include "phipca/idx.hpp"

namespace phipca {

// Additive heavy-tailed contamination of a seeded subset of rows.
struct ContaminationResult {
    Eigen::MatrixXd data;
    std::vector<int> mask;  // corrupted row indices, ascending
};

// Exactly round(pi * n) rows (chosen without replacement) receive additive
// t3(0, sigma_out^2 I) noise; values are left unclamped so fits see the raw
// corruption.
ContaminationResult contaminate_images(const Eigen::MatrixXd& x, double pi, double sigma_out,
                                       std::uint64_t seed);

// mean + B_r B_r^T (x0 - mean) with B_r the leading-r eigenvector block.
Eigen::VectorXd reconstruct(const AggregatedModel& model, const Eigen::VectorXd& train_mean,
                            const Eigen::VectorXd& x0, int r);

// Procedurally generated 28x28 digit-like stroke images so the pipeline is
// testable without the real dataset.
struct SyntheticCorpus {
    Eigen::MatrixXd train;  // n_train x 784
    Eigen::MatrixXd test;   // n_test x 784
    int rows = 28;
    int cols = 28;
};
SyntheticCorpus synthetic_digits(int digit, int n_train, int n_test, std::uint64_t seed);

struct ReconConfig {
    std::string data_dir;            // directory holding the IDX files
    bool fallback_synthetic = true;  // use the synthetic corpus when absent
    std::vector<int> digits{1, 2};
    char setting = 'i';              // 'i': vary pi; 'ii': vary sigma_out ('2' accepted)
    std::vector<std::string> methods{"HM", "GM", "PCA"};
    int r = 50;
    std::uint64_t seed = 1;
    int n_train_cap = 2000;  // synthetic corpus size / cap on real training rows
    int n_test = 50;
    std::string out_dir;
    bool scale_pixels = false;  // divide by 255 before fitting
    int pgm_emit_count = 3;     // reconstructions written per grid point
};

struct ReconResult {
    int digit = 0;
    std::string method;
    int r = 0;
    double pi = 0.0;
    double sigma_out = 0.0;
    std::vector<double> mse;  // per test image
    double mean_mse() const;
};

std::vector<ReconResult> run_recon_study(const ReconConfig& config);

}  // namespace phipca
