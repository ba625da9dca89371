// Timing comparison of the OpenMP block-covariance / phi-aggregation kernels
// against their serial reference implementations. Checks agreement while at
// it, so a silent divergence shows up here too.

#include <chrono>
#include <cstdio>
#include <random>

#include "phipca/aggregate.hpp"
#include "phipca/rng.hpp"

using clock_type = std::chrono::steady_clock;

namespace {

double ms_since(clock_type::time_point start) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - start).count();
}

Eigen::MatrixXd random_sample(int n, int p, std::uint64_t seed) {
    std::mt19937_64 eng = phipca::substream(seed, 0, 0x62656e63);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = gauss(eng);
    return x;
}

void bench_case(int n, int p, int m, int reps) {
    const Eigen::MatrixXd x = random_sample(n, p, 7);
    const phipca::PartitionPlan plan = phipca::make_partition(n, m, 11);
    const phipca::PhiSpec phi = phipca::PhiSpec::power(-1.0);

    double t_cov_par = 0, t_cov_ser = 0, t_agg_par = 0, t_agg_ser = 0;
    double max_diff = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        auto t0 = clock_type::now();
        auto covs_par = phipca::subsample_covariances(x, plan);
        t_cov_par += ms_since(t0);

        t0 = clock_type::now();
        auto covs_ser = phipca::ref::subsample_covariances(x, plan);
        t_cov_ser += ms_since(t0);

        const double ridge = phipca::default_ridge(covs_par.front());
        t0 = clock_type::now();
        phipca::SymMatrix agg_par = phipca::aggregate(covs_par, phi, ridge);
        t_agg_par += ms_since(t0);

        t0 = clock_type::now();
        phipca::SymMatrix agg_ser = phipca::ref::aggregate(covs_ser, phi, ridge);
        t_agg_ser += ms_since(t0);

        max_diff = std::max(max_diff,
                            (agg_par.mat() - agg_ser.mat()).cwiseAbs().maxCoeff());
    }
    std::printf("n=%-6d p=%-5d m=%-3d | cov %8.2f / %8.2f ms | agg %8.2f / %8.2f ms | "
                "speedup %.2fx / %.2fx | max|par-ser| %.3g\n",
                n, p, m, t_cov_par / reps, t_cov_ser / reps, t_agg_par / reps, t_agg_ser / reps,
                t_cov_ser / std::max(1e-9, t_cov_par),
                t_agg_ser / std::max(1e-9, t_agg_par), max_diff);
}

}  // namespace

int main() {
    std::printf("%-24s | parallel / serial\n", "case");
    bench_case(2000, 50, 44, 5);
    bench_case(2000, 200, 44, 3);
    bench_case(8000, 100, 89, 3);
    bench_case(1000, 400, 31, 2);
    return 0;
}
