#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "phipca/spiked.hpp"

using namespace phipca;

namespace {

std::vector<double> expected_spectrum(const SpikedModel& model) {
    HmSpikedEigs e = hm_spiked_eigenvalues(model);
    std::vector<double> vals{e.signal, e.noise};
    for (int i = 0; i < model.p - 2; ++i) vals.push_back(e.bulk);
    std::sort(vals.begin(), vals.end(), std::greater<double>());
    return vals;
}

}  // namespace

TEST_CASE("closed-form HM spectrum matches the matrix aggregate") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const int p = 2 + static_cast<int>(unif(rng) * 5);
        const double a = 1.05 + 4.0 * unif(rng);
        const double eta = 1.05 + 10.0 * unif(rng);
        const int m = 1 + static_cast<int>(unif(rng) * 6);
        const double delta = 0.01 + 0.8 * unif(rng);
        SpikedModel model(p, a, eta, delta, m);
        SpectralDecomp d = eigh(hm_population_aggregate(model));
        std::vector<double> want = expected_spectrum(model);
        for (int j = 0; j < p; ++j)
            CHECK(d.values[j] == doctest::Approx(want[j]).epsilon(1e-9));
    }
}

TEST_CASE("closed-form hand values") {
    // a = 3, eta = 2, delta = 0.1, m = 4.
    SpikedModel model(5, 3.0, 2.0, 0.1, 4);
    HmSpikedEigs e = hm_spiked_eigenvalues(model);
    CHECK(e.signal == doctest::Approx(10.8 / 3.7));
    CHECK(e.bulk == doctest::Approx(1.0 - 0.1 / 3.7));
    // m = 1 reduces to the contaminated block itself.
    SpikedModel single(4, 3.0, 2.0, 0.1, 1);
    HmSpikedEigs e1 = hm_spiked_eigenvalues(single);
    CHECK(e1.signal == doctest::Approx(3.0 * 0.9));
    CHECK(e1.noise == doctest::Approx(0.9 + 0.1 * 2.0));
    CHECK(e1.bulk == doctest::Approx(0.9));
}

TEST_CASE("tiny delta leaves the population spectrum intact") {
    SpikedModel model(4, 2.5, 5.0, 1e-12, 3);
    SpectralDecomp d = eigh(hm_population_aggregate(model));
    CHECK(d.values[0] == doctest::Approx(2.5).epsilon(1e-9));
    for (int j = 1; j < 4; ++j) CHECK(d.values[j] == doctest::Approx(1.0).epsilon(1e-9));
    SpectralDecomp g = eigh(gm_population_aggregate(model));
    CHECK(g.values[0] == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("HM flip threshold brackets the signal strength") {
    // m = 2, delta = 0.1, eta = 2: rhs = 1.9 * 1.1 / (0.9 * 2.1).
    SpikedModel weak(4, 1.05, 2.0, 0.1, 2);
    CHECK(hm_flip_rhs(weak) == doctest::Approx(2.09 / 1.89));
    CHECK(hm_flip_holds(weak));
    SpikedModel strong(4, 1.2, 2.0, 0.1, 2);
    CHECK_FALSE(hm_flip_holds(strong));

    // eta barely above 1 injects almost nothing: no flip.
    SpikedModel mild(4, 1.2, 1.0 + 1e-9, 0.1, 2);
    CHECK_FALSE(hm_flip_holds(mild));
}

TEST_CASE("flip boolean matches the leading-direction swap") {
    std::mt19937_64 rng(97);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        SpikedModel model(3, 1.02 + 2.0 * unif(rng), 1.05 + 8.0 * unif(rng),
                          0.05 + 0.6 * unif(rng), 2 + static_cast<int>(unif(rng) * 5));
        HmSpikedEigs e = hm_spiked_eigenvalues(model);
        if (std::abs(e.signal - e.noise) < 1e-9) continue;
        SpectralDecomp d = eigh(hm_population_aggregate(model));
        Eigen::VectorXd top = d.vectors.col(0);
        const bool leads_noise =
            std::abs(top.dot(model.noise_dir)) > std::abs(top.dot(model.signal_dir));
        CHECK(hm_flip_holds(model) == leads_noise);
    }
}

TEST_CASE("hm_flip_rhs is monotone in eta and m") {
    double prev = 0.0;
    for (double eta : {1.2, 2.0, 5.0, 20.0, 100.0}) {
        SpikedModel model(3, 1.5, eta, 0.2, 3);
        const double rhs = hm_flip_rhs(model);
        CHECK(rhs > prev);
        prev = rhs;
    }
    // More clean blocks make a flip harder: rhs decreases in m toward 1.
    prev = std::numeric_limits<double>::infinity();
    for (int m : {2, 3, 5, 9, 17}) {
        SpikedModel model(3, 1.5, 4.0, 0.1, m);
        const double rhs = hm_flip_rhs(model);
        CHECK(rhs < prev);
        CHECK(rhs > 1.0);
        prev = rhs;
    }
}

TEST_CASE("immunity threshold") {
    CHECK(immunity_threshold(4, 0.1) == doctest::Approx(1.0 + 1.0 / 2.7));
    CHECK(immunity_threshold(2, 0.5) == doctest::Approx(3.0));
    CHECK(std::isinf(immunity_threshold(1, 0.1)));
    CHECK_THROWS_AS(immunity_threshold(0, 0.1), ConfigError);

    // Above the threshold no eta can flip the ordering.
    SpikedModel immune(4, 1.4, 1e12, 0.1, 4);
    CHECK(is_immune(immune));
    CHECK_FALSE(hm_flip_holds(immune));
    // Just below it, a large eta flips.
    SpikedModel fragile(4, 1.35, 1e12, 0.1, 4);
    CHECK_FALSE(is_immune(fragile));
    CHECK(hm_flip_holds(fragile));
}

TEST_CASE("GM flip threshold") {
    // a = 2, m = 3, delta = 0.1: threshold (0.9/0.1)(2^3 - 1) = 63.
    SpikedModel flip(4, 2.0, 100.0, 0.1, 3);
    CHECK(gm_flip_eta_threshold(flip) == doctest::Approx(63.0));
    CHECK(gm_flip_holds(flip));
    SpikedModel hold(4, 2.0, 50.0, 0.1, 3);
    CHECK_FALSE(gm_flip_holds(hold));
    // Threshold diverges as delta -> 0.
    SpikedModel clean(4, 2.0, 100.0, 1e-12, 3);
    CHECK(gm_flip_eta_threshold(clean) > 1e11);

    // Boolean agrees with the matrix-level GM ordering.
    for (double eta : {40.0, 55.0, 70.0, 120.0}) {
        SpikedModel model(3, 2.0, eta, 0.1, 3);
        SpectralDecomp d = eigh(gm_population_aggregate(model));
        Eigen::VectorXd top = d.vectors.col(0);
        const bool leads_noise =
            std::abs(top.dot(model.noise_dir)) > std::abs(top.dot(model.signal_dir));
        CHECK(gm_flip_holds(model) == leads_noise);
    }
}

TEST_CASE("rotated frame gives the same spectrum") {
    Eigen::VectorXd xi(3), nu(3);
    xi << 1.0, 2.0, 2.0;
    xi /= 3.0;
    nu << 2.0, 1.0, -2.0;
    nu /= 3.0;
    SpikedModel rotated(2.2, 6.0, 0.15, 3, xi, nu);
    SpikedModel canonical(3, 2.2, 6.0, 0.15, 3);
    SpectralDecomp a = eigh(hm_population_aggregate(rotated));
    SpectralDecomp b = eigh(hm_population_aggregate(canonical));
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("SpikedModel validation") {
    CHECK_THROWS_AS(SpikedModel(1, 2.0, 2.0, 0.1, 2), ConfigError);
    CHECK_THROWS_AS(SpikedModel(3, 1.0, 2.0, 0.1, 2), ConfigError);
    CHECK_THROWS_AS(SpikedModel(3, 2.0, 1.0, 0.1, 2), ConfigError);
    CHECK_THROWS_AS(SpikedModel(3, 2.0, 2.0, 0.0, 2), ConfigError);
    CHECK_THROWS_AS(SpikedModel(3, 2.0, 2.0, 1.0, 2), ConfigError);
    CHECK_THROWS_AS(SpikedModel(3, 2.0, 2.0, 0.1, 0), ConfigError);
    Eigen::VectorXd xi = Eigen::VectorXd::Unit(3, 0);
    CHECK_THROWS_AS(SpikedModel(2.0, 2.0, 0.1, 2, xi, 2.0 * xi), ConfigError);
    CHECK_THROWS_AS(SpikedModel(2.0, 2.0, 0.1, 2, xi, xi), ConfigError);
}

TEST_CASE("select_m") {
    CHECK(select_m(400) == 20);
    CHECK(select_m(401) == 20);
    CHECK_THROWS_AS(select_m(400, 1e-4, std::optional<double>{}), ConfigError);
    CHECK_THROWS_AS(select_m(400, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(select_m(400, 1e-4, 0.0), ConfigError);
    CHECK_THROWS_AS(select_m(400, 0.49, 1.0), ConfigError);  // m_max < 2

    // Independent scan of 1/((m-1)(1-m eps)) + alpha m eps.
    auto oracle = [](double eps, double alpha) {
        const int m_max = static_cast<int>(std::floor(1.0 / (2.0 * eps)));
        int best_m = 2;
        double best = std::numeric_limits<double>::infinity();
        for (int m = 2; m <= m_max; ++m) {
            const double v = 1.0 / ((m - 1) * (1.0 - m * eps)) + alpha * m * eps;
            if (v < best) {
                best = v;
                best_m = m;
            }
        }
        return best_m;
    };
    for (double eps : {1e-4, 1e-3, 1e-2})
        for (double alpha : {0.1, 1.0, 100.0})
            CHECK(select_m(1000, eps, alpha) == oracle(eps, alpha));

    const int light = select_m(1000, 1e-4, 1.0);
    CHECK(light >= 90);
    CHECK(light <= 110);
    CHECK(select_m(1000, 1e-2, 100.0) <= 3);
}
