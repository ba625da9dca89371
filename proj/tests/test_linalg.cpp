#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "phipca/linalg.hpp"
#include "phipca/rng.hpp"

using namespace phipca;

namespace {

SymMatrix diag(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<int>(values.size()));
    int i = 0;
    for (double d : values) v[i++] = d;
    return SymMatrix(Eigen::MatrixXd(v.asDiagonal()));
}

Eigen::MatrixXd random_orthogonal(int p, std::uint64_t seed) {
    std::mt19937_64 eng = substream(seed, 0, 0x6f727468);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) g(i, j) = gauss(eng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < p; ++j)
        if (rmat(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

}  // namespace

TEST_CASE("SymMatrix validates and symmetrizes") {
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 2.0, 2.0 + 1e-13, 3.0;
    SymMatrix s(a);
    CHECK(s.mat()(0, 1) == s.mat()(1, 0));

    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 5.0, 3.0;
    CHECK_THROWS_AS(SymMatrix{bad}, DomainError);

    Eigen::MatrixXd nan_mat = Eigen::MatrixXd::Zero(2, 2);
    nan_mat(0, 0) = std::nan("");
    CHECK_THROWS_AS(SymMatrix{nan_mat}, DomainError);
}

TEST_CASE("eigh identity") {
    SpectralDecomp d = eigh(SymMatrix::Identity(3));
    for (int j = 0; j < 3; ++j) CHECK(d.values[j] == doctest::Approx(1.0));
    SymMatrix rec(d.vectors * d.values.asDiagonal() * d.vectors.transpose());
    CHECK((rec.mat() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("eigh diagonal case: descending order and sign convention") {
    SpectralDecomp d = eigh(diag({2.0, 5.0, 1.0}));
    CHECK(d.values[0] == doctest::Approx(5.0));
    CHECK(d.values[1] == doctest::Approx(2.0));
    CHECK(d.values[2] == doctest::Approx(1.0));
    // signed permutation of I with positive leading entries
    CHECK(d.vectors.col(0)(1) == doctest::Approx(1.0));
    CHECK(d.vectors.col(1)(0) == doctest::Approx(1.0));
    CHECK(d.vectors.col(2)(2) == doctest::Approx(1.0));
}

TEST_CASE("eigh round trip through a random rotation") {
    Eigen::MatrixXd q = random_orthogonal(2, 42);
    Eigen::VectorXd lam(2);
    lam << 3.0, 1.0;
    SymMatrix a(q * lam.asDiagonal() * q.transpose());
    SpectralDecomp d = eigh(a);
    CHECK(std::abs(d.values[0] - 3.0) < 1e-10);
    CHECK(std::abs(d.values[1] - 1.0) < 1e-10);
}

TEST_CASE("eigh determinism") {
    Eigen::MatrixXd q = random_orthogonal(5, 7);
    Eigen::VectorXd lam(5);
    lam << 9, 5, 3, 2, 1;
    SymMatrix a(q * lam.asDiagonal() * q.transpose());
    SpectralDecomp d1 = eigh(a);
    SpectralDecomp d2 = eigh(a);
    CHECK(d1.values == d2.values);
    CHECK(d1.vectors == d2.vectors);
}

TEST_CASE("matrix_phi basics") {
    PhiSpec half = PhiSpec::power(0.5);
    SymMatrix r1 = matrix_phi(SymMatrix::Identity(3), PhiSpec::power(-1.0));
    CHECK((r1.mat() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

    SymMatrix r2 = matrix_phi(diag({4.0, 1.0}), half);
    CHECK(r2.mat()(0, 0) == doctest::Approx(2.0));
    CHECK(r2.mat()(1, 1) == doctest::Approx(1.0));

    SymMatrix a = diag({3.0, 2.0, 0.5});
    SymMatrix round = matrix_phi(matrix_phi(a, PhiSpec::power(-1.0)), PhiSpec::power(-1.0));
    CHECK((round.mat() - a.mat()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("matrix_phi commutes with its argument and names bad eigenvalues") {
    Eigen::MatrixXd q = random_orthogonal(4, 3);
    Eigen::VectorXd lam(4);
    lam << 4, 2.5, 1.5, 0.5;
    SymMatrix a(q * lam.asDiagonal() * q.transpose());
    SymMatrix fa = matrix_phi(a, PhiSpec::power(-1.0));
    CHECK((a.mat() * fa.mat() - fa.mat() * a.mat()).cwiseAbs().maxCoeff() < 1e-8);

    try {
        matrix_phi(diag({2.0, -1.0}), PhiSpec::power(-1.0));
        CHECK(false);
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("eigenvalue") != std::string::npos);
    }
}

TEST_CASE("matrix_log and matrix_exp") {
    CHECK(matrix_log(SymMatrix::Identity(3)).mat().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((matrix_exp(SymMatrix::Zero(3)).mat() - Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    const double e = std::exp(1.0);
    SymMatrix l = matrix_log(diag({e, e * e}));
    CHECK(l.mat()(0, 0) == doctest::Approx(1.0));  // f(A) acts entrywise on the diagonal
    CHECK(l.mat()(1, 1) == doctest::Approx(2.0));

    Eigen::MatrixXd q = random_orthogonal(3, 9);
    Eigen::VectorXd lam(3);
    lam << 2.0, 1.0, 0.5;
    SymMatrix a(q * lam.asDiagonal() * q.transpose());
    CHECK((matrix_exp(matrix_log(a)).mat() - a.mat()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK_THROWS_AS(matrix_log(diag({1.0, 0.0})), DomainError);
}

TEST_CASE("pinv_shift hand values") {
    SpectralDecomp d31 = eigh(diag({3.0, 1.0}));
    SymMatrix m0 = pinv_shift(d31, 0);
    CHECK(m0.mat()(0, 0) == doctest::Approx(0.0));
    CHECK(m0.mat()(1, 1) == doctest::Approx(0.5));
    CHECK((m0.mat() * d31.vectors.col(0)).norm() < 1e-12);

    SpectralDecomp d421 = eigh(diag({4.0, 2.0, 1.0}));
    SymMatrix m1 = pinv_shift(d421, 1);
    CHECK(m1.mat()(0, 0) == doctest::Approx(-0.5));
    CHECK(m1.mat()(1, 1) == doctest::Approx(0.0));
    CHECK(m1.mat()(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("pinv_shift resolvent identity and degeneracy guard") {
    Eigen::MatrixXd q = random_orthogonal(4, 11);
    Eigen::VectorXd lam(4);
    lam << 6, 3, 2, 1;
    SymMatrix a(q * lam.asDiagonal() * q.transpose());
    SpectralDecomp d = eigh(a);
    for (int j = 0; j < 4; ++j) {
        Eigen::MatrixXd lhs =
            pinv_shift(d, j).mat() * (d.values[j] * Eigen::MatrixXd::Identity(4, 4) - a.mat());
        Eigen::MatrixXd proj =
            Eigen::MatrixXd::Identity(4, 4) - d.vectors.col(j) * d.vectors.col(j).transpose();
        CHECK((lhs - proj).cwiseAbs().maxCoeff() < 1e-8);
    }
    SpectralDecomp tied = eigh(diag({2.0, 2.0 + 1e-15, 1.0}));
    CHECK_THROWS_AS(pinv_shift(tied, 0), DomainError);
}

TEST_CASE("principal_singulars basics") {
    Eigen::MatrixXd gr = Eigen::MatrixXd::Identity(4, 2);
    Eigen::MatrixXd bq = Eigen::MatrixXd::Identity(4, 3);
    Eigen::VectorXd s = principal_singulars(bq, gr);
    CHECK(s.size() == 2);
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(s[1] == doctest::Approx(1.0));

    Eigen::MatrixXd perp = Eigen::MatrixXd::Zero(4, 2);
    perp(2, 0) = 1.0;
    perp(3, 1) = 1.0;
    Eigen::VectorXd z = principal_singulars(perp, gr);
    CHECK(z.cwiseAbs().maxCoeff() < 1e-12);

    const double theta = M_PI / 6.0;
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(3, 1);
    g1(0, 0) = 1.0;
    Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(3, 1);
    b1(0, 0) = std::cos(theta);
    b1(1, 0) = std::sin(theta);
    CHECK(principal_singulars(b1, g1)[0] == doctest::Approx(std::cos(theta)));
}

TEST_CASE("principal_singulars rotation invariance and validation") {
    Eigen::MatrixXd q = random_orthogonal(6, 13);
    Eigen::MatrixXd bq = q.leftCols(4);
    Eigen::MatrixXd gr = random_orthogonal(6, 17).leftCols(2);
    Eigen::VectorXd base = principal_singulars(bq, gr);
    Eigen::MatrixXd rot = random_orthogonal(4, 19);
    Eigen::VectorXd rotated = principal_singulars(bq * rot, gr);
    CHECK((base - rotated).cwiseAbs().maxCoeff() < 1e-8);

    Eigen::MatrixXd not_ortho = Eigen::MatrixXd::Ones(6, 2);
    CHECK_THROWS_AS(principal_singulars(not_ortho, gr), DomainError);
}

TEST_CASE("commutation matrix and Gaussian fourth moment") {
    CHECK(commutation_matrix(1)(0, 0) == doctest::Approx(1.0));
    SymMatrix sigma1 = diag({1.7});
    CHECK(gaussian_fourth_moment(sigma1)(0, 0) == doctest::Approx(2.0 * 1.7 * 1.7));

    for (int p : {2, 3, 5}) {
        Eigen::MatrixXd k = commutation_matrix(p);
        CHECK((k * k - Eigen::MatrixXd::Identity(p * p, p * p)).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::MatrixXd a = random_orthogonal(p, 23 + p) * 2.0;
        Eigen::Map<const Eigen::VectorXd> vec_a(a.data(), p * p);
        Eigen::MatrixXd at = a.transpose();
        Eigen::Map<const Eigen::VectorXd> vec_at(at.data(), p * p);
        CHECK((k * vec_a - vec_at).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK_THROWS_AS(commutation_matrix(51), ConfigError);
}

TEST_CASE("Gaussian fourth moment matches Monte Carlo at p=2, Sigma=I") {
    const int p = 2;
    Eigen::MatrixXd expected = gaussian_fourth_moment(SymMatrix::Identity(p));
    std::mt19937_64 eng = substream(1, 0, 0x6d633474);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int draws = 1000000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p * p);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p * p, p * p);
    for (int t = 0; t < draws; ++t) {
        Eigen::VectorXd z(p);
        for (int i = 0; i < p; ++i) z[i] = gauss(eng);
        Eigen::MatrixXd outer = z * z.transpose();
        Eigen::Map<const Eigen::VectorXd> v(outer.data(), p * p);
        mean += v;
        second += v * v.transpose();
    }
    mean /= draws;
    second /= draws;
    Eigen::MatrixXd cov = second - mean * mean.transpose();
    CHECK((cov - expected).norm() / expected.norm() < 0.02);
}

TEST_CASE("kron sizes and values") {
    Eigen::MatrixXd a(1, 2);
    a << 2, 3;
    Eigen::MatrixXd b(2, 1);
    b << 1, 4;
    Eigen::MatrixXd k = kron(a, b);
    REQUIRE(k.rows() == 2);
    REQUIRE(k.cols() == 2);
    CHECK(k(0, 0) == doctest::Approx(2.0));
    CHECK(k(1, 0) == doctest::Approx(8.0));
    CHECK(k(0, 1) == doctest::Approx(3.0));
    CHECK(k(1, 1) == doctest::Approx(12.0));
}
