#include <doctest.h>

#include <Eigen/Dense>
#include <complex>
#include <random>

#include "canon/core.hpp"

using namespace canon;

namespace {

// independent oracle: roots as companion-matrix eigenvalues
std::vector<cplx> companion_roots(const Poly& p) {
    const int n = p.degree();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) c(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) c(i, n - 1) = -p.coeff(i) / p.coeff(n);
    Eigen::EigenSolver<Eigen::MatrixXd> es(c);
    std::vector<cplx> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = es.eigenvalues()[i];
    std::sort(out.begin(), out.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return out;
}

}  // namespace

TEST_CASE("mat2 products") {
    const Mat2 j = Mat2::J();
    const Mat2 jj = mat2_mul(j, j);
    CHECK(std::abs(jj.m11 + 1.0) < 1e-15);
    CHECK(std::abs(jj.m22 + 1.0) < 1e-15);
    CHECK(std::abs(jj.m12) < 1e-15);

    const Mat2 x{cplx(1, 2), cplx(-0.5, 0), cplx(0, 3), cplx(4, -1)};
    const Mat2 ix = mat2_mul(Mat2::identity(), x);
    CHECK(std::abs(ix.m11 - x.m11) == 0.0);
    CHECK(std::abs(ix.m21 - x.m21) == 0.0);

    // hand multiplication of the worked factorization at lambda = 1
    const Mat2 a{1.0, 0.5, 0.0, 1.0};
    const Mat2 b{1.0, 0.0, -2.0, 1.0};
    const Mat2 ab = a * b;
    CHECK(std::abs(ab.m11 - 0.0) < 1e-15);
    CHECK(std::abs(ab.m12 - 0.5) < 1e-15);
    CHECK(std::abs(ab.m21 + 2.0) < 1e-15);
    CHECK(std::abs(ab.m22 - 1.0) < 1e-15);
}

TEST_CASE("det is multiplicative and symplectic products stay unimodular") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        Mat2 a{cplx(u(rng), u(rng)), cplx(u(rng), u(rng)), cplx(u(rng), u(rng)),
               cplx(u(rng), u(rng))};
        Mat2 b{cplx(u(rng), u(rng)), cplx(u(rng), u(rng)), cplx(u(rng), u(rng)),
               cplx(u(rng), u(rng))};
        const cplx lhs = (a * b).det();
        const cplx rhs = a.det() * b.det();
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
    }
    // chain of det-1 rotations and alternating shears (bounded product)
    Mat2 prod = Mat2::identity();
    for (int k = 0; k < 200; ++k) {
        const double t = 0.1 * k;
        Mat2 rot{std::cos(t), std::sin(t), -std::sin(t), std::cos(t)};
        Mat2 shear{1.0, cplx(k % 2 ? 0.3 : -0.3, 0.0), 0.0, 1.0};
        prod = rot * shear * prod;
    }
    CHECK(std::abs(prod.det() - cplx(1.0)) < 1e-10 * mat2_frobenius(prod));
}

TEST_CASE("mat2_exp agrees with series and preserves unit determinant") {
    const Mat2 a{cplx(0, 1.3), cplx(0.7, 0), cplx(-0.2, 0.4), cplx(0, -1.3)};
    // traceless: det(exp) = 1
    const Mat2 e = mat2_exp(a);
    CHECK(std::abs(e.det() - cplx(1.0)) < 1e-13);
    // series comparison
    Mat2 s = Mat2::identity(), term = Mat2::identity();
    for (int k = 1; k < 40; ++k) {
        term = (cplx(1.0 / k)) * (term * a);
        s = s + term;
    }
    CHECK(mat2_frobenius(e - s) < 1e-12);
}

TEST_CASE("poly_real_roots on stated examples") {
    CHECK(poly_real_roots(Poly({-1, 0, 1})) == std::vector<double>{-1.0, 1.0});
    const auto r = poly_real_roots(Poly({0, -4, 0, 1}));
    REQUIRE(r.size() == 3);
    CHECK(r[0] == doctest::Approx(-2).epsilon(1e-12));
    CHECK(std::abs(r[1]) < 1e-12);
    CHECK(r[2] == doctest::Approx(2).epsilon(1e-12));
    CHECK_THROWS_AS(poly_real_roots(Poly({3.0})), validation_error);
}

TEST_CASE("degree-8 random real-rooted polynomial matches the companion oracle") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> roots(8);
        for (double& r : roots) r = u(rng);
        std::sort(roots.begin(), roots.end());
        // keep roots separated so both routes agree tightly
        bool ok = true;
        for (size_t i = 1; i < roots.size(); ++i)
            if (roots[i] - roots[i - 1] < 0.1) ok = false;
        if (!ok) continue;
        Poly p = Poly::constant(1.0);
        for (double r : roots) p = p * Poly({-r, 1.0});
        const auto mine = poly_real_roots(p);
        const auto oracle = companion_roots(p);
        REQUIRE(mine.size() == 8);
        for (size_t i = 0; i < 8; ++i) {
            CHECK(std::abs(mine[i] - oracle[i].real()) < 1e-8);
            CHECK(std::abs(oracle[i].imag()) < 1e-8);
        }
    }
}

TEST_CASE("poly_complex_roots on stated examples") {
    // 1 - iz
    const auto r1 = poly_complex_roots(CPoly({cplx(1, 0), cplx(0, -1)}));
    REQUIRE(r1.size() == 1);
    CHECK(std::abs(r1[0] - cplx(0, -1)) < 1e-12);

    // (1 - iz)^2 = 1 - 2iz - z^2: double root at -i
    const auto cl = poly_root_clusters(CPoly({cplx(1, 0), cplx(0, -2), cplx(-1, 0)}));
    REQUIRE(cl.size() == 1);
    CHECK(cl[0].multiplicity == 2);
    CHECK(std::abs(cl[0].value - cplx(0, -1)) < 1e-7);

    // z^2 + 1
    const auto r2 = poly_complex_roots(Poly({1, 0, 1}));
    REQUIRE(r2.size() == 2);
    CHECK(std::abs(r2[0] - cplx(0, -1)) < 1e-12);
    CHECK(std::abs(r2[1] - cplx(0, 1)) < 1e-12);
}

TEST_CASE("root multiset reassembles the polynomial") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int deg = 2; deg <= 12; deg += 2) {
        std::vector<double> c(static_cast<size_t>(deg) + 1);
        for (double& v : c) v = u(rng);
        c.back() = 1.0 + std::abs(c.back());
        Poly p(c);
        const auto roots = poly_complex_roots(p);
        CPoly rebuilt({p.coeff(p.degree())});
        for (const cplx& r : roots) rebuilt = rebuilt * CPoly({-r, 1.0});
        double worst = 0.0, scale = 0.0;
        for (int k = 0; k <= p.degree(); ++k) {
            worst = std::max(worst, std::abs(rebuilt.coeff(k) - cplx(p.coeff(k))));
            scale = std::max(scale, std::abs(p.coeff(k)));
        }
        CHECK(worst < 1e-8 * scale);
    }
}

TEST_CASE("real-coefficient roots come in exact conjugate pairs") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> c(9);
        for (double& v : c) v = u(rng);
        c.back() = 1.0;
        const auto roots = poly_complex_roots(Poly(c));
        for (const cplx& r : roots) {
            if (r.imag() == 0.0) continue;
            bool paired = false;
            for (const cplx& s : roots)
                if (s == std::conj(r)) paired = true;
            CHECK(paired);
        }
    }
}

TEST_CASE("tridiagonal eigenvalues match the companion oracle") {
    // char poly of [[-1, sqrt(2)], [sqrt(2), -2]] is l^2 + 3l: roots {0, -3}
    const auto e = tridiagonal_eigenvalues({-1.0, -2.0}, {std::sqrt(2.0)});
    REQUIRE(e.size() == 2);
    CHECK(e[0] == doctest::Approx(-3.0).epsilon(1e-10));
    CHECK(std::abs(e[1]) < 1e-10);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> q(6), rho(5);
    for (double& v : q) v = u(rng);
    for (double& v : rho) v = 0.3 + std::abs(u(rng));
    const auto mine = tridiagonal_eigenvalues(q, rho);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < 6; ++i) m(i, i) = q[static_cast<size_t>(i)];
    for (int i = 0; i < 5; ++i) m(i, i + 1) = m(i + 1, i) = rho[static_cast<size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    for (int i = 0; i < 6; ++i)
        CHECK(mine[static_cast<size_t>(i)] == doctest::Approx(es.eigenvalues()[i]).epsilon(1e-9));
}

TEST_CASE("atomic measure validation") {
    AtomicMeasure mu;
    mu.atoms = {{0.0, 1.0}, {1.0, 2.0}};
    CHECK_NOTHROW(mu.validate());
    mu.atoms.push_back({1.0, 0.5});
    CHECK_THROWS_AS(mu.validate(), validation_error);
    mu.atoms = {{0.0, -1.0}};
    CHECK_THROWS_AS(mu.validate(), validation_error);
}
