#include <doctest.h>

#include <cmath>
#include <random>

#include "canon/debranges.hpp"
#include "canon/evolve.hpp"
#include "canon/inverse.hpp"

using namespace canon;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
const cplx kI{0.0, 1.0};

// E = 1 - iz
HBPolynomial hb_linear() { return HBPolynomial{Poly({1.0}), Poly({0.0, -1.0}), true}; }
// E = (1 - iz)^2: Theta+ = 1 - z^2, Theta- = -2z
HBPolynomial hb_square() { return HBPolynomial{Poly({1.0, 0.0, -1.0}), Poly({0.0, -2.0}), true}; }

// deterministic strict HB polynomial from a random atomic measure
HBPolynomial random_hb(std::mt19937& rng, int atoms, double d1 = 0.0) {
    std::uniform_real_distribution<double> upos(-5.0, 5.0), uw(0.2, 3.0);
    AtomicMeasure mu;
    mu.atoms.push_back({0.0, uw(rng)});
    while (static_cast<int>(mu.atoms.size()) < atoms) {
        const double t = upos(rng);
        bool ok = std::abs(t) > 0.3;
        for (const auto& atom : mu.atoms) ok = ok && std::abs(atom.t - t) > 0.3;
        if (ok) mu.atoms.push_back({t, uw(rng)});
    }
    mu.sort_atoms();
    return theta_from_atoms(mu, d1);
}

std::vector<cplx> upper_points(int count) {
    std::vector<cplx> pts;
    for (int i = 1; i <= count; ++i) {
        const double a = std::fmod(0.618033988749895 * i, 1.0);
        const double b = std::fmod(0.754877666246693 * i, 1.0);
        pts.emplace_back(8.0 * a - 4.0, 0.05 + 3.0 * b);
    }
    return pts;
}

}  // namespace

TEST_CASE("theta/E conversion") {
    // E = 1 - iz -> Theta+ = 1, Theta- = -z
    const HBPolynomial hb = theta_from_e(CPoly({cplx(1, 0), cplx(0, -1)}));
    CHECK(hb.theta_plus.degree() == 0);
    CHECK(hb.theta_plus.coeff(0) == 1.0);
    CHECK(hb.theta_minus.coeff(1) == -1.0);

    // Theta+ = 1 - z^2, Theta- = -2z -> E = (1 - iz)^2 = 1 - 2iz - z^2
    const CPoly e = e_from_theta(hb_square());
    CHECK(std::abs(e.coeff(0) - cplx(1, 0)) < 1e-15);
    CHECK(std::abs(e.coeff(1) - cplx(0, -2)) < 1e-15);
    CHECK(std::abs(e.coeff(2) - cplx(-1, 0)) < 1e-15);

    // roundtrip
    std::mt19937 rng(5);
    const HBPolynomial h2 = random_hb(rng, 4);
    const HBPolynomial back = theta_from_e(e_from_theta(h2));
    for (int k = 0; k <= h2.theta_plus.degree(); ++k)
        CHECK(back.theta_plus.coeff(k) == h2.theta_plus.coeff(k));
}

TEST_CASE("is_hermite_biehler") {
    CHECK(is_hermite_biehler(CPoly({cplx(1, 0), cplx(0, -1)})).is_hb);       // 1 - iz
    CHECK_FALSE(is_hermite_biehler(CPoly({cplx(1, 0), cplx(0, 1)})).is_hb);  // 1 + iz
    CHECK(is_hermite_biehler(CPoly({cplx(1, 0), cplx(0, -2), cplx(-1, 0)})).is_hb);
    const HBCheck chk = is_hermite_biehler(CPoly({cplx(1, 0), cplx(0, -1)}));
    CHECK(chk.margin == doctest::Approx(1.0));
}

TEST_CASE("reproducing kernel") {
    // E = 1 - iz: K == 1/pi
    const HBPolynomial hb = hb_linear();
    for (const cplx z : {cplx(0.3, 0.2), cplx(-2.0, 1.0), cplx(0.0, 0.0)})
        CHECK(std::abs(reproducing_kernel(hb, cplx(0.5, 0.7), z) - cplx(1.0 / kPi)) < 1e-14);

    // diagonal consistency with the |E|^2 difference at random lambda
    std::mt19937 rng(7);
    const HBPolynomial h2 = random_hb(rng, 4);
    const CPoly e = h2.e();
    for (const cplx lam : upper_points(20)) {
        const cplx diag = reproducing_kernel(h2, lam, lam);
        const double expect =
            (std::norm(e(lam)) - std::norm(e(std::conj(lam)))) / (4.0 * kPi * lam.imag());
        CHECK(diag.real() == doctest::Approx(expect).epsilon(1e-8));
        CHECK(std::abs(diag.imag()) < 1e-8 * std::abs(expect));
    }

    // free-system kernel at lambda = 0: K_0(z) = Theta-(z)/(-pi z) = sin(pi z/2)/(pi z)
    Hamiltonian free_h;
    free_h.trace_normalized = true;
    free_h.segments.push_back(Segment::constant(kPi, {0.5, 0.0, 0.5}));
    const cplx z(1.3, 0.4);
    const Mat2 m = monodromy(free_h, z, kPi);
    const cplx k0 = kernel_from_theta(m.m11, m.m21, cplx(1.0), cplx(0.0), cplx(0.0), z);
    CHECK(std::abs(k0 - std::sin(kPi * z / 2.0) / (kPi * z)) < 1e-10);
}

TEST_CASE("inner product: residue route against closed forms") {
    // <1, 1> for E = 1 - iz is pi
    const HBPolynomial hb = hb_linear();
    const cplx one = inner_product(CPoly({cplx(1.0)}), CPoly({cplx(1.0)}), hb);
    CHECK(one.real() == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(std::abs(one.imag()) < 1e-12);

    // degree gate
    CHECK_THROWS_AS(inner_product(CPoly({cplx(0), cplx(1)}), CPoly({cplx(1)}), hb),
                    validation_error);
}

TEST_CASE("inner product: reproducing property and quadrature agreement") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 4; ++trial) {
        const HBPolynomial hb = random_hb(rng, 4);
        // <K_lam, K_mu> = K_mu(lam)
        const cplx lam(0.7, 0.9), mu(-1.1, 0.4);
        const CPoly klam = kernel_polynomial(hb, lam);
        const CPoly kmu = kernel_polynomial(hb, mu);
        const cplx ip = inner_product(klam, kmu, hb);
        const cplx expect = klam(mu);
        CHECK(std::abs(ip - expect) < 1e-9 * (1.0 + std::abs(expect)));
        // Hermitian kernel symmetry
        CHECK(std::abs(expect - std::conj(kmu(lam))) < 1e-12 * (1.0 + std::abs(expect)));

        // residues vs adaptive quadrature on random polynomial pairs
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<cplx> fc(3), gc(4);
        for (cplx& c : fc) c = cplx(u(rng), u(rng));
        for (cplx& c : gc) c = cplx(u(rng), u(rng));
        const CPoly f(fc), g(gc);
        const cplx a = inner_product(f, g, hb);
        const cplx b = inner_product_quadrature(f, g, hb);
        CHECK(std::abs(a - b) < 1e-7 * (1.0 + std::abs(a)));
    }
}

TEST_CASE("inner product handles the double root through the multiple-root residue") {
    // E = (1 - iz)^2: <t, t> = integral t^2/(1+t^2)^2 = pi/2
    const HBPolynomial hb = hb_square();
    const CPoly t({cplx(0.0), cplx(1.0)});
    const cplx v = inner_product(t, t, hb);
    CHECK(v.real() == doctest::Approx(kPi / 2.0).epsilon(1e-9));
    // <1, t> = 0 by symmetry
    const cplx w = inner_product(CPoly({cplx(1.0)}), t, hb);
    CHECK(std::abs(w) < 1e-10);
}

TEST_CASE("herglotz decomposition") {
    // Theta+ = 1 - z^2, Theta- = -2z: single pole 0, mu = -1/2, a = 0, b = 1/2
    const HerglotzData hd = herglotz_decomposition(hb_square());
    REQUIRE(hd.poles.size() == 1);
    CHECK(std::abs(hd.poles[0]) < 1e-12);
    CHECK(hd.residues[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(hd.a == doctest::Approx(0.0));
    CHECK(hd.b == doctest::Approx(0.5));

    // Theta+ = 1, Theta- = -z/mu0: pole 0, residue -mu0
    const double mu0 = 0.73;
    const HerglotzData h2 =
        herglotz_decomposition(HBPolynomial{Poly({1.0}), Poly({0.0, -1.0 / mu0}), true});
    CHECK(h2.residues[0] == doctest::Approx(-mu0).epsilon(1e-12));
    CHECK(h2.b == 0.0);

    // residues of a constructed pair match the stated identity
    std::mt19937 rng(41);
    const HBPolynomial hb = random_hb(rng, 5);
    const HerglotzData h3 = herglotz_decomposition(hb);
    const Poly dtm = hb.theta_minus.derivative();
    for (size_t j = 0; j < h3.poles.size(); ++j) {
        CHECK(h3.residues[j] < 0.0);
        CHECK(h3.residues[j] ==
              doctest::Approx(hb.theta_plus(h3.poles[j]) / dtm(h3.poles[j])).epsilon(1e-9));
    }

    // free system: Theta+/Theta- = -cot(zL/2) has residues -2/L at 2 pi k / L
    // and no affine part (cotangent partial fractions)
    const double length = 2.0;
    const cplx z(0.7, 1.1);
    cplx sum = 0.0;
    const int big_k = 200000;
    for (int k = -big_k; k <= big_k; ++k) sum += (-2.0 / length) / (z - 2.0 * kPi * k / length);
    const cplx target = -std::cos(z * length / 2.0) / std::sin(z * length / 2.0);
    CHECK(std::abs(sum - target) < 1e-4);
}

TEST_CASE("second column reconstruction on the worked examples") {
    // E = 1 - iz -> Phi = (0, 1)
    const SecondColumn c1 = reconstruct_second_column(hb_linear());
    CHECK(c1.phi_plus.is_zero());
    CHECK(c1.phi_minus.degree() == 0);
    CHECK(c1.phi_minus.coeff(0) == doctest::Approx(1.0).epsilon(1e-12));

    // E = (1 - iz)^2 -> Phi+ = z/2, Phi- = 1
    const SecondColumn c2 = reconstruct_second_column(hb_square());
    CHECK(c2.phi_plus.degree() == 1);
    CHECK(c2.phi_plus.coeff(1) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(c2.phi_minus.degree() == 0);
    CHECK(c2.phi_minus.coeff(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("second column reconstruction satisfies its contracts on random inputs") {
    std::mt19937 rng(13);
    for (int trial = 0; trial < 6; ++trial) {
        const HBPolynomial hb = random_hb(rng, 3 + trial % 4);
        const SecondColumn sc = reconstruct_second_column(hb);  // throws if any check fails
        // cross-check against the actual monodromy second column
        const Hamiltonian h = solve_polynomial_inverse(hb);
        const MonodromyPoly mp = monodromy_polynomial(h);
        double scale = 1.0;
        for (double c : mp.phi_plus.coeffs()) scale = std::max(scale, std::abs(c));
        for (int k = 0; k <= mp.phi_plus.degree(); ++k)
            CHECK(std::abs(sc.phi_plus.coeff(k) - mp.phi_plus.coeff(k)) < 1e-6 * scale);
        for (int k = 0; k <= mp.phi_minus.degree(); ++k)
            CHECK(std::abs(sc.phi_minus.coeff(k) - mp.phi_minus.coeff(k)) < 1e-6 * scale);
    }
}

TEST_CASE("system length from E") {
    CHECK(system_length_from_e(hb_linear()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(system_length_from_e(hb_square()) == doctest::Approx(2.5).epsilon(1e-10));

    // matches the total length of the polynomial inverse on random inputs
    std::mt19937 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const HBPolynomial hb = random_hb(rng, 4);
        const Hamiltonian h = solve_polynomial_inverse(hb);
        CHECK(system_length_from_e(hb) == doctest::Approx(h.total_length()).epsilon(1e-8));
    }
}

TEST_CASE("numeric type") {
    // polynomials have zero exponential type
    std::mt19937 rng(19);
    const HBPolynomial hb = random_hb(rng, 5);
    CHECK(std::abs(numeric_type(hb, 1e4)) <= 0.02);

    // free-system E with L = 2: |E(iy)| = e^{yL/2}, type 1
    Hamiltonian free_h;
    free_h.trace_normalized = true;
    free_h.segments.push_back(Segment::constant(2.0, {0.5, 0.0, 0.5}));
    const double t = numeric_type(
        [&](double y) {
            const ScaledMat2 sm = monodromy_scaled(free_h, cplx(0.0, y), 2.0);
            return sm.log_scale + std::log(std::abs(sm.m.m11 + kI * sm.m.m21));
        },
        4e3);
    CHECK(t == doctest::Approx(1.0).epsilon(0.02));

    // types add under multiplication of free-system E's
    Hamiltonian other;
    other.trace_normalized = true;
    other.segments.push_back(Segment::constant(3.0, {0.5, 0.0, 0.5}));
    const double t2 = numeric_type(
        [&](double y) {
            const ScaledMat2 a = monodromy_scaled(free_h, cplx(0.0, y), 2.0);
            const ScaledMat2 b = monodromy_scaled(other, cplx(0.0, y), 3.0);
            return a.log_scale + b.log_scale +
                   std::log(std::abs((a.m.m11 + kI * a.m.m21) * (b.m.m11 + kI * b.m.m21)));
        },
        4e3);
    CHECK(t2 == doctest::Approx(2.5).epsilon(0.02));
}

TEST_CASE("membership check") {
    std::mt19937 rng(23);
    const HBPolynomial hb = random_hb(rng, 4);
    // kernels belong to the space
    CHECK(membership_check(kernel_polynomial(hb, cplx(0.4, 0.8)), hb));
    // E itself does not (degree too high)
    CHECK_FALSE(membership_check(hb.e(), hb));
    // (Theta+ - 1)/z does
    const CPoly w = (CPoly(hb.theta_plus) - CPoly({cplx(1.0)})).deflate(cplx(0.0));
    CHECK(membership_check(w, hb));
}

TEST_CASE("Herglotz property of Theta+/Theta- for produced HB polynomials") {
    std::mt19937 rng(29);
    const HBPolynomial hb = random_hb(rng, 5);
    const CPoly tp(hb.theta_plus), tm(hb.theta_minus);
    for (const cplx& z : upper_points(100)) CHECK((tp(z) / tm(z)).imag() > 0.0);
}

TEST_CASE("|E| is monotone in the imaginary direction") {
    std::mt19937 rng(31);
    const HBPolynomial hb = random_hb(rng, 4);
    const CPoly e = hb.e();
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 20; ++i) {
        const double k = u(rng);
        double prev = std::abs(e(cplx(k, 0.0)));
        for (double eps = 0.25; eps <= 4.0; eps += 0.25) {
            const double cur = std::abs(e(cplx(k, eps)));
            CHECK(cur >= prev * (1.0 - 1e-10));
            prev = cur;
        }
    }
}

TEST_CASE("kernel expansion over the zeros of Theta+ reconstructs elements") {
    std::mt19937 rng(37);
    const HBPolynomial hb = random_hb(rng, 4, 0.7);  // d1 != 0: deg Theta+ = deg E
    REQUIRE(hb.theta_plus.degree() == hb.degree());  // Theta+ not in H(E)
    const std::vector<double> taus = poly_real_roots(hb.theta_plus);
    // f = K_w for a fixed w
    const CPoly f = kernel_polynomial(hb, cplx(0.3, 0.5));
    cplx recon_at = 0.0;
    const cplx probe(1.1, 0.0);
    for (double tau : taus) {
        const CPoly ktau = kernel_polynomial(hb, cplx(tau, 0.0));
        const cplx coeff = inner_product(f, ktau, hb) / inner_product(ktau, ktau, hb);
        recon_at += coeff * ktau(probe);
    }
    CHECK(std::abs(recon_at - f(probe)) < 1e-7 * (1.0 + std::abs(f(probe))));
}
