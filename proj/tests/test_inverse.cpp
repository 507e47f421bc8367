#include <doctest.h>

#include <cmath>
#include <random>

#include "canon/debranges.hpp"
#include "canon/evolve.hpp"
#include "canon/inverse.hpp"

using namespace canon;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

HBPolynomial hb_square() { return HBPolynomial{Poly({1.0, 0.0, -1.0}), Poly({0.0, -2.0}), true}; }

AtomicMeasure random_measure(std::mt19937& rng, int atoms) {
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
    return mu;
}

double max_coeff_dev(const Poly& a, const Poly& b) {
    double dev = 0.0;
    for (int k = 0; k <= std::max(a.degree(), b.degree()); ++k)
        dev = std::max(dev, std::abs(a.coeff(k) - b.coeff(k)));
    return dev;
}

}  // namespace

TEST_CASE("factor_step on the worked square example") {
    const FactorizationStep step = factor_step(hb_square());
    // S = [[0, -1/2],[0, 0]]
    CHECK(std::abs(step.s_matrix.m11) < 1e-10);
    CHECK(step.s_matrix.m12.real() == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(std::abs(step.s_matrix.m21) < 1e-10);
    // remainder 1 - 2i lambda
    CHECK(step.remainder.theta_plus.degree() == 0);
    CHECK(step.remainder.theta_plus.coeff(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(step.remainder.theta_minus.coeff(1) == doctest::Approx(-2.0).epsilon(1e-9));
    // extracted factor I - l S = I + l R with R12 = 1/2 >= 0, R21 = 0
    CHECK(step.segment.length == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::cos(step.segment.angle) == doctest::Approx(0.0).epsilon(1e-8));

    // degree-1 input is the terminal case
    CHECK_THROWS_AS(factor_step(step.remainder), validation_error);
}

TEST_CASE("segment_from_nilpotent on the stated examples") {
    // R = [[0,1],[0,0]] -> length 1, e = (0,1)
    Segment s = segment_from_nilpotent(Mat2{0.0, 1.0, 0.0, 0.0});
    CHECK(s.length == doctest::Approx(1.0));
    CHECK(std::abs(std::cos(s.angle)) < 1e-14);

    // R = [[0,0],[-1,0]] -> length 1, e = (1,0)
    s = segment_from_nilpotent(Mat2{0.0, 0.0, -1.0, 0.0});
    CHECK(s.length == doctest::Approx(1.0));
    CHECK(std::cos(s.angle) == doctest::Approx(1.0));

    // R = [[1,1],[-1,-1]] -> length 2, e = (1,1)/sqrt2
    s = segment_from_nilpotent(Mat2{1.0, 1.0, -1.0, -1.0});
    CHECK(s.length == doctest::Approx(2.0));
    CHECK(s.angle == doctest::Approx(kPi / 4.0));

    CHECK_THROWS_AS(segment_from_nilpotent(Mat2{0.0, 0.0, 0.0, 0.0}), validation_error);
    // wrong sign pattern
    CHECK_THROWS_AS(segment_from_nilpotent(Mat2{0.0, -1.0, 0.0, 0.0}), validation_error);
}

TEST_CASE("terminal segment") {
    // a = 0, b = -1 -> length 1, e = (1,0)
    Segment s = terminal_segment(HBPolynomial{Poly({1.0}), Poly({0.0, -1.0}), true});
    CHECK(s.length == doctest::Approx(1.0));
    CHECK(std::cos(s.angle) == doctest::Approx(1.0));

    // a = 1, b = -1 -> length 2, e = (1,1)/sqrt2
    s = terminal_segment(HBPolynomial{Poly({1.0, 1.0}), Poly({0.0, -1.0}), true});
    CHECK(s.length == doctest::Approx(2.0));
    CHECK(s.angle == doctest::Approx(kPi / 4.0));

    // b = +1 is not HB
    CHECK_THROWS_AS(terminal_segment(HBPolynomial{Poly({1.0}), Poly({0.0, 1.0}), true}),
                    validation_error);
}

TEST_CASE("polynomial inverse on the worked examples") {
    // E = 1 - iz: single segment, length 1, e = (1,0)
    const Hamiltonian h1 =
        solve_polynomial_inverse(HBPolynomial{Poly({1.0}), Poly({0.0, -1.0}), true});
    REQUIRE(h1.segments.size() == 1);
    CHECK(h1.segments[0].length == doctest::Approx(1.0));
    CHECK(std::cos(h1.segments[0].angle) == doctest::Approx(1.0));

    // E = (1 - iz)^2: [(0,2): e=(1,0)], [(2,2.5): e=(0,1)]
    const Hamiltonian h2 = solve_polynomial_inverse(hb_square());
    REQUIRE(h2.segments.size() == 2);
    CHECK(h2.segments[0].length == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(std::abs(std::sin(h2.segments[0].angle)) < 1e-8);
    CHECK(h2.segments[1].length == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(std::abs(std::cos(h2.segments[1].angle)) < 1e-8);
    CHECK(h2.total_length() == doctest::Approx(system_length_from_e(hb_square())).epsilon(1e-8));
}

TEST_CASE("telescoping factorization and sign invariants") {
    std::mt19937 rng(3);
    const AtomicMeasure mu = random_measure(rng, 6);
    const HBPolynomial hb = theta_from_atoms(mu, 0.0);

    HBPolynomial cur = hb;
    Poly prod_tp = Poly::constant(1.0), prod_tm, prod_pp, prod_pm = Poly::constant(1.0);
    const Poly lam = Poly::monomial(1);
    while (cur.degree() >= 2) {
        const FactorizationStep step = factor_step(cur);
        // invariants of S
        const Mat2& s = step.s_matrix;
        const double scale = mat2_frobenius(s);
        CHECK(std::abs(s.det()) <= 1e-9 * scale * scale);
        CHECK(std::abs(s.trace()) <= 1e-9 * scale);
        CHECK(s.m12.real() <= 1e-9 * scale);
        CHECK(s.m21.real() >= -1e-9 * scale);

        // accumulate the product (I - l S) ... applied to the remainder: it
        // must reproduce Theta after each step
        const Mat2 r{-s.m11, -s.m12, -s.m21, -s.m22};
        const Poly f11 = Poly::constant(1.0) + lam * Poly::constant(r.m11.real());
        const Poly f12 = lam * Poly::constant(r.m12.real());
        const Poly f21 = lam * Poly::constant(r.m21.real());
        const Poly f22 = Poly::constant(1.0) + lam * Poly::constant(r.m22.real());
        const Poly ntp = prod_tp * f11 + prod_pp * f21;
        const Poly npp = prod_tp * f12 + prod_pp * f22;
        const Poly ntm = prod_tm * f11 + prod_pm * f21;
        const Poly npm = prod_tm * f12 + prod_pm * f22;
        prod_tp = ntp;
        prod_pp = npp;
        prod_tm = ntm;
        prod_pm = npm;

        const Poly rebuilt_tp = prod_tp * step.remainder.theta_plus +
                                prod_pp * step.remainder.theta_minus;
        const Poly rebuilt_tm = prod_tm * step.remainder.theta_plus +
                                prod_pm * step.remainder.theta_minus;
        double scale_theta = 1.0;
        for (double c : hb.theta_plus.coeffs()) scale_theta = std::max(scale_theta, std::abs(c));
        CHECK(max_coeff_dev(rebuilt_tp, hb.theta_plus) < 1e-7 * scale_theta);
        CHECK(max_coeff_dev(rebuilt_tm, hb.theta_minus) < 1e-7 * scale_theta);
        cur = step.remainder;
    }
}

TEST_CASE("polynomial inverse roundtrip on random measures") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 12; ++trial) {
        const AtomicMeasure mu = random_measure(rng, 2 + trial % 5);
        const HBPolynomial hb = theta_from_atoms(mu, 0.0);
        const Hamiltonian h = solve_polynomial_inverse(hb);
        CHECK(static_cast<int>(h.segments.size()) == hb.degree());
        const MonodromyPoly mp = monodromy_polynomial(h);
        double scale = 1.0;
        for (double c : hb.theta_plus.coeffs()) scale = std::max(scale, std::abs(c));
        for (double c : hb.theta_minus.coeffs()) scale = std::max(scale, std::abs(c));
        CHECK(max_coeff_dev(mp.theta_plus, hb.theta_plus) < 1e-7 * scale);
        CHECK(max_coeff_dev(mp.theta_minus, hb.theta_minus) < 1e-7 * scale);
    }
}

TEST_CASE("theta_from_atoms on stated examples") {
    // {0: 1}, d1 = 0 -> Theta = (1, -z)
    AtomicMeasure single;
    single.atoms = {{0.0, 1.0}};
    const HBPolynomial hb1 = theta_from_atoms(single, 0.0);
    CHECK(hb1.theta_plus.degree() == 0);
    CHECK(hb1.theta_minus.coeff(1) == doctest::Approx(-1.0));

    // {0: 1, 1: 1}: Theta- = z^2 - z, Theta+ = 1 - 2z
    AtomicMeasure two;
    two.atoms = {{0.0, 1.0}, {1.0, 1.0}};
    const HBPolynomial hb2 = theta_from_atoms(two, 0.0);
    CHECK(hb2.theta_minus.coeff(2) == doctest::Approx(1.0));
    CHECK(hb2.theta_minus.coeff(1) == doctest::Approx(-1.0));
    CHECK(hb2.theta_plus.coeff(0) == doctest::Approx(1.0));
    CHECK(hb2.theta_plus.coeff(1) == doctest::Approx(-2.0));
    CHECK(is_hermite_biehler(hb2).is_hb);
    // residues: -1/(Theta+(t_j) dTheta-(t_j)) = 1 at both atoms
    const Poly dtm = hb2.theta_minus.derivative();
    for (double t : {0.0, 1.0})
        CHECK(-1.0 / (hb2.theta_plus(t) * dtm(t)) == doctest::Approx(1.0).epsilon(1e-12));

    // no atom at 0 -> error
    AtomicMeasure bad;
    bad.atoms = {{1.0, 1.0}};
    CHECK_THROWS_AS(theta_from_atoms(bad, 0.0), validation_error);
}

TEST_CASE("finite measure inverse and its spectral roundtrip") {
    // {0: 1} -> single rank-one segment e = (1,0), length 1
    AtomicMeasure single;
    single.atoms = {{0.0, 1.0}};
    const Hamiltonian h1 = solve_finite_measure_inverse(single, 0.0);
    REQUIRE(h1.segments.size() == 1);
    CHECK(h1.segments[0].length == doctest::Approx(1.0));
    CHECK(std::cos(h1.segments[0].angle) == doctest::Approx(1.0));

    std::mt19937 rng(9);
    for (int trial = 0; trial < 8; ++trial) {
        const AtomicMeasure mu = random_measure(rng, 2 + trial % 5);
        const Hamiltonian h = solve_finite_measure_inverse(mu, 0.0);
        double span = 1.0;
        for (const auto& atom : mu.atoms) span = std::max(span, std::abs(atom.t));
        const AtomicMeasure back = spectral_measure_alpha(h, kPi / 2.0, -span - 1.0, span + 1.0);
        REQUIRE(back.atoms.size() == mu.atoms.size());
        for (size_t i = 0; i < mu.atoms.size(); ++i) {
            CHECK(std::abs(back.atoms[i].t - mu.atoms[i].t) < 1e-7);
            CHECK(std::abs(back.atoms[i].w - mu.atoms[i].w) < 1e-6 * mu.atoms[i].w);
        }
    }
}

TEST_CASE("d1 gauge changes the Hamiltonian but not the spectral measure") {
    std::mt19937 rng(13);
    const AtomicMeasure mu = random_measure(rng, 4);
    for (double d1 : {-1.0, 0.0, 1.0}) {
        const Hamiltonian h = solve_finite_measure_inverse(mu, d1);
        const AtomicMeasure back = spectral_measure_alpha(h, kPi / 2.0, -6.5, 6.5);
        REQUIRE(back.atoms.size() == mu.atoms.size());
        for (size_t i = 0; i < mu.atoms.size(); ++i) {
            CHECK(std::abs(back.atoms[i].t - mu.atoms[i].t) < 1e-7);
            CHECK(std::abs(back.atoms[i].w - mu.atoms[i].w) < 1e-6 * mu.atoms[i].w);
        }
    }
}

TEST_CASE("regular inverse: polynomial case is exact once all zeros are used") {
    std::mt19937 rng(17);
    const AtomicMeasure mu = random_measure(rng, 4);
    const HBPolynomial hb = theta_from_atoms(mu, 0.0);
    const HerglotzData hd = herglotz_decomposition(hb);

    RegularHBSpec spec;
    // order the poles by |t| with t0 = 0
    std::vector<size_t> idx(hd.poles.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return std::abs(hd.poles[a]) < std::abs(hd.poles[b]); });
    for (size_t i : idx) {
        spec.zeros.push_back(hd.poles[i]);
        spec.residues.push_back(hd.residues[i]);
    }
    spec.a = hd.a;
    spec.b = hd.b;
    spec.dtheta_minus_0 = hb.theta_minus.coeff(1);

    const double expect_len = system_length_from_e(hb);
    CHECK(regular_spec_length(spec) == doctest::Approx(expect_len).epsilon(1e-10));

    const RegularInverseResult res = regular_inverse(spec, 4, 32);
    CHECK(res.length == doctest::Approx(expect_len).epsilon(1e-10));
    // F equals the accumulated Hamiltonian of the exact polynomial inverse
    const Hamiltonian exact = solve_polynomial_inverse(hb);
    for (size_t k = 0; k < res.grid.size(); ++k) {
        const Sym2 expected = accumulated_hamiltonian(exact, res.grid[k]);
        CHECK(std::abs(res.f_values[k].a11 - expected.a11) < 1e-8);
        CHECK(std::abs(res.f_values[k].a12 - expected.a12) < 1e-8);
        CHECK(std::abs(res.f_values[k].a22 - expected.a22) < 1e-8);
    }
}

namespace {

// free-system spec data: zeros 2 pi j / L, residues -2/L, dTheta-(0) = -L/2
RegularHBSpec free_spec(double length, int zero_count) {
    RegularHBSpec spec;
    spec.zeros.push_back(0.0);
    spec.residues.push_back(-2.0 / length);
    for (int j = 1; j <= zero_count; ++j) {
        spec.zeros.push_back(2.0 * kPi * j / length);
        spec.residues.push_back(-2.0 / length);
        spec.zeros.push_back(-2.0 * kPi * j / length);
        spec.residues.push_back(-2.0 / length);
    }
    spec.a = 0.0;
    spec.b = 0.0;
    spec.dtheta_minus_0 = -length / 2.0;
    return spec;
}

}  // namespace

TEST_CASE("regular inverse approaches the free system") {
    const RegularHBSpec spec = free_spec(kPi, 4000);
    CHECK(regular_spec_length(spec) == doctest::Approx(kPi).epsilon(1e-6 / kPi));

    // the diag(0,1) pad of length L - L_N ~ 1.13/sqrt(N) dominates the error
    double prev_sup = 1e9;
    for (const int n : {9, 13, 20}) {
        const RegularInverseResult res = regular_inverse(spec, n, 64);
        CHECK(res.length == doctest::Approx(kPi).epsilon(1e-6 / kPi));
        double sup = 0.0;
        for (size_t k = 0; k < res.grid.size(); ++k) {
            const double x = res.grid[k];
            sup = std::max({sup, std::abs(res.f_values[k].a11 - x / 2.0),
                            std::abs(res.f_values[k].a12),
                            std::abs(res.f_values[k].a22 - x / 2.0)});
        }
        CHECK(sup < 1.4 / std::sqrt(static_cast<double>(n)));
        CHECK(sup < prev_sup);
        prev_sup = sup;
        // Cauchy increments shrink along the ladder
        REQUIRE(res.cauchy_increments.size() == 2);
        CHECK(res.cauchy_increments[1] < res.cauchy_increments[0]);
    }
}
