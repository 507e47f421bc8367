#include <doctest.h>

#include <cmath>
#include <random>

#include "canon/hamiltonian.hpp"

using namespace canon;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("normalize_trace on an already normalized Hamiltonian is the identity") {
    Hamiltonian h;
    h.segments.push_back(Segment::constant(1.5, {0.5, 0.1, 0.5}));
    h.segments.push_back(Segment::rank_one(2.0, 0.7));
    auto res = normalize_trace(h);
    CHECK(res.hamiltonian.total_length() == doctest::Approx(3.5).epsilon(1e-14));
    CHECK(res.hamiltonian.segments.size() == 2);
    CHECK(res.reparametrization.eval(1.0) == doctest::Approx(1.0));
    CHECK(res.warnings.empty());
}

TEST_CASE("normalize_trace scales constant segments") {
    // diag(2,0) on (0,1) -> diag(1,0) on (0,2), xi(x) = 2x
    Hamiltonian h;
    h.segments.push_back(Segment::constant(1.0, {2.0, 0.0, 0.0}));
    auto res = normalize_trace(h);
    REQUIRE(res.hamiltonian.segments.size() == 1);
    const Segment& s = res.hamiltonian.segments[0];
    CHECK(s.length == doctest::Approx(2.0));
    CHECK(s.matrix.a11 == doctest::Approx(1.0));
    CHECK(s.matrix.a22 == doctest::Approx(0.0));
    CHECK(res.reparametrization.eval(0.5) == doctest::Approx(1.0));
}

TEST_CASE("normalize_trace scales rank-one segments by the trace") {
    // ||e||^2 = 4, length 1 -> same angle, length 4
    Hamiltonian h;
    h.segments.push_back(Segment::rank_one(1.0, 0.3, 4.0));
    auto res = normalize_trace(h);
    REQUIRE(res.hamiltonian.segments.size() == 1);
    CHECK(res.hamiltonian.segments[0].length == doctest::Approx(4.0));
    CHECK(res.hamiltonian.segments[0].angle == doctest::Approx(0.3));
    CHECK(res.hamiltonian.segments[0].scale == doctest::Approx(1.0));
}

TEST_CASE("normalize_trace is idempotent and preserves integral of the trace") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    Hamiltonian h;
    h.segments.push_back(Segment::constant(u(rng), {1.3, 0.2, 0.4}));
    std::vector<Sym2> samples;
    for (int k = 0; k < 9; ++k) {
        const double a = u(rng), c = u(rng), b = 0.3 * std::min(a, c);
        samples.push_back({a, b, c});
    }
    h.segments.push_back(Segment::sampled(u(rng), samples));
    h.segments.push_back(Segment::rank_one(u(rng), 1.1, 2.5));

    // integral of tr H over the input
    double tr_integral = 0.0;
    for (const Segment& s : h.segments) {
        const Sym2 total = s.integral_to(s.length);
        tr_integral += total.trace();
    }

    auto once = normalize_trace(h);
    CHECK(once.hamiltonian.total_length() == doctest::Approx(tr_integral).epsilon(1e-10));
    auto twice = normalize_trace(once.hamiltonian);
    REQUIRE(twice.hamiltonian.segments.size() == once.hamiltonian.segments.size());
    for (size_t i = 0; i < once.hamiltonian.segments.size(); ++i) {
        const Segment& a = once.hamiltonian.segments[i];
        const Segment& b = twice.hamiltonian.segments[i];
        CHECK(a.kind == b.kind);
        CHECK(std::abs(a.length - b.length) < 1e-10);
        if (a.kind == SegmentKind::Sampled) {
            REQUIRE(a.samples.size() == b.samples.size());
            for (size_t k = 0; k < a.samples.size(); ++k) {
                CHECK(std::abs(a.samples[k].a11 - b.samples[k].a11) < 1e-10);
                CHECK(std::abs(a.samples[k].a12 - b.samples[k].a12) < 1e-10);
                CHECK(std::abs(a.samples[k].a22 - b.samples[k].a22) < 1e-10);
            }
        }
    }
}

TEST_CASE("zero-trace regions are excised with a warning") {
    Hamiltonian h;
    h.segments.push_back(Segment::constant(1.0, {0.5, 0.0, 0.5}));
    h.segments.push_back(Segment::constant(2.0, {0.0, 0.0, 0.0}));
    h.segments.push_back(Segment::constant(1.0, {1.0, 0.0, 0.0}));
    auto res = normalize_trace(h);
    CHECK(res.hamiltonian.total_length() == doctest::Approx(2.0));
    CHECK(res.warnings.size() == 1);
    // xi is constant across the dead zone
    CHECK(res.reparametrization.eval(1.0) == doctest::Approx(1.0));
    CHECK(res.reparametrization.eval(3.0) == doctest::Approx(1.0));
    CHECK(res.reparametrization.eval(4.0) == doctest::Approx(2.0));
}

TEST_CASE("exact_type examples") {
    Hamiltonian free_h;
    free_h.segments.push_back(Segment::constant(2.0, {0.5, 0.0, 0.5}));
    CHECK(exact_type(free_h) == doctest::Approx(1.0).epsilon(1e-12));

    Hamiltonian chain;
    chain.segments.push_back(Segment::rank_one(1.0, 0.2));
    chain.segments.push_back(Segment::rank_one(3.0, 1.4));
    CHECK(exact_type(chain) == 0.0);

    Hamiltonian mixed = free_h;
    mixed.segments.push_back(Segment::rank_one(3.0, 0.9));
    CHECK(exact_type(mixed) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact_type is consistent under trace normalization") {
    // integral of sqrt(det) transforms consistently with the reparametrization
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> u(0.2, 1.5);
    for (int trial = 0; trial < 5; ++trial) {
        const double a = u(rng), c = u(rng), b = 0.4 * std::min(a, c);
        Hamiltonian h;
        h.segments.push_back(Segment::constant(u(rng), {a, b, c}));
        const double before = exact_type(h);
        const double after = exact_type(normalize_trace(h).hamiltonian);
        CHECK(before == doctest::Approx(after).epsilon(1e-8));
    }
}

TEST_CASE("schrodinger reduction: q = 0 cases") {
    std::vector<double> q(33, 0.0);

    // h = 0: y1 = 1, y2 = x, H = [[1, x],[x, x^2]] before normalization
    auto red = schrodinger_to_canonical(q, 0.0, 64);
    CHECK(red.boundary.y1 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(red.boundary.y2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(red.boundary.dy2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(red.wronskian_drift < 1e-8);
    // rank 1 at every sample of the normalized Hamiltonian
    for (const Segment& s : red.hamiltonian.segments)
        for (const Sym2& m : s.samples) CHECK(m.det() <= 1e-10 * m.trace() * m.trace());
    // the normalized system has total length = int (y1^2 + y2^2) = 1 + 1/3
    CHECK(red.hamiltonian.total_length() == doctest::Approx(4.0 / 3.0).epsilon(1e-8));

    // h = 1: y1 = 1 + x
    auto red2 = schrodinger_to_canonical(q, 1.0, 64);
    CHECK(red2.boundary.y1 == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(red2.boundary.dy1 == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("schrodinger reduction: q = 1, h = 0 gives y1 = cosh") {
    std::vector<double> q(33, 1.0);
    auto red = schrodinger_to_canonical(q, 0.0, 256);
    CHECK(red.boundary.y1 == doctest::Approx(std::cosh(1.0)).epsilon(1e-9));
    CHECK(red.boundary.dy1 == doctest::Approx(std::sinh(1.0)).epsilon(1e-9));
}

TEST_CASE("schrodinger reduction rejects a too-coarse grid") {
    CHECK_THROWS_AS(schrodinger_to_canonical(std::vector<double>(5, 0.0), 0.0, 8),
                    validation_error);
}

TEST_CASE("dirac reduction") {
    // Q = 0: X = I, H = I, normalized to I/2 on a doubled interval
    std::vector<std::array<double, 4>> q0(9, {0.0, 0.0, 0.0, 0.0});
    auto red = dirac_to_canonical(q0, 64);
    CHECK(red.hamiltonian.total_length() == doctest::Approx(2.0).epsilon(1e-10));
    const Sym2 mid = red.hamiltonian.value_at(1.0);
    CHECK(mid.a11 == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(mid.a22 == doctest::Approx(0.5).epsilon(1e-10));

    // constant Q = diag(c, -c): closed-form X = [[cosh(cx), sinh(cx)],[sinh, cosh]]
    const double c = 0.8;
    std::vector<std::array<double, 4>> qc(9, {c, 0.0, 0.0, -c});
    auto red2 = dirac_to_canonical(qc, 256);
    CHECK(red2.det_drift < 1e-8);
    // H(1) = X^T X with the closed form, then trace-normalized; compare at the
    // right end through the reparametrization
    const double ch = std::cosh(c), sh = std::sinh(c);
    const Sym2 expected{ch * ch + sh * sh, 2 * ch * sh, ch * ch + sh * sh};
    const double tr = expected.trace();
    const double xi_end = red2.hamiltonian.total_length();
    const Sym2 got = red2.hamiltonian.value_at(xi_end * (1 - 1e-9));
    CHECK(got.a11 == doctest::Approx(expected.a11 / tr).epsilon(1e-7));
    CHECK(got.a12 == doctest::Approx(expected.a12 / tr).epsilon(1e-7));
    CHECK(got.a22 == doctest::Approx(expected.a22 / tr).epsilon(1e-7));

    // random smooth symmetric Q: H psd and symmetric at all samples
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::array<double, 4>> qr;
    for (int k = 0; k < 9; ++k) {
        const double off = u(rng);
        qr.push_back({u(rng), off, off, u(rng)});
    }
    auto red3 = dirac_to_canonical(qr, 256);
    for (const Segment& s : red3.hamiltonian.segments)
        for (const Sym2& m : s.samples) {
            CHECK(m.min_eigenvalue() >= -1e-12);
            CHECK(m.det() > 1e-6);  // rank 2 everywhere
        }
}

TEST_CASE("string reduction") {
    // rho = 1: diag(1,1) -> I/2 on doubled length
    auto res = string_to_canonical({StringPiece{1.0, 1.0}});
    REQUIRE(res.hamiltonian.segments.size() == 1);
    CHECK(res.hamiltonian.segments[0].length == doctest::Approx(2.0));
    CHECK(res.hamiltonian.segments[0].matrix.a11 == doctest::Approx(0.5));

    // rho = 4: diag(4,1) -> diag(4/5, 1/5) on length x5
    auto res2 = string_to_canonical({StringPiece{1.0, 4.0}});
    CHECK(res2.hamiltonian.segments[0].length == doctest::Approx(5.0));
    CHECK(res2.hamiltonian.segments[0].matrix.a11 == doctest::Approx(0.8));
    CHECK(res2.hamiltonian.segments[0].matrix.a22 == doctest::Approx(0.2));

    // piecewise rho in {1,4}: two constant segments
    auto res3 = string_to_canonical({StringPiece{1.0, 1.0}, StringPiece{1.0, 4.0}});
    CHECK(res3.hamiltonian.segments.size() == 2);

    CHECK_THROWS_AS(string_to_canonical({StringPiece{1.0, -1.0}}), validation_error);
}

TEST_CASE("boundary parameter map") {
    // y1 = 1, y2 = x at x = 1
    const SchrodingerBoundary b{1.0, 0.0, 1.0, 1.0};
    const ExtReal h1 = boundary_parameter_map(b, ExtReal::finite(0.5));
    CHECK_FALSE(h1.infinite);
    CHECK(h1.value == doctest::Approx((1.0 - 0.5) / 0.5));

    const ExtReal hinf = boundary_parameter_map(b, ExtReal::inf());
    CHECK_FALSE(hinf.infinite);
    CHECK(hinf.value == doctest::Approx(-1.0));

    // denominator vanishes: -dy1 + h_r y1 = 0 at h_r = 0 for dy1 = 0 and
    // numerator nonzero gives the projective infinity
    const SchrodingerBoundary b2{1.0, 0.0, 0.3, 1.0};
    const ExtReal r = boundary_parameter_map(b2, ExtReal::finite(0.0));
    CHECK(r.infinite);
}

TEST_CASE("validation rejects non-psd samples") {
    Hamiltonian h;
    h.segments.push_back(Segment::constant(1.0, {1.0, 2.0, 1.0}));  // det < 0
    CHECK_THROWS_AS(h.validate(), validation_error);
}
