#include "canon/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "canon/log.hpp"
#include "canon/parallel.hpp"

namespace canon {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// 16-point Gauss-Legendre on [-1,1].
constexpr double kG16x[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr double kG16w[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};



Mat2 sym_to_mat(const Sym2& s) { return {s.a11, s.a12, s.a12, s.a22}; }

// -z * J * H * dt exponent for a constant piece.
Mat2 const_step(const Sym2& h, cplx z, double dt) {
    // J H = [[-h12, -h22], [h11, h12]]
    Mat2 a{-h.a12, -h.a22, h.a11, h.a12};
    return mat2_exp((-z * dt) * a);
}

// Nilpotent generator of an indivisible interval: <., e> J e scaled by a.
Mat2 rank_one_generator(double angle, double a) {
    const double ep = std::cos(angle), em = std::sin(angle);
    return {a * em * ep, a * em * em, -a * ep * ep, -a * em * ep};
}

void project_det(Mat2& m) {
    const cplx d = m.det();
    if (d == cplx(0.0)) return;
    const cplx s = std::sqrt(d);
    m = (1.0 / s) * m;
}

// One commutator-free 4th-order step over [t0, t0 + h] for M' = -z J H(t) M
// with H linear on the cell: a product of two traceless exponentials, so the
// step has unit determinant structurally.
//   A_{1,2} = H at the Gauss points, x_{1,2} = 1/4 -+ sqrt(3)/6.
void cf4_step(const Sym2& left, const Sym2& slope, double t0, double h, cplx z, Mat2& m) {
    constexpr double kRoot3Over6 = 0.28867513459481287;
    const double c1 = t0 + (0.5 - kRoot3Over6) * h;
    const double c2 = t0 + (0.5 + kRoot3Over6) * h;
    const Sym2 h1 = left + c1 * slope;
    const Sym2 h2 = left + c2 * slope;
    const double x1 = 0.25 - kRoot3Over6;
    const double x2 = 0.25 + kRoot3Over6;
    const Sym2 b1 = x2 * h1 + x1 * h2;
    const Sym2 b2 = x1 * h1 + x2 * h2;
    m = const_step(b2, z, h) * (const_step(b1, z, h) * m);
}

// Walks a sampled segment emitting moderate-norm factors: substep groups are
// Richardson-extrapolated (CF4 at h and h/2) and determinant-projected while
// their norms are still O(1).
template <typename Emit>
void sampled_factors(const Segment& s, cplx z, double t, Emit&& emit) {
    const size_t n = s.samples.size();
    const double cell = s.length / static_cast<double>(n - 1);
    const double zmag = std::abs(z);
    const double group_w = 0.4 / (1.0 + zmag);

    double done = 0.0;
    for (size_t k = 0; k + 1 < n && done < t - 1e-15 * s.length; ++k) {
        const double width = std::min(cell, t - done);
        const Sym2 left = s.samples[k];
        const Sym2 slope = (1.0 / cell) * (s.samples[k + 1] - s.samples[k]);
        const int groups = std::max(1, static_cast<int>(std::ceil(width / group_w)));
        const double gw = width / groups;
        const int sub = std::max(2, static_cast<int>(std::ceil(gw * (1.0 + zmag) / 0.1)));
        for (int g = 0; g < groups; ++g) {
            const double g0 = g * gw;
            Mat2 coarse = Mat2::identity(), fine = Mat2::identity();
            const double hc = gw / sub, hf = gw / (2 * sub);
            for (int i = 0; i < sub; ++i) cf4_step(left, slope, g0 + i * hc, hc, z, coarse);
            for (int i = 0; i < 2 * sub; ++i) cf4_step(left, slope, g0 + i * hf, hf, z, fine);
            Mat2 group = (cplx(16.0 / 15.0)) * fine - (cplx(1.0 / 15.0)) * coarse;
            project_det(group);
            emit(group);
        }
        done += width;
    }
}

// Emits the factor stream of a segment restricted to [0, t]; every factor has
// unit determinant up to roundoff at O(1) norms.
template <typename Emit>
void segment_factors(const Segment& s, cplx z, double t, Emit&& emit) {
    t = std::clamp(t, 0.0, s.length);
    if (t <= 0.0) return;
    switch (s.kind) {
        case SegmentKind::RankOne:
            emit(Mat2::identity() + z * rank_one_generator(s.angle, s.scale * t));
            break;
        case SegmentKind::Constant: {
            // chunked so each factor's determinant is well conditioned
            const int chunks = std::max(1, static_cast<int>(std::ceil(std::abs(z) * t / 1.0)));
            for (int c = 0; c < chunks; ++c) emit(const_step(s.matrix, z, t / chunks));
            break;
        }
        case SegmentKind::Sampled:
            sampled_factors(s, z, t, emit);
            break;
    }
}

Mat2 segment_monodromy(const Segment& s, cplx z, double t) {
    t = std::clamp(t, 0.0, s.length);
    if (t <= 0.0) return Mat2::identity();
    switch (s.kind) {
        case SegmentKind::RankOne:
            return Mat2::identity() + z * rank_one_generator(s.angle, s.scale * t);
        case SegmentKind::Constant:
            return const_step(s.matrix, z, t);
        case SegmentKind::Sampled: {
            Mat2 m = Mat2::identity();
            sampled_factors(s, z, t, [&](const Mat2& f) { m = f * m; });
            return m;
        }
    }
    return Mat2::identity();
}

}  // namespace

Mat2 monodromy(const Hamiltonian& h, cplx z, double x) {
    const double total = h.total_length();
    if (x < -1e-12 || x > total * (1.0 + 1e-12) + 1e-12)
        throw validation_error("monodromy: position out of range");
    if (z == cplx(0.0)) return Mat2::identity();
    Mat2 m = Mat2::identity();
    double off = 0.0;
    for (const Segment& s : h.segments) {
        if (x <= off) break;
        const double t = std::min(s.length, x - off);
        m = segment_monodromy(s, z, t) * m;
        off += s.length;
    }
    return m;
}

Mat2 singular_interval_monodromy(double a, double angle, cplx lambda) {
    if (!(a > 0.0)) throw validation_error("singular_interval_monodromy: length must be positive");
    return Mat2::identity() + lambda * rank_one_generator(angle, a);
}

double monodromy_det_drift(const Hamiltonian& h, cplx z, double x) {
    const double total = h.total_length();
    if (x < -1e-12 || x > total * (1.0 + 1e-12) + 1e-12)
        throw validation_error("monodromy_det_drift: position out of range");
    cplx det_prod = 1.0;
    double off = 0.0;
    for (const Segment& s : h.segments) {
        if (x <= off) break;
        segment_factors(s, z, std::min(s.length, x - off),
                        [&](const Mat2& f) { det_prod *= f.det(); });
        off += s.length;
    }
    return std::abs(det_prod - cplx(1.0));
}

SolutionPair fundamental_columns(const Hamiltonian& h, cplx z, double x) {
    const Mat2 m = monodromy(h, z, x);
    return {{m.m11, m.m21}, {m.m12, m.m22}};
}

ScaledMat2 monodromy_scaled(const Hamiltonian& h, cplx z, double x) {
    const double total = h.total_length();
    if (x < 0.0 || x > total * (1.0 + 1e-12) + 1e-12)
        throw validation_error("monodromy_scaled: out of range");
    Mat2 m = Mat2::identity();
    double logs = 0.0;
    double off = 0.0;
    const double zmag = std::abs(z);
    auto absorb = [&](const Mat2& f) {
        m = f * m;
        const double nrm = mat2_frobenius(m);
        if (nrm > 1e30) {
            m = (1.0 / nrm) * m;
            logs += std::log(nrm);
        }
    };
    for (const Segment& s : h.segments) {
        if (x <= off) break;
        const double t = std::min(s.length, x - off);
        if (s.kind == SegmentKind::Constant && zmag * t > 200.0) {
            // split so no single exponential overflows
            const int chunks = static_cast<int>(std::ceil(zmag * t / 200.0));
            for (int c = 0; c < chunks; ++c) absorb(const_step(s.matrix, z, t / chunks));
        } else {
            absorb(segment_monodromy(s, z, t));
        }
        off += s.length;
    }
    return {m, logs};
}

MonodromyPoly monodromy_polynomial(const Hamiltonian& h) {
    if (!h.all_rank_one())
        throw validation_error("monodromy_polynomial: Hamiltonian is not a rank-one chain");
    Poly tp = Poly::constant(1.0), tm, pp, pm = Poly::constant(1.0);
    for (const Segment& s : h.segments) {
        double a, angle;
        if (s.kind == SegmentKind::RankOne) {
            a = s.scale * s.length;
            angle = s.angle;
        } else {
            const Sym2 m = s.kind == SegmentKind::Constant ? s.matrix : s.samples.front();
            a = m.trace() * s.length;
            angle = std::atan2(std::copysign(std::sqrt(m.a22 / m.trace()), m.a12),
                               std::sqrt(m.a11 / m.trace()));
        }
        const Mat2 r = rank_one_generator(angle, a);
        const Poly lam = Poly::monomial(1);
        // new = (I + lambda R) * old
        const Poly ntp = tp + lam * (r.m11.real() * tp + r.m12.real() * tm);
        const Poly ntm = tm + lam * (r.m21.real() * tp + r.m22.real() * tm);
        const Poly npp = pp + lam * (r.m11.real() * pp + r.m12.real() * pm);
        const Poly npm = pm + lam * (r.m21.real() * pp + r.m22.real() * pm);
        tp = ntp;
        tm = ntm;
        pp = npp;
        pm = npm;
    }
    return {tp, tm, pp, pm};
}

// ---------------------------------------------------------------------------
// Eigenvalue scan.

namespace {

bool angle_matches(double a, double b) {
    double d = std::fmod(a - b, kPi);
    if (d > kPi / 2) d -= kPi;
    if (d < -kPi / 2) d += kPi;
    return std::abs(d) <= 1e-12;
}

}  // namespace

std::vector<double> spectrum_alpha(const Hamiltonian& h, double alpha, double lo, double hi) {
    if (h.segments.empty()) throw validation_error("spectrum_alpha: empty Hamiltonian");
    if (!(lo < hi)) throw validation_error("spectrum_alpha: bad window");
    const double L = h.total_length();

    // (R'): structural check on the last segment
    const Segment& last = h.segments.back();
    if (last.kind == SegmentKind::RankOne && angle_matches(last.angle, alpha))
        throw validation_error(
            "spectrum_alpha: degenerate boundary condition (R' fails for this alpha)");
    // (L): diagnostic only
    const Segment& first = h.segments.front();
    if (first.kind == SegmentKind::RankOne && angle_matches(first.angle, kPi / 2))
        CANON_LOG_INFO("spectrum_alpha: first segment has direction (0,1); condition (L) fails");

    const double ca = std::cos(alpha), sa = std::sin(alpha);
    auto f = [&](cplx z) {
        const Mat2 m = monodromy(h, z, L);
        return m.m11 * ca + m.m21 * sa;  // Theta+(L) cos a + Theta-(L) sin a
    };
    auto fr = [&](double x) { return f(cplx(x, 0.0)).real(); };

    const double spacing = kPi / (2.0 * L);
    size_t npts = static_cast<size_t>(std::ceil((hi - lo) / spacing)) + 1;
    npts = std::min<size_t>(std::max<size_t>(npts, 8), 4000000);
    std::vector<double> grid(npts), val(npts);
    for (size_t i = 0; i < npts; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(npts - 1);
    parallel_for(npts, [&](size_t i) { val[i] = fr(grid[i]); });

    auto refine = [&](double a, double b, double fa, double fb) {
        (void)fb;
        for (int it = 0; it < 80 && b - a > 1e-13 * (1.0 + std::abs(a)); ++it) {
            const double mid = (a + b) / 2.0;
            const double fm = fr(mid);
            if ((fm < 0.0) == (fa < 0.0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
                fb = fm;
            }
        }
        double x = (a + b) / 2.0;
        // Newton polish with complex-step derivative
        for (int it = 0; it < 8; ++it) {
            const double step_h = 1e-30 * (1.0 + std::abs(x));
            const cplx fz = f(cplx(x, step_h));
            const double deriv = fz.imag() / step_h;
            if (deriv == 0.0) break;
            const double delta = fz.real() / deriv;
            x -= delta;
            if (std::abs(delta) < 1e-12 * (1.0 + std::abs(x))) break;
        }
        return x;
    };

    std::vector<double> roots;
    // grid points landing (numerically) on a zero, e.g. window endpoints
    double vscale = 0.0;
    for (double v : val) vscale = std::max(vscale, std::abs(v));
    for (size_t i = 0; i < npts; ++i) {
        if (std::abs(val[i]) > 1e-12 * vscale) continue;
        double x = grid[i];
        for (int it = 0; it < 8; ++it) {
            const double step_h = 1e-30 * (1.0 + std::abs(x));
            const cplx fz = f(cplx(x, step_h));
            const double deriv = fz.imag() / step_h;
            if (deriv == 0.0) break;
            x -= fz.real() / deriv;
        }
        if (std::abs(x - grid[i]) < spacing / 2.0) roots.push_back(x);
    }
    std::function<void(double, double, double, double, int)> scan_cell =
        [&](double a, double b, double fa, double fb, int depth) {
            if ((fa < 0.0) != (fb < 0.0)) {
                roots.push_back(refine(a, b, fa, fb));
                return;
            }
            if (depth >= 2) return;
            // densify when the cell midpoint dips toward zero without a sign change
            const double mid = (a + b) / 2.0;
            const double fm = fr(mid);
            if ((fm < 0.0) != (fa < 0.0)) {
                roots.push_back(refine(a, mid, fa, fm));
                roots.push_back(refine(mid, b, fm, fb));
                return;
            }
            if (std::abs(fm) < 0.05 * std::min(std::abs(fa), std::abs(fb))) {
                const int sub = 16;
                double xa = a, va = fa;
                for (int i = 1; i <= sub; ++i) {
                    const double xb = a + (b - a) * i / sub;
                    const double vb = fr(xb);
                    scan_cell(xa, xb, va, vb, depth + 1);
                    xa = xb;
                    va = vb;
                }
            }
        };

    for (size_t i = 0; i + 1 < npts; ++i) scan_cell(grid[i], grid[i + 1], val[i], val[i + 1], 0);

    std::sort(roots.begin(), roots.end());
    std::vector<double> out;
    for (double r : roots) {
        if (r < lo - 1e-12 || r > hi + 1e-12) continue;
        if (!out.empty() && std::abs(r - out.back()) < 1e-9 * (1.0 + std::abs(r))) continue;
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Norm of Theta in L^2(H) and the Green identity integral.

namespace {

// Walks segments accumulating integral of W*(t) H(t) V(t) where V, W are the
// matrix solutions at parameters z and lambda. Exact on rank-one segments,
// Gauss quadrature on constant ones, Richardson-extrapolated product rule on
// sampled ones.
Mat2 bilinear_integral(const Hamiltonian& h, cplx lambda, cplx z, double x) {
    Mat2 acc{};             // integral
    Mat2 mv = Mat2::identity();  // M(t, z)
    Mat2 mw = Mat2::identity();  // M(t, lambda)
    double off = 0.0;
    const double zmag = std::max(std::abs(z), std::abs(lambda));

    for (const Segment& s : h.segments) {
        if (x <= off + 1e-15) break;
        const double t = std::min(s.length, x - off);
        switch (s.kind) {
            case SegmentKind::RankOne: {
                // integrand entries are quadratic in t; Simpson is exact
                const Sym2 hm = {s.scale * std::cos(s.angle) * std::cos(s.angle),
                                 s.scale * std::cos(s.angle) * std::sin(s.angle),
                                 s.scale * std::sin(s.angle) * std::sin(s.angle)};
                auto integrand = [&](double u) {
                    const Mat2 fv = Mat2::identity() + z * rank_one_generator(s.angle, s.scale * u);
                    const Mat2 fw =
                        Mat2::identity() + lambda * rank_one_generator(s.angle, s.scale * u);
                    return (fw * mw).conj_transpose() * sym_to_mat(hm) * (fv * mv);
                };
                acc = acc + (cplx(t / 6.0)) *
                                (integrand(0.0) + cplx(4.0) * integrand(t / 2.0) + integrand(t));
                mv = segment_monodromy(s, z, t) * mv;
                mw = segment_monodromy(s, lambda, t) * mw;
                break;
            }
            case SegmentKind::Constant: {
                const int chunks =
                    std::max(1, static_cast<int>(std::ceil(t * (1.0 + zmag) / 1.5)));
                const double w = t / chunks;
                Mat2 bv = mv, bw = mw;
                for (int c = 0; c < chunks; ++c) {
                    for (int g = 0; g < 16; ++g) {
                        const double u = (kG16x[g] + 1.0) * w / 2.0;
                        const Mat2 fv = const_step(s.matrix, z, u) * bv;
                        const Mat2 fw = const_step(s.matrix, lambda, u) * bw;
                        acc = acc + (cplx(kG16w[g] * w / 2.0)) *
                                        (fw.conj_transpose() * sym_to_mat(s.matrix) * fv);
                    }
                    bv = const_step(s.matrix, z, w) * bv;
                    bw = const_step(s.matrix, lambda, w) * bw;
                }
                mv = bv;
                mw = bw;
                break;
            }
            case SegmentKind::Sampled: {
                const size_t n = s.samples.size();
                const double cell = s.length / static_cast<double>(n - 1);
                auto run = [&](int mult, Mat2& outv, Mat2& outw) {
                    Mat2 a{};
                    Mat2 pv = mv, pw = mw;
                    double done = 0.0;
                    for (size_t k = 0; k + 1 < n && done < t - 1e-15 * s.length; ++k) {
                        const double width = std::min(cell, t - done);
                        const Sym2 left = s.samples[k];
                        const Sym2 slope = (1.0 / cell) * (s.samples[k + 1] - s.samples[k]);
                        const int steps =
                            mult *
                            std::max(1, static_cast<int>(std::ceil(width * (1.0 + zmag) / 0.1)));
                        const double hh = width / steps;
                        for (int i = 0; i < steps; ++i) {
                            const double u0 = i * hh;
                            const Sym2 hmid = left + (u0 + hh / 2.0) * slope;
                            const Sym2 hleft = left + u0 * slope;
                            const Sym2 hright = left + (u0 + hh) * slope;
                            Mat2 midv = pv, midw = pw, rv, rw;
                            cf4_step(left, slope, u0, hh / 2.0, z, midv);
                            cf4_step(left, slope, u0, hh / 2.0, lambda, midw);
                            rv = midv;
                            rw = midw;
                            cf4_step(left, slope, u0 + hh / 2.0, hh / 2.0, z, rv);
                            cf4_step(left, slope, u0 + hh / 2.0, hh / 2.0, lambda, rw);
                            const Mat2 s0 = pw.conj_transpose() * sym_to_mat(hleft) * pv;
                            const Mat2 s1 = midw.conj_transpose() * sym_to_mat(hmid) * midv;
                            const Mat2 s2 = rw.conj_transpose() * sym_to_mat(hright) * rv;
                            a = a + (cplx(hh / 6.0)) * (s0 + cplx(4.0) * s1 + s2);
                            pv = rv;
                            pw = rw;
                        }
                        done += width;
                    }
                    outv = pv;
                    outw = pw;
                    return a;
                };
                Mat2 v1, w1, v2, w2;
                const Mat2 i1 = run(1, v1, w1);
                const Mat2 i2 = run(2, v2, w2);
                acc = acc + (cplx(16.0 / 15.0)) * i2 - (cplx(1.0 / 15.0)) * i1;
                mv = v2;
                mw = w2;
                break;
            }
        }
        off += s.length;
    }
    return acc;
}

}  // namespace

double theta_norm_sq(const Hamiltonian& h, double lambda, double x) {
    const Mat2 g = bilinear_integral(h, cplx(lambda, 0.0), cplx(lambda, 0.0), x);
    return g.m11.real();  // Theta^T H Theta entry
}

Mat2 greens_matrix(const Hamiltonian& h, cplx lambda, cplx z, double x) {
    const double total = h.total_length();
    if (x < 0.0 || x > total * (1.0 + 1e-12) + 1e-12)
        throw validation_error("greens_matrix: position out of range");
    const Mat2 integral = bilinear_integral(h, lambda, z, x);
    return (z - std::conj(lambda)) * integral;
}

AtomicMeasure spectral_measure_alpha(const Hamiltonian& h, double alpha, double lo, double hi) {
    const std::vector<double> lam = spectrum_alpha(h, alpha, lo, hi);
    const double L = h.total_length();
    AtomicMeasure mu;
    mu.atoms.resize(lam.size());
    parallel_for(lam.size(), [&](size_t i) {
        const double n2 = theta_norm_sq(h, lam[i], L);
        mu.atoms[i] = {lam[i], 1.0 / n2};
    });
    mu.sort_atoms();
    return mu;
}

Sym2 accumulated_hamiltonian(const Hamiltonian& h, double x) {
    const double total = h.total_length();
    if (x < -1e-12 || x > total * (1.0 + 1e-12) + 1e-12)
        throw validation_error("accumulated_hamiltonian: position out of range");
    x = std::max(x, 0.0);
    Sym2 acc{};
    double off = 0.0;
    for (const Segment& s : h.segments) {
        if (x <= off) break;
        acc = acc + s.integral_to(std::min(s.length, x - off));
        off += s.length;
    }
    return acc;
}

}  // namespace canon
