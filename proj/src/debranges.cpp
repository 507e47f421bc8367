#include "canon/debranges.hpp"

#include <algorithm>
#include <cmath>

#include "canon/log.hpp"

namespace canon {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
const cplx kI{0.0, 1.0};

// Taylor coefficients of p about x0, up to order `order` (repeated Horner shift).
std::vector<cplx> taylor_shift(const CPoly& p, cplx x0, int order) {
    std::vector<cplx> work(p.coeffs().begin(), p.coeffs().end());
    if (work.empty()) work.push_back(0.0);
    std::vector<cplx> out(static_cast<size_t>(order) + 1, cplx(0.0));
    for (int k = 0; k <= order; ++k) {
        if (work.empty()) break;
        // evaluate and deflate: work(z) = (z - x0) * q(z) + r
        cplx carry = work.back();
        for (size_t j = work.size() - 1; j-- > 0;) {
            const cplx next = work[j] + x0 * carry;
            work[j] = carry;
            carry = next;
        }
        out[static_cast<size_t>(k)] = carry;
        if (!work.empty()) work.pop_back();
    }
    return out;
}

}  // namespace

CPoly HBPolynomial::e() const { return CPoly(theta_plus) + kI * CPoly(theta_minus); }

int HBPolynomial::degree() const { return std::max(theta_plus.degree(), theta_minus.degree()); }

void HBPolynomial::require_strict_normalized(const char* who) const {
    const CPoly ee = e();
    if (ee.degree() < 1) throw validation_error(std::string(who) + ": constant E");
    const HBCheck chk = is_hermite_biehler(ee);
    if (!chk.is_hb)
        throw validation_error(std::string(who) + ": E is not strict Hermite-Biehler (margin " +
                               std::to_string(chk.margin) + ")");
    if (std::abs(ee(cplx(0.0)) - cplx(1.0)) > 1e-10)
        throw validation_error(std::string(who) + ": E(0) != 1");
}

HBPolynomial theta_from_e(const CPoly& e) {
    // E = Theta+ + i Theta-  with both components real-coefficient
    HBPolynomial hb;
    hb.theta_plus = e.real_part();
    hb.theta_minus = e.imag_part();
    hb.normalized = std::abs(e(cplx(0.0)) - cplx(1.0)) <= 1e-10;
    return hb;
}

CPoly e_from_theta(const HBPolynomial& hb) { return hb.e(); }

HBCheck is_hermite_biehler(const CPoly& e, double tol) {
    if (e.degree() < 1) throw validation_error("is_hermite_biehler: degree must be >= 1");
    const std::vector<RootCluster> roots = poly_root_clusters(e);  // Newton-polished
    double max_im = -std::numeric_limits<double>::infinity();
    for (const RootCluster& r : roots) max_im = std::max(max_im, r.value.imag());
    return {max_im < -tol, -max_im};
}

double herglotz_margin_sample(const HBPolynomial& hb, int count) {
    const CPoly tp(hb.theta_plus), tm(hb.theta_minus);
    // absolute-coefficient companions give the evaluation noise floor
    auto abs_poly = [](const Poly& p) {
        std::vector<double> c = p.coeffs();
        for (double& v : c) v = std::abs(v);
        return Poly(std::move(c));
    };
    const Poly tp_mass = abs_poly(hb.theta_plus), tm_mass = abs_poly(hb.theta_minus);

    double worst = std::numeric_limits<double>::infinity();
    double span = 1.0;
    if (hb.theta_minus.degree() >= 1) {
        // cover the zero range of Theta-
        for (double r : poly_real_roots(hb.theta_minus)) span = std::max(span, std::abs(r));
    }
    const double deg_ops = 30.0 * (10.0 + hb.degree());
    for (int i = 1; i <= count; ++i) {
        const double a = std::fmod(0.618033988749895 * i, 1.0);
        const double b = std::fmod(0.754877666246693 * i, 1.0);
        const cplx z(span * 2.4 * (a - 0.5), span * (0.02 + 0.8 * b));
        const cplx pv = tp(z), qv = tm(z);
        const double zr = std::abs(z);
        const double noise = 1e-16 * deg_ops *
                             (tp_mass(zr) + std::abs(pv / qv) * tm_mass(zr)) / std::abs(qv);
        worst = std::min(worst, (pv / qv).imag() + noise);
    }
    return worst;
}

cplx kernel_from_theta(cplx tp_z, cplx tm_z, cplx tp_lbar, cplx tm_lbar, cplx lambda, cplx z) {
    const cplx lbar = std::conj(lambda);
    return (tm_z * tp_lbar - tp_z * tm_lbar) / (kPi * (lbar - z));
}

CPoly kernel_polynomial(const HBPolynomial& hb, cplx lambda) {
    const cplx lbar = std::conj(lambda);
    const cplx tp_l = CPoly(hb.theta_plus)(lbar);
    const cplx tm_l = CPoly(hb.theta_minus)(lbar);
    // numerator N(z) = Theta-(z) tp_l - Theta+(z) tm_l vanishes at z = lbar;
    // K = N(z) / (pi (lbar - z)) = -Q(z)/pi with N = (z - lbar) Q.
    const CPoly num = tp_l * CPoly(hb.theta_minus) - tm_l * CPoly(hb.theta_plus);
    if (num.is_zero()) return CPoly();
    const CPoly q = num.deflate(lbar);
    return cplx(-1.0 / kPi) * q;
}

cplx reproducing_kernel(const HBPolynomial& hb, cplx lambda, cplx z) {
    return kernel_polynomial(hb, lambda)(z);
}

// ---------------------------------------------------------------------------
// Inner product.

namespace {

// Sum of residues plus the cancellation measure sum |res| / |sum res|.
cplx residue_sum(const CPoly& num, const CPoly& den, const std::vector<RootCluster>& poles,
                 double& cancellation) {
    cplx total = 0.0;
    double abs_total = 0.0;
    for (const RootCluster& cl : poles) {
        const int m = cl.multiplicity;
        // R(z) = den / (z - p)^m
        CPoly r = den;
        for (int k = 0; k < m; ++k) r = r.deflate(cl.value);
        // residue = coefficient of u^{m-1} in num(p+u) / R(p+u)
        const std::vector<cplx> pn = taylor_shift(num, cl.value, m - 1);
        const std::vector<cplx> pr = taylor_shift(r, cl.value, m - 1);
        if (pr.empty() || pr[0] == cplx(0.0))
            throw numeric_error("inner_product: residue denominator vanished");
        // power-series division up to order m-1
        std::vector<cplx> quot(static_cast<size_t>(m), cplx(0.0));
        for (int k = 0; k < m; ++k) {
            cplx acc = (k < static_cast<int>(pn.size())) ? pn[static_cast<size_t>(k)] : cplx(0.0);
            for (int j = 0; j < k; ++j)
                acc -= quot[static_cast<size_t>(j)] * pr[static_cast<size_t>(k - j)];
            quot[static_cast<size_t>(k)] = acc / pr[0];
        }
        total += quot[static_cast<size_t>(m - 1)];
        abs_total += std::abs(quot[static_cast<size_t>(m - 1)]);
    }
    cancellation = abs_total / std::max(std::abs(total), 1e-300);
    return total;
}

void check_membership_degrees(const CPoly& f, const CPoly& g, const HBPolynomial& hb) {
    const int n = hb.degree();
    if (f.degree() > n - 1 || g.degree() > n - 1)
        throw validation_error("inner_product: polynomial not in H(E) (degree too high)");
}

double abs_e_sq_on_real(const HBPolynomial& hb, double t) {
    const double tp = hb.theta_plus(t);
    const double tm = hb.theta_minus(t);
    return tp * tp + tm * tm;
}

// adaptive Simpson on [a, b]
cplx adaptive_simpson(const std::function<cplx(double)>& f, double a, double b, cplx fa, cplx fm,
                      cplx fb, double tol, int depth) {
    const double m = (a + b) / 2.0;
    const double lm = (a + m) / 2.0, rm = (m + b) / 2.0;
    const cplx flm = f(lm), frm = f(rm);
    const cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const cplx left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const cplx right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const cplx delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, tol / 1.4, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, tol / 1.4, depth - 1);
}

}  // namespace

cplx inner_product_quadrature(const CPoly& f, const CPoly& g, const HBPolynomial& hb) {
    check_membership_degrees(f, g, hb);
    const CPoly gs = g.conj_coeffs();
    // reversed-coefficient forms for |t| > 1: p(t) = t^deg rev_p(1/t), which
    // keeps the ratio finite where the plain evaluations overflow
    auto reversed = [](const CPoly& p) {
        std::vector<cplx> c(p.coeffs().rbegin(), p.coeffs().rend());
        return CPoly(std::move(c));
    };
    const CPoly rf = reversed(f), rg = reversed(gs);
    const CPoly e2 = CPoly(hb.theta_plus) * CPoly(hb.theta_plus) +
                     CPoly(hb.theta_minus) * CPoly(hb.theta_minus);
    const CPoly re2 = reversed(e2);
    const int pow_gap = e2.degree() - f.degree() - g.degree();  // >= 2

    // substitute t = tan(theta); integrand decays like 1/t^2 so the
    // transformed integrand is smooth on (-pi/2, pi/2)
    auto integrand = [&](double th) -> cplx {
        const double c = std::cos(th);
        if (c < 1e-300) return 0.0;
        const double t = std::tan(th);
        if (std::abs(t) <= 1.0) {
            const double sec2 = 1.0 / (c * c);
            return f(cplx(t)) * gs(cplx(t)) / abs_e_sq_on_real(hb, t) * sec2;
        }
        // f g* / |E|^2 * (1+t^2) = rev_f rev_g / rev_e2 (u) * u^{pow_gap} (1+u^2) / u^2
        const double u = 1.0 / t;
        const cplx ratio = rf(cplx(u)) * rg(cplx(u)) / re2(cplx(u));
        return ratio * std::pow(u, pow_gap - 2) * (1.0 + u * u);
    };
    const double a = -kPi / 2 + 1e-12, b = kPi / 2 - 1e-12;
    // composite adaptive Simpson over 64 panels
    const int panels = 64;
    double scale = 0.0;
    std::vector<cplx> vals(2 * panels + 1);
    for (int i = 0; i <= 2 * panels; ++i) {
        vals[static_cast<size_t>(i)] = integrand(a + (b - a) * i / (2.0 * panels));
        scale = std::max(scale, std::abs(vals[static_cast<size_t>(i)]));
    }
    const double tol = std::max(1e-300, scale) * 1e-13;
    cplx total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double pa = a + (b - a) * p / panels;
        const double pb = a + (b - a) * (p + 1) / panels;
        total += adaptive_simpson(integrand, pa, pb, vals[static_cast<size_t>(2 * p)],
                                  vals[static_cast<size_t>(2 * p + 1)],
                                  vals[static_cast<size_t>(2 * p + 2)], tol, 18);
    }
    return total;
}

cplx inner_product(const CPoly& f, const CPoly& g, const HBPolynomial& hb) {
    check_membership_degrees(f, g, hb);
    if (f.is_zero() || g.is_zero()) return 0.0;
    const CPoly e = hb.e();
    const std::vector<RootCluster> roots = poly_root_clusters(e);

    double scale = 1.0;
    for (const RootCluster& r : roots) scale = std::max(scale, std::abs(r.value));
    // A cluster is trusted as a genuine multiple root only when its members sit
    // within the root finder's multiple-root orbit; otherwise the separation is
    // ambiguous and quadrature is safer.
    const std::vector<cplx> raw = poly_complex_roots(e);
    bool ambiguous = false;
    for (const RootCluster& cl : roots) {
        if (cl.multiplicity == 1) continue;
        double radius = 0.0;
        for (const cplx& r : raw)
            if (std::abs(r - cl.value) <= 1e-6 * scale)
                radius = std::max(radius, std::abs(r - cl.value));
        if (radius > 3e-7 * scale) ambiguous = true;
    }
    if (ambiguous) {
        CANON_LOG_INFO("inner_product: ambiguous root cluster, falling back to quadrature");
        return inner_product_quadrature(f, g, hb);
    }

    // poles in C+ are the conjugates of the zeros of E
    std::vector<RootCluster> poles = roots;
    for (RootCluster& p : poles) p.value = std::conj(p.value);
    const CPoly num = f * g.conj_coeffs();
    const CPoly den = e * e.conj_coeffs();
    double cancellation = 0.0;
    const cplx sum = residue_sum(num, den, poles, cancellation);
    // Zeros close to the real axis make individual residues large and mutually
    // cancelling; the real-line integral has no such cancellation.
    if (cancellation > 1e4) {
        CANON_LOG_DEBUG("inner_product: residue cancellation " + std::to_string(cancellation) +
                        ", using quadrature");
        return inner_product_quadrature(f, g, hb);
    }
    return 2.0 * kPi * kI * sum;
}

// ---------------------------------------------------------------------------

HerglotzData herglotz_decomposition(const HBPolynomial& hb) {
    if (hb.theta_minus.is_zero())
        throw validation_error("herglotz_decomposition: Theta- is identically zero");
    const int dm = hb.theta_minus.degree();
    if (hb.theta_plus.degree() > dm + 1)
        throw validation_error("herglotz_decomposition: Theta+/Theta- is not Herglotz");
    if (dm < 1) throw validation_error("herglotz_decomposition: Theta- is constant");

    const std::vector<double> zeros = poly_real_roots(hb.theta_minus);
    if (static_cast<int>(zeros.size()) != dm)
        throw validation_error("herglotz_decomposition: Theta- has non-real zeros");
    for (size_t i = 0; i + 1 < zeros.size(); ++i)
        if (std::abs(zeros[i + 1] - zeros[i]) < 1e-9 * (1.0 + std::abs(zeros[i])))
            throw validation_error("herglotz_decomposition: non-simple real zero of Theta-");

    const Poly dtm = hb.theta_minus.derivative();
    HerglotzData out;
    out.poles = zeros;
    out.residues.resize(zeros.size());
    for (size_t j = 0; j < zeros.size(); ++j) {
        const double d = dtm(zeros[j]);
        if (d == 0.0) throw validation_error("herglotz_decomposition: vanishing derivative at pole");
        out.residues[j] = hb.theta_plus(zeros[j]) / d;
    }
    // polynomial part by coefficient matching at the top
    const int dp = hb.theta_plus.degree();
    const double lead_m = hb.theta_minus.coeff(dm);
    out.b = (dp == dm + 1) ? hb.theta_plus.coeff(dp) / lead_m : 0.0;
    // a = limit of Theta+/Theta- - b z at infinity
    out.a = (hb.theta_plus.coeff(dm) - out.b * hb.theta_minus.coeff(dm - 1)) / lead_m;
    return out;
}

// ---------------------------------------------------------------------------
// Second-column reconstruction.

namespace {

// Newton interpolation through (x_i, y_i), expanded to monomial coefficients.
CPoly interpolate(const std::vector<double>& xs, const std::vector<cplx>& ys) {
    const size_t n = xs.size();
    std::vector<cplx> dd = ys;  // divided differences, in place
    for (size_t j = 1; j < n; ++j)
        for (size_t i = n - 1; i >= j; --i) dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - j]);
    // Horner expansion of the Newton form
    CPoly p;
    for (size_t k = n; k-- > 0;) {
        p = p * CPoly({-xs[k], 1.0}) + CPoly({dd[k]});
    }
    return p;
}

std::vector<double> chebyshev_nodes(int count, double half_width,
                                    const std::vector<double>& avoid) {
    std::vector<double> xs(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        double x = half_width * std::cos(kPi * (2.0 * i + 1.0) / (2.0 * count));
        for (double r : avoid)
            if (std::abs(x - r) < 1e-3) x += (x >= r ? 1e-3 : -1e-3);
        xs[static_cast<size_t>(i)] = x;
    }
    return xs;
}

std::vector<cplx> halfplane_sample(int count) {
    // deterministic, loosely space-filling points in C+
    std::vector<cplx> pts(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double a = std::fmod(0.6180339887498949 * (i + 1), 1.0);
        const double b = std::fmod(0.7548776662466927 * (i + 1), 1.0);
        pts[static_cast<size_t>(i)] = cplx(8.0 * a - 4.0, 0.1 + 3.9 * b);
    }
    return pts;
}

}  // namespace

SecondColumn reconstruct_second_column(const HBPolynomial& hb) {
    hb.require_strict_normalized("reconstruct_second_column");
    const int n = hb.degree();
    const CPoly tp(hb.theta_plus), tm(hb.theta_minus);

    // w = (Theta+ - 1)/t, exact division (Theta+(0) = 1)
    const CPoly w = (tp - CPoly({1.0})).deflate(cplx(0.0));

    std::vector<double> avoid;
    if (hb.theta_minus.degree() >= 1) avoid = poly_real_roots(hb.theta_minus);
    const std::vector<double> nodes =
        chebyshev_nodes(n + 1, static_cast<double>(n + 1), avoid);

    std::vector<cplx> phi_plus_vals(nodes.size()), phi_minus_vals(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
        const double l = nodes[i];
        // divided differences (Theta(.) - Theta(l)) / (. - l): exact deflation.
        // All arguments have real coefficients at a real node, so the scalar
        // products are real; the imaginary residue noise is discarded.
        const CPoly dp = (tp - CPoly({tp(cplx(l))})).deflate(cplx(l));
        const CPoly dm = (tm - CPoly({tm(cplx(l))})).deflate(cplx(l));
        const double gp = (inner_product(dp, w, hb) / kPi).real();
        const double gm = (inner_product(dm, w, hb) / kPi).real();
        phi_plus_vals[i] = l * gp;
        phi_minus_vals[i] = 1.0 + l * gm;
    }

    CPoly phip_c = interpolate(nodes, phi_plus_vals);
    CPoly phim_c = interpolate(nodes, phi_minus_vals);
    SecondColumn out{phip_c.real_part(), phim_c.real_part()};

    // det [Theta, Phi] = Theta+ Phi- - Theta- Phi+ == 1 within 1e-9
    const Poly det = hb.theta_plus * out.phi_minus - hb.theta_minus * out.phi_plus;
    {
        Poly dev = det - Poly::constant(1.0);
        double worst = 0.0;
        for (double c : dev.coeffs()) worst = std::max(worst, std::abs(c));
        if (worst > 1e-9)
            throw numeric_error("reconstruct_second_column: det[Theta,Phi] deviates from 1 by " +
                                std::to_string(worst));
    }

    // partial-fraction identity for Phi+/Theta+ over the zeros of Theta+
    if (hb.theta_plus.degree() >= 1) {
        const std::vector<double> taus = poly_real_roots(hb.theta_plus);
        const Poly dtp = hb.theta_plus.derivative();
        auto sum_at = [&](cplx l) {
            cplx s = 0.0;
            for (double tau : taus) {
                const double mu = 1.0 / (dtp(tau) * hb.theta_minus(tau));
                s += mu * (1.0 / (tau - l) - 1.0 / tau);
            }
            return s;
        };
        for (const cplx l : {cplx(0.37, 1.1), cplx(-1.21, 0.63), cplx(2.05, 2.4)}) {
            const cplx lhs = CPoly(out.phi_plus)(l) / tp(l);
            const cplx rhs = sum_at(l);
            if (std::abs(lhs - rhs) > 1e-8 * (1.0 + std::abs(rhs)))
                throw numeric_error(
                    "reconstruct_second_column: Phi+/Theta+ partial-fraction check failed");
        }
    } else {
        // empty sum: Phi+ must vanish identically
        if (!out.phi_plus.is_zero())
            throw numeric_error("reconstruct_second_column: Phi+ should vanish for constant Theta+");
    }

    // Herglotz sign checks in C+
    for (const cplx& z : halfplane_sample(50)) {
        const cplx r1 = CPoly(out.phi_minus)(z) / tm(z);
        const cplx r2 = hb.theta_plus.degree() >= 1 ? CPoly(out.phi_plus)(z) / tp(z) : cplx(0.0);
        if (r1.imag() < -1e-9 || r2.imag() < -1e-9)
            throw numeric_error("reconstruct_second_column: Herglotz sign check failed");
    }

    // tr J dN/dl (0) = dPhi+(0) - dTheta-(0) > 0
    if (!(out.phi_plus.coeff(1) - hb.theta_minus.coeff(1) > 0.0))
        throw numeric_error("reconstruct_second_column: tr J dN(0) is not positive");

    return out;
}

double system_length_from_e(const HBPolynomial& hb) {
    hb.require_strict_normalized("system_length_from_e");
    const CPoly w = (CPoly(hb.theta_plus) - CPoly({1.0})).deflate(cplx(0.0));
    const cplx nrm = w.is_zero() ? cplx(0.0) : inner_product(w, w, hb);
    return nrm.real() / kPi - hb.theta_minus.coeff(1);
}

// ---------------------------------------------------------------------------

double log_abs_poly_iy(const CPoly& p, double y) {
    // |p(iy)| = y^n |sum c_k i^k y^{k-n}|, summed top-down to avoid overflow
    const int n = p.degree();
    if (n < 0) return -std::numeric_limits<double>::infinity();
    cplx acc = 0.0;
    const cplx iy(0.0, y);
    // Horner in 1/(iy): p(iy)/ (iy)^n = c_n + c_{n-1}/(iy) + ...
    for (int k = 0; k <= n; ++k) acc = acc / iy + p.coeff(n - k);
    return n * std::log(y) + std::log(std::abs(acc));
}

double numeric_type(const std::function<double(double)>& log_abs_e_iy, double y_max) {
    if (!(y_max > 10.0)) throw validation_error("numeric_type: y_max must exceed 10");
    const int samples = 48;
    const double y_lo = y_max / 10.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < samples; ++i) {
        const double y = y_lo * std::pow(y_max / y_lo, static_cast<double>(i) / (samples - 1));
        const double v = log_abs_e_iy(y);
        sx += y;
        sy += v;
        sxx += y * y;
        sxy += y * v;
    }
    const double denom = samples * sxx - sx * sx;
    return (samples * sxy - sx * sy) / denom;
}

double numeric_type(const HBPolynomial& hb, double y_max) {
    const CPoly e = hb.e();
    return numeric_type([&](double y) { return log_abs_poly_iy(e, y); }, y_max);
}

bool membership_check(const CPoly& f, const HBPolynomial& hb) {
    const int n = hb.degree();
    if (f.degree() > n - 1) return false;
    if (f.is_zero()) return true;
    const cplx nrm2c = inner_product(f, f, hb);
    const double nrm2 = nrm2c.real();
    for (const cplx& z : halfplane_sample(40)) {
        const cplx kz = reproducing_kernel(hb, z, z);
        const double bound = nrm2 * kz.real();
        const double val = std::norm(f(z));
        if (val > bound * (1.0 + 1e-6) + 1e-12) return false;
    }
    return true;
}

}  // namespace canon
