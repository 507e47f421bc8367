#include "canon/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "canon/evolve.hpp"
#include "canon/jacobi.hpp"
#include "canon/log.hpp"

namespace canon {

namespace {

const cplx kI{0.0, 1.0};

std::string io_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

double max_abs_coeff(const Poly& p) {
    double m = 0.0;
    for (double c : p.coeffs()) m = std::max(m, std::abs(c));
    return m;
}

// Solve the 8-unknown least-squares system Theta1_k = L0 theta_k + L1
// theta_{k-1} over coefficient rows k = 0..n+1. Returns max residual.
double solve_lambda_matching(const HBPolynomial& theta, const HBPolynomial& theta1, double l0[4],
                             double l1[4]) {
    const int n = theta.degree();
    // unknowns ordered [l0_11, l0_12, l1_11, l1_12] for the plus rows and
    // [l0_21, l0_22, l1_21, l1_22] for the minus rows; the two blocks decouple.
    // Householder QR keeps the conditioning of the coefficient matrix itself
    // (the coefficients can span several orders of magnitude).
    auto solve_block = [&](const Poly& target) {
        const int rows = n + 2;
        std::vector<std::array<double, 5>> a(static_cast<size_t>(rows));
        for (int k = 0; k < rows; ++k) {
            a[static_cast<size_t>(k)] = {theta.theta_plus.coeff(k), theta.theta_minus.coeff(k),
                                         theta.theta_plus.coeff(k - 1),
                                         theta.theta_minus.coeff(k - 1), target.coeff(k)};
        }
        for (int col = 0; col < 4; ++col) {
            double nrm = 0.0;
            for (int r = col; r < rows; ++r) nrm += a[static_cast<size_t>(r)][col] * a[static_cast<size_t>(r)][col];
            nrm = std::sqrt(nrm);
            if (nrm < 1e-300) throw numeric_error("factor_step: singular coefficient-matching system");
            const double alpha = a[static_cast<size_t>(col)][col] >= 0.0 ? -nrm : nrm;
            // Householder vector v = x - alpha e1, applied in place
            std::vector<double> v(static_cast<size_t>(rows), 0.0);
            v[static_cast<size_t>(col)] = a[static_cast<size_t>(col)][col] - alpha;
            for (int r = col + 1; r < rows; ++r) v[static_cast<size_t>(r)] = a[static_cast<size_t>(r)][col];
            double vtv = 0.0;
            for (int r = col; r < rows; ++r) vtv += v[static_cast<size_t>(r)] * v[static_cast<size_t>(r)];
            if (vtv < 1e-300) continue;
            for (int c2 = col; c2 < 5; ++c2) {
                double dot = 0.0;
                for (int r = col; r < rows; ++r) dot += v[static_cast<size_t>(r)] * a[static_cast<size_t>(r)][c2];
                const double f = 2.0 * dot / vtv;
                for (int r = col; r < rows; ++r) a[static_cast<size_t>(r)][c2] -= f * v[static_cast<size_t>(r)];
            }
        }
        std::array<double, 4> x{};
        for (int i = 3; i >= 0; --i) {
            double acc = a[static_cast<size_t>(i)][4];
            for (int j = i + 1; j < 4; ++j) acc -= a[static_cast<size_t>(i)][j] * x[static_cast<size_t>(j)];
            if (std::abs(a[static_cast<size_t>(i)][i]) < 1e-300)
                throw numeric_error("factor_step: singular coefficient-matching system");
            x[static_cast<size_t>(i)] = acc / a[static_cast<size_t>(i)][i];
        }
        return x;
    };

    const auto plus = solve_block(theta1.theta_plus);
    const auto minus = solve_block(theta1.theta_minus);
    l0[0] = plus[0];
    l0[1] = plus[1];
    l1[0] = plus[2];
    l1[1] = plus[3];
    l0[2] = minus[0];
    l0[3] = minus[1];
    l1[2] = minus[2];
    l1[3] = minus[3];

    // residual
    const double scale = std::max({1.0, max_abs_coeff(theta.theta_plus),
                                   max_abs_coeff(theta.theta_minus)});
    double resid = 0.0;
    for (int k = 0; k <= n + 1; ++k) {
        const double tp = theta.theta_plus.coeff(k), tm = theta.theta_minus.coeff(k);
        const double tpp = theta.theta_plus.coeff(k - 1), tmp = theta.theta_minus.coeff(k - 1);
        resid = std::max(resid, std::abs(theta1.theta_plus.coeff(k) - l0[0] * tp - l0[1] * tm -
                                         l1[0] * tpp - l1[1] * tmp));
        resid = std::max(resid, std::abs(theta1.theta_minus.coeff(k) - l0[2] * tp - l0[3] * tm -
                                         l1[2] * tpp - l1[3] * tmp));
    }
    return resid / scale;
}

Poly truncate_degree(const Poly& p, int max_deg, double drop_gate, const char* who) {
    std::vector<double> c = p.coeffs();
    double dropped = 0.0;
    for (size_t k = c.size(); k-- > 0;) {
        if (static_cast<int>(k) <= max_deg) break;
        dropped = std::max(dropped, std::abs(c[k]));
        c.pop_back();
    }
    const double scale = std::max(1.0, max_abs_coeff(p));
    if (dropped > drop_gate * scale)
        throw numeric_error(std::string(who) + ": factorization degeneracy (top coefficients " +
                            std::to_string(dropped / scale) + " above gate)");
    return Poly(std::move(c));
}

}  // namespace

FactorizationStep factor_step(const HBPolynomial& hb) {
    const int n = hb.degree();
    if (n < 2) throw validation_error("factor_step: terminal case (degree < 2)");
    const CPoly e = hb.e();
    if (std::abs(e(cplx(0.0)) - cplx(1.0)) > 1e-9)
        throw validation_error("factor_step: E(0) != 1");
    if (!(herglotz_margin_sample(hb) > 0.0))
        throw validation_error("factor_step: E is not Hermite-Biehler");
    // root margin decides whether the kernel-space construction is
    // numerically meaningful (its scalar products blow up like 1/margin)
    const double margin = is_hermite_biehler(e, 0.0).margin;
    const bool kernel_route = margin > 1e-6;

    // Exact consequence of the matching equations Theta1 = (L0 + l L1) Theta:
    // S theta_n = 0 and S theta_{n-1} = -theta_n pin S from the two top
    // coefficient vectors.
    double s[4];
    {
        const double an = hb.theta_plus.coeff(n), bn = hb.theta_minus.coeff(n);
        const double am = hb.theta_plus.coeff(n - 1), bm = hb.theta_minus.coeff(n - 1);
        const double det_top = am * bn - an * bm;
        const double top_scale = std::max({std::abs(an), std::abs(bn), std::abs(am), std::abs(bm)});
        if (std::abs(det_top) < 1e-12 * top_scale * top_scale)
            throw numeric_error("factor_step: top coefficient vectors are parallel");
        // S [theta_{n-1} theta_n] = [-theta_n 0]
        s[0] = -an * bn / det_top;
        s[1] = an * an / det_top;
        s[2] = -bn * bn / det_top;
        s[3] = an * bn / det_top;
    }

    double det_l0 = 1.0, l0[4] = {1.0, 0.0, 0.0, 1.0};
    HBPolynomial theta1;
    if (kernel_route) {
        // e_perp = E + e^{i alpha} E*, alpha cancelling the leading coefficient
        const cplx cn = e.coeff(n);
        const cplx phase = -cn / std::conj(cn);
        const CPoly e_perp = e + phase * e.conj_coeffs();
        if (e_perp.degree() > n - 1)
            throw numeric_error("factor_step: leading-coefficient cancellation failed");

        const cplx norm_e2c = inner_product(e_perp, e_perp, hb);
        const double norm_e2 = norm_e2c.real();
        if (!(norm_e2 > 0.0)) throw numeric_error("factor_step: ||e||^2 is not positive");

        // kernel of the codimension-one subspace at the point i (a = -i)
        const cplx w_pt = kI;
        const CPoly k_full = kernel_polynomial(hb, w_pt);
        const cplx e_at_w = e_perp(w_pt);
        const CPoly k_sub = k_full - (std::conj(e_at_w) / norm_e2) * e_perp;

        // Ehat1 = (z - a) K^X(z) with a = -i; E1 = Ehat1 / Ehat1(0)
        const CPoly ehat1 = CPoly({kI, 1.0}) * k_sub;  // (z + i) K
        const cplx ehat1_0 = ehat1(cplx(0.0));
        if (std::abs(ehat1_0) < 1e-12)
            throw numeric_error("factor_step: intermediate function vanishes at 0");
        const CPoly e1 = (1.0 / ehat1_0) * ehat1;
        theta1 = theta_from_e(e1);

        double l1[4];
        const double resid = solve_lambda_matching(hb, theta1, l0, l1);
        if (resid > 1e-8)
            throw numeric_error("factor_step: coefficient-matching residual " +
                                std::to_string(resid) + " exceeds 1e-8");

        det_l0 = l0[0] * l0[3] - l0[1] * l0[2];
        const double norm_l0 =
            std::abs(l0[0]) + std::abs(l0[1]) + std::abs(l0[2]) + std::abs(l0[3]);
        if (std::abs(det_l0) < 1e-10 * norm_l0 * norm_l0)
            throw numeric_error("factor_step: Lambda0 is numerically singular (det " +
                                std::to_string(det_l0) + ", scale " + std::to_string(norm_l0) +
                                ")");

        // S = Lambda0^{-1} Lambda1, cross-checked against the exact route
        const double s_ls[4] = {(l0[3] * l1[0] - l0[1] * l1[2]) / det_l0,
                                (l0[3] * l1[1] - l0[1] * l1[3]) / det_l0,
                                (-l0[2] * l1[0] + l0[0] * l1[2]) / det_l0,
                                (-l0[2] * l1[1] + l0[0] * l1[3]) / det_l0};
        double dev = 0.0, s_nrm = 0.0;
        for (int i = 0; i < 4; ++i) {
            dev = std::max(dev, std::abs(s_ls[i] - s[i]));
            s_nrm = std::max(s_nrm, std::abs(s[i]));
        }
        if (dev > 1e-4 * std::max(1.0, s_nrm))
            throw numeric_error(
                "factor_step: Lambda route disagrees with the top-coefficient route by " +
                io_sci(dev / std::max(1.0, s_nrm)));
    } else {
        CANON_LOG_INFO("factor_step: root margin " + io_sci(margin) +
                       " below kernel-route resolution; using the exact route only");
    }

    const double s_scale = std::max({1e-30, std::abs(s[0]), std::abs(s[1]), std::abs(s[2]),
                                     std::abs(s[3])});
    if (std::abs(s[0] + s[3]) > 1e-9 * s_scale ||
        std::abs(s[0] * s[3] - s[1] * s[2]) > 1e-9 * s_scale * s_scale)
        throw numeric_error("factor_step: S is not trace/determinant free");
    if (s[1] > 1e-9 * s_scale || s[2] < -1e-9 * s_scale)
        throw numeric_error("factor_step: S sign pattern violated");

    // project to an exactly nilpotent matrix: s11 = -s22 = +-sqrt(-s12 s21)
    const double off = std::sqrt(std::max(0.0, -std::min(s[1], 0.0) * std::max(s[2], 0.0)));
    const double diag = std::copysign(off, s[0] + 1e-300);
    Mat2 smat{diag, std::min(s[1], 0.0), std::max(s[2], 0.0), -diag};

    // remainder via the exact inverse (I - l S)^{-1} = I + l S, truncated at
    // degree n-1; cross-checked against Lambda0^{-1} Theta1
    const Poly lam = Poly::monomial(1);
    Poly psi_p = hb.theta_plus + lam * (smat.m11.real() * hb.theta_plus +
                                        smat.m12.real() * hb.theta_minus);
    Poly psi_m = hb.theta_minus + lam * (smat.m21.real() * hb.theta_plus +
                                         smat.m22.real() * hb.theta_minus);
    psi_p = truncate_degree(psi_p, n - 1, 1e-8, "factor_step");
    psi_m = truncate_degree(psi_m, n - 1, 1e-8, "factor_step");

    if (kernel_route) {
        // Lambda0^{-1} Theta1 must agree with the exact-inverse remainder
        const Poly alt_p = (1.0 / det_l0) * (l0[3] * theta1.theta_plus +
                                             (-l0[1]) * theta1.theta_minus);
        const Poly alt_m = (1.0 / det_l0) * ((-l0[2]) * theta1.theta_plus +
                                             l0[0] * theta1.theta_minus);
        const double scale = std::max(1.0, std::max(max_abs_coeff(psi_p), max_abs_coeff(psi_m)));
        const Poly dp = alt_p - psi_p, dm = alt_m - psi_m;
        const double dev = std::max(max_abs_coeff(dp), max_abs_coeff(dm));
        if (dev > 1e-4 * scale)
            throw numeric_error("factor_step: remainder routes disagree by " + io_sci(dev / scale));
    }

    HBPolynomial rem{psi_p, psi_m, true};
    if (!(herglotz_margin_sample(rem) > 0.0))
        throw numeric_error("factor_step: factorization degeneracy (remainder not HB)");

    FactorizationStep step;
    step.s_matrix = smat;
    step.segment = segment_from_nilpotent(Mat2{-smat.m11, -smat.m12, -smat.m21, -smat.m22});
    step.remainder = std::move(rem);
    return step;
}

Segment segment_from_nilpotent(const Mat2& r) {
    const double r11 = r.m11.real(), r12 = r.m12.real(), r21 = r.m21.real(), r22 = r.m22.real();
    const double scale = std::max({std::abs(r11), std::abs(r12), std::abs(r21), std::abs(r22)});
    if (scale < 1e-12) throw validation_error("segment_from_nilpotent: empty segment (R = 0)");
    const Mat2 r2 = r * r;
    if (mat2_frobenius(r2) > 1e-9 * scale * scale)
        throw validation_error("segment_from_nilpotent: R is not nilpotent");
    if (r12 < -1e-9 * scale || r21 > 1e-9 * scale)
        throw validation_error("segment_from_nilpotent: sign pattern R12 >= 0 >= R21 violated");

    const double a = std::max(r12, 0.0) - std::min(r21, 0.0);
    const double em = std::sqrt(std::max(r12, 0.0) / a);
    const double ep = (r11 >= 0.0 ? 1.0 : -1.0) * std::sqrt(std::max(-r21, 0.0) / a);
    const double angle = std::atan2(em, ep);

    // reproduction check at lambda = 1
    const Mat2 rebuilt = singular_interval_monodromy(a, angle, 1.0) - Mat2::identity();
    if (mat2_frobenius(rebuilt - r) > 1e-9 * std::max(1.0, scale))
        throw numeric_error("segment_from_nilpotent: reproduction check failed");
    return Segment::rank_one(a, angle);
}

Segment terminal_segment(const HBPolynomial& hb) {
    if (hb.degree() != 1) throw validation_error("terminal_segment: degree must be 1");
    if (std::abs(hb.theta_plus.coeff(0) - 1.0) > 1e-9 || std::abs(hb.theta_minus.coeff(0)) > 1e-9)
        throw validation_error("terminal_segment: Theta(0) != (1,0)");
    const double a = hb.theta_plus.coeff(1);
    const double b = hb.theta_minus.coeff(1);
    if (!(b < 0.0)) throw validation_error("terminal_segment: not HB (b >= 0)");
    const Mat2 r{a, -a * a / b, b, -a};
    return segment_from_nilpotent(r);
}

Hamiltonian solve_polynomial_inverse(const HBPolynomial& hb) {
    const int n = hb.degree();
    if (n < 1) throw validation_error("solve_polynomial_inverse: constant E");
    if (std::abs(hb.e()(cplx(0.0)) - cplx(1.0)) > 1e-9)
        throw validation_error("solve_polynomial_inverse: E(0) != 1");
    if (!(herglotz_margin_sample(hb) > 0.0))
        throw validation_error("solve_polynomial_inverse: E is not Hermite-Biehler");

    std::vector<Segment> right_to_left;
    HBPolynomial cur = hb;
    while (cur.degree() >= 2) {
        FactorizationStep step = factor_step(cur);
        right_to_left.push_back(step.segment);
        cur = std::move(step.remainder);
    }
    right_to_left.push_back(terminal_segment(cur));

    Hamiltonian h;
    h.trace_normalized = true;
    h.segments.assign(right_to_left.rbegin(), right_to_left.rend());
    if (static_cast<int>(h.segments.size()) != n)
        throw numeric_error("solve_polynomial_inverse: segment count != deg E");

    // (L): the first segment may not have direction (0,1)
    if (std::abs(std::cos(h.segments.front().angle)) < 1e-9)
        CANON_LOG_INFO("solve_polynomial_inverse: first segment has direction (0,1)");

    // monodromy roundtrip: product of the factors must reproduce Theta
    const MonodromyPoly mp = monodromy_polynomial(h);
    const double scale = std::max({1.0, max_abs_coeff(hb.theta_plus), max_abs_coeff(hb.theta_minus)});
    const double dev = std::max(max_abs_coeff(mp.theta_plus - hb.theta_plus),
                                max_abs_coeff(mp.theta_minus - hb.theta_minus));
    if (dev > 1e-7 * scale)
        throw numeric_error("solve_polynomial_inverse: monodromy roundtrip residual " +
                            std::to_string(dev / scale));
    return h;
}

HBPolynomial theta_from_atoms(const AtomicMeasure& mu, double d1) {
    mu.validate();
    double mu0 = 0.0;
    bool has_zero = false;
    for (const auto& atom : mu.atoms) {
        if (atom.t == 0.0) {
            has_zero = true;
            mu0 = atom.w;
        }
    }
    if (!has_zero)
        throw validation_error(
            "theta_from_atoms: measure must be supported on finitely many points with an atom at 0");

    // Theta-(z) = -(1/mu0) z prod_{t_j != 0} (1 - z/t_j)
    Poly theta_m = Poly({0.0, -1.0 / mu0});
    for (const auto& atom : mu.atoms) {
        if (atom.t == 0.0) continue;
        theta_m = theta_m * Poly({1.0, -1.0 / atom.t});
    }

    const Poly dtheta_m = theta_m.derivative();
    // Theta+ = (sum_j -1/(mu_j dTheta-(t_j)^2) / (z - t_j) + d1) Theta-,
    // with a companion polynomial of per-term absolute masses tracking how
    // much cancellation the sum carries
    auto abs_coeffs = [](const Poly& p) {
        std::vector<double> c = p.coeffs();
        for (double& v : c) v = std::abs(v);
        return Poly(std::move(c));
    };
    Poly theta_p = d1 * theta_m;
    Poly theta_p_mass = std::abs(d1) * abs_coeffs(theta_m);
    for (const auto& atom : mu.atoms) {
        const double d = dtheta_m(atom.t);
        const double coeff = -1.0 / (atom.w * d * d);
        const Poly term = theta_m.deflate(atom.t);
        theta_p = theta_p + coeff * term;
        theta_p_mass = theta_p_mass + std::abs(coeff) * abs_coeffs(term);
    }

    // Theta+(0) = 1 holds analytically; restore it exactly
    const double at0 = theta_p(0.0);
    if (std::abs(at0 - 1.0) > 1e-7)
        throw numeric_error("theta_from_atoms: constant-term drift " + io_sci(at0 - 1.0));
    theta_p = (1.0 / at0) * theta_p;
    theta_m = (1.0 / at0) * theta_m;

    HBPolynomial hb{theta_p, theta_m, true};
    if (!(herglotz_margin_sample(hb) > 0.0))
        throw numeric_error("theta_from_atoms: output is not Hermite-Biehler");

    // residue consistency: -1/(Theta+(t_j) dTheta-(t_j)) = mu_j. The noise
    // floor of the check is eps times the cancelled absolute mass of the
    // construction at the evaluation point.
    const Poly dtm_mass = abs_coeffs(dtheta_m);
    for (const auto& atom : mu.atoms) {
        const double tp_val = hb.theta_plus(atom.t);
        const double dm_val = dtheta_m(atom.t);
        const double at = std::abs(atom.t);
        const double rel_noise =
            1e-14 * (10.0 + hb.theta_minus.degree()) *
            (theta_p_mass(at) / std::max(std::abs(tp_val), 1e-300) +
             dtm_mass(at) / std::max(std::abs(dm_val), 1e-300));
        if (rel_noise > 0.1) {
            // the identity holds by construction but cannot be certified in
            // doubles at this conditioning
            CANON_LOG_DEBUG("theta_from_atoms: consistency at t = " + io_sci(atom.t) +
                            " uncertifiable (noise floor " + io_sci(rel_noise) + ")");
            continue;
        }
        const double w = -1.0 / (tp_val * dm_val);
        const double deg_scale =
            std::max(1.0, std::pow(hb.theta_minus.degree() / 8.0, 2.0));
        const double gate =
            std::max(1e-10 * std::max(1.0, atom.w) * deg_scale, atom.w * rel_noise);
        if (std::abs(w - atom.w) > gate)
            throw numeric_error("theta_from_atoms: residue consistency check failed at t = " +
                                io_sci(atom.t) + " (err " + io_sci(std::abs(w - atom.w)) +
                                ", gate " + io_sci(gate) + ")");
    }
    return hb;
}

namespace {

// Three-term recurrence of the orthonormal polynomials of a finite discrete
// probability measure (Lanczos with full reorthogonalization): numerically
// stable for any atom spread.
void stieltjes_recurrence(const std::vector<double>& t, const std::vector<double>& p,
                          std::vector<double>& alpha, std::vector<double>& beta) {
    const size_t n = t.size();
    alpha.assign(n, 0.0);
    beta.assign(n > 0 ? n - 1 : 0, 0.0);
    std::vector<std::vector<double>> basis;  // orthonormal vectors in l^2(p)
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = std::sqrt(p[i]);
    basis.push_back(v);
    for (size_t k = 0; k < n; ++k) {
        std::vector<double> w(n);
        for (size_t i = 0; i < n; ++i) w[i] = t[i] * basis[k][i];
        double a = 0.0;
        for (size_t i = 0; i < n; ++i) a += w[i] * basis[k][i];
        alpha[k] = a;
        if (k + 1 == n) break;
        for (size_t i = 0; i < n; ++i) w[i] -= a * basis[k][i];
        if (k > 0)
            for (size_t i = 0; i < n; ++i) w[i] -= beta[k - 1] * basis[k - 1][i];
        // full reorthogonalization
        for (const std::vector<double>& b : basis) {
            double dot = 0.0;
            for (size_t i = 0; i < n; ++i) dot += w[i] * b[i];
            for (size_t i = 0; i < n; ++i) w[i] -= dot * b[i];
        }
        double nrm = 0.0;
        for (double x : w) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (!(nrm > 1e-14))
            throw numeric_error("finite measure inverse: recurrence broke down");
        beta[k] = nrm;
        for (double& x : w) x /= nrm;
        basis.push_back(std::move(w));
    }
}

// Stabilized route through the Jacobi bridge. The atoms and weights give the
// tridiagonal recurrence; the total mass pins l1 cos^2(phi1) = 1/W; the gauge
// constant d1 equals -tan(angle_n) (leading coefficient of Theta is a
// multiple of J e_n), which the seed angle is shot for.
Hamiltonian finite_measure_inverse_via_jacobi(const AtomicMeasure& mu, double d1) {
    const size_t n = mu.atoms.size();
    double total_mass = 0.0;
    for (const auto& atom : mu.atoms) total_mass += atom.w;
    std::vector<double> t(n), p(n);
    for (size_t i = 0; i < n; ++i) {
        t[i] = mu.atoms[i].t;
        p[i] = mu.atoms[i].w / total_mass;
    }
    JacobiMatrix jm;
    stieltjes_recurrence(t, p, jm.q, jm.rho);

    auto chain_for = [&](double phi1) {
        const double l1 = 1.0 / (total_mass * std::cos(phi1) * std::cos(phi1));
        return jacobi_to_hamiltonian(jm, phi1, l1);
    };
    // F(phi1) = cross(e_n, (1, -d1)): zero when the last link matches the gauge
    auto target = [&](double phi1) {
        const RankOneChain chain = chain_for(phi1);
        const double ang = chain.links.back().angle;
        return -d1 * std::cos(ang) - std::sin(ang);
    };

    const int scan = 720;
    const double lim = 1.5207963267948966;  // pi/2 - 0.05
    double best_a = 0.0, best_b = 0.0;
    bool found = false;
    double prev_phi = -lim, prev_val = target(prev_phi);
    for (int k = 1; k <= scan && !found; ++k) {
        const double phi = -lim + 2.0 * lim * k / scan;
        const double val = target(phi);
        if ((val < 0.0) != (prev_val < 0.0)) {
            best_a = prev_phi;
            best_b = phi;
            found = true;
        }
        prev_phi = phi;
        prev_val = val;
    }
    if (!found) throw numeric_error("finite measure inverse: gauge shooting found no root");
    for (int it = 0; it < 80; ++it) {
        const double mid = (best_a + best_b) / 2.0;
        if ((target(mid) < 0.0) == (target(best_a) < 0.0))
            best_a = mid;
        else
            best_b = mid;
    }
    const RankOneChain chain = chain_for((best_a + best_b) / 2.0);
    return chain.to_hamiltonian();
}

}  // namespace

Hamiltonian solve_finite_measure_inverse(const AtomicMeasure& mu, double d1) {
    // Dilation to the geometric mean of the atom positions keeps the
    // polynomial coefficients balanced (see the regular-case note). The
    // measure of the dilated system x -> H(sigma x) has atoms (t/sigma,
    // w/sigma); lengths scale back by 1/sigma.
    double log_sum = 0.0;
    int nonzero = 0;
    for (const auto& atom : mu.atoms) {
        if (atom.t == 0.0) continue;
        log_sum += std::log(std::abs(atom.t));
        ++nonzero;
    }
    const double sigma = nonzero > 0 ? std::exp(log_sum / nonzero) : 1.0;
    AtomicMeasure scaled = mu;
    for (auto& atom : scaled.atoms) {
        atom.t /= sigma;
        atom.w /= sigma;
    }
    try {
        // the affine gauge constant of Theta+/Theta- is dilation-invariant
        Hamiltonian h = solve_polynomial_inverse(theta_from_atoms(scaled, d1));
        for (Segment& s : h.segments) s.length /= sigma;
        return h;
    } catch (const numeric_error& e) {
        // Wide equal-mass atomizations produce Herglotz residues near the
        // noise floor and the factorization chain degrades; the recurrence
        // route is stable there and produces the same system.
        CANON_LOG_INFO(std::string("solve_finite_measure_inverse: ") + e.what() +
                       "; switching to the recurrence route");
        Hamiltonian h = finite_measure_inverse_via_jacobi(scaled, d1);
        for (Segment& s : h.segments) s.length /= sigma;
        return h;
    }
}

// ---------------------------------------------------------------------------
// Regular-case algorithm.

void RegularHBSpec::validate() const {
    if (zeros.empty() || zeros[0] != 0.0)
        throw validation_error("RegularHBSpec: zeros must start with t0 = 0");
    if (zeros.size() != residues.size())
        throw validation_error("RegularHBSpec: zeros/residues size mismatch");
    for (size_t i = 1; i < zeros.size(); ++i) {
        if (zeros[i] == 0.0) throw validation_error("RegularHBSpec: duplicate zero at 0");
        if (std::abs(zeros[i]) + 1e-15 < std::abs(zeros[i - 1]))
            throw validation_error("RegularHBSpec: zeros must be ordered by |t_j|");
    }
    for (double r : residues)
        if (!(r < 0.0)) throw validation_error("RegularHBSpec: residues must be negative");
    if (!(dtheta_minus_0 < 0.0))
        throw validation_error("RegularHBSpec: dTheta-(0) must be negative");
    if (std::abs(residues[0] - 1.0 / dtheta_minus_0) > 1e-8 * std::abs(residues[0]))
        throw validation_error("RegularHBSpec: mu_0 must equal 1/dTheta-(0)");
    if (b < 0.0) throw validation_error("RegularHBSpec: b must be nonnegative");
}

HBPolynomial truncated_theta(const RegularHBSpec& spec, int n) {
    spec.validate();
    if (n < 1) throw validation_error("truncated_theta: N must be >= 1");
    const int count = std::min<int>(n, static_cast<int>(spec.zeros.size()));

    Poly theta_m = Poly({0.0, spec.dtheta_minus_0});
    for (int j = 1; j < count; ++j) theta_m = theta_m * Poly({1.0, -1.0 / spec.zeros[j]});

    Poly theta_p = Poly({spec.a, spec.b}) * theta_m;
    for (int j = 0; j < count; ++j)
        theta_p = theta_p + spec.residues[j] * theta_m.deflate(spec.zeros[j]);

    // E(0) = 1 holds analytically (mu_0 = 1/dTheta-(0)); restore it exactly
    const double at0 = theta_p(0.0);
    if (std::abs(at0 - 1.0) > 1e-8)
        throw numeric_error("truncated_theta: constant-term drift " + std::to_string(at0 - 1.0));
    theta_p = (1.0 / at0) * theta_p;
    theta_m = (1.0 / at0) * theta_m;

    HBPolynomial hb{theta_p, theta_m, true};
    if (!(herglotz_margin_sample(hb) > 0.0))
        throw numeric_error("truncated_theta: non-HB truncation at N = " + std::to_string(n));
    return hb;
}

namespace {

// Length of the degree-M truncated system through the explicit formula,
// evaluated by the exact spectral sum over the retained zeros (log-magnitude
// products, no polynomial root finding).
double truncation_length(const RegularHBSpec& spec, int m) {
    const int count = std::min<int>(m, static_cast<int>(spec.zeros.size()));
    const double d0 = spec.dtheta_minus_0;

    double total = -d0;
    double p1 = 0.0;          // sum 1/t_j over retained nonzero zeros
    double res_over_t = 0.0;  // sum mu_j / t_j
    for (int j = 1; j < count; ++j) {
        p1 += 1.0 / spec.zeros[j];
        res_over_t += spec.residues[j] / spec.zeros[j];
    }
    // k = 0 term: w0 * (dTheta+(0))^2 with w0 = -1/(mu0 d0^2)
    const double f0 = d0 * (-spec.residues[0] * p1 + spec.a) - res_over_t * d0;
    const double w0 = -1.0 / (spec.residues[0] * d0 * d0);
    total += w0 * f0 * f0;

    for (int k = 1; k < count; ++k) {
        const double tk = spec.zeros[k];
        // dTheta-(t_k) of the truncation: -d0 prod_{j != k} (1 - t_k/t_j)
        double log_mag = std::log(std::abs(d0));
        double sign = -(d0 < 0.0 ? -1.0 : 1.0);
        bool zero_factor = false;
        for (int j = 1; j < count; ++j) {
            if (j == k) continue;
            const double f = 1.0 - tk / spec.zeros[j];
            if (f == 0.0) {
                zero_factor = true;
                break;
            }
            log_mag += std::log(std::abs(f));
            if (f < 0.0) sign = -sign;
        }
        if (zero_factor) continue;
        // contribution (mu_k D - 1)^2 * (-1/(mu_k D^2)) = -mu_k + 2/D - 1/(mu_k D^2)
        const double inv_d = (log_mag > 700.0) ? 0.0 : sign / std::exp(log_mag);
        const double term = -spec.residues[k] + 2.0 * inv_d - inv_d * inv_d / spec.residues[k];
        total += term / (tk * tk);
    }
    return total;
}

}  // namespace

double regular_spec_length(const RegularHBSpec& spec) {
    spec.validate();
    const int available = static_cast<int>(spec.zeros.size());
    // finitely many zeros and all retained: the sum is exact
    if (available <= 64) return truncation_length(spec, available);

    // Neville extrapolation of L_M at u = 0 in the basis u = M^{-1/2}: the
    // truncation error decays like 1/sqrt(M) (measured on canonical-product
    // data; the dominant defect is the shortened system length). Odd M keeps
    // symmetric zero sets in complete +- pairs so L_M stays smooth in u.
    std::vector<int> ladder;
    int m = available | 1;
    if (m > available) m -= 2;
    while (static_cast<int>(ladder.size()) < 8 && m >= 32) {
        ladder.push_back(m);
        m = (m / 2) | 1;
    }
    std::reverse(ladder.begin(), ladder.end());
    std::vector<double> u(ladder.size()), val(ladder.size());
    for (size_t i = 0; i < ladder.size(); ++i) {
        u[i] = 1.0 / std::sqrt(static_cast<double>(ladder[i]));
        val[i] = truncation_length(spec, ladder[i]);
    }
    // Neville at u = 0
    std::vector<double> t = val;
    for (size_t j = 1; j < t.size(); ++j)
        for (size_t i = t.size() - 1; i >= j; --i)
            t[i] = t[i] + u[i] * (t[i] - t[i - 1]) / (u[i - j] - u[i]);
    return t.back();
}

RegularInverseResult regular_inverse(const RegularHBSpec& spec, int n, int grid_n) {
    spec.validate();
    if (n < 1) throw validation_error("regular_inverse: N must be >= 1");
    if (grid_n < 8) throw validation_error("regular_inverse: grid_n must be >= 8");

    RegularInverseResult res;
    res.length = regular_spec_length(spec);
    const double big_l = res.length;

    auto f_of = [&](int level, std::vector<Sym2>& f_values) {
        // Build the truncation in a dilated spectral variable w = z/sigma with
        // sigma the geometric mean of the retained zeros: the product
        // prod(1 - w/t_j) then has balanced coefficients (prod 1/|t_j| ~ 1),
        // which keeps evaluations near the real axis at full relative
        // accuracy. A spatial dilation maps the solution back: E(sigma w) is
        // the de Branges function of x -> H(sigma x), so lengths divide by
        // sigma.
        const int count = std::min<int>(level, static_cast<int>(spec.zeros.size()));
        double log_sum = 0.0;
        int nonzero = 0;
        for (int j = 1; j < count; ++j) {
            log_sum += std::log(std::abs(spec.zeros[j]));
            ++nonzero;
        }
        const double sigma = nonzero > 0 ? std::exp(log_sum / nonzero) : 1.0;
        RegularHBSpec scaled = spec;
        for (double& t : scaled.zeros) t /= sigma;
        for (double& r : scaled.residues) r /= sigma;
        scaled.b *= sigma;
        scaled.dtheta_minus_0 *= sigma;

        const HBPolynomial hb = truncated_theta(scaled, level);
        Hamiltonian h_n = solve_polynomial_inverse(hb);
        for (Segment& s : h_n.segments) s.length /= sigma;
        const double l_n = h_n.total_length();
        const double pad = std::max(0.0, big_l - l_n);
        if (pad > 0.0) {
            // left padding with the (0,1) indivisible direction per the
            // algorithm; interacts with condition (L), surfaced as diagnostic
            Hamiltonian padded;
            padded.trace_normalized = true;
            padded.segments.push_back(Segment::rank_one(pad, 1.5707963267948966));
            padded.segments.insert(padded.segments.end(), h_n.segments.begin(), h_n.segments.end());
            h_n = std::move(padded);
        }
        const double total = h_n.total_length();  // max(L, L_N)
        const double base = total - big_l;
        f_values.resize(static_cast<size_t>(grid_n) + 1);
        const Sym2 f_base = accumulated_hamiltonian(h_n, base);
        for (int k = 0; k <= grid_n; ++k) {
            const double x = big_l * static_cast<double>(k) / grid_n;
            f_values[static_cast<size_t>(k)] = accumulated_hamiltonian(h_n, base + x) - f_base;
        }
        return h_n;
    };

    std::vector<Sym2> f_cur;
    Hamiltonian h_last = f_of(n, f_cur);
    if (std::abs(std::cos(h_last.segments.front().angle)) < 1e-9)
        res.diagnostics.push_back("first segment has direction (0,1): condition (L) fails for the padded approximant");

    // Cauchy increments against smaller truncations
    for (int level : {std::max(1, n / 2), std::max(1, n - 1)}) {
        if (level >= n) continue;
        std::vector<Sym2> f_prev;
        f_of(level, f_prev);
        double sup = 0.0;
        for (size_t k = 0; k < f_cur.size(); ++k) {
            const Sym2 d = f_cur[k] - f_prev[k];
            sup = std::max({sup, std::abs(d.a11), std::abs(d.a12), std::abs(d.a22)});
        }
        res.cauchy_increments.push_back(sup);
    }

    res.grid.resize(f_cur.size());
    for (size_t k = 0; k < f_cur.size(); ++k)
        res.grid[k] = big_l * static_cast<double>(k) / grid_n;
    res.f_values = f_cur;

    // difference-quotient Hamiltonian on the grid
    const double h_step = big_l / grid_n;
    std::vector<Sym2> nodes(f_cur.size());
    std::vector<Sym2> cells(f_cur.size() - 1);
    for (size_t k = 0; k + 1 < f_cur.size(); ++k)
        cells[k] = (1.0 / h_step) * (f_cur[k + 1] - f_cur[k]);
    nodes.front() = cells.front();
    nodes.back() = cells.back();
    for (size_t k = 1; k + 1 < f_cur.size(); ++k) nodes[k] = 0.5 * (cells[k - 1] + cells[k]);
    // clip tiny psd violations from differencing
    for (Sym2& m : nodes) {
        const double lo = m.min_eigenvalue();
        if (lo < 0.0) {
            m.a11 -= lo;
            m.a22 -= lo;
            const double tr = m.trace();
            if (tr > 0.0) m = (1.0 / tr) * m;
        }
    }
    res.hamiltonian.trace_normalized = true;
    res.hamiltonian.segments.push_back(Segment::sampled(big_l, std::move(nodes)));
    return res;
}

}  // namespace canon
