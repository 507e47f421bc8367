#include "canon/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace canon {

Mat2 mat2_mul(const Mat2& a, const Mat2& b) {
    return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
            a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
}

Vec2 mat2_apply(const Mat2& m, const Vec2& v) {
    return {m.m11 * v.plus + m.m12 * v.minus, m.m21 * v.plus + m.m22 * v.minus};
}

double mat2_frobenius(const Mat2& m) {
    return std::sqrt(std::norm(m.m11) + std::norm(m.m12) + std::norm(m.m21) + std::norm(m.m22));
}

double mat2_opnorm(const Mat2& m) {
    // Largest singular value: sqrt of the top eigenvalue of M* M.
    const Mat2 g = m.conj_transpose() * m;
    const double tr = g.m11.real() + g.m22.real();
    const double dt = (g.m11 * g.m22 - g.m12 * g.m21).real();
    const double disc = std::max(0.0, tr * tr / 4.0 - dt);
    return std::sqrt(std::max(0.0, tr / 2.0 + std::sqrt(disc)));
}

Mat2 mat2_exp(const Mat2& a) {
    // exp(A) = e^{mu} (cosh(w) I + sinh(w)/w * B), B = A - mu I traceless,
    // w^2 = -det(B).
    const cplx mu = a.trace() / 2.0;
    const Mat2 b = a - mu * Mat2::identity();
    const cplx w2 = -b.det();
    const cplx w = std::sqrt(w2);
    cplx ch, shw;  // cosh(w), sinh(w)/w
    if (std::abs(w) < 1e-6) {
        // series: cosh(w) = 1 + w2/2 + w2^2/24, sinh(w)/w = 1 + w2/6 + w2^2/120
        ch = 1.0 + w2 / 2.0 + w2 * w2 / 24.0;
        shw = 1.0 + w2 / 6.0 + w2 * w2 / 120.0;
    } else {
        ch = std::cosh(w);
        shw = std::sinh(w) / w;
    }
    const cplx s = std::exp(mu);
    return (s * ch) * Mat2::identity() + (s * shw) * b;
}

void hermitian2_eigenvalues(const Mat2& m, double& lo, double& hi) {
    const double a = m.m11.real();
    const double d = m.m22.real();
    const double off = std::abs(m.m12);
    const double mid = (a + d) / 2.0;
    const double rad = std::sqrt((a - d) * (a - d) / 4.0 + off * off);
    lo = mid - rad;
    hi = mid + rad;
}

double Sym2::min_eigenvalue() const {
    const double mid = (a11 + a22) / 2.0;
    const double rad = std::sqrt((a11 - a22) * (a11 - a22) / 4.0 + a12 * a12);
    return mid - rad;
}

double Sym2::max_eigenvalue() const {
    const double mid = (a11 + a22) / 2.0;
    const double rad = std::sqrt((a11 - a22) * (a11 - a22) / 4.0 + a12 * a12);
    return mid + rad;
}

// ---------------------------------------------------------------------------

Poly Poly::monomial(int degree, double coeff) {
    std::vector<double> c(static_cast<size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Poly(std::move(c));
}

double Poly::operator()(double x) const {
    double r = 0.0;
    for (size_t k = c_.size(); k-- > 0;) r = r * x + c_[k];
    return r;
}

cplx Poly::operator()(cplx z) const {
    cplx r = 0.0;
    for (size_t k = c_.size(); k-- > 0;) r = r * z + c_[k];
    return r;
}

Poly Poly::derivative() const {
    if (c_.size() <= 1) return Poly();
    std::vector<double> d(c_.size() - 1);
    for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<double>(k);
    return Poly(std::move(d));
}

void Poly::normalize() {
    double mx = 0.0;
    for (double v : c_) mx = std::max(mx, std::abs(v));
    if (mx == 0.0) {
        c_.clear();
        return;
    }
    const double tol = 1e-12 * mx;
    while (!c_.empty() && std::abs(c_.back()) < tol) c_.pop_back();
    for (double& v : c_)
        if (std::abs(v) < tol) v = 0.0;
}

Poly operator+(const Poly& a, const Poly& b) {
    std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
    for (size_t k = 0; k < b.c_.size(); ++k) c[k] += b.c_[k];
    return Poly(std::move(c));
}

Poly operator-(const Poly& a, const Poly& b) {
    std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
    for (size_t k = 0; k < b.c_.size(); ++k) c[k] -= b.c_[k];
    return Poly(std::move(c));
}

Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return Poly();
    std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
    for (size_t i = 0; i < a.c_.size(); ++i)
        for (size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(c));
}

Poly operator*(double s, const Poly& a) {
    std::vector<double> c = a.c_;
    for (double& v : c) v *= s;
    return Poly(std::move(c));
}

Poly Poly::deflate(double root) const {
    if (c_.size() <= 1) return Poly();
    std::vector<double> q(c_.size() - 1, 0.0);
    double carry = c_.back();
    for (size_t k = c_.size() - 1; k-- > 0;) {
        q[k] = carry;
        carry = c_[k] + root * carry;
    }
    return Poly(std::move(q));
}

CPoly::CPoly(const Poly& p) {
    c_.assign(p.coeffs().begin(), p.coeffs().end());
    normalize();
}

cplx CPoly::operator()(cplx z) const {
    cplx r = 0.0;
    for (size_t k = c_.size(); k-- > 0;) r = r * z + c_[k];
    return r;
}

CPoly CPoly::derivative() const {
    if (c_.size() <= 1) return CPoly();
    std::vector<cplx> d(c_.size() - 1);
    for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<double>(k);
    return CPoly(std::move(d));
}

CPoly CPoly::conj_coeffs() const {
    std::vector<cplx> d(c_.size());
    for (size_t k = 0; k < c_.size(); ++k) d[k] = std::conj(c_[k]);
    return CPoly(std::move(d));
}

void CPoly::normalize() {
    double mx = 0.0;
    for (const cplx& v : c_) mx = std::max(mx, std::abs(v));
    if (mx == 0.0) {
        c_.clear();
        return;
    }
    const double tol = 1e-12 * mx;
    while (!c_.empty() && std::abs(c_.back()) < tol) c_.pop_back();
    for (cplx& v : c_)
        if (std::abs(v) < tol) v = 0.0;
}

Poly CPoly::real_part() const {
    std::vector<double> c(c_.size());
    for (size_t k = 0; k < c_.size(); ++k) c[k] = c_[k].real();
    return Poly(std::move(c));
}

Poly CPoly::imag_part() const {
    std::vector<double> c(c_.size());
    for (size_t k = 0; k < c_.size(); ++k) c[k] = c_[k].imag();
    return Poly(std::move(c));
}

CPoly operator+(const CPoly& a, const CPoly& b) {
    std::vector<cplx> c(std::max(a.c_.size(), b.c_.size()), cplx(0.0));
    for (size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
    for (size_t k = 0; k < b.c_.size(); ++k) c[k] += b.c_[k];
    return CPoly(std::move(c));
}

CPoly operator-(const CPoly& a, const CPoly& b) {
    std::vector<cplx> c(std::max(a.c_.size(), b.c_.size()), cplx(0.0));
    for (size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
    for (size_t k = 0; k < b.c_.size(); ++k) c[k] -= b.c_[k];
    return CPoly(std::move(c));
}

CPoly operator*(const CPoly& a, const CPoly& b) {
    if (a.is_zero() || b.is_zero()) return CPoly();
    std::vector<cplx> c(a.c_.size() + b.c_.size() - 1, cplx(0.0));
    for (size_t i = 0; i < a.c_.size(); ++i)
        for (size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return CPoly(std::move(c));
}

CPoly operator*(cplx s, const CPoly& a) {
    std::vector<cplx> c = a.c_;
    for (cplx& v : c) v *= s;
    return CPoly(std::move(c));
}

CPoly CPoly::deflate(cplx root) const {
    if (c_.size() <= 1) return CPoly();
    std::vector<cplx> q(c_.size() - 1, cplx(0.0));
    cplx carry = c_.back();
    for (size_t k = c_.size() - 1; k-- > 0;) {
        q[k] = carry;
        carry = c_[k] + root * carry;
    }
    return CPoly(std::move(q));
}

void AtomicMeasure::sort_atoms() {
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.t < b.t; });
}

void AtomicMeasure::validate() const {
    for (size_t i = 0; i < atoms.size(); ++i) {
        if (!(atoms[i].w > 0.0)) throw validation_error("measure weights must be positive");
        for (size_t j = i + 1; j < atoms.size(); ++j)
            if (atoms[i].t == atoms[j].t) throw validation_error("duplicate measure atoms");
    }
}

// --------------------------------------------------------------------------
// Durand-Kerner with deterministic seeding.

namespace {

bool coeffs_are_real(const CPoly& p) {
    for (const cplx& c : p.coeffs())
        if (c.imag() != 0.0) return false;
    return true;
}

// Enforce exact conjugate symmetry of the root multiset.
void enforce_conjugate_pairs(std::vector<cplx>& roots, double scale) {
    const double im_tol = 1e-10 * scale;
    std::vector<bool> used(roots.size(), false);
    std::vector<cplx> out;
    out.reserve(roots.size());
    for (size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        if (std::abs(roots[i].imag()) <= im_tol) {
            used[i] = true;
            out.emplace_back(roots[i].real(), 0.0);
            continue;
        }
        // find the closest unused partner to conj(roots[i])
        const cplx target = std::conj(roots[i]);
        size_t best = i;
        double bestd = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < roots.size(); ++j) {
            if (j == i || used[j]) continue;
            const double d = std::abs(roots[j] - target);
            if (d < bestd) {
                bestd = d;
                best = j;
            }
        }
        if (best != i && bestd <= 1e-6 * scale) {
            used[i] = used[best] = true;
            const cplx avg = (roots[i] + std::conj(roots[best])) / 2.0;
            out.push_back(avg);
            out.push_back(std::conj(avg));
        } else {
            used[i] = true;
            out.push_back(roots[i]);
        }
    }
    roots.swap(out);
}

}  // namespace

std::vector<cplx> poly_complex_roots(const CPoly& p) {
    const int n = p.degree();
    if (n < 1) throw validation_error("poly_complex_roots: constant polynomial");
    const std::vector<cplx>& c = p.coeffs();
    const cplx lead = c.back();

    // Cauchy bound for root magnitudes.
    double bound = 0.0;
    for (int k = 0; k < n; ++k) bound = std::max(bound, std::abs(c[k] / lead));
    const double radius = 1.0 + bound;

    // Deterministic seeds on the bound circle, fixed angular offset to avoid
    // symmetry stalls.
    std::vector<cplx> z(n);
    const double two_pi = 6.283185307179586476925286766559;
    for (int k = 0; k < n; ++k) {
        const double ang = two_pi * k / n + 0.40;
        z[k] = radius * cplx(std::cos(ang), std::sin(ang));
    }

    double scale = radius;
    const int max_iter = 600;
    for (int iter = 0; iter < max_iter; ++iter) {
        double moved = 0.0;
        for (int k = 0; k < n; ++k) {
            cplx denom = lead;
            for (int j = 0; j < n; ++j) {
                if (j == k) continue;
                denom *= (z[k] - z[j]);
            }
            if (denom == cplx(0.0)) {
                z[k] += cplx(1e-8 * scale, 1e-8 * scale);
                continue;
            }
            const cplx delta = p(z[k]) / denom;
            z[k] -= delta;
            moved = std::max(moved, std::abs(delta));
        }
        if (moved < 1e-14 * scale) break;
    }

    if (coeffs_are_real(p)) enforce_conjugate_pairs(z, scale);
    std::sort(z.begin(), z.end(), [](const cplx& a, const cplx& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return z;
}

std::vector<cplx> poly_complex_roots(const Poly& p) { return poly_complex_roots(CPoly(p)); }

std::vector<RootCluster> poly_root_clusters(const CPoly& p, double cluster_tol) {
    std::vector<cplx> roots = poly_complex_roots(p);
    double scale = 1.0;
    for (const cplx& r : roots) scale = std::max(scale, std::abs(r));
    const double tol = cluster_tol * scale;

    std::vector<RootCluster> clusters;
    std::vector<bool> used(roots.size(), false);
    for (size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        cplx sum = roots[i];
        int count = 1;
        used[i] = true;
        for (size_t j = i + 1; j < roots.size(); ++j) {
            if (!used[j] && std::abs(roots[j] - roots[i]) <= tol) {
                sum += roots[j];
                ++count;
                used[j] = true;
            }
        }
        clusters.push_back({sum / static_cast<double>(count), count});
    }

    // polish each cluster by Newton iteration: a root of multiplicity m is a
    // simple, well-conditioned root of the (m-1)-th derivative
    for (RootCluster& cl : clusters) {
        CPoly target(p);
        for (int k = 1; k < cl.multiplicity; ++k) target = target.derivative();
        const CPoly dt = target.derivative();
        cplx x = cl.value;
        for (int it = 0; it < 40; ++it) {
            const cplx d = dt(x);
            if (d == cplx(0.0)) break;
            const cplx step = target(x) / d;
            x -= step;
            if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
        }
        // keep the polish only when it stays near the cluster
        if (std::abs(x - cl.value) <= std::max(tol, 1e-9 * scale)) cl.value = x;
    }
    return clusters;
}

std::vector<double> poly_real_roots(const Poly& p, double tol) {
    const int n = p.degree();
    if (n < 1) throw validation_error("poly_real_roots: constant polynomial");
    std::vector<RootCluster> clusters = poly_root_clusters(CPoly(p));
    double scale = 1.0;
    for (const auto& c : clusters) scale = std::max(scale, std::abs(c.value));

    const Poly dp = p.derivative();
    std::vector<double> out;
    for (const auto& cl : clusters) {
        if (std::abs(cl.value.imag()) > 1e-7 * scale) continue;
        double x = cl.value.real();
        // multiplicity-aware Newton polish
        for (int it = 0; it < 60; ++it) {
            const double f = p(x);
            const double df = dp(x);
            if (df == 0.0) break;
            const double step = static_cast<double>(cl.multiplicity) * f / df;
            x -= step;
            if (std::abs(step) < tol * (1.0 + std::abs(x)) / 4.0) break;
        }
        for (int m = 0; m < cl.multiplicity; ++m) out.push_back(x);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// --------------------------------------------------------------------------
// Symmetric tridiagonal eigenvalues via Sturm-count bisection.

namespace {

// number of eigenvalues < x
int sturm_count(const std::vector<double>& q, const std::vector<double>& rho, double x) {
    int count = 0;
    double d = 1.0;
    const double tiny = std::numeric_limits<double>::min() * 64;
    for (size_t i = 0; i < q.size(); ++i) {
        const double off2 = (i == 0) ? 0.0 : rho[i - 1] * rho[i - 1];
        d = q[i] - x - off2 / d;
        if (d == 0.0) d = -tiny;
        if (d < 0.0) ++count;
    }
    return count;
}

}  // namespace

std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& q,
                                            const std::vector<double>& rho,
                                            double tol) {
    const size_t n = q.size();
    if (n == 0) return {};
    if (rho.size() + 1 != n) throw validation_error("tridiagonal_eigenvalues: size mismatch");

    double rad = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double r = std::abs(q[i]);
        if (i > 0) r += std::abs(rho[i - 1]);
        if (i + 1 < n) r += std::abs(rho[i]);
        rad = std::max(rad, r);
    }
    double lo0 = -rad - 1.0, hi0 = rad + 1.0;

    std::vector<double> eig(n);
    for (size_t k = 0; k < n; ++k) {
        double lo = lo0, hi = hi0;
        // bisection for the k-th smallest eigenvalue
        for (int it = 0; it < 200; ++it) {
            const double mid = (lo + hi) / 2.0;
            if (sturm_count(q, rho, mid) > static_cast<int>(k))
                hi = mid;
            else
                lo = mid;
            if (hi - lo < tol * (1.0 + std::abs(mid))) break;
        }
        eig[k] = (lo + hi) / 2.0;
    }
    return eig;
}

}  // namespace canon
