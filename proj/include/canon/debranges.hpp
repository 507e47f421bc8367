// Hermite-Biehler polynomial toolkit: E <-> Theta conversion, HB checks,
// reproducing kernels, H(E) inner products via residues, Herglotz
// decomposition, second-column reconstruction and length/type from E.
#pragma once

#include <functional>
#include <vector>

#include "canon/core.hpp"

namespace canon {

// E = theta_plus + i theta_minus with real-coefficient components.
struct HBPolynomial {
    Poly theta_plus;
    Poly theta_minus;
    bool normalized{false};  // when set, E(0) = 1 within 1e-10

    CPoly e() const;
    int degree() const;
    // strict HB + E(0) = 1 + no real zeros, else throws
    void require_strict_normalized(const char* who) const;
};

HBPolynomial theta_from_e(const CPoly& e);
CPoly e_from_theta(const HBPolynomial& hb);

struct HBCheck {
    bool is_hb;
    double margin;  // -max Im(root); positive for strict HB
};

// Strict HB test: all roots of E lie in {Im < -tol}.
HBCheck is_hermite_biehler(const CPoly& e, double tol = 1e-10);
inline HBCheck is_hermite_biehler(const HBPolynomial& hb, double tol = 1e-10) {
    return is_hermite_biehler(hb.e(), tol);
}

// Root-free HB witness: min Im(Theta+/Theta-) over a fixed C+ sample. Stays
// meaningful when root margins are below what the root finder can resolve.
double herglotz_margin_sample(const HBPolynomial& hb, int count = 60);

// Reproducing kernel K_lambda of H(E) as a polynomial in z, computed by exact
// synthetic division of Theta-(z)Theta+(conj lambda) - Theta+(z)Theta-(conj
// lambda) by (conj lambda - z); stable on and near the diagonal.
CPoly kernel_polynomial(const HBPolynomial& hb, cplx lambda);
cplx reproducing_kernel(const HBPolynomial& hb, cplx lambda, cplx z);
// Kernel value from raw Theta values (shared with monodromy-backed spaces).
cplx kernel_from_theta(cplx tp_z, cplx tm_z, cplx tp_lbar, cplx tm_lbar, cplx lambda, cplx z);

// <f, g> in H(E): integral of f(t) conj(g(t)) / |E(t)|^2 dt, computed as
// 2 pi i times the residues of f g* / (E E*) at the zeros of E* in the upper
// half plane (cluster-aware for multiple roots). Falls back to adaptive
// quadrature with a warning when root clusters are numerically ambiguous.
// Throws "not in H(E)" when deg f or deg g > deg E - 1.
cplx inner_product(const CPoly& f, const CPoly& g, const HBPolynomial& hb);
// Direct quadrature route (test oracle and fallback).
cplx inner_product_quadrature(const CPoly& f, const CPoly& g, const HBPolynomial& hb);

// Pole/residue + affine data of Theta+/Theta-:
// Theta+(z)/Theta-(z) = sum mu_j / (z - t_j) + a + b z, mu_j < 0, b >= 0.
struct HerglotzData {
    std::vector<double> poles;
    std::vector<double> residues;
    double a{0.0};
    double b{0.0};
};
HerglotzData herglotz_decomposition(const HBPolynomial& hb);

// Appendix-style reconstruction of the second column [Phi+, Phi-] from E:
// Phi-(l) = 1 + l G-(l), Phi+(l) = l G+(l) with G the stated H(E) scalar
// products, evaluated at deg E + 1 nodes and interpolated back. Verifies
// det[Theta, Phi] = 1, the partial-fraction identity for Phi+/Theta+, the
// Herglotz sign of Phi/Theta in C+, and tr J dN/dl(0) > 0.
struct SecondColumn {
    Poly phi_plus;
    Poly phi_minus;
};
SecondColumn reconstruct_second_column(const HBPolynomial& hb);

// L = (1/pi) ||(Theta+ - 1)/lambda||^2_{H(E)} - dTheta-/dz(0).
double system_length_from_e(const HBPolynomial& hb);

// Least-squares slope of ln|E(iy)| against y over the top decade of
// [1, y_max]. The evaluator returns ln|E(iy)|.
double numeric_type(const std::function<double(double)>& log_abs_e_iy, double y_max);
double numeric_type(const HBPolynomial& hb, double y_max);
// ln|p(iy)| for a polynomial, overflow-safe.
double log_abs_poly_iy(const CPoly& p, double y);

// Membership f in H(E): degree bound plus the pointwise kernel bound
// sampled on a C+ grid.
bool membership_check(const CPoly& f, const HBPolynomial& hb);

}  // namespace canon
