// Direct spectral theory: fundamental solutions, eigenvalues, spectral
// measures and the identities they satisfy.
#pragma once

#include <vector>

#include "canon/core.hpp"
#include "canon/hamiltonian.hpp"

namespace canon {

// Columns Theta (initial (1,0)^T) and Phi (initial (0,1)^T) of the
// fundamental solution at position x and spectral parameter z.
struct SolutionPair {
    Vec2 theta;
    Vec2 phi;
};

// Fundamental solution M(x, z), M(0, z) = I. Constant segments use the closed
// form exp(-z J H dx); rank-one segments the exact nilpotent factor; sampled
// segments a midpoint-exponential product with one Richardson extrapolation.
// det M = 1 within 1e-10, ||M|| <= e^{x|z|} for trace-normalized H.
Mat2 monodromy(const Hamiltonian& h, cplx z, double x);
inline Mat2 monodromy(const Hamiltonian& h, cplx z) { return monodromy(h, z, h.total_length()); }

// Monodromy of a single indivisible interval of length a in direction
// e = (cos angle, sin angle): I + lambda a <., e> J e.
Mat2 singular_interval_monodromy(double a, double angle, cplx lambda);

// |det M - 1| evaluated multiplicatively over the factor stream. The naive
// determinant of the assembled matrix loses all digits once ||M|| is large
// (cancellation ~ eps ||M||^2); the product of the per-factor determinants is
// the numerically meaningful symplecticity drift.
double monodromy_det_drift(const Hamiltonian& h, cplx z, double x);

SolutionPair fundamental_columns(const Hamiltonian& h, cplx z, double x);

// Scaled evaluation for large |z|: returns M / exp(log_scale) elementwise,
// so that log ||M|| = log_scale + log ||returned||. Used by type estimation.
struct ScaledMat2 {
    Mat2 m;
    double log_scale;
};
ScaledMat2 monodromy_scaled(const Hamiltonian& h, cplx z, double x);

// For an all-rank-one Hamiltonian the monodromy entries are polynomials in
// the spectral parameter; exact symbolic product of the nilpotent factors.
struct MonodromyPoly {
    Poly theta_plus, theta_minus, phi_plus, phi_minus;
};
MonodromyPoly monodromy_polynomial(const Hamiltonian& h);

// All real zeros of Theta+(L,.)cos(alpha) + Theta-(L,.)sin(alpha) in the
// window, sign-scan with spacing <= pi/(2L), bisection, Newton refinement to
// 1e-10. Throws "degenerate boundary condition" when the last segment is an
// indivisible interval with direction (cos alpha, sin alpha) (condition R').
std::vector<double> spectrum_alpha(const Hamiltonian& h, double alpha, double lo, double hi);

// Spectral measure of D_alpha on the window: atoms at the eigenvalues with
// weights 1 / ||Theta(., lambda_k)||^2 in L^2(H).
AtomicMeasure spectral_measure_alpha(const Hamiltonian& h, double alpha, double lo, double hi);

// integral_0^L Theta^T(t,lambda) H(t) Theta(t,lambda) dt for real lambda;
// exact on rank-one segments, Gauss quadrature elsewhere.
double theta_norm_sq(const Hamiltonian& h, double lambda, double x);

// (z - conj(lambda)) * integral_0^x M*(t,lambda) H(t) M(t,z) dt by segment
// quadrature; equals M*(x,lambda) J M(x,z) - J within 1e-7.
Mat2 greens_matrix(const Hamiltonian& h, cplx lambda, cplx z, double x);

// integral_0^x H(s) ds = J dM/dz(x, 0); exact per segment.
Sym2 accumulated_hamiltonian(const Hamiltonian& h, double x);

}  // namespace canon
