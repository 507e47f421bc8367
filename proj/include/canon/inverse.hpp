// Inverse problems on finite intervals: the polynomial factorization
// algorithm, the finite-atomic-measure inverse, and the regular-case
// truncation algorithm.
#pragma once

#include <string>
#include <vector>

#include "canon/core.hpp"
#include "canon/debranges.hpp"
#include "canon/hamiltonian.hpp"

namespace canon {

// One extraction: Theta(l) = (I - l S) Psi(l) with the indivisible segment
// carried by R = -S.
struct FactorizationStep {
    Mat2 s_matrix;          // det S = tr S = 0, S12 <= 0, S21 >= 0
    Segment segment;        // rank-one segment reproducing I - l S
    HBPolynomial remainder;  // strict HB of degree one less, E(0) = 1
};

// Single factorization step for deg E >= 2. Follows the kernel construction:
// e = E + e^{i a} E* cancelling the leading coefficient, projection kernel of
// the codimension-one subspace at the point i (a = -i), E1 normalized, then
// least-squares coefficient matching Theta1 = (L0 + l L1) Theta.
FactorizationStep factor_step(const HBPolynomial& hb);

// Indivisible segment from a nilpotent R (R^2 = 0, R12 >= 0, R21 <= 0):
// a = R12 - R21, e- = sqrt(R12/a), e+ = sign(R11) sqrt(-R21/a).
Segment segment_from_nilpotent(const Mat2& r);

// Terminal degree-1 case Theta = (1 + a l, b l), b < 0.
Segment terminal_segment(const HBPolynomial& hb);

// Full inverse for a strict HB polynomial with E(0) = 1, no real zeros:
// deg E rank-one segments, extracted right to left.
Hamiltonian solve_polynomial_inverse(const HBPolynomial& hb);

// Theta pair of the canonical system whose pi/2 spectral measure is mu
// (finite, atom at 0 required):
//   Theta-(z) = -(1/mu0) z prod_{t_j != 0} (1 - z/t_j)
//   Theta+ per the partial-fraction display with c1 = 0 and the given d1.
HBPolynomial theta_from_atoms(const AtomicMeasure& mu, double d1);

Hamiltonian solve_finite_measure_inverse(const AtomicMeasure& mu, double d1 = 0.0);

// Data of a regular HB function: zeros of Theta- ordered by |t_j| with
// t0 = 0, Herglotz residues of Theta+/Theta- at them (negative), the affine
// part a + b z, and dTheta-/dz at 0.
struct RegularHBSpec {
    std::vector<double> zeros;
    std::vector<double> residues;
    double a{0.0};
    double b{0.0};
    double dtheta_minus_0{0.0};

    void validate() const;
};

// Truncated pair Theta^N per the regular-case algorithm.
HBPolynomial truncated_theta(const RegularHBSpec& spec, int n);

// (1/pi) ||(Theta+ - 1)/l||^2 - dTheta-(0) evaluated through truncations with
// Richardson extrapolation in 1/N; exact once all zeros are used.
double regular_spec_length(const RegularHBSpec& spec);

struct RegularInverseResult {
    Hamiltonian hamiltonian;  // difference quotient of the final F_N
    double length;            // L from the explicit formula
    std::vector<double> grid;
    std::vector<Sym2> f_values;              // F_N on the grid
    std::vector<double> cauchy_increments;   // sup |F_N - F_{N'}| ladder
    std::vector<std::string> diagnostics;
};

RegularInverseResult regular_inverse(const RegularHBSpec& spec, int n, int grid_n);

}  // namespace canon
