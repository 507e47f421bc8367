// Bridge between piecewise rank-one Hamiltonians and Jacobi matrices.
#pragma once

#include <vector>

#include "canon/core.hpp"
#include "canon/hamiltonian.hpp"

namespace canon {

// Symmetric Jacobi matrix data: diagonal q_1.., off-diagonal rho_1...
// len(rho) = len(q) - 1 for a finite section closed by the right boundary
// condition; len(rho) = len(q) for the leading block of a semi-infinite
// matrix.
struct JacobiMatrix {
    std::vector<double> q;
    std::vector<double> rho;

    void validate() const;
};

// Chain of indivisible intervals: lengths l_j > 0 and signed unit directions
// e_j = (cos angle_j, sin angle_j), consecutive directions not parallel,
// e_1^+ != 0 (condition L).
struct RankOneChain {
    struct Link {
        double length;
        double angle;
    };
    std::vector<Link> links;

    void validate() const;
    Hamiltonian to_hamiltonian() const;
    // Signs are chosen canonically: e_1^+ > 0 and <e_j^perp, e_{j+1}> < 0.
    static RankOneChain from_hamiltonian(const Hamiltonian& h);
};

// Forward map: rho_j = -1 / (<e_j^perp, e_{j+1}> sqrt(l_{j+1} l_j)),
// q_j from the cotangent difference; q_1 and q_n use the boundary directions
// e_0 = e_{n+1} = (0, 1) so that the n x n section matches the alpha = pi/2
// boundary condition.
JacobiMatrix hamiltonian_to_jacobi(const RankOneChain& chain);

// Inverse map by induction from the seed (e_1 = (cos e1_angle, sin e1_angle),
// l_1 = delta1); the direction branch is fixed by <e_j^perp, e_{j+1}> < 0 so
// that rho_j > 0. Consumes q_1..q_m, rho_1..rho_m with m = len(rho), producing
// a chain of m + 1 links.
RankOneChain jacobi_to_hamiltonian(const JacobiMatrix& jm, double e1_angle, double delta1);

}  // namespace canon
