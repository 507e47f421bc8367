// Semiaxis theory: Weyl disks, the m-function via nesting circles, spectral
// density sampling and the measure-approximation inverse problem.
#pragma once

#include <string>
#include <vector>

#include "canon/core.hpp"
#include "canon/hamiltonian.hpp"

namespace canon {

// A Hamiltonian on [0, infinity): finite prefix followed by a tail segment
// repeated forever (RankOne or Constant kinds only; tail.length is ignored).
struct SemiaxisHamiltonian {
    Hamiltonian prefix;
    Segment tail;

    void validate() const;
    // structural check of the Lemma-generalm degeneracy H == diag(0,1)
    bool is_degenerate_01() const;
    // Hamiltonian truncated to [0, x]
    Hamiltonian truncated(double x) const;
    // wraps a finite Hamiltonian, continuing the last segment value constantly
    static SemiaxisHamiltonian extend_constant(const Hamiltonian& h);
};

struct WeylDisk {
    cplx center;
    double radius;
    double x;  // truncation length
    cplx z;    // spectral point
};

// Image of C+ under the truncation Moebius map (conjugate inverse monodromy),
// center/radius from the circumcircle of the images of 0, 1, infinity;
// cross-checked against the diameter formula 1/Im(Theta+ conj(Theta-)).
WeylDisk weyl_disk(const SemiaxisHamiltonian& h, double x, cplx z);

// Weyl-Titchmarsh m-function: grows the truncation until the disk diameter
// drops below tol and returns the disk center. Throws for H == diag(0,1)
// (no unique m) and when the budget is exhausted.
cplx m_function(const SemiaxisHamiltonian& h, cplx z, double tol = 1e-9);
// The disk trajectory behind the same computation, for reporting.
std::vector<WeylDisk> m_function_trace(const SemiaxisHamiltonian& h, cplx z, double tol = 1e-9);

// Im m(t + i eps) / pi on the grid.
std::vector<double> spectral_density(const SemiaxisHamiltonian& h, const std::vector<double>& t_grid,
                                     double eps);

// Measure descriptor for the singular inverse: an absolutely continuous part
// plus finitely many atoms. Density kinds:
//   constant  - value on all of R
//   sampled   - linear interpolation on [grid.front(), grid.back()], 0 outside
//   inverse_t - coeff / |t| (the non-integrable example)
struct MeasureDescriptor {
    enum class Density { None, Constant, Sampled, InverseT };
    Density density{Density::None};
    double constant_value{0.0};
    std::vector<double> grid;
    std::vector<double> values;
    double coeff{0.0};
    AtomicMeasure atoms;

    // Throws when integral of d mu / (1 + t^2) diverges.
    void validate() const;
    double density_at(double t) const;
    // mass of the a.c. part on [a, b] and its first moment
    double mass(double a, double b) const;
    double moment(double a, double b) const;
};

struct SingularInverseSchedule {
    std::vector<int> n_list;   // atom counts, increasing
    std::vector<double> s_n;   // windows [-s_N, s_N], one per N
    double x_max{0.0};
    int grid_n{0};
};

struct SingularInverseResult {
    Hamiltonian hamiltonian;  // on [0, x_max]
    std::vector<double> grid;
    std::vector<Sym2> g_values;             // G_N on the grid for the final N
    std::vector<double> cauchy_increments;  // sup |G_N - G_{N'}| between levels
    std::vector<AtomicMeasure> atomizations;
};

// Theorem-invsingular procedure: atomize mu on [-s_N, s_N] by equal-mass
// quantiles into <= N atoms (mass centroids), inject a 1/N atom at 0, solve
// the finite-measure inverse, accumulate G_N and return the difference
// quotient of the last iterate.
SingularInverseResult inverse_singular(const MeasureDescriptor& mu,
                                       const SingularInverseSchedule& schedule);

}  // namespace canon
