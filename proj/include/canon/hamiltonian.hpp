// Hamiltonian representation, trace normalization, ODE reductions
// (Schrodinger / Dirac / string) and the exact type formula.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "canon/core.hpp"

namespace canon {

enum class SegmentKind { RankOne, Constant, Sampled };

// One piece of a piecewise Hamiltonian on an interval of the given length.
//  RankOne:  H(x) = scale * <.,e>e with e = (cos angle, sin angle)
//  Constant: H(x) = matrix
//  Sampled:  H linear between uniform nodes samples[0..n-1] (n >= 2),
//            samples[0] at the left end, samples[n-1] at the right end.
struct Segment {
    double length{0.0};
    SegmentKind kind{SegmentKind::Constant};
    double angle{0.0};
    double scale{1.0};
    Sym2 matrix{};
    std::vector<Sym2> samples;

    static Segment rank_one(double length, double angle, double scale = 1.0);
    static Segment constant(double length, const Sym2& m);
    static Segment sampled(double length, std::vector<Sym2> samples);

    // H at local position t in [0, length].
    Sym2 value_at(double t) const;
    // integral of H over [0, t]
    Sym2 integral_to(double t) const;
    // integral of sqrt(det H) over the whole segment
    double type_integral() const;
};

struct Hamiltonian {
    std::vector<Segment> segments;
    bool trace_normalized{false};

    double total_length() const;
    Sym2 value_at(double x) const;
    // Throws validation_error if any sample fails psd (min eigenvalue >= -1e-12
    // relative) or a length is nonpositive.
    void validate() const;
    // true when every segment is rank one (det <= tol * tr^2 at samples)
    bool all_rank_one() const;
    // structural check: H == diag(0,1) a.e. on the whole interval
    bool is_degenerate_01() const;
};

// Monotone map xi with its inverse, stored on a grid with linear interpolation.
struct Reparametrization {
    std::vector<double> grid;    // original variable x
    std::vector<double> values;  // xi(x), nondecreasing, xi(0) = 0

    double eval(double x) const;
    double inverse(double s) const;
    static Reparametrization identity(double length);
};

struct NormalizeResult {
    Hamiltonian hamiltonian;
    Reparametrization reparametrization;
    std::vector<std::string> warnings;  // e.g. excised zero-trace regions
};

// Trace normalization: output has tr H == 1, total length = integral of tr H,
// solutions correspond via Y(x) = Ytilde(xi(x)). Zero-trace regions of
// positive measure are excised with a warning (xi is constant there).
NormalizeResult normalize_trace(const Hamiltonian& h);

// integral of sqrt(det H) over [0, L); exact on Constant/RankOne segments,
// Gauss quadrature on Sampled ones.
double exact_type(const Hamiltonian& h);

// Endpoint data of the lambda = 0 solutions used by the boundary map.
struct SchrodingerBoundary {
    double y1, dy1;  // y1 solves -y'' + q y = 0, y1'(0) = h*y1(0), y1(0) = 1
    double y2, dy2;  // y2(0) = 0, y2'(0) = 1, so W{y1, y2} = -1
};

struct SchrodingerReduction {
    Hamiltonian hamiltonian;  // trace-normalized
    Reparametrization reparametrization;
    SchrodingerBoundary boundary;
    double wronskian_drift;
};

// Reduce -y'' + q y = lambda y on (0,1) to a canonical system. q is given by
// uniform samples on [0,1] (linear interpolation). Throws numeric_error if the
// Wronskian drift of the lambda = 0 solutions exceeds 1e-6.
SchrodingerReduction schrodinger_to_canonical(const std::vector<double>& q_samples,
                                              double h, int grid_n);

// Reduce J X' + Q X = lambda X to a canonical system H = X^T X (rank 2).
// Q given by uniform 2x2 samples on [0,1] as general real matrices
// [[a,b],[c,d]] flattened row-major. Throws numeric_error if det X drifts
// beyond 1e-6 from 1.
struct DiracReduction {
    Hamiltonian hamiltonian;  // trace-normalized
    Reparametrization reparametrization;
    double det_drift;
};
DiracReduction dirac_to_canonical(const std::vector<std::array<double, 4>>& q_samples,
                                  int grid_n);

// String equation -y'' = lambda rho y: canonical system diag(rho, 1),
// trace-normalized. The spectral parameter of the produced system is
// sqrt(lambda) of the string. Accepts piecewise-constant rho.
struct StringPiece {
    double length;
    double rho;  // must be > 0
};
NormalizeResult string_to_canonical(const std::vector<StringPiece>& pieces);
// Sampled variant: rho sampled uniformly on (0, length).
NormalizeResult string_to_canonical(const std::vector<double>& rho_samples, double length);

// Real line with a point at infinity for projective boundary parameters.
struct ExtReal {
    double value{0.0};
    bool infinite{false};

    static ExtReal inf() { return {0.0, true}; }
    static ExtReal finite(double v) { return {v, false}; }
};

// Right-endpoint boundary parameter map: h_r for -y'' + qy = lambda y
// corresponds to H with Y+(1) = H Y-(1) for the canonical system.
ExtReal boundary_parameter_map(const SchrodingerBoundary& b, const ExtReal& h_r);

}  // namespace canon
