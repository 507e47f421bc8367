// Fixed-size complex linear algebra, polynomial arithmetic and root finding
// shared by all modules.
#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace canon {

using cplx = std::complex<double>;

// Thrown on bad inputs (preconditions, malformed files).
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a numerical gate (residual/conditioning check) fails.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Two-component vector Y = (Y+, Y-)^T.
struct Vec2 {
    cplx plus{0.0};
    cplx minus{0.0};
};

inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.plus + b.plus, a.minus + b.minus}; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.plus - b.plus, a.minus - b.minus}; }
inline Vec2 operator*(cplx s, const Vec2& v) { return {s * v.plus, s * v.minus}; }

// 2x2 complex matrix, row major: [[m11 m12], [m21 m22]].
struct Mat2 {
    cplx m11{0.0}, m12{0.0}, m21{0.0}, m22{0.0};

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    // J = (0 -1; 1 0)
    static Mat2 J() { return {0.0, -1.0, 1.0, 0.0}; }

    cplx det() const { return m11 * m22 - m12 * m21; }
    cplx trace() const { return m11 + m22; }
    Mat2 transpose() const { return {m11, m21, m12, m22}; }
    Mat2 conj_transpose() const {
        using std::conj;
        return {conj(m11), conj(m21), conj(m12), conj(m22)};
    }
    // Inverse assuming det != 0.
    Mat2 inverse() const {
        cplx d = det();
        return {m22 / d, -m12 / d, -m21 / d, m11 / d};
    }
};

Mat2 mat2_mul(const Mat2& a, const Mat2& b);
Vec2 mat2_apply(const Mat2& m, const Vec2& v);
inline Mat2 operator*(const Mat2& a, const Mat2& b) { return mat2_mul(a, b); }
inline Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.m11 + b.m11, a.m12 + b.m12, a.m21 + b.m21, a.m22 + b.m22};
}
inline Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.m11 - b.m11, a.m12 - b.m12, a.m21 - b.m21, a.m22 - b.m22};
}
inline Mat2 operator*(cplx s, const Mat2& a) { return {s * a.m11, s * a.m12, s * a.m21, s * a.m22}; }

// Frobenius norm and spectral (operator 2-) norm.
double mat2_frobenius(const Mat2& m);
double mat2_opnorm(const Mat2& m);

// exp(A) for a 2x2 complex matrix, exact via trace/determinant reduction.
Mat2 mat2_exp(const Mat2& a);

// Eigenvalues of a 2x2 Hermitian matrix (ascending).
void hermitian2_eigenvalues(const Mat2& m, double& lo, double& hi);

// Real symmetric 2x2 matrix [[a11 a12],[a12 a22]].
struct Sym2 {
    double a11{0.0}, a12{0.0}, a22{0.0};

    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - a12 * a12; }
    double min_eigenvalue() const;
    double max_eigenvalue() const;
};

inline Sym2 operator+(const Sym2& a, const Sym2& b) { return {a.a11 + b.a11, a.a12 + b.a12, a.a22 + b.a22}; }
inline Sym2 operator-(const Sym2& a, const Sym2& b) { return {a.a11 - b.a11, a.a12 - b.a12, a.a22 - b.a22}; }
inline Sym2 operator*(double s, const Sym2& a) { return {s * a.a11, s * a.a12, s * a.a22}; }

// ---------------------------------------------------------------------------
// Polynomials. Coefficients ascending: p(z) = c[0] + c[1] z + ...
// After normalize(), the trailing coefficient is nonzero (relative tol 1e-12).

class Poly {
  public:
    Poly() = default;
    explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) { normalize(); }
    static Poly constant(double v) { return Poly({v}); }
    static Poly monomial(int degree, double coeff = 1.0);

    const std::vector<double>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for zero poly
    bool is_zero() const { return c_.empty(); }
    double coeff(int k) const { return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[k] : 0.0; }

    double operator()(double x) const;
    cplx operator()(cplx z) const;

    Poly derivative() const;

    // Drops coefficients with magnitude < 1e-12 * max|coeff| (trailing first),
    // then trims exact trailing zeros.
    void normalize();

    friend Poly operator+(const Poly& a, const Poly& b);
    friend Poly operator-(const Poly& a, const Poly& b);
    friend Poly operator*(const Poly& a, const Poly& b);
    friend Poly operator*(double s, const Poly& a);

    // p = q*(x - root) + r with r discarded; exact when root is a zero of p.
    Poly deflate(double root) const;

  private:
    std::vector<double> c_;
};

// Complex-coefficient polynomial, same conventions.
class CPoly {
  public:
    CPoly() = default;
    explicit CPoly(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { normalize(); }
    explicit CPoly(const Poly& p);

    const std::vector<cplx>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    cplx coeff(int k) const { return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[k] : cplx(0.0); }

    cplx operator()(cplx z) const;
    CPoly derivative() const;
    // conjugate-coefficient polynomial p*(z) = conj(p(conj z))
    CPoly conj_coeffs() const;
    void normalize();

    // Real/imaginary coefficient parts.
    Poly real_part() const;
    Poly imag_part() const;

    friend CPoly operator+(const CPoly& a, const CPoly& b);
    friend CPoly operator-(const CPoly& a, const CPoly& b);
    friend CPoly operator*(const CPoly& a, const CPoly& b);
    friend CPoly operator*(cplx s, const CPoly& a);

    CPoly deflate(cplx root) const;

  private:
    std::vector<cplx> c_;
};

// Finite atomic measure: spectral data (points with positive weights).
struct AtomicMeasure {
    struct Atom {
        double t;
        double w;
    };
    std::vector<Atom> atoms;  // kept sorted by t

    void sort_atoms();
    // Throws unless weights are positive and points distinct.
    void validate() const;
};

// A polynomial root with its cluster multiplicity.
struct RootCluster {
    cplx value;
    int multiplicity;
};

// All complex roots by deterministic Durand-Kerner iteration seeded on the
// Cauchy bound circle. Conjugate pairing is enforced for real-coefficient
// inputs (paired within 1e-10 relative). Throws on degree < 1.
std::vector<cplx> poly_complex_roots(const CPoly& p);
std::vector<cplx> poly_complex_roots(const Poly& p);

// Same roots grouped into clusters (radius ~ 1e-7 * scale); a true multiple
// root shows up as one cluster with the centroid value.
std::vector<RootCluster> poly_root_clusters(const CPoly& p, double cluster_tol = 1e-6);

// Sorted real roots (with multiplicities expanded) of a real polynomial;
// each root Newton-refined. Throws "constant polynomial" on degree < 1.
std::vector<double> poly_real_roots(const Poly& p, double tol = 1e-10);

// Eigenvalues of a real symmetric tridiagonal matrix (diagonal q, off-diagonal
// rho), ascending. Sturm bisection + Newton polish; used by the Jacobi bridge.
std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& q,
                                            const std::vector<double>& rho,
                                            double tol = 1e-12);

}  // namespace canon
