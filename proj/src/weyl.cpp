#include "canon/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "canon/evolve.hpp"
#include "canon/inverse.hpp"
#include "canon/log.hpp"
#include "canon/parallel.hpp"

namespace canon {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool seg_is_01(const Segment& s) {
    auto is01 = [](const Sym2& m) {
        return std::abs(m.a11) <= 1e-12 && std::abs(m.a12) <= 1e-12 && std::abs(m.a22 - 1.0) <= 1e-12;
    };
    switch (s.kind) {
        case SegmentKind::RankOne:
            return std::abs(std::cos(s.angle)) <= 1e-12 && std::abs(s.scale - 1.0) <= 1e-12;
        case SegmentKind::Constant:
            return is01(s.matrix);
        case SegmentKind::Sampled:
            for (const Sym2& m : s.samples)
                if (!is01(m)) return false;
            return true;
    }
    return false;
}

}  // namespace

void SemiaxisHamiltonian::validate() const {
    prefix.validate();
    if (tail.kind == SegmentKind::Sampled)
        throw validation_error("SemiaxisHamiltonian: tail must be RankOne or Constant");
    Segment probe = tail;
    probe.length = 1.0;
    Hamiltonian tmp;
    tmp.segments.push_back(probe);
    tmp.validate();
}

bool SemiaxisHamiltonian::is_degenerate_01() const {
    for (const Segment& s : prefix.segments)
        if (!seg_is_01(s)) return false;
    return seg_is_01(tail);
}

Hamiltonian SemiaxisHamiltonian::truncated(double x) const {
    Hamiltonian h;
    h.trace_normalized = prefix.trace_normalized;
    double remaining = x;
    for (const Segment& s : prefix.segments) {
        if (remaining <= 0.0) break;
        Segment piece = s;
        if (s.length > remaining) {
            piece.length = remaining;
            if (s.kind == SegmentKind::Sampled) {
                // resample the kept part
                const size_t n = s.samples.size();
                std::vector<Sym2> kept(n);
                for (size_t k = 0; k < n; ++k)
                    kept[k] = s.value_at(remaining * static_cast<double>(k) /
                                         static_cast<double>(n - 1));
                piece.samples = std::move(kept);
            }
        }
        h.segments.push_back(piece);
        remaining -= piece.length;
    }
    if (remaining > 0.0) {
        Segment t = tail;
        t.length = remaining;
        h.segments.push_back(t);
    }
    return h;
}

SemiaxisHamiltonian SemiaxisHamiltonian::extend_constant(const Hamiltonian& h) {
    if (h.segments.empty()) throw validation_error("extend_constant: empty Hamiltonian");
    SemiaxisHamiltonian sh;
    sh.prefix = h;
    const Segment& last = h.segments.back();
    if (last.kind == SegmentKind::Sampled) {
        sh.tail = Segment::constant(1.0, last.samples.back());
    } else {
        sh.tail = last;
        sh.tail.length = 1.0;
    }
    return sh;
}

// ---------------------------------------------------------------------------

namespace {

cplx moebius(const Mat2& g, cplx w) { return (g.m11 * w + g.m12) / (g.m21 * w + g.m22); }

// circumcircle through three points
void circumcircle(cplx p0, cplx p1, cplx p2, cplx& center, double& radius) {
    const double ax = p0.real(), ay = p0.imag();
    const double bx = p1.real(), by = p1.imag();
    const double cx = p2.real(), cy = p2.imag();
    const double d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if (d == 0.0) throw numeric_error("weyl_disk: collinear boundary images");
    const double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
    const double ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
    const double uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
    center = cplx(ux, uy);
    radius = std::abs(center - p0);
}

}  // namespace

WeylDisk weyl_disk(const SemiaxisHamiltonian& h, double x, cplx z) {
    if (!(z.imag() > 0.0)) throw validation_error("weyl_disk: Im z must be positive");
    if (!(x > 0.0)) throw validation_error("weyl_disk: truncation must be positive");

    // Moebius maps are scale invariant, so the map of conj(M^{-1}) =
    // conj(adj M) can be built from the rescaled monodromy without ever
    // forming the (overflowing) matrix itself.
    const Hamiltonian trunc = h.truncated(x);
    const ScaledMat2 sm = monodromy_scaled(trunc, z, x);
    const Mat2& m = sm.m;
    const Mat2 g{std::conj(m.m22), std::conj(-m.m12), std::conj(-m.m21), std::conj(m.m11)};

    const cplx p0 = moebius(g, 0.0);
    const cplx p1 = moebius(g, 1.0);
    const cplx pinf = g.m11 / g.m21;  // image of infinity

    WeylDisk disk;
    disk.x = x;
    disk.z = z;

    // the diameter formula 1 / Im(Theta+ conj(Theta-)) is cancellation free
    // (positive denominator in C+); reinstate the scale in log form
    const double scaled_denom = (m.m11 * std::conj(m.m21)).imag();
    if (!(scaled_denom > 0.0)) throw numeric_error("weyl_disk: diameter denominator not positive");
    const double log_diam = -std::log(scaled_denom) - 2.0 * sm.log_scale;
    const double diam = log_diam < -700.0 ? 0.0 : std::exp(log_diam);

    // circumcircle of the translated images when it is numerically resolvable,
    // otherwise any boundary point is within a diameter of the center
    const cplx q1 = p1 - p0, q2 = pinf - p0;
    const double sep = std::max({std::abs(q1), std::abs(q2), std::abs(q1 - q2)});
    const double coll = std::abs((std::conj(q1) * q2).imag());  // 2*area
    if (sep > 1e-7 * std::abs(p0) && coll > 1e-6 * sep * sep) {
        cplx center_off;
        circumcircle(0.0, q1, q2, center_off, disk.radius);
        disk.center = p0 + center_off;
        if (std::abs(2.0 * disk.radius - diam) > 1e-7 * std::max(1.0, diam))
            throw numeric_error("weyl_disk: circumcircle disagrees with the diameter formula");
        // the image of infinity, -conj(Phi-/Theta-), must lie on the boundary
        const double dist = std::abs(q2 - center_off);
        if (std::abs(dist - disk.radius) > 1e-8 * std::max(1.0, disk.radius))
            throw numeric_error("weyl_disk: boundary-point check failed");
        disk.radius = diam / 2.0;
    } else {
        disk.center = p0 + (q1 + q2) / 3.0;
        disk.radius = diam / 2.0;
    }
    return disk;
}

std::vector<WeylDisk> m_function_trace(const SemiaxisHamiltonian& h, cplx z, double tol) {
    h.validate();
    if (!(z.imag() > 0.0)) throw validation_error("m_function: Im z must be positive");
    if (h.is_degenerate_01())
        throw validation_error(
            "m_function: H == diag(0,1) on the semiaxis; no unique m (Lemma condition)");

    std::vector<WeylDisk> trace;
    double x = std::max(1.0, h.prefix.total_length());
    const double budget = 1e14;
    while (x <= budget) {
        const WeylDisk d = weyl_disk(h, x, z);
        trace.push_back(d);
        if (d.radius <= tol / 2.0) return trace;
        x *= 2.0;
    }
    throw numeric_error("m_function: limit-circle-like truncation (disk did not shrink below " +
                        std::to_string(tol) + " within the budget)");
}

cplx m_function(const SemiaxisHamiltonian& h, cplx z, double tol) {
    // The nesting disks converge to the intersection point m_*; the
    // Weyl-Titchmarsh function is m = -conj(m_*).
    const cplx center = m_function_trace(h, z, tol).back().center;
    return -std::conj(center);
}

std::vector<double> spectral_density(const SemiaxisHamiltonian& h, const std::vector<double>& t_grid,
                                     double eps) {
    if (!(eps > 0.0)) throw validation_error("spectral_density: eps must be positive");
    std::vector<double> out(t_grid.size());
    parallel_for(t_grid.size(), [&](size_t i) {
        out[i] = m_function(h, cplx(t_grid[i], eps), 1e-9 * std::max(1.0, eps)).imag() / kPi;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Measure descriptor.

double MeasureDescriptor::density_at(double t) const {
    switch (density) {
        case Density::None:
            return 0.0;
        case Density::Constant:
            return constant_value;
        case Density::Sampled: {
            if (grid.size() < 2 || t < grid.front() || t > grid.back()) return 0.0;
            auto it = std::upper_bound(grid.begin(), grid.end(), t);
            size_t k = std::min<size_t>(static_cast<size_t>(it - grid.begin()), grid.size() - 1);
            if (k == 0) k = 1;
            const double w = (t - grid[k - 1]) / (grid[k] - grid[k - 1]);
            return values[k - 1] + w * (values[k] - values[k - 1]);
        }
        case Density::InverseT:
            return t == 0.0 ? 0.0 : coeff / std::abs(t);
    }
    return 0.0;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (!(b > a)) return 0.0;
    if (n % 2 == 1) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

void MeasureDescriptor::validate() const {
    atoms.validate();
    if (density == Density::Sampled) {
        if (grid.size() != values.size() || grid.size() < 2)
            throw validation_error("measure density: grid/values mismatch");
        for (size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw validation_error("measure density: grid must be increasing");
        for (double v : values)
            if (v < 0.0) throw validation_error("measure density: negative values");
    }
    if (density == Density::None || density == Density::Sampled) return;

    // integral of d mu / (1 + t^2): dyadic refinement toward 0 and outward;
    // diverging when the increments fail to decay
    auto f = [&](double t) { return density_at(t) / (1.0 + t * t); };
    double total = 0.0;
    for (int level = 1; level <= 40; ++level) {
        const double eps = std::pow(2.0, -level);
        const double inc = simpson(f, -2.0 * eps, -eps, 64) + simpson(f, eps, 2.0 * eps, 64);
        total += inc;
        if (level == 40 && inc > 1e-6 * (1.0 + total))
            throw validation_error("measure: integral of d mu/(1+t^2) diverges near 0");
    }
    for (int level = 1; level <= 40; ++level) {
        const double r = std::pow(2.0, level);
        const double inc = simpson(f, -r, -r / 2.0, 64) + simpson(f, r / 2.0, r, 64);
        total += inc;
        if (level == 40 && inc > 1e-6 * (1.0 + total))
            throw validation_error("measure: integral of d mu/(1+t^2) diverges in the tails");
    }
}

double MeasureDescriptor::mass(double a, double b) const {
    if (density == Density::None) return 0.0;
    return simpson([&](double t) { return density_at(t); }, a, b, 512);
}

double MeasureDescriptor::moment(double a, double b) const {
    if (density == Density::None) return 0.0;
    return simpson([&](double t) { return t * density_at(t); }, a, b, 512);
}

// ---------------------------------------------------------------------------

namespace {

// Equal-mass quantile atomization of mu restricted to [-s, s] into <= n atoms
// (mass centroids), with a 1/n atom injected at 0.
AtomicMeasure atomize(const MeasureDescriptor& mu, double s, int n) {
    // fine CDF grid of the a.c. part plus atom jumps
    const int fine = 4096;
    std::vector<double> xs(fine + 1), cdf(fine + 1, 0.0), mom(fine + 1, 0.0);
    for (int i = 0; i <= fine; ++i) xs[i] = -s + 2.0 * s * i / fine;
    for (int i = 1; i <= fine; ++i) {
        cdf[i] = cdf[i - 1] + mu.mass(xs[i - 1], xs[i]);
        mom[i] = mom[i - 1] + mu.moment(xs[i - 1], xs[i]);
    }
    struct Jump {
        double t, w;
    };
    std::vector<Jump> jumps;
    for (const auto& atom : mu.atoms.atoms)
        if (std::abs(atom.t) <= s) jumps.push_back({atom.t, atom.w});

    auto cdf_at = [&](double x) {
        double c = 0.0;
        if (x >= xs.front()) {
            const double u = (x - xs.front()) / (2.0 * s) * fine;
            const size_t k = std::min<size_t>(static_cast<size_t>(u), fine - 1);
            const double w = u - static_cast<double>(k);
            c = cdf[k] + w * (cdf[k + 1] - cdf[k]);
        }
        for (const Jump& j : jumps)
            if (j.t <= x) c += j.w;
        return c;
    };
    auto mom_at = [&](double x) {
        double c = 0.0;
        if (x >= xs.front()) {
            const double u = (x - xs.front()) / (2.0 * s) * fine;
            const size_t k = std::min<size_t>(static_cast<size_t>(u), fine - 1);
            const double w = u - static_cast<double>(k);
            c = mom[k] + w * (mom[k + 1] - mom[k]);
        }
        for (const Jump& j : jumps)
            if (j.t <= x) c += j.w * j.t;
        return c;
    };

    const double total = cdf_at(s);
    AtomicMeasure out;
    if (total > 0.0) {
        const int cells = std::max(1, n - 1);
        const double cell_mass = total / cells;
        double lo = -s;
        for (int c = 0; c < cells; ++c) {
            // invert the CDF at (c+1) * cell_mass by bisection
            double hi = s;
            if (c + 1 < cells) {
                double a = lo, b = s;
                const double target = cdf_at(-s) + (c + 1) * cell_mass;
                for (int it = 0; it < 60; ++it) {
                    const double mid = (a + b) / 2.0;
                    if (cdf_at(mid) < target)
                        a = mid;
                    else
                        b = mid;
                }
                hi = (a + b) / 2.0;
            }
            const double mass = cdf_at(hi) - cdf_at(lo);
            if (mass > 1e-14 * total) {
                const double centroid = (mom_at(hi) - mom_at(lo)) / mass;
                out.atoms.push_back({centroid, mass});
            }
            lo = hi;
        }
    }
    // inject the zero atom; merge anything that landed on it
    double zero_mass = 1.0 / n;
    std::vector<AtomicMeasure::Atom> kept;
    for (const auto& atom : out.atoms) {
        if (std::abs(atom.t) < 1e-9)
            zero_mass += atom.w;
        else
            kept.push_back(atom);
    }
    kept.push_back({0.0, zero_mass});
    out.atoms = std::move(kept);
    out.sort_atoms();
    return out;
}

}  // namespace

SingularInverseResult inverse_singular(const MeasureDescriptor& mu,
                                       const SingularInverseSchedule& schedule) {
    mu.validate();
    if (schedule.n_list.empty()) throw validation_error("inverse_singular: empty N list");
    if (schedule.s_n.size() != schedule.n_list.size())
        throw validation_error("inverse_singular: need one window per N");
    if (!(schedule.x_max > 0.0)) throw validation_error("inverse_singular: x_max must be positive");
    if (schedule.grid_n < 8) throw validation_error("inverse_singular: grid_n must be >= 8");

    SingularInverseResult res;
    const int gn = schedule.grid_n;
    res.grid.resize(static_cast<size_t>(gn) + 1);
    for (int k = 0; k <= gn; ++k)
        res.grid[static_cast<size_t>(k)] = schedule.x_max * static_cast<double>(k) / gn;

    std::vector<Sym2> g_prev;
    for (size_t idx = 0; idx < schedule.n_list.size(); ++idx) {
        const int n = schedule.n_list[idx];
        const double s = schedule.s_n[idx];
        const AtomicMeasure mu_n = atomize(mu, s, n);
        res.atomizations.push_back(mu_n);

        // The semiaxis Herglotz representation carries a 1/pi in front of the
        // integral; the finite-measure theorem's data does not. Rescale.
        AtomicMeasure mu_solver = mu_n;
        for (auto& atom : mu_solver.atoms) atom.w /= kPi;
        const Hamiltonian h_n = solve_finite_measure_inverse(mu_solver, 0.0);
        const double l_n = h_n.total_length();
        std::vector<Sym2> g(static_cast<size_t>(gn) + 1);
        const Sym2 h_end = l_n > 0.0 ? h_n.value_at(l_n * (1.0 - 1e-12)) : Sym2{0.5, 0.0, 0.5};
        for (int k = 0; k <= gn; ++k) {
            const double x = res.grid[static_cast<size_t>(k)];
            if (x <= l_n)
                g[static_cast<size_t>(k)] = accumulated_hamiltonian(h_n, x);
            else {
                // continue the integrand constantly beyond L_N
                Sym2 base = accumulated_hamiltonian(h_n, l_n);
                g[static_cast<size_t>(k)] = base + (x - l_n) * h_end;
            }
        }
        if (!g_prev.empty()) {
            double sup = 0.0;
            for (size_t k = 0; k < g.size(); ++k) {
                const Sym2 d = g[k] - g_prev[k];
                sup = std::max({sup, std::abs(d.a11), std::abs(d.a12), std::abs(d.a22)});
            }
            res.cauchy_increments.push_back(sup);
        }
        g_prev = std::move(g);
    }
    res.g_values = g_prev;

    // difference-quotient Hamiltonian of the final iterate
    const double h_step = schedule.x_max / gn;
    std::vector<Sym2> cells(static_cast<size_t>(gn));
    for (int k = 0; k < gn; ++k)
        cells[static_cast<size_t>(k)] =
            (1.0 / h_step) * (res.g_values[static_cast<size_t>(k) + 1] - res.g_values[static_cast<size_t>(k)]);
    std::vector<Sym2> nodes(static_cast<size_t>(gn) + 1);
    nodes.front() = cells.front();
    nodes.back() = cells.back();
    for (int k = 1; k < gn; ++k)
        nodes[static_cast<size_t>(k)] = 0.5 * (cells[static_cast<size_t>(k) - 1] + cells[static_cast<size_t>(k)]);
    for (Sym2& m : nodes) {
        const double lo = m.min_eigenvalue();
        if (lo < 0.0) {
            m.a11 -= lo;
            m.a22 -= lo;
        }
        const double tr = m.trace();
        if (tr > 0.0) m = (1.0 / tr) * m;
    }
    res.hamiltonian.trace_normalized = true;
    res.hamiltonian.segments.push_back(Segment::sampled(schedule.x_max, std::move(nodes)));
    return res;
}

}  // namespace canon
