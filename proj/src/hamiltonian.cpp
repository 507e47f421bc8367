#include "canon/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include "canon/log.hpp"

namespace canon {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                           -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                           0.7966664774136267,  0.9602898564975363};
constexpr double kGw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                           0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                           0.2223810344533745, 0.1012285362903763};

Sym2 rank_one_matrix(double angle, double scale) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {scale * c * c, scale * c * s, scale * s * s};
}

bool angles_equal_mod_pi(double a, double b, double tol = 1e-12) {
    double d = std::fmod(a - b, kPi);
    if (d > kPi / 2) d -= kPi;
    if (d < -kPi / 2) d += kPi;
    return std::abs(d) <= tol;
}

}  // namespace

Segment Segment::rank_one(double length, double angle, double scale) {
    Segment s;
    s.length = length;
    s.kind = SegmentKind::RankOne;
    s.angle = angle;
    s.scale = scale;
    return s;
}

Segment Segment::constant(double length, const Sym2& m) {
    Segment s;
    s.length = length;
    s.kind = SegmentKind::Constant;
    s.matrix = m;
    return s;
}

Segment Segment::sampled(double length, std::vector<Sym2> samples) {
    if (samples.size() < 2) throw validation_error("sampled segment needs at least 2 nodes");
    Segment s;
    s.length = length;
    s.kind = SegmentKind::Sampled;
    s.samples = std::move(samples);
    return s;
}

Sym2 Segment::value_at(double t) const {
    switch (kind) {
        case SegmentKind::RankOne:
            return rank_one_matrix(angle, scale);
        case SegmentKind::Constant:
            return matrix;
        case SegmentKind::Sampled: {
            const size_t n = samples.size();
            const double h = length / static_cast<double>(n - 1);
            double u = std::clamp(t, 0.0, length) / h;
            size_t k = std::min(static_cast<size_t>(u), n - 2);
            const double w = u - static_cast<double>(k);
            return (1.0 - w) * samples[k] + w * samples[k + 1];
        }
    }
    return {};
}

Sym2 Segment::integral_to(double t) const {
    t = std::clamp(t, 0.0, length);
    switch (kind) {
        case SegmentKind::RankOne:
            return t * rank_one_matrix(angle, scale);
        case SegmentKind::Constant:
            return t * matrix;
        case SegmentKind::Sampled: {
            // exact integral of the piecewise-linear interpolant
            const size_t n = samples.size();
            const double h = length / static_cast<double>(n - 1);
            Sym2 acc{};
            double done = 0.0;
            for (size_t k = 0; k + 1 < n && done < t; ++k) {
                const double step = std::min(h, t - done);
                const double w = step / h;
                // trapezoid over the partial cell
                const Sym2 left = samples[k];
                const Sym2 right = (1.0 - w) * samples[k] + w * samples[k + 1];
                acc = acc + (step / 2.0) * (left + right);
                done += step;
            }
            return acc;
        }
    }
    return {};
}

double Segment::type_integral() const {
    switch (kind) {
        case SegmentKind::RankOne:
            return 0.0;  // det of a rank-one matrix is 0
        case SegmentKind::Constant:
            return length * std::sqrt(std::max(0.0, matrix.det()));
        case SegmentKind::Sampled: {
            const size_t n = samples.size();
            const double h = length / static_cast<double>(n - 1);
            double acc = 0.0;
            for (size_t k = 0; k + 1 < n; ++k) {
                for (int g = 0; g < 8; ++g) {
                    const double w = (kGx[g] + 1.0) / 2.0;
                    const Sym2 m = (1.0 - w) * samples[k] + w * samples[k + 1];
                    acc += kGw[g] * (h / 2.0) * std::sqrt(std::max(0.0, m.det()));
                }
            }
            return acc;
        }
    }
    return 0.0;
}

double Hamiltonian::total_length() const {
    double l = 0.0;
    for (const Segment& s : segments) l += s.length;
    return l;
}

Sym2 Hamiltonian::value_at(double x) const {
    double off = 0.0;
    for (const Segment& s : segments) {
        if (x <= off + s.length || &s == &segments.back()) return s.value_at(x - off);
        off += s.length;
    }
    return {};
}

void Hamiltonian::validate() const {
    for (const Segment& s : segments) {
        if (!(s.length > 0.0)) throw validation_error("segment length must be positive");
        auto check_psd = [](const Sym2& m) {
            const double scale = std::max(1.0, m.trace());
            if (m.min_eigenvalue() < -1e-12 * scale)
                throw validation_error("Hamiltonian sample is not positive semidefinite");
        };
        switch (s.kind) {
            case SegmentKind::RankOne:
                if (!(s.scale > 0.0)) throw validation_error("rank-one scale must be positive");
                break;
            case SegmentKind::Constant:
                check_psd(s.matrix);
                break;
            case SegmentKind::Sampled:
                if (s.samples.size() < 2) throw validation_error("sampled segment needs >= 2 nodes");
                for (const Sym2& m : s.samples) check_psd(m);
                break;
        }
    }
    if (trace_normalized) {
        for (const Segment& s : segments) {
            auto check_tr = [](const Sym2& m) {
                if (std::abs(m.trace() - 1.0) > 1e-10)
                    throw validation_error("trace_normalized set but tr H != 1");
            };
            if (s.kind == SegmentKind::RankOne) {
                if (std::abs(s.scale - 1.0) > 1e-10)
                    throw validation_error("trace_normalized set but rank-one scale != 1");
            } else if (s.kind == SegmentKind::Constant) {
                check_tr(s.matrix);
            } else {
                for (const Sym2& m : s.samples) check_tr(m);
            }
        }
    }
}

bool Hamiltonian::all_rank_one() const {
    for (const Segment& s : segments) {
        switch (s.kind) {
            case SegmentKind::RankOne:
                break;
            case SegmentKind::Constant: {
                const double tr = s.matrix.trace();
                if (s.matrix.det() > 1e-10 * tr * tr) return false;
                break;
            }
            case SegmentKind::Sampled:
                for (const Sym2& m : s.samples) {
                    const double tr = m.trace();
                    if (m.det() > 1e-10 * tr * tr) return false;
                }
                break;
        }
    }
    return true;
}

bool Hamiltonian::is_degenerate_01() const {
    auto is01 = [](const Sym2& m) {
        return std::abs(m.a11) <= 1e-12 && std::abs(m.a12) <= 1e-12 &&
               std::abs(m.a22 - 1.0) <= 1e-12;
    };
    for (const Segment& s : segments) {
        switch (s.kind) {
            case SegmentKind::RankOne:
                if (!angles_equal_mod_pi(s.angle, kPi / 2) || std::abs(s.scale - 1.0) > 1e-12)
                    return false;
                break;
            case SegmentKind::Constant:
                if (!is01(s.matrix)) return false;
                break;
            case SegmentKind::Sampled:
                for (const Sym2& m : s.samples)
                    if (!is01(m)) return false;
                break;
        }
    }
    return !segments.empty();
}

double Reparametrization::eval(double x) const {
    if (grid.empty()) return x;
    if (x <= grid.front()) return values.front();
    if (x >= grid.back()) return values.back();
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    size_t k = static_cast<size_t>(it - grid.begin()) - 1;
    const double w = (x - grid[k]) / (grid[k + 1] - grid[k]);
    return values[k] + w * (values[k + 1] - values[k]);
}

double Reparametrization::inverse(double s) const {
    if (grid.empty()) return s;
    if (s <= values.front()) return grid.front();
    if (s >= values.back()) return grid.back();
    auto it = std::upper_bound(values.begin(), values.end(), s);
    size_t k = static_cast<size_t>(it - values.begin()) - 1;
    // skip flat (excised) stretches
    while (k + 1 < values.size() && values[k + 1] == values[k]) ++k;
    if (k + 1 >= values.size()) return grid.back();
    const double w = (s - values[k]) / (values[k + 1] - values[k]);
    return grid[k] + w * (grid[k + 1] - grid[k]);
}

Reparametrization Reparametrization::identity(double length) {
    return {{0.0, length}, {0.0, length}};
}

namespace {

void push_merged(std::vector<Segment>& out, const Segment& s) {
    if (!out.empty() && out.back().kind == SegmentKind::RankOne &&
        s.kind == SegmentKind::RankOne && angles_equal_mod_pi(out.back().angle, s.angle) &&
        std::abs(out.back().scale - s.scale) <= 1e-12) {
        out.back().length += s.length;
        return;
    }
    out.push_back(s);
}

}  // namespace

NormalizeResult normalize_trace(const Hamiltonian& h) {
    h.validate();
    NormalizeResult res;
    res.hamiltonian.trace_normalized = true;

    std::vector<double> grid{0.0}, values{0.0};
    double x = 0.0;   // input coordinate
    double xi = 0.0;  // output coordinate

    for (const Segment& s : h.segments) {
        switch (s.kind) {
            case SegmentKind::RankOne: {
                const double tr = s.scale;
                push_merged(res.hamiltonian.segments, Segment::rank_one(tr * s.length, s.angle));
                xi += tr * s.length;
                break;
            }
            case SegmentKind::Constant: {
                const double tr = s.matrix.trace();
                if (tr <= 1e-14) {
                    res.warnings.push_back("excised zero-trace region of length " +
                                           std::to_string(s.length));
                    CANON_LOG_INFO("normalize_trace: " + res.warnings.back());
                    break;  // xi constant across it
                }
                push_merged(res.hamiltonian.segments,
                            Segment::constant(tr * s.length, (1.0 / tr) * s.matrix));
                xi += tr * s.length;
                break;
            }
            case SegmentKind::Sampled: {
                const size_t n = s.samples.size();
                const double hstep = s.length / static_cast<double>(n - 1);
                // xi over the segment: piecewise-quadratic (trace is linear per cell)
                std::vector<double> xi_nodes(n, 0.0);
                for (size_t k = 0; k + 1 < n; ++k) {
                    const double t0 = s.samples[k].trace(), t1 = s.samples[k + 1].trace();
                    xi_nodes[k + 1] = xi_nodes[k] + hstep * (t0 + t1) / 2.0;
                }
                const double seg_len = xi_nodes.back();
                if (seg_len <= 1e-14) {
                    res.warnings.push_back("excised zero-trace sampled segment of length " +
                                           std::to_string(s.length));
                    CANON_LOG_INFO("normalize_trace: " + res.warnings.back());
                    break;
                }
                // resample H(x(s))/tr H(x(s)) on a uniform grid in s
                std::vector<Sym2> out(n);
                for (size_t j = 0; j < n; ++j) {
                    const double target = seg_len * static_cast<double>(j) / static_cast<double>(n - 1);
                    // locate cell and solve the quadratic for the local position
                    size_t k = std::min(static_cast<size_t>(std::upper_bound(xi_nodes.begin(),
                                                                             xi_nodes.end(), target) -
                                                            xi_nodes.begin()),
                                        n - 1) -
                               (target > 0.0 ? 1 : 0);
                    if (k >= n - 1) k = n - 2;
                    while (k > 0 && xi_nodes[k] > target) --k;
                    const double t0 = s.samples[k].trace(), t1 = s.samples[k + 1].trace();
                    const double rem = target - xi_nodes[k];
                    // rem = h*(t0*u + (t1-t0)*u^2/2), u in [0,1]
                    double u;
                    const double a2 = (t1 - t0) / 2.0;
                    if (std::abs(a2) < 1e-14 * std::max(1.0, t0)) {
                        u = (t0 > 0.0) ? rem / (hstep * t0) : 0.0;
                    } else {
                        const double disc = t0 * t0 + 4.0 * a2 * rem / hstep;
                        u = (-t0 + std::sqrt(std::max(0.0, disc))) / (2.0 * a2);
                    }
                    u = std::clamp(u, 0.0, 1.0);
                    const Sym2 m = (1.0 - u) * s.samples[k] + u * s.samples[k + 1];
                    const double tr = m.trace();
                    out[j] = (tr > 1e-14) ? (1.0 / tr) * m : Sym2{0.5, 0.0, 0.5};
                }
                res.hamiltonian.segments.push_back(Segment::sampled(seg_len, std::move(out)));
                xi += seg_len;
                break;
            }
        }
        x += s.length;
        grid.push_back(x);
        values.push_back(xi);
    }
    res.reparametrization.grid = std::move(grid);
    res.reparametrization.values = std::move(values);
    return res;
}

double exact_type(const Hamiltonian& h) {
    double acc = 0.0;
    for (const Segment& s : h.segments) acc += s.type_integral();
    return acc;
}

// ---------------------------------------------------------------------------
// lambda = 0 ODE reductions. Classical RK4 on the sampled coefficient with a
// half-step Richardson accuracy check.

namespace {

struct State2 {
    double y, dy;
};

// one RK4 step for y'' = q(x) y
State2 rk4_schrodinger(const State2& u, double x, double h, const std::function<double(double)>& q) {
    auto f = [&](double xx, const State2& s) { return State2{s.dy, q(xx) * s.y}; };
    const State2 k1 = f(x, u);
    const State2 k2 = f(x + h / 2, {u.y + h / 2 * k1.y, u.dy + h / 2 * k1.dy});
    const State2 k3 = f(x + h / 2, {u.y + h / 2 * k2.y, u.dy + h / 2 * k2.dy});
    const State2 k4 = f(x + h, {u.y + h * k3.y, u.dy + h * k3.dy});
    return {u.y + h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
            u.dy + h / 6 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy)};
}

double interp_samples(const std::vector<double>& v, double x01) {
    const size_t n = v.size();
    if (n == 1) return v[0];
    double u = std::clamp(x01, 0.0, 1.0) * static_cast<double>(n - 1);
    size_t k = std::min(static_cast<size_t>(u), n - 2);
    const double w = u - static_cast<double>(k);
    return (1.0 - w) * v[k] + w * v[k + 1];
}

}  // namespace

SchrodingerReduction schrodinger_to_canonical(const std::vector<double>& q_samples, double h,
                                              int grid_n) {
    if (grid_n < 16) throw validation_error("schrodinger_to_canonical: grid_n must be >= 16");
    if (q_samples.empty()) throw validation_error("schrodinger_to_canonical: empty q");
    auto q = [&](double x) { return interp_samples(q_samples, x); };

    // joint state (y1, y1', y2, y2', xi) with xi' = y1^2 + y2^2, one RK4
    using S5 = std::array<double, 5>;
    auto deriv = [&](double x, const S5& s) {
        const double qx = q(x);
        return S5{s[1], qx * s[0], s[3], qx * s[2], s[0] * s[0] + s[2] * s[2]};
    };
    auto rk4 = [&](const S5& s, double x, double hh) {
        auto add = [](const S5& a, double f, const S5& b) {
            S5 r;
            for (int i = 0; i < 5; ++i) r[i] = a[i] + f * b[i];
            return r;
        };
        const S5 k1 = deriv(x, s);
        const S5 k2 = deriv(x + hh / 2, add(s, hh / 2, k1));
        const S5 k3 = deriv(x + hh / 2, add(s, hh / 2, k2));
        const S5 k4 = deriv(x + hh, add(s, hh, k3));
        S5 r;
        for (int i = 0; i < 5; ++i) r[i] = s[i] + hh / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        return r;
    };
    auto integrate = [&](int n) {
        const double stepn = 1.0 / n;
        std::vector<S5> out(static_cast<size_t>(n) + 1);
        out[0] = {1.0, h, 0.0, 1.0, 0.0};
        for (int k = 0; k < n; ++k) out[k + 1] = rk4(out[k], stepn * k, stepn);
        return out;
    };

    const auto us = integrate(grid_n);
    const auto vs = integrate(2 * grid_n);

    // Richardson check at the right end
    double rich = 0.0;
    for (int i = 0; i < 5; ++i)
        rich = std::max(rich, std::abs(us[grid_n][i] - vs[2 * grid_n][i]));

    double wdrift = 0.0;
    for (int k = 0; k <= grid_n; ++k) {
        const double w = us[k][1] * us[k][2] - us[k][3] * us[k][0];  // W{y1,y2}
        wdrift = std::max(wdrift, std::abs(w + 1.0));
    }
    wdrift = std::max(wdrift, rich);
    if (wdrift > 1e-6)
        throw numeric_error("schrodinger_to_canonical: Wronskian drift " + std::to_string(wdrift) +
                            " exceeds 1e-6; refine the grid");

    // Trace-normalize by resampling the solution pair itself on a uniform
    // xi grid: nodes stay exactly rank one, H = v v^T / ||v||^2.
    std::vector<State2> u1(static_cast<size_t>(grid_n) + 1), u2(static_cast<size_t>(grid_n) + 1);
    std::vector<double> xi(static_cast<size_t>(grid_n) + 1);
    for (int k = 0; k <= grid_n; ++k) {
        u1[k] = {us[k][0], us[k][1]};
        u2[k] = {us[k][2], us[k][3]};
        xi[k] = us[k][4];
    }
    const double step = 1.0 / grid_n;
    const double total = xi[grid_n];
    auto trace_at = [&](int k) { return u1[k].y * u1[k].y + u2[k].y * u2[k].y; };

    std::vector<Sym2> samples(grid_n + 1);
    std::vector<double> grid_x(grid_n + 1);
    for (int j = 0; j <= grid_n; ++j) {
        const double target = total * static_cast<double>(j) / grid_n;
        int k = static_cast<int>(std::upper_bound(xi.begin(), xi.end(), target) - xi.begin()) - 1;
        k = std::clamp(k, 0, grid_n - 1);
        const double t0 = trace_at(k), t1 = trace_at(k + 1);
        const double rem = target - xi[k];
        double u;
        const double a2 = (t1 - t0) / 2.0;
        if (std::abs(a2) < 1e-14 * std::max(1.0, t0))
            u = t0 > 0.0 ? rem / (step * t0) : 0.0;
        else
            u = (-t0 + std::sqrt(std::max(0.0, t0 * t0 + 4.0 * a2 * rem / step))) / (2.0 * a2);
        u = std::clamp(u, 0.0, 1.0);
        const double y1 = (1.0 - u) * u1[k].y + u * u1[k + 1].y;
        const double y2 = (1.0 - u) * u2[k].y + u * u2[k + 1].y;
        const double nrm = y1 * y1 + y2 * y2;
        samples[j] = {y1 * y1 / nrm, y1 * y2 / nrm, y2 * y2 / nrm};
        grid_x[j] = (k + u) * step;
    }

    SchrodingerReduction red;
    red.hamiltonian.trace_normalized = true;
    red.hamiltonian.segments.push_back(Segment::sampled(total, std::move(samples)));
    red.reparametrization.grid.assign(grid_x.begin(), grid_x.end());
    red.reparametrization.values.resize(grid_n + 1);
    for (int j = 0; j <= grid_n; ++j)
        red.reparametrization.values[j] = total * static_cast<double>(j) / grid_n;
    red.boundary = {u1[grid_n].y, u1[grid_n].dy, u2[grid_n].y, u2[grid_n].dy};
    red.wronskian_drift = wdrift;
    return red;
}

namespace {

using Mat2r = std::array<double, 4>;  // [[a,b],[c,d]] row-major

Mat2r mat2r_mul(const Mat2r& a, const Mat2r& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

}  // namespace

DiracReduction dirac_to_canonical(const std::vector<std::array<double, 4>>& q_samples, int grid_n) {
    if (grid_n < 16) throw validation_error("dirac_to_canonical: grid_n must be >= 16");
    if (q_samples.empty()) throw validation_error("dirac_to_canonical: empty Q");
    for (const auto& m : q_samples)
        if (std::abs(m[1] - m[2]) > 1e-12 * (1.0 + std::abs(m[1]) + std::abs(m[2])))
            throw validation_error("dirac_to_canonical: Q must satisfy q12 = q21 (det X = 1)");

    auto qat = [&](double x, int i) {
        const size_t n = q_samples.size();
        if (n == 1) return q_samples[0][i];
        double u = std::clamp(x, 0.0, 1.0) * static_cast<double>(n - 1);
        size_t k = std::min(static_cast<size_t>(u), n - 2);
        const double w = u - static_cast<double>(k);
        return (1.0 - w) * q_samples[k][i] + w * q_samples[k + 1][i];
    };
    // X' = J Q X, J = (0 -1; 1 0) => rows: (JQ) = [[-q21, -q22],[q11, q12]]
    auto deriv = [&](double x, const Mat2r& m) {
        const double q11 = qat(x, 0), q12 = qat(x, 1), q21 = qat(x, 2), q22 = qat(x, 3);
        const Mat2r jq = {-q21, -q22, q11, q12};
        return mat2r_mul(jq, m);
    };

    // joint state (x11, x12, x21, x22, xi) with xi' = ||X||_F^2
    using S5 = std::array<double, 5>;
    auto deriv5 = [&](double x, const S5& s) {
        const Mat2r d = deriv(x, {s[0], s[1], s[2], s[3]});
        return S5{d[0], d[1], d[2], d[3], s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3]};
    };
    auto integrate = [&](int n) {
        const double stepn = 1.0 / n;
        std::vector<S5> out(static_cast<size_t>(n) + 1);
        out[0] = {1.0, 0.0, 0.0, 1.0, 0.0};
        for (int k = 0; k < n; ++k) {
            const double x = stepn * k;
            const S5& u = out[k];
            auto add = [](const S5& a, double f, const S5& b) {
                S5 r;
                for (int i = 0; i < 5; ++i) r[i] = a[i] + f * b[i];
                return r;
            };
            const S5 k1 = deriv5(x, u);
            const S5 k2 = deriv5(x + stepn / 2, add(u, stepn / 2, k1));
            const S5 k3 = deriv5(x + stepn / 2, add(u, stepn / 2, k2));
            const S5 k4 = deriv5(x + stepn, add(u, stepn, k3));
            S5 nxt;
            for (int i = 0; i < 5; ++i)
                nxt[i] = u[i] + stepn / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
            out[k + 1] = nxt;
        }
        return out;
    };

    auto xs = integrate(grid_n);
    auto xs2 = integrate(2 * grid_n);
    double drift = 0.0;
    for (int k = 0; k <= grid_n; ++k) {
        const double d = xs[k][0] * xs[k][3] - xs[k][1] * xs[k][2];
        drift = std::max(drift, std::abs(d - 1.0));
    }
    for (int i = 0; i < 4; ++i)
        drift = std::max(drift, std::abs(xs[grid_n][i] - xs2[2 * grid_n][i]));
    if (drift > 1e-6)
        throw numeric_error("dirac_to_canonical: determinant drift " + std::to_string(drift) +
                            " exceeds 1e-6; refine the grid");

    // Resample X on a uniform xi grid, then form H = X^T X / tr: symmetric
    // psd with unit trace at every node by construction.
    auto trace_at = [&](int k) {
        const S5& m = xs[k];
        return m[0] * m[0] + m[1] * m[1] + m[2] * m[2] + m[3] * m[3];
    };
    std::vector<double> xi(grid_n + 1);
    const double step = 1.0 / grid_n;
    for (int k = 0; k <= grid_n; ++k) xi[k] = xs[k][4];
    const double total = xi[grid_n];

    std::vector<Sym2> samples(grid_n + 1);
    std::vector<double> grid_x(grid_n + 1);
    for (int j = 0; j <= grid_n; ++j) {
        const double target = total * static_cast<double>(j) / grid_n;
        int k = static_cast<int>(std::upper_bound(xi.begin(), xi.end(), target) - xi.begin()) - 1;
        k = std::clamp(k, 0, grid_n - 1);
        const double t0 = trace_at(k), t1 = trace_at(k + 1);
        const double rem = target - xi[k];
        double u;
        const double a2 = (t1 - t0) / 2.0;
        if (std::abs(a2) < 1e-14 * std::max(1.0, t0))
            u = t0 > 0.0 ? rem / (step * t0) : 0.0;
        else
            u = (-t0 + std::sqrt(std::max(0.0, t0 * t0 + 4.0 * a2 * rem / step))) / (2.0 * a2);
        u = std::clamp(u, 0.0, 1.0);
        Mat2r m;
        for (int i = 0; i < 4; ++i) m[i] = (1.0 - u) * xs[k][i] + u * xs[k + 1][i];
        const Sym2 g{m[0] * m[0] + m[2] * m[2], m[0] * m[1] + m[2] * m[3],
                     m[1] * m[1] + m[3] * m[3]};
        samples[j] = (1.0 / g.trace()) * g;
        grid_x[j] = (k + u) * step;
    }

    DiracReduction red;
    red.hamiltonian.trace_normalized = true;
    red.hamiltonian.segments.push_back(Segment::sampled(total, std::move(samples)));
    red.reparametrization.grid.assign(grid_x.begin(), grid_x.end());
    red.reparametrization.values.resize(grid_n + 1);
    for (int j = 0; j <= grid_n; ++j)
        red.reparametrization.values[j] = total * static_cast<double>(j) / grid_n;
    red.det_drift = drift;
    return red;
}

NormalizeResult string_to_canonical(const std::vector<StringPiece>& pieces) {
    Hamiltonian raw;
    for (const StringPiece& p : pieces) {
        if (!(p.rho > 0.0)) throw validation_error("string_to_canonical: rho must be positive");
        if (!(p.length > 0.0)) throw validation_error("string_to_canonical: length must be positive");
        raw.segments.push_back(Segment::constant(p.length, {p.rho, 0.0, 1.0}));
    }
    return normalize_trace(raw);
}

NormalizeResult string_to_canonical(const std::vector<double>& rho_samples, double length) {
    if (rho_samples.size() < 2) throw validation_error("string_to_canonical: need >= 2 samples");
    std::vector<Sym2> samples(rho_samples.size());
    for (size_t k = 0; k < rho_samples.size(); ++k) {
        if (!(rho_samples[k] > 0.0))
            throw validation_error("string_to_canonical: rho must be positive");
        samples[k] = {rho_samples[k], 0.0, 1.0};
    }
    Hamiltonian raw;
    raw.segments.push_back(Segment::sampled(length, std::move(samples)));
    return normalize_trace(raw);
}

ExtReal boundary_parameter_map(const SchrodingerBoundary& b, const ExtReal& h_r) {
    double num, den;
    if (h_r.infinite) {
        num = -b.y2;
        den = b.y1;
    } else {
        num = b.dy2 - h_r.value * b.y2;
        den = -b.dy1 + h_r.value * b.y1;
    }
    const double scale = std::abs(b.y1) + std::abs(b.dy1) + std::abs(b.y2) + std::abs(b.dy2);
    if (std::abs(num) < 1e-14 * scale && std::abs(den) < 1e-14 * scale)
        throw validation_error("boundary_parameter_map: degenerate boundary data (0/0)");
    if (std::abs(den) < 1e-14 * scale * std::max(1.0, std::abs(num))) return ExtReal::inf();
    if (den == 0.0) return ExtReal::inf();
    return ExtReal::finite(num / den);
}

}  // namespace canon
