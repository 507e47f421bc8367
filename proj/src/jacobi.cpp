#include "canon/jacobi.hpp"

#include <cmath>

namespace canon {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

struct V2 {
    double p, m;  // (e+, e-)
};

V2 dir(double angle) { return {std::cos(angle), std::sin(angle)}; }
V2 perp(const V2& e) { return {-e.m, e.p}; }  // J e
double dot(const V2& a, const V2& b) { return a.p * b.p + a.m * b.m; }

}  // namespace

void JacobiMatrix::validate() const {
    if (q.empty()) throw validation_error("JacobiMatrix: empty diagonal");
    if (rho.size() + 1 != q.size() && rho.size() != q.size())
        throw validation_error("JacobiMatrix: need len(rho) in {len(q)-1, len(q)}");
    for (double r : rho)
        if (r == 0.0) throw validation_error("JacobiMatrix: rho_j must be nonzero");
}

void RankOneChain::validate() const {
    if (links.empty()) throw validation_error("RankOneChain: empty chain");
    for (const Link& l : links)
        if (!(l.length > 0.0)) throw validation_error("RankOneChain: lengths must be positive");
    if (std::abs(std::cos(links.front().angle)) < 1e-12)
        throw validation_error("RankOneChain: (L) violated (e_1^+ = 0)");
    for (size_t j = 0; j + 1 < links.size(); ++j) {
        double d = std::fmod(links[j].angle - links[j + 1].angle, kPi);
        if (d > kPi / 2) d -= kPi;
        if (d < -kPi / 2) d += kPi;
        if (std::abs(d) < 1e-12)
            throw validation_error("RankOneChain: consecutive directions are parallel");
    }
}

Hamiltonian RankOneChain::to_hamiltonian() const {
    validate();
    Hamiltonian h;
    h.trace_normalized = true;
    for (const Link& l : links) h.segments.push_back(Segment::rank_one(l.length, l.angle));
    return h;
}

RankOneChain RankOneChain::from_hamiltonian(const Hamiltonian& h) {
    RankOneChain chain;
    for (const Segment& s : h.segments) {
        if (s.kind != SegmentKind::RankOne || std::abs(s.scale - 1.0) > 1e-12)
            throw validation_error("RankOneChain: Hamiltonian is not a unit rank-one chain");
        chain.links.push_back({s.length, s.angle});
    }
    if (chain.links.empty()) throw validation_error("RankOneChain: empty chain");
    // canonical signs: e_1^+ > 0, then <e_j^perp, e_{j+1}> < 0
    if (std::cos(chain.links[0].angle) < 0.0) chain.links[0].angle += kPi;
    for (size_t j = 0; j + 1 < chain.links.size(); ++j) {
        const V2 e = dir(chain.links[j].angle);
        const V2 en = dir(chain.links[j + 1].angle);
        if (dot(perp(e), en) > 0.0) chain.links[j + 1].angle += kPi;
    }
    chain.validate();
    return chain;
}

JacobiMatrix hamiltonian_to_jacobi(const RankOneChain& chain) {
    chain.validate();
    const size_t n = chain.links.size();
    const V2 boundary{0.0, 1.0};  // e_0 = e_{n+1} = (0, 1)

    auto cot_between = [](const V2& a, const V2& b) {
        const double s = dot(perp(a), b);
        if (std::abs(s) < 1e-14)
            throw validation_error("hamiltonian_to_jacobi: consecutive directions are parallel");
        return dot(a, b) / s;
    };

    JacobiMatrix jm;
    jm.q.resize(n);
    jm.rho.resize(n - 1);
    for (size_t j = 0; j < n; ++j) {
        const V2 e = dir(chain.links[j].angle);
        const V2 prev = (j == 0) ? boundary : dir(chain.links[j - 1].angle);
        const V2 next = (j + 1 == n) ? boundary : dir(chain.links[j + 1].angle);
        jm.q[j] = (cot_between(e, next) - cot_between(e, prev)) / chain.links[j].length;
        if (j + 1 < n) {
            const double s = dot(perp(e), next);
            jm.rho[j] = -1.0 / (s * std::sqrt(chain.links[j + 1].length * chain.links[j].length));
        }
    }
    return jm;
}

RankOneChain jacobi_to_hamiltonian(const JacobiMatrix& jm, double e1_angle, double delta1) {
    jm.validate();
    for (double r : jm.rho)
        if (!(r > 0.0)) throw validation_error("jacobi_to_hamiltonian: rho_j must be positive");
    if (std::abs(std::cos(e1_angle)) < 1e-12)
        throw validation_error("jacobi_to_hamiltonian: (L) violated (seed e_1 = (0,1))");
    if (!(delta1 > 0.0)) throw validation_error("jacobi_to_hamiltonian: delta1 must be positive");

    const size_t steps = std::min(jm.rho.size(), jm.q.size());
    RankOneChain chain;
    chain.links.push_back({delta1, e1_angle});

    // cot of the angle from e_1 back to e_0 = (0,1)
    double cot_prev = std::tan(e1_angle);
    for (size_t j = 0; j < steps; ++j) {
        const double c = jm.q[j] * chain.links[j].length + cot_prev;
        // e_{j+1} = rotation of e_j by phi, cot(phi) = c, sin(phi) < 0
        double phi = std::atan2(1.0, c) - kPi;
        const double s = std::sin(phi);
        chain.links.push_back(
            {1.0 / (jm.rho[j] * jm.rho[j] * s * s * chain.links[j].length),
             chain.links[j].angle + phi});
        // <e_{j+1}^perp, e_j> = -sin(phi): cot back to the previous direction
        cot_prev = -c;
    }
    chain.validate();
    return chain;
}

}  // namespace canon
