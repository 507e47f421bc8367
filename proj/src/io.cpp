#include "canon/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace canon::io {

namespace {

Sym2 sym_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 ||
        !j[1].is_array() || j[1].size() != 2)
        throw validation_error("matrix must be [[a,b],[b,c]]");
    const double a = j[0][0].get<double>();
    const double b = j[0][1].get<double>();
    const double b2 = j[1][0].get<double>();
    const double c = j[1][1].get<double>();
    if (std::abs(b - b2) > 1e-12 * (1.0 + std::abs(b)))
        throw validation_error("matrix must be symmetric");
    return {a, b, c};
}

json sym_to_json(const Sym2& m) {
    return json::array({json::array({m.a11, m.a12}), json::array({m.a12, m.a22})});
}

Segment segment_from_json(const json& j) {
    if (!j.contains("kind")) throw validation_error("segment needs a kind");
    const std::string kind = j.at("kind").get<std::string>();
    const double length = j.value("length", 0.0);
    if (kind == "rank_one") {
        Segment s = Segment::rank_one(length, j.at("angle").get<double>(), j.value("scale", 1.0));
        return s;
    }
    if (kind == "constant") return Segment::constant(length, sym_from_json(j.at("matrix")));
    if (kind == "sampled") {
        std::vector<Sym2> samples;
        for (const json& m : j.at("matrices")) samples.push_back(sym_from_json(m));
        if (j.contains("n") && j.at("n").get<size_t>() != samples.size())
            throw validation_error("sampled segment: n does not match matrices");
        return Segment::sampled(length, std::move(samples));
    }
    throw validation_error("unknown segment kind: " + kind);
}

json segment_to_json(const Segment& s) {
    json j;
    j["length"] = s.length;
    switch (s.kind) {
        case SegmentKind::RankOne:
            j["kind"] = "rank_one";
            j["angle"] = s.angle;
            if (s.scale != 1.0) j["scale"] = s.scale;
            break;
        case SegmentKind::Constant:
            j["kind"] = "constant";
            j["matrix"] = sym_to_json(s.matrix);
            break;
        case SegmentKind::Sampled: {
            j["kind"] = "sampled";
            j["n"] = s.samples.size();
            json arr = json::array();
            for (const Sym2& m : s.samples) arr.push_back(sym_to_json(m));
            j["matrices"] = std::move(arr);
            break;
        }
    }
    return j;
}

}  // namespace

json poly_to_json(const Poly& p) {
    json j;
    j["coeffs"] = p.coeffs().empty() ? std::vector<double>{0.0} : p.coeffs();
    return j;
}

Poly poly_from_json(const json& j) {
    if (!j.contains("coeffs")) throw validation_error("polynomial needs coeffs");
    return Poly(j.at("coeffs").get<std::vector<double>>());
}

json hamiltonian_to_json(const Hamiltonian& h) {
    json j;
    j["trace_normalized"] = h.trace_normalized;
    json arr = json::array();
    for (const Segment& s : h.segments) arr.push_back(segment_to_json(s));
    j["segments"] = std::move(arr);
    return j;
}

Hamiltonian hamiltonian_from_json(const json& j) {
    Hamiltonian h;
    h.trace_normalized = j.value("trace_normalized", false);
    if (!j.contains("segments")) throw validation_error("Hamiltonian needs segments");
    for (const json& s : j.at("segments")) h.segments.push_back(segment_from_json(s));
    h.validate();
    return h;
}

bool json_has_tail(const json& j) { return j.contains("tail"); }

json semiaxis_to_json(const SemiaxisHamiltonian& h) {
    json j = hamiltonian_to_json(h.prefix);
    json t = segment_to_json(h.tail);
    t.erase("length");
    j["tail"] = std::move(t);
    return j;
}

SemiaxisHamiltonian semiaxis_from_json(const json& j) {
    SemiaxisHamiltonian sh;
    if (j.contains("segments") && !j.at("segments").empty()) {
        sh.prefix = hamiltonian_from_json(j);
    } else {
        sh.prefix.trace_normalized = j.value("trace_normalized", false);
    }
    if (j.contains("tail")) {
        json t = j.at("tail");
        t["length"] = 1.0;
        sh.tail = segment_from_json(t);
    } else {
        return SemiaxisHamiltonian::extend_constant(sh.prefix);
    }
    sh.validate();
    return sh;
}

json hb_to_json(const HBPolynomial& hb) {
    json j;
    j["theta_plus"] = poly_to_json(hb.theta_plus);
    j["theta_minus"] = poly_to_json(hb.theta_minus);
    j["normalized"] = hb.normalized;
    return j;
}

HBPolynomial hb_from_json(const json& j) {
    HBPolynomial hb;
    hb.theta_plus = poly_from_json(j.at("theta_plus"));
    hb.theta_minus = poly_from_json(j.at("theta_minus"));
    hb.normalized = j.value("normalized", false);
    return hb;
}

json measure_to_json(const AtomicMeasure& mu) {
    json arr = json::array();
    for (const auto& atom : mu.atoms) arr.push_back(json{{"t", atom.t}, {"w", atom.w}});
    return json{{"atoms", std::move(arr)}};
}

AtomicMeasure measure_from_json(const json& j) {
    AtomicMeasure mu;
    for (const json& a : j.at("atoms"))
        mu.atoms.push_back({a.at("t").get<double>(), a.at("w").get<double>()});
    mu.sort_atoms();
    mu.validate();
    return mu;
}

json jacobi_to_json(const JacobiMatrix& jm) { return json{{"q", jm.q}, {"rho", jm.rho}}; }

JacobiMatrix jacobi_from_json(const json& j) {
    JacobiMatrix jm;
    jm.q = j.at("q").get<std::vector<double>>();
    jm.rho = j.at("rho").get<std::vector<double>>();
    jm.validate();
    return jm;
}

json regular_spec_to_json(const RegularHBSpec& spec) {
    return json{{"zeros", spec.zeros},
                {"residues", spec.residues},
                {"a", spec.a},
                {"b", spec.b},
                {"dtheta_minus_0", spec.dtheta_minus_0}};
}

RegularHBSpec regular_spec_from_json(const json& j) {
    RegularHBSpec spec;
    spec.zeros = j.at("zeros").get<std::vector<double>>();
    spec.residues = j.at("residues").get<std::vector<double>>();
    spec.a = j.value("a", 0.0);
    spec.b = j.value("b", 0.0);
    spec.dtheta_minus_0 = j.at("dtheta_minus_0").get<double>();
    spec.validate();
    return spec;
}

MeasureDescriptor measure_descriptor_from_json(const json& j) {
    MeasureDescriptor mu;
    if (j.contains("density")) {
        const json& d = j.at("density");
        const std::string kind = d.at("kind").get<std::string>();
        if (kind == "constant") {
            mu.density = MeasureDescriptor::Density::Constant;
            mu.constant_value = d.at("value").get<double>();
        } else if (kind == "sampled") {
            mu.density = MeasureDescriptor::Density::Sampled;
            mu.grid = d.at("grid").get<std::vector<double>>();
            mu.values = d.at("values").get<std::vector<double>>();
        } else if (kind == "inverse_t") {
            mu.density = MeasureDescriptor::Density::InverseT;
            mu.coeff = d.at("coeff").get<double>();
        } else {
            throw validation_error("unknown density kind: " + kind);
        }
    }
    if (j.contains("atoms")) mu.atoms = measure_from_json(j);
    mu.validate();
    return mu;
}

SingularInverseSchedule schedule_from_json(const json& j) {
    SingularInverseSchedule s;
    s.n_list = j.at("n_list").get<std::vector<int>>();
    if (j.contains("s_n"))
        s.s_n = j.at("s_n").get<std::vector<double>>();
    else
        for (int n : s.n_list) s.s_n.push_back(static_cast<double>(n));
    s.x_max = j.at("x_max").get<double>();
    s.grid_n = j.at("grid_n").get<int>();
    return s;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw validation_error("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot write file: " + path);
    out << text;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(cplx v) {
    std::string s = fmt(v.real());
    s += (v.imag() < 0.0 ? "-" : "+");
    s += fmt(std::abs(v.imag()));
    s += "i";
    return s;
}

cplx parse_complex(const std::string& s) {
    // forms: "a", "a+bi", "a-bi", "bi"
    std::string t = s;
    if (t.empty()) throw validation_error("empty complex literal");
    const bool has_i = t.back() == 'i' || t.back() == 'j';
    if (!has_i) return cplx(std::stod(t), 0.0);
    t.pop_back();
    // find the split sign (not at position 0, not after e/E)
    size_t split = std::string::npos;
    for (size_t k = t.size(); k-- > 1;) {
        if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    if (split == std::string::npos) return cplx(0.0, t == "" || t == "+" ? 1.0 : (t == "-" ? -1.0 : std::stod(t)));
    const std::string re = t.substr(0, split);
    std::string im = t.substr(split);
    if (im == "+") im = "1";
    if (im == "-") im = "-1";
    return cplx(std::stod(re), std::stod(im));
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    uint64_t h = 1469598103934665603ull;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

}  // namespace canon::io
