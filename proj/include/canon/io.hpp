// JSON file formats and CSV emission for the CLI.
#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "canon/core.hpp"
#include "canon/debranges.hpp"
#include "canon/hamiltonian.hpp"
#include "canon/inverse.hpp"
#include "canon/jacobi.hpp"
#include "canon/weyl.hpp"

namespace canon::io {

using json = nlohmann::json;

// {"coeffs": [c0, c1, ...]} ascending
json poly_to_json(const Poly& p);
Poly poly_from_json(const json& j);

// {"trace_normalized": bool, "segments": [...], "tail": {...}? }
json hamiltonian_to_json(const Hamiltonian& h);
Hamiltonian hamiltonian_from_json(const json& j);
json semiaxis_to_json(const SemiaxisHamiltonian& h);
SemiaxisHamiltonian semiaxis_from_json(const json& j);
bool json_has_tail(const json& j);

// {"theta_plus": {...}, "theta_minus": {...}, "normalized": bool}
json hb_to_json(const HBPolynomial& hb);
HBPolynomial hb_from_json(const json& j);

// {"atoms": [{"t": f, "w": f}]}
json measure_to_json(const AtomicMeasure& mu);
AtomicMeasure measure_from_json(const json& j);

// {"q": [...], "rho": [...]}
json jacobi_to_json(const JacobiMatrix& jm);
JacobiMatrix jacobi_from_json(const json& j);

// {"zeros": [...], "residues": [...], "a": f, "b": f, "dtheta_minus_0": f}
json regular_spec_to_json(const RegularHBSpec& spec);
RegularHBSpec regular_spec_from_json(const json& j);

// {"density": {"kind": ..., ...}?, "atoms": [...]?}
MeasureDescriptor measure_descriptor_from_json(const json& j);
// {"n_list": [...], "s_n": [...], "x_max": f, "grid_n": int}
SingularInverseSchedule schedule_from_json(const json& j);

json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);
void write_text_file(const std::string& path, const std::string& text);

// full double precision decimal
std::string fmt(double v);
std::string fmt(cplx v);
// "a+bi" / "a-bi" / plain real
cplx parse_complex(const std::string& s);

// FNV-1a of a file's bytes, hex
std::string file_digest(const std::string& path);

}  // namespace canon::io
