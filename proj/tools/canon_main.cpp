// canon: command-line front end for the canonical-system library.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canon/core.hpp"
#include "canon/debranges.hpp"
#include "canon/evolve.hpp"
#include "canon/hamiltonian.hpp"
#include "canon/inverse.hpp"
#include "canon/io.hpp"
#include "canon/jacobi.hpp"
#include "canon/parallel.hpp"
#include "canon/weyl.hpp"

namespace {

using canon::cplx;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumeric = 4;

struct Report {
    std::string command;
    std::map<std::string, std::string> inputs;
    json outputs = json::object();
    std::map<std::string, double> residuals;
    std::vector<std::string> warnings;
    bool failed = false;

    void note_input(const std::string& path) { inputs[path] = canon::io::file_digest(path); }
    // records a residual and asserts it against its tolerance
    void check(const std::string& name, double value, double tol) {
        residuals[name] = value;
        if (!(std::abs(value) <= tol)) {
            failed = true;
            warnings.push_back("check failed: " + name + " = " + canon::io::fmt(value) +
                               " (tol " + canon::io::fmt(tol) + ")");
        }
    }
};

std::string g_outdir = ".";
std::string g_format = "json";

void write_report(const Report& r) {
    json j;
    j["command"] = r.command;
    j["inputs"] = r.inputs;
    j["outputs"] = r.outputs;
    j["residuals"] = r.residuals;
    j["warnings"] = r.warnings;
    j["status"] = r.failed ? "fail" : "ok";
    canon::io::write_json_file(g_outdir + "/report.json", j);
}

std::string out_path(const std::string& name) { return g_outdir + "/" + name; }

json sym_json(const canon::Sym2& m) {
    return json::array({json::array({m.a11, m.a12}), json::array({m.a12, m.a22})});
}

json mat_json(const canon::Mat2& m) {
    auto c = [](cplx v) { return json::array({v.real(), v.imag()}); };
    return json::array({json::array({c(m.m11), c(m.m12)}), json::array({c(m.m21), c(m.m22)})});
}

void emit_measure(Report& rep, const canon::AtomicMeasure& mu, const std::string& stem) {
    if (g_format == "csv") {
        std::ostringstream csv;
        csv << "lambda,weight\n";
        for (const auto& atom : mu.atoms)
            csv << canon::io::fmt(atom.t) << "," << canon::io::fmt(atom.w) << "\n";
        canon::io::write_text_file(out_path(stem + ".csv"), csv.str());
        rep.outputs["file"] = stem + ".csv";
    } else {
        canon::io::write_json_file(out_path(stem + ".json"), canon::io::measure_to_json(mu));
        rep.outputs["file"] = stem + ".json";
    }
}

int run_selftest(Report& rep) {
    using namespace canon;
    // deterministic identity suite on a fixed mixed Hamiltonian
    Hamiltonian h;
    h.trace_normalized = true;
    h.segments.push_back(Segment::constant(1.0, {0.5, 0.0, 0.5}));
    h.segments.push_back(Segment::rank_one(0.7, 0.3));
    h.segments.push_back(Segment::constant(0.8, {0.7, 0.1, 0.3}));
    const double L = h.total_length();

    double worst_det = 0.0, worst_norm = 0.0, worst_green = 0.0, worst_trace = 0.0;
    const cplx zs[] = {{1.0, 0.5}, {-2.0, 1.0}, {3.5, -0.7}, {0.0, 2.0}, {5.0, 0.0}};
    for (const cplx z : zs) {
        for (const double x : {0.4, 1.3, 2.1, L}) {
            const Mat2 m = monodromy(h, z, x);
            worst_det = std::max(worst_det, std::abs(m.det() - cplx(1.0)));
            worst_norm =
                std::max(worst_norm, mat2_opnorm(m) / std::exp(x * std::abs(z)) - 1.0);
            const Mat2 lhs = m.conj_transpose() * Mat2::J() * m - Mat2::J();
            const Mat2 rhs = greens_matrix(h, z, z, x);
            worst_green = std::max(worst_green, mat2_frobenius(lhs - rhs));
        }
    }
    for (const double x : {0.3, 1.0, 1.9, 2.5}) {
        worst_trace = std::max(worst_trace, std::abs(accumulated_hamiltonian(h, x).trace() - x));
    }
    rep.check("det_drift", worst_det, 1e-10);
    rep.check("estM_excess", std::max(0.0, worst_norm), 1e-8);
    rep.check("green_identity", worst_green, 1e-7);
    rep.check("trace_identity", worst_trace, 1e-10);

    // free-system spectrum
    Hamiltonian free_h;
    free_h.trace_normalized = true;
    free_h.segments.push_back(Segment::constant(3.141592653589793, {0.5, 0.0, 0.5}));
    const std::vector<double> spec = spectrum_alpha(free_h, 1.5707963267948966, -5.0, 5.0);
    double worst_spec = spec.size() == 5 ? 0.0 : 1.0;
    for (size_t i = 0; i < spec.size() && worst_spec < 1.0; ++i)
        worst_spec = std::max(worst_spec, std::abs(spec[i] - (-4.0 + 2.0 * static_cast<double>(i))));
    rep.check("free_spectrum", worst_spec, 1e-8);

    std::cout << (rep.failed ? "selftest: FAIL\n" : "selftest: ok\n");
    return rep.failed ? kExitNumeric : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"canonical systems: direct and inverse spectral theory"};
    app.require_subcommand(1);

    int threads = 1;
    double tol = 1e-9;
    app.add_option("--out", g_outdir, "output directory (default .)");
    app.add_option("--format", g_format, "output format: json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--tol", tol, "tolerance for iterative computations");
    app.add_option("--threads", threads, "worker threads for grid sweeps");

    // ---- normalize
    auto* cmd_norm = app.add_subcommand("normalize", "trace-normalize a Hamiltonian");
    std::string norm_h;
    cmd_norm->add_option("--h", norm_h, "Hamiltonian JSON")->required();

    // ---- reduce
    auto* cmd_reduce = app.add_subcommand("reduce", "reduce classical problems to canonical systems");
    auto* red_schr = cmd_reduce->add_subcommand("schrodinger", "-y'' + q y = lambda y");
    std::string schr_q;
    double schr_h = 0.0;
    int schr_grid = 256;
    red_schr->add_option("--q", schr_q, "JSON {\"samples\": [...]} of q on [0,1]")->required();
    red_schr->add_option("--hparam", schr_h, "left boundary parameter h");
    red_schr->add_option("--grid", schr_grid, "integration grid (>= 16)");
    auto* red_dirac = cmd_reduce->add_subcommand("dirac", "J X' + Q X = lambda X");
    std::string dirac_q;
    int dirac_grid = 256;
    red_dirac->add_option("--q", dirac_q, "JSON {\"matrices\": [[q11,q12,q21,q22], ...]}")
        ->required();
    red_dirac->add_option("--grid", dirac_grid, "integration grid (>= 16)");
    auto* red_string = cmd_reduce->add_subcommand("string", "-y'' = lambda rho y");
    std::string string_rho;
    red_string->add_option("--rho", string_rho,
                           "JSON {\"pieces\": [{\"length\",\"rho\"}]} or {\"samples\", \"length\"}")
        ->required();

    // ---- jacobi
    auto* cmd_jac = app.add_subcommand("jacobi", "Jacobi-matrix bridge");
    auto* jac_to = cmd_jac->add_subcommand("to", "rank-one chain -> Jacobi matrix");
    std::string jac_h;
    jac_to->add_option("--h", jac_h, "rank-one chain Hamiltonian JSON")->required();
    auto* jac_from = cmd_jac->add_subcommand("from", "Jacobi matrix -> rank-one chain");
    std::string jac_jm;
    double jac_e1 = 0.0, jac_d1 = 1.0;
    jac_from->add_option("--jm", jac_jm, "Jacobi JSON {\"q\": [...], \"rho\": [...]}")->required();
    jac_from->add_option("--e1", jac_e1, "seed direction angle (radians)");
    jac_from->add_option("--delta1", jac_d1, "seed length");

    // ---- direct
    auto* cmd_dir = app.add_subcommand("direct", "direct spectral theory");
    auto* dir_mono = cmd_dir->add_subcommand("monodromy", "fundamental solution at (x, z)");
    std::string dm_h, dm_z = "1";
    double dm_x = -1.0;
    dir_mono->add_option("--h", dm_h, "Hamiltonian JSON")->required();
    dir_mono->add_option("--z", dm_z, "spectral parameter a+bi");
    dir_mono->add_option("--x", dm_x, "position (default: total length)");
    auto* dir_spec = cmd_dir->add_subcommand("spectrum", "eigenvalues in a window");
    std::string ds_h;
    double ds_alpha = 1.5707963267948966;
    std::vector<double> ds_window{-5.0, 5.0};
    dir_spec->add_option("--h", ds_h, "Hamiltonian JSON")->required();
    dir_spec->add_option("--alpha", ds_alpha, "boundary angle");
    dir_spec->add_option("--window", ds_window, "window lo hi")->expected(2);
    auto* dir_meas = cmd_dir->add_subcommand("measure", "spectral measure in a window");
    std::string dme_h;
    double dme_alpha = 1.5707963267948966;
    std::vector<double> dme_window{-5.0, 5.0};
    dir_meas->add_option("--h", dme_h, "Hamiltonian JSON")->required();
    dir_meas->add_option("--alpha", dme_alpha, "boundary angle");
    dir_meas->add_option("--window", dme_window, "window lo hi")->expected(2);

    // ---- debranges
    auto* cmd_db = app.add_subcommand("debranges", "Hermite-Biehler toolkit");
    auto* db_kernel = cmd_db->add_subcommand("kernel", "reproducing kernel K_lambda(z)");
    std::string dbk_e, dbk_lambda = "0", dbk_z = "0";
    db_kernel->add_option("--e", dbk_e, "HBPolynomial JSON")->required();
    db_kernel->add_option("--lambda", dbk_lambda, "kernel point a+bi");
    db_kernel->add_option("--z", dbk_z, "evaluation point a+bi");
    auto* db_phi = cmd_db->add_subcommand("phi", "reconstruct the second column");
    std::string dbp_e;
    db_phi->add_option("--e", dbp_e, "HBPolynomial JSON")->required();
    auto* db_len = cmd_db->add_subcommand("length", "system length from E");
    std::string dbl_e;
    db_len->add_option("--e", dbl_e, "HBPolynomial JSON")->required();
    auto* db_type = cmd_db->add_subcommand("type", "exponential type");
    std::string dbt_e, dbt_h;
    bool dbt_numeric = false;
    double dbt_ymax = 1e4;
    db_type->add_option("--e", dbt_e, "HBPolynomial JSON");
    db_type->add_option("--h", dbt_h, "Hamiltonian JSON (exact type formula)");
    db_type->add_flag("--numeric", dbt_numeric, "estimate from ln|E(iy)| growth");
    db_type->add_option("--ymax", dbt_ymax, "top of the fitting range");

    // ---- inverse
    auto* cmd_inv = app.add_subcommand("inverse", "inverse problems on finite intervals");
    auto* inv_poly = cmd_inv->add_subcommand("poly", "polynomial HB inverse");
    std::string ip_e;
    inv_poly->add_option("--e", ip_e, "HBPolynomial JSON")->required();
    auto* inv_meas = cmd_inv->add_subcommand("measure", "finite atomic measure inverse");
    std::string im_atoms;
    double im_d1 = 0.0;
    inv_meas->add_option("--atoms", im_atoms, "AtomicMeasure JSON")->required();
    inv_meas->add_option("--d1", im_d1, "gauge parameter d1");
    auto* inv_reg = cmd_inv->add_subcommand("regular", "regular-case truncation algorithm");
    std::string ir_spec;
    int ir_n = 20, ir_grid = 64;
    inv_reg->add_option("--spec", ir_spec, "RegularHBSpec JSON")->required();
    inv_reg->add_option("--n", ir_n, "truncation level N");
    inv_reg->add_option("--grid", ir_grid, "output grid size");

    // ---- weyl
    auto* cmd_weyl = app.add_subcommand("weyl", "semiaxis theory");
    auto* w_disk = cmd_weyl->add_subcommand("disk", "Weyl disk at a truncation");
    std::string wd_h, wd_z = "0+1i";
    double wd_x = 1.0;
    w_disk->add_option("--h", wd_h, "semiaxis Hamiltonian JSON")->required();
    w_disk->add_option("--x", wd_x, "truncation length");
    w_disk->add_option("--z", wd_z, "spectral point a+bi, Im > 0");
    auto* w_m = cmd_weyl->add_subcommand("m", "Weyl-Titchmarsh m-function");
    std::string wm_h, wm_z = "0+1i";
    w_m->add_option("--h", wm_h, "semiaxis Hamiltonian JSON")->required();
    w_m->add_option("--z", wm_z, "spectral point a+bi, Im > 0");
    auto* w_dens = cmd_weyl->add_subcommand("density", "Im m(t+i eps)/pi on a grid");
    std::string wde_h;
    std::vector<double> wde_window{-3.0, 3.0};
    int wde_n = 61;
    double wde_eps = 1e-2;
    w_dens->add_option("--h", wde_h, "semiaxis Hamiltonian JSON")->required();
    w_dens->add_option("--window", wde_window, "window lo hi")->expected(2);
    w_dens->add_option("--n", wde_n, "grid points");
    w_dens->add_option("--eps", wde_eps, "offset above the real axis");
    auto* w_inv = cmd_weyl->add_subcommand("inverse", "measure -> semiaxis Hamiltonian");
    std::string wi_measure, wi_schedule;
    w_inv->add_option("--measure", wi_measure, "measure descriptor JSON")->required();
    w_inv->add_option("--schedule", wi_schedule, "schedule JSON")->required();

    // ---- selftest
    app.add_subcommand("selftest", "run the built-in identity suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    canon::set_parallel_threads(threads);
    std::filesystem::create_directories(g_outdir);

    Report rep;
    {
        std::ostringstream cmd;
        for (int i = 0; i < argc; ++i) cmd << (i ? " " : "") << argv[i];
        rep.command = cmd.str();
    }

    try {
        using namespace canon;
        if (*cmd_norm) {
            rep.note_input(norm_h);
            const Hamiltonian h = io::hamiltonian_from_json(io::load_json_file(norm_h));
            NormalizeResult res = normalize_trace(h);
            rep.warnings.insert(rep.warnings.end(), res.warnings.begin(), res.warnings.end());
            io::write_json_file(out_path("normalized.json"),
                                io::hamiltonian_to_json(res.hamiltonian));
            rep.outputs["file"] = "normalized.json";
            rep.outputs["total_length"] = res.hamiltonian.total_length();
            // idempotence residual
            NormalizeResult twice = normalize_trace(res.hamiltonian);
            rep.check("normalize_idempotence",
                      std::abs(twice.hamiltonian.total_length() - res.hamiltonian.total_length()),
                      1e-10);
        } else if (*red_schr) {
            rep.note_input(schr_q);
            const json j = io::load_json_file(schr_q);
            const auto samples = j.at("samples").get<std::vector<double>>();
            SchrodingerReduction red = schrodinger_to_canonical(samples, schr_h, schr_grid);
            io::write_json_file(out_path("hamiltonian.json"),
                                io::hamiltonian_to_json(red.hamiltonian));
            rep.outputs["file"] = "hamiltonian.json";
            rep.outputs["boundary"] = {{"y1", red.boundary.y1},
                                       {"dy1", red.boundary.dy1},
                                       {"y2", red.boundary.y2},
                                       {"dy2", red.boundary.dy2}};
            rep.check("wronskian_drift", red.wronskian_drift, 1e-6);
        } else if (*red_dirac) {
            rep.note_input(dirac_q);
            const json j = io::load_json_file(dirac_q);
            std::vector<std::array<double, 4>> mats;
            for (const json& m : j.at("matrices"))
                mats.push_back({m[0].get<double>(), m[1].get<double>(), m[2].get<double>(),
                                m[3].get<double>()});
            DiracReduction red = dirac_to_canonical(mats, dirac_grid);
            io::write_json_file(out_path("hamiltonian.json"),
                                io::hamiltonian_to_json(red.hamiltonian));
            rep.outputs["file"] = "hamiltonian.json";
            rep.check("det_drift", red.det_drift, 1e-6);
        } else if (*red_string) {
            rep.note_input(string_rho);
            const json j = io::load_json_file(string_rho);
            NormalizeResult res;
            if (j.contains("pieces")) {
                std::vector<StringPiece> pieces;
                for (const json& p : j.at("pieces"))
                    pieces.push_back({p.at("length").get<double>(), p.at("rho").get<double>()});
                res = string_to_canonical(pieces);
            } else {
                res = string_to_canonical(j.at("samples").get<std::vector<double>>(),
                                          j.value("length", 1.0));
            }
            io::write_json_file(out_path("hamiltonian.json"),
                                io::hamiltonian_to_json(res.hamiltonian));
            rep.outputs["file"] = "hamiltonian.json";
            rep.outputs["note"] =
                "spectral parameter of the produced system is sqrt(lambda) of the string";
        } else if (*jac_to) {
            rep.note_input(jac_h);
            const Hamiltonian h = io::hamiltonian_from_json(io::load_json_file(jac_h));
            const RankOneChain chain = RankOneChain::from_hamiltonian(h);
            const JacobiMatrix jm = hamiltonian_to_jacobi(chain);
            io::write_json_file(out_path("jacobi.json"), io::jacobi_to_json(jm));
            rep.outputs["file"] = "jacobi.json";
        } else if (*jac_from) {
            rep.note_input(jac_jm);
            const JacobiMatrix jm = io::jacobi_from_json(io::load_json_file(jac_jm));
            const RankOneChain chain = jacobi_to_hamiltonian(jm, jac_e1, jac_d1);
            io::write_json_file(out_path("hamiltonian.json"),
                                io::hamiltonian_to_json(chain.to_hamiltonian()));
            rep.outputs["file"] = "hamiltonian.json";
            // roundtrip residual
            const JacobiMatrix back = hamiltonian_to_jacobi(chain);
            double worst = 0.0;
            for (size_t i = 0; i < jm.rho.size() && i < back.rho.size(); ++i)
                worst = std::max(worst, std::abs(back.rho[i] - jm.rho[i]));
            const size_t nq = std::min(jm.rho.size(), jm.q.size());
            for (size_t i = 0; i < nq; ++i)
                worst = std::max(worst, std::abs(back.q[i] - jm.q[i]));
            rep.check("jacobi_roundtrip", worst, 1e-8);
        } else if (*dir_mono) {
            rep.note_input(dm_h);
            const Hamiltonian h = io::hamiltonian_from_json(io::load_json_file(dm_h));
            const double x = dm_x < 0.0 ? h.total_length() : dm_x;
            const Mat2 m = monodromy(h, io::parse_complex(dm_z), x);
            rep.outputs["monodromy"] = mat_json(m);
            rep.check("det_minus_1", std::abs(m.det() - cplx(1.0)), 1e-10);
        } else if (*dir_spec) {
            rep.note_input(ds_h);
            const Hamiltonian h = io::hamiltonian_from_json(io::load_json_file(ds_h));
            const std::vector<double> lam = spectrum_alpha(h, ds_alpha, ds_window[0], ds_window[1]);
            json arr = json::array();
            for (double v : lam) arr.push_back(v);
            rep.outputs["eigenvalues"] = arr;
            if (g_format == "csv") {
                std::ostringstream csv;
                csv << "lambda\n";
                for (double v : lam) csv << io::fmt(v) << "\n";
                canon::io::write_text_file(out_path("spectrum.csv"), csv.str());
                rep.outputs["file"] = "spectrum.csv";
            } else {
                io::write_json_file(out_path("spectrum.json"), json{{"eigenvalues", arr}});
                rep.outputs["file"] = "spectrum.json";
            }
        } else if (*dir_meas) {
            rep.note_input(dme_h);
            const Hamiltonian h = io::hamiltonian_from_json(io::load_json_file(dme_h));
            const AtomicMeasure mu =
                spectral_measure_alpha(h, dme_alpha, dme_window[0], dme_window[1]);
            emit_measure(rep, mu, "measure");
        } else if (*db_kernel) {
            rep.note_input(dbk_e);
            const HBPolynomial hb = io::hb_from_json(io::load_json_file(dbk_e));
            const cplx k = reproducing_kernel(hb, io::parse_complex(dbk_lambda),
                                              io::parse_complex(dbk_z));
            rep.outputs["kernel"] = json::array({k.real(), k.imag()});
        } else if (*db_phi) {
            rep.note_input(dbp_e);
            const HBPolynomial hb = io::hb_from_json(io::load_json_file(dbp_e));
            const SecondColumn phi = reconstruct_second_column(hb);
            json j;
            j["phi_plus"] = io::poly_to_json(phi.phi_plus);
            j["phi_minus"] = io::poly_to_json(phi.phi_minus);
            io::write_json_file(out_path("phi.json"), j);
            rep.outputs["file"] = "phi.json";
            const Poly det = hb.theta_plus * phi.phi_minus - hb.theta_minus * phi.phi_plus;
            double dev = std::abs(det.coeff(0) - 1.0);
            for (int k = 1; k <= det.degree(); ++k) dev = std::max(dev, std::abs(det.coeff(k)));
            rep.check("det_theta_phi", dev, 1e-9);
        } else if (*db_len) {
            rep.note_input(dbl_e);
            const HBPolynomial hb = io::hb_from_json(io::load_json_file(dbl_e));
            rep.outputs["length"] = system_length_from_e(hb);
        } else if (*db_type) {
            double exact = std::nan(""), numeric = std::nan("");
            if (!dbt_h.empty()) {
                rep.note_input(dbt_h);
                const Hamiltonian h = io::hamiltonian_from_json(io::load_json_file(dbt_h));
                exact = exact_type(h);
                rep.outputs["exact_type"] = exact;
                if (dbt_numeric) {
                    const double L = h.total_length();
                    numeric = numeric_type(
                        [&](double y) {
                            const ScaledMat2 sm = monodromy_scaled(h, cplx(0.0, y), L);
                            const cplx e = sm.m.m11 + cplx(0, 1) * sm.m.m21;
                            return sm.log_scale + std::log(std::abs(e));
                        },
                        dbt_ymax);
                    rep.outputs["numeric_type"] = numeric;
                }
            }
            if (!dbt_e.empty()) {
                rep.note_input(dbt_e);
                const HBPolynomial hb = io::hb_from_json(io::load_json_file(dbt_e));
                numeric = numeric_type(hb, dbt_ymax);
                rep.outputs["numeric_type"] = numeric;
            }
            if (std::isnan(exact) && std::isnan(numeric))
                throw validation_error("type: need --h or --e");
            if (!std::isnan(exact) && !std::isnan(numeric) && exact > 1e-6)
                rep.check("type_relative_gap", (numeric - exact) / exact, 0.02);
        } else if (*inv_poly) {
            rep.note_input(ip_e);
            const HBPolynomial hb = io::hb_from_json(io::load_json_file(ip_e));
            const Hamiltonian h = solve_polynomial_inverse(hb);
            io::write_json_file(out_path("hamiltonian.json"), io::hamiltonian_to_json(h));
            rep.outputs["file"] = "hamiltonian.json";
            rep.outputs["total_length"] = h.total_length();
            rep.outputs["segments"] = h.segments.size();
            rep.check("length_vs_formula",
                      h.total_length() - system_length_from_e(hb), 1e-7);
        } else if (*inv_meas) {
            rep.note_input(im_atoms);
            const AtomicMeasure mu = io::measure_from_json(io::load_json_file(im_atoms));
            const Hamiltonian h = solve_finite_measure_inverse(mu, im_d1);
            io::write_json_file(out_path("hamiltonian.json"), io::hamiltonian_to_json(h));
            rep.outputs["file"] = "hamiltonian.json";
            rep.outputs["total_length"] = h.total_length();
            // roundtrip residual over the input atoms
            double span = 1.0;
            for (const auto& atom : mu.atoms) span = std::max(span, std::abs(atom.t));
            const AtomicMeasure back =
                spectral_measure_alpha(h, 1.5707963267948966, -span - 1.0, span + 1.0);
            double worst = back.atoms.size() == mu.atoms.size() ? 0.0 : 1.0;
            for (size_t i = 0; worst < 1.0 && i < mu.atoms.size(); ++i) {
                worst = std::max(worst, std::abs(back.atoms[i].t - mu.atoms[i].t));
                worst = std::max(worst,
                                 std::abs(back.atoms[i].w - mu.atoms[i].w) / mu.atoms[i].w);
            }
            rep.check("measure_roundtrip", worst, 1e-6);
        } else if (*inv_reg) {
            rep.note_input(ir_spec);
            const RegularHBSpec spec = io::regular_spec_from_json(io::load_json_file(ir_spec));
            const RegularInverseResult res = regular_inverse(spec, ir_n, ir_grid);
            io::write_json_file(out_path("hamiltonian.json"),
                                io::hamiltonian_to_json(res.hamiltonian));
            json f = json::array();
            for (size_t k = 0; k < res.grid.size(); ++k)
                f.push_back(json{{"x", res.grid[k]}, {"F", sym_json(res.f_values[k])}});
            io::write_json_file(out_path("f_values.json"), f);
            rep.outputs["file"] = "hamiltonian.json";
            rep.outputs["f_file"] = "f_values.json";
            rep.outputs["length"] = res.length;
            rep.outputs["cauchy_increments"] = res.cauchy_increments;
            for (const std::string& d : res.diagnostics) rep.warnings.push_back(d);
        } else if (*w_disk) {
            rep.note_input(wd_h);
            const SemiaxisHamiltonian sh = io::semiaxis_from_json(io::load_json_file(wd_h));
            const WeylDisk d = weyl_disk(sh, wd_x, io::parse_complex(wd_z));
            rep.outputs["center"] = json::array({d.center.real(), d.center.imag()});
            rep.outputs["radius"] = d.radius;
        } else if (*w_m) {
            rep.note_input(wm_h);
            const SemiaxisHamiltonian sh = io::semiaxis_from_json(io::load_json_file(wm_h));
            const std::vector<WeylDisk> trace = m_function_trace(sh, io::parse_complex(wm_z), tol);
            const cplx m = trace.back().center;
            rep.outputs["m"] = json::array({m.real(), m.imag()});
            rep.outputs["disk_radius"] = trace.back().radius;
            std::ostringstream csv;
            csv << "x,center_re,center_im,radius\n";
            for (const WeylDisk& d : trace)
                csv << io::fmt(d.x) << "," << io::fmt(d.center.real()) << ","
                    << io::fmt(d.center.imag()) << "," << io::fmt(d.radius) << "\n";
            io::write_text_file(out_path("disks.csv"), csv.str());
            rep.outputs["file"] = "disks.csv";
            rep.check("m_in_upper_half_plane", std::min(0.0, m.imag()), 0.0);
        } else if (*w_dens) {
            rep.note_input(wde_h);
            const SemiaxisHamiltonian sh = io::semiaxis_from_json(io::load_json_file(wde_h));
            std::vector<double> grid(static_cast<size_t>(wde_n));
            for (int i = 0; i < wde_n; ++i)
                grid[static_cast<size_t>(i)] =
                    wde_window[0] + (wde_window[1] - wde_window[0]) * i / std::max(1, wde_n - 1);
            const std::vector<double> dens = spectral_density(sh, grid, wde_eps);
            std::ostringstream csv;
            csv << "t,density\n";
            for (size_t i = 0; i < grid.size(); ++i)
                csv << io::fmt(grid[i]) << "," << io::fmt(dens[i]) << "\n";
            io::write_text_file(out_path("density.csv"), csv.str());
            rep.outputs["file"] = "density.csv";
        } else if (*w_inv) {
            rep.note_input(wi_measure);
            rep.note_input(wi_schedule);
            const MeasureDescriptor mu =
                io::measure_descriptor_from_json(io::load_json_file(wi_measure));
            const SingularInverseSchedule sched =
                io::schedule_from_json(io::load_json_file(wi_schedule));
            const SingularInverseResult res = inverse_singular(mu, sched);
            io::write_json_file(out_path("hamiltonian.json"),
                                io::hamiltonian_to_json(res.hamiltonian));
            rep.outputs["file"] = "hamiltonian.json";
            rep.outputs["cauchy_increments"] = res.cauchy_increments;
        } else if (app.get_subcommand("selftest")->parsed()) {
            const int code = run_selftest(rep);
            write_report(rep);
            return code;
        }
    } catch (const canon::validation_error& e) {
        rep.failed = true;
        rep.warnings.push_back(std::string("validation: ") + e.what());
        write_report(rep);
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const canon::numeric_error& e) {
        rep.failed = true;
        rep.warnings.push_back(std::string("numeric: ") + e.what());
        write_report(rep);
        std::cerr << "numerical gate failed: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        rep.failed = true;
        rep.warnings.push_back(e.what());
        write_report(rep);
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    write_report(rep);
    return rep.failed ? kExitNumeric : kExitOk;
}
