// Command-line front end: scenario ingestion, experiment orchestration,
// result emission, and the validation harness.
//
// Exit codes: 0 success, 2 infeasible thresholds, 3 solver failure,
// 4 configuration error.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <json.hpp>

#include "cre/region.hpp"

namespace {

using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

double parse_number(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw cre::ConfigError(what + ": cannot parse '" + s + "'");
}

// Energy threshold: Joules per unit time (Watts). Accepts "1e-4", "1e-4J",
// "1e-4W", or "-10dBm".
double parse_energy_threshold(const std::string& raw) {
    const std::string s = lower(raw);
    if (s.size() > 3 && s.substr(s.size() - 3) == "dbm")
        return cre::dbm_to_watts(parse_number(s.substr(0, s.size() - 3), "--gamma-eh"));
    if (!s.empty() && (s.back() == 'j' || s.back() == 'w'))
        return parse_number(s.substr(0, s.size() - 1), "--gamma-eh");
    return parse_number(s, "--gamma-eh");
}

// CRB threshold: rad^2. Accepts "1e-4", "1e-4rad2", "-40dB" (10^(v/10)),
// or "inf" to drop the constraint.
double parse_crb_threshold(const std::string& raw) {
    const std::string s = lower(raw);
    if (s == "inf" || s == "none") return cre::kInf;
    if (s.size() > 4 && s.substr(s.size() - 4) == "rad2")
        return parse_number(s.substr(0, s.size() - 4), "--gamma-s");
    if (s.size() > 2 && s.substr(s.size() - 2) == "db")
        return cre::db_to_linear(parse_number(s.substr(0, s.size() - 2), "--gamma-s"));
    return parse_number(s, "--gamma-s");
}

struct Options {
    std::string command;
    std::string scenario;
    std::string out = ".";
    std::string gamma_eh = "0";
    std::string gamma_s = "inf";
    int grid = 8;
    int samples = 16;
    int workers = 1;
    int trials = 20;
    double tol_dual = 1e-5;
    double ts_step = 0.005;
    bool oracle = false;
    std::uint64_t seed = 1;

    json to_json() const {
        return json{{"command", command},   {"scenario", scenario},
                    {"out", out},           {"gamma_eh", gamma_eh},
                    {"gamma_s", gamma_s},   {"grid", grid},
                    {"samples", samples},   {"workers", workers},
                    {"trials", trials},     {"tol_dual", tol_dual},
                    {"ts_step", ts_step},   {"oracle", oracle},
                    {"seed", seed}};
    }
    static Options from_json(const json& j) {
        Options o;
        o.command = j.at("command").get<std::string>();
        o.scenario = j.at("scenario").get<std::string>();
        o.out = j.at("out").get<std::string>();
        o.gamma_eh = j.at("gamma_eh").get<std::string>();
        o.gamma_s = j.at("gamma_s").get<std::string>();
        o.grid = j.at("grid").get<int>();
        o.samples = j.at("samples").get<int>();
        o.workers = j.at("workers").get<int>();
        o.trials = j.at("trials").get<int>();
        o.tol_dual = j.at("tol_dual").get<double>();
        o.ts_step = j.at("ts_step").get<double>();
        o.oracle = j.at("oracle").get<bool>();
        o.seed = j.at("seed").get<std::uint64_t>();
        return o;
    }
};

std::string out_path(const Options& o, const std::string& name) {
    if (o.out.empty() || o.out == ".") return name;
    return o.out + "/" + name;
}

void write_manifest(const Options& o, double wall_seconds) {
    json m;
    m["tool"] = "cre";
    m["version"] = kToolVersion;
    m["options"] = o.to_json();
    m["wall_clock_seconds"] = wall_seconds;
    std::ofstream f(out_path(o, "manifest.json"));
    f << m.dump(2) << '\n';
}

void write_stub(const std::string& path, const std::string& body) {
    std::ofstream f(path);
    f << "# gnuplot script stub; run: gnuplot <this file>\n"
      << "set datafile separator ','\n"
      << body;
}

cre::P1Options p1_options(const Options& o) {
    cre::P1Options opts;
    opts.tol_dual = o.tol_dual;
    return opts;
}

int cmd_vertices(const Options& o, const cre::ScenarioConfig& cfg,
                 const cre::SensingMatrices& sm) {
    cre::Vertices v = cre::compute_vertices(cfg, sm);
    cre::write_vertices_csv(out_path(o, "vertices.csv"), v);
    cre::write_covariance_csv(out_path(o, "covariance_r_max.csv"), v.r_max.covariance);
    cre::write_covariance_csv(out_path(o, "covariance_e_max.csv"), v.e_max.covariance);
    cre::write_covariance_csv(out_path(o, "covariance_c_min.csv"), v.c_min.covariance);
    if (v.r_max.degenerate_channel)
        std::fprintf(stderr, "warning: ID channel is zero, R-max is degenerate\n");
    return 0;
}

int cmd_solve_p1(const Options& o, const cre::ScenarioConfig& cfg,
                 const cre::SensingMatrices& sm) {
    const double geh = parse_energy_threshold(o.gamma_eh);
    const double gs = parse_crb_threshold(o.gamma_s);
    if (geh < 0.0) throw cre::ConfigError("--gamma-eh must be >= 0");
    if (!(gs > 0.0)) throw cre::ConfigError("--gamma-s must be positive");

    cre::P1Feasibility fz = cre::feasibility_check(cfg, sm, geh, gs);
    if (!fz.feasible()) {
        std::fprintf(stderr, "infeasible: %s\n", fz.reason());
        return 2;
    }
    cre::P1Solution sol = cre::solve_p1(cfg, sm, geh, gs, p1_options(o));

    double oracle_rate = std::numeric_limits<double>::quiet_NaN();
    if (o.oracle) {
        const cre::Normalized nz = cre::Normalized::build(cfg, sm);
        std::optional<double> g1;
        if (std::isfinite(gs)) g1 = gs / nz.crb_scale;
        std::optional<double> ge;
        if (geh > 0.0) ge = geh / nz.e_scale;
        cre::FrankWolfeResult fw = cre::frank_wolfe_rate_max(nz, ge, g1);
        oracle_rate = fw.rate;
        std::printf("oracle rate %.9f, solver rate %.9f, |diff| %.3e\n",
                    fw.rate, sol.rate, std::abs(fw.rate - sol.rate));
    }

    std::ofstream f(out_path(o, "p1_solution.csv"));
    f << "gamma_eh,gamma_s,crb,crb_db,rate,energy,duality_gap,iterations,"
         "used_completion,oracle_rate\n"
      << "W,rad^2,rad^2,dB,bps/Hz,W,bps/Hz,,,bps/Hz\n"
      << cre::detail::fmt(geh) << ',' << cre::detail::fmt(gs) << ','
      << cre::detail::fmt(sol.point.crb) << ',' << cre::detail::crb_db(sol.point.crb)
      << ',' << cre::detail::fmt(sol.point.rate) << ','
      << cre::detail::fmt(sol.point.energy) << ','
      << cre::detail::fmt(sol.duality_gap) << ',' << sol.iterations << ','
      << (sol.used_completion ? 1 : 0) << ','
      << (o.oracle ? cre::detail::fmt(oracle_rate) : "") << '\n';
    cre::write_covariance_csv(out_path(o, "covariance_p1.csv"), sol.s_opt);
    std::printf("rate %.9f bps/Hz, energy %.6e W, crb %.6e rad^2, gap %.3e\n",
                sol.point.rate, sol.point.energy, sol.point.crb, sol.duality_gap);
    return 0;
}

int cmd_edges(const Options& o, const cre::ScenarioConfig& cfg,
              const cre::SensingMatrices& sm) {
    cre::Vertices v = cre::compute_vertices(cfg, sm);
    cre::Edges e = cre::compute_edges(cfg, sm, v, o.samples, p1_options(o), o.workers);
    cre::write_vertices_csv(out_path(o, "vertices.csv"), v);
    cre::write_edge_csv(out_path(o, "edge_cr.csv"), e.cr, "gamma_s", "rad^2");
    cre::write_edge_csv(out_path(o, "edge_re.csv"), e.re, "gamma_eh", "W");
    cre::write_edge_csv(out_path(o, "edge_ce.csv"), e.ce, "gamma_s", "rad^2");
    write_stub(out_path(o, "edges.gp"),
               "set xlabel 'CRB (dB)'\nset ylabel 'rate (bps/Hz)'\n"
               "plot 'edge_cr.csv' every ::2 using 3:4 with linespoints title 'C-R',\\\n"
               "     'edge_ce.csv' every ::2 using 3:5 axes x1y2 with linespoints title 'C-E energy'\n");
    return 0;
}

int cmd_surface(const Options& o, const cre::ScenarioConfig& cfg,
                const cre::SensingMatrices& sm) {
    cre::Vertices v = cre::compute_vertices(cfg, sm);
    auto grid = cre::compute_surface(cfg, sm, v, o.grid, o.grid, p1_options(o),
                                     o.workers);
    cre::write_surface_csv(out_path(o, "surface.csv"), grid);
    write_stub(out_path(o, "surface.gp"),
               "set xlabel 'Gamma_EH (W)'\nset ylabel 'Gamma_S (dB)'\n"
               "set zlabel 'rate (bps/Hz)'\n"
               "splot 'surface.csv' every ::2 using 1:3:4 with points title 'rate surface'\n");
    return 0;
}

int cmd_benchmark_ts(const Options& o, const cre::ScenarioConfig& cfg,
                     const cre::SensingMatrices& sm) {
    cre::Vertices v = cre::compute_vertices(cfg, sm);
    cre::TimeSwitching ts(cfg, sm, v);
    auto pts = ts.frontier(o.ts_step);
    cre::write_ts_csv(out_path(o, "ts_frontier.csv"), pts);
    write_stub(out_path(o, "ts.gp"),
               "set xlabel 'energy (W)'\nset ylabel 'rate (bps/Hz)'\n"
               "plot 'ts_frontier.csv' every ::2 using 7:6 with points title 'time switching'\n");
    return 0;
}

// Random Hermitian PSD with trace P, from a deterministic CSCG stream.
cre::cmat random_psd(cre::detail::CscgStream& g, int m, double trace) {
    cre::cmat b(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) b(i, j) = g.next();
    cre::cmat s = cre::symmetrize(b * b.adjoint());
    return s * (trace / cre::real_trace(s));
}

int cmd_validate(const Options& o, const cre::ScenarioConfig& cfg,
                 const cre::SensingMatrices& sm) {
    bool all_ok = true;
    auto report = [&](const char* name, bool ok, double margin, const char* note) {
        std::printf("%-24s %s  (margin %.3e, require %s)\n", name,
                    ok ? "pass" : "FAIL", margin, note);
        all_ok = all_ok && ok;
    };
    cre::detail::CscgStream gen(o.seed);
    const cre::Normalized nz = cre::Normalized::build(cfg, sm);

    // CRB homogeneity: crb(cS) = crb(S)/c.
    {
        double worst = 0.0;
        for (int t = 0; t < o.trials; ++t) {
            const cre::cmat s = random_psd(gen, cfg.tx_antennas, cfg.power_budget);
            const double c = 0.1 + 9.9 * std::norm(gen.next()) / 2.0;
            const double c1 = cre::crb(s, sm, cfg);
            const double c2 = cre::crb(cre::cmat(c * s), sm, cfg);
            if (std::isfinite(c1))
                worst = std::max(worst, std::abs(c2 - c1 / c) / c1);
        }
        report("crb homogeneity", worst <= 1e-9, worst, "<= 1e-9");
    }

    // Duality gap at interior thresholds.
    cre::Vertices v = cre::compute_vertices(cfg, sm);
    const double geh = 0.5 * v.e_max.point.energy;
    const double gs = 4.0 * v.c_min.point.crb;
    {
        cre::P1Solution sol = cre::solve_p1(cfg, sm, geh, gs, p1_options(o));
        const double rel = sol.duality_gap / std::max(1.0, sol.rate);
        report("duality gap", rel <= o.tol_dual, rel, "<= tol_dual");
    }

    // Dual subgradient vs central finite differences at random interior
    // points (nu large enough to keep D positive definite).
    {
        cre::P1Instance inst;
        inst.nz = nz;
        inst.gamma_eh = std::min(geh / nz.e_scale, 1.0 - 1e-7);
        inst.gamma1 = gs / nz.crb_scale;
        double worst = 0.0;
        for (int t = 0; t < o.trials; ++t) {
            cre::DualPoint dp;
            dp.lambda = 0.01 + 0.19 * std::norm(gen.next()) / 2.0;
            cre::cmat r(2, 2);
            r << 0.1 * gen.next(), 0.1 * gen.next(), 0.1 * gen.next(), 0.1 * gen.next();
            const cre::cmat z = cre::symmetrize(r * r.adjoint());
            dp.z1 = std::real(z(0, 0));
            dp.z2r = std::real(z(1, 0));
            dp.z2i = std::imag(z(1, 0));
            dp.z3 = std::real(z(1, 1));
            dp.nu = dp.lambda + dp.z1 + dp.z3 + 2.0 * std::abs(z(1, 0)) + 0.3 +
                    std::norm(gen.next()) / 2.0;
            const cre::DualEvaluation ev = cre::eval_dual(inst, dp);
            const double sg_scale = std::max(1.0, ev.subgradient.cwiseAbs().maxCoeff());
            for (int k = 0; k < 6; ++k) {
                auto vec = dp.canonical();
                const double h = 1e-6 * std::max(1.0, std::abs(vec(k)));
                auto at = [&](double delta) {
                    auto v2 = vec;
                    v2(k) += delta;
                    cre::DualPoint q;
                    q.lambda = v2(0); q.nu = v2(1); q.z1 = v2(2);
                    q.z2r = v2(3); q.z2i = v2(4); q.z3 = v2(5);
                    return cre::eval_dual(inst, q).g;
                };
                const double fd = (at(h) - at(-h)) / (2.0 * h);
                worst = std::max(worst, std::abs(fd - ev.subgradient(k)) / sg_scale);
            }
        }
        report("dual subgradient", worst <= 1e-4, worst, "<= 1e-4");
    }

    // Oracle agreement: Frank-Wolfe on the same instance.
    {
        cre::P1Solution sol = cre::solve_p1(cfg, sm, geh, gs, p1_options(o));
        cre::FrankWolfeResult fw = cre::frank_wolfe_rate_max(
            nz, geh / nz.e_scale, gs / nz.crb_scale);
        const double rel = std::abs(fw.rate - sol.rate) / std::max(1.0, sol.rate);
        report("oracle agreement", rel <= 1e-3, rel, "<= 1e-3");
    }

    return all_ok ? 0 : 1;
}

int dispatch(const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!o.out.empty() && o.out != ".")
        std::filesystem::create_directories(o.out);
    cre::ScenarioConfig cfg = cre::load_scenario(o.scenario);
    cre::SensingMatrices sm = cre::SensingMatrices::build(
        cfg.tx_antennas, cfg.sense_rx_antennas, cfg.target_angle);

    int rc = 0;
    if (o.command == "vertices") rc = cmd_vertices(o, cfg, sm);
    else if (o.command == "solve-p1") rc = cmd_solve_p1(o, cfg, sm);
    else if (o.command == "edges") rc = cmd_edges(o, cfg, sm);
    else if (o.command == "surface") rc = cmd_surface(o, cfg, sm);
    else if (o.command == "benchmark-ts") rc = cmd_benchmark_ts(o, cfg, sm);
    else if (o.command == "validate") rc = cmd_validate(o, cfg, sm);
    else throw cre::ConfigError("unknown command: " + o.command);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(o, wall);
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"C-R-E region and optimal transmit covariance toolkit"};
    app.require_subcommand(0, 1);

    Options o;
    std::string manifest_path;
    app.add_option("--from-manifest", manifest_path,
                   "re-run a previous invocation from its manifest.json");

    auto add_common = [&](CLI::App* sub, bool need_scenario = true) {
        auto* s = sub->add_option("--scenario", o.scenario, "scenario file");
        if (need_scenario) s->required();
        sub->add_option("--out", o.out, "output directory (created if missing)");
        sub->add_option("--workers", o.workers, "worker pool width");
        sub->add_option("--tol-dual", o.tol_dual, "dual tolerance (normalized)");
        sub->add_option("--seed", o.seed, "seed for randomized checks");
    };

    auto* c_vert = app.add_subcommand("vertices", "three Pareto vertices");
    add_common(c_vert);
    auto* c_p1 = app.add_subcommand("solve-p1", "rate maximization under CRB/energy thresholds");
    add_common(c_p1);
    c_p1->add_option("--gamma-eh", o.gamma_eh, "energy threshold (W/J, or dBm suffix)");
    c_p1->add_option("--gamma-s", o.gamma_s, "CRB threshold (rad^2, dB suffix, or inf)");
    c_p1->add_flag("--oracle", o.oracle, "cross-check against the Frank-Wolfe oracle");
    auto* c_edges = app.add_subcommand("edges", "three boundary edges");
    add_common(c_edges);
    c_edges->add_option("--samples", o.samples, "samples per edge");
    auto* c_surf = app.add_subcommand("surface", "rate surface over a threshold grid");
    add_common(c_surf);
    c_surf->add_option("--grid", o.grid, "grid points per axis");
    auto* c_ts = app.add_subcommand("benchmark-ts", "time-switching benchmark frontier");
    add_common(c_ts);
    c_ts->add_option("--step", o.ts_step, "simplex grid step");
    auto* c_val = app.add_subcommand("validate", "invariant suite on a scenario");
    add_common(c_val);
    c_val->add_option("--trials", o.trials, "randomized trials per check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!manifest_path.empty()) {
            std::ifstream f(manifest_path);
            if (!f) throw cre::ConfigError("cannot open manifest: " + manifest_path);
            json m = json::parse(f);
            o = Options::from_json(m.at("options"));
        } else if (app.get_subcommands().size() == 1) {
            o.command = app.get_subcommands()[0]->get_name();
        } else {
            std::fprintf(stderr, "%s\n", app.help().c_str());
            return 4;
        }
        return dispatch(o);
    } catch (const cre::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 4;
    } catch (const cre::ContractViolation& e) {
        std::fprintf(stderr, "contract violation: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 3;
    }
}
