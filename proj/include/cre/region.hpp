#pragma once

// C-R-E region characterization: the three vertices, the three boundary
// edges, the rate surface over a (Gamma_EH, Gamma_S) grid, and the
// time-switching benchmark. Also the LoS scenario family used for the
// correlation study (identical / correlated / orthogonal channels).

#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <thread>

#include "cre/p1.hpp"
#include "cre/scenario.hpp"

namespace cre {

struct EdgeSample {
    double threshold = 0.0;  // Gamma_S (rad^2) or Gamma_EH (W) along the edge
    CrePoint point;
    double duality_gap = 0.0;
    std::string status = "ok";
};

struct Edges {
    std::vector<EdgeSample> cr;  // CRB-constrained rate maximization
    std::vector<EdgeSample> re;  // energy-constrained rate maximization
    std::vector<EdgeSample> ce;  // CRB-constrained energy maximization
};

struct SurfaceSample {
    double gamma_eh = 0.0;
    double gamma_s = 0.0;
    double rate = 0.0;
    double duality_gap = 0.0;
    std::string status = "ok";
};

struct TimeSwitchingPoint {
    double t_id = 0.0, t_eh = 0.0, t_s = 0.0;
    CrePoint point;
    bool dominated = false;
};

namespace detail {

inline std::vector<double> geom_space(double lo, double hi, int n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < n; ++i) v[i] = lo * std::exp(ratio * i / double(n - 1));
    return v;
}

inline std::vector<double> lin_space(double lo, double hi, int n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / double(n - 1);
    return v;
}

// Deterministic worker pool: tasks indexed 0..n-1, results land by index.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, workers);
    if (workers == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

// Upper sweep bound for CRB thresholds; vertex CRBs can be +inf.
inline double crb_sweep_cap(double crb_min, double vertex_crb) {
    if (std::isfinite(vertex_crb) && vertex_crb > crb_min) return vertex_crb;
    return 1e3 * crb_min;
}

}  // namespace detail

inline Edges compute_edges(const ScenarioConfig& cfg, const SensingMatrices& sm,
                           const Vertices& verts, int samples_per_edge,
                           const P1Options& opts = {}, int workers = 1) {
    Edges edges;
    const double crb_min = verts.c_min.point.crb;
    const double e_max = verts.e_max.point.energy;

    // C-R edge: geometric Gamma_S sweep, energy constraint dropped.
    const auto cr_sweep = detail::geom_space(
        crb_min, detail::crb_sweep_cap(crb_min, verts.r_max.point.crb),
        samples_per_edge);
    edges.cr.resize(samples_per_edge);
    detail::parallel_for(samples_per_edge, workers, [&](int i) {
        EdgeSample& s = edges.cr[i];
        s.threshold = cr_sweep[i];
        try {
            P1Solution sol = solve_p1(cfg, sm, 0.0, s.threshold, opts);
            s.point = sol.point;
            s.duality_gap = sol.duality_gap;
        } catch (const std::exception&) {
            s.status = "failed";
        }
    });

    // R-E edge: linear Gamma_EH sweep, CRB constraint dropped.
    const auto re_sweep =
        detail::lin_space(verts.r_max.point.energy, e_max, samples_per_edge);
    edges.re.resize(samples_per_edge);
    detail::parallel_for(samples_per_edge, workers, [&](int i) {
        EdgeSample& s = edges.re[i];
        s.threshold = re_sweep[i];
        try {
            P1Solution sol = solve_p1(cfg, sm, s.threshold, kInf, opts);
            s.point = sol.point;
            s.duality_gap = sol.duality_gap;
        } catch (const std::exception&) {
            s.status = "failed";
        }
    });

    // C-E edge: conic solves, geometric Gamma_S sweep.
    const auto ce_sweep = detail::geom_space(
        crb_min, detail::crb_sweep_cap(crb_min, verts.e_max.point.crb),
        samples_per_edge);
    edges.ce.resize(samples_per_edge);
    detail::parallel_for(samples_per_edge, workers, [&](int i) {
        EdgeSample& s = edges.ce[i];
        s.threshold = ce_sweep[i];
        try {
            CeEdgeResult r = solve_ce_edge(cfg, sm, s.threshold, opts.sdp);
            if (r.feasible)
                s.point = r.point;
            else
                s.status = "infeasible";
        } catch (const std::exception&) {
            s.status = "failed";
        }
    });
    return edges;
}

inline std::vector<SurfaceSample> compute_surface(
    const ScenarioConfig& cfg, const SensingMatrices& sm, const Vertices& verts,
    int grid_eh, int grid_s, const P1Options& opts = {}, int workers = 1) {
    const double crb_min = verts.c_min.point.crb;
    const double crb_hi = std::max(
        detail::crb_sweep_cap(crb_min, verts.r_max.point.crb),
        detail::crb_sweep_cap(crb_min, verts.e_max.point.crb));
    const double e_lo =
        std::min(verts.r_max.point.energy, verts.c_min.point.energy);
    const auto eh_sweep = detail::lin_space(e_lo, verts.e_max.point.energy, grid_eh);
    const auto s_sweep = detail::geom_space(crb_min, crb_hi, grid_s);

    std::vector<SurfaceSample> grid(static_cast<size_t>(grid_eh) * grid_s);
    detail::parallel_for(static_cast<int>(grid.size()), workers, [&](int idx) {
        SurfaceSample& g = grid[idx];
        g.gamma_eh = eh_sweep[idx / grid_s];
        g.gamma_s = s_sweep[idx % grid_s];
        try {
            if (!feasibility_check(cfg, sm, g.gamma_eh, g.gamma_s, opts.sdp)
                     .feasible()) {
                g.status = "infeasible";
                return;
            }
            P1Solution sol = solve_p1(cfg, sm, g.gamma_eh, g.gamma_s, opts);
            g.rate = sol.rate;
            g.duality_gap = sol.duality_gap;
        } catch (const std::exception&) {
            g.status = "failed";
        }
    });
    return grid;
}

// ---------------------------------------------------------------------------
// Time-switching benchmark: the frame is split into three portions using
// the single-function covariances. Rate only accrues during the ID portion;
// energy accrues in all three; the CRB is that of the time-weighted
// combined covariance. All metrics are affine in the weights through the
// per-vertex trace triples, so simplex evaluation is O(1) per point.

class TimeSwitching {
public:
    TimeSwitching(const ScenarioConfig& cfg, const SensingMatrices& sm,
                  const Vertices& verts)
        : prefactor_(cfg.crb_prefactor()), rate_id_(verts.r_max.point.rate) {
        const cmat* covs[3] = {&verts.r_max.covariance, &verts.e_max.covariance,
                               &verts.c_min.covariance};
        for (int v = 0; v < 3; ++v) {
            t_dd_[v] = std::real(trace_prod(sm.gram_dd, *covs[v]));
            t_aa_[v] = std::real(trace_prod(sm.gram_aa, *covs[v]));
            t_da_[v] = trace_prod(cmat(sm.cross_da), *covs[v]);
            energy_[v] = energy(*covs[v], cfg);
        }
    }

    CrePoint at(double t_id, double t_eh, double t_s) const {
        const double w[3] = {t_id, t_eh, t_s};
        double aa = 0.0, dd = 0.0, e = 0.0;
        cplx da = 0.0;
        for (int v = 0; v < 3; ++v) {
            aa += w[v] * t_aa_[v];
            dd += w[v] * t_dd_[v];
            da += w[v] * t_da_[v];
            e += w[v] * energy_[v];
        }
        const double den = dd * aa - std::norm(da);
        const double scale = std::max(dd * aa, std::norm(da));
        CrePoint p;
        p.crb = (den <= eps_fim * scale || scale == 0.0) ? kInf
                                                         : prefactor_ * aa / den;
        p.rate = t_id * rate_id_;
        p.energy = e;
        return p;
    }

    std::vector<TimeSwitchingPoint> frontier(double step) const {
        const int n = std::max(1, static_cast<int>(std::llround(1.0 / step)));
        std::vector<TimeSwitchingPoint> pts;
        pts.reserve(static_cast<size_t>(n + 1) * (n + 2) / 2);
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n - i; ++j) {
                TimeSwitchingPoint p;
                p.t_id = double(i) / n;
                p.t_eh = double(j) / n;
                p.t_s = double(n - i - j) / n;
                p.point = at(p.t_id, p.t_eh, p.t_s);
                pts.push_back(p);
            }
        mark_dominated(pts);
        return pts;
    }

    // Best feasible time-switching rate under the two thresholds: simplex
    // grid search plus one local refinement pass at step/10.
    double best_rate(double gamma_eh, double gamma_s, double step = 0.005) const {
        const int n = std::max(1, static_cast<int>(std::llround(1.0 / step)));
        double best = -kInf;
        double bi = 0.0, bj = 0.0;
        auto consider = [&](double t_id, double t_eh) {
            const double t_s = 1.0 - t_id - t_eh;
            if (t_id < -1e-12 || t_eh < -1e-12 || t_s < -1e-12) return;
            CrePoint p = at(t_id, t_eh, std::max(t_s, 0.0));
            if (p.energy >= gamma_eh * (1.0 - 1e-12) &&
                p.crb <= gamma_s * (1.0 + 1e-12) && p.rate > best) {
                best = p.rate;
                bi = t_id;
                bj = t_eh;
            }
        };
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n - i; ++j)
                consider(double(i) / n, double(j) / n);
        if (std::isfinite(best)) {
            const double fine = 0.1 / n;
            for (int di = -10; di <= 10; ++di)
                for (int dj = -10; dj <= 10; ++dj)
                    consider(bi + di * fine, bj + dj * fine);
        }
        return best;
    }

private:
    static void mark_dominated(std::vector<TimeSwitchingPoint>& pts) {
        // Dominance in (-CRB, rate, energy).
        for (auto& p : pts) {
            for (const auto& q : pts) {
                if (&p == &q) continue;
                const bool geq = q.point.crb <= p.point.crb &&
                                 q.point.rate >= p.point.rate &&
                                 q.point.energy >= p.point.energy;
                const bool strict = q.point.crb < p.point.crb ||
                                    q.point.rate > p.point.rate ||
                                    q.point.energy > p.point.energy;
                if (geq && strict) {
                    p.dominated = true;
                    break;
                }
            }
        }
    }

    double prefactor_;
    double rate_id_;
    double t_dd_[3], t_aa_[3], energy_[3];
    cplx t_da_[3];
};

// ---------------------------------------------------------------------------
// LoS correlation family: target at broadside, single-row ID/EH channels at
// angles with sin(theta_ID) = 2 gamma / M and sin(theta_EH) = 4 gamma / M.
// gamma = 0 makes all three channels identical, gamma = 1 mutually
// orthogonal.

inline ScenarioConfig build_fig3_scenario(double gamma,
                                          const ScenarioConfig& base,
                                          double loss_id_db = 120.0,
                                          double loss_eh_db = 60.0) {
    const int m = base.tx_antennas;
    if (gamma < 0.0 || gamma > 1.0 || 4.0 * gamma / m > 1.0)
        throw ConfigError("build_fig3_scenario: gamma out of domain");
    ScenarioConfig cfg = base;
    cfg.target_angle = 0.0;
    cfg.id_rx_antennas = 1;
    cfg.eh_rx_antennas = 1;
    const double theta_id = std::asin(2.0 * gamma / m);
    const double theta_eh = std::asin(4.0 * gamma / m);
    cfg.h_id = std::pow(10.0, -loss_id_db / 20.0) *
               steering(m, theta_id).transpose();
    cfg.h_eh = std::pow(10.0, -loss_eh_db / 20.0) *
               steering(m, theta_eh).transpose();
    cfg.validate();
    return cfg;
}

// Baseline simulation setup: M=10, N_S=16 ULA, alpha=1e-8, L=256,
// -80 dBm noise. Channels are left empty; callers fill them.
inline ScenarioConfig default_base(double power_dbm = 50.0) {
    ScenarioConfig cfg;
    cfg.tx_antennas = 10;
    cfg.sense_rx_antennas = 16;
    cfg.id_rx_antennas = 1;
    cfg.eh_rx_antennas = 1;
    cfg.target_angle = M_PI / 3.0;
    cfg.reflection = 1e-8;
    cfg.frame_length = 256;
    cfg.power_budget = dbm_to_watts(power_dbm);
    cfg.sigma2_sense = dbm_to_watts(-80.0);
    cfg.sigma2_id = dbm_to_watts(-80.0);
    cfg.h_id = cmat::Zero(1, 10);
    cfg.h_eh = cmat::Zero(1, 10);
    return cfg;
}

// ---------------------------------------------------------------------------
// CSV emission. Formatting is fixed (%.17g) so identical runs are
// bit-identical. Each file carries a units row under the header.

namespace detail {

inline std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string crb_db(double crb) {
    if (!std::isfinite(crb)) return "inf";
    return fmt(10.0 * std::log10(crb));
}

}  // namespace detail

inline void write_vertices_csv(const std::string& path, const Vertices& v) {
    std::ofstream f(path);
    f << "label,crb,crb_db,rate,energy\n,rad^2,dB,bps/Hz,W\n";
    auto row = [&](const char* label, const CrePoint& p) {
        f << label << ',' << detail::fmt(p.crb) << ',' << detail::crb_db(p.crb)
          << ',' << detail::fmt(p.rate) << ',' << detail::fmt(p.energy) << '\n';
    };
    row("r_max", v.r_max.point);
    row("e_max", v.e_max.point);
    row("c_min", v.c_min.point);
}

inline void write_edge_csv(const std::string& path,
                           const std::vector<EdgeSample>& edge,
                           const char* threshold_name,
                           const char* threshold_unit) {
    std::ofstream f(path);
    f << threshold_name << ",crb,crb_db,rate,energy,duality_gap,status\n"
      << threshold_unit << ",rad^2,dB,bps/Hz,W,bps/Hz,\n";
    for (const auto& s : edge)
        f << detail::fmt(s.threshold) << ',' << detail::fmt(s.point.crb) << ','
          << detail::crb_db(s.point.crb) << ',' << detail::fmt(s.point.rate)
          << ',' << detail::fmt(s.point.energy) << ','
          << detail::fmt(s.duality_gap) << ',' << s.status << '\n';
}

inline void write_surface_csv(const std::string& path,
                              const std::vector<SurfaceSample>& grid) {
    std::ofstream f(path);
    f << "gamma_eh,gamma_s,gamma_s_db,rate,duality_gap,status\n"
      << "W,rad^2,dB,bps/Hz,bps/Hz,\n";
    for (const auto& g : grid)
        f << detail::fmt(g.gamma_eh) << ',' << detail::fmt(g.gamma_s) << ','
          << detail::crb_db(g.gamma_s) << ',' << detail::fmt(g.rate) << ','
          << detail::fmt(g.duality_gap) << ',' << g.status << '\n';
}

inline void write_ts_csv(const std::string& path,
                         const std::vector<TimeSwitchingPoint>& pts) {
    std::ofstream f(path);
    f << "t_id,t_eh,t_s,crb,crb_db,rate,energy,dominated\n"
      << ",,,rad^2,dB,bps/Hz,W,\n";
    for (const auto& p : pts)
        f << detail::fmt(p.t_id) << ',' << detail::fmt(p.t_eh) << ','
          << detail::fmt(p.t_s) << ',' << detail::fmt(p.point.crb) << ','
          << detail::crb_db(p.point.crb) << ',' << detail::fmt(p.point.rate)
          << ',' << detail::fmt(p.point.energy) << ','
          << (p.dominated ? 1 : 0) << '\n';
}

inline void write_covariance_csv(const std::string& path, const cmat& s) {
    std::ofstream f(path);
    f << "# M x M transmit covariance, Watts; entries re,im\n";
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            if (j) f << ' ';
            f << detail::fmt(std::real(s(i, j))) << ','
              << detail::fmt(std::imag(s(i, j)));
        }
        f << '\n';
    }
}

}  // namespace cre
