#pragma once

// The three Pareto vertices of the C-R-E region: rate maximization
// (eigenmode transmission + water-filling), energy maximization (strongest
// eigenmode), and CRB minimization (closed form for N_S > M, conic solve
// otherwise).

#include "cre/sdp.hpp"

namespace cre {

struct Vertex {
    cmat covariance;  // M x M, Watts
    CrePoint point;
    bool degenerate_channel = false;
};

struct Vertices {
    Vertex r_max;
    Vertex e_max;
    Vertex c_min;
};

// Exact water-filling over channel gains g_k (rate term log2(1 + g_k p_k)):
// p_k = (mu - 1/g_k)^+ with the water level found by the sorted-gain
// algorithm, no bisection.
inline rvec water_fill(const rvec& gains, double budget) {
    const Eigen::Index n = gains.size();
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return gains(a) > gains(b); });
    const double cutoff = n ? eps_rank * std::max(gains(order[0]), 0.0) : 0.0;
    Eigen::Index active = 0;
    while (active < n && gains(order[active]) > cutoff) ++active;

    rvec p = rvec::Zero(n);
    if (active == 0 || budget <= 0.0) return p;
    double inv_sum = 0.0;
    double mu = 0.0;
    Eigen::Index used = 0;
    for (Eigen::Index k = 0; k < active; ++k) {
        inv_sum += 1.0 / gains(order[k]);
        const double level = (budget + inv_sum) / double(k + 1);
        if (level > 1.0 / gains(order[k])) {
            mu = level;
            used = k + 1;
        }
    }
    for (Eigen::Index k = 0; k < used; ++k)
        p(order[k]) = mu - 1.0 / gains(order[k]);
    return p;
}

inline Vertex r_max(const ScenarioConfig& cfg, const SensingMatrices& sm) {
    Vertex v;
    const int m = cfg.tx_antennas;
    if (cfg.h_id.cwiseAbs().maxCoeff() == 0.0) {
        v.covariance = cmat::Zero(m, m);
        v.point = evaluate(v.covariance, sm, cfg);
        v.degenerate_channel = true;
        return v;
    }
    Svd svd = complex_svd(cfg.h_id);
    const Eigen::Index k = std::min<Eigen::Index>(cfg.h_id.rows(), m);
    rvec gains(k);
    for (Eigen::Index i = 0; i < k; ++i)
        gains(i) = svd.singular_values(i) * svd.singular_values(i) / cfg.sigma2_id;
    rvec p = water_fill(gains, cfg.power_budget);
    v.covariance = cmat::Zero(m, m);
    for (Eigen::Index i = 0; i < k; ++i)
        v.covariance += p(i) * svd.v.col(i) * svd.v.col(i).adjoint();
    v.covariance = symmetrize(v.covariance);
    v.point = evaluate(v.covariance, sm, cfg);
    return v;
}

inline Vertex e_max(const ScenarioConfig& cfg, const SensingMatrices& sm) {
    if (cfg.h_eh.cwiseAbs().maxCoeff() == 0.0)
        throw ConfigError("e_max: EH channel is zero");
    Svd svd = complex_svd(cfg.h_eh);
    const cvec v_max = svd.v.col(0);
    Vertex v;
    // tr(S) = P (not sqrt(P)): the budget convention tr(S) <= P fixes the
    // rank-one scale.
    v.covariance = symmetrize(cfg.power_budget * v_max * v_max.adjoint());
    v.point = evaluate(v.covariance, sm, cfg);
    return v;
}

inline Vertex c_min(const ScenarioConfig& cfg, const SensingMatrices& sm,
                    const SdpOptions& sdp_opts = {}) {
    Vertex v;
    const int m = cfg.tx_antennas;
    if (cfg.sense_rx_antennas > m) {
        const cvec at = steering(m, cfg.target_angle);
        v.covariance = symmetrize((cfg.power_budget / m) * at.conjugate() *
                                  at.transpose());
    } else {
        const Normalized nz = Normalized::build(cfg, sm);
        cmat s = solve_c_min_sdp(nz, sdp_opts);
        // The conic solve meets the trace cap only to solver tolerance.
        const double tr = real_trace(s);
        if (tr > 1.0) s /= tr;
        // The Schur-level optimum may put all power in the derivative
        // subspace, leaving the reflection coefficient unidentifiable and
        // the raw CRB infinite. Blend in a sliver of steering power: the
        // CRB of the blend converges to the Schur limit as the sliver
        // shrinks, so the cost is O(blend).
        const double t_aa = std::real(trace_prod(nz.b_aa, s));
        if (t_aa <= 1e-6 * spectral_norm(nz.b_aa)) {
            const double blend = 1e-6;
            const cvec at = steering(m, cfg.target_angle);
            const cmat s_aa =
                symmetrize((1.0 / m) * at.conjugate() * at.transpose());
            s = symmetrize((1.0 - blend) * s + blend * s_aa);
        }
        v.covariance = cfg.power_budget * s;
    }
    v.point = evaluate(v.covariance, sm, cfg);
    return v;
}

inline Vertices compute_vertices(const ScenarioConfig& cfg,
                                 const SensingMatrices& sm,
                                 const SdpOptions& sdp_opts = {}) {
    return Vertices{r_max(cfg, sm), e_max(cfg, sm), c_min(cfg, sm, sdp_opts)};
}

}  // namespace cre
