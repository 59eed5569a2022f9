#pragma once

// Optimal solver for the CRB-and-energy-constrained rate maximization
// problem (P1) via Lagrangian duality: the dual function is evaluated in
// semi-closed form (EVD of the composite channel D, SVD, water-filling-like
// allocation), the dual is minimized by the ellipsoid method with analytic
// subgradients, and the primal covariance is recovered from the optimal
// dual point (with a conic feasibility completion when D is rank-deficient).
//
// All internal quantities are in the normalized system of model.hpp
// (sigma_ID^2 = 1, trace budget 1, unit-norm EH/Fisher forms); public entry
// points take and return physical units.

#include <vector>

#include "cre/sdp.hpp"
#include "cre/vertices.hpp"

namespace cre {

// Dual variables of (D1). Canonical real embedding:
// (lambda, nu, z1, Re z2, Im z2, z3).
struct DualPoint {
    double lambda = 0.0;
    double nu = 0.0;
    double z1 = 0.0;
    double z2r = 0.0;
    double z2i = 0.0;
    double z3 = 0.0;

    using Vec6 = Eigen::Matrix<double, 6, 1>;
    Vec6 canonical() const {
        Vec6 v;
        v << lambda, nu, z1, z2r, z2i, z3;
        return v;
    }
};

struct P1Options {
    double tol_dual = 1e-5;
    int max_iter = 20000;
    double radius_scale = 1e3;
    double nu0 = 0.0;  // 0: derive from the channel scale
    bool record_trace = false;
    SdpOptions sdp;
};

struct IterateRecord {
    int iter = 0;
    char cut = '?';  // 'l','n','Z','D','R','g'
    double g = std::numeric_limits<double>::quiet_NaN();
    double uncertainty = kInf;
};

// One instance of (P1) in normalized units. A missing gamma1 drops the CRB
// constraint and the whole Z block; gamma_eh = 0 (or missing) drops lambda.
struct P1Instance {
    Normalized nz;
    double gamma_eh = 0.0;            // normalized, in [0, 1]
    double gamma1 = kInf;             // normalized Fisher threshold; inf drops CRB
    bool has_lambda() const { return gamma_eh > 0.0; }
    bool has_z() const { return std::isfinite(gamma1); }
    int dual_dim() const { return 1 + (has_lambda() ? 1 : 0) + (has_z() ? 4 : 0); }
};

struct DualEvaluation {
    double g = kInf;
    cmat d;
    cmat s_star;  // normalized covariance, S10 = S00 = 0 blocks
    DualPoint::Vec6 subgradient = DualPoint::Vec6::Zero();
    int rank_d = 0;
};

inline cmat dual_composite(const P1Instance& p, const DualPoint& dp) {
    const cplx z2(dp.z2r, dp.z2i);
    cmat d = dp.nu * cmat::Identity(p.nz.m, p.nz.m);
    if (p.has_lambda()) d -= dp.lambda * p.nz.w;
    if (p.has_z()) {
        d -= dp.z1 * p.nz.b_dd + dp.z3 * p.nz.b_aa;
        d -= z2 * p.nz.b_da + std::conj(z2) * p.nz.b_da.adjoint();
    }
    return symmetrize(d);
}

// Dual-function evaluation at a point with D >= 0 and the range condition
// holding (the ellipsoid loop cuts every other point before calling this).
inline DualEvaluation eval_dual(const P1Instance& p, const DualPoint& dp) {
    DualEvaluation ev;
    ev.d = dual_composite(p, dp);
    HermEig de = herm_eig(ev.d);
    const double top = std::max(de.values(0), 0.0);
    const double cutoff = std::max(eps_rank * top, 1e-300);
    if (de.values(p.nz.m - 1) < -std::max(cutoff, 1e-12))
        throw SolverFailure("eval_dual: D indefinite (unbounded dual point)");
    int r_p = 0;
    while (r_p < p.nz.m && de.values(r_p) > cutoff) ++r_p;
    ev.rank_d = r_p;

    const cmat q_nn = de.vectors.leftCols(r_p);
    cmat s11 = cmat::Zero(r_p, r_p);
    if (r_p > 0 && p.nz.g.cwiseAbs().maxCoeff() > 0.0) {
        rvec inv_sqrt(r_p);
        for (int i = 0; i < r_p; ++i) inv_sqrt(i) = 1.0 / std::sqrt(de.values(i));
        const cmat b = p.nz.g * q_nn * inv_sqrt.asDiagonal();
        Svd svd = complex_svd(b);
        const Eigen::Index kk = std::min<Eigen::Index>(b.rows(), r_p);
        rvec alloc = rvec::Zero(r_p);
        for (Eigen::Index k = 0; k < kk; ++k) {
            const double lam2 = svd.singular_values(k) * svd.singular_values(k);
            if (lam2 > 0.0)
                alloc(k) = std::max(1.0 / std::log(2.0) - 1.0 / lam2, 0.0);
        }
        s11 = inv_sqrt.asDiagonal() * svd.v * alloc.asDiagonal() *
              svd.v.adjoint() * inv_sqrt.asDiagonal();
    }
    ev.s_star = symmetrize(q_nn * s11 * q_nn.adjoint());

    double g = p.nz.rate_of(ev.s_star) -
               std::real(trace_prod(ev.d, ev.s_star)) + dp.nu;
    if (p.has_lambda()) g -= dp.lambda * p.gamma_eh;
    if (p.has_z()) g -= dp.z1 / p.gamma1;
    ev.g = g;

    DualPoint::Vec6& sg = ev.subgradient;
    sg(0) = std::real(trace_prod(p.nz.w, ev.s_star)) - p.gamma_eh;
    sg(1) = 1.0 - real_trace(ev.s_star);
    if (p.has_z()) {
        const cplx c = trace_prod(p.nz.b_da, ev.s_star);
        sg(2) = std::real(trace_prod(p.nz.b_dd, ev.s_star)) - 1.0 / p.gamma1;
        sg(3) = 2.0 * std::real(c);
        sg(4) = -2.0 * std::imag(c);
        sg(5) = std::real(trace_prod(p.nz.b_aa, ev.s_star));
    }
    return ev;
}

namespace detail {

// Packing between the canonical 6-vector and the active dual subspace.
struct DualEmbedding {
    bool has_lambda = false;
    bool has_z = false;
    int dim = 0;

    explicit DualEmbedding(const P1Instance& p)
        : has_lambda(p.has_lambda()), has_z(p.has_z()), dim(p.dual_dim()) {}

    rvec pack(const DualPoint::Vec6& v) const {
        rvec x(dim);
        int k = 0;
        if (has_lambda) x(k++) = v(0);
        x(k++) = v(1);
        if (has_z)
            for (int i = 2; i < 6; ++i) x(k++) = v(i);
        return x;
    }
    DualPoint unpack(const rvec& x) const {
        DualPoint dp;
        int k = 0;
        if (has_lambda) dp.lambda = x(k++);
        dp.nu = x(k++);
        if (has_z) {
            dp.z1 = x(k++);
            dp.z2r = x(k++);
            dp.z2i = x(k++);
            dp.z3 = x(k++);
        }
        return dp;
    }
};

}  // namespace detail

struct EllipsoidOutcome {
    DualPoint best;
    double g_best = kInf;
    int iterations = 0;
    bool converged = false;
    std::vector<IterateRecord> trace;
};

struct EllipsoidFailure : SolverFailure {
    EllipsoidFailure(const std::string& msg, EllipsoidOutcome best)
        : SolverFailure(msg), outcome(std::move(best)) {}
    EllipsoidOutcome outcome;
};

// Minimize g over {lambda >= 0, nu >= 0, Z >= 0, D >= 0, range condition}
// with neutral (central) cuts.
inline EllipsoidOutcome ellipsoid_solve(const P1Instance& p,
                                        const P1Options& opts = {}) {
    const detail::DualEmbedding emb(p);
    const int n = emb.dim;

    double nu0 = opts.nu0;
    if (nu0 <= 0.0) {
        const cmat gram = symmetrize(p.nz.g.adjoint() * p.nz.g);
        nu0 = std::max(1.0, spectral_norm(gram) / std::log(2.0));
    }
    DualPoint::Vec6 center6 = DualPoint::Vec6::Zero();
    center6(1) = nu0;
    rvec x = emb.pack(center6);
    const double radius = opts.radius_scale * std::max(1.0, nu0);
    rmat shape = radius * radius * rmat::Identity(n, n);

    EllipsoidOutcome out;
    double rate_at_best = -kInf;
    double viol_at_best = kInf;

    auto apply_cut = [&](const rvec& h) {
        const double hEh = h.dot(shape * h);
        if (hEh <= 0.0) return false;  // ellipsoid collapsed along h
        const rvec eg = shape * h / std::sqrt(hEh);
        if (n == 1) {
            // interval bisection
            const double r = std::sqrt(shape(0, 0));
            x(0) -= (h(0) > 0 ? 0.5 : -0.5) * r;
            shape(0, 0) = 0.25 * shape(0, 0);
            return true;
        }
        x -= eg / (n + 1.0);
        shape = (double(n) * n / (double(n) * n - 1.0)) *
                (shape - (2.0 / (n + 1.0)) * eg * eg.transpose());
        shape = 0.5 * (shape + shape.transpose());
        return true;
    };

    auto record = [&](int it, char cut, double g, double unc) {
        if (opts.record_trace)
            out.trace.push_back(IterateRecord{it, cut, g, unc});
    };

    const double g_norm_max = p.nz.g.cwiseAbs().maxCoeff();
    for (int it = 1; it <= opts.max_iter; ++it) {
        out.iterations = it;
        const DualPoint dp = emb.unpack(x);

        rvec h;
        char cut_type = 'g';
        if (emb.has_lambda && dp.lambda < 0.0) {
            DualPoint::Vec6 c6 = DualPoint::Vec6::Zero();
            c6(0) = -1.0;
            h = emb.pack(c6);
            cut_type = 'l';
        } else if (dp.nu < 0.0) {
            DualPoint::Vec6 c6 = DualPoint::Vec6::Zero();
            c6(1) = -1.0;
            h = emb.pack(c6);
            cut_type = 'n';
        } else if (emb.has_z) {
            // Z = [[z1, z2],[z2*, z3]] must stay PSD.
            const double mid = 0.5 * (dp.z1 + dp.z3);
            const double half = 0.5 * (dp.z1 - dp.z3);
            const double off2 = dp.z2r * dp.z2r + dp.z2i * dp.z2i;
            const double eig_min = mid - std::sqrt(half * half + off2);
            const double z_scale = std::max({std::abs(dp.z1), std::abs(dp.z3),
                                             std::sqrt(off2), 1.0});
            if (eig_min < -1e-14 * z_scale) {
                cmat z_mat(2, 2);
                z_mat << dp.z1, cplx(dp.z2r, dp.z2i), cplx(dp.z2r, -dp.z2i), dp.z3;
                HermEig ze = herm_eig(z_mat);
                const cplx q1 = ze.vectors(0, 1), q2 = ze.vectors(1, 1);
                const cplx t = std::conj(q1) * q2;
                DualPoint::Vec6 c6 = DualPoint::Vec6::Zero();
                c6(2) = -std::norm(q1);
                c6(3) = -2.0 * std::real(t);
                c6(4) = 2.0 * std::imag(t);
                c6(5) = -std::norm(q2);
                h = emb.pack(c6);
                cut_type = 'Z';
            }
        }

        if (cut_type == 'g') {
            // D-cone and Lemma-1 range condition.
            const cmat d = dual_composite(p, dp);
            HermEig de = herm_eig(d);
            const double top = std::max(de.values(0), 0.0);
            const double cutoff = std::max(eps_rank * top, 1e-300);
            cvec q_cut;
            if (de.values(p.nz.m - 1) < -std::max(cutoff, 1e-14 * std::max(top, 1.0))) {
                q_cut = de.vectors.col(p.nz.m - 1);
                cut_type = 'D';
            } else if (g_norm_max > 0.0) {
                // Range(H_ID^H) must lie inside Range(D): points violating it
                // have unbounded g and are cut like D-cone violations, using
                // the null direction that actually carries ID energy.
                double worst = 0.0;
                for (int i = p.nz.m - 1; i >= 0 && de.values(i) <= cutoff; --i) {
                    const double leak = (p.nz.g * de.vectors.col(i)).norm();
                    if (leak > worst) {
                        worst = leak;
                        q_cut = de.vectors.col(i);
                    }
                }
                if (worst > eps_rank * std::max(1.0, g_norm_max)) cut_type = 'R';
            }
            if (cut_type == 'D' || cut_type == 'R') {
                DualPoint::Vec6 c6 = DualPoint::Vec6::Zero();
                if (emb.has_lambda)
                    c6(0) = std::real((q_cut.adjoint() * p.nz.w * q_cut)(0));
                c6(1) = -1.0;
                if (emb.has_z) {
                    c6(2) = std::real((q_cut.adjoint() * p.nz.b_dd * q_cut)(0));
                    const cplx cq = (q_cut.adjoint() * p.nz.b_da * q_cut)(0);
                    c6(3) = 2.0 * std::real(cq);
                    c6(4) = -2.0 * std::imag(cq);
                    c6(5) = std::real((q_cut.adjoint() * p.nz.b_aa * q_cut)(0));
                }
                h = emb.pack(c6);
            }
        }

        if (cut_type == 'g') {
            DualEvaluation ev = eval_dual(p, dp);
            // Every feasible primal design has nonnegative rate, so the dual
            // function is nonnegative over the dual cone whenever the
            // constraint set is nonempty; a clearly negative value certifies
            // jointly infeasible thresholds (the dual is unbounded below).
            if (ev.g < -1e3 * opts.tol_dual)
                throw SolverFailure(
                    "ellipsoid_solve: negative dual value, thresholds are "
                    "jointly infeasible");
            if (ev.g < out.g_best) {
                out.g_best = ev.g;
                out.best = dp;
                // Audited primal value at this dual point: trace-rescaled
                // candidate and its worst relative constraint violation.
                cmat s = ev.s_star;
                const double tr = real_trace(s);
                if (tr > 1.0) s /= tr;
                rate_at_best = p.nz.rate_of(s);
                viol_at_best = 0.0;
                if (p.has_lambda()) {
                    const double e = p.nz.energy_norm_of(s);
                    viol_at_best = std::max(
                        viol_at_best, (p.gamma_eh - e) / std::max(p.gamma_eh, 1e-30));
                }
                if (p.has_z())
                    viol_at_best = std::max(
                        viol_at_best, p.nz.crb_violation_of(s, p.gamma1));
            }
            h = emb.pack(ev.subgradient);
            const double hEh = h.dot(shape * h);
            const double unc = hEh > 0.0 ? std::sqrt(hEh) : 0.0;
            record(it, 'g', ev.g, unc);
            const double scale = std::max(1.0, std::abs(out.g_best));
            const bool dual_done = unc <= opts.tol_dual * scale;
            const bool primal_done =
                out.g_best - rate_at_best <= opts.tol_dual * scale &&
                viol_at_best <= opts.tol_dual;
            if ((dual_done && primal_done) ||
                unc <= 1e-4 * opts.tol_dual * scale) {
                out.converged = true;
                return out;
            }
        } else {
            record(it, cut_type, std::numeric_limits<double>::quiet_NaN(), kInf);
        }

        if (!apply_cut(h)) {
            out.converged = std::isfinite(out.g_best);
            if (!out.converged)
                throw EllipsoidFailure("ellipsoid_solve: ellipsoid collapsed "
                                       "before any feasible dual point",
                                       out);
            return out;
        }
    }
    if (!std::isfinite(out.g_best))
        throw EllipsoidFailure("ellipsoid_solve: iteration cap reached with no "
                               "feasible dual point",
                               out);
    throw EllipsoidFailure("ellipsoid_solve: iteration cap reached before "
                           "dual tolerance",
                           out);
}

struct P1NormalizedSolution {
    cmat s_norm;
    double rate = 0.0;
    DualPoint dual;
    double g_best = kInf;
    double duality_gap = kInf;
    bool used_completion = false;
    int iterations = 0;
    std::vector<IterateRecord> trace;
};

// Primal recovery at the optimal dual point (Proposition-2 style): the S11
// block comes from the dual evaluation; over the null space of D the
// remaining blocks are completed by a conic feasibility solve. Directions
// where the optimal design must place constraint-serving power show up as
// near-zero (not exactly zero) eigenvalues of D at an inexact dual point,
// so the recovery retries with progressively looser rank cutoffs until the
// constraints audit clean; the duality gap reported alongside stays the
// final optimality certificate.
inline P1NormalizedSolution recover_primal(const P1Instance& p,
                                           const EllipsoidOutcome& dual_opt,
                                           const P1Options& opts = {}) {
    DualEvaluation ev = eval_dual(p, dual_opt.best);
    P1NormalizedSolution sol;
    sol.dual = dual_opt.best;
    sol.g_best = dual_opt.g_best;
    sol.iterations = dual_opt.iterations;
    sol.trace = dual_opt.trace;

    HermEig de = herm_eig(ev.d);
    const double top = std::max(de.values(0), 0.0);

    // Relative feasibility audit; trace overshoot from dual truncation is
    // removed by rescaling first.
    auto audited = [&](cmat s) -> std::optional<cmat> {
        const double tr = real_trace(s);
        if (tr > 1.0) s /= tr;
        if (p.has_lambda() &&
            p.nz.energy_norm_of(s) < p.gamma_eh * (1.0 - 1e-4) - 1e-12)
            return std::nullopt;
        if (p.has_z() && p.nz.crb_violation_of(s, p.gamma1) > 1e-4)
            return std::nullopt;
        return s;
    };

    // Complete S over the orthogonal complement of the leading `rank`
    // eigenvectors of D, with the S11 block fixed there.
    auto complete = [&](int rank) -> cmat {
        const cmat q_nn = de.vectors.leftCols(rank);
        const cmat s11 = q_nn.adjoint() * ev.s_star * q_nn;
        P1SetBlocks set = build_p1_set(
            p.nz, p.has_lambda() ? std::optional<double>(p.gamma_eh) : std::nullopt,
            p.has_z() ? std::optional<double>(p.gamma1) : std::nullopt);
        for (int i = 0; i < rank; ++i) {
            for (int j = i; j < rank; ++j) {
                const cmat outer = de.vectors.col(j) * de.vectors.col(i).adjoint();
                set.prog.add_constraint({BlockTerm{set.s_block, symmetrize(outer)}},
                                        Sense::Eq, std::real(s11(i, j)));
                if (j > i)
                    set.prog.add_constraint(
                        {BlockTerm{set.s_block,
                                   symmetrize(cplx(0.0, -1.0) * outer)}},
                        Sense::Eq, std::imag(s11(i, j)));
            }
        }
        // The completion target can be a single point (every constraint
        // active), so ask the conic solve for extra accuracy.
        SdpOptions tight = opts.sdp;
        tight.tol = std::min(tight.tol, 1e-9);
        FeasibilityResult f =
            solve_feasibility(std::move(set.prog), {}, 1e-5, tight);
        if (f.slack < -1e-5 || f.blocks.empty())
            throw SolverFailure("recover_primal: Proposition-2 completion "
                                "infeasible (slack " + std::to_string(f.slack) + ")");
        return psd_project(f.blocks[set.s_block]);
    };

    std::optional<cmat> s;
    if (ev.rank_d == p.nz.m) s = audited(ev.s_star);
    int last_rank = ev.rank_d == p.nz.m ? p.nz.m : -1;
    const double cutoffs[3] = {eps_rank, 1e-6, 1e-4};
    for (int c = 0; c < 3 && !s; ++c) {
        int rank = 0;
        while (rank < p.nz.m && de.values(rank) > cutoffs[c] * top) ++rank;
        if (rank == last_rank || rank == p.nz.m) continue;
        last_rank = rank;
        try {
            s = audited(complete(rank));
            if (s) sol.used_completion = true;
        } catch (const SolverFailure&) {
            if (c == 2) throw;
        }
    }
    if (!s)
        throw SolverFailure("recover_primal: no audited primal at any rank "
                            "cutoff (constraints violated)");

    sol.s_norm = *s;
    sol.rate = p.nz.rate_of(*s);
    sol.duality_gap = sol.g_best - sol.rate;
    return sol;
}

// Largest achievable normalized Fisher level t(S) = tr(Bdd S) -
// |tr(Bda S)|^2 / tr(Baa S) over the unit power ball; the normalized
// CRB minimum is 1/t.
inline double fisher_max_norm(const ScenarioConfig& cfg, const Normalized& nz,
                              const SdpOptions& sdp_opts = {}) {
    cmat s_norm;
    if (cfg.sense_rx_antennas > cfg.tx_antennas) {
        const cvec at = steering(cfg.tx_antennas, cfg.target_angle);
        s_norm = symmetrize(at.conjugate() * at.transpose() / double(cfg.tx_antennas));
    } else {
        s_norm = solve_c_min_sdp(nz, sdp_opts);
    }
    const double t_aa = std::real(trace_prod(nz.b_aa, s_norm));
    const double t_dd = std::real(trace_prod(nz.b_dd, s_norm));
    const cplx t_da = trace_prod(nz.b_da, s_norm);
    if (t_aa <= 0.0) return 0.0;
    return t_dd - std::norm(t_da) / t_aa;
}

enum class FeasibilityVerdict { Feasible, InfeasibleEnergy, InfeasibleCrb, InfeasibleJoint };

struct P1Feasibility {
    FeasibilityVerdict verdict = FeasibilityVerdict::Feasible;
    bool feasible() const { return verdict == FeasibilityVerdict::Feasible; }
    const char* reason() const {
        switch (verdict) {
            case FeasibilityVerdict::InfeasibleEnergy: return "energy threshold above E_max";
            case FeasibilityVerdict::InfeasibleCrb: return "CRB threshold below CRB_min";
            case FeasibilityVerdict::InfeasibleJoint: return "joint constraint set empty";
            default: return "feasible";
        }
    }
};

inline P1Feasibility feasibility_check(const ScenarioConfig& cfg,
                                       const SensingMatrices& sm,
                                       double gamma_eh, double gamma_s,
                                       const SdpOptions& sdp_opts = {}) {
    const Normalized nz = Normalized::build(cfg, sm);
    P1Feasibility out;
    if (gamma_eh > nz.e_scale * (1.0 + 1e-9)) {
        out.verdict = FeasibilityVerdict::InfeasibleEnergy;
        return out;
    }
    if (std::isfinite(gamma_s)) {
        const double t_max = fisher_max_norm(cfg, nz, sdp_opts);
        const double crb_min = t_max > 0.0 ? nz.crb_scale / t_max : kInf;
        if (gamma_s < crb_min * (1.0 - 1e-9)) {
            out.verdict = FeasibilityVerdict::InfeasibleCrb;
            return out;
        }
        if (gamma_eh > 0.0) {
            P1SetBlocks set = build_p1_set(nz, gamma_eh / nz.e_scale,
                                           gamma_s / nz.crb_scale);
            FeasibilityResult f =
                solve_feasibility(std::move(set.prog), {set.schur_block}, 1e-6,
                                  sdp_opts);
            if (f.slack < -1e-6)
                out.verdict = FeasibilityVerdict::InfeasibleJoint;
        }
    }
    return out;
}

struct P1Solution {
    cmat s_opt;  // M x M, Watts
    double rate = 0.0;
    CrePoint point;
    DualPoint dual;
    double duality_gap = kInf;
    bool used_completion = false;
    int iterations = 0;
    std::vector<IterateRecord> trace;
};

// Full pipeline in physical units. gamma_s = +inf drops the CRB constraint;
// gamma_eh = 0 drops the energy constraint. Thresholds that sit exactly on
// the region boundary are pulled inward by a 1e-7 relative margin so the
// dual stays well-posed; the induced objective error is far below the
// solver tolerance.
inline P1Solution solve_p1(const ScenarioConfig& cfg, const SensingMatrices& sm,
                           double gamma_eh, double gamma_s,
                           const P1Options& opts = {}) {
    const Normalized nz = Normalized::build(cfg, sm);
    P1Instance inst;
    inst.nz = nz;
    if (gamma_eh > 0.0 && nz.e_scale > 0.0)
        inst.gamma_eh = std::min(gamma_eh / nz.e_scale, 1.0 - 1e-7);
    if (std::isfinite(gamma_s)) {
        const double t_max = fisher_max_norm(cfg, nz, opts.sdp);
        const double g1 = gamma_s / nz.crb_scale;
        inst.gamma1 = std::max(g1, (1.0 + 1e-7) / t_max);
    }

    P1NormalizedSolution norm_sol;
    if (!inst.has_lambda() && !inst.has_z()) {
        // Constraints void: plain water-filling, no dual search needed.
        Vertex v = r_max(cfg, sm);
        norm_sol.s_norm = v.covariance / cfg.power_budget;
        norm_sol.rate = v.point.rate;
        norm_sol.duality_gap = 0.0;
        norm_sol.g_best = v.point.rate;
    } else {
        EllipsoidOutcome dual_opt = ellipsoid_solve(inst, opts);
        norm_sol = recover_primal(inst, dual_opt, opts);
    }

    P1Solution sol;
    sol.s_opt = cfg.power_budget * norm_sol.s_norm;
    sol.rate = norm_sol.rate;
    sol.point = evaluate(sol.s_opt, sm, cfg);
    sol.dual = norm_sol.dual;
    sol.duality_gap = norm_sol.duality_gap;
    sol.used_completion = norm_sol.used_completion;
    sol.iterations = norm_sol.iterations;
    sol.trace = std::move(norm_sol.trace);
    return sol;
}

// Schur-complement block of the CRB constraint in physical units:
// PSD of this 2x2 block is equivalent to CRB(S) <= Gamma_S when
// tr(A^H A S) > 0. gamma_s1 = (2|alpha|^2 L / sigma_S^2) Gamma_S.
inline cmat schur_block(const cmat& s, const SensingMatrices& sm,
                        double gamma_s1) {
    const double t_dd = std::real(trace_prod(sm.gram_dd, s));
    const double t_aa = std::real(trace_prod(sm.gram_aa, s));
    const cplx t_da = trace_prod(cmat(sm.cross_da), s);
    cmat block(2, 2);
    block << t_dd - 1.0 / gamma_s1, std::conj(t_da), t_da, t_aa;
    return block;
}

}  // namespace cre
