#pragma once

// Small dense conic solver plus the independent convex oracles built on it:
// linear-objective SDP solves (C-E edge, C-min fallback, feasibility
// problems) and Frank-Wolfe maximization of the concave rate objective over
// the (P1) feasible set.
//
// Variables are products of complex Hermitian PSD blocks (a 1x1 block is a
// nonnegative scalar). Linear functionals are Re tr(C X) with Hermitian C,
// carried in a real isometric vectorization, so the whole solve runs on
// real vectors with one Hermitian eigendecomposition per block per
// iteration (operator splitting: affine projection alternated with
// PSD-cone projection).

#include <optional>
#include <vector>

#include "cre/model.hpp"

namespace cre {

// ---------------------------------------------------------------------------
// Isometric real vectorization of Hermitian matrices.
// Layout: d diagonal entries, then (sqrt2 Re, sqrt2 Im) per offdiagonal i<j
// in column-major pair order. <svec(A), svec(B)> = tr(A B).

inline Eigen::Index svec_dim(int d) { return static_cast<Eigen::Index>(d) * d; }

inline rvec svec(const cmat& h) {
    const int d = static_cast<int>(h.rows());
    rvec v(svec_dim(d));
    Eigen::Index k = 0;
    for (int i = 0; i < d; ++i) v(k++) = std::real(h(i, i));
    const double s2 = std::sqrt(2.0);
    for (int j = 1; j < d; ++j)
        for (int i = 0; i < j; ++i) {
            v(k++) = s2 * std::real(h(i, j));
            v(k++) = s2 * std::imag(h(i, j));
        }
    return v;
}

inline cmat smat(const rvec& v, int d) {
    cmat h(d, d);
    Eigen::Index k = 0;
    for (int i = 0; i < d; ++i) h(i, i) = v(k++);
    const double is2 = 1.0 / std::sqrt(2.0);
    for (int j = 1; j < d; ++j)
        for (int i = 0; i < j; ++i) {
            const cplx z(v(k) * is2, v(k + 1) * is2);
            h(i, j) = z;
            h(j, i) = std::conj(z);
            k += 2;
        }
    return h;
}

// ---------------------------------------------------------------------------
// Program description.

struct BlockTerm {
    int block = 0;
    cmat coeff;  // functional contribution Re tr(coeff * X_block)
};

enum class Sense { Eq, Le, Ge };

struct Constraint {
    std::vector<BlockTerm> terms;
    double rhs = 0.0;
    Sense sense = Sense::Eq;
};

struct ConicProgram {
    std::vector<int> block_dims;
    std::vector<BlockTerm> objective;  // value = sum Re tr(C_b X_b)
    bool maximize = true;
    std::vector<Constraint> constraints;

    int add_block(int dim) {
        block_dims.push_back(dim);
        return static_cast<int>(block_dims.size()) - 1;
    }
    void add_constraint(std::vector<BlockTerm> terms, Sense sense, double rhs) {
        constraints.push_back(Constraint{std::move(terms), rhs, sense});
    }
};

struct SdpOptions {
    double tol = 1e-7;          // primal/dual residual target (normalized)
    int max_iter = 200000;
    double rho = 1.0;           // splitting step size
    double relaxation = 1.6;    // over-relaxation
    double divergence_norm = 1e4;  // iterate norm flagging unboundedness
    int stagnation_window = 500;
};

enum class SdpStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct SdpResult {
    SdpStatus status = SdpStatus::IterLimit;
    std::vector<cmat> blocks;
    double value = 0.0;
    double primal_residual = kInf;
    int iterations = 0;
};

struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reusable splitting state, lets Frank-Wolfe warm-start successive solves
// over the same feasible set.
struct SdpWarmState {
    rvec z;
    rvec u;
};

namespace detail {

struct Vectorized {
    std::vector<Eigen::Index> offsets;  // per block, into x
    Eigen::Index n = 0;
    rmat a;  // equality rows (row-normalized)
    rvec b;
    rvec c;  // minimize c.x
    double c_scale = 1.0;
    std::vector<int> dims;
};

inline rvec scatter(const Vectorized& vz, const std::vector<BlockTerm>& terms) {
    rvec row = rvec::Zero(vz.n);
    for (const auto& t : terms) {
        const cmat h = symmetrize(t.coeff);
        row.segment(vz.offsets[t.block], svec_dim(vz.dims[t.block])) += svec(h);
    }
    return row;
}

// Lower the program to {min c.x : A x = b, x in K}: inequality rows gain a
// nonnegative scalar slack block.
inline Vectorized vectorize(ConicProgram prog) {
    for (auto& con : prog.constraints) {
        if (con.sense == Sense::Eq) continue;
        const int slack = prog.add_block(1);
        const double sign = con.sense == Sense::Le ? 1.0 : -1.0;
        con.terms.push_back(BlockTerm{slack, cmat::Constant(1, 1, sign)});
        con.sense = Sense::Eq;
    }
    Vectorized vz;
    vz.dims = prog.block_dims;
    vz.offsets.resize(prog.block_dims.size());
    for (size_t i = 0; i < prog.block_dims.size(); ++i) {
        vz.offsets[i] = vz.n;
        vz.n += svec_dim(prog.block_dims[i]);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(prog.constraints.size());
    vz.a.resize(m, vz.n);
    vz.b.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        rvec row = scatter(vz, prog.constraints[i].terms);
        double nrm = row.norm();
        if (nrm == 0.0) nrm = 1.0;
        vz.a.row(i) = row / nrm;
        vz.b(i) = prog.constraints[i].rhs / nrm;
    }
    rvec c = scatter(vz, prog.objective);
    if (prog.maximize) c = -c;
    vz.c_scale = std::max(1.0, c.norm());
    vz.c = c / vz.c_scale;
    return vz;
}

inline rvec project_cone(const Vectorized& vz, const rvec& x) {
    rvec out(x.size());
    for (size_t b = 0; b < vz.dims.size(); ++b) {
        const int d = vz.dims[b];
        const auto seg = x.segment(vz.offsets[b], svec_dim(d));
        if (d == 1) {
            out(vz.offsets[b]) = std::max(seg(0), 0.0);
        } else {
            out.segment(vz.offsets[b], svec_dim(d)) = svec(psd_project(smat(seg, d)));
        }
    }
    return out;
}

}  // namespace detail

inline SdpResult solve_linear_sdp(const ConicProgram& prog,
                                  const SdpOptions& opts = {},
                                  SdpWarmState* warm = nullptr) {
    using namespace detail;
    Vectorized vz = vectorize(prog);
    const Eigen::Index n = vz.n;
    const Eigen::Index m = vz.a.rows();

    rmat gram = vz.a * vz.a.transpose();
    gram.diagonal().array() += 1e-12;
    Eigen::LDLT<rmat> gram_ldlt(gram);

    rvec z = rvec::Zero(n), u = rvec::Zero(n);
    if (warm && warm->z.size() == n) {
        z = warm->z;
        u = warm->u;
    }
    double rho = opts.rho;
    const double alpha = opts.relaxation;
    rvec cq = vz.c / rho;
    const double b_scale = std::max(1.0, vz.b.norm());

    auto affine_project = [&](const rvec& v) -> rvec {
        rvec mu = gram_ldlt.solve(vz.b - vz.a * v);
        return v + vz.a.transpose() * mu;
    };

    SdpResult res;
    double best_stag = kInf;
    int stag_count = 0;
    rvec x(n), z_prev(n);
    for (int it = 1; it <= opts.max_iter; ++it) {
        x = affine_project(z - u - cq);
        rvec xh = alpha * x + (1.0 - alpha) * z;
        z_prev = z;
        z = project_cone(vz, xh + u);
        u += xh - z;

        const double rp = (x - z).norm() / std::sqrt(double(n));
        const double rd = rho * (z - z_prev).norm() / std::sqrt(double(n));
        res.iterations = it;
        res.primal_residual = rp;
        if (rp <= opts.tol && rd <= opts.tol) {
            res.status = SdpStatus::Optimal;
            break;
        }
        if (z.norm() > opts.divergence_norm * b_scale) {
            res.status = SdpStatus::Unbounded;
            break;
        }
        // Infeasibility heuristic: an empty intersection leaves the
        // splitting residual pinned at the distance between the sets, so a
        // long stretch with no measurable improvement well above the target
        // is the signature. Slow feasible instances keep creeping down.
        if (it % 50 == 0) {
            if (rp > 1e2 * opts.tol && rp > 0.9999 * best_stag &&
                z.norm() <= 1e2 * b_scale) {
                stag_count += 50;
                if (stag_count >= opts.stagnation_window * 10) {
                    res.status = SdpStatus::Infeasible;
                    break;
                }
            } else {
                stag_count = 0;
            }
            best_stag = std::min(best_stag, rp);
        }
        // Residual balancing keeps the two residuals within an order of
        // magnitude of each other; badly scaled instances converge orders
        // of magnitude faster with the adapted step.
        if (it % 200 == 0) {
            double factor = 1.0;
            if (rp > 10.0 * rd && rho < 1e6)
                factor = 2.0;
            else if (rd > 10.0 * rp && rho > 1e-6)
                factor = 0.5;
            if (factor != 1.0) {
                rho *= factor;
                u /= factor;
                cq = vz.c / rho;
            }
        }
    }

    if (warm) {
        warm->z = z;
        warm->u = u;
    }
    res.blocks.resize(prog.block_dims.size());
    for (size_t b = 0; b < prog.block_dims.size(); ++b) {
        const int d = prog.block_dims[b];
        res.blocks[b] = smat(z.segment(vz.offsets[b], svec_dim(d)), d);
    }
    double value = 0.0;
    for (const auto& t : prog.objective)
        value += std::real(trace_prod(symmetrize(t.coeff), res.blocks[t.block]));
    res.value = value;
    return res;
}

// ---------------------------------------------------------------------------
// Phase-1 feasibility: maximize the joint slack t pushed into every
// inequality (and optionally into the diagonal of selected PSD blocks).

struct FeasibilityResult {
    bool feasible = false;
    double slack = -kInf;
    std::vector<cmat> blocks;
    SdpStatus status = SdpStatus::IterLimit;
};

inline FeasibilityResult solve_feasibility(ConicProgram prog,
                                           std::vector<int> strict_blocks = {},
                                           double tol = 1e-6,
                                           const SdpOptions& opts = {}) {
    const size_t n_user = prog.block_dims.size();
    const int tpos = prog.add_block(1);
    const int tneg = prog.add_block(1);
    auto add_t = [&](std::vector<BlockTerm>& terms, double coef) {
        terms.push_back(BlockTerm{tpos, cmat::Constant(1, 1, coef)});
        terms.push_back(BlockTerm{tneg, cmat::Constant(1, 1, -coef)});
    };
    for (auto& con : prog.constraints) {
        if (con.sense == Sense::Le) add_t(con.terms, 1.0);
        if (con.sense == Sense::Ge) add_t(con.terms, -1.0);
        // Strict blocks: the cone variable stands for X - t I, so every
        // appearance of X in a row contributes t * Re tr(coeff).
        double shift = 0.0;
        for (const auto& term : con.terms)
            for (int sb : strict_blocks)
                if (term.block == sb) shift += std::real(term.coeff.trace());
        if (shift != 0.0) add_t(con.terms, shift);
    }
    prog.objective = {BlockTerm{tpos, cmat::Constant(1, 1, 1.0)},
                      BlockTerm{tneg, cmat::Constant(1, 1, -1.0)}};
    prog.maximize = true;

    SdpResult r = solve_linear_sdp(prog, opts);
    FeasibilityResult out;
    out.status = r.status;
    if (r.status != SdpStatus::Optimal && r.status != SdpStatus::IterLimit)
        return out;
    out.slack = r.value;
    out.blocks.assign(r.blocks.begin(), r.blocks.begin() + n_user);
    for (int sb : strict_blocks) {
        const int d = prog.block_dims[sb];
        out.blocks[sb] += out.slack * cmat::Identity(d, d);
    }
    out.feasible = out.slack > -tol;
    return out;
}

// ---------------------------------------------------------------------------
// (P1) feasible set in normalized units: block 0 is S' (M x M, tr <= 1),
// plus the 2x2 Schur block coupled by trace equalities when a finite CRB
// threshold is present.

struct P1SetBlocks {
    ConicProgram prog;
    int s_block = -1;
    int schur_block = -1;
};

// gamma1_norm: normalized Fisher threshold (CRB <= Gamma_S  <=>  Schur block
// with 1/gamma1_norm PSD). nullopt drops the CRB constraint; gamma_eh_norm
// nullopt (or 0) drops the energy constraint.
inline P1SetBlocks build_p1_set(const Normalized& nz,
                                std::optional<double> gamma_eh_norm,
                                std::optional<double> gamma1_norm) {
    P1SetBlocks set;
    set.s_block = set.prog.add_block(nz.m);
    const cmat eye = cmat::Identity(nz.m, nz.m);
    set.prog.add_constraint({BlockTerm{set.s_block, eye}}, Sense::Le, 1.0);
    if (gamma_eh_norm && *gamma_eh_norm > 0.0)
        set.prog.add_constraint({BlockTerm{set.s_block, nz.w}}, Sense::Ge,
                                *gamma_eh_norm);
    if (gamma1_norm) {
        set.schur_block = set.prog.add_block(2);
        cmat pick_00 = cmat::Zero(2, 2), pick_11 = cmat::Zero(2, 2);
        cmat pick_re = cmat::Zero(2, 2), pick_im = cmat::Zero(2, 2);
        pick_00(0, 0) = 1.0;
        pick_11(1, 1) = 1.0;
        pick_re(0, 1) = pick_re(1, 0) = 0.5;
        pick_im(0, 1) = cplx(0.0, 0.5);
        pick_im(1, 0) = cplx(0.0, -0.5);  // Re tr(pick_im Y) = -Im Y10
        // Y00 = tr(Bdd S) - 1/gamma1
        set.prog.add_constraint({BlockTerm{set.s_block, nz.b_dd},
                                 BlockTerm{set.schur_block, cmat(-pick_00)}},
                                Sense::Eq, 1.0 / *gamma1_norm);
        // Y11 = tr(Baa S)
        set.prog.add_constraint({BlockTerm{set.s_block, nz.b_aa},
                                 BlockTerm{set.schur_block, cmat(-pick_11)}},
                                Sense::Eq, 0.0);
        // Y10 = tr(Bda S): real and imaginary parts.
        const cmat bda_re = symmetrize(nz.b_da);
        const cmat bda_im = symmetrize(cplx(0.0, -1.0) * nz.b_da);
        set.prog.add_constraint({BlockTerm{set.s_block, bda_re},
                                 BlockTerm{set.schur_block, cmat(-pick_re)}},
                                Sense::Eq, 0.0);
        set.prog.add_constraint({BlockTerm{set.s_block, bda_im},
                                 BlockTerm{set.schur_block, cmat(pick_im)}},
                                Sense::Eq, 0.0);
    }
    return set;
}

// ---------------------------------------------------------------------------
// C-E edge: maximize harvested energy under a CRB cap (Schur reformulation),
// solved directly by the conic backend. Physical units in and out.

// Accept iteration-limited solves that landed close to the residual target;
// callers audit the recovered matrices in physical units afterwards.
inline bool near_optimal(const SdpResult& r, const SdpOptions& opts) {
    return r.status == SdpStatus::Optimal ||
           (r.status == SdpStatus::IterLimit &&
            r.primal_residual <= 1e2 * opts.tol);
}

struct CeEdgeResult {
    bool feasible = false;
    cmat covariance;  // Watts
    CrePoint point;
};

inline CeEdgeResult solve_ce_edge(const ScenarioConfig& cfg,
                                  const SensingMatrices& sm, double gamma_s,
                                  const SdpOptions& opts = {}) {
    const Normalized nz = Normalized::build(cfg, sm);
    std::optional<double> g1;
    if (std::isfinite(gamma_s)) g1 = gamma_s / nz.crb_scale;
    P1SetBlocks set = build_p1_set(nz, std::nullopt, g1);
    set.prog.objective = {BlockTerm{set.s_block, nz.w}};
    set.prog.maximize = true;
    SdpResult r = solve_linear_sdp(set.prog, opts);
    CeEdgeResult out;
    if (r.status == SdpStatus::Infeasible) return out;
    if (!near_optimal(r, opts))
        throw SolverFailure("solve_ce_edge: conic solve did not converge (residual " +
                            std::to_string(r.primal_residual) + ")");
    out.feasible = true;
    out.covariance = cfg.power_budget * psd_project(r.blocks[set.s_block]);
    out.point = evaluate(out.covariance, sm, cfg);
    return out;
}

// C-min via SDP (used when N_S <= M, where no closed form is stated):
// maximize the Schur-complement Fisher level t, i.e. the largest t with
// [[tr(Bdd S) - t, c*], [c, tr(Baa S)]] PSD over the power ball.
inline cmat solve_c_min_sdp(const Normalized& nz, const SdpOptions& opts = {}) {
    ConicProgram prog;
    const int s_block = prog.add_block(nz.m);
    const int y_block = prog.add_block(2);
    const cmat eye = cmat::Identity(nz.m, nz.m);
    prog.add_constraint({BlockTerm{s_block, eye}}, Sense::Le, 1.0);
    cmat pick_11 = cmat::Zero(2, 2), pick_re = cmat::Zero(2, 2),
         pick_im = cmat::Zero(2, 2), pick_00 = cmat::Zero(2, 2);
    pick_00(0, 0) = 1.0;
    pick_11(1, 1) = 1.0;
    pick_re(0, 1) = pick_re(1, 0) = 0.5;
    pick_im(0, 1) = cplx(0.0, 0.5);
    pick_im(1, 0) = cplx(0.0, -0.5);
    prog.add_constraint({BlockTerm{s_block, nz.b_aa},
                         BlockTerm{y_block, cmat(-pick_11)}},
                        Sense::Eq, 0.0);
    prog.add_constraint({BlockTerm{s_block, symmetrize(nz.b_da)},
                         BlockTerm{y_block, cmat(-pick_re)}},
                        Sense::Eq, 0.0);
    prog.add_constraint({BlockTerm{s_block, symmetrize(cplx(0.0, -1.0) * nz.b_da)},
                         BlockTerm{y_block, cmat(pick_im)}},
                        Sense::Eq, 0.0);
    // t = tr(Bdd S) - Y00
    prog.objective = {BlockTerm{s_block, nz.b_dd}, BlockTerm{y_block, cmat(-pick_00)}};
    prog.maximize = true;
    SdpResult r = solve_linear_sdp(prog, opts);
    if (!near_optimal(r, opts))
        throw SolverFailure("solve_c_min_sdp: conic solve did not converge");
    return psd_project(r.blocks[s_block]);
}

// ---------------------------------------------------------------------------
// Frank-Wolfe oracle: maximize the rate over the (P1) feasible set. The
// linear subproblem runs through solve_linear_sdp with warm starts; steps
// use an exact concave line search on the segment (the 2/(k+2) schedule is
// the fallback when the search stalls).

struct FrankWolfeResult {
    cmat covariance_norm;  // normalized units (trace <= 1)
    double rate = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

inline FrankWolfeResult frank_wolfe_rate_max(const Normalized& nz,
                                             std::optional<double> gamma_eh_norm,
                                             std::optional<double> gamma1_norm,
                                             double tol_rel = 1e-4,
                                             int max_iter = 5000,
                                             const SdpOptions& sdp_opts = {}) {
    P1SetBlocks set = build_p1_set(nz, gamma_eh_norm, gamma1_norm);

    // Interior-ish starting point.
    cmat s = cmat::Identity(nz.m, nz.m) / (2.0 * nz.m);
    if ((gamma_eh_norm && *gamma_eh_norm > 0.0) || gamma1_norm) {
        ConicProgram phase = set.prog;
        FeasibilityResult f = solve_feasibility(std::move(phase), {}, 1e-6, sdp_opts);
        if (!f.feasible)
            throw SolverFailure("frank_wolfe_rate_max: instance infeasible");
        s = psd_project(f.blocks[set.s_block]);
        const double tr = real_trace(s);
        if (tr > 1.0) s /= tr;
    }

    const Eigen::Index nid = nz.g.rows();
    auto rate_of = [&](const cmat& x) { return nz.rate_of(x); };
    auto gradient = [&](const cmat& x) -> cmat {
        cmat inner = cmat::Identity(nid, nid) + nz.g * symmetrize(x) * nz.g.adjoint();
        cmat ginv = symmetrize(inner).inverse();
        return symmetrize(nz.g.adjoint() * ginv * nz.g) / std::log(2.0);
    };

    SdpWarmState warm;
    FrankWolfeResult out;
    double rate_cur = rate_of(s);
    for (int k = 0; k < max_iter; ++k) {
        const cmat grad = gradient(s);
        ConicProgram sub = set.prog;
        sub.objective = {BlockTerm{set.s_block, grad}};
        sub.maximize = true;
        // Feasibility of the set was settled by phase-1 above, so any
        // termination status still leaves a usable cone-feasible iterate.
        SdpResult lin = solve_linear_sdp(sub, sdp_opts, &warm);
        cmat s_lin = psd_project(lin.blocks[set.s_block]);
        {
            const double tr = real_trace(s_lin);
            if (tr > 1.0) s_lin /= tr;
        }
        const double gap = std::real(trace_prod(grad, cmat(s_lin - s)));
        out.gap = gap;
        out.iterations = k + 1;
        if (gap <= tol_rel * std::max(1.0, rate_cur)) break;

        // Golden-section search for the step; the objective along the
        // segment is concave.
        const cmat dir = s_lin - s;
        auto f = [&](double t) { return rate_of(cmat(s + t * dir)); };
        double lo = 0.0, hi = 1.0;
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
        double fa = f(a), fb = f(b);
        for (int i = 0; i < 48; ++i) {
            if (fa < fb) {
                lo = a;
                a = b;
                fa = fb;
                b = lo + inv_phi * (hi - lo);
                fb = f(b);
            } else {
                hi = b;
                b = a;
                fb = fa;
                a = hi - inv_phi * (hi - lo);
                fa = f(a);
            }
        }
        double step = 0.5 * (lo + hi);
        double rate_new = f(step);
        const double fallback = 2.0 / (k + 2.0);
        if (rate_new < rate_cur) {
            step = fallback;
            rate_new = f(step);
        }
        s = symmetrize(s + step * dir);
        rate_cur = std::max(rate_new, rate_cur - 1e-12);
    }
    out.covariance_norm = s;
    out.rate = rate_cur;
    return out;
}

}  // namespace cre
