#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "cre/p1.hpp"

using namespace cre;

namespace {

std::mt19937_64 rng(31337);

cplx rand_cplx() {
    static std::normal_distribution<double> n(0.0, 1.0);
    return cplx(n(rng), n(rng));
}

cmat rand_cmat(int rows, int cols) {
    cmat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rand_cplx();
    return m;
}

cmat rand_psd_unit(int n) {
    cmat b = rand_cmat(n, n);
    cmat s = symmetrize(b * b.adjoint());
    return s / real_trace(s);
}

ScenarioConfig random_config(int m, int n_s, int n_id, int n_eh,
                             double theta = 0.5) {
    ScenarioConfig cfg;
    cfg.tx_antennas = m;
    cfg.sense_rx_antennas = n_s;
    cfg.id_rx_antennas = n_id;
    cfg.eh_rx_antennas = n_eh;
    cfg.target_angle = theta;
    cfg.reflection = 1e-8;
    cfg.frame_length = 256;
    cfg.power_budget = 10.0;
    cfg.sigma2_sense = 1e-11;
    cfg.sigma2_id = 1e-11;
    cfg.h_id = 1e-6 * rand_cmat(n_id, m);
    cfg.h_eh = 1e-3 * rand_cmat(n_eh, m);
    cfg.validate();
    return cfg;
}

}  // namespace

TEST_CASE("schur_block boundary and trivial cases") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);

    const cmat s = cmat(cfg.power_budget * rand_psd_unit(4));
    const double c = crb(s, sm, cfg);
    REQUIRE(std::isfinite(c));
    const double gamma_s1_at = 2.0 * std::norm(cfg.reflection) *
                               cfg.frame_length / cfg.sigma2_sense * c;
    // CRB exactly at the threshold: the block is singular PSD.
    cmat blk = schur_block(s, sm, gamma_s1_at);
    HermEig e = herm_eig(blk);
    const double scale = std::max(1.0, e.values(0));
    CHECK(std::abs(e.values(1)) <= 1e-9 * scale);

    // S = 0: diag(-1/gamma, 0), not PSD.
    cmat zero_blk = schur_block(cmat::Zero(4, 4), sm, gamma_s1_at);
    CHECK(std::real(zero_blk(0, 0)) == Catch::Approx(-1.0 / gamma_s1_at));
    CHECK(std::abs(zero_blk(1, 1)) < 1e-18);
    CHECK(min_eigenvalue(zero_blk) < 0.0);
}

TEST_CASE("schur_block PSD verdict agrees with the direct CRB formula") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    const double conv = 2.0 * std::norm(cfg.reflection) * cfg.frame_length /
                        cfg.sigma2_sense;
    std::uniform_real_distribution<double> mag(-1.0, 1.0);
    int agree = 0;
    for (int t = 0; t < 100; ++t) {
        const cmat s = cmat(cfg.power_budget * rand_psd_unit(4));
        const double c = crb(s, sm, cfg);
        const double gamma_s = c * std::pow(10.0, mag(rng));
        const bool by_crb = c <= gamma_s;
        const cmat blk = schur_block(s, sm, conv * gamma_s);
        const bool by_block = min_eigenvalue(blk) >=
                              -1e-9 * std::max(1.0, spectral_norm(blk));
        if (by_crb == by_block) ++agree;
    }
    // The two verdicts may only disagree within rounding of the threshold.
    CHECK(agree >= 98);
}

TEST_CASE("eval_dual with a zero ID channel returns the affine constants") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    cfg.h_id.setZero();
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    P1Instance inst;
    inst.nz = Normalized::build(cfg, sm);
    inst.gamma_eh = 0.3;
    inst.gamma1 = 5.0;
    DualPoint dp;
    dp.lambda = 0.2;
    dp.nu = 1.5;
    dp.z1 = 0.1;
    dp.z3 = 0.05;
    DualEvaluation ev = eval_dual(inst, dp);
    CHECK(ev.s_star.cwiseAbs().maxCoeff() == 0.0);
    CHECK(ev.g == Catch::Approx(dp.nu - dp.lambda * inst.gamma_eh -
                                dp.z1 / inst.gamma1).epsilon(1e-12));
}

TEST_CASE("eval_dual at D = I matches the per-eigenchannel closed form") {
    // lambda = z = 0, nu = 1: the dual evaluation solves
    // max_S rate(S) - tr(S), separable over the eigenchannels of G^H G.
    ScenarioConfig cfg = random_config(4, 6, 3, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    P1Instance inst;
    inst.nz = Normalized::build(cfg, sm);
    inst.gamma_eh = 0.0;
    inst.gamma1 = kInf;
    DualPoint dp;
    dp.nu = 1.0;
    DualEvaluation ev = eval_dual(inst, dp);

    Svd svd = complex_svd(inst.nz.g);
    double oracle = 1.0;  // + nu * 1 (unit trace budget)
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(3, 4); ++k) {
        const double lam2 = svd.singular_values(k) * svd.singular_values(k);
        if (lam2 <= 0.0) continue;
        const double p = std::max(1.0 / std::log(2.0) - 1.0 / lam2, 0.0);
        oracle += std::log2(1.0 + lam2 * p) - p;
    }
    CHECK(ev.g == Catch::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("weak duality against constructed feasible points") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    P1Instance inst;
    inst.nz = Normalized::build(cfg, sm);
    const cmat s_feas = rand_psd_unit(4);
    // Thresholds chosen so s_feas is strictly feasible.
    inst.gamma_eh = 0.9 * inst.nz.energy_norm_of(s_feas);
    inst.gamma1 = 1.1 * inst.nz.crb_norm_of(s_feas);
    REQUIRE(std::isfinite(inst.gamma1));
    const double primal = inst.nz.rate_of(s_feas);

    for (int t = 0; t < 20; ++t) {
        DualPoint dp;
        dp.lambda = 0.3 * std::norm(rand_cplx()) / 2.0;
        cmat r = rand_cmat(2, 2) * 0.1;
        const cmat z = symmetrize(r * r.adjoint());
        dp.z1 = std::real(z(0, 0));
        dp.z2r = std::real(z(1, 0));
        dp.z2i = std::imag(z(1, 0));
        dp.z3 = std::real(z(1, 1));
        dp.nu = dp.lambda + dp.z1 + dp.z3 + 2.0 * std::abs(z(1, 0)) + 0.2 +
                std::norm(rand_cplx());
        DualEvaluation ev = eval_dual(inst, dp);
        CHECK(ev.g >= primal - 1e-9);
    }
}

TEST_CASE("solve_p1 with void constraints returns the R-max vertex") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    Vertex rm = r_max(cfg, sm);
    P1Solution sol = solve_p1(cfg, sm, 0.0, kInf);
    CHECK(sol.rate == Catch::Approx(rm.point.rate).epsilon(1e-12));
    CHECK(sol.duality_gap == 0.0);
}

TEST_CASE("ellipsoid with a nearly void energy constraint reproduces R-max") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    Vertex rm = r_max(cfg, sm);
    const double tiny = 1e-6 * rm.point.energy;
    P1Solution sol = solve_p1(cfg, sm, tiny, kInf);
    CHECK(std::abs(sol.rate - rm.point.rate) <=
          1e-4 * std::max(1.0, rm.point.rate));
}

TEST_CASE("solve_p1 on random instances: feasibility, gap, structure") {
    for (int t = 0; t < 5; ++t) {
        ScenarioConfig cfg = random_config(4, 6, 2, 2);
        SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
        Vertices v = compute_vertices(cfg, sm);
        const double geh = 0.5 * v.e_max.point.energy;
        const double gs = 4.0 * v.c_min.point.crb;
        P1Options opts;
        opts.record_trace = true;
        P1Solution sol = solve_p1(cfg, sm, geh, gs, opts);

        CHECK(sol.point.energy >= geh * (1.0 - 1e-5));
        CHECK(sol.point.crb <= gs * (1.0 + 1e-5));
        CHECK(real_trace(sol.s_opt) <= cfg.power_budget * (1.0 + 1e-9));
        CHECK(min_eigenvalue(sol.s_opt) >= -1e-9 * cfg.power_budget);
        CHECK(sol.duality_gap <= opts.tol_dual * std::max(1.0, sol.rate) * 2.0);
        CHECK(sol.rate <= v.r_max.point.rate + 1e-9);
        CHECK_FALSE(sol.used_completion);

        // Weak duality along the whole iterate trace.
        for (const auto& rec : sol.trace)
            if (rec.cut == 'g') CHECK(rec.g >= sol.rate - 1e-9);

        // EMT structure: eigenvectors of S_opt avoid the null space of D.
        const Normalized nz = Normalized::build(cfg, sm);
        P1Instance inst;
        inst.nz = nz;
        inst.gamma_eh = geh / nz.e_scale;
        inst.gamma1 = gs / nz.crb_scale;
        const cmat d = dual_composite(inst, sol.dual);
        HermEig de = herm_eig(d);
        HermEig se = herm_eig(sol.s_opt / cfg.power_budget);
        for (int i = 0; i < 4; ++i) {
            if (se.values(i) < 1e-7) continue;
            for (int j = 0; j < 4; ++j) {
                if (de.values(j) > eps_rank * de.values(0)) continue;
                CHECK(std::abs(se.vectors.col(i).dot(de.vectors.col(j))) < 1e-4);
            }
        }
    }
}

TEST_CASE("complementary slackness at a binding energy threshold") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    Vertices v = compute_vertices(cfg, sm);
    const double geh = 0.8 * v.e_max.point.energy;
    P1Solution sol = solve_p1(cfg, sm, geh, kInf);
    if (sol.dual.lambda > 1e-2) {
        const double slack_rel = std::abs(sol.point.energy - geh) / geh;
        CHECK(slack_rel <= 1e-4);
    }
    CHECK(sol.point.energy >= geh * (1.0 - 1e-5));
}

TEST_CASE("completion path on channels orthogonal to the sensing subspace") {
    const int m = 5;
    ScenarioConfig cfg = random_config(m, 8, 1, 1);
    const cvec at = steering(m, cfg.target_angle).conjugate();
    const cvec dt = steering_derivative(m, cfg.target_angle).conjugate();
    cmat basis(m, 2);
    basis.col(0) = at;
    basis.col(1) = dt;
    Svd svd = complex_svd(basis);
    // Columns 2..4 of U span the orthogonal complement of the sensing pair.
    cfg.h_id = 1e-6 * svd.u.col(2).adjoint();
    cfg.h_eh = 1e-3 * svd.u.col(3).adjoint();
    cfg.validate();
    SensingMatrices sm = SensingMatrices::build(m, 8, cfg.target_angle);
    Vertices v = compute_vertices(cfg, sm);

    const double gs = 2.0 * v.c_min.point.crb;
    const double geh = 0.2 * v.e_max.point.energy;
    P1Solution sol = solve_p1(cfg, sm, geh, gs);
    CHECK(sol.used_completion);
    CHECK(sol.point.energy >= geh * (1.0 - 1e-4));
    CHECK(sol.point.crb <= gs * (1.0 + 1e-4));
    CHECK(real_trace(sol.s_opt) <= cfg.power_budget * (1.0 + 1e-6));
    CHECK(sol.rate > 0.0);
}

TEST_CASE("feasibility_check verdicts") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    Vertices v = compute_vertices(cfg, sm);

    CHECK(feasibility_check(cfg, sm, 2.0 * v.e_max.point.energy, kInf).verdict ==
          FeasibilityVerdict::InfeasibleEnergy);
    CHECK(feasibility_check(cfg, sm, 0.0, 0.5 * v.c_min.point.crb).verdict ==
          FeasibilityVerdict::InfeasibleCrb);
    CHECK(feasibility_check(cfg, sm, 0.5 * v.e_max.point.energy,
                            2.0 * v.c_min.point.crb)
              .feasible());
}

TEST_CASE("monotone envelope over a threshold grid") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    Vertices v = compute_vertices(cfg, sm);
    const int n = 5;
    rmat rates(n, n);
    for (int i = 0; i < n; ++i) {
        const double geh =
            (0.1 + 0.8 * i / (n - 1.0)) * v.e_max.point.energy;
        for (int j = 0; j < n; ++j) {
            const double gs =
                v.c_min.point.crb * std::pow(100.0, 1.0 - j / (n - 1.0)) * 1.5;
            P1Solution sol = solve_p1(cfg, sm, geh, gs);
            rates(i, j) = sol.rate;
        }
    }
    const double slack = 1e-4;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i)
                CHECK(rates(i, j) <= rates(i - 1, j) + slack);  // tighter energy
            if (j)
                CHECK(rates(i, j) <= rates(i, j - 1) + slack);  // tighter CRB
        }
}

TEST_CASE("identical inputs give bit-identical iterate traces") {
    ScenarioConfig cfg = random_config(4, 6, 2, 2);
    SensingMatrices sm = SensingMatrices::build(4, 6, cfg.target_angle);
    Vertices v = compute_vertices(cfg, sm);
    P1Options opts;
    opts.record_trace = true;
    const double geh = 0.4 * v.e_max.point.energy;
    const double gs = 3.0 * v.c_min.point.crb;
    P1Solution a = solve_p1(cfg, sm, geh, gs, opts);
    P1Solution b = solve_p1(cfg, sm, geh, gs, opts);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].cut == b.trace[i].cut);
        const bool same_g =
            (a.trace[i].g == b.trace[i].g) ||
            (std::isnan(a.trace[i].g) && std::isnan(b.trace[i].g));
        CHECK(same_g);
    }
    CHECK((a.s_opt.array() == b.s_opt.array()).all());
}
