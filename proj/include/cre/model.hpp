#pragma once

// Physical model of the multi-functional MIMO system: scenario
// configuration, ULA steering vectors and their angle derivatives, sensing
// matrices, and the three performance metrics (estimation CRB, achievable
// rate, harvested RF energy).

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cre/linalg.hpp"

namespace cre {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative threshold below which the 2x2 Fisher block counts as singular
// and the CRB is reported as +inf.
inline constexpr double eps_fim = 1e-12;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct ScenarioConfig {
    int tx_antennas = 0;          // M
    int sense_rx_antennas = 0;    // N_S
    int id_rx_antennas = 0;       // N_ID
    int eh_rx_antennas = 0;       // N_EH
    double target_angle = 0.0;    // theta, radians
    cplx reflection = 0.0;        // alpha
    int frame_length = 1;         // L
    double power_budget = 0.0;    // P, Watts
    double sigma2_sense = 0.0;    // Watts
    double sigma2_id = 0.0;       // Watts
    cmat h_id;                    // N_ID x M
    cmat h_eh;                    // N_EH x M

    void validate() const {
        if (tx_antennas <= 1) throw ConfigError("scenario: M must exceed 1");
        if (sense_rx_antennas <= 1) throw ConfigError("scenario: N_S must exceed 1");
        if (id_rx_antennas < 1 || eh_rx_antennas < 1)
            throw ConfigError("scenario: receiver antenna counts must be >= 1");
        if (frame_length < 1) throw ConfigError("scenario: L must be >= 1");
        if (!(power_budget > 0)) throw ConfigError("scenario: P must be positive");
        if (!(sigma2_sense > 0) || !(sigma2_id > 0))
            throw ConfigError("scenario: noise powers must be positive");
        if (!(std::abs(reflection) > 0))
            throw ConfigError("scenario: reflection coefficient must be nonzero");
        if (h_id.rows() != id_rx_antennas || h_id.cols() != tx_antennas)
            throw ConfigError("scenario: H_ID shape mismatch");
        if (h_eh.rows() != eh_rx_antennas || h_eh.cols() != tx_antennas)
            throw ConfigError("scenario: H_EH shape mismatch");
    }

    // sigma_S^2 / (2 |alpha|^2 L): converts inverse Fisher traces to rad^2.
    double crb_prefactor() const {
        return sigma2_sense / (2.0 * std::norm(reflection) * frame_length);
    }
};

// ULA steering vector, center reference point, half-wavelength spacing.
// Entry m (0-based) has phase pi * (2m+1-n)/2 * sin(theta).
inline cvec steering(int n, double theta) {
    if (n < 1) throw ConfigError("steering: antenna count must be >= 1");
    cvec a(n);
    const double s = std::sin(theta);
    for (int m = 0; m < n; ++m) {
        const double k = 0.5 * (2 * m + 1 - n);
        a(m) = std::polar(1.0, M_PI * k * s);
    }
    return a;
}

// d/dtheta of the steering vector: entry m = j pi k_m cos(theta) a_m.
inline cvec steering_derivative(int n, double theta) {
    cvec a = steering(n, theta);
    const double c = std::cos(theta);
    for (int m = 0; m < n; ++m) {
        const double k = 0.5 * (2 * m + 1 - n);
        a(m) *= cplx(0.0, M_PI * k * c);
    }
    return a;
}

struct SensingMatrices {
    cmat a;         // N_S x M,  A = a_r a_t^T
    cmat a_dot;     // N_S x M,  product rule in theta
    cmat gram_aa;   // A^H A
    cmat gram_dd;   // Adot^H Adot
    cmat cross_da;  // Adot^H A

    static SensingMatrices build(int m, int n_s, double theta) {
        cvec at = steering(m, theta);
        cvec ar = steering(n_s, theta);
        cvec at_dot = steering_derivative(m, theta);
        cvec ar_dot = steering_derivative(n_s, theta);
        SensingMatrices sm;
        sm.a = ar * at.transpose();
        sm.a_dot = ar_dot * at.transpose() + ar * at_dot.transpose();
        sm.gram_aa = symmetrize(sm.a.adjoint() * sm.a);
        sm.gram_dd = symmetrize(sm.a_dot.adjoint() * sm.a_dot);
        sm.cross_da = sm.a_dot.adjoint() * sm.a;
        return sm;
    }
};

struct CrePoint {
    double crb = kInf;    // rad^2
    double rate = 0.0;    // bps/Hz
    double energy = 0.0;  // Watts
};

// CRB of the target-angle estimate for transmit covariance s (Watts).
inline double crb(const cmat& s, const SensingMatrices& sm,
                  const ScenarioConfig& cfg) {
    const double t_aa = std::real(trace_prod(sm.gram_aa, s));
    const double t_dd = std::real(trace_prod(sm.gram_dd, s));
    const cplx t_da = trace_prod(cmat(sm.cross_da), s);
    // Both diagonal traces are nonnegative quadratic forms; a value at
    // round-off level relative to its gram norm means the Fisher matrix is
    // singular (covariance orthogonal to the sensing subspace).
    const double tr_s = std::abs(real_trace(s));
    if (t_aa <= eps_fim * sm.gram_aa.norm() * tr_s ||
        t_dd <= eps_fim * sm.gram_dd.norm() * tr_s)
        return kInf;
    const double den = t_dd * t_aa - std::norm(t_da);
    const double scale = std::max({t_dd * t_aa, std::norm(t_da), 1e-300});
    if (den < -1e-9 * scale)
        throw ContractViolation("crb: negative Fisher determinant");
    if (den <= eps_fim * scale) return kInf;
    return cfg.crb_prefactor() * t_aa / den;
}

inline double rate(const cmat& s, const ScenarioConfig& cfg) {
    const Eigen::Index n = cfg.h_id.rows();
    cmat inner = cmat::Identity(n, n) +
                 (cfg.h_id * s * cfg.h_id.adjoint()) / cfg.sigma2_id;
    // Rounding can push the argument marginally below PD; clip the spectrum.
    HermEig eig = herm_eig(symmetrize(inner));
    double r = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        r += std::log2(std::max(eig.values(i), 1.0));
    return r;
}

inline double energy(const cmat& s, const ScenarioConfig& cfg) {
    return std::real((cfg.h_eh * s * cfg.h_eh.adjoint()).trace());
}

inline CrePoint evaluate(const cmat& s, const SensingMatrices& sm,
                         const ScenarioConfig& cfg) {
    return CrePoint{crb(s, sm, cfg), rate(s, cfg), energy(s, cfg)};
}

// Internally the solvers work on a rescaled system: trace budget 1,
// sigma_ID^2 folded into the ID channel, EH and Fisher matrices normalized
// to unit spectral norm. Raw magnitudes span ~19 orders in the reference
// scenarios, which would wreck the conditioning of the ellipsoid and the
// conic backend.
struct Normalized {
    int m = 0;
    cmat g;          // N_ID x M, rate(S') = log2 det(I + G S' G^H), tr S' <= 1
    cmat w;          // EH quadratic form, unit spectral norm (zero if H_EH = 0)
    cmat b_aa;       // scaled A^H A
    cmat b_dd;       // scaled Adot^H Adot
    cmat b_da;       // scaled Adot^H A
    double e_scale = 0.0;    // physical energy = e_scale * tr(W S')
    double f_scale = 0.0;    // Fisher trace scale
    double crb_scale = 0.0;  // physical CRB = crb_scale * normalized CRB
    double power = 0.0;      // physical S = power * S'

    static Normalized build(const ScenarioConfig& cfg, const SensingMatrices& sm) {
        Normalized n;
        n.m = cfg.tx_antennas;
        n.power = cfg.power_budget;
        n.g = cfg.h_id * std::sqrt(cfg.power_budget / cfg.sigma2_id);
        const cmat weh = symmetrize(cfg.h_eh.adjoint() * cfg.h_eh);
        const double weh_norm = spectral_norm(weh);
        n.e_scale = cfg.power_budget * weh_norm;
        n.w = weh_norm > 0 ? cmat(weh / weh_norm) : cmat(cmat::Zero(n.m, n.m));
        const double fisher_norm =
            std::max(spectral_norm(sm.gram_aa), spectral_norm(sm.gram_dd));
        n.f_scale = cfg.power_budget * fisher_norm;
        n.b_aa = sm.gram_aa / fisher_norm;
        n.b_dd = sm.gram_dd / fisher_norm;
        n.b_da = sm.cross_da / fisher_norm;
        n.crb_scale = cfg.crb_prefactor() / n.f_scale;
        return n;
    }

    double rate_of(const cmat& s_norm) const {
        const Eigen::Index rows = g.rows();
        cmat inner = cmat::Identity(rows, rows) + g * s_norm * g.adjoint();
        HermEig eig = herm_eig(symmetrize(inner));
        double r = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i)
            r += std::log2(std::max(eig.values(i), 1.0));
        return r;
    }

    double energy_norm_of(const cmat& s_norm) const {
        return std::real(trace_prod(w, s_norm));
    }

    // Relative violation of the CRB constraint in its closed Schur form,
    // t(S) >= 1/gamma1 with t = tr(Bdd S) - |tr(Bda S)|^2 / tr(Baa S).
    // Nonpositive means feasible. When tr(Baa S) sits at solver noise level
    // the cross ratio is noise over noise; the closure drops it and the
    // constraint reduces to tr(Bdd S) >= 1/gamma1.
    double crb_violation_of(const cmat& s_norm, double gamma1,
                            double noise_floor = 1e-6) const {
        const double t_aa = std::real(trace_prod(b_aa, s_norm));
        const double t_dd = std::real(trace_prod(b_dd, s_norm));
        double t = t_dd;
        if (t_aa > noise_floor)
            t -= std::norm(trace_prod(b_da, s_norm)) / t_aa;
        return 1.0 - t * gamma1;
    }

    // Normalized CRB: physical CRB = crb_scale * this.
    double crb_norm_of(const cmat& s_norm) const {
        const double t_aa = std::real(trace_prod(b_aa, s_norm));
        const double t_dd = std::real(trace_prod(b_dd, s_norm));
        const cplx t_da = trace_prod(b_da, s_norm);
        const double den = t_dd * t_aa - std::norm(t_da);
        const double scale = std::max(t_dd * t_aa, std::norm(t_da));
        if (den <= eps_fim * scale || scale == 0.0) return kInf;
        return t_aa / den;
    }
};

}  // namespace cre
