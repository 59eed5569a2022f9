#pragma once

// Dense complex linear-algebra substrate shared by all solvers: Hermitian
// eigendecomposition, complex SVD, PSD-cone projection, and stable log-det.
// Everything is a pure function on Eigen matrices.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace cre {

using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;
using cplx = std::complex<double>;

// Singular/eigen values below eps_rank * (largest value) count as zero.
inline constexpr double eps_rank = 1e-9;

struct ContractViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double hermiticity_error(const cmat& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

// (M + M^H)/2; applied to every externally constructed Hermitian matrix.
inline cmat symmetrize(const cmat& m) {
    return 0.5 * (m + m.adjoint());
}

inline void require_hermitian(const cmat& m, double rel_tol = 1e-12,
                              const char* who = "herm_eig") {
    if (m.rows() != m.cols())
        throw ContractViolation(std::string(who) + ": matrix not square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (hermiticity_error(m) > rel_tol * scale * m.rows())
        throw ContractViolation(std::string(who) + ": matrix not Hermitian");
}

struct HermEig {
    rvec values;   // descending
    cmat vectors;  // unitary, columns match values
};

// Hermitian EVD with eigenvalues sorted descending. Ties keep the
// factorization-native relative order.
inline HermEig herm_eig(const cmat& m) {
    require_hermitian(m);
    Eigen::SelfAdjointEigenSolver<cmat> es(symmetrize(m));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("herm_eig: eigensolver failed");
    const Eigen::Index n = m.rows();
    HermEig out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    // Eigen returns ascending; reverse to descending. A stable reverse keeps
    // the native order inside tied clusters.
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = es.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return out;
}

struct Svd {
    cmat u;
    rvec singular_values;  // descending, nonnegative
    cmat v;
};

inline Svd complex_svd(const cmat& m) {
    Eigen::JacobiSVD<cmat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return Svd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

// Numerical rank against eps_rank * largest value.
inline Eigen::Index numerical_rank(const rvec& values, double eps = eps_rank) {
    if (values.size() == 0) return 0;
    const double cutoff = eps * std::abs(values(0));
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (std::abs(values(i)) > cutoff) ++r;
    return r;
}

// Nearest-PSD projection in Frobenius norm: clip negative eigenvalues.
inline cmat psd_project(const cmat& m) {
    HermEig eig = herm_eig(m);
    rvec w = eig.values.cwiseMax(0.0);
    return symmetrize(eig.vectors * w.asDiagonal() * eig.vectors.adjoint());
}

// log2 det of a positive definite Hermitian matrix via Cholesky.
inline double logdet_psd(const cmat& m) {
    require_hermitian(m, 1e-12, "logdet_psd");
    const cmat h = symmetrize(m);
    Eigen::LLT<cmat> llt(h);
    if (llt.info() == Eigen::Success) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            acc += std::log2(std::real(llt.matrixL()(i, i)));
        return 2.0 * acc;
    }
    // Cholesky refused: decide PD-ness from the spectrum.
    HermEig eig = herm_eig(h);
    const double top = eig.values.size() ? std::abs(eig.values(0)) : 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        if (eig.values(i) < -1e-10 * std::max(1.0, top))
            throw std::domain_error("logdet_psd: matrix not positive definite");
        if (eig.values(i) <= 0.0)
            throw std::domain_error("logdet_psd: matrix numerically singular");
        acc += std::log2(eig.values(i));
    }
    return acc;
}

inline double spectral_norm(const cmat& m) {
    if (m.size() == 0) return 0.0;
    return complex_svd(m).singular_values(0);
}

inline double min_eigenvalue(const cmat& h) {
    Eigen::SelfAdjointEigenSolver<cmat> es(symmetrize(h),
                                           Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline double real_trace(const cmat& m) { return m.trace().real(); }

// tr(A B) for square A,B of equal dimension.
inline cplx trace_prod(const cmat& a, const cmat& b) {
    return (a * b).trace();
}

}  // namespace cre
