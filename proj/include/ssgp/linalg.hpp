#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <iostream>
#include <span>
#include <string_view>

#include "ssgp/error.hpp"

namespace ssgp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

namespace log {

inline bool& warnings_enabled() {
    static bool enabled = true;
    return enabled;
}

inline void warn(std::string_view message) {
    if (warnings_enabled()) std::cerr << "warning: " << message << '\n';
}

}  // namespace log

inline MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

inline void symmetrize(MatrixXd& m) { m = symmetrized(m); }

inline MatrixXd block_diag(const MatrixXd& a, const MatrixXd& b) {
    MatrixXd out = MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

inline MatrixXd block_diag(std::span<const MatrixXd> blocks) {
    Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    MatrixXd out = MatrixXd::Zero(rows, cols);
    Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
    MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline VectorXd kron(const VectorXd& a, const VectorXd& b) {
    VectorXd out(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

/// Kronecker sum a ⊕ b = a ⊗ I + I ⊗ b of two square matrices.
inline MatrixXd kron_sum(const MatrixXd& a, const MatrixXd& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols()) throw ShapeError("kron_sum: operands must be square");
    return kron(a, MatrixXd::Identity(b.rows(), b.rows())) + kron(MatrixXd::Identity(a.rows(), a.rows()), b);
}

inline double min_eigenvalue(const MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

namespace detail {

// Padé coefficients for the [m/m] approximant of exp, m = 3, 5, 7, 9, 13.
inline constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
inline constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
inline constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                                 25200.0,    1512.0,    56.0,      1.0};
inline constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                                  30270240.0,    2162160.0,    110880.0,     3960.0,
                                                  90.0,          1.0};
inline constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0, 129060195264000.0,
    10559470521600.0,    670442572800.0,      33522128640.0,      1323241920.0,       40840800.0,
    960960.0,            16380.0,             182.0,              1.0};

// Maximal 1-norms for which the degree-m approximant meets unit roundoff.
inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e0;
inline constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
MatrixXd pade_low_order(const MatrixXd& a, const std::array<double, N>& b) {
    const Index n = a.rows();
    const MatrixXd ident = MatrixXd::Identity(n, n);
    const MatrixXd a2 = a * a;
    MatrixXd power = ident;
    MatrixXd u_inner = b[1] * ident;
    MatrixXd v = b[0] * ident;
    for (std::size_t j = 2; j < N; j += 2) {
        power = power * a2;
        v += b[j] * power;
        if (j + 1 < N) u_inner += b[j + 1] * power;
    }
    const MatrixXd u = a * u_inner;
    return (v - u).partialPivLu().solve(v + u);
}

inline MatrixXd pade13(const MatrixXd& a) {
    const auto& b = kPade13;
    const Index n = a.rows();
    const MatrixXd ident = MatrixXd::Identity(n, n);
    const MatrixXd a2 = a * a;
    const MatrixXd a4 = a2 * a2;
    const MatrixXd a6 = a4 * a2;
    const MatrixXd u_inner =
        a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
    const MatrixXd u = a * u_inner;
    const MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
    return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with a Padé approximant whose degree
/// is chosen from the 1-norm of the argument.
inline MatrixXd matrix_exponential(const MatrixXd& m) {
    if (m.rows() != m.cols()) throw ShapeError("matrix_exponential: matrix must be square");
    if (m.size() == 0) return m;
    if (!m.allFinite()) throw NumericalError("matrix_exponential: non-finite input");

    const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 == 0.0) return MatrixXd::Identity(m.rows(), m.cols());
    if (norm1 <= detail::kTheta3) return detail::pade_low_order(m, detail::kPade3);
    if (norm1 <= detail::kTheta5) return detail::pade_low_order(m, detail::kPade5);
    if (norm1 <= detail::kTheta7) return detail::pade_low_order(m, detail::kPade7);
    if (norm1 <= detail::kTheta9) return detail::pade_low_order(m, detail::kPade9);

    int squarings = 0;
    if (norm1 > detail::kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / detail::kTheta13)));
    MatrixXd result = detail::pade13(std::ldexp(1.0, -squarings) * m);
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

/// Symmetric PSD square root via eigen-decomposition; tiny negative eigenvalues clamp to zero.
inline MatrixXd psd_sqrt_factor(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(m));
    const VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace ssgp
