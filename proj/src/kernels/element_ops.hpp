#pragma once

// Per-element building blocks used by both kernel variants.

#include <Eigen/Core>

#include "eitms/kernels.hpp"
#include "eitms/mesh.hpp"

namespace eitms::kernels::detail {

inline Eigen::Vector3d local_values(const Eigen::VectorXd& f, const Triangle& t) {
    return {f[t[0]], f[t[1]], f[t[2]]};
}

inline Eigen::RowVector2d local_gradient(const BasisGradients& B, const Eigen::Vector3d& v) {
    return v.transpose() * B;
}

inline void stiffness_element(const Mesh& mesh, const Eigen::VectorXd& gamma, std::size_t e, double* out9) {
    const auto& t = mesh.triangle(e);
    const auto& B = mesh.gradients(e);
    const double w = (gamma[t[0]] + gamma[t[1]] + gamma[t[2]]) / 3.0 * mesh.area(e);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out9[3 * a + b] = w * B.row(a).dot(B.row(b));
}

struct K2Local {
    double value;
    double dg[3];
    double dz[3];
};

template <bool WithGradient>
inline K2Local k2_element(const Mesh& mesh, const Eigen::VectorXd& g, const Eigen::VectorXd& z,
                          const K2Coefficients& c, std::size_t e) {
    const auto& t = mesh.triangle(e);
    const auto& B = mesh.gradients(e);
    const double A = mesh.area(e);
    const Eigen::Vector3d zl = local_values(z, t);
    const Eigen::Vector3d gl = local_values(g, t);
    const Eigen::RowVector2d gz = local_gradient(B, zl);
    const Eigen::RowVector2d gg = local_gradient(B, gl);
    const double Gz = gz.squaredNorm();
    const double Gg = gg.squaredNorm();
    const double S = zl.sum();
    const double S2 = zl.squaredNorm();
    // exact P1 integrals: int z^2 = A (S2 + S^2) / 12, int z = A S / 3
    const double Q = c.quad_factor * A * (S2 + S * S) / 12.0;
    const double R = c.quad_factor * (A * (S2 + S * S) / 12.0 - 2.0 * A * S / 3.0 + A);

    K2Local out{c.lambda * A * Gz + Gg * Q + c.jump * R, {0, 0, 0}, {0, 0, 0}};
    if constexpr (WithGradient) {
        for (int a = 0; a < 3; ++a) {
            const double dQ = c.quad_factor * A * (zl[a] + S) / 6.0;
            const double dR = dQ - c.quad_factor * 2.0 * A / 3.0;
            out.dg[a] = 2.0 * Q * gg.dot(B.row(a));
            out.dz[a] = 2.0 * c.lambda * A * gz.dot(B.row(a)) + Gg * dQ + c.jump * dR;
        }
    }
    return out;
}

inline int local_slot(const Triangle& t, int node) { return t[0] == node ? 0 : (t[1] == node ? 1 : 2); }

}  // namespace eitms::kernels::detail
