#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "eitms/regularizers.hpp"
#include "helpers.hpp"

namespace testing_helpers {

using eitms::BoxConstraints;
using eitms::NodalField;

struct Parts {
    double grad_z, z2_grad_g, jump;
};

// Integrals of the three terms by 7-point quadrature from the vertex data alone.
inline Parts quadrature_parts(const Mesh& m, const NodalField& g, const NodalField& z, double lambda, double alpha) {
    const auto& t = m.triangle(0);
    const Point p0 = m.node(t[0]), p1 = m.node(t[1]), p2 = m.node(t[2]);
    Eigen::Matrix2d Jt;
    Jt << (p1 - p0).transpose(), (p2 - p0).transpose();
    const double area = 0.5 * std::abs(Jt.determinant());
    // gradient of a linear field from vertex values: Jt * grad = (f1 - f0, f2 - f0)
    auto grad = [&](const NodalField& f) {
        return Eigen::Vector2d(Jt.inverse() * Eigen::Vector2d(f[t[1]] - f[t[0]], f[t[2]] - f[t[0]]));
    };
    const double gg = grad(g).squaredNorm(), gz = grad(z).squaredNorm();
    Parts p{0, 0, 0};
    for (const auto& q : gauss7()) {
        const double zq = q.l0 * z[t[0]] + q.l1 * z[t[1]] + q.l2 * z[t[2]];
        p.grad_z += q.w * area * lambda * gz;
        p.z2_grad_g += q.w * area * zq * zq * gg;
        p.jump += q.w * area * alpha * alpha * (zq - 1) * (zq - 1) / (4 * lambda);
    }
    return p;
}

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// min 0.5 |K1 g - b|^2 + beta |g - gk|^2 + w |Lg g + Lz z + c|_1  over the box,
// by a log-barrier method on the epigraph form with variables (g, z, t).
struct OracleResult {
    Eigen::VectorXd g, z;
    double objective;
};

inline OracleResult barrier_oracle(const Eigen::MatrixXd& K1, const Eigen::VectorXd& b, double beta, const Eigen::VectorXd& gk,
                            const Eigen::MatrixXd& Lg, const Eigen::MatrixXd& Lz, const Eigen::VectorXd& c, double w,
                            const BoxConstraints& box, bool with_z) {
    const Eigen::Index n = gk.size(), m = Lg.rows();
    const Eigen::Index nz = with_z ? n : 0;
    const Eigen::Index N = n + nz + m;
    // constraints A x + d >= 0
    const Eigen::Index nc = 2 * m + 2 * n + 2 * nz;
    MatL A = MatL::Zero(nc, N);
    VecL d = VecL::Zero(nc);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < m; ++i, r += 2) {
        for (int sgn : {-1, 1}) {
            const Eigen::Index row = r + (sgn > 0);
            A.row(row).head(n) = (sgn * Lg.row(i)).cast<long double>();
            if (with_z) A.row(row).segment(n, nz) = (sgn * Lz.row(i)).cast<long double>();
            A(row, n + nz + i) = 1;
            d[row] = sgn * c[i];
        }
    }
    for (Eigen::Index i = 0; i < n; ++i, r += 2) {
        A(r, i) = 1;
        d[r] = -box.gamma_min;
        A(r + 1, i) = -1;
        d[r + 1] = box.gamma_max;
    }
    for (Eigen::Index i = 0; i < nz; ++i, r += 2) {
        A(r, n + i) = 1;
        d[r] = -box.z_min;
        A(r + 1, n + i) = -1;
        d[r + 1] = box.z_max;
    }
    const MatL Kl = K1.cast<long double>();
    const VecL bl = b.cast<long double>(), gkl = gk.cast<long double>();
    MatL Hf = MatL::Zero(N, N);
    Hf.topLeftCorner(n, n) = Kl.transpose() * Kl + 2.0L * beta * MatL::Identity(n, n);
    auto f = [&](const VecL& x) {
        const VecL g = x.head(n);
        return 0.5L * (Kl * g - bl).squaredNorm() + beta * (g - gkl).squaredNorm() + w * x.tail(m).sum();
    };
    auto grad_f = [&](const VecL& x) {
        VecL gr = VecL::Zero(N);
        const VecL g = x.head(n);
        gr.head(n) = Kl.transpose() * (Kl * g - bl) + 2.0L * beta * (g - gkl);
        gr.tail(m).setConstant(w);
        return gr;
    };

    VecL x = VecL::Zero(N);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = 0.5L * (box.gamma_min + std::min(box.gamma_max, 10.0 * box.gamma_min + 10.0));
    for (Eigen::Index i = 0; i < nz; ++i) x[n + i] = 0.5L * (box.z_min + box.z_max);
    {
        const VecL res = A.leftCols(n + nz) * x.head(n + nz);
        for (Eigen::Index i = 0; i < m; ++i) x[n + nz + i] = std::abs(res[2 * i + 1] + d[2 * i + 1]) + 1;
    }
    for (long double tau = 1; static_cast<long double>(nc) / tau > 1e-16L; tau *= 8) {
        for (int it = 0; it < 200; ++it) {
            const VecL s = A * x + d;
            const VecL inv = s.cwiseInverse();
            const VecL gr = tau * grad_f(x) - A.transpose() * inv;
            const MatL H = tau * Hf + A.transpose() * inv.cwiseAbs2().asDiagonal() * A;
            const VecL dx = -H.ldlt().solve(gr);
            const long double dec = -gr.dot(dx);
            // below this the barrier value is at long-double resolution
            if (dec < 1e-14L + 1e-16L * tau * std::abs(f(x))) break;
            long double step = 1;
            auto phi = [&](const VecL& y) {
                const VecL sy = A * y + d;
                if (sy.minCoeff() <= 0) return std::numeric_limits<long double>::infinity();
                return tau * f(y) - sy.array().log().sum();
            };
            const long double p0 = phi(x);
            while (phi(x + step * dx) > p0 - 0.25L * step * dec && step > 1e-30L) step *= 0.5L;
            if (step <= 1e-30L) break;
            x += step * dx;
        }
    }
    OracleResult out;
    out.g = x.head(n).cast<double>();
    out.z = with_z ? Eigen::VectorXd(x.segment(n, nz).cast<double>()) : Eigen::VectorXd();
    const Eigen::VectorXd res = Lg * out.g + (with_z ? Eigen::VectorXd(Lz * out.z) : Eigen::VectorXd::Zero(m)) + c;
    out.objective = 0.5 * (K1 * out.g - b).squaredNorm() + beta * (out.g - gk).squaredNorm() + w * res.lpNorm<1>();
    return out;
}

}  // namespace testing_helpers
