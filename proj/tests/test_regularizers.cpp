#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "eitms/regularizers.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace eitms;
using testing_helpers::gauss7;
using testing_helpers::golden_min;
using testing_helpers::Parts;
using testing_helpers::quadrature_parts;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

const Mesh& disk_mesh() {
    static const Mesh m = [] {
        DiskMeshSpec s;
        s.target_edge_length = 0.016;
        return generate_disk_mesh(s);
    }();
    return m;
}

NodalField rand_field(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    NodalField f(static_cast<Eigen::Index>(n));
    for (auto& v : f) v = u(rng);
    return f;
}

}  // namespace

TEST_CASE("K2 element values match 7-point quadrature (exact mode) and halve in compatibility mode") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0, worst_half = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Mesh m = testing_helpers::random_triangle(rng, std::pow(10.0, -3 + 3 * u(rng)));
        NodalField g(3), z(3);
        for (int a = 0; a < 3; ++a) {
            g[a] = std::pow(10.0, -2 + 4 * u(rng));
            z[a] = u(rng);
        }
        ATParams p;
        p.lambda = std::pow(10.0, -4 + 5 * u(rng));
        p.alpha = std::pow(10.0, -3 + 2 * u(rng));
        const Parts q = quadrature_parts(m, g, z, p.lambda, p.alpha);
        worst = std::max(worst, rel(k2_apply(m, g, z, p)[0], q.grad_z + q.z2_grad_g + q.jump));
        p.halved_quadrature = true;
        worst_half = std::max(worst_half, rel(k2_apply(m, g, z, p)[0], q.grad_z + 0.5 * (q.z2_grad_g + q.jump)));
    }
    CHECK(worst < 1e-12);
    CHECK(worst_half < 1e-12);
}

TEST_CASE("F_lambda sums the element values; z = 1 reduces it to the squared gradient") {
    const Mesh& m = disk_mesh();
    std::mt19937_64 rng(22);
    const NodalField g = rand_field(m.num_nodes(), rng, 0.5, 2.0);
    const NodalField z = rand_field(m.num_nodes(), rng, 0.0, 1.0);
    ATParams p;
    const Eigen::VectorXd v = k2_apply(m, g, z, p);
    CHECK(v.minCoeff() >= 0);
    CHECK(eval_F_lambda(m, g, z, p) == v.sum());
    const NodalField one = NodalField::Ones(g.size());
    CHECK(eval_F_lambda(m, g, one, p) == doctest::Approx(eval_F_grad(m, g, 1.0)).epsilon(1e-12));
    // constant gamma, z = 1: zero
    CHECK(eval_F_lambda(m, one, one, p) == doctest::Approx(0.0));
    // lambda enters as lambda A + B + C / lambda
    auto parts = [&](double lam) {
        ATParams q = p;
        q.lambda = lam;
        return eval_F_lambda(m, g, z, q);
    };
    const double l1 = 1e-3, l2 = 1e-2, l3 = 1e-1;
    Eigen::Matrix3d M;
    M << l1, 1, 1 / l1, l2, 1, 1 / l2, l3, 1, 1 / l3;
    const Eigen::Vector3d c = M.fullPivLu().solve(Eigen::Vector3d(parts(l1), parts(l2), parts(l3)));
    CHECK(parts(0.05) == doctest::Approx(c[0] * 0.05 + c[1] + c[2] / 0.05).epsilon(1e-10));
}

TEST_CASE("K2 Jacobian matches central finite differences") {
    const Mesh& m = disk_mesh();
    std::mt19937_64 rng(23);
    const NodalField g = rand_field(m.num_nodes(), rng, 0.5, 2.0);
    const NodalField z = rand_field(m.num_nodes(), rng, 0.0, 1.0);
    ATParams p;
    p.lambda = 1e-2;
    const auto J = k2_jacobian(m, g, z, p);
    const Eigen::MatrixXd Jd(J);
    const auto n = g.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, 2 * n - 1);
    for (int r = 0; r < 20; ++r) {
        const auto i = pick(rng);
        NodalField gp = g, gm = g, zp = z, zm = z;
        const double h = 1e-7;
        if (i < n) {
            gp[i] += h;
            gm[i] -= h;
        } else {
            zp[i - n] += h;
            zm[i - n] -= h;
        }
        const Eigen::VectorXd fd = (k2_apply(m, gp, zp, p) - k2_apply(m, gm, zm, p)) / (2 * h);
        CHECK((fd - Jd.col(i)).norm() <= 1e-6 * std::max(Jd.col(i).norm(), 1e-8));
    }
    // the transposed product and Frobenius norm agree with the assembled matrix
    kernels::ElementLocal6 local;
    kernels::omp::k2_local_gradients(m, g, z, p.coefficients(), local);
    const Eigen::VectorXd y = rand_field(m.num_elements(), rng, -1.0, 1.0);
    const auto [tg, tz] = k2_jacobian_transpose_apply(m, local, y);
    const Eigen::VectorXd ref = Jd.transpose() * y;
    CHECK((tg - ref.head(n)).norm() <= 1e-12 * ref.norm());
    CHECK((tz - ref.tail(n)).norm() <= 1e-12 * ref.norm());
    CHECK(k2_jacobian_frobenius(local) == doctest::Approx(Jd.norm()).epsilon(1e-12));
}

TEST_CASE("prox oracles against brute-force minimization") {
    std::mt19937_64 rng(24);
    std::normal_distribution<double> nrm(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double e1 = 0, e2 = 0, eh = 0, ed = 0;
    for (int i = 0; i < 1000; ++i) {
        // prox of s F1^*, F1^*(x) = 0.5 x^2 + b x
        const double v = 3 * nrm(rng), b = 3 * nrm(rng), s = std::pow(10.0, -3 + 5 * u(rng));
        const long double x1 = golden_min(
            [&](long double x) { return 0.5L * (x - v) * (x - v) + s * (0.5L * x * x + b * x); }, -40.0L - 40 * s * std::abs(b),
            40.0L + 40 * s * std::abs(b));
        const double got1 = prox_F1_conj(Eigen::VectorXd::Constant(1, v), s, Eigen::VectorXd::Constant(1, b))[0];
        e1 = std::max(e1, std::abs(got1 - static_cast<double>(x1)) / std::max(1.0, std::abs(got1)));

        // prox of F2^*: indicator of [-1, 1]
        const long double x2 = golden_min([&](long double x) { return (x - v) * (x - v); }, -1.0L, 1.0L);
        e2 = std::max(e2, std::abs(prox_F2_conj(Eigen::VectorXd::Constant(1, v))[0] - static_cast<double>(x2)));

        // box projection for gamma and z
        BoxConstraints box;
        box.gamma_min = 0.1 * u(rng) + 1e-6;
        box.gamma_max = box.gamma_min + 5 * u(rng) + 1e-3;
        const double vg = 3 * nrm(rng), vz = 0.5 + nrm(rng);
        const long double xg = golden_min([&](long double x) { return (x - vg) * (x - vg); }, box.gamma_min, box.gamma_max);
        const long double xz = golden_min([&](long double x) { return (x - vz) * (x - vz); }, 0.0L, 1.0L);
        const auto [pg, pz] = prox_H(NodalField::Constant(1, vg), NodalField::Constant(1, vz), box);
        eh = std::max({eh, std::abs(pg[0] - static_cast<double>(xg)), std::abs(pz[0] - static_cast<double>(xz))});

        // TV dual: projection onto the disk of radius a, brute force in polar coordinates
        const double a = std::pow(10.0, -2 + 2 * u(rng));
        const Eigen::Vector2d w(2 * a * nrm(rng), 2 * a * nrm(rng));
        auto dist2 = [&](long double r, long double th) {
            const long double dx = r * std::cos(th) - w.x(), dy = r * std::sin(th) - w.y();
            return dx * dx + dy * dy;
        };
        auto best_r = [&](long double th) { return golden_min([&](long double r) { return dist2(r, th); }, 0.0L, a); };
        long double th0 = 0, f0 = 1e300;
        for (int k = 0; k < 720; ++k) {
            const long double th = 2 * std::numbers::pi_v<long double> * k / 720;
            const long double f = dist2(best_r(th), th);
            if (f < f0) {
                f0 = f;
                th0 = th;
            }
        }
        const long double step = 2 * std::numbers::pi_v<long double> / 720;
        const long double th = golden_min([&](long double t) { return dist2(best_r(t), t); }, th0 - step, th0 + step, 120);
        const long double r = best_r(th);
        const Eigen::Vector2d brute(static_cast<double>(r * std::cos(th)), static_cast<double>(r * std::sin(th)));
        Eigen::VectorXd wv(2);
        wv << w.x(), w.y();
        const Eigen::VectorXd got = project_disks(wv, a);
        ed = std::max(ed, (got - brute).norm() / std::max(1.0, a));
    }
    CHECK(e1 < 1e-8);
    CHECK(e2 < 1e-8);
    CHECK(eh < 1e-8);
    CHECK(ed < 1e-8);
    // F2^* prox is independent of the step: the same call serves any s
    CHECK(prox_F2_conj(Eigen::Vector3d(-3, 0.2, 7)) == Eigen::Vector3d(-1, 0.2, 1));
    CHECK_THROWS(prox_F1_conj(Eigen::VectorXd::Ones(2), 0.0, Eigen::VectorXd::Ones(2)));
}

TEST_CASE("TV and smooth-gradient operators") {
    const Mesh& m = disk_mesh();
    NodalField x(static_cast<Eigen::Index>(m.num_nodes()));
    for (std::size_t i = 0; i < m.num_nodes(); ++i) x[static_cast<Eigen::Index>(i)] = 3.0 * m.node(static_cast<int>(i)).x();
    CHECK(eval_TV(m, x, 0.5) == doctest::Approx(0.5 * 3.0 * m.total_area()).epsilon(1e-10));
    CHECK(eval_F_grad(m, x, 2.0) == doctest::Approx(2.0 * 9.0 * m.total_area()).epsilon(1e-10));
    const NodalField c = NodalField::Constant(x.size(), 4.2);
    CHECK(eval_TV(m, c, 1.0) == doctest::Approx(0.0));
    // operator forms
    std::mt19937_64 rng(25);
    const NodalField g = rand_field(m.num_nodes(), rng, 0.5, 2.0);
    const Eigen::VectorXd Dg = tv_operator(m) * g;
    double tv = 0;
    for (Eigen::Index i = 0; i + 1 < Dg.size(); i += 2) tv += std::hypot(Dg[i], Dg[i + 1]);
    CHECK(tv == doctest::Approx(eval_TV(m, g, 1.0)).epsilon(1e-12));
    const Eigen::VectorXd Gg = grad_least_squares_operator(m, 0.3) * g;
    CHECK(0.5 * Gg.squaredNorm() == doctest::Approx(eval_F_grad(m, g, 0.3)).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
    ATParams p;
    p.lambda = 0;
    CHECK_THROWS(p.validate());
    p = {};
    p.epsilon_lambda = 1.0;
    CHECK_THROWS(p.validate());
    BoxConstraints b;
    b.gamma_min = 2;
    b.gamma_max = 1;
    CHECK_THROWS(b.validate());
    CHECK(ATParams{}.coefficients().jump == doctest::Approx(1e-4 / 4e-3));
}
