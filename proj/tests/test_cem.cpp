#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "eitms/cem.hpp"
#include "eitms/phantoms.hpp"
#include "helpers.hpp"

using namespace eitms;

namespace {

// Full (u, I) block system assembled from scratch with 2-point Gauss on electrode edges:
//   int gamma grad u . grad v + sum_k 1/zeta_k int_{e_k} (u - U_k) v = 0
//   I_k - 1/zeta_k int_{e_k} (u - U_k) = 0
Eigen::VectorXd dense_block_currents(const Mesh& m, const NodalField& g, const Eigen::VectorXd& U, const Eigen::VectorXd& zeta) {
    const int n = static_cast<int>(m.num_nodes());
    const int P = static_cast<int>(m.num_electrodes());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + P, n + P);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + P);
    for (const auto& t : m.triangles()) {
        Eigen::Matrix3d C;
        for (int a = 0; a < 3; ++a) C.row(a) << 1.0, m.node(t[a]).x(), m.node(t[a]).y();
        const double area = 0.5 * std::abs(C.determinant());
        const Eigen::Matrix3d coef = C.inverse();  // column a: coefficients of hat a
        const double gm = (g[t[0]] + g[t[1]] + g[t[2]]) / 3.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                A(t[a], t[b]) += gm * area * (coef(1, a) * coef(1, b) + coef(2, a) * coef(2, b));
    }
    const double gp = 0.5 / std::sqrt(3.0);
    for (int k = 0; k < P; ++k) {
        for (const auto& e : m.electrode_edges()[static_cast<std::size_t>(k)]) {
            const double L = (m.node(e[0]) - m.node(e[1])).norm();
            for (double s : {0.5 - gp, 0.5 + gp}) {
                const double phi[2] = {1.0 - s, s};
                const double w = 0.5 * L / zeta[k];
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) A(e[a], e[b]) += w * phi[a] * phi[b];
                    rhs[e[a]] += w * phi[a] * U[k];
                    A(n + k, e[a]) -= w * phi[a];
                }
                rhs[n + k] -= w * U[k];
            }
        }
        A(n + k, n + k) = 1.0;
    }
    const Eigen::VectorXd x = A.fullPivLu().solve(rhs);
    return x.tail(P);
}

NodalField random_positive(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.5, 3.0);
    NodalField g(static_cast<Eigen::Index>(n));
    for (auto& v : g) v = u(rng);
    return g;
}

const Mesh& disk_mesh() {
    static const Mesh m = [] {
        DiskMeshSpec s;
        s.target_edge_length = 0.016;
        return generate_disk_mesh(s);
    }();
    return m;
}

}  // namespace

TEST_CASE("toy two-triangle domain matches the dense block system") {
    const Mesh m({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {eitms::Triangle{0, 1, 2}, eitms::Triangle{0, 2, 3}},
                 {{eitms::Edge{3, 0}}, {eitms::Edge{1, 2}}});
    ExcitationSet ex;
    ex.patterns = {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.3, -0.7)};
    ex.contact_impedance = Eigen::Vector2d(0.5, 2.0);
    const NodalField g = (NodalField(4) << 1.0, 2.0, 3.0, 0.5).finished();
    const auto sol = solve_forward(m, g, ex);
    for (int j = 0; j < 2; ++j) {
        const auto ref = dense_block_currents(m, g, ex.patterns[static_cast<std::size_t>(j)], ex.contact_impedance);
        CHECK((sol.currents[static_cast<std::size_t>(j)] - ref).norm() <= 1e-10 * ref.norm());
    }
}

TEST_CASE("disk and square meshes match the dense block system") {
    std::mt19937_64 rng(2);
    for (int which = 0; which < 2; ++which) {
        const Mesh m = which == 0 ? testing_helpers::square_mesh(8) : disk_mesh();
        const int P = static_cast<int>(m.num_electrodes());
        ExcitationSet ex = ExcitationSet::unit_potentials(P, which == 0 ? 0.1 : 1e-5);
        std::uniform_real_distribution<double> uz(0.5, 2.0);
        for (int k = 0; k < P; ++k) ex.contact_impedance[k] *= uz(rng);
        const NodalField g = random_positive(m.num_nodes(), rng);
        const auto sol = solve_forward(m, g, ex);
        for (int j = 0; j < std::min(P, 4); ++j) {
            const auto ref = dense_block_currents(m, g, ex.patterns[static_cast<std::size_t>(j)], ex.contact_impedance);
            CHECK((sol.currents[static_cast<std::size_t>(j)] - ref).norm() <= 1e-10 * ref.norm());
        }
    }
}

TEST_CASE("assembled system is symmetric positive definite") {
    const Mesh& m = disk_mesh();
    std::mt19937_64 rng(4);
    const NodalField g = random_positive(m.num_nodes(), rng);
    const auto sys = assemble_system(m, g, Eigen::VectorXd::Constant(16, 1e-5));
    const Eigen::MatrixXd A(sys.matrix);
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * A.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0);
    // stiffness annihilates constants
    CHECK((sys.stiffness * Eigen::VectorXd::Ones(A.rows())).cwiseAbs().maxCoeff() < 1e-10 * A.cwiseAbs().maxCoeff());
    for (int k = 0; k < 16; ++k) CHECK(sys.electrode_length[k] == doctest::Approx(m.electrode_length(static_cast<std::size_t>(k))));
    CHECK(sys.electrode_loads.colwise().sum().transpose().isApprox(sys.electrode_length / 1e-5, 1e-12));
}

TEST_CASE("current conservation and reciprocity") {
    const Mesh& m = disk_mesh();
    const auto ex = ExcitationSet::unit_potentials(16, 1e-5);
    std::mt19937_64 rng(8);
    const NodalField g = random_positive(m.num_nodes(), rng);
    const auto sol = solve_forward(m, g, ex);
    Eigen::MatrixXd R(16, 16);
    for (int j = 0; j < 16; ++j) {
        const auto& I = sol.currents[static_cast<std::size_t>(j)];
        CHECK(std::abs(I.sum()) <= 1e-10 * I.norm());
        R.col(j) = I;
        // the driven electrode sources current, grounded ones sink it
        CHECK(I[j] < 0);
    }
    CHECK((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * R.cwiseAbs().maxCoeff());
}

TEST_CASE("scaling theorem") {
    const Mesh& m = disk_mesh();
    const auto ex = ExcitationSet::unit_potentials(16, 1e-5);
    std::mt19937_64 rng(9);
    const NodalField g = random_positive(m.num_nodes(), rng);
    for (double c : {0.1, 2.0, 10.0}) CHECK(check_scaling_theorem(m, g, ex, c) < 1e-8);
}

TEST_CASE("currents are homogeneous of degree one in gamma with fixed zeta * gamma") {
    // I(c gamma) with zeta / c equals c I(gamma)
    const Mesh& m = disk_mesh();
    std::mt19937_64 rng(10);
    const NodalField g = random_positive(m.num_nodes(), rng);
    const auto a = solve_forward(m, g, ExcitationSet::unit_potentials(16, 1e-5));
    const auto b = solve_forward(m, 4.0 * g, ExcitationSet::unit_potentials(16, 1e-5 / 4.0));
    for (int j = 0; j < 16; ++j) CHECK((b.currents[static_cast<std::size_t>(j)] - 4.0 * a.currents[static_cast<std::size_t>(j)]).norm() <=
                                       1e-9 * b.currents[static_cast<std::size_t>(j)].norm());
}

TEST_CASE("Jacobian matches central finite differences") {
    const Mesh& m = disk_mesh();
    const auto ex = ExcitationSet::unit_potentials(16, 1e-5);
    const auto mask = MeasurementMask::exclude_injection(16, 16);
    std::mt19937_64 rng(12);
    const NodalField g = random_positive(m.num_nodes(), rng);
    const auto J = current_jacobian(m, g, ex, mask);
    REQUIRE(J.matrix.rows() == 240);
    REQUIRE(J.matrix.cols() == static_cast<Eigen::Index>(m.num_nodes()));
    const ForwardModel model(m, ex);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(m.num_nodes()) - 1);
    for (int r = 0; r < 5; ++r) {
        const int i = pick(rng);
        const double h = 1e-6 * g[i];
        NodalField gp = g, gm = g;
        gp[i] += h;
        gm[i] -= h;
        const Eigen::VectorXd fd = (model.stacked_currents(model.solve(gp), mask) - model.stacked_currents(model.solve(gm), mask)) / (2 * h);
        CHECK((fd - J.matrix.col(i)).norm() <= 1e-5 * J.matrix.col(i).norm());
    }
    const auto lin = model.linearize(g, mask);
    CHECK((lin.jacobian.matrix - J.matrix).cwiseAbs().maxCoeff() <= 1e-12 * J.matrix.cwiseAbs().maxCoeff());
}

TEST_CASE("Jacobian respects mirror symmetry") {
    const Mesh& m = disk_mesh();
    const auto ex = ExcitationSet::unit_potentials(16, 1e-5);
    const auto mask = MeasurementMask::exclude_injection(16, 16);
    const auto J = current_jacobian(m, NodalField::Ones(static_cast<Eigen::Index>(m.num_nodes())), ex, mask);
    // node i at (x, y) and its mirror i' at (x, -y); row (j, k) and its mirror ((16-j)%16, (16-k)%16)
    std::map<std::pair<double, double>, int> id;
    for (std::size_t i = 0; i < m.num_nodes(); ++i) id[{m.node(static_cast<int>(i)).x(), m.node(static_cast<int>(i)).y()}] = static_cast<int>(i);
    const auto rows = mask.rows();
    std::map<std::pair<int, int>, int> row_of;
    for (std::size_t r = 0; r < rows.size(); ++r) row_of[rows[r]] = static_cast<int>(r);
    const double scale = J.matrix.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (std::size_t i = 0; i < m.num_nodes(); i += 7) {
        const Point& p = m.node(static_cast<int>(i));
        const int mi = id.at({p.x(), -p.y()});
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto [j, k] = rows[r];
            const int mr = row_of.at({(16 - j) % 16, (16 - k) % 16});
            worst = std::max(worst, std::abs(J.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) - J.matrix(mr, mi)));
        }
    }
    CHECK(worst <= 1e-9 * scale);
}

TEST_CASE("homogeneous fit recovers a constant conductivity") {
    const Mesh& m = disk_mesh();
    const auto ex = ExcitationSet::unit_potentials(16, 1e-5);
    MeasurementSet ms = simulate_measurements(m, NodalField::Constant(static_cast<Eigen::Index>(m.num_nodes()), 2.5), ex, 0.0, 1);
    build_weights(ms, 1.0);
    const auto fit = fit_homogeneous(m, ex, ms);
    CHECK(fit.value == doctest::Approx(2.5).epsilon(1e-6));
    CHECK_FALSE(fit.at_bound);
    CHECK(fit.misfit < 1e-6);
}

TEST_CASE("forward model input validation") {
    const Mesh& m = disk_mesh();
    auto ex = ExcitationSet::unit_potentials(16, 1e-5);
    NodalField g = NodalField::Ones(static_cast<Eigen::Index>(m.num_nodes()));
    g[3] = -1.0;
    CHECK_THROWS(solve_forward(m, g, ex));
    CHECK_THROWS(solve_forward(m, NodalField::Ones(5), ex));
    ex.contact_impedance[2] = 0.0;
    CHECK_THROWS(solve_forward(m, NodalField::Ones(static_cast<Eigen::Index>(m.num_nodes())), ex));
    CHECK_THROWS(ExcitationSet::unit_potentials(15, 1e-5).validate(m));
}
