#include "element_ops.hpp"

namespace eitms::kernels::omp {

void element_gradients(const Mesh& mesh, const Eigen::VectorXd& field, ElementVectors& out) {
    const auto ne = static_cast<Eigen::Index>(mesh.num_elements());
    out.resize(ne, 2);
#pragma omp parallel for schedule(static)
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto& t = mesh.triangle(static_cast<std::size_t>(e));
        out.row(e) = detail::local_gradient(mesh.gradients(static_cast<std::size_t>(e)), detail::local_values(field, t));
    }
}

void stiffness_local(const Mesh& mesh, const Eigen::VectorXd& gamma, ElementLocal9& out) {
    const auto ne = static_cast<Eigen::Index>(mesh.num_elements());
    out.resize(ne, 9);
#pragma omp parallel for schedule(static)
    for (Eigen::Index e = 0; e < ne; ++e) detail::stiffness_element(mesh, gamma, static_cast<std::size_t>(e), out.row(e).data());
}

void k2_values(const Mesh& mesh, const Eigen::VectorXd& g, const Eigen::VectorXd& z, const K2Coefficients& c,
               Eigen::VectorXd& out) {
    const auto ne = static_cast<Eigen::Index>(mesh.num_elements());
    out.resize(ne);
#pragma omp parallel for schedule(static)
    for (Eigen::Index e = 0; e < ne; ++e) out[e] = detail::k2_element<false>(mesh, g, z, c, static_cast<std::size_t>(e)).value;
}

void k2_local_gradients(const Mesh& mesh, const Eigen::VectorXd& g, const Eigen::VectorXd& z,
                        const K2Coefficients& c, ElementLocal6& out) {
    const auto ne = static_cast<Eigen::Index>(mesh.num_elements());
    out.resize(ne, 6);
#pragma omp parallel for schedule(static)
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto r = detail::k2_element<true>(mesh, g, z, c, static_cast<std::size_t>(e));
        out.row(e) << r.dg[0], r.dg[1], r.dg[2], r.dz[0], r.dz[1], r.dz[2];
    }
}

void gather_nodes(const Mesh& mesh, const ElementLocal3& local, Eigen::VectorXd& out) {
    const auto nn = static_cast<Eigen::Index>(mesh.num_nodes());
    out.resize(nn);
    const auto& ptr = mesh.node_element_offsets();
    const auto& idx = mesh.node_element_indices();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nn; ++i) {
        double s = 0.0;
        for (int p = ptr[static_cast<std::size_t>(i)]; p < ptr[static_cast<std::size_t>(i) + 1]; ++p) {
            const int e = idx[static_cast<std::size_t>(p)];
            s += local(e, detail::local_slot(mesh.triangle(static_cast<std::size_t>(e)), static_cast<int>(i)));
        }
        out[i] = s;
    }
}

void current_jacobian(const Mesh& mesh, const std::vector<ElementVectors>& grad_u,
                      const std::vector<ElementVectors>& grad_w, const RowIndex& rows, Eigen::MatrixXd& out) {
    const auto nn = static_cast<Eigen::Index>(mesh.num_nodes());
    const auto ne = static_cast<Eigen::Index>(mesh.num_elements());
    const auto m = static_cast<Eigen::Index>(rows.size());

    // column E holds A_E/3 grad u^j . grad w^k for every measurement row
    Eigen::MatrixXd dots(m, ne);
#pragma omp parallel for schedule(static)
    for (Eigen::Index e = 0; e < ne; ++e) {
        const double w = mesh.area(static_cast<std::size_t>(e)) / 3.0;
        for (Eigen::Index r = 0; r < m; ++r) {
            const auto [j, k] = rows[static_cast<std::size_t>(r)];
            dots(r, e) = w * grad_u[static_cast<std::size_t>(j)].row(e).dot(grad_w[static_cast<std::size_t>(k)].row(e));
        }
    }

    out.resize(m, nn);
    const auto& ptr = mesh.node_element_offsets();
    const auto& idx = mesh.node_element_indices();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nn; ++i) {
        auto col = out.col(i);
        col.setZero();
        for (int p = ptr[static_cast<std::size_t>(i)]; p < ptr[static_cast<std::size_t>(i) + 1]; ++p)
            col -= dots.col(idx[static_cast<std::size_t>(p)]);
    }
}

}  // namespace eitms::kernels::omp
