#include "element_ops.hpp"

namespace eitms::kernels::serial {

void element_gradients(const Mesh& mesh, const Eigen::VectorXd& field, ElementVectors& out) {
    const auto ne = static_cast<Eigen::Index>(mesh.num_elements());
    out.resize(ne, 2);
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto& t = mesh.triangle(static_cast<std::size_t>(e));
        out.row(e) = detail::local_gradient(mesh.gradients(static_cast<std::size_t>(e)), detail::local_values(field, t));
    }
}

void stiffness_local(const Mesh& mesh, const Eigen::VectorXd& gamma, ElementLocal9& out) {
    const auto ne = static_cast<Eigen::Index>(mesh.num_elements());
    out.resize(ne, 9);
    for (Eigen::Index e = 0; e < ne; ++e) detail::stiffness_element(mesh, gamma, static_cast<std::size_t>(e), out.row(e).data());
}

void k2_values(const Mesh& mesh, const Eigen::VectorXd& g, const Eigen::VectorXd& z, const K2Coefficients& c,
               Eigen::VectorXd& out) {
    const auto ne = static_cast<Eigen::Index>(mesh.num_elements());
    out.resize(ne);
    for (Eigen::Index e = 0; e < ne; ++e) out[e] = detail::k2_element<false>(mesh, g, z, c, static_cast<std::size_t>(e)).value;
}

void k2_local_gradients(const Mesh& mesh, const Eigen::VectorXd& g, const Eigen::VectorXd& z,
                        const K2Coefficients& c, ElementLocal6& out) {
    const auto ne = static_cast<Eigen::Index>(mesh.num_elements());
    out.resize(ne, 6);
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto r = detail::k2_element<true>(mesh, g, z, c, static_cast<std::size_t>(e));
        out.row(e) << r.dg[0], r.dg[1], r.dg[2], r.dz[0], r.dz[1], r.dz[2];
    }
}

void gather_nodes(const Mesh& mesh, const ElementLocal3& local, Eigen::VectorXd& out) {
    const auto nn = static_cast<Eigen::Index>(mesh.num_nodes());
    out.setZero(nn);
    for (Eigen::Index e = 0; e < local.rows(); ++e) {
        const auto& t = mesh.triangle(static_cast<std::size_t>(e));
        for (int a = 0; a < 3; ++a) out[t[a]] += local(e, a);
    }
}

void current_jacobian(const Mesh& mesh, const std::vector<ElementVectors>& grad_u,
                      const std::vector<ElementVectors>& grad_w, const RowIndex& rows, Eigen::MatrixXd& out) {
    const auto nn = static_cast<Eigen::Index>(mesh.num_nodes());
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.setZero(m, nn);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        const double w = mesh.area(e) / 3.0;
        const auto ei = static_cast<Eigen::Index>(e);
        for (Eigen::Index r = 0; r < m; ++r) {
            const auto [j, k] = rows[static_cast<std::size_t>(r)];
            const double d = w * grad_u[static_cast<std::size_t>(j)].row(ei).dot(grad_w[static_cast<std::size_t>(k)].row(ei));
            for (int a = 0; a < 3; ++a) out(r, t[a]) -= d;
        }
    }
}

}  // namespace eitms::kernels::serial
