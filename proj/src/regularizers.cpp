#include "eitms/regularizers.hpp"

#include <cmath>
#include <stdexcept>

namespace eitms {

void ATParams::validate() const {
    if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");
    if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
    if (!(epsilon_lambda >= 0 && epsilon_lambda < 1)) throw std::invalid_argument("epsilon_lambda must lie in [0, 1)");
}

kernels::K2Coefficients ATParams::coefficients() const {
    return {lambda, alpha * alpha / (4.0 * lambda), halved_quadrature ? 0.5 : 1.0};
}

void BoxConstraints::validate() const {
    if (!(gamma_min > 0 && gamma_min < gamma_max)) throw std::invalid_argument("need 0 < gamma_min < gamma_max");
    if (!(z_min <= z_max)) throw std::invalid_argument("need z_min <= z_max");
}

namespace {
void check_sizes(const Mesh& mesh, const NodalField& gamma, const NodalField& z) {
    if (static_cast<std::size_t>(gamma.size()) != mesh.num_nodes() || static_cast<std::size_t>(z.size()) != mesh.num_nodes())
        throw std::invalid_argument("field sizes do not match mesh nodes");
}
}  // namespace

Eigen::VectorXd k2_apply(const Mesh& mesh, const NodalField& gamma, const NodalField& z, const ATParams& p) {
    check_sizes(mesh, gamma, z);
    Eigen::VectorXd out;
    kernels::omp::k2_values(mesh, gamma, z, p.coefficients(), out);
    return out;
}

double eval_F_lambda(const Mesh& mesh, const NodalField& gamma, const NodalField& z, const ATParams& p) {
    return k2_apply(mesh, gamma, z, p).sum();
}

Eigen::SparseMatrix<double> k2_jacobian(const Mesh& mesh, const NodalField& gamma, const NodalField& z, const ATParams& p) {
    check_sizes(mesh, gamma, z);
    kernels::ElementLocal6 local;
    kernels::omp::k2_local_gradients(mesh, gamma, z, p.coefficients(), local);
    const auto n = static_cast<int>(mesh.num_nodes());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(6 * mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        const auto r = static_cast<Eigen::Index>(e);
        for (int a = 0; a < 3; ++a) {
            trip.emplace_back(static_cast<int>(e), t[a], local(r, a));
            trip.emplace_back(static_cast<int>(e), n + t[a], local(r, 3 + a));
        }
    }
    Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(mesh.num_elements()), 2 * n);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> k2_jacobian_transpose_apply(const Mesh& mesh,
                                                                         const kernels::ElementLocal6& local,
                                                                         const Eigen::VectorXd& y) {
    kernels::ElementLocal3 lg = local.leftCols<3>().array().colwise() * y.array();
    kernels::ElementLocal3 lz = local.rightCols<3>().array().colwise() * y.array();
    std::pair<Eigen::VectorXd, Eigen::VectorXd> out;
    kernels::omp::gather_nodes(mesh, lg, out.first);
    kernels::omp::gather_nodes(mesh, lz, out.second);
    return out;
}

double k2_jacobian_frobenius(const kernels::ElementLocal6& local) { return local.norm(); }

Eigen::VectorXd prox_F1_conj(const Eigen::VectorXd& y, double s, const Eigen::VectorXd& b) {
    if (!(s > 0)) throw std::invalid_argument("dual step must be positive");
    return (y - s * b) / (1.0 + s);
}

Eigen::VectorXd prox_F2_conj(const Eigen::VectorXd& y) { return y.cwiseMax(-1.0).cwiseMin(1.0); }

std::pair<NodalField, NodalField> prox_H(const NodalField& gamma, const NodalField& z, const BoxConstraints& box) {
    return {gamma.cwiseMax(box.gamma_min).cwiseMin(box.gamma_max), z.cwiseMax(box.z_min).cwiseMin(box.z_max)};
}

Eigen::SparseMatrix<double> tv_operator(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(6 * mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        const auto& B = mesh.gradients(e);
        const double A = mesh.area(e);
        for (int a = 0; a < 3; ++a) {
            trip.emplace_back(static_cast<int>(2 * e), t[a], A * B(a, 0));
            trip.emplace_back(static_cast<int>(2 * e + 1), t[a], A * B(a, 1));
        }
    }
    Eigen::SparseMatrix<double> D(static_cast<Eigen::Index>(2 * mesh.num_elements()), static_cast<Eigen::Index>(mesh.num_nodes()));
    D.setFromTriplets(trip.begin(), trip.end());
    return D;
}

double eval_TV(const Mesh& mesh, const NodalField& gamma, double a) {
    kernels::ElementVectors g;
    kernels::omp::element_gradients(mesh, gamma, g);
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) s += mesh.area(e) * g.row(static_cast<Eigen::Index>(e)).norm();
    return a * s;
}

Eigen::VectorXd project_disks(const Eigen::VectorXd& y, double radius) {
    Eigen::VectorXd out = y;
    for (Eigen::Index i = 0; i + 1 < y.size(); i += 2) {
        const double n = std::hypot(y[i], y[i + 1]);
        if (n > radius) {
            out[i] *= radius / n;
            out[i + 1] *= radius / n;
        }
    }
    return out;
}

double eval_F_grad(const Mesh& mesh, const NodalField& gamma, double a) {
    kernels::ElementVectors g;
    kernels::omp::element_gradients(mesh, gamma, g);
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) s += mesh.area(e) * g.row(static_cast<Eigen::Index>(e)).squaredNorm();
    return a * s;
}

Eigen::SparseMatrix<double> grad_least_squares_operator(const Mesh& mesh, double a) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(6 * mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        const auto& B = mesh.gradients(e);
        const double w = std::sqrt(2.0 * a * mesh.area(e));
        for (int a_ = 0; a_ < 3; ++a_) {
            trip.emplace_back(static_cast<int>(2 * e), t[a_], w * B(a_, 0));
            trip.emplace_back(static_cast<int>(2 * e + 1), t[a_], w * B(a_, 1));
        }
    }
    Eigen::SparseMatrix<double> G(static_cast<Eigen::Index>(2 * mesh.num_elements()), static_cast<Eigen::Index>(mesh.num_nodes()));
    G.setFromTriplets(trip.begin(), trip.end());
    return G;
}

}  // namespace eitms
