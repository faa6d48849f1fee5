#pragma once

// Element and node loops shared by the forward model and the regularizers.
//
// Every kernel exists twice with identical signatures: kernels::serial is the
// plain reference loop, kernels::omp the OpenMP version used by the library.
// The parallel versions never scatter concurrently: node-level sums gather
// over the mesh's node->element adjacency in element order, so results are
// bitwise identical to the serial loops for any thread count.

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "eitms/mesh.hpp"

namespace eitms::kernels {

using ElementVectors = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using ElementLocal3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using ElementLocal6 = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;
using ElementLocal9 = Eigen::Matrix<double, Eigen::Dynamic, 9, Eigen::RowMajor>;

/// Coefficients of the per-element phase-field integrand
///   lambda |grad z|^2 + z^2 |grad g|^2 + jump (z - 1)^2,
/// with the z-quadratic integrals multiplied by quad_factor (1 = exact, 0.5 = halved).
struct K2Coefficients {
    double lambda = 1e-3;
    double jump = 0.025;
    double quad_factor = 1.0;
};

/// (measurement row) -> (pattern j, electrode k)
using RowIndex = std::vector<std::pair<int, int>>;

#define EITMS_KERNEL_DECLS                                                                               \
    /* per-element constant gradient of a nodal field */                                                \
    void element_gradients(const Mesh& mesh, const Eigen::VectorXd& field, ElementVectors& out);         \
    /* local stiffness mean(gamma) A grad(phi_a).grad(phi_b), row-major 3x3 per element */               \
    void stiffness_local(const Mesh& mesh, const Eigen::VectorXd& gamma, ElementLocal9& out);            \
    /* per-element value of the phase-field integrand */                                                 \
    void k2_values(const Mesh& mesh, const Eigen::VectorXd& g, const Eigen::VectorXd& z,                 \
                   const K2Coefficients& c, Eigen::VectorXd& out);                                      \
    /* per-element partials: columns 0..2 w.r.t. local g nodes, 3..5 w.r.t. local z nodes */           \
    void k2_local_gradients(const Mesh& mesh, const Eigen::VectorXd& g, const Eigen::VectorXd& z,        \
                            const K2Coefficients& c, ElementLocal6& out);                                \
    /* out[i] = sum over elements E containing node i of local(E, slot of i) */                            \
    void gather_nodes(const Mesh& mesh, const ElementLocal3& local, Eigen::VectorXd& out);              \
    /* J(r, i) = -sum_{E ∋ i} A_E / 3 * grad u^{j_r}_E . grad w^{k_r}_E */                               \
    void current_jacobian(const Mesh& mesh, const std::vector<ElementVectors>& grad_u,                  \
                          const std::vector<ElementVectors>& grad_w, const RowIndex& rows,              \
                          Eigen::MatrixXd& out);

namespace serial {
EITMS_KERNEL_DECLS
}  // namespace serial

namespace omp {
EITMS_KERNEL_DECLS
}  // namespace omp

#undef EITMS_KERNEL_DECLS

}  // namespace eitms::kernels
