#pragma once

#include <utility>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "eitms/kernels.hpp"
#include "eitms/mesh.hpp"

namespace eitms {

/// Phase-field (Ambrosio-Tortorelli type) regularizer parameters.
struct ATParams {
    double lambda = 1e-3;
    double alpha = 1e-2;
    double epsilon_lambda = 0.0;
    /// Use the halved closed forms for int z^2 and int (z-1)^2 instead of exact P1 quadrature.
    bool halved_quadrature = false;

    void validate() const;
    kernels::K2Coefficients coefficients() const;
};

struct BoxConstraints {
    double gamma_min = 1e-5;
    double gamma_max = 1e10;
    double z_min = 0.0;
    double z_max = 1.0;

    void validate() const;
};

/// K2(gamma, z)_i = int_{E_i} lambda |grad z|^2 + z^2 |grad gamma|^2 + alpha^2 (z-1)^2 / (4 lambda).
Eigen::VectorXd k2_apply(const Mesh& mesh, const NodalField& gamma, const NodalField& z, const ATParams& p);

/// F_lambda(gamma, z) = sum_i K2_i.
double eval_F_lambda(const Mesh& mesh, const NodalField& gamma, const NodalField& z, const ATParams& p);

/// N_e x 2 N_n Jacobian of K2; columns [0, N_n) are gamma nodes, [N_n, 2 N_n) are z nodes.
Eigen::SparseMatrix<double> k2_jacobian(const Mesh& mesh, const NodalField& gamma, const NodalField& z, const ATParams& p);

/// (grad K2)^T y split into gamma and z parts, from per-element local partials.
std::pair<Eigen::VectorXd, Eigen::VectorXd> k2_jacobian_transpose_apply(const Mesh& mesh,
                                                                         const kernels::ElementLocal6& local,
                                                                         const Eigen::VectorXd& y);
double k2_jacobian_frobenius(const kernels::ElementLocal6& local);

/// Proximal map of s F1^* with F1(y) = 0.5 ||y - b||^2: (y - s b) / (1 + s).
Eigen::VectorXd prox_F1_conj(const Eigen::VectorXd& y, double s, const Eigen::VectorXd& b);

/// Proximal map of F2^* with F2 the 1-norm: clamp to [-1, 1] (independent of the step).
Eigen::VectorXd prox_F2_conj(const Eigen::VectorXd& y);

/// Projection onto the box.
std::pair<NodalField, NodalField> prox_H(const NodalField& gamma, const NodalField& z, const BoxConstraints& box);

// --- total variation -------------------------------------------------------

/// 2 N_e x N_n operator whose rows (2i, 2i+1) give A_i grad(gamma) on element i.
Eigen::SparseMatrix<double> tv_operator(const Mesh& mesh);
/// a sum_i A_i |grad gamma|_i
double eval_TV(const Mesh& mesh, const NodalField& gamma, double a);
/// Projects each consecutive pair (y_{2i}, y_{2i+1}) onto the disk of the given radius.
Eigen::VectorXd project_disks(const Eigen::VectorXd& y, double radius);

// --- smooth gradient --------------------------------------------------------

/// a sum_i A_i |grad gamma|_i^2
double eval_F_grad(const Mesh& mesh, const NodalField& gamma, double a);
/// G with 0.5 ||G gamma||^2 = eval_F_grad(gamma, a), for stacking into a least-squares block.
Eigen::SparseMatrix<double> grad_least_squares_operator(const Mesh& mesh, double a);

}  // namespace eitms
