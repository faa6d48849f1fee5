#include "eitms/cem.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "eitms/kernels.hpp"

namespace eitms {

ExcitationSet ExcitationSet::unit_potentials(int n_electrodes, double zeta) {
    ExcitationSet ex;
    for (int j = 0; j < n_electrodes; ++j) ex.patterns.push_back(Eigen::VectorXd::Unit(n_electrodes, j));
    ex.contact_impedance = Eigen::VectorXd::Constant(n_electrodes, zeta);
    return ex;
}

void ExcitationSet::validate(const Mesh& mesh) const {
    if (static_cast<std::size_t>(contact_impedance.size()) != mesh.num_electrodes())
        throw std::invalid_argument("contact impedance count does not match mesh electrodes");
    if (!(contact_impedance.array() > 0).all()) throw std::invalid_argument("contact impedances must be positive");
    for (const auto& U : patterns)
        if (U.size() != contact_impedance.size()) throw std::invalid_argument("excitation pattern has wrong length");
}

AssembledSystem assemble_system(const Mesh& mesh, const NodalField& gamma, const Eigen::VectorXd& zeta) {
    const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
    if (gamma.size() != n) throw std::invalid_argument("conductivity size does not match mesh");
    if (!(gamma.array() > 0).all()) throw std::invalid_argument("conductivity must be strictly positive");
    if (static_cast<std::size_t>(zeta.size()) != mesh.num_electrodes() || !(zeta.array() > 0).all())
        throw std::invalid_argument("contact impedances must be positive, one per electrode");

    kernels::ElementLocal9 local;
    kernels::omp::stiffness_local(mesh, gamma, local);
    std::vector<Eigen::Triplet<double>> ks, bs;
    ks.reserve(9 * mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) ks.emplace_back(t[a], t[b], local(static_cast<Eigen::Index>(e), 3 * a + b));
    }

    AssembledSystem sys;
    const auto P = static_cast<Eigen::Index>(mesh.num_electrodes());
    sys.electrode_loads = Eigen::MatrixXd::Zero(n, P);
    sys.electrode_length = Eigen::VectorXd::Zero(P);
    for (Eigen::Index k = 0; k < P; ++k) {
        const double iz = 1.0 / zeta[k];
        for (const auto& edge : mesh.electrode_edges()[static_cast<std::size_t>(k)]) {
            const double L = (mesh.node(edge[1]) - mesh.node(edge[0])).norm();
            sys.electrode_length[k] += L;
            bs.emplace_back(edge[0], edge[0], iz * L / 3.0);
            bs.emplace_back(edge[1], edge[1], iz * L / 3.0);
            bs.emplace_back(edge[0], edge[1], iz * L / 6.0);
            bs.emplace_back(edge[1], edge[0], iz * L / 6.0);
            sys.electrode_loads(edge[0], k) += iz * L / 2.0;
            sys.electrode_loads(edge[1], k) += iz * L / 2.0;
        }
    }
    sys.stiffness.resize(n, n);
    sys.stiffness.setFromTriplets(ks.begin(), ks.end());
    sys.boundary_mass.resize(n, n);
    sys.boundary_mass.setFromTriplets(bs.begin(), bs.end());
    sys.matrix = sys.stiffness + sys.boundary_mass;
    return sys;
}

// ---------------------------------------------------------------------------

class ForwardModel::Factor {
public:
    Factor(const SparseMatrix& A) : A_(A) {
        llt_.compute(A_);
        if (llt_.info() != Eigen::Success) throw SolverError("sparse Cholesky factorization failed");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        Eigen::VectorXd x = llt_.solve(b);
        const double bn = b.norm();
        if (bn > 0) {
            const double res = (A_ * x - b).norm() / bn;
            if (!(res < 1e-9)) {
                std::ostringstream msg;
                msg << "linear solve did not reach tolerance (relative residual " << res << ")";
                throw SolverError(msg.str());
            }
        }
        return x;
    }

private:
    SparseMatrix A_;
    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

ForwardModel::ForwardModel(const Mesh& mesh, ExcitationSet excitations)
    : mesh_(&mesh), excitations_(std::move(excitations)) {
    excitations_.validate(mesh);
    // structure: assemble once with unit conductivity, then record value slots
    base_ = assemble_system(mesh, NodalField::Ones(static_cast<Eigen::Index>(mesh.num_nodes())),
                            excitations_.contact_impedance);
    SparseMatrix pattern = base_.matrix;
    pattern.makeCompressed();
    for (Eigen::Index i = 0; i < pattern.nonZeros(); ++i) pattern.valuePtr()[i] = 0.0;
    slots_.resize(9 * mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                slots_[9 * e + static_cast<std::size_t>(3 * a + b)] =
                    static_cast<int>(&pattern.coeffRef(t[a], t[b]) - pattern.valuePtr());
    }
    for (int k = 0; k < base_.boundary_mass.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(base_.boundary_mass, k); it; ++it) pattern.coeffRef(it.row(), it.col()) += it.value();
    base_.matrix = std::move(pattern);
}

void ForwardModel::check_gamma(const NodalField& gamma) const {
    if (static_cast<std::size_t>(gamma.size()) != mesh_->num_nodes())
        throw std::invalid_argument("conductivity size does not match mesh");
    if (!(gamma.array() > 0).all() || !gamma.allFinite())
        throw std::invalid_argument("conductivity must be strictly positive and finite");
}

SparseMatrix ForwardModel::system_matrix(const NodalField& gamma) const {
    check_gamma(gamma);
    kernels::ElementLocal9 local;
    kernels::omp::stiffness_local(*mesh_, gamma, local);
    SparseMatrix A = base_.matrix;
    double* v = A.valuePtr();
    for (std::size_t e = 0; e < mesh_->num_elements(); ++e)
        for (int q = 0; q < 9; ++q) v[slots_[9 * e + static_cast<std::size_t>(q)]] += local(static_cast<Eigen::Index>(e), q);
    return A;
}

ForwardModel::Factor ForwardModel::factorize(const NodalField& gamma) const { return Factor(system_matrix(gamma)); }

ForwardSolution ForwardModel::solve(const NodalField& gamma) const {
    const Factor f = factorize(gamma);
    const int P2 = excitations_.size();
    const auto P1 = static_cast<Eigen::Index>(excitations_.electrodes());
    ForwardSolution sol;
    sol.potentials.resize(static_cast<std::size_t>(P2));
    sol.currents.resize(static_cast<std::size_t>(P2));
    const Eigen::VectorXd inv_zeta_len = base_.electrode_length.cwiseQuotient(excitations_.contact_impedance);
    std::string error;
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < P2; ++j) {
        try {
            const auto& U = excitations_.patterns[static_cast<std::size_t>(j)];
            Eigen::VectorXd u = f.solve(base_.electrode_loads * U);
            Eigen::VectorXd I(P1);
            for (Eigen::Index k = 0; k < P1; ++k) I[k] = base_.electrode_loads.col(k).dot(u) - U[k] * inv_zeta_len[k];
            sol.potentials[static_cast<std::size_t>(j)] = std::move(u);
            sol.currents[static_cast<std::size_t>(j)] = std::move(I);
        } catch (const std::exception& e) {
#pragma omp critical
            error = e.what();
        }
    }
    if (!error.empty()) throw SolverError(error);
    return sol;
}

ForwardModel::Linearization ForwardModel::linearize(const NodalField& gamma, const MeasurementMask& mask) const {
    if (mask.patterns() != excitations_.size() || mask.electrodes() != excitations_.electrodes())
        throw std::invalid_argument("measurement mask does not match excitation set");
    const Factor f = factorize(gamma);
    const int P2 = excitations_.size();
    const int P1 = excitations_.electrodes();
    const Eigen::VectorXd inv_zeta_len = base_.electrode_length.cwiseQuotient(excitations_.contact_impedance);

    Linearization out;
    auto& sol = out.forward;
    sol.potentials.resize(static_cast<std::size_t>(P2));
    sol.currents.resize(static_cast<std::size_t>(P2));
    std::vector<kernels::ElementVectors> grad_u(static_cast<std::size_t>(P2)), grad_w(static_cast<std::size_t>(P1));
    std::vector<char> need_w(static_cast<std::size_t>(P1), 0);
    for (int j = 0; j < P2; ++j)
        for (int k = 0; k < P1; ++k)
            if (mask.active(j, k)) need_w[static_cast<std::size_t>(k)] = 1;

    std::string error;
#pragma omp parallel for schedule(dynamic)
    for (int task = 0; task < P2 + P1; ++task) {
        try {
            if (task < P2) {
                const auto& U = excitations_.patterns[static_cast<std::size_t>(task)];
                Eigen::VectorXd u = f.solve(base_.electrode_loads * U);
                Eigen::VectorXd I(P1);
                for (int k = 0; k < P1; ++k) I[k] = base_.electrode_loads.col(k).dot(u) - U[k] * inv_zeta_len[k];
                kernels::serial::element_gradients(*mesh_, u, grad_u[static_cast<std::size_t>(task)]);
                sol.potentials[static_cast<std::size_t>(task)] = std::move(u);
                sol.currents[static_cast<std::size_t>(task)] = std::move(I);
            } else {
                const int k = task - P2;
                if (!need_w[static_cast<std::size_t>(k)]) continue;
                const Eigen::VectorXd w = f.solve(base_.electrode_loads.col(k));
                kernels::serial::element_gradients(*mesh_, w, grad_w[static_cast<std::size_t>(k)]);
            }
        } catch (const std::exception& e) {
#pragma omp critical
            error = e.what();
        }
    }
    if (!error.empty()) throw SolverError(error);

    out.jacobian.rows = mask.rows();
    kernels::omp::current_jacobian(*mesh_, grad_u, grad_w, out.jacobian.rows, out.jacobian.matrix);
    return out;
}

Eigen::VectorXd ForwardModel::stacked_currents(const ForwardSolution& sol, const MeasurementMask& mask) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(mask.count()));
    Eigen::Index r = 0;
    for (int j = 0; j < mask.patterns(); ++j)
        for (int k = 0; k < mask.electrodes(); ++k)
            if (mask.active(j, k)) out[r++] = sol.currents[static_cast<std::size_t>(j)][k];
    return out;
}

ForwardSolution solve_forward(const Mesh& mesh, const NodalField& gamma, const ExcitationSet& excitations) {
    return ForwardModel(mesh, excitations).solve(gamma);
}

CurrentJacobian current_jacobian(const Mesh& mesh, const NodalField& gamma, const ExcitationSet& excitations,
                                 const MeasurementMask& mask) {
    return ForwardModel(mesh, excitations).linearize(gamma, mask).jacobian;
}

double check_scaling_theorem(const Mesh& mesh, const NodalField& gamma, const ExcitationSet& excitations, double c) {
    if (!(c > 0)) throw std::invalid_argument("scale factor must be positive");
    const ForwardSolution ref = solve_forward(mesh, gamma, excitations);
    const Mesh scaled = scale_mesh(mesh, c);
    const ForwardSolution sc = solve_forward(scaled, c * gamma, excitations);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < ref.currents.size(); ++j) {
        num = std::max(num, (sc.currents[j] - c * ref.currents[j]).cwiseAbs().maxCoeff());
        den = std::max(den, (c * ref.currents[j]).cwiseAbs().maxCoeff());
    }
    return den > 0 ? num / den : num;
}

HomogeneousFit fit_homogeneous(const ForwardModel& model, const MeasurementSet& m) {
    if (m.size() == 0) throw std::invalid_argument("fit_homogeneous: no measurements");
    if (m.weights.size() != m.currents.size()) throw std::invalid_argument("fit_homogeneous: weights not built");
    if (!(m.weights.array().abs() > 0).any())
        throw std::invalid_argument("fit_homogeneous: all weights are zero (empty effective data)");

    const auto n = static_cast<Eigen::Index>(model.mesh().num_nodes());
    auto misfit = [&](double log_c) {
        const ForwardSolution s = model.solve(NodalField::Constant(n, std::exp(log_c)));
        return (m.weights.asDiagonal() * (model.stacked_currents(s, m.mask) - m.currents)).squaredNorm();
    };

    const double lo_bound = std::log(1e-6), hi_bound = std::log(1e6);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo_bound, b = hi_bound;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = misfit(x1), f2 = misfit(x2);
    // log-space width 1e-6 is a relative tolerance of ~1e-6 on c
    while (b - a > 1e-6) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = misfit(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = misfit(x2);
        }
    }
    HomogeneousFit fit;
    const double x = 0.5 * (a + b);
    fit.value = std::exp(x);
    fit.misfit = misfit(x);
    if (x - lo_bound < 1e-5 || hi_bound - x < 1e-5) {
        fit.at_bound = true;
        std::clog << "warning: homogeneous fit reached the search bound (" << fit.value << " S)\n";
    }
    return fit;
}

HomogeneousFit fit_homogeneous(const Mesh& mesh, const ExcitationSet& excitations, const MeasurementSet& m) {
    return fit_homogeneous(ForwardModel(mesh, excitations), m);
}

}  // namespace eitms
