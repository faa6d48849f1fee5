#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "eitms/measurements.hpp"
#include "eitms/mesh.hpp"

namespace eitms {

using SparseMatrix = Eigen::SparseMatrix<double>;

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Electrode potential patterns U^j and contact impedances.
struct ExcitationSet {
    std::vector<Eigen::VectorXd> patterns;
    Eigen::VectorXd contact_impedance;

    /// Pattern j puts 1 V on electrode j and grounds the rest.
    static ExcitationSet unit_potentials(int n_electrodes, double zeta);

    int electrodes() const { return static_cast<int>(contact_impedance.size()); }
    int size() const { return static_cast<int>(patterns.size()); }
    void validate(const Mesh& mesh) const;
};

struct ForwardSolution {
    std::vector<Eigen::VectorXd> potentials;  // u^j, nodal
    std::vector<Eigen::VectorXd> currents;    // I^j, per electrode
};

/// dI/dgamma for the masked measurements: rows follow mask.rows(), columns are nodes.
struct CurrentJacobian {
    Eigen::MatrixXd matrix;
    kernels::RowIndex rows;
};

/// Reduced CEM system: A = int gamma grad(phi_i).grad(phi_j) + sum_k 1/zeta_k int_{e_k} phi_i phi_j,
/// consistent electrode loads l_k(v) = 1/zeta_k int_{e_k} v, and |e_k|.
struct AssembledSystem {
    SparseMatrix matrix;
    SparseMatrix stiffness;
    SparseMatrix boundary_mass;
    Eigen::MatrixXd electrode_loads;  // N_n x P1, column k = l_k
    Eigen::VectorXd electrode_length;
};

AssembledSystem assemble_system(const Mesh& mesh, const NodalField& gamma, const Eigen::VectorXd& zeta);

/// Forward map for a fixed mesh and excitation set. The sparsity pattern and
/// boundary terms are built once; each call assembles the stiffness for the
/// given conductivity and factorizes it once for all patterns.
class ForwardModel {
public:
    ForwardModel(const Mesh& mesh, ExcitationSet excitations);

    const Mesh& mesh() const { return *mesh_; }
    const ExcitationSet& excitations() const { return excitations_; }

    SparseMatrix system_matrix(const NodalField& gamma) const;

    ForwardSolution solve(const NodalField& gamma) const;

    struct Linearization {
        ForwardSolution forward;
        CurrentJacobian jacobian;
    };
    /// Forward solve plus adjoint Jacobian (one extra solve per measured electrode).
    Linearization linearize(const NodalField& gamma, const MeasurementMask& mask) const;

    /// Stacked masked currents.
    Eigen::VectorXd stacked_currents(const ForwardSolution& sol, const MeasurementMask& mask) const;

private:
    const Mesh* mesh_;
    ExcitationSet excitations_;
    AssembledSystem base_;                   // assembled at gamma = 0 (boundary terms only)
    std::vector<int> slots_;                 // element-local (e, a, b) -> nonzero index

    class Factor;
    Factor factorize(const NodalField& gamma) const;
    void check_gamma(const NodalField& gamma) const;
};

ForwardSolution solve_forward(const Mesh& mesh, const NodalField& gamma, const ExcitationSet& excitations);

CurrentJacobian current_jacobian(const Mesh& mesh, const NodalField& gamma, const ExcitationSet& excitations,
                                 const MeasurementMask& mask);

/// max_{j,k} |I_scaled - c I| / max |c I|, where I_scaled solves on the mesh scaled by c with conductivity c*gamma.
double check_scaling_theorem(const Mesh& mesh, const NodalField& gamma, const ExcitationSet& excitations, double c);

struct HomogeneousFit {
    double value = 1.0;
    bool at_bound = false;
    double misfit = 0.0;
};

/// argmin_{c>0} ||W (I(c 1) - measured)||^2 by golden-section search over log c in [1e-6, 1e6].
HomogeneousFit fit_homogeneous(const Mesh& mesh, const ExcitationSet& excitations, const MeasurementSet& measurements);
HomogeneousFit fit_homogeneous(const ForwardModel& model, const MeasurementSet& measurements);

}  // namespace eitms
