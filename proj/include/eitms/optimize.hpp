#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "eitms/cem.hpp"
#include "eitms/measurements.hpp"
#include "eitms/mesh.hpp"
#include "eitms/regularizers.hpp"

namespace eitms {

struct RipgnParams {
    double beta = 0.01;
    double w = 0.1;
    int max_outer = 300;
    double outer_tol = 1e-5;
    int window = 10;

    void validate() const;
};

struct PdpsParams {
    double t = 0.01;
    int s_update_period = 100;
    int max_inner = 2000;
    double inner_tol = 1e-6;
    double L_margin = 1.2;
    int power_iterations = 20;
    /// The first step from y = 0 never moves the primal iterate, so the
    /// relative-change test is only consulted after this many iterations.
    int min_inner = 10;

    void validate() const;
};

/// Stacked linear least-squares term 0.5 ||K1 gamma - b||^2 with K1 = [dense; sparse].
struct LeastSquaresTerm {
    Eigen::MatrixXd dense;
    SparseMatrix sparse;  // may have zero rows
    Eigen::VectorXd b;    // length dense.rows() + sparse.rows()

    Eigen::Index rows() const { return dense.rows() + sparse.rows(); }
    Eigen::Index cols() const { return dense.cols(); }
    Eigen::VectorXd apply(const Eigen::VectorXd& gamma) const;
    Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const;
    /// ||K1||_2 by power iteration on K1^T K1 from a fixed start vector.
    double norm_estimate(int iterations) const;
    double value(const Eigen::VectorXd& gamma) const { return 0.5 * (apply(gamma) - b).squaredNorm(); }
};

/// K1 = W J and b = K1 gamma_k - W (I(gamma_k) - measured).
LeastSquaresTerm linearize_data_term(const NodalField& gamma_k, const ForwardSolution& forward,
                                     const CurrentJacobian& jacobian, const MeasurementSet& measurements);

/// One term F(K(gamma, z)) of the saddle-point problem with F convex and K possibly nonlinear.
class DualBlock {
public:
    virtual ~DualBlock() = default;
    virtual Eigen::Index size() const = 0;
    virtual bool uses_z() const = 0;
    virtual Eigen::VectorXd apply(const NodalField& gamma, const NodalField& z) const = 0;
    /// Moves the linearization point used by adjoint() and jacobian_frobenius().
    virtual void set_point(const NodalField& gamma, const NodalField& z) = 0;
    /// grad K(q)^T y as (gamma part, z part) at the current point.
    virtual std::pair<Eigen::VectorXd, Eigen::VectorXd> adjoint(const Eigen::VectorXd& y) const = 0;
    virtual double jacobian_frobenius() const = 0;
    /// prox of s F^* at v.
    virtual Eigen::VectorXd prox_conjugate(const Eigen::VectorXd& v, double s) const = 0;
    /// F(K q) given K q.
    virtual double value(const Eigen::VectorXd& Kq) const = 0;
};

/// K2 of the phase-field functional with F2 the 1-norm.
class PhaseFieldBlock final : public DualBlock {
public:
    PhaseFieldBlock(const Mesh& mesh, const ATParams& params);
    Eigen::Index size() const override { return static_cast<Eigen::Index>(mesh_->num_elements()); }
    bool uses_z() const override { return true; }
    Eigen::VectorXd apply(const NodalField& gamma, const NodalField& z) const override;
    void set_point(const NodalField& gamma, const NodalField& z) override;
    std::pair<Eigen::VectorXd, Eigen::VectorXd> adjoint(const Eigen::VectorXd& y) const override;
    double jacobian_frobenius() const override;
    Eigen::VectorXd prox_conjugate(const Eigen::VectorXd& v, double s) const override;
    double value(const Eigen::VectorXd& Kq) const override { return Kq.lpNorm<1>(); }

private:
    const Mesh* mesh_;
    ATParams params_;
    kernels::ElementLocal6 local_;
};

/// Affine K(q) = Lg gamma + Lz z + c with F either the 1-norm (weight) or the sum of
/// Euclidean norms of consecutive pairs (weight), the latter being isotropic TV with Lg = tv_operator.
class LinearBlock final : public DualBlock {
public:
    enum class Norm { l1, l21 };
    LinearBlock(SparseMatrix Lg, SparseMatrix Lz, Eigen::VectorXd offset, Norm norm, double weight);
    Eigen::Index size() const override { return Lg_.rows(); }
    bool uses_z() const override { return Lz_.nonZeros() > 0; }
    Eigen::VectorXd apply(const NodalField& gamma, const NodalField& z) const override;
    void set_point(const NodalField&, const NodalField&) override {}
    std::pair<Eigen::VectorXd, Eigen::VectorXd> adjoint(const Eigen::VectorXd& y) const override;
    double jacobian_frobenius() const override;
    Eigen::VectorXd prox_conjugate(const Eigen::VectorXd& v, double s) const override;
    double value(const Eigen::VectorXd& Kq) const override;

private:
    SparseMatrix Lg_, Lz_;
    Eigen::VectorXd offset_;
    Norm norm_;
    double weight_;
};

struct PdpsResult {
    NodalField gamma;
    NodalField z;
    int iterations = 0;
    double last_s = 0.0;
    /// max over refreshes of s t L^2; the step rule keeps this at 1/2
    double max_stL2 = 0.0;
};

/// NL-PDPS for min 0.5 ||K1 gamma - b||^2 + F(K(gamma, z)) + box + beta ||gamma - gamma_k||^2.
/// `block` may be null (pure least squares). Throws std::runtime_error on non-finite iterates.
PdpsResult pdps_solve(const LeastSquaresTerm& data, DualBlock* block, const BoxConstraints& box,
                      const NodalField& gamma_k, const NodalField& z_k, const PdpsParams& params, double beta);

enum class Regularizer { at, tv, grad };
std::string to_string(Regularizer r);
Regularizer parse_regularizer(const std::string& s);

struct RegularizerConfig {
    Regularizer kind = Regularizer::at;
    ATParams at;
    /// Regularization weight. For the phase field it scales the data weights
    /// (W = sqrt(a) W~); for TV and F_grad it multiplies the regularizer.
    double a = 1.0;

    /// The a to pass to build_weights for this configuration.
    double data_weight_scale() const { return kind == Regularizer::at ? a : 1.0; }
    void validate() const;
};

struct ObjectiveValue {
    double data = 0.0;
    double regularizer = 0.0;
    double total() const { return data + regularizer; }
};

/// 0.5 ||W (I(gamma) - measured)||^2 with the nonlinear forward map, plus the regularizer.
ObjectiveValue objective_eval(const ForwardModel& model, const NodalField& gamma, const NodalField& z,
                              const MeasurementSet& measurements, const RegularizerConfig& reg);
double regularizer_value(const Mesh& mesh, const NodalField& gamma, const NodalField& z, const RegularizerConfig& reg);

struct TraceRecord {
    int iteration = 0;
    double objective = 0.0;
    double data = 0.0;
    double regularizer = 0.0;
    double wall_time = 0.0;
    int inner_iterations = 0;
};

enum class RunStatus { converged, max_iterations, solver_failure };

struct ReconstructionResult {
    NodalField gamma;
    NodalField z;
    double gamma_hmg = 0.0;
    std::vector<TraceRecord> objective_trace;
    int outer_iterations = 0;
    int total_inner_iterations = 0;
    double wall_time = 0.0;
    RunStatus status = RunStatus::max_iterations;
    std::string message;
};

struct RipgnOptions {
    RipgnParams ripgn;
    PdpsParams pdps;
    /// gamma_min = gamma_min_factor * gamma_hmg
    double gamma_min_factor = 1e-5;
    double gamma_max = 1e10;
    /// Called after every outer iteration; may be empty.
    std::function<void(const TraceRecord&)> progress;
};

/// Outer loop: linearize the forward map at gamma^k, solve the proximal subproblem with
/// NL-PDPS, relax gamma (z is replaced). Starts from the best homogeneous fit and z = 1.
/// Measurement weights must already be built (see RegularizerConfig::data_weight_scale).
ReconstructionResult ripgn_run(const ForwardModel& model, const MeasurementSet& measurements,
                               const RegularizerConfig& reg, const RipgnOptions& options);

void write_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& out);

}  // namespace eitms
