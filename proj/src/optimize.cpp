#include "eitms/optimize.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace eitms {

void RipgnParams::validate() const {
    if (!(beta >= 0)) throw std::invalid_argument("beta must be nonnegative");
    if (!(w > 0 && w <= 1)) throw std::invalid_argument("relaxation w must lie in (0, 1]");
    if (max_outer < 0) throw std::invalid_argument("max_outer must be nonnegative");
    if (!(outer_tol >= 0)) throw std::invalid_argument("outer_tol must be nonnegative");
    if (window < 1) throw std::invalid_argument("stopping window must be at least 1");
}

void PdpsParams::validate() const {
    if (!(t > 0)) throw std::invalid_argument("primal step t must be positive");
    if (s_update_period < 1) throw std::invalid_argument("s_update_period must be at least 1");
    if (max_inner < 1) throw std::invalid_argument("max_inner must be at least 1");
    if (!(inner_tol >= 0)) throw std::invalid_argument("inner_tol must be nonnegative");
    if (!(L_margin >= 1)) throw std::invalid_argument("L_margin must be at least 1");
    if (power_iterations < 1) throw std::invalid_argument("power_iterations must be at least 1");
    if (min_inner < 1) throw std::invalid_argument("min_inner must be at least 1");
}

// ---------------------------------------------------------------------------

Eigen::VectorXd LeastSquaresTerm::apply(const Eigen::VectorXd& gamma) const {
    Eigen::VectorXd out(rows());
    out.head(dense.rows()).noalias() = dense * gamma;
    if (sparse.rows() > 0) out.tail(sparse.rows()) = sparse * gamma;
    return out;
}

Eigen::VectorXd LeastSquaresTerm::adjoint(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out(cols());
    out.noalias() = dense.transpose() * y.head(dense.rows());
    if (sparse.rows() > 0) out += sparse.transpose() * y.tail(sparse.rows());
    return out;
}

double LeastSquaresTerm::norm_estimate(int iterations) const {
    if (cols() == 0 || rows() == 0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Constant(cols(), 1.0 / std::sqrt(static_cast<double>(cols())));
    double mu = 0.0;
    for (int i = 0; i < iterations; ++i) {
        Eigen::VectorXd u = adjoint(apply(v));
        mu = u.norm();
        if (mu == 0.0) return 0.0;
        v = u / mu;
    }
    return std::sqrt(mu);
}

LeastSquaresTerm linearize_data_term(const NodalField& gamma_k, const ForwardSolution& forward,
                                     const CurrentJacobian& jacobian, const MeasurementSet& m) {
    const auto M = static_cast<Eigen::Index>(m.size());
    if (jacobian.matrix.rows() != M || jacobian.matrix.cols() != gamma_k.size())
        throw std::invalid_argument("Jacobian dimensions do not match measurements and conductivity");
    if (m.weights.size() != M) throw std::invalid_argument("measurement weights not built");
    if (jacobian.rows != m.mask.rows()) throw std::invalid_argument("Jacobian rows do not follow the measurement mask");
    Eigen::VectorXd I(M);
    for (Eigen::Index r = 0; r < M; ++r) {
        const auto [j, k] = jacobian.rows[static_cast<std::size_t>(r)];
        I[r] = forward.currents[static_cast<std::size_t>(j)][k];
    }
    LeastSquaresTerm t;
    t.dense = m.weights.asDiagonal() * jacobian.matrix;
    t.sparse.resize(0, gamma_k.size());
    t.b = t.dense * gamma_k - m.weights.cwiseProduct(I - m.currents);
    return t;
}

// ---------------------------------------------------------------------------

PhaseFieldBlock::PhaseFieldBlock(const Mesh& mesh, const ATParams& params) : mesh_(&mesh), params_(params) {
    params_.validate();
}

Eigen::VectorXd PhaseFieldBlock::apply(const NodalField& gamma, const NodalField& z) const {
    Eigen::VectorXd out;
    kernels::omp::k2_values(*mesh_, gamma, z, params_.coefficients(), out);
    return out;
}

void PhaseFieldBlock::set_point(const NodalField& gamma, const NodalField& z) {
    kernels::omp::k2_local_gradients(*mesh_, gamma, z, params_.coefficients(), local_);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> PhaseFieldBlock::adjoint(const Eigen::VectorXd& y) const {
    return k2_jacobian_transpose_apply(*mesh_, local_, y);
}

double PhaseFieldBlock::jacobian_frobenius() const { return k2_jacobian_frobenius(local_); }

Eigen::VectorXd PhaseFieldBlock::prox_conjugate(const Eigen::VectorXd& v, double) const { return prox_F2_conj(v); }

LinearBlock::LinearBlock(SparseMatrix Lg, SparseMatrix Lz, Eigen::VectorXd offset, Norm norm, double weight)
    : Lg_(std::move(Lg)), Lz_(std::move(Lz)), offset_(std::move(offset)), norm_(norm), weight_(weight) {
    if (Lz_.rows() == 0) Lz_.resize(Lg_.rows(), Lg_.cols());
    if (Lz_.rows() != Lg_.rows()) throw std::invalid_argument("LinearBlock: row mismatch");
    if (offset_.size() == 0) offset_ = Eigen::VectorXd::Zero(Lg_.rows());
    if (offset_.size() != Lg_.rows()) throw std::invalid_argument("LinearBlock: offset size mismatch");
    if (norm_ == Norm::l21 && Lg_.rows() % 2 != 0) throw std::invalid_argument("LinearBlock: l21 needs an even row count");
    if (!(weight_ >= 0)) throw std::invalid_argument("LinearBlock: weight must be nonnegative");
}

Eigen::VectorXd LinearBlock::apply(const NodalField& gamma, const NodalField& z) const {
    Eigen::VectorXd out = Lg_ * gamma + offset_;
    if (Lz_.nonZeros() > 0) out += Lz_ * z;
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> LinearBlock::adjoint(const Eigen::VectorXd& y) const {
    return {Lg_.transpose() * y, Lz_.transpose() * y};
}

double LinearBlock::jacobian_frobenius() const { return std::sqrt(Lg_.squaredNorm() + Lz_.squaredNorm()); }

Eigen::VectorXd LinearBlock::prox_conjugate(const Eigen::VectorXd& v, double) const {
    if (norm_ == Norm::l21) return project_disks(v, weight_);
    return v.cwiseMax(-weight_).cwiseMin(weight_);
}

double LinearBlock::value(const Eigen::VectorXd& Kq) const {
    if (norm_ == Norm::l1) return weight_ * Kq.lpNorm<1>();
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < Kq.size(); i += 2) s += std::hypot(Kq[i], Kq[i + 1]);
    return weight_ * s;
}

// ---------------------------------------------------------------------------

PdpsResult pdps_solve(const LeastSquaresTerm& data, DualBlock* block, const BoxConstraints& box,
                      const NodalField& gamma_k, const NodalField& z_k, const PdpsParams& params, double beta) {
    params.validate();
    box.validate();
    if (!(beta >= 0)) throw std::invalid_argument("beta must be nonnegative");
    const Eigen::Index n = gamma_k.size();
    if (data.cols() != n || z_k.size() != n || data.b.size() != data.rows())
        throw std::invalid_argument("pdps_solve: dimension mismatch");
    const bool with_z = block != nullptr && block->uses_z();

    const double t = params.t;
    NodalField g = gamma_k.cwiseMax(box.gamma_min).cwiseMin(box.gamma_max);
    NodalField z = with_z ? NodalField((0.75 + 0.25 * z_k.array()).matrix()) : z_k;
    Eigen::VectorXd y1 = Eigen::VectorXd::Zero(data.rows());
    Eigen::VectorXd y2 = Eigen::VectorXd::Zero(block ? block->size() : 0);

    const double K1 = data.norm_estimate(params.power_iterations);
    const double damp = 1.0 / (1.0 + 2.0 * t * beta);
    PdpsResult res;
    double s = 0.0;
    int it = 0;
    for (; it < params.max_inner; ++it) {
        if (block) block->set_point(g, z);
        if (it % params.s_update_period == 0) {
            const double kf = block ? params.L_margin * block->jacobian_frobenius() : 0.0;
            const double L2 = K1 * K1 + kf * kf;
            s = L2 > 0 ? 1.0 / (2.0 * t * L2) : 1.0;
            res.max_stL2 = std::max(res.max_stL2, s * t * L2);
        }

        Eigen::VectorXd vg = g - t * data.adjoint(y1);
        Eigen::VectorXd vz;
        if (block) {
            auto [ag, az] = block->adjoint(y2);
            vg -= t * ag;
            if (with_z) vz = z - t * az;
        }
        NodalField gn = ((vg + (2.0 * t * beta) * gamma_k) * damp).cwiseMax(box.gamma_min).cwiseMin(box.gamma_max);
        NodalField zn = with_z ? NodalField(vz.cwiseMax(box.z_min).cwiseMin(box.z_max)) : z;

        const NodalField gbar = 2.0 * gn - g;
        const NodalField zbar = with_z ? NodalField(2.0 * zn - z) : z;
        y1 = prox_F1_conj(y1 + s * data.apply(gbar), s, data.b);
        if (block) y2 = block->prox_conjugate(y2 + s * block->apply(gbar, zbar), s);

        const double change = std::sqrt((gn - g).squaredNorm() + (zn - z).squaredNorm());
        const double scale = std::sqrt(g.squaredNorm() + z.squaredNorm());
        g = std::move(gn);
        z = std::move(zn);
        if (!g.allFinite() || !z.allFinite() || !y1.allFinite() || !y2.allFinite())
            throw std::runtime_error("pdps_solve: non-finite iterate at inner iteration " + std::to_string(it + 1) +
                                     " (dual step s = " + std::to_string(s) + "); the step is too large");
        if (it + 1 >= params.min_inner && change <= params.inner_tol * std::max(scale, 1e-300)) {
            ++it;
            break;
        }
    }
    res.gamma = std::move(g);
    res.z = std::move(z);
    res.iterations = it;
    res.last_s = s;
    return res;
}

// ---------------------------------------------------------------------------

std::string to_string(Regularizer r) {
    switch (r) {
        case Regularizer::at: return "at";
        case Regularizer::tv: return "tv";
        case Regularizer::grad: return "grad";
    }
    return "?";
}

Regularizer parse_regularizer(const std::string& s) {
    if (s == "at") return Regularizer::at;
    if (s == "tv") return Regularizer::tv;
    if (s == "grad") return Regularizer::grad;
    throw std::invalid_argument("unknown regularizer '" + s + "' (expected at, tv or grad)");
}

void RegularizerConfig::validate() const {
    if (!(a > 0)) throw std::invalid_argument("regularization weight a must be positive");
    if (kind == Regularizer::at) at.validate();
}

double regularizer_value(const Mesh& mesh, const NodalField& gamma, const NodalField& z, const RegularizerConfig& reg) {
    switch (reg.kind) {
        case Regularizer::at: return eval_F_lambda(mesh, gamma, z, reg.at);
        case Regularizer::tv: return eval_TV(mesh, gamma, reg.a);
        case Regularizer::grad: return eval_F_grad(mesh, gamma, reg.a);
    }
    return 0.0;
}

namespace {

double data_misfit(const Eigen::VectorXd& I, const MeasurementSet& m) {
    if (m.weights.size() != I.size()) throw std::invalid_argument("measurement weights not built");
    return 0.5 * m.weights.cwiseProduct(I - m.currents).squaredNorm();
}

}  // namespace

ObjectiveValue objective_eval(const ForwardModel& model, const NodalField& gamma, const NodalField& z,
                              const MeasurementSet& measurements, const RegularizerConfig& reg) {
    const auto sol = model.solve(gamma);
    ObjectiveValue v;
    v.data = data_misfit(model.stacked_currents(sol, measurements.mask), measurements);
    v.regularizer = regularizer_value(model.mesh(), gamma, z, reg);
    return v;
}

ReconstructionResult ripgn_run(const ForwardModel& model, const MeasurementSet& m, const RegularizerConfig& reg,
                               const RipgnOptions& opt) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

    reg.validate();
    opt.ripgn.validate();
    opt.pdps.validate();
    if (m.weights.size() != static_cast<Eigen::Index>(m.size())) throw std::invalid_argument("measurement weights not built");
    const Mesh& mesh = model.mesh();
    const auto n = static_cast<Eigen::Index>(mesh.num_nodes());

    ReconstructionResult res;
    const HomogeneousFit fit = fit_homogeneous(model, m);
    res.gamma_hmg = fit.value;

    BoxConstraints box;
    box.gamma_min = opt.gamma_min_factor * fit.value;
    box.gamma_max = opt.gamma_max;
    if (reg.kind == Regularizer::at) box.z_min = reg.at.epsilon_lambda;
    box.validate();

    std::unique_ptr<DualBlock> block;
    SparseMatrix grad_rows;
    if (reg.kind == Regularizer::at) {
        block = std::make_unique<PhaseFieldBlock>(mesh, reg.at);
    } else if (reg.kind == Regularizer::tv) {
        block = std::make_unique<LinearBlock>(tv_operator(mesh), SparseMatrix(), Eigen::VectorXd(), LinearBlock::Norm::l21,
                                              reg.a);
    } else {
        grad_rows = grad_least_squares_operator(mesh, reg.a);
    }

    NodalField gamma = NodalField::Constant(n, fit.value);
    NodalField z = NodalField::Ones(n);
    res.gamma = gamma;
    res.z = z;

    ForwardModel::Linearization lin;
    try {
        lin = model.linearize(gamma, m.mask);
    } catch (const std::exception& e) {
        res.status = RunStatus::solver_failure;
        res.message = std::string("forward solve failed at the initial iterate: ") + e.what();
        res.wall_time = elapsed();
        return res;
    }
    auto record = [&](int k, int inner) {
        TraceRecord r;
        r.iteration = k;
        r.data = data_misfit(model.stacked_currents(lin.forward, m.mask), m);
        r.regularizer = regularizer_value(mesh, gamma, z, reg);
        r.objective = r.data + r.regularizer;
        r.wall_time = elapsed();
        r.inner_iterations = inner;
        res.objective_trace.push_back(r);
        if (opt.progress) opt.progress(r);
    };
    record(0, 0);

    res.status = RunStatus::max_iterations;
    const int W = opt.ripgn.window;
    for (int k = 1; k <= opt.ripgn.max_outer; ++k) {
        LeastSquaresTerm ls = linearize_data_term(gamma, lin.forward, lin.jacobian, m);
        if (grad_rows.rows() > 0) {
            ls.sparse = grad_rows;
            ls.b.conservativeResize(ls.rows());
            ls.b.tail(grad_rows.rows()).setZero();
        }
        NodalField g_new, z_new;
        int inner = 0;
        try {
            PdpsResult pd = pdps_solve(ls, block.get(), box, gamma, z, opt.pdps, opt.ripgn.beta);
            inner = pd.iterations;
            g_new = (1.0 - opt.ripgn.w) * gamma + opt.ripgn.w * pd.gamma;
            z_new = (block && block->uses_z()) ? pd.z : z;
            lin = model.linearize(g_new, m.mask);
        } catch (const std::exception& e) {
            res.status = RunStatus::solver_failure;
            res.message = "outer iteration " + std::to_string(k) + ": " + e.what();
            break;
        }
        gamma = std::move(g_new);
        z = std::move(z_new);
        res.gamma = gamma;
        res.z = z;
        res.outer_iterations = k;
        res.total_inner_iterations += inner;
        record(k, inner);

        const auto& tr = res.objective_trace;
        if (static_cast<int>(tr.size()) > W) {
            const double now = tr.back().objective;
            const double then = tr[tr.size() - 1 - static_cast<std::size_t>(W)].objective;
            if (std::abs(then - now) <= opt.ripgn.outer_tol * std::max(std::abs(now), 1e-300)) {
                res.status = RunStatus::converged;
                break;
            }
        }
    }
    if (res.status == RunStatus::max_iterations && opt.ripgn.max_outer == 0) res.message = "max_outer = 0";
    res.wall_time = elapsed();
    return res;
}

void write_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& out) {
    out << "iteration,objective,data,regularizer,wall_time,inner_iterations\n";
    const auto prec = out.precision(17);
    for (const auto& r : trace)
        out << r.iteration << ',' << r.objective << ',' << r.data << ',' << r.regularizer << ',' << r.wall_time << ','
            << r.inner_iterations << '\n';
    out.precision(prec);
}

}  // namespace eitms
