#include "eitms/phantoms.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace eitms {

std::string to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::circle: return "circle";
        case ShapeKind::square: return "square";
        case ShapeKind::stadium: return "stadium";
        case ShapeKind::triangle: return "triangle";
    }
    return "?";
}

ShapeKind parse_shape_kind(const std::string& s) {
    if (s == "circle") return ShapeKind::circle;
    if (s == "square") return ShapeKind::square;
    if (s == "stadium") return ShapeKind::stadium;
    if (s == "triangle") return ShapeKind::triangle;
    throw std::invalid_argument("unknown shape '" + s + "' (expected circle, square, stadium or triangle)");
}

namespace {

// coordinates in the shape frame
Point local(const Inclusion& s, const Point& x) {
    const Point d = x - s.center;
    const double c = std::cos(s.angle), sn = std::sin(s.angle);
    return {c * d.x() + sn * d.y(), -sn * d.x() + c * d.y()};
}

Point global(const Inclusion& s, const Point& p) {
    const double c = std::cos(s.angle), sn = std::sin(s.angle);
    return s.center + Point(c * p.x() - sn * p.y(), sn * p.x() + c * p.y());
}

// equilateral triangle centred at the origin, one vertex on +y
std::array<Point, 3> triangle_vertices(double side) {
    const double r = side / std::sqrt(3.0);
    std::array<Point, 3> v;
    for (int i = 0; i < 3; ++i) {
        const double t = std::numbers::pi / 2 + 2.0 * std::numbers::pi * i / 3.0;
        v[static_cast<std::size_t>(i)] = Point(r * std::cos(t), r * std::sin(t));
    }
    return v;
}

std::vector<Point> outline(const Inclusion& s, int n) {
    std::vector<Point> pts;
    const double pi = std::numbers::pi;
    switch (s.kind) {
        case ShapeKind::circle:
            for (int i = 0; i < n; ++i) pts.push_back(global(s, s.size * Point(std::cos(2 * pi * i / n), std::sin(2 * pi * i / n))));
            break;
        case ShapeKind::square: {
            const double h = 0.5 * s.size;
            const Point c[4] = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
            for (int k = 0; k < 4; ++k)
                for (int i = 0; i < n / 4; ++i) pts.push_back(global(s, c[k] + (c[(k + 1) % 4] - c[k]) * (double(i) / (n / 4))));
            break;
        }
        case ShapeKind::stadium: {
            const double hl = 0.5 * s.length;
            for (int i = 0; i < n / 2; ++i) {
                const double t = -pi / 2 + pi * i / (n / 2 - 1);
                pts.push_back(global(s, Point(hl + s.size * std::cos(t), s.size * std::sin(t))));
                pts.push_back(global(s, Point(-hl - s.size * std::cos(t), s.size * std::sin(t))));
            }
            break;
        }
        case ShapeKind::triangle: {
            const auto v = triangle_vertices(s.size);
            for (int k = 0; k < 3; ++k)
                for (int i = 0; i < n / 3; ++i)
                    pts.push_back(global(s, v[static_cast<std::size_t>(k)] +
                                                (v[static_cast<std::size_t>((k + 1) % 3)] - v[static_cast<std::size_t>(k)]) * (double(i) / (n / 3))));
            break;
        }
    }
    return pts;
}

}  // namespace

void Inclusion::validate() const {
    if (!(value > 0)) throw std::invalid_argument("inclusion value must be positive");
    if (!(size >= 0)) throw std::invalid_argument("inclusion size must be nonnegative");
    if (!(length >= 0)) throw std::invalid_argument("stadium length must be nonnegative");
}

bool Inclusion::contains(const Point& x) const {
    const Point p = local(*this, x);
    switch (kind) {
        case ShapeKind::circle: return p.squaredNorm() <= size * size;
        case ShapeKind::square: return std::abs(p.x()) <= 0.5 * size && std::abs(p.y()) <= 0.5 * size;
        case ShapeKind::stadium: {
            const double dx = std::max(std::abs(p.x()) - 0.5 * length, 0.0);
            return dx * dx + p.y() * p.y() <= size * size;
        }
        case ShapeKind::triangle: {
            if (size <= 0) return false;
            const auto v = triangle_vertices(size);
            for (int k = 0; k < 3; ++k) {
                const Point& a = v[static_cast<std::size_t>(k)];
                const Point& b = v[static_cast<std::size_t>((k + 1) % 3)];
                if ((b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x()) < 0) return false;
            }
            return true;
        }
    }
    return false;
}

double Inclusion::area() const {
    switch (kind) {
        case ShapeKind::circle: return std::numbers::pi * size * size;
        case ShapeKind::square: return size * size;
        case ShapeKind::stadium: return std::numbers::pi * size * size + 2.0 * size * length;
        case ShapeKind::triangle: return std::sqrt(3.0) / 4.0 * size * size;
    }
    return 0.0;
}

double Inclusion::perimeter() const {
    switch (kind) {
        case ShapeKind::circle: return 2.0 * std::numbers::pi * size;
        case ShapeKind::square: return 4.0 * size;
        case ShapeKind::stadium: return 2.0 * std::numbers::pi * size + 2.0 * length;
        case ShapeKind::triangle: return 3.0 * size;
    }
    return 0.0;
}

GrfSampler::GrfSampler(const Mesh& mesh, double marginal_std, double correlation_length)
    : n_(mesh.num_nodes()), sigma_(marginal_std) {
    if (!(correlation_length > 0)) throw std::invalid_argument("correlation length must be positive");
    if (!(marginal_std >= 0)) throw std::invalid_argument("marginal standard deviation must be nonnegative");
    if (sigma_ == 0.0) return;
    if (n_ > max_nodes)
        throw std::invalid_argument("dense GRF sampling supports at most " + std::to_string(max_nodes) +
                                    " nodes; sample on a coarser mesh and interpolate");
    const auto n = static_cast<Eigen::Index>(n_);
    const double s2 = sigma_ * sigma_;
    const double inv = 1.0 / (2.0 * correlation_length * correlation_length);
    Eigen::MatrixXd C(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j; i < n; ++i)
            C(i, j) = s2 * std::exp(-(mesh.node(static_cast<int>(i)) - mesh.node(static_cast<int>(j))).squaredNorm() * inv);
    C.diagonal().array() += 1e-10 * s2;
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(C);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("GRF covariance is not positive definite after jitter");
    chol_ = llt.matrixL();
}

NodalField GrfSampler::draw(double mean, const Eigen::VectorXd& xi) const {
    if (static_cast<std::size_t>(xi.size()) != n_) throw std::invalid_argument("GRF draw: wrong vector length");
    NodalField f = NodalField::Constant(static_cast<Eigen::Index>(n_), mean);
    if (sigma_ == 0.0) return f;
    f.noalias() += chol_.triangularView<Eigen::Lower>() * xi;
    return f;
}

NodalField sample_grf(const Mesh& mesh, double mean, double marginal_std, double correlation_length,
                      std::uint64_t seed) {
    GrfSampler s(mesh, marginal_std, correlation_length);
    std::mt19937_64 rng(seed);
    return s.sample(mean, rng);
}

std::size_t add_inclusion(const Mesh& mesh, NodalField& field, const Inclusion& inc) {
    inc.validate();
    if (static_cast<std::size_t>(field.size()) != mesh.num_nodes()) throw std::invalid_argument("field size does not match mesh");
    if (inc.size > 0) {
        PointLocator loc(mesh);
        double worst = 0.0;
        for (const auto& p : outline(inc, 64)) worst = std::max(worst, loc.locate(p).distance);
        if (worst > 0.0)
            std::clog << "warning: " << to_string(inc.kind) << " inclusion extends " << worst
                      << " outside the domain\n";
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        if (inc.contains(mesh.node(static_cast<int>(i)))) {
            field[static_cast<Eigen::Index>(i)] = inc.value;
            ++count;
        }
    }
    return count;
}

PhantomSpec PhantomSpec::case1_analog() {
    PhantomSpec s;
    Inclusion circle;
    circle.kind = ShapeKind::circle;
    circle.center = Point(-0.06, 0.03);
    circle.size = 0.03;
    circle.value = 10.0;
    Inclusion square;
    square.kind = ShapeKind::square;
    square.center = Point(0.05, -0.04);
    square.size = 0.05;
    square.value = 1e-4;
    s.inclusions = {circle, square};
    return s;
}

NodalField build_phantom(const Mesh& mesh, const PhantomSpec& spec) {
    if (!(spec.background > 0)) throw std::invalid_argument("background conductivity must be positive");
    NodalField f = sample_grf(mesh, spec.background, spec.grf_std, spec.grf_length, spec.seed);
    if ((f.array() <= 0).any()) throw std::runtime_error("GRF background has nonpositive values; reduce grf_std");
    for (const auto& inc : spec.inclusions) add_inclusion(mesh, f, inc);
    return f;
}

MeasurementSet simulate_measurements(const Mesh& mesh, const NodalField& gamma, const ExcitationSet& excitations,
                                     double noise_rel, std::uint64_t seed) {
    if (!(noise_rel >= 0)) throw std::invalid_argument("noise level must be nonnegative");
    const ForwardModel model(mesh, excitations);
    const ForwardSolution sol = model.solve(gamma);
    MeasurementSet m;
    m.mask = MeasurementMask::exclude_injection(excitations.size(), excitations.electrodes());
    m.patterns = excitations.patterns;
    m.currents = model.stacked_currents(sol, m.mask);
    m.noise_rel = noise_rel;
    m.noise_seed = seed;
    if (noise_rel > 0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < m.currents.size(); ++i) m.currents[i] += noise_rel * std::abs(m.currents[i]) * normal(rng);
    }
    return m;
}

void build_weights(MeasurementSet& m, double a) {
    if (!(a > 0)) throw std::invalid_argument("weight scale a must be positive");
    const auto rows = m.mask.rows();
    m.weights.resize(m.currents.size());
    for (Eigen::Index i = 0; i < m.currents.size(); ++i) {
        const double I = std::abs(m.currents[i]);
        if (I == 0.0) {
            const auto& r = rows[static_cast<std::size_t>(i)];
            throw std::invalid_argument("measured current is zero at pattern " + std::to_string(r.first) + ", electrode " +
                                        std::to_string(r.second) + "; cannot build weight");
        }
        m.weights[i] = std::sqrt(a) * 200.0 / I;
    }
}

}  // namespace eitms
