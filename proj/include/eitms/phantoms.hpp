#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eitms/cem.hpp"
#include "eitms/measurements.hpp"
#include "eitms/mesh.hpp"

namespace eitms {

enum class ShapeKind { circle, square, stadium, triangle };

std::string to_string(ShapeKind k);
ShapeKind parse_shape_kind(const std::string& s);

/// Geometric inclusion. `size` is the circle radius, the square side, the stadium
/// cap radius or the side of the equilateral triangle; `length` is the straight
/// part of a stadium. `angle` rotates the shape about its centre (radians).
struct Inclusion {
    ShapeKind kind = ShapeKind::circle;
    Point center = Point::Zero();
    double size = 0.0;
    double length = 0.0;
    double angle = 0.0;
    double value = 1.0;

    bool contains(const Point& x) const;
    double area() const;
    double perimeter() const;
    void validate() const;
};

/// Sampler for a zero-mean field with covariance sigma^2 exp(-|x-y|^2 / (2 l^2)) at the
/// mesh nodes. The dense node covariance is factorized once.
class GrfSampler {
public:
    static constexpr std::size_t max_nodes = 6000;

    GrfSampler(const Mesh& mesh, double marginal_std, double correlation_length);

    template <class Rng>
    NodalField sample(double mean, Rng& rng) const {
        Eigen::VectorXd xi(static_cast<Eigen::Index>(n_));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
        return draw(mean, xi);
    }

    /// mean + L xi for a given standard-normal vector xi.
    NodalField draw(double mean, const Eigen::VectorXd& xi) const;

private:
    std::size_t n_;
    double sigma_;
    Eigen::MatrixXd chol_;  // lower factor; empty when sigma == 0
};

NodalField sample_grf(const Mesh& mesh, double mean, double marginal_std, double correlation_length,
                      std::uint64_t seed);

/// Sets nodes inside the shape to its value. Warns on std::clog if the shape
/// reaches outside the mesh. Returns the number of nodes changed to the value.
std::size_t add_inclusion(const Mesh& mesh, NodalField& field, const Inclusion& inclusion);

struct PhantomSpec {
    double background = 1.0;
    double grf_std = 0.1;
    double grf_length = 0.12;
    std::uint64_t seed = 1;
    std::vector<Inclusion> inclusions;

    /// Smooth background with a 10 S circle (r = 3 cm at (-6, 3) cm) and a
    /// 1e-4 S square (side 5 cm at (5, -4) cm).
    static PhantomSpec case1_analog();
};

NodalField build_phantom(const Mesh& mesh, const PhantomSpec& spec);

/// Runs every excitation on the (fine) mesh, drops the injection currents and adds
/// independent Gaussian noise with standard deviation noise_rel * |I|.
MeasurementSet simulate_measurements(const Mesh& mesh, const NodalField& gamma, const ExcitationSet& excitations,
                                     double noise_rel, std::uint64_t seed);

/// W_ii = sqrt(a) * 200 / |I_i|.
void build_weights(MeasurementSet& m, double a);

}  // namespace eitms
