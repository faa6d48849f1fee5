#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eitms {

using Point = Eigen::Vector2d;
using NodalField = Eigen::VectorXd;
using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

/// Constant gradients of the three P1 hat functions on one triangle, one row per local node.
using BasisGradients = Eigen::Matrix<double, 3, 2>;

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// 2D triangular P1 mesh with boundary electrode edge groups.
///
/// Immutable after construction: geometry (areas, basis gradients, node
/// to element adjacency) is derived once in the constructor, so a Mesh can
/// be shared read-only across threads.
class Mesh {
public:
    Mesh() = default;

    /// Triangles are reoriented counter-clockwise. Throws std::invalid_argument on
    /// out-of-range indices, degenerate triangles, or electrode edges that are not
    /// on the boundary or are shared between electrodes.
    Mesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
         std::vector<std::vector<Edge>> electrode_edges);

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_elements() const { return triangles_.size(); }
    std::size_t num_electrodes() const { return electrodes_.size(); }

    const std::vector<Point>& nodes() const { return nodes_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<std::vector<Edge>>& electrode_edges() const { return electrodes_; }
    const std::vector<double>& element_area() const { return area_; }
    const std::vector<BasisGradients>& basis_gradients() const { return grad_; }

    const Point& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const Triangle& triangle(std::size_t e) const { return triangles_[e]; }
    double area(std::size_t e) const { return area_[e]; }
    const BasisGradients& gradients(std::size_t e) const { return grad_[e]; }

    /// CSR adjacency node -> incident elements, sorted by element index.
    const std::vector<int>& node_element_offsets() const { return node_elem_ptr_; }
    const std::vector<int>& node_element_indices() const { return node_elem_idx_; }

    /// Boundary edges (edges with exactly one incident triangle), node pair sorted.
    const std::vector<Edge>& boundary_edges() const { return boundary_; }

    double total_area() const;
    double electrode_length(std::size_t k) const;
    double max_edge_length() const;
    double min_angle_degrees() const;
    /// Lumped (row-sum mass) area per node: sum of A_E / 3 over incident elements.
    Eigen::VectorXd lumped_node_area() const;

private:
    std::vector<Point> nodes_;
    std::vector<Triangle> triangles_;
    std::vector<std::vector<Edge>> electrodes_;
    std::vector<double> area_;
    std::vector<BasisGradients> grad_;
    std::vector<int> node_elem_ptr_;
    std::vector<int> node_elem_idx_;
    std::vector<Edge> boundary_;
};

struct DiskMeshSpec {
    double radius = 0.15;
    int n_electrodes = 16;
    /// Fraction of the perimeter covered by each electrode.
    double electrode_coverage = 1.0 / 32.0;
    double target_edge_length = 0.01;
    /// Edge length at electrode endpoints relative to target_edge_length (1 = uniform).
    double endpoint_refinement = 0.25;
    /// Growth of the local edge length per unit distance from the nearest electrode endpoint.
    double grading = 0.3;
    int smoothing_iterations = 200;
};

/// Disk triangulation graded towards the electrode endpoints. Points are seeded
/// in the upper half, spring-smoothed and Delaunay triangulated, then mirrored
/// across the x axis so the mesh is exactly symmetric. Electrode 0 is centred on
/// the positive x axis; numbering is counter-clockwise. Electrode endpoints are
/// boundary nodes. Minimum angles stay above 20 degrees as long as the target
/// edge length is below about 2/3 of the electrode length.
Mesh generate_disk_mesh(const DiskMeshSpec& spec);

Mesh scale_mesh(const Mesh& mesh, double c);

/// Mirror image across the x axis; electrode k maps to electrode (P - k) mod P.
Mesh reflect_mesh_x_axis(const Mesh& mesh);

/// Point location on a mesh using a uniform bucket grid.
class PointLocator {
public:
    explicit PointLocator(const Mesh& mesh);

    struct Hit {
        std::size_t element;
        Eigen::Vector3d barycentric;
        double distance;  // 0 if inside
    };

    /// Containing element, or the nearest element with clamped barycentric
    /// coordinates if the point lies outside; distance reports the gap.
    Hit locate(const Point& p) const;

private:
    const Mesh* mesh_;
    Eigen::Vector2d lo_, cell_;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> buckets_;
    Hit nearest_brute(const Point& p) const;
};

/// Barycentric coordinates of p in element e (may be negative outside).
Eigen::Vector3d barycentric(const Mesh& mesh, std::size_t e, const Point& p);

/// P1 evaluation of a source nodal field at every destination node. Destination
/// nodes outside the source domain by less than `tolerance` are snapped to the
/// nearest element; a negative tolerance selects 1e-2 of the source bounding-box
/// diagonal.
NodalField interpolate_field(const Mesh& src, const NodalField& field, const Mesh& dst,
                             double tolerance = -1.0);

void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);
void write_mesh(const Mesh& mesh, std::ostream& out);
Mesh read_mesh(std::istream& in);

}  // namespace eitms
