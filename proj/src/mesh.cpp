#include "eitms/mesh.hpp"

#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace eitms {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

Edge sorted_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

}  // namespace

Mesh::Mesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
           std::vector<std::vector<Edge>> electrode_edges)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)), electrodes_(std::move(electrode_edges)) {
    const int n = static_cast<int>(nodes_.size());
    area_.resize(triangles_.size());
    grad_.resize(triangles_.size());

    double scale = 0.0;
    for (const auto& p : nodes_) scale = std::max({scale, std::abs(p.x()), std::abs(p.y())});
    const double min_area = 1e-14 * scale * scale;

    for (std::size_t e = 0; e < triangles_.size(); ++e) {
        auto& t = triangles_[e];
        for (int v : t) {
            if (v < 0 || v >= n)
                throw std::invalid_argument("triangle " + std::to_string(e) + " references node " +
                                            std::to_string(v) + " out of range");
        }
        double a = signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
        if (a < 0) {
            std::swap(t[1], t[2]);
            a = -a;
        }
        if (!(a > min_area)) throw std::invalid_argument("triangle " + std::to_string(e) + " is degenerate");
        area_[e] = a;
        const Point& p0 = nodes_[t[0]];
        const Point& p1 = nodes_[t[1]];
        const Point& p2 = nodes_[t[2]];
        const double inv = 1.0 / (2.0 * a);
        BasisGradients g;
        g << (p1.y() - p2.y()) * inv, (p2.x() - p1.x()) * inv,
             (p2.y() - p0.y()) * inv, (p0.x() - p2.x()) * inv,
             (p0.y() - p1.y()) * inv, (p1.x() - p0.x()) * inv;
        grad_[e] = g;
    }

    std::vector<int> count(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& t : triangles_)
        for (int v : t) ++count[static_cast<std::size_t>(v) + 1];
    for (int i = 0; i < n; ++i) count[i + 1] += count[i];
    node_elem_ptr_ = count;
    node_elem_idx_.assign(static_cast<std::size_t>(count[n]), 0);
    std::vector<int> fill(count.begin(), count.end() - 1);
    for (std::size_t e = 0; e < triangles_.size(); ++e)
        for (int v : triangles_[e]) node_elem_idx_[static_cast<std::size_t>(fill[v]++)] = static_cast<int>(e);

    std::map<Edge, int> edge_count;
    for (const auto& t : triangles_)
        for (int a = 0; a < 3; ++a) ++edge_count[sorted_edge(t[a], t[(a + 1) % 3])];
    for (const auto& [edge, c] : edge_count) {
        if (c == 1) boundary_.push_back(edge);
        else if (c > 2) throw std::invalid_argument("non-manifold edge in triangulation");
    }

    std::set<Edge> used;
    for (std::size_t k = 0; k < electrodes_.size(); ++k) {
        for (auto& edge : electrodes_[k]) {
            edge = sorted_edge(edge[0], edge[1]);
            auto it = edge_count.find(edge);
            if (it == edge_count.end() || it->second != 1)
                throw std::invalid_argument("electrode " + std::to_string(k) + " edge (" +
                                            std::to_string(edge[0]) + "," + std::to_string(edge[1]) +
                                            ") is not a boundary edge");
            if (!used.insert(edge).second)
                throw std::invalid_argument("electrode " + std::to_string(k) + " shares an edge with another electrode");
        }
    }
}

double Mesh::total_area() const {
    double s = 0.0;
    for (double a : area_) s += a;
    return s;
}

double Mesh::electrode_length(std::size_t k) const {
    double s = 0.0;
    for (const auto& e : electrodes_[k]) s += (nodes_[e[1]] - nodes_[e[0]]).norm();
    return s;
}

double Mesh::max_edge_length() const {
    double m = 0.0;
    for (const auto& t : triangles_)
        for (int a = 0; a < 3; ++a) m = std::max(m, (nodes_[t[a]] - nodes_[t[(a + 1) % 3]]).norm());
    return m;
}

double Mesh::min_angle_degrees() const {
    double m = 180.0;
    for (const auto& t : triangles_) {
        for (int a = 0; a < 3; ++a) {
            const Point u = nodes_[t[(a + 1) % 3]] - nodes_[t[a]];
            const Point v = nodes_[t[(a + 2) % 3]] - nodes_[t[a]];
            const double c = std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0);
            m = std::min(m, std::acos(c) * 180.0 / std::numbers::pi);
        }
    }
    return m;
}

Eigen::VectorXd Mesh::lumped_node_area() const {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nodes_.size()));
    for (std::size_t e = 0; e < triangles_.size(); ++e)
        for (int v : triangles_[e]) w[v] += area_[e] / 3.0;
    return w;
}

// ---------------------------------------------------------------------------
// Disk generator

Mesh generate_disk_mesh(const DiskMeshSpec& spec) {
    if (!(spec.radius > 0)) throw std::invalid_argument("disk radius must be positive");
    if (spec.n_electrodes < 1) throw std::invalid_argument("at least one electrode is required");
    if (!(spec.electrode_coverage > 0) || !(spec.electrode_coverage * spec.n_electrodes < 1.0))
        throw std::invalid_argument("electrode coverage infeasible: electrodes would overlap");
    if (!(spec.target_edge_length > 0)) throw std::invalid_argument("target edge length must be positive");
    if (!(spec.endpoint_refinement > 0 && spec.endpoint_refinement <= 1))
        throw std::invalid_argument("endpoint refinement must lie in (0, 1]");
    if (!(spec.grading > 0)) throw std::invalid_argument("grading must be positive");

    const double R = spec.radius;
    const double h = spec.target_edge_length;
    const double h_end = spec.endpoint_refinement * h;
    const int P = spec.n_electrodes;
    const double pi = std::numbers::pi;
    const double half_width = pi * spec.electrode_coverage;  // angular half-width of one electrode

    std::vector<Point> endpoints;
    for (int k = 0; k < P; ++k) {
        const double c = 2.0 * pi * k / P;
        endpoints.emplace_back(R * std::cos(c - half_width), R * std::sin(c - half_width));
        endpoints.emplace_back(R * std::cos(c + half_width), R * std::sin(c + half_width));
    }
    auto spacing_at_distance = [&](double d) { return std::min(h, h_end + spec.grading * d); };
    auto spacing = [&](const Point& x) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& e : endpoints) d = std::min(d, (x - e).norm());
        return spacing_at_distance(d);
    };

    // Boundary angles over the full circle. Every electrode or gap interval is bounded
    // by electrode endpoints; points follow the graded spacing from both ends, and
    // intervals centred on 0 or pi get an even count so the axis point is a node.
    std::vector<double> angles;
    auto subdivide = [&](double a0, double a1, bool centred_on_axis) {
        const double L = (a1 - a0) * R;
        const int samples = 4096;
        std::vector<double> cum(samples + 1, 0.0);
        for (int i = 0; i < samples; ++i) {
            const double x = (i + 0.5) * L / samples;
            cum[i + 1] = cum[i] + (L / samples) / spacing_at_distance(std::min(x, L - x));
        }
        int n = std::max(1, static_cast<int>(std::lround(cum.back())));
        if (centred_on_axis && n % 2 == 1) ++n;
        for (int i = 0; i < n; ++i) {
            const double target = cum.back() * i / n;
            const auto it = std::lower_bound(cum.begin(), cum.end(), target);
            const auto j = static_cast<int>(std::distance(cum.begin(), it));
            double x = 0.0;
            if (j > 0) {
                const double f = (target - cum[j - 1]) / (cum[j] - cum[j - 1]);
                x = (j - 1 + f) * L / samples;
            }
            if (centred_on_axis && 2 * i == n) x = 0.5 * L;
            angles.push_back(a0 + x / R);
        }
    };
    auto is_axis = [&](double c) {
        double m = std::fmod(std::abs(c), pi);
        return m < 1e-9 || pi - m < 1e-9;
    };
    for (int k = 0; k < P; ++k) {
        const double c = 2.0 * pi * k / P;
        subdivide(c - half_width, c + half_width, is_axis(c));
        const double g = c + pi / P;  // gap centre
        subdivide(c + half_width, c + 2.0 * pi / P - half_width, is_axis(g));
    }

    // upper half (y >= 0) point set; the lower half is its mirror image
    std::vector<Point> pts;
    const double eps = 1e-9;
    for (double a : angles) {
        double t = std::remainder(a, 2.0 * pi);  // (-pi, pi]
        if (std::abs(t) < eps) pts.emplace_back(R, 0.0);
        else if (std::abs(std::abs(t) - pi) < eps) pts.emplace_back(-R, 0.0);
        else if (t > 0) pts.emplace_back(R * std::cos(t), R * std::sin(t));
    }

    // interior candidates in priority order: rings around electrode endpoints, then polar rings
    std::vector<Point> candidates;
    if (h_end < h) {
        for (const auto& e : endpoints) {
            const Point inward = -e.normalized();
            for (double rho = h_end; spacing_at_distance(rho) < h; rho += spacing_at_distance(rho)) {
                const double ds = spacing_at_distance(rho);
                const int n = std::max(2, static_cast<int>(std::lround(pi * rho / ds)));
                for (int j = 1; j < n; ++j) {
                    const double phi = -0.5 * pi + pi * j / n;
                    const Point d(inward.x() * std::cos(phi) - inward.y() * std::sin(phi),
                                  inward.x() * std::sin(phi) + inward.y() * std::cos(phi));
                    candidates.push_back(e + rho * d);
                }
            }
        }
    }
    const int n_rings = std::max(1, static_cast<int>(std::lround(R / h)));
    candidates.emplace_back(0.0, 0.0);
    for (int i = 1; i < n_rings; ++i) {
        const double r = R * i / n_rings;
        const int n = std::max(2, static_cast<int>(std::lround(pi * r / h)));
        for (int j = 0; j <= n; ++j) {
            if (j == 0) candidates.emplace_back(r, 0.0);
            else if (j == n) candidates.emplace_back(-r, 0.0);
            else candidates.emplace_back(r * std::cos(pi * j / n), r * std::sin(pi * j / n));
        }
    }

    // greedy acceptance: keep a candidate if it is inside the disk, off or exactly on the
    // axis, and not closer than 0.75 local spacings to an accepted point
    for (const auto& c : candidates) {
        const double s = spacing(c);
        if (c.y() < 0.0 || (c.y() > 0.0 && c.y() < 0.5 * s)) continue;
        if (c.norm() > R - 0.5 * s) continue;
        bool ok = true;
        for (const auto& q : pts) {
            if ((q - c).squaredNorm() < 0.5625 * s * s) {
                ok = false;
                break;
            }
        }
        if (ok) pts.push_back(c);
    }

    // Spring smoothing of the seeded points (repulsive bars with rest length set by the
    // local spacing). Circle nodes stay fixed, axis nodes slide along the axis.
    std::size_t n_half = pts.size();
    std::vector<int> kind(n_half, 2);  // 0 fixed, 1 axis, 2 free
    for (std::size_t i = 0; i < n_half; ++i) {
        if (std::abs(pts[i].norm() - R) < 1e-12 * R) kind[i] = 0;
        else if (pts[i].y() == 0.0) kind[i] = 1;
    }
    std::vector<Triangle> half = detail::delaunay(pts);
    std::vector<Point> last = pts;
    for (int iter = 0; iter < spec.smoothing_iterations; ++iter) {
        double moved = 0.0;
        for (std::size_t i = 0; i < n_half; ++i) moved = std::max(moved, (pts[i] - last[i]).norm() / spacing(pts[i]));
        if (iter == 0) moved = 1.0;
        if (moved > 0.1) {
            // points squeezed against the circle are surplus
            std::size_t w = 0;
            for (std::size_t i = 0; i < n_half; ++i) {
                if (kind[i] != 0 && pts[i].norm() > R - 0.4 * spacing(pts[i])) continue;
                pts[w] = pts[i];
                kind[w] = kind[i];
                ++w;
            }
            n_half = w;
            pts.resize(n_half);
            kind.resize(n_half);
            half = detail::delaunay(pts);
            last = pts;
        }
        std::vector<Edge> bars;
        bars.reserve(3 * half.size());
        for (const auto& t : half)
            for (int a = 0; a < 3; ++a) bars.push_back(sorted_edge(t[a], t[(a + 1) % 3]));
        std::sort(bars.begin(), bars.end());
        bars.erase(std::unique(bars.begin(), bars.end()), bars.end());
        double sum_l2 = 0.0, sum_s2 = 0.0;
        std::vector<double> len, rest;
        len.reserve(bars.size());
        rest.reserve(bars.size());
        for (const auto& b : bars) {
            const double l = (pts[b[0]] - pts[b[1]]).norm();
            const double s0 = spacing(0.5 * (pts[b[0]] + pts[b[1]]));
            len.push_back(l);
            rest.push_back(s0);
            sum_l2 += l * l;
            sum_s2 += s0 * s0;
        }
        const double fscale = 1.2 * std::sqrt(sum_l2 / sum_s2);
        std::vector<Point> force(n_half, Point::Zero());
        std::size_t bi = 0;
        for (const auto& b : bars) {
            const double l = len[bi], l0 = fscale * rest[bi];
            ++bi;
            if (l >= l0) continue;
            const Point f = (l0 - l) / l * (pts[b[0]] - pts[b[1]]);
            force[static_cast<std::size_t>(b[0])] += f;
            force[static_cast<std::size_t>(b[1])] -= f;
        }
        // bars to the mirror images of points near the axis
        for (std::size_t i = 0; i < n_half; ++i) {
            if (kind[i] != 2) continue;
            const double l0 = std::sqrt(3.0) * fscale * spacing(pts[i]);
            if (2.0 * pts[i].y() < l0) force[i].y() += l0 - 2.0 * pts[i].y();
        }
        double step = 0.0;
        for (std::size_t i = 0; i < n_half; ++i) {
            if (kind[i] == 0) continue;
            Point d = 0.2 * force[i];
            if (kind[i] == 1) d.y() = 0.0;
            Point q = pts[i] + d;
            const double si = spacing(q);
            if (kind[i] == 2 && q.y() < 0.2 * si) {
                q.y() = 0.0;
                kind[i] = 1;
            }
            const double rmax = R - 0.3 * si;
            if (q.norm() > rmax) q *= rmax / q.norm();
            step = std::max(step, (q - pts[i]).norm() / si);
            pts[i] = q;
        }
        if (step < 1e-3) break;
    }
    half = detail::delaunay(pts);

    double half_area = 0.0;
    for (const auto& t : half) half_area += signed_area(pts[t[0]], pts[t[1]], pts[t[2]]);

    // mirror
    std::vector<Point> nodes = pts;
    std::vector<int> mirror(n_half);
    for (std::size_t i = 0; i < n_half; ++i) {
        if (pts[i].y() == 0.0) {
            mirror[i] = static_cast<int>(i);
        } else {
            mirror[i] = static_cast<int>(nodes.size());
            nodes.emplace_back(pts[i].x(), -pts[i].y());
        }
    }
    std::vector<Triangle> tris = half;
    for (const auto& t : half) tris.push_back({mirror[t[0]], mirror[t[2]], mirror[t[1]]});

    // expected: polygon area of the boundary ring
    std::vector<std::pair<double, int>> ring;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (std::abs(nodes[i].norm() - R) < 1e-9 * R) ring.emplace_back(std::atan2(nodes[i].y(), nodes[i].x()), int(i));
    }
    std::sort(ring.begin(), ring.end());
    double poly = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i)
        poly += signed_area(Point(0, 0), nodes[ring[i].second], nodes[ring[(i + 1) % ring.size()].second]);
    if (std::abs(2.0 * half_area - poly) > 1e-10 * poly)
        throw std::runtime_error("disk triangulation does not cover the boundary polygon");

    std::vector<std::vector<Edge>> electrodes(static_cast<std::size_t>(P));
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const int a = ring[i].second, b = ring[(i + 1) % ring.size()].second;
        const Point m = 0.5 * (nodes[a] + nodes[b]);
        const double th = std::atan2(m.y(), m.x());
        for (int k = 0; k < P; ++k) {
            const double c = 2.0 * pi * k / P;
            if (std::abs(std::remainder(th - c, 2.0 * pi)) < half_width) {
                electrodes[static_cast<std::size_t>(k)].push_back({a, b});
                break;
            }
        }
    }
    return Mesh(std::move(nodes), std::move(tris), std::move(electrodes));
}

Mesh scale_mesh(const Mesh& mesh, double c) {
    if (!(c > 0)) throw std::invalid_argument("scale factor must be positive");
    std::vector<Point> nodes = mesh.nodes();
    for (auto& p : nodes) p *= c;
    return Mesh(std::move(nodes), mesh.triangles(), mesh.electrode_edges());
}

Mesh reflect_mesh_x_axis(const Mesh& mesh) {
    std::vector<Point> nodes = mesh.nodes();
    for (auto& p : nodes) p.y() = -p.y();
    const std::size_t P = mesh.num_electrodes();
    std::vector<std::vector<Edge>> el(P);
    for (std::size_t k = 0; k < P; ++k) el[(P - k) % P] = mesh.electrode_edges()[k];
    return Mesh(std::move(nodes), mesh.triangles(), std::move(el));
}

// ---------------------------------------------------------------------------
// Point location

Eigen::Vector3d barycentric(const Mesh& mesh, std::size_t e, const Point& p) {
    const auto& t = mesh.triangle(e);
    const Point& a = mesh.node(t[0]);
    const Point& b = mesh.node(t[1]);
    const Point& c = mesh.node(t[2]);
    const double A = mesh.area(e);
    return {signed_area(p, b, c) / A, signed_area(a, p, c) / A, signed_area(a, b, p) / A};
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
    Point lo = mesh.nodes().front(), hi = lo;
    for (const auto& p : mesh.nodes()) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.num_elements()) / 2.0)));
    nx_ = ny_ = side;
    lo_ = lo;
    cell_ = ((hi - lo) / side).cwiseMax(Point::Constant(1e-300));
    buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        Point tlo = mesh.node(t[0]), thi = tlo;
        for (int v : t) {
            tlo = tlo.cwiseMin(mesh.node(v));
            thi = thi.cwiseMax(mesh.node(v));
        }
        const int i0 = std::clamp(static_cast<int>((tlo.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
        const int i1 = std::clamp(static_cast<int>((thi.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
        const int j0 = std::clamp(static_cast<int>((tlo.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
        const int j1 = std::clamp(static_cast<int>((thi.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(static_cast<int>(e));
    }
}

PointLocator::Hit PointLocator::locate(const Point& p) const {
    const int i = static_cast<int>(std::floor((p.x() - lo_.x()) / cell_.x()));
    const int j = static_cast<int>(std::floor((p.y() - lo_.y()) / cell_.y()));
    if (i >= 0 && i < nx_ && j >= 0 && j < ny_) {
        for (int e : buckets_[static_cast<std::size_t>(j * nx_ + i)]) {
            Eigen::Vector3d b = barycentric(*mesh_, static_cast<std::size_t>(e), p);
            if (b.minCoeff() >= -1e-12) return {static_cast<std::size_t>(e), b, 0.0};
        }
    }
    return nearest_brute(p);
}

PointLocator::Hit PointLocator::nearest_brute(const Point& p) const {
    Hit best{0, Eigen::Vector3d::Zero(), std::numeric_limits<double>::infinity()};
    for (std::size_t e = 0; e < mesh_->num_elements(); ++e) {
        const auto& t = mesh_->triangle(e);
        Eigen::Vector3d b = barycentric(*mesh_, e, p);
        if (b.minCoeff() >= -1e-12) return {e, b, 0.0};
        for (int a = 0; a < 3; ++a) {
            const Point& u = mesh_->node(t[a]);
            const Point& w = mesh_->node(t[(a + 1) % 3]);
            const Point d = w - u;
            const double s = std::clamp((p - u).dot(d) / d.squaredNorm(), 0.0, 1.0);
            const double dist = (u + s * d - p).norm();
            if (dist < best.distance) {
                Eigen::Vector3d bc = Eigen::Vector3d::Zero();
                bc[a] = 1.0 - s;
                bc[(a + 1) % 3] = s;
                best = {e, bc, dist};
            }
        }
    }
    return best;
}

NodalField interpolate_field(const Mesh& src, const NodalField& field, const Mesh& dst, double tolerance) {
    if (static_cast<std::size_t>(field.size()) != src.num_nodes())
        throw std::invalid_argument("interpolate_field: field size does not match source mesh");
    if (tolerance < 0) {
        Point lo = src.nodes().front(), hi = lo;
        for (const auto& p : src.nodes()) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        tolerance = 1e-2 * (hi - lo).norm();
    }
    PointLocator loc(src);
    NodalField out(static_cast<Eigen::Index>(dst.num_nodes()));
    for (std::size_t i = 0; i < dst.num_nodes(); ++i) {
        const auto hit = loc.locate(dst.node(static_cast<int>(i)));
        if (hit.distance > tolerance) {
            std::ostringstream msg;
            msg << "interpolate_field: destination node " << i << " lies " << hit.distance
                << " outside the source domain (tolerance " << tolerance << ")";
            throw std::invalid_argument(msg.str());
        }
        const auto& t = src.triangle(hit.element);
        out[static_cast<Eigen::Index>(i)] =
            hit.barycentric[0] * field[t[0]] + hit.barycentric[1] * field[t[1]] + hit.barycentric[2] * field[t[2]];
    }
    return out;
}

}  // namespace eitms
