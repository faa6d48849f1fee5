#pragma once

#include <cmath>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "eitms/mesh.hpp"

namespace testing_helpers {

using eitms::Edge;
using eitms::Mesh;
using eitms::Point;
using eitms::Triangle;

/// Structured (n x n cell) square [0, s]^2 with one electrode in the middle third of each side.
inline Mesh square_mesh(int n, double s = 1.0) {
    std::vector<Point> pts;
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) pts.emplace_back(s * i / n, s * j / n);
    std::vector<Triangle> tri;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            tri.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            tri.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    std::vector<std::vector<Edge>> el(4);
    for (int i = n / 3; i < n - n / 3; ++i) {
        el[0].push_back({id(i, 0), id(i + 1, 0)});
        el[1].push_back({id(n, i), id(n, i + 1)});
        el[2].push_back({id(i, n), id(i + 1, n)});
        el[3].push_back({id(0, i), id(0, i + 1)});
    }
    return Mesh(pts, tri, el);
}

/// Red refinement: each triangle split into four through its edge midpoints.
inline Mesh refine_uniform(const Mesh& m) {
    std::vector<Point> pts = m.nodes();
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        pts.push_back(0.5 * (m.node(a) + m.node(b)));
        const int id = static_cast<int>(pts.size()) - 1;
        mid.emplace(key, id);
        return id;
    };
    std::vector<Triangle> tri;
    for (const auto& t : m.triangles()) {
        const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
        tri.push_back({t[0], ab, ca});
        tri.push_back({ab, t[1], bc});
        tri.push_back({ca, bc, t[2]});
        tri.push_back({ab, bc, ca});
    }
    std::vector<std::vector<Edge>> el;
    for (const auto& group : m.electrode_edges()) {
        std::vector<Edge> g;
        for (const auto& e : group) {
            const int c = midpoint(e[0], e[1]);
            g.push_back({e[0], c});
            g.push_back({c, e[1]});
        }
        el.push_back(g);
    }
    return Mesh(pts, tri, el);
}

/// Random non-degenerate triangle with vertices in [-1, 1]^2 scaled by `scale`.
template <class Rng>
Mesh random_triangle(Rng& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        std::vector<Point> p{scale * Point(u(rng), u(rng)), scale * Point(u(rng), u(rng)), scale * Point(u(rng), u(rng))};
        const Point a = p[1] - p[0], b = p[2] - p[0];
        const double area2 = std::abs(a.x() * b.y() - a.y() * b.x());
        if (area2 > 0.05 * scale * scale) return Mesh(p, {Triangle{0, 1, 2}}, {});
    }
}

/// 7-point degree-5 rule on the reference triangle: barycentric points and weights summing to 1.
struct GaussPoint {
    double l0, l1, l2, w;
};
inline std::vector<GaussPoint> gauss7() {
    const double r = std::sqrt(15.0);
    const double b1 = (6.0 - r) / 21.0, b2 = (6.0 + r) / 21.0;
    const double w1 = (155.0 - r) / 1200.0, w2 = (155.0 + r) / 1200.0;
    return {{1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 40},
            {b1, b1, 1 - 2 * b1, w1}, {b1, 1 - 2 * b1, b1, w1}, {1 - 2 * b1, b1, b1, w1},
            {b2, b2, 1 - 2 * b2, w2}, {b2, 1 - 2 * b2, b2, w2}, {1 - 2 * b2, b2, b2, w2}};
}

/// Golden-section minimization of a unimodal function on [lo, hi] in extended precision.
template <class F>
long double golden_min(F f, long double lo, long double hi, int iters = 200) {
    const long double g = (std::sqrt(5.0L) - 1.0L) / 2.0L;
    long double a = lo, b = hi;
    long double c = b - g * (b - a), d = a + g * (b - a);
    long double fc = f(c), fd = f(d);
    for (int i = 0; i < iters && b - a > 0; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5L * (a + b);
}

}  // namespace testing_helpers
