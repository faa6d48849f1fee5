#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include <gmpxx.h>

namespace eitms::detail {

namespace {

int sign(double v) { return (v > 0) - (v < 0); }
int sign(const mpq_class& v) { return sgn(v); }

}  // namespace

// Floating-point filter first; ties and near-ties are decided in rational arithmetic.
int orient(const Point& a, const Point& b, const Point& c) {
    const double l = (b.x() - a.x()) * (c.y() - a.y());
    const double r = (b.y() - a.y()) * (c.x() - a.x());
    const double det = l - r;
    if (std::abs(det) > 1e-14 * (std::abs(l) + std::abs(r))) return sign(det);
    const mpq_class ax(a.x()), ay(a.y()), bx(b.x()), by(b.y()), cx(c.x()), cy(c.y());
    return sign(mpq_class((bx - ax) * (cy - ay) - (by - ay) * (cx - ax)));
}

int incircle(const Point& a, const Point& b, const Point& c, const Point& d) {
    const double adx = a.x() - d.x(), ady = a.y() - d.y();
    const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    const double al = adx * adx + ady * ady, bl = bdx * bdx + bdy * bdy, cl = cdx * cdx + cdy * cdy;
    const double det = al * (bdx * cdy - cdx * bdy) + bl * (cdx * ady - adx * cdy) + cl * (adx * bdy - bdx * ady);
    const double perm = al * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) + bl * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                        cl * (std::abs(adx * bdy) + std::abs(bdx * ady));
    if (std::abs(det) > 1e-13 * perm) return sign(det);
    const mpq_class dx(d.x()), dy(d.y());
    const mpq_class qax = mpq_class(a.x()) - dx, qay = mpq_class(a.y()) - dy;
    const mpq_class qbx = mpq_class(b.x()) - dx, qby = mpq_class(b.y()) - dy;
    const mpq_class qcx = mpq_class(c.x()) - dx, qcy = mpq_class(c.y()) - dy;
    const mpq_class qal = qax * qax + qay * qay, qbl = qbx * qbx + qby * qby, qcl = qcx * qcx + qcy * qcy;
    const mpq_class e = qal * (qbx * qcy - qcx * qby) + qbl * (qcx * qay - qax * qcy) + qcl * (qax * qby - qbx * qay);
    return sign(e);
}

namespace {

// n[i] is the neighbour across the edge opposite v[i], -1 on the outer hull
struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> n;
    bool alive;
};

}  // namespace

// Bowyer-Watson with a walking point location and adjacency-driven cavity search.
std::vector<Triangle> delaunay(const std::vector<Point>& input) {
    const int n_real = static_cast<int>(input.size());
    if (n_real < 3) throw std::invalid_argument("delaunay: need at least three points");
    std::vector<Point> pts = input;
    Point lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Point mid = 0.5 * (lo + hi);
    const double big = 1e3 * std::max(hi.x() - lo.x(), hi.y() - lo.y());
    pts.push_back(mid + Point(-big, -big));
    pts.push_back(mid + Point(big, -big));
    pts.push_back(mid + Point(0.0, big));

    std::vector<Tri> tris;
    tris.push_back({{n_real, n_real + 1, n_real + 2}, {-1, -1, -1}, true});

    std::vector<int> order(static_cast<std::size_t>(n_real));
    for (int i = 0; i < n_real; ++i) order[static_cast<std::size_t>(i)] = i;
    std::mt19937 rng(12345);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<int> mark;  // insertion stamp of the cavity a triangle belongs to
    std::vector<int> cavity, stack;
    std::unordered_map<int, int> from, to;
    int last = 0;
    int stamp = 0;
    for (int pi : order) {
        const Point& p = pts[static_cast<std::size_t>(pi)];
        ++stamp;

        // visibility walk
        int t = last;
        for (int steps = 0;; ++steps) {
            if (steps > 4 * static_cast<int>(tris.size()) + 16) throw std::runtime_error("delaunay: point location failed");
            const auto& tr = tris[static_cast<std::size_t>(t)];
            const int start = static_cast<int>(rng() % 3);
            int next = -1;
            for (int k = 0; k < 3; ++k) {
                const int i = (start + k) % 3;
                if (orient(pts[tr.v[(i + 1) % 3]], pts[tr.v[(i + 2) % 3]], p) < 0) {
                    next = tr.n[i];
                    break;
                }
            }
            if (next < 0) break;
            t = next;
        }
        for (int v : tris[static_cast<std::size_t>(t)].v)
            if (v < n_real && pts[static_cast<std::size_t>(v)] == p) throw std::invalid_argument("delaunay: duplicate point");

        mark.resize(tris.size(), 0);
        cavity.assign(1, t);
        mark[static_cast<std::size_t>(t)] = stamp;
        stack.assign(1, t);
        while (!stack.empty()) {
            const int c = stack.back();
            stack.pop_back();
            for (int nb : tris[static_cast<std::size_t>(c)].n) {
                if (nb < 0 || mark[static_cast<std::size_t>(nb)] == stamp) continue;
                const auto& v = tris[static_cast<std::size_t>(nb)].v;
                if (incircle(pts[v[0]], pts[v[1]], pts[v[2]], p) > 0) {
                    mark[static_cast<std::size_t>(nb)] = stamp;
                    cavity.push_back(nb);
                    stack.push_back(nb);
                }
            }
        }

        from.clear();
        to.clear();
        const std::size_t first_new = tris.size();
        for (int c : cavity) {
            for (int i = 0; i < 3; ++i) {
                const Tri& tr = tris[static_cast<std::size_t>(c)];
                const int nb = tr.n[i];
                if (nb >= 0 && mark[static_cast<std::size_t>(nb)] == stamp) continue;
                const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
                if (orient(pts[a], pts[b], p) <= 0) throw std::runtime_error("delaunay: cavity is not star-shaped");
                const int id = static_cast<int>(tris.size());
                tris.push_back({{a, b, pi}, {-1, -1, nb}, true});
                if (nb >= 0) {
                    auto& o = tris[static_cast<std::size_t>(nb)];
                    for (int j = 0; j < 3; ++j)
                        if (o.n[j] == c) o.n[j] = id;
                }
                from[a] = id;
                to[b] = id;
            }
        }
        for (int c : cavity) tris[static_cast<std::size_t>(c)].alive = false;
        for (std::size_t id = first_new; id < tris.size(); ++id) {
            auto& tr = tris[id];
            tr.n[0] = from.at(tr.v[1]);  // edge (b, p)
            tr.n[1] = to.at(tr.v[0]);    // edge (p, a)
        }
        last = static_cast<int>(tris.size()) - 1;
    }

    std::vector<Triangle> out;
    for (const auto& t : tris) {
        if (!t.alive) continue;
        if (t.v[0] >= n_real || t.v[1] >= n_real || t.v[2] >= n_real) continue;
        out.push_back({t.v[0], t.v[1], t.v[2]});
    }
    return out;
}

}  // namespace eitms::detail
