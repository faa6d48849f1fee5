#include "eitms/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace eitms {

double relative_error(const Mesh& rec_mesh, const NodalField& rec, const Mesh& truth_mesh, const NodalField& truth) {
    if (static_cast<std::size_t>(rec.size()) != rec_mesh.num_nodes() ||
        static_cast<std::size_t>(truth.size()) != truth_mesh.num_nodes())
        throw std::invalid_argument("field sizes do not match their meshes");
    const NodalField P = interpolate_field(truth_mesh, truth, rec_mesh);
    const Eigen::VectorXd w = rec_mesh.lumped_node_area();
    const double den = (w.array() * P.array().square()).sum();
    if (!(den > 0)) throw std::invalid_argument("reference field has zero norm");
    return 100.0 * std::sqrt((w.array() * (rec - P).array().square()).sum() / den);
}

double weighted_median(const Eigen::VectorXd& values, const Eigen::VectorXd& weights) {
    if (values.size() == 0 || values.size() != weights.size()) throw std::invalid_argument("weighted_median: bad sizes");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
    const double half = 0.5 * weights.sum();
    double acc = 0.0;
    for (auto i : idx) {
        acc += weights[i];
        if (acc >= half) return values[i];
    }
    return values[idx.back()];
}

HwhmAreas hwhm_areas(const Mesh& mesh, const NodalField& gamma, double f) {
    if (static_cast<std::size_t>(gamma.size()) != mesh.num_nodes()) throw std::invalid_argument("field size does not match mesh");
    if (!(f > 0 && f < 1)) throw std::invalid_argument("threshold fraction must lie in (0, 1)");
    HwhmAreas out;
    out.background = weighted_median(gamma, mesh.lumped_node_area());
    const double hi = gamma.maxCoeff(), lo = gamma.minCoeff();
    const double up = out.background + f * (hi - out.background);
    const double down = out.background - f * (out.background - lo);
    out.no_conductive = !(hi > out.background);
    out.no_resistive = !(lo < out.background);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        const double m = (gamma[t[0]] + gamma[t[1]] + gamma[t[2]]) / 3.0;
        if (!out.no_conductive && m >= up) out.conductive += mesh.area(e);
        else if (!out.no_resistive && m <= down) out.resistive += mesh.area(e);
    }
    return out;
}

ColorScale::ColorScale(std::vector<Stop> stops) : stops_(std::move(stops)) {
    if (stops_.empty()) throw std::invalid_argument("color scale needs at least one stop");
    for (std::size_t i = 1; i < stops_.size(); ++i)
        if (!(stops_[i].value > stops_[i - 1].value)) throw std::invalid_argument("color scale stops must be strictly increasing");
}

ColorScale ColorScale::conductivity() {
    return ColorScale({{0.0, {0.0, 0.0, 0.0}},
                       {0.8, {0.5, 0.0, 0.0}},
                       {1.0, {1.0, 0.7, 0.0}},
                       {1.2, {1.0, 1.0, 1.0}},
                       {10.0, {0.0, 1.0, 1.0}}});
}

ColorScale ColorScale::grayscale() { return ColorScale({{0.0, {0.0, 0.0, 0.0}}, {1.0, {1.0, 1.0, 1.0}}}); }

Rgb ColorScale::map(double v) const {
    if (!(v > stops_.front().value)) return stops_.front().color;
    if (v >= stops_.back().value) return stops_.back().color;
    std::size_t i = 1;
    while (stops_[i].value < v) ++i;
    const auto& a = stops_[i - 1];
    const auto& b = stops_[i];
    const double s = (v - a.value) / (b.value - a.value);
    Rgb c;
    for (int k = 0; k < 3; ++k) c[k] = a.color[k] + s * (b.color[k] - a.color[k]);
    return c;
}

std::array<std::uint8_t, 3> ColorScale::map_bytes(double v) const {
    const Rgb c = map(v);
    std::array<std::uint8_t, 3> out;
    for (int k = 0; k < 3; ++k) out[k] = static_cast<std::uint8_t>(std::clamp(c[k], 0.0, 1.0) * 255.0);
    return out;
}

std::string render_field(const Mesh& mesh, const NodalField& field, const ColorScale& scale, int resolution) {
    if (resolution < 32) throw std::invalid_argument("render resolution must be at least 32 pixels");
    if (static_cast<std::size_t>(field.size()) != mesh.num_nodes()) throw std::invalid_argument("field size does not match mesh");
    Point lo = mesh.node(0), hi = mesh.node(0);
    for (const auto& p : mesh.nodes()) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double span = std::max(hi.x() - lo.x(), hi.y() - lo.y());
    const double px = span / resolution;
    const int W = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / px)));
    const int H = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / px)));
    const std::string header = "P6\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
    std::string out(header.size() + static_cast<std::size_t>(3 * W * H), '\0');
    std::copy(header.begin(), header.end(), out.begin());
    const PointLocator loc(mesh);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const Point p(lo.x() + (c + 0.5) * px, hi.y() - (r + 0.5) * px);
            const auto hit = loc.locate(p);
            std::array<std::uint8_t, 3> rgb{255, 255, 255};
            if (hit.distance == 0.0) {
                const auto& t = mesh.triangle(hit.element);
                const double v = hit.barycentric[0] * field[t[0]] + hit.barycentric[1] * field[t[1]] + hit.barycentric[2] * field[t[2]];
                rgb = scale.map_bytes(v);
            }
            const std::size_t at = header.size() + 3 * (static_cast<std::size_t>(r) * W + c);
            for (int k = 0; k < 3; ++k) out[at + k] = static_cast<char>(rgb[k]);
        }
    }
    return out;
}

void save_ppm(const std::string& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_field_csv(const Mesh& mesh, const NodalField& field, std::ostream& out) {
    if (static_cast<std::size_t>(field.size()) != mesh.num_nodes()) throw std::invalid_argument("field size does not match mesh");
    out << "node,x,y,value\n";
    const auto prec = out.precision(17);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        const Point& p = mesh.node(static_cast<int>(i));
        out << i << ',' << p.x() << ',' << p.y() << ',' << field[static_cast<Eigen::Index>(i)] << '\n';
    }
    out.precision(prec);
}

void save_field_csv(const Mesh& mesh, const NodalField& field, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_field_csv(mesh, field, out);
}

NodalField read_field_csv(const Mesh& mesh, std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line.rfind("node,x,y,value", 0) != 0) throw ParseError("expected header 'node,x,y,value'", 1);
    NodalField f(static_cast<Eigen::Index>(mesh.num_nodes()));
    std::size_t count = 0;
    double scale = 0.0;
    for (const auto& p : mesh.nodes()) scale = std::max(scale, p.norm());
    const double tol = 1e-9 * std::max(scale, 1e-300);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::size_t i;
        double x, y, v;
        if (!(ss >> i >> x >> y >> v)) throw ParseError("malformed field record", line_no);
        if (i != count) throw ParseError("node indices must be consecutive from 0", line_no);
        if (i >= mesh.num_nodes()) throw ParseError("field has more nodes than the mesh", line_no);
        if ((mesh.node(static_cast<int>(i)) - Point(x, y)).norm() > tol)
            throw ParseError("node " + std::to_string(i) + " coordinates do not match the mesh", line_no);
        f[static_cast<Eigen::Index>(i)] = v;
        ++count;
    }
    if (count != mesh.num_nodes())
        throw ParseError("field has " + std::to_string(count) + " nodes, mesh has " + std::to_string(mesh.num_nodes()), line_no);
    return f;
}

NodalField load_field_csv(const Mesh& mesh, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open field file " + path.string());
    return read_field_csv(mesh, in);
}

}  // namespace eitms
