#include <fstream>
#include <iomanip>
#include <sstream>

#include "eitms/mesh.hpp"

namespace eitms {

// Text format:
//   NODES <n>            then n lines "x y"
//   TRIANGLES <m>        then m lines "a b c" (0-based node indices)
//   ELECTRODES <P> <E>   then E lines "k a b" (electrode index, edge nodes)
// Blank lines and lines starting with '#' are ignored.

void write_mesh(const Mesh& mesh, std::ostream& out) {
    out << "# eitms mesh\n";
    out << "NODES " << mesh.num_nodes() << '\n';
    out << std::setprecision(17);
    for (const auto& p : mesh.nodes()) out << p.x() << ' ' << p.y() << '\n';
    out << "TRIANGLES " << mesh.num_elements() << '\n';
    for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    std::size_t n_edges = 0;
    for (const auto& el : mesh.electrode_edges()) n_edges += el.size();
    out << "ELECTRODES " << mesh.num_electrodes() << ' ' << n_edges << '\n';
    for (std::size_t k = 0; k < mesh.num_electrodes(); ++k)
        for (const auto& e : mesh.electrode_edges()[k]) out << k << ' ' << e[0] << ' ' << e[1] << '\n';
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_mesh(mesh, out);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // next non-empty, non-comment line; false at EOF
    bool next(std::istringstream& ss) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            ss.clear();
            ss.str(line);
            return true;
        }
        return false;
    }

    void expect(std::istringstream& ss, const char* what) {
        if (!next(ss)) throw ParseError(std::string("unexpected end of file, expected ") + what, line_no_ + 1);
    }

    std::size_t line() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

template <class... T>
void read_fields(std::istringstream& ss, std::size_t line, const char* what, T&... v) {
    ((ss >> v), ...);
    std::string rest;
    if (!ss || (ss >> rest)) throw ParseError(std::string("malformed ") + what + " record", line);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
    LineReader reader(in);
    std::istringstream ss;
    std::string tag;

    reader.expect(ss, "NODES header");
    std::size_t n = 0;
    read_fields(ss, reader.line(), "NODES header", tag, n);
    if (tag != "NODES") throw ParseError("expected NODES section", reader.line());
    std::vector<Point> nodes(n);
    for (auto& p : nodes) {
        reader.expect(ss, "node record");
        double x, y;
        read_fields(ss, reader.line(), "node", x, y);
        p = Point(x, y);
    }

    reader.expect(ss, "TRIANGLES header");
    std::size_t m = 0;
    read_fields(ss, reader.line(), "TRIANGLES header", tag, m);
    if (tag != "TRIANGLES") throw ParseError("expected TRIANGLES section", reader.line());
    std::vector<Triangle> tris(m);
    for (auto& t : tris) {
        reader.expect(ss, "triangle record");
        long a, b, c;
        read_fields(ss, reader.line(), "triangle", a, b, c);
        for (long v : {a, b, c})
            if (v < 0 || static_cast<std::size_t>(v) >= n)
                throw ParseError("triangle node index " + std::to_string(v) + " out of range", reader.line());
        t = {static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)};
    }

    reader.expect(ss, "ELECTRODES header");
    std::size_t P = 0, n_edges = 0;
    read_fields(ss, reader.line(), "ELECTRODES header", tag, P, n_edges);
    if (tag != "ELECTRODES") throw ParseError("expected ELECTRODES section", reader.line());
    std::vector<std::vector<Edge>> el(P);
    for (std::size_t i = 0; i < n_edges; ++i) {
        reader.expect(ss, "electrode record");
        long k, a, b;
        read_fields(ss, reader.line(), "electrode", k, a, b);
        if (k < 0 || static_cast<std::size_t>(k) >= P)
            throw ParseError("electrode index " + std::to_string(k) + " out of range", reader.line());
        for (long v : {a, b})
            if (v < 0 || static_cast<std::size_t>(v) >= n)
                throw ParseError("electrode node index " + std::to_string(v) + " out of range", reader.line());
        el[static_cast<std::size_t>(k)].push_back({static_cast<int>(a), static_cast<int>(b)});
    }
    if (reader.next(ss)) throw ParseError("trailing content after ELECTRODES section", reader.line());

    try {
        return Mesh(std::move(nodes), std::move(tris), std::move(el));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), reader.line());
    }
}

Mesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file " + path.string());
    return read_mesh(in);
}

}  // namespace eitms
