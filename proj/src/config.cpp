#include "eitms/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace eitms {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

template <class I>
I to_int(const std::string& key, const std::string& v) {
    I x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string inclusion_text(const Inclusion& in) {
    std::string s = to_string(in.kind) + " " + fmt(in.center.x()) + " " + fmt(in.center.y()) + " " + fmt(in.size) + " " +
                    fmt(in.value);
    if (in.length != 0.0 || in.angle != 0.0) s += " " + fmt(in.length) + " " + fmt(in.angle);
    return s;
}

Inclusion parse_inclusion(const std::string& v) {
    std::istringstream ss(v);
    std::string kind;
    std::vector<std::string> tok;
    ss >> kind;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.size() != 4 && tok.size() != 6)
        throw ConfigError("phantom.inclusion: expected '<shape> x y size value [length angle]', got '" + v + "'");
    Inclusion in;
    try {
        in.kind = parse_shape_kind(kind);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("phantom.inclusion: ") + e.what());
    }
    in.center = {to_double("phantom.inclusion", tok[0]), to_double("phantom.inclusion", tok[1])};
    in.size = to_double("phantom.inclusion", tok[2]);
    in.value = to_double("phantom.inclusion", tok[3]);
    if (tok.size() == 6) {
        in.length = to_double("phantom.inclusion", tok[4]);
        in.angle = to_double("phantom.inclusion", tok[5]);
    }
    return in;
}

struct Field {
    const char* section;
    const char* key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> put;
};

#define DBL(sec, name, member) \
    Field{sec, name, [](const RunConfig& c) { return fmt(c.member); }, \
          [](RunConfig& c, const std::string& v) { c.member = to_double(sec "." name, v); }}
#define INT(sec, name, member) \
    Field{sec, name, [](const RunConfig& c) { return std::to_string(c.member); }, \
          [](RunConfig& c, const std::string& v) { c.member = to_int<decltype(c.member)>(sec "." name, v); }}
#define BOOL(sec, name, member) \
    Field{sec, name, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }, \
          [](RunConfig& c, const std::string& v) { c.member = to_bool(sec "." name, v); }}
#define STR(sec, name, member) \
    Field{sec, name, [](const RunConfig& c) { return c.member; }, [](RunConfig& c, const std::string& v) { c.member = v; }}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        DBL("mesh", "radius", mesh.radius),
        INT("mesh", "electrodes", mesh.n_electrodes),
        DBL("mesh", "coverage", mesh.electrode_coverage),
        DBL("mesh", "edge_length", mesh.target_edge_length),
        DBL("mesh", "sim_edge_length", sim_edge_length),
        DBL("mesh", "endpoint_refinement", mesh.endpoint_refinement),
        DBL("mesh", "grading", mesh.grading),
        INT("mesh", "smoothing_iterations", mesh.smoothing_iterations),

        DBL("phantom", "background", phantom.background),
        DBL("phantom", "grf_std", phantom.grf_std),
        DBL("phantom", "grf_length", phantom.grf_length),
        INT("phantom", "seed", phantom.seed),

        DBL("simulation", "zeta", zeta),
        DBL("simulation", "noise", noise),
        INT("simulation", "seed", noise_seed),

        Field{"reconstruction", "regularizer", [](const RunConfig& c) { return to_string(c.reg.kind); },
              [](RunConfig& c, const std::string& v) {
                  try {
                      c.reg.kind = parse_regularizer(v);
                  } catch (const std::invalid_argument& e) {
                      throw ConfigError(std::string("reconstruction.regularizer: ") + e.what());
                  }
              }},
        DBL("reconstruction", "lambda", reg.at.lambda),
        DBL("reconstruction", "alpha", reg.at.alpha),
        DBL("reconstruction", "a", reg.a),
        DBL("reconstruction", "epsilon_lambda", reg.at.epsilon_lambda),
        BOOL("reconstruction", "halved_quadrature", reg.at.halved_quadrature),
        DBL("reconstruction", "gamma_min_factor", solver.gamma_min_factor),
        DBL("reconstruction", "gamma_max", solver.gamma_max),
        DBL("reconstruction", "beta", solver.ripgn.beta),
        DBL("reconstruction", "w", solver.ripgn.w),
        INT("reconstruction", "max_outer", solver.ripgn.max_outer),
        DBL("reconstruction", "outer_tol", solver.ripgn.outer_tol),
        INT("reconstruction", "outer_window", solver.ripgn.window),
        DBL("reconstruction", "t", solver.pdps.t),
        INT("reconstruction", "s_update_period", solver.pdps.s_update_period),
        INT("reconstruction", "max_inner", solver.pdps.max_inner),
        INT("reconstruction", "min_inner", solver.pdps.min_inner),
        DBL("reconstruction", "inner_tol", solver.pdps.inner_tol),
        DBL("reconstruction", "L_margin", solver.pdps.L_margin),
        INT("reconstruction", "power_iterations", solver.pdps.power_iterations),

        STR("output", "dir", output_dir),
        STR("output", "mesh", mesh_file),
        STR("output", "sim_mesh", sim_mesh_file),
        STR("output", "measurements", measurements_file),
        STR("output", "truth", truth_file),
        STR("output", "gamma", gamma_file),
        STR("output", "z", z_file),
        STR("output", "trace", trace_file),
        STR("output", "report", report_file),
        BOOL("output", "render", render),
        INT("output", "render_resolution", render_resolution),
    };
    return f;
}

#undef DBL
#undef INT
#undef BOOL
#undef STR

void assign(RunConfig& c, const std::string& section, const std::string& key, const std::string& value,
            bool& inclusions_reset) {
    if (section == "phantom" && key == "inclusion") {
        if (!inclusions_reset) {
            c.phantom.inclusions.clear();
            inclusions_reset = true;
        }
        if (value != "none") c.phantom.inclusions.push_back(parse_inclusion(value));
        return;
    }
    for (const auto& f : fields())
        if (section == f.section && key == f.key) {
            f.put(c, value);
            return;
        }
    throw ConfigError("unknown key '" + section + "." + key + "'");
}

}  // namespace

std::filesystem::path RunConfig::resolve(const std::string& name) const {
    const std::filesystem::path p(name);
    return p.is_absolute() ? p : std::filesystem::path(output_dir) / p;
}

DiskMeshSpec RunConfig::sim_mesh() const {
    DiskMeshSpec s = mesh;
    s.target_edge_length = sim_edge_length;
    return s;
}

void RunConfig::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(what);
    };
    need(mesh.radius > 0, "mesh.radius must be positive");
    need(mesh.n_electrodes >= 2, "mesh.electrodes must be at least 2");
    need(mesh.electrode_coverage > 0 && mesh.electrode_coverage < 1.0 / mesh.n_electrodes,
         "mesh.coverage must lie in (0, 1/electrodes)");
    need(mesh.target_edge_length > 0, "mesh.edge_length must be positive");
    need(sim_edge_length > 0, "mesh.sim_edge_length must be positive");
    need(phantom.background > 0, "phantom.background must be positive");
    need(phantom.grf_std >= 0, "phantom.grf_std must be non-negative");
    need(phantom.grf_length > 0, "phantom.grf_length must be positive");
    for (const auto& in : phantom.inclusions) {
        try {
            in.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("phantom.inclusion: ") + e.what());
        }
    }
    need(zeta > 0, "simulation.zeta must be positive");
    need(noise >= 0, "simulation.noise must be non-negative");
    need(solver.gamma_min_factor > 0, "reconstruction.gamma_min_factor must be positive");
    need(solver.gamma_max > 0, "reconstruction.gamma_max must be positive");
    need(render_resolution >= 32, "output.render_resolution must be at least 32");
    try {
        reg.validate();
        solver.ripgn.validate();
        solver.pdps.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("reconstruction: ") + e.what());
    }
}

void RunConfig::set(const std::vector<std::string>& assignments) {
    bool reset = false;
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        const auto dot = a.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("expected section.key=value, got '" + a + "'");
        assign(*this, trim(a.substr(0, dot)), trim(a.substr(dot + 1, eq - dot - 1)), trim(a.substr(eq + 1)), reset);
    }
}

bool RunConfig::operator==(const RunConfig& o) const {
    std::ostringstream a, b;
    write_config(*this, a);
    write_config(o, b);
    return a.str() == b.str();
}

RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::string line, section;
    std::size_t n = 0;
    bool inclusions_reset = false;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError("unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("expected key = value");
            if (section.empty()) throw ConfigError("key outside of any section");
            assign(c, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), inclusions_reset);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
        }
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in);
}

void write_config(const RunConfig& c, std::ostream& out) {
    std::string section;
    for (const auto& f : fields()) {
        if (section != f.section) {
            if (!section.empty()) {
                if (section == "phantom") {
                    if (c.phantom.inclusions.empty()) out << "inclusion = none\n";
                    for (const auto& in : c.phantom.inclusions) out << "inclusion = " << inclusion_text(in) << '\n';
                }
                out << '\n';
            }
            section = f.section;
            out << '[' << section << "]\n";
        }
        out << f.key << " = " << f.get(c) << '\n';
    }
}

}  // namespace eitms
