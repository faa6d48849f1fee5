#pragma once

// Run configuration: a flat text file of `key = value` lines grouped under
// `[section]` headers. '#' starts a comment. Keys not listed in the defaults
// are rejected. The only repeatable key is phantom.inclusion, whose value is
//   <shape> <x> <y> <size> <value> [length] [angle]
// with shape one of circle, square, stadium, triangle.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "eitms/mesh.hpp"
#include "eitms/optimize.hpp"
#include "eitms/phantoms.hpp"

namespace eitms {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    DiskMeshSpec mesh;          // inversion mesh
    double sim_edge_length = 0.0085;

    PhantomSpec phantom = PhantomSpec::case1_analog();

    double zeta = 1e-5;
    double noise = 1e-4;
    std::uint64_t noise_seed = 7;

    RegularizerConfig reg;
    RipgnOptions solver;

    std::string output_dir = "out";
    std::string mesh_file = "mesh.txt";
    std::string sim_mesh_file = "sim_mesh.txt";
    std::string measurements_file = "measurements.txt";
    std::string truth_file = "truth.csv";
    std::string gamma_file = "gamma.csv";
    std::string z_file = "z.csv";
    std::string trace_file = "trace.csv";
    std::string report_file = "report.csv";
    bool render = true;
    int render_resolution = 256;

    /// output_dir / name unless name is absolute.
    std::filesystem::path resolve(const std::string& name) const;
    DiskMeshSpec sim_mesh() const;
    /// Positivity and range checks mirroring the module preconditions.
    void validate() const;

    /// Applies `section.key=value` assignments in order. The first phantom.inclusion
    /// replaces the configured list, later ones append.
    void set(const std::vector<std::string>& assignments);
    void set(const std::string& assignment) { set(std::vector<std::string>{assignment}); }

    bool operator==(const RunConfig& o) const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
void write_config(const RunConfig& c, std::ostream& out);

}  // namespace eitms
