#pragma once

#include <iosfwd>
#include <string>

#include "eitms/config.hpp"

namespace eitms::cli {

// Exit codes: 0 success (or converged reconstruction), 1 failure, 2 reconstruction
// stopped at max_outer.
constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_max_iterations = 2;

int cmd_mesh(const RunConfig& c, std::ostream& out);
int cmd_simulate(const RunConfig& c, std::ostream& out);
int cmd_reconstruct(const RunConfig& c, std::ostream& out);
/// Empty paths fall back to the configured gamma and truth files.
int cmd_evaluate(const RunConfig& c, const std::string& rec, const std::string& truth, std::ostream& out);

struct RenderRequest {
    std::string field;    // CSV field dump
    std::string mesh;     // mesh file; empty selects the inversion mesh
    std::string scale = "conductivity";  // or "gray"
    std::string output;   // PPM path; empty replaces the field's extension with .ppm
};
int cmd_render(const RunConfig& c, const RenderRequest& r, std::ostream& out);

/// Runs the command line (argv[0] included). Errors go to `err`.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace eitms::cli
