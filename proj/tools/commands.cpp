#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "eitms/cem.hpp"
#include "eitms/metrics.hpp"
#include "eitms/optimize.hpp"
#include "eitms/phantoms.hpp"

namespace eitms::cli {

namespace {

void ensure_dir(const RunConfig& c) { std::filesystem::create_directories(c.output_dir); }

Mesh load_existing_mesh(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw std::runtime_error("mesh file " + p.string() + " not found (run `eitms mesh` first)");
    return load_mesh(p);
}

ExcitationSet excitations_for(const MeasurementSet& m, double zeta) {
    ExcitationSet ex;
    ex.patterns = m.patterns;
    ex.contact_impedance = Eigen::VectorXd::Constant(m.mask.electrodes(), zeta);
    return ex;
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

}  // namespace

int cmd_mesh(const RunConfig& c, std::ostream& out) {
    ensure_dir(c);
    const Mesh inv = generate_disk_mesh(c.mesh);
    save_mesh(inv, c.resolve(c.mesh_file));
    out << "inversion mesh: " << inv.num_nodes() << " nodes, " << inv.num_elements() << " elements -> "
        << c.resolve(c.mesh_file).string() << '\n';
    const Mesh sim = generate_disk_mesh(c.sim_mesh());
    save_mesh(sim, c.resolve(c.sim_mesh_file));
    out << "simulation mesh: " << sim.num_nodes() << " nodes, " << sim.num_elements() << " elements -> "
        << c.resolve(c.sim_mesh_file).string() << '\n';
    return exit_ok;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    ensure_dir(c);
    const Mesh sim = load_existing_mesh(c.resolve(c.sim_mesh_file));
    const NodalField truth = build_phantom(sim, c.phantom);
    const auto ex = ExcitationSet::unit_potentials(static_cast<int>(sim.num_electrodes()), c.zeta);
    const MeasurementSet m = simulate_measurements(sim, truth, ex, c.noise, c.noise_seed);
    save_measurements(m, c.resolve(c.measurements_file));
    save_field_csv(sim, truth, c.resolve(c.truth_file));
    out << "M = " << m.size() << " measurements -> " << c.resolve(c.measurements_file).string() << '\n';
    out << "truth field -> " << c.resolve(c.truth_file).string() << '\n';
    return exit_ok;
}

int cmd_reconstruct(const RunConfig& c, std::ostream& out) {
    ensure_dir(c);
    const Mesh mesh = load_existing_mesh(c.resolve(c.mesh_file));
    const auto mpath = c.resolve(c.measurements_file);
    if (!std::filesystem::exists(mpath)) throw std::runtime_error("measurement file " + mpath.string() + " not found");
    MeasurementSet m = load_measurements(mpath);
    if (m.mask.electrodes() != static_cast<int>(mesh.num_electrodes()))
        throw std::runtime_error("measurement file has " + std::to_string(m.mask.electrodes()) + " electrodes, mesh has " +
                                 std::to_string(mesh.num_electrodes()));
    build_weights(m, c.reg.data_weight_scale());
    const ForwardModel model(mesh, excitations_for(m, c.zeta));

    RipgnOptions opt = c.solver;
    opt.progress = [&out](const TraceRecord& r) {
        if (r.iteration % 10 == 0)
            out << "iter " << r.iteration << "  objective " << num(r.objective) << "  inner " << r.inner_iterations << '\n'
                << std::flush;
    };
    const ReconstructionResult res = ripgn_run(model, m, c.reg, opt);
    if (res.status == RunStatus::solver_failure) throw std::runtime_error("solver failure: " + res.message);
    save_field_csv(mesh, res.gamma, c.resolve(c.gamma_file));
    save_field_csv(mesh, res.z, c.resolve(c.z_file));
    {
        std::ofstream t(c.resolve(c.trace_file));
        write_trace_csv(res.objective_trace, t);
    }
    if (c.render) {
        auto g = c.resolve(c.gamma_file).replace_extension(".ppm");
        save_ppm(render_field(mesh, res.gamma, ColorScale::conductivity(), c.render_resolution), g);
        if (c.reg.kind == Regularizer::at) {
            auto zp = c.resolve(c.z_file).replace_extension(".ppm");
            save_ppm(render_field(mesh, res.z, ColorScale::grayscale(), c.render_resolution), zp);
        }
    }
    const double first = res.objective_trace.front().objective, last = res.objective_trace.back().objective;
    out << to_string(c.reg.kind) << ": " << res.outer_iterations << " outer / " << res.total_inner_iterations
        << " inner iterations, gamma_hmg " << num(res.gamma_hmg) << ", objective " << num(first) << " -> " << num(last)
        << ", " << num(res.wall_time) << " s\n";
    if (res.status == RunStatus::converged) {
        out << "converged\n";
        return exit_ok;
    }
    out << "stopped at max_outer without meeting outer_tol\n";
    return exit_max_iterations;
}

int cmd_evaluate(const RunConfig& c, const std::string& rec_path, const std::string& truth_path, std::ostream& out) {
    const Mesh mesh = load_existing_mesh(c.resolve(c.mesh_file));
    const Mesh sim = load_existing_mesh(c.resolve(c.sim_mesh_file));
    const NodalField rec = load_field_csv(mesh, rec_path.empty() ? c.resolve(c.gamma_file) : std::filesystem::path(rec_path));
    const NodalField truth = load_field_csv(sim, truth_path.empty() ? c.resolve(c.truth_file) : std::filesystem::path(truth_path));

    std::ostringstream rep;
    rep << "metric,value\n";
    rep << "relative_error_percent," << num(relative_error(mesh, rec, sim, truth)) << '\n';
    for (double f : {0.5, 0.7}) {
        const auto r = hwhm_areas(mesh, rec, f);
        const auto t = hwhm_areas(sim, truth, f);
        const std::string tag = f == 0.5 ? "50" : "70";
        rep << "hwhm" << tag << "_conductive_area_rec," << num(r.conductive) << '\n'
            << "hwhm" << tag << "_resistive_area_rec," << num(r.resistive) << '\n'
            << "hwhm" << tag << "_conductive_area_truth," << num(t.conductive) << '\n'
            << "hwhm" << tag << "_resistive_area_truth," << num(t.resistive) << '\n';
        if (r.no_conductive) rep << "hwhm" << tag << "_no_conductive_rec,1\n";
        if (r.no_resistive) rep << "hwhm" << tag << "_no_resistive_rec,1\n";
    }
    const auto trace = c.resolve(c.trace_file);
    if (std::filesystem::exists(trace)) {
        std::ifstream in(trace);
        std::string line;
        std::getline(in, line);
        double first = NAN, last = NAN;
        int iters = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string it, obj;
            std::getline(ss, it, ',');
            std::getline(ss, obj, ',');
            last = std::stod(obj);
            if (std::isnan(first)) first = last;
            iters = std::stoi(it);
        }
        if (!std::isnan(first)) {
            rep << "objective_initial," << num(first) << '\n'
                << "objective_final," << num(last) << '\n'
                << "objective_ratio," << num(last / first) << '\n'
                << "outer_iterations," << iters << '\n';
        }
    }
    out << rep.str();
    if (std::filesystem::exists(c.output_dir)) {
        std::ofstream f(c.resolve(c.report_file));
        f << rep.str();
    }
    return exit_ok;
}

int cmd_render(const RunConfig& c, const RenderRequest& r, std::ostream& out) {
    const Mesh mesh = load_existing_mesh(r.mesh.empty() ? c.resolve(c.mesh_file) : std::filesystem::path(r.mesh));
    const NodalField f = load_field_csv(mesh, r.field);
    ColorScale scale = ColorScale::conductivity();
    if (r.scale == "gray") scale = ColorScale::grayscale();
    else if (r.scale != "conductivity") throw std::invalid_argument("unknown color scale '" + r.scale + "'");
    const std::filesystem::path dst = r.output.empty() ? std::filesystem::path(r.field).replace_extension(".ppm")
                                                       : std::filesystem::path(r.output);
    save_ppm(render_field(mesh, f, scale, c.render_resolution), dst);
    out << "wrote " << dst.string() << '\n';
    return exit_ok;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"EIT reconstruction with phase-field, TV and smooth-gradient regularizers"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "run configuration file");
    app.add_option("--set", overrides, "override a config key: section.key=value")->allow_extra_args(false);

    auto* mesh = app.add_subcommand("mesh", "generate the inversion and simulation meshes");
    auto* sim = app.add_subcommand("simulate", "simulate noisy measurements on the simulation mesh");
    auto* rec = app.add_subcommand("reconstruct", "run the reconstruction");
    auto* eval = app.add_subcommand("evaluate", "relative error and HWHM areas");
    std::string rec_file, truth_file;
    eval->add_option("--rec", rec_file, "reconstructed field CSV (default: output.gamma)");
    eval->add_option("--truth", truth_file, "truth field CSV (default: output.truth)");
    auto* render = app.add_subcommand("render", "render a field CSV to PPM");
    RenderRequest rr;
    render->add_option("field", rr.field, "field CSV")->required();
    render->add_option("--mesh", rr.mesh, "mesh file (default: output.mesh)");
    render->add_option("--scale", rr.scale, "conductivity or gray")->check(CLI::IsMember({"conductivity", "gray"}));
    render->add_option("-o,--output", rr.output, "output PPM");
    auto* show = app.add_subcommand("config", "print the resolved configuration");
    for (auto* s : {mesh, sim, rec, eval, render, show}) {
        s->add_option("-c,--config", config_path, "run configuration file");
        s->add_option("--set", overrides, "override a config key: section.key=value")->allow_extra_args(false);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code == 0 ? exit_ok : exit_failure;
    }

    try {
        RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
        c.set(overrides);
        c.validate();
        if (*show) {
            write_config(c, out);
            return exit_ok;
        }
        if (*mesh) return cmd_mesh(c, out);
        if (*sim) return cmd_simulate(c, out);
        if (*rec) return cmd_reconstruct(c, out);
        if (*eval) return cmd_evaluate(c, rec_file, truth_file, out);
        return cmd_render(c, rr, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
}

}  // namespace eitms::cli
