#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eitms/mesh.hpp"

namespace eitms {

/// 100 ||rec - P truth|| / ||P truth|| with P the interpolation onto the reconstruction
/// mesh and nodal norms weighted by lumped node areas.
double relative_error(const Mesh& rec_mesh, const NodalField& rec, const Mesh& truth_mesh, const NodalField& truth);

struct HwhmAreas {
    double conductive = 0.0;  // m^2
    double resistive = 0.0;   // m^2
    double background = 0.0;
    bool no_conductive = false;
    bool no_resistive = false;
};

/// Inclusion areas by thresholding element means at a fraction f of the way from the
/// area-weighted median background to the extreme value; the conductive set is
/// removed before the resistive set is taken.
HwhmAreas hwhm_areas(const Mesh& mesh, const NodalField& gamma, double threshold_fraction = 0.5);

/// Area-weighted (lumped nodal) median.
double weighted_median(const Eigen::VectorXd& values, const Eigen::VectorXd& weights);

using Rgb = std::array<double, 3>;

class ColorScale {
public:
    struct Stop {
        double value;
        Rgb color;
    };
    explicit ColorScale(std::vector<Stop> stops);
    /// 0 black, 0.8 dark red, 1 orange, 1.2 white, 10 cyan.
    static ColorScale conductivity();
    /// 0 black to 1 white, for the phase field.
    static ColorScale grayscale();

    Rgb map(double v) const;
    std::array<std::uint8_t, 3> map_bytes(double v) const;
    const std::vector<Stop>& stops() const { return stops_; }

private:
    std::vector<Stop> stops_;
};

/// Binary PPM (P6) of the P1 field over the mesh bounding box, `resolution` pixels
/// across the longer side. Pixels outside the domain are white.
std::string render_field(const Mesh& mesh, const NodalField& field, const ColorScale& scale, int resolution);
void save_ppm(const std::string& bytes, const std::filesystem::path& path);

/// "node,x,y,value" lines after a header.
void write_field_csv(const Mesh& mesh, const NodalField& field, std::ostream& out);
void save_field_csv(const Mesh& mesh, const NodalField& field, const std::filesystem::path& path);
/// Reads a field written by write_field_csv; node coordinates must match the mesh.
NodalField read_field_csv(const Mesh& mesh, std::istream& in);
NodalField load_field_csv(const Mesh& mesh, const std::filesystem::path& path);

}  // namespace eitms
