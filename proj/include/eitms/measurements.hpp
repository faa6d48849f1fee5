#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "eitms/kernels.hpp"

namespace eitms {

/// Which (pattern j, electrode k) currents are measured. Rows of every stacked
/// measurement vector follow pattern-major order over the active entries.
class MeasurementMask {
public:
    MeasurementMask() = default;
    MeasurementMask(int n_patterns, int n_electrodes, bool value = true);

    /// All currents except the injection current k == j (requires P2 <= P1).
    static MeasurementMask exclude_injection(int n_patterns, int n_electrodes);

    int patterns() const { return patterns_; }
    int electrodes() const { return electrodes_; }
    bool active(int j, int k) const { return on_[static_cast<std::size_t>(j * electrodes_ + k)] != 0; }
    void set(int j, int k, bool v);

    std::size_t count() const;
    kernels::RowIndex rows() const;

    friend bool operator==(const MeasurementMask&, const MeasurementMask&) = default;

private:
    int patterns_ = 0;
    int electrodes_ = 0;
    std::vector<std::uint8_t> on_;
};

/// Measured (or simulated) electrode currents with their selection mask and
/// the diagonal of the data weight matrix W.
struct MeasurementSet {
    MeasurementMask mask;
    /// Electrode potentials per pattern (volts), one vector of length P1 per pattern.
    std::vector<Eigen::VectorXd> patterns;
    Eigen::VectorXd currents;  // length mask.count(), amperes
    Eigen::VectorXd weights;   // diagonal of W; empty until build_weights
    double noise_rel = 0.0;
    std::uint64_t noise_seed = 0;

    std::size_t size() const { return static_cast<std::size_t>(currents.size()); }
};

/// ASCII measurement file:
///   EITMS-MEASUREMENTS 1
///   electrodes <P1>
///   patterns <P2>
///   noise <rel> <seed>
///   excitation            (P2 lines of P1 potentials)
///   mask                  (P2 lines of P1 characters '0'/'1')
///   data <M>              (M lines "pattern electrode current")
void write_measurements(const MeasurementSet& m, std::ostream& out);
MeasurementSet read_measurements(std::istream& in);
void save_measurements(const MeasurementSet& m, const std::filesystem::path& path);
MeasurementSet load_measurements(const std::filesystem::path& path);

}  // namespace eitms
