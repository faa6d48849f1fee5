#include "eitms/measurements.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "eitms/mesh.hpp"

namespace eitms {

MeasurementMask::MeasurementMask(int n_patterns, int n_electrodes, bool value)
    : patterns_(n_patterns), electrodes_(n_electrodes),
      on_(static_cast<std::size_t>(n_patterns * n_electrodes), value ? 1 : 0) {
    if (n_patterns < 0 || n_electrodes < 0) throw std::invalid_argument("mask dimensions must be nonnegative");
}

MeasurementMask MeasurementMask::exclude_injection(int n_patterns, int n_electrodes) {
    if (n_patterns > n_electrodes) throw std::invalid_argument("more patterns than electrodes");
    MeasurementMask m(n_patterns, n_electrodes, true);
    for (int j = 0; j < n_patterns; ++j) m.set(j, j, false);
    return m;
}

void MeasurementMask::set(int j, int k, bool v) {
    if (j < 0 || j >= patterns_ || k < 0 || k >= electrodes_) throw std::out_of_range("mask index out of range");
    on_[static_cast<std::size_t>(j * electrodes_ + k)] = v ? 1 : 0;
}

std::size_t MeasurementMask::count() const {
    std::size_t c = 0;
    for (auto v : on_) c += v;
    return c;
}

kernels::RowIndex MeasurementMask::rows() const {
    kernels::RowIndex r;
    for (int j = 0; j < patterns_; ++j)
        for (int k = 0; k < electrodes_; ++k)
            if (active(j, k)) r.emplace_back(j, k);
    return r;
}

// ---------------------------------------------------------------------------

void write_measurements(const MeasurementSet& m, std::ostream& out) {
    const int P1 = m.mask.electrodes(), P2 = m.mask.patterns();
    out << "EITMS-MEASUREMENTS 1\n";
    out << "electrodes " << P1 << '\n';
    out << "patterns " << P2 << '\n';
    out << std::setprecision(17);
    out << "noise " << m.noise_rel << ' ' << m.noise_seed << '\n';
    out << "excitation\n";
    for (int j = 0; j < P2; ++j) {
        for (int k = 0; k < P1; ++k) {
            const double v = static_cast<std::size_t>(j) < m.patterns.size() ? m.patterns[static_cast<std::size_t>(j)][k] : 0.0;
            out << (k ? " " : "") << v;
        }
        out << '\n';
    }
    out << "mask\n";
    for (int j = 0; j < P2; ++j) {
        for (int k = 0; k < P1; ++k) out << (m.mask.active(j, k) ? '1' : '0');
        out << '\n';
    }
    out << "data " << m.size() << '\n';
    const auto rows = m.mask.rows();
    for (std::size_t r = 0; r < rows.size(); ++r)
        out << rows[r].first << ' ' << rows[r].second << ' ' << m.currents[static_cast<Eigen::Index>(r)] << '\n';
}

MeasurementSet read_measurements(std::istream& in) {
    std::size_t line_no = 0;
    std::string line;
    auto next = [&](const char* what) -> std::istringstream {
        while (std::getline(in, line)) {
            ++line_no;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            return std::istringstream(line);
        }
        throw ParseError(std::string("unexpected end of file, expected ") + what, line_no + 1);
    };
    auto keyword = [&](std::istringstream& ss, const char* kw) {
        std::string tag;
        ss >> tag;
        if (tag != kw) throw ParseError(std::string("expected '") + kw + "'", line_no);
    };

    MeasurementSet m;
    {
        auto ss = next("header");
        std::string tag;
        int version = 0;
        ss >> tag >> version;
        if (tag != "EITMS-MEASUREMENTS" || version != 1) throw ParseError("not an EITMS-MEASUREMENTS v1 file", line_no);
    }
    int P1 = 0, P2 = 0;
    {
        auto ss = next("electrodes");
        keyword(ss, "electrodes");
        if (!(ss >> P1) || P1 <= 0) throw ParseError("invalid electrode count", line_no);
    }
    {
        auto ss = next("patterns");
        keyword(ss, "patterns");
        if (!(ss >> P2) || P2 <= 0) throw ParseError("invalid pattern count", line_no);
    }
    {
        auto ss = next("noise");
        keyword(ss, "noise");
        if (!(ss >> m.noise_rel >> m.noise_seed)) throw ParseError("invalid noise record", line_no);
    }
    {
        auto ss = next("excitation");
        keyword(ss, "excitation");
    }
    for (int j = 0; j < P2; ++j) {
        auto ss = next("excitation row");
        Eigen::VectorXd U(P1);
        for (int k = 0; k < P1; ++k)
            if (!(ss >> U[k])) throw ParseError("excitation row has fewer than " + std::to_string(P1) + " values", line_no);
        m.patterns.push_back(U);
    }
    {
        auto ss = next("mask");
        keyword(ss, "mask");
    }
    m.mask = MeasurementMask(P2, P1, false);
    for (int j = 0; j < P2; ++j) {
        auto ss = next("mask row");
        std::string bits;
        ss >> bits;
        if (static_cast<int>(bits.size()) != P1) throw ParseError("mask row must have " + std::to_string(P1) + " entries", line_no);
        for (int k = 0; k < P1; ++k) {
            if (bits[static_cast<std::size_t>(k)] != '0' && bits[static_cast<std::size_t>(k)] != '1')
                throw ParseError("mask entries must be 0 or 1", line_no);
            m.mask.set(j, k, bits[static_cast<std::size_t>(k)] == '1');
        }
    }
    std::size_t M = 0;
    {
        auto ss = next("data");
        keyword(ss, "data");
        if (!(ss >> M)) throw ParseError("invalid data count", line_no);
        if (M != m.mask.count()) throw ParseError("data count does not match mask", line_no);
    }
    const auto rows = m.mask.rows();
    m.currents.resize(static_cast<Eigen::Index>(M));
    for (std::size_t r = 0; r < M; ++r) {
        auto ss = next("data record");
        int j, k;
        double I;
        if (!(ss >> j >> k >> I)) throw ParseError("malformed data record", line_no);
        if (j != rows[r].first || k != rows[r].second)
            throw ParseError("data record out of order or not in mask", line_no);
        m.currents[static_cast<Eigen::Index>(r)] = I;
    }
    return m;
}

void save_measurements(const MeasurementSet& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_measurements(m, out);
}

MeasurementSet load_measurements(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open measurement file " + path.string());
    return read_measurements(in);
}

}  // namespace eitms
