#pragma once

// CSV serialization. Floats use 17 significant digits so files round-trip
// doubles exactly; states are written 1-based.

#include <hybridem/brownian.hpp>
#include <hybridem/ctmc.hpp>
#include <hybridem/error.hpp>
#include <hybridem/harness.hpp>
#include <hybridem/solvers.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace hybridem {

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partially written output.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot open " + tmp.string());
        out << content;
        if (!out.flush()) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

/// `time,state` rows (tau_k, i_k) plus a terminal (T, last state) row.
inline std::string chain_path_csv(const ChainPath& path) {
    std::ostringstream os;
    os << "time,state\n";
    for (std::size_t k = 0; k < path.segment_count(); ++k) {
        os << format_double(path.switch_times[k]) << ',' << path.states[k] + 1 << '\n';
    }
    os << format_double(path.horizon) << ',' << path.states.back() + 1 << '\n';
    return os.str();
}

inline std::string brownian_csv(const BrownianPath& bm) {
    std::ostringstream os;
    os << "time";
    for (std::size_t r = 0; r < bm.dimension(); ++r) os << ",B_" << r + 1;
    os << '\n';
    for (std::size_t j = 0; j < bm.grid().size(); ++j) {
        os << format_double(bm.grid()[j]);
        for (Eigen::Index r = 0; r < bm.values().rows(); ++r) os << ',' << format_double(bm.value(j)(r));
        os << '\n';
    }
    return os.str();
}

inline std::string solution_csv(const SolutionPath& sol) {
    std::ostringstream os;
    os << "time";
    const Eigen::Index n = sol.values.empty() ? 0 : sol.values.front().size();
    for (Eigen::Index r = 0; r < n; ++r) os << ",z_" << r + 1;
    os << '\n';
    for (std::size_t j = 0; j < sol.times.size(); ++j) {
        os << format_double(sol.times[j]);
        for (Eigen::Index r = 0; r < n; ++r) os << ',' << format_double(sol.values[j](r));
        os << '\n';
    }
    return os.str();
}

inline std::string errors_csv(const ErrorReport& report) {
    std::ostringstream os;
    os << "scheme,p,delta,eps,stderr,M\n";
    for (const auto& e : report.errors) {
        os << scheme_name(e.scheme) << ',' << format_double(e.p) << ',' << format_double(e.delta) << ','
           << format_double(e.eps) << ',' << format_double(e.stderr_) << ',' << e.samples << '\n';
    }
    return os.str();
}

inline std::string fit_csv(const ErrorReport& report) {
    std::ostringstream os;
    os << "scheme,p,slope,intercept,r2\n";
    for (const auto& f : report.fits) {
        os << scheme_name(f.scheme) << ',' << format_double(f.p) << ',';
        if (f.fit) {
            os << format_double(f.fit->slope) << ',' << format_double(f.fit->intercept) << ','
               << format_double(f.fit->r2) << '\n';
        } else {
            os << "nan,nan,nan\n";
        }
    }
    return os.str();
}

inline std::string chain_validation_csv(const ChainValidationReport& report) {
    std::ostringstream os;
    os << "check,from,to,observed,expected,bound,count,passed\n";
    for (const auto& c : report.checks) {
        os << c.check << ',' << c.from + 1 << ',' << c.to + 1 << ',' << format_double(c.observed) << ','
           << format_double(c.expected) << ',' << format_double(c.bound) << ',' << c.count << ','
           << (c.passed ? "true" : "false") << '\n';
    }
    return os.str();
}

}  // namespace hybridem
