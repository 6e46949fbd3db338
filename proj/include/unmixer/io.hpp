#ifndef UNMIXER_IO_HPP
#define UNMIXER_IO_HPP

// Matrix CSV files and JSON encodings of results.
//
// CSV layout: a header `index,c0,c1,...`, then one line per matrix row that
// starts with the row index. Values are written with 17 significant digits in
// scientific notation, which round-trips every double exactly.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "unmixer/metrics.hpp"
#include "unmixer/numerics.hpp"
#include "unmixer/objective.hpp"
#include "unmixer/optimizer.hpp"
#include "unmixer/pipeline.hpp"

namespace unmixer::io {

using json = nlohmann::json;

inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
    return std::string(buf, res.ptr);
}

inline std::string format_matrix_csv(const Matrix& m)
{
    std::string out = "index";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        out += ",c" + std::to_string(j);
    }
    out += '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += std::to_string(i);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

namespace detail {

    inline std::vector<std::string_view> split(std::string_view line, char sep)
    {
        std::vector<std::string_view> out;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(sep, start);
            if (pos == std::string_view::npos) {
                out.push_back(line.substr(start));
                break;
            }
            out.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        return out;
    }

    inline std::string_view trim(std::string_view s)
    {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
            s.remove_prefix(1);
        }
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
            s.remove_suffix(1);
        }
        return s;
    }

    inline bool parse_double(std::string_view s, double& out)
    {
        s = trim(s);
        if (!s.empty() && s.front() == '+') {
            s.remove_prefix(1);
        }
        const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
        return res.ec == std::errc() && res.ptr == s.data() + s.size();
    }

} // namespace detail

/// Parses the matrix CSV layout. Errors name `source` and the 1-based line.
inline Matrix parse_matrix_csv(std::string_view text, const std::string& source)
{
    std::vector<std::string_view> lines;
    for (std::string_view line : detail::split(text, '\n')) {
        if (!detail::trim(line).empty()) {
            lines.push_back(line);
        }
    }
    auto fail = [&](std::size_t line_no, const std::string& what) -> DataError {
        return DataError(source + ":" + std::to_string(line_no) + ": " + what);
    };
    if (lines.empty()) {
        throw DataError(source + ": empty file");
    }
    const std::vector<std::string_view> header = detail::split(lines[0], ',');
    if (detail::trim(header[0]) != "index") {
        throw fail(1, "header must start with 'index'");
    }
    const std::size_t cols = header.size() - 1;
    for (std::size_t j = 0; j < cols; ++j) {
        if (detail::trim(header[j + 1]) != "c" + std::to_string(j)) {
            throw fail(1, "expected column name c" + std::to_string(j));
        }
    }
    const std::size_t rows = lines.size() - 1;
    if (rows == 0 || cols == 0) {
        throw DataError(source + ": matrix has no entries");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t line_no = i + 2;
        const std::vector<std::string_view> fields = detail::split(lines[i + 1], ',');
        if (fields.size() != cols + 1) {
            throw fail(line_no, "expected " + std::to_string(cols + 1) + " fields, got " + std::to_string(fields.size()));
        }
        double index = 0.0;
        if (!detail::parse_double(fields[0], index) || index != static_cast<double>(i)) {
            throw fail(line_no, "expected row index " + std::to_string(i));
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double v = 0.0;
            if (!detail::parse_double(fields[j + 1], v) || !std::isfinite(v)) {
                throw fail(line_no, "invalid number '" + std::string(detail::trim(fields[j + 1])) + "' in column c"
                                        + std::to_string(j));
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return m;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(path.string() + ": cannot open for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a temporary sibling and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, std::string_view content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError(tmp.string() + ": cannot open for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw DataError(tmp.string() + ": write failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw DataError(path.string() + ": rename failed: " + ec.message());
    }
}

inline Matrix read_matrix_csv(const std::filesystem::path& path)
{
    return parse_matrix_csv(read_text(path), path.filename().string());
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m)
{
    atomic_write(path, format_matrix_csv(m));
}

inline void write_json(const std::filesystem::path& path, const json& j)
{
    atomic_write(path, j.dump(2) + "\n");
}

inline json read_json(const std::filesystem::path& path)
{
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
}

inline json to_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json to_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

// JSON has no infinity; the singular sentinel is written as null.
inline json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

inline json to_json(const PenaltyWeights& w)
{
    return {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"delta", w.delta}, {"mu", w.mu}};
}

inline json to_json(const PenaltyBreakdown& b)
{
    return {{"p1", finite_or_null(b.p1)},
            {"p2", finite_or_null(b.p2)},
            {"p3", finite_or_null(b.p3)},
            {"p4", finite_or_null(b.p4)},
            {"p5", finite_or_null(b.p5)},
            {"psi", finite_or_null(b.psi)},
            {"psi_squared", finite_or_null(b.psi_squared)},
            {"singular", b.singular}};
}

inline json to_json(const NmResult& r)
{
    return {{"f_opt", finite_or_null(r.f_opt)},
            {"iterations", r.iterations},
            {"fevals", r.fevals},
            {"converged_on", to_string(r.converged_on)}};
}

inline json to_json(const NmOptions& o, std::size_t dim)
{
    return {{"max_iter", o.max_iter.value_or(200 * dim)},
            {"max_feval", o.max_feval.value_or(200 * dim)},
            {"tol_x", o.tol_x},
            {"tol_f", o.tol_f},
            {"initial_step", o.initial_step},
            {"zero_step", o.zero_step},
            {"reflection", o.reflection},
            {"expansion", o.expansion},
            {"contraction", o.contraction},
            {"shrink", o.shrink}};
}

/// Diagnostics record written next to the recovered factors.
inline json diagnostics_json(const Factorization& f, const PenaltyWeights& weights, const FactorizeOptions& options)
{
    json restarts = json::array();
    for (const RestartOutcome& r : f.restarts) {
        json entry = {{"ok", r.ok}, {"psi_squared", finite_or_null(r.psi_squared)}};
        if (!r.ok) {
            entry["error"] = r.error;
        }
        restarts.push_back(std::move(entry));
    }
    const auto dim = static_cast<std::size_t>(f.a_opt.size());
    return {{"status", "ok"},
            {"rank", f.a_opt.rows()},
            {"weights", to_json(weights)},
            {"penalties", to_json(f.breakdown)},
            {"initial_penalties", to_json(f.initial_breakdown)},
            {"optimizer", to_json(f.optimizer)},
            {"optimizer_options", to_json(options.optimizer, dim)},
            {"init", to_string(options.init)},
            {"vertex_indices", f.vertex_indices},
            {"init_condition", finite_or_null(f.init_condition)},
            {"restarts", std::move(restarts)},
            {"best_restart", f.best_restart},
            {"seed", options.seed},
            {"projected", f.projected},
            {"residual", f.residual}};
}

inline json to_json(const metrics::MatchReport& r)
{
    json out = {{"residual", r.residual},
                {"h_colsum_dev", r.h_colsum_dev},
                {"p_rowsum_dev", r.p_rowsum_dev},
                {"min_entries", {{"w", r.min_entries.w}, {"h", r.min_entries.h}, {"p", r.min_entries.p}}},
                {"degenerate_columns", r.degenerate_columns}};
    if (r.permutation) {
        out["permutation"] = *r.permutation;
    }
    if (r.correlations) {
        out["correlations"] = *r.correlations;
    }
    if (r.kinetics_rmse) {
        out["kinetics_rmse"] = *r.kinetics_rmse;
    }
    if (r.p_max_error) {
        out["p_max_error"] = *r.p_max_error;
    }
    return out;
}

} // namespace unmixer::io

#endif // UNMIXER_IO_HPP
