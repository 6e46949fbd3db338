#ifndef UNMIXER_DATASET_HPP
#define UNMIXER_DATASET_HPP

// Dataset configuration files and generation of complete synthetic datasets
// (measurement matrix plus ground-truth factors and axes).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "unmixer/io.hpp"
#include "unmixer/synth.hpp"

namespace unmixer::synth {

enum class KineticsModel { rate, markov };

struct Axis {
    double start = 0.0;
    double stop = 1.0;
    Eigen::Index count = 2;
};

struct DatasetConfig {
    int schema_version = 1;
    std::uint64_t seed = 2021;
    KineticsModel model = KineticsModel::rate;
    Matrix rate_matrix;     ///< rate model
    Matrix transition;      ///< markov model
    Vector h0;
    Axis time{0.0, 20.0, 200};
    Axis wavenumber{100.0, 1800.0, 1000};
    std::optional<PeakList> peaks;   ///< explicit peaks; generated from `generation` otherwise
    PeakGeneration generation;
    double lambda = 0.0;
    std::vector<double> focals;
    NoiseSpec noise{0.0, 7};

    Eigen::Index species() const noexcept
    {
        return model == KineticsModel::rate ? rate_matrix.rows() : transition.rows();
    }
};

inline constexpr int dataset_schema_version = 1;

/// Five-species scheme A..E: rate matrix, pure A at t = 0, 200 times on
/// [0, 20], 1000 wavenumbers on [100, 1800], noiseless, no interference.
inline DatasetConfig default_dataset_config()
{
    DatasetConfig c;
    c.rate_matrix = five_species_rate_matrix();
    c.h0 = Vector::Unit(5, 0);
    return c;
}

namespace detail {

    using json = nlohmann::json;

    inline const json& member(const json& obj, const std::string& key, const std::string& path)
    {
        if (!obj.is_object() || !obj.contains(key)) {
            throw ConfigError("config key '" + path + "' is missing");
        }
        return obj.at(key);
    }

    inline double number(const json& j, const std::string& path)
    {
        if (!j.is_number()) {
            throw ConfigError("config key '" + path + "' must be a number");
        }
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            throw ConfigError("config key '" + path + "' must be finite");
        }
        return v;
    }

    inline std::int64_t integer(const json& j, const std::string& path)
    {
        if (!j.is_number_integer()) {
            throw ConfigError("config key '" + path + "' must be an integer");
        }
        return j.get<std::int64_t>();
    }

    inline Vector vector(const json& j, const std::string& path)
    {
        if (!j.is_array() || j.empty()) {
            throw ConfigError("config key '" + path + "' must be a non-empty array of numbers");
        }
        Vector v(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
        }
        return v;
    }

    inline Matrix matrix(const json& j, const std::string& path)
    {
        if (!j.is_array() || j.empty()) {
            throw ConfigError("config key '" + path + "' must be a non-empty array of rows");
        }
        const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
        Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string row_path = path + "[" + std::to_string(i) + "]";
            if (!j[i].is_array() || j[i].size() != cols || cols == 0) {
                throw ConfigError("config key '" + row_path + "' must have " + std::to_string(cols) + " entries");
            }
            for (std::size_t k = 0; k < cols; ++k) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))
                    = number(j[i][k], row_path + "[" + std::to_string(k) + "]");
            }
        }
        return m;
    }

    inline Axis axis(const json& j, const std::string& path)
    {
        Axis a;
        a.start = number(member(j, "start", path + ".start"), path + ".start");
        a.stop = number(member(j, "stop", path + ".stop"), path + ".stop");
        const std::int64_t count = integer(member(j, "count", path + ".count"), path + ".count");
        if (count < 2 || !(a.stop > a.start)) {
            throw ConfigError("config key '" + path + "' needs count >= 2 and stop > start");
        }
        a.count = static_cast<Eigen::Index>(count);
        return a;
    }

    inline std::pair<double, double> range(const json& obj, const std::string& key, const std::string& path,
                                           std::pair<double, double> fallback)
    {
        if (!obj.contains(key)) {
            return fallback;
        }
        const Vector v = vector(obj.at(key), path + "." + key);
        if (v.size() != 2 || v(0) > v(1)) {
            throw ConfigError("config key '" + path + "." + key + "' must be [lo, hi] with lo <= hi");
        }
        return {v(0), v(1)};
    }

} // namespace detail

/// Parses a dataset config; every error names the offending key.
inline DatasetConfig parse_dataset_config(const nlohmann::json& j)
{
    using namespace detail;
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    DatasetConfig c;
    c.schema_version = static_cast<int>(integer(member(j, "schema_version", "schema_version"), "schema_version"));
    if (c.schema_version != dataset_schema_version) {
        throw ConfigError("config key 'schema_version': unsupported version " + std::to_string(c.schema_version));
    }
    if (j.contains("seed")) {
        const std::int64_t seed = integer(j.at("seed"), "seed");
        if (seed < 0) {
            throw ConfigError("config key 'seed' must be non-negative");
        }
        c.seed = static_cast<std::uint64_t>(seed);
    }

    const json& kin = member(j, "kinetics", "kinetics");
    const json& model = member(kin, "model", "kinetics.model");
    if (model == "rate") {
        c.model = KineticsModel::rate;
        c.rate_matrix = matrix(member(kin, "rate_matrix", "kinetics.rate_matrix"), "kinetics.rate_matrix");
    } else if (model == "markov") {
        c.model = KineticsModel::markov;
        c.transition = matrix(member(kin, "transition", "kinetics.transition"), "kinetics.transition");
    } else {
        throw ConfigError("config key 'kinetics.model' must be \"rate\" or \"markov\"");
    }
    c.h0 = vector(member(kin, "h0", "kinetics.h0"), "kinetics.h0");
    const Matrix& gen = c.model == KineticsModel::rate ? c.rate_matrix : c.transition;
    const std::string gen_key = c.model == KineticsModel::rate ? "kinetics.rate_matrix" : "kinetics.transition";
    if (gen.rows() != gen.cols()) {
        throw ConfigError("config key '" + gen_key + "' must be square");
    }
    if (c.h0.size() != gen.rows()) {
        throw ConfigError("config key 'kinetics.h0' must have " + std::to_string(gen.rows()) + " entries");
    }
    if ((c.h0.array() < 0.0).any() || std::abs(c.h0.sum() - 1.0) > 1e-12) {
        throw ConfigError("config key 'kinetics.h0' must be non-negative and sum to 1");
    }
    if (c.model == KineticsModel::rate) {
        for (Eigen::Index i = 0; i < gen.rows(); ++i) {
            if (std::abs(gen.row(i).sum()) > 1e-12) {
                throw ConfigError("config key 'kinetics.rate_matrix[" + std::to_string(i) + "]' must sum to 0");
            }
            for (Eigen::Index k = 0; k < gen.cols(); ++k) {
                if (i == k ? gen(i, k) > 0.0 : gen(i, k) < 0.0) {
                    throw ConfigError("config key 'kinetics.rate_matrix[" + std::to_string(i) + "]["
                                      + std::to_string(k) + "]' has the wrong sign");
                }
            }
        }
    } else {
        for (Eigen::Index i = 0; i < gen.rows(); ++i) {
            if (std::abs(gen.row(i).sum() - 1.0) > 1e-12) {
                throw ConfigError("config key 'kinetics.transition[" + std::to_string(i) + "]' must sum to 1");
            }
        }
    }

    c.time = axis(member(j, "time", "time"), "time");
    c.wavenumber = axis(member(j, "wavenumber", "wavenumber"), "wavenumber");

    const json& peaks = member(j, "peaks", "peaks");
    if (peaks.contains("explicit")) {
        const json& list = peaks.at("explicit");
        if (!list.is_array() || static_cast<Eigen::Index>(list.size()) != c.species()) {
            throw ConfigError("config key 'peaks.explicit' must list peaks for " + std::to_string(c.species())
                              + " species");
        }
        PeakList out;
        for (std::size_t s = 0; s < list.size(); ++s) {
            const std::string sp = "peaks.explicit[" + std::to_string(s) + "]";
            if (!list[s].is_array() || list[s].empty()) {
                throw ConfigError("config key '" + sp + "' must be a non-empty array");
            }
            std::vector<Peak> species;
            for (std::size_t k = 0; k < list[s].size(); ++k) {
                const std::string pp = sp + "[" + std::to_string(k) + "]";
                Peak p;
                p.center = number(member(list[s][k], "center", pp + ".center"), pp + ".center");
                p.amplitude = number(member(list[s][k], "amplitude", pp + ".amplitude"), pp + ".amplitude");
                p.width = number(member(list[s][k], "width", pp + ".width"), pp + ".width");
                if (!(p.amplitude > 0.0) || !(p.width > 0.0)) {
                    throw ConfigError("config key '" + pp + "' needs positive amplitude and width");
                }
                if (p.center < c.wavenumber.start || p.center > c.wavenumber.stop) {
                    throw ConfigError("config key '" + pp + ".center' lies outside the wavenumber axis");
                }
                species.push_back(p);
            }
            out.push_back(std::move(species));
        }
        c.peaks = std::move(out);
    } else {
        PeakGeneration& g = c.generation;
        if (peaks.contains("min_count")) {
            g.min_peaks = static_cast<int>(integer(peaks.at("min_count"), "peaks.min_count"));
        }
        if (peaks.contains("max_count")) {
            g.max_peaks = static_cast<int>(integer(peaks.at("max_count"), "peaks.max_count"));
        }
        if (g.min_peaks < 1 || g.max_peaks < g.min_peaks) {
            throw ConfigError("config key 'peaks.min_count' / 'peaks.max_count' need 1 <= min <= max");
        }
        std::tie(g.center_lo, g.center_hi) = range(peaks, "center", "peaks", {g.center_lo, g.center_hi});
        std::tie(g.amplitude_lo, g.amplitude_hi) = range(peaks, "amplitude", "peaks", {g.amplitude_lo, g.amplitude_hi});
        std::tie(g.width_lo, g.width_hi) = range(peaks, "width", "peaks", {g.width_lo, g.width_hi});
        if (!(g.amplitude_lo > 0.0) || !(g.width_lo > 0.0)) {
            throw ConfigError("config key 'peaks.amplitude' / 'peaks.width' must be positive");
        }
        if (g.center_lo < c.wavenumber.start || g.center_hi > c.wavenumber.stop) {
            throw ConfigError("config key 'peaks.center' must lie within the wavenumber axis");
        }
    }

    if (j.contains("interference")) {
        const json& inter = j.at("interference");
        c.lambda = number(member(inter, "lambda", "interference.lambda"), "interference.lambda");
        if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) {
            throw ConfigError("config key 'interference.lambda' must lie in [0, 1]");
        }
        if (inter.contains("focals")) {
            const json& f = inter.at("focals");
            if (!f.is_array()) {
                throw ConfigError("config key 'interference.focals' must be an array");
            }
            for (std::size_t k = 0; k < f.size(); ++k) {
                c.focals.push_back(number(f[k], "interference.focals[" + std::to_string(k) + "]"));
            }
        }
        if (c.lambda > 0.0 && c.focals.empty()) {
            throw ConfigError("config key 'interference.focals' must be non-empty when lambda > 0");
        }
    }

    if (j.contains("noise")) {
        const json& noise = j.at("noise");
        c.noise.delta = number(member(noise, "delta", "noise.delta"), "noise.delta");
        if (c.noise.delta < 0.0) {
            throw ConfigError("config key 'noise.delta' must be non-negative");
        }
        if (noise.contains("seed")) {
            const std::int64_t seed = integer(noise.at("seed"), "noise.seed");
            if (seed < 0) {
                throw ConfigError("config key 'noise.seed' must be non-negative");
            }
            c.noise.seed = static_cast<std::uint64_t>(seed);
        }
    }
    return c;
}

inline nlohmann::json peaks_to_json(const PeakList& peaks)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& species : peaks) {
        nlohmann::json list = nlohmann::json::array();
        for (const Peak& p : species) {
            list.push_back({{"center", p.center}, {"amplitude", p.amplitude}, {"width", p.width}});
        }
        out.push_back(std::move(list));
    }
    return out;
}

inline nlohmann::json to_json(const DatasetConfig& c)
{
    using io::to_json;
    nlohmann::json kin;
    if (c.model == KineticsModel::rate) {
        kin = {{"model", "rate"}, {"rate_matrix", to_json(c.rate_matrix)}, {"h0", to_json(c.h0)}};
    } else {
        kin = {{"model", "markov"}, {"transition", to_json(c.transition)}, {"h0", to_json(c.h0)}};
    }
    nlohmann::json peaks;
    if (c.peaks) {
        peaks = {{"explicit", peaks_to_json(*c.peaks)}};
    } else {
        const PeakGeneration& g = c.generation;
        peaks = {{"min_count", g.min_peaks},
                 {"max_count", g.max_peaks},
                 {"center", {g.center_lo, g.center_hi}},
                 {"amplitude", {g.amplitude_lo, g.amplitude_hi}},
                 {"width", {g.width_lo, g.width_hi}}};
    }
    return {{"schema_version", c.schema_version},
            {"seed", c.seed},
            {"kinetics", std::move(kin)},
            {"time", {{"start", c.time.start}, {"stop", c.time.stop}, {"count", c.time.count}}},
            {"wavenumber", {{"start", c.wavenumber.start}, {"stop", c.wavenumber.stop}, {"count", c.wavenumber.count}}},
            {"peaks", std::move(peaks)},
            {"interference", {{"lambda", c.lambda}, {"focals", c.focals}}},
            {"noise", {{"delta", c.noise.delta}, {"seed", c.noise.seed}}}};
}

struct Dataset {
    DatasetConfig config;
    SpectralMatrix m;
    SpectralMatrix m_clean;   ///< W H before noise
    Matrix w;
    Matrix h;
    Matrix p;                 ///< generator (markov) or least-squares estimate (rate)
    Vector wavenumbers;
    Vector times;
    PeakList peaks;           ///< after interference
};

inline Dataset generate(const DatasetConfig& c)
{
    const Vector times = linspace(c.time.start, c.time.stop, c.time.count);
    const Vector grid = linspace(c.wavenumber.start, c.wavenumber.stop, c.wavenumber.count);

    Matrix h;
    Matrix p;
    if (c.model == KineticsModel::rate) {
        h = kinetics(ReactionSpec{c.rate_matrix, c.h0, times});
        p = estimate_transition(h);
    } else {
        h = markov_kinetics(c.transition, c.h0, c.time.count);
        p = c.transition;
    }

    PeakList peaks = c.peaks ? *c.peaks : random_peaks(static_cast<std::size_t>(c.species()), c.generation, c.seed);
    if (c.lambda > 0.0) {
        peaks = interfere(peaks, c.focals, c.lambda);
    }
    Matrix w = spectra(peaks, grid);
    SpectralMatrix clean = compose(w, h);
    SpectralMatrix noisy = add_noise(clean, c.noise);
    return Dataset{c, std::move(noisy), std::move(clean), std::move(w), std::move(h), std::move(p),
                   grid, times, std::move(peaks)};
}

/// Writes M.csv, W.csv, H.csv, P.csv and manifest.json into `dir`.
inline void write_dataset(const std::filesystem::path& dir, const Dataset& d)
{
    std::filesystem::create_directories(dir);
    io::write_matrix_csv(dir / "M.csv", d.m.values());
    io::write_matrix_csv(dir / "W.csv", d.w);
    io::write_matrix_csv(dir / "H.csv", d.h);
    io::write_matrix_csv(dir / "P.csv", d.p);
    nlohmann::json manifest = {
        {"schema_version", dataset_schema_version},
        {"seed", d.config.seed},
        {"noise_seed", d.config.noise.seed},
        {"species", d.w.cols()},
        {"config", to_json(d.config)},
        {"peaks", peaks_to_json(d.peaks)},
        {"wavenumbers", io::to_json(d.wavenumbers)},
        {"times", io::to_json(d.times)},
        {"transition_source", d.config.model == KineticsModel::rate ? "least_squares" : "generator"},
        {"files", {{"M", "M.csv"}, {"W", "W.csv"}, {"H", "H.csv"}, {"P", "P.csv"}}},
    };
    io::write_json(dir / "manifest.json", manifest);
}

} // namespace unmixer::synth

#endif // UNMIXER_DATASET_HPP
