// unmixer: synthesize datasets, factorize spectral matrices, evaluate recoveries.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
// Errors are printed to stderr as a single JSON object.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "unmixer/unmixer.hpp"

namespace fs = std::filesystem;
using namespace unmixer;

namespace {

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numerical: return 4;
    }
    return 1;
}

void print_error(const char* kind, const std::string& message)
{
    std::cerr << io::json{{"error", kind}, {"message", message}}.dump() << "\n";
}

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("unmixer");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("UNMIXER_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only accept it when asked for.
        if (level != spdlog::level::off || std::string(env) == "off") {
            spdlog::set_level(level);
        }
    }
}

struct SynthArgs {
    std::string config;
    std::string out = ".";
};

void run_synth(const SynthArgs& a)
{
    const synth::DatasetConfig cfg = synth::parse_dataset_config(io::read_json(a.config));
    spdlog::info("synth: {} species, {} wavenumbers x {} times, seed {}", cfg.species(), cfg.wavenumber.count,
                 cfg.time.count, cfg.seed);
    const synth::Dataset d = synth::generate(cfg);
    synth::write_dataset(a.out, d);
    spdlog::info("synth: wrote dataset to {}", a.out);
}

struct FactorizeArgs {
    std::string input;
    Eigen::Index rank = 0;
    std::string preset = "paper-4.2";
    std::optional<double> alpha, beta, gamma, delta, mu;
    std::size_t restarts = 1;
    std::uint64_t seed = 0;
    bool project_feasible = false;
    std::string init = "feasible";
    std::optional<std::size_t> max_iter, max_feval;
    std::optional<double> tol_x, tol_f;
    std::string out = ".";
};

void run_factorize(const FactorizeArgs& a)
{
    std::optional<PenaltyWeights> weights = weight_preset(a.preset);
    if (!weights) {
        throw ConfigError("unknown preset '" + a.preset + "' (expected paper-4.2 or paper-4.4)");
    }
    if (a.alpha) weights->alpha = *a.alpha;
    if (a.beta) weights->beta = *a.beta;
    if (a.gamma) weights->gamma = *a.gamma;
    if (a.delta) weights->delta = *a.delta;
    if (a.mu) weights->mu = *a.mu;
    if (!weights->all_finite()) {
        throw ConfigError("penalty weights must be finite");
    }

    FactorizeOptions opts;
    opts.restarts = a.restarts;
    opts.seed = a.seed;
    opts.project_feasible = a.project_feasible;
    if (a.init == "feasible") {
        opts.init = InitMode::feasible;
    } else if (a.init == "simplex") {
        opts.init = InitMode::simplex;
    } else {
        throw ConfigError("--init must be 'feasible' or 'simplex'");
    }
    opts.optimizer.max_iter = a.max_iter;
    opts.optimizer.max_feval = a.max_feval;
    if (a.tol_x) opts.optimizer.tol_x = *a.tol_x;
    if (a.tol_f) opts.optimizer.tol_f = *a.tol_f;

    const SpectralMatrix m(io::read_matrix_csv(a.input));
    spdlog::info("factorize: {} x {} matrix, rank {}", m.wavenumbers(), m.timesteps(), a.rank);
    const Factorization f = factorize(m, a.rank, *weights, opts);
    spdlog::info("factorize: psi^2 {:.3e} after {} evaluations ({}), residual {:.3e}", f.optimizer.f_opt,
                 f.optimizer.fevals, to_string(f.optimizer.converged_on), f.residual);
    if (f.optimizer.converged_on == StopReason::max_feval || f.optimizer.converged_on == StopReason::max_iter) {
        spdlog::warn("factorize: optimizer stopped on its budget ({})", to_string(f.optimizer.converged_on));
    }

    const fs::path out(a.out);
    fs::create_directories(out);
    io::write_matrix_csv(out / "W_rec.csv", f.w_rec);
    io::write_matrix_csv(out / "H_rec.csv", f.h_rec);
    io::write_matrix_csv(out / "P_rec.csv", f.p_rec);
    io::write_matrix_csv(out / "A_opt.csv", f.a_opt);
    io::write_json(out / "diagnostics.json", io::diagnostics_json(f, *weights, opts));
}

struct EvaluateArgs {
    std::string result;
    std::string truth;
    std::string out = "report.json";
};

std::string overlay_csv(const char* axis_name, const Vector& axis, const Matrix& truth, const Matrix& rec,
                        const std::vector<int>& perm)
{
    std::string csv = std::string(axis_name) + ",series,value\n";
    auto emit = [&](const std::string& series, const Eigen::Ref<const Vector>& values) {
        for (Eigen::Index i = 0; i < values.size(); ++i) {
            csv += io::format_double(axis(i)) + "," + series + "," + io::format_double(values(i)) + "\n";
        }
    };
    for (Eigen::Index j = 0; j < truth.cols(); ++j) {
        emit("true_" + std::to_string(j), truth.col(j));
    }
    // recovered component i is labelled with the true species it was matched to
    for (std::size_t i = 0; i < perm.size(); ++i) {
        emit("rec_" + std::to_string(perm[i]), rec.col(static_cast<Eigen::Index>(i)));
    }
    return csv;
}

Vector axis_from_manifest(const io::json& manifest, const char* key, Eigen::Index expected)
{
    if (!manifest.contains(key) || !manifest.at(key).is_array()) {
        throw DataError(std::string("manifest.json: missing axis '") + key + "'");
    }
    const auto& arr = manifest.at(key);
    if (static_cast<Eigen::Index>(arr.size()) != expected) {
        throw DataError(std::string("manifest.json: axis '") + key + "' has " + std::to_string(arr.size())
                        + " entries, expected " + std::to_string(expected));
    }
    Vector v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) {
        v(i) = arr[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

void run_evaluate(const EvaluateArgs& a)
{
    const fs::path rdir(a.result);
    const fs::path tdir(a.truth);
    const Matrix w_rec = io::read_matrix_csv(rdir / "W_rec.csv");
    const Matrix h_rec = io::read_matrix_csv(rdir / "H_rec.csv");
    const Matrix p_rec = io::read_matrix_csv(rdir / "P_rec.csv");
    metrics::TruthFactors truth{io::read_matrix_csv(tdir / "W.csv"), io::read_matrix_csv(tdir / "H.csv"),
                                std::nullopt};
    if (fs::exists(tdir / "P.csv")) {
        truth.p = io::read_matrix_csv(tdir / "P.csv");
    }
    if (w_rec.rows() != truth.w.rows() || w_rec.cols() != truth.w.cols()) {
        throw DataError("evaluate: W_rec.csv is " + std::to_string(w_rec.rows()) + "x" + std::to_string(w_rec.cols())
                        + " but W.csv is " + std::to_string(truth.w.rows()) + "x" + std::to_string(truth.w.cols()));
    }
    if (h_rec.rows() != truth.h.rows() || h_rec.cols() != truth.h.cols()) {
        throw DataError("evaluate: H_rec.csv is " + std::to_string(h_rec.rows()) + "x" + std::to_string(h_rec.cols())
                        + " but H.csv is " + std::to_string(truth.h.rows()) + "x" + std::to_string(truth.h.cols()));
    }

    // Residual against the measured matrix when present, else against W H of the truth.
    const Matrix m = fs::exists(tdir / "M.csv") ? io::read_matrix_csv(tdir / "M.csv") : Matrix(truth.w * truth.h);
    if (m.rows() != w_rec.rows() || m.cols() != h_rec.cols()) {
        throw DataError("evaluate: M.csv shape does not match the recovered factors");
    }
    const metrics::MatchReport rep
        = metrics::report(w_rec, h_rec, p_rec, relative_residual(m, w_rec, h_rec), truth);
    if (rep.degenerate_columns) {
        spdlog::warn("evaluate: zero-variance spectral column; affected correlations set to -1");
    }

    const fs::path out(a.out);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    io::write_json(out, io::to_json(rep));

    Vector wavenumbers = synth::linspace(0.0, static_cast<double>(w_rec.rows() - 1), w_rec.rows());
    Vector times = synth::linspace(0.0, static_cast<double>(h_rec.cols() - 1), h_rec.cols());
    if (fs::exists(tdir / "manifest.json")) {
        const io::json manifest = io::read_json(tdir / "manifest.json");
        wavenumbers = axis_from_manifest(manifest, "wavenumbers", w_rec.rows());
        times = axis_from_manifest(manifest, "times", h_rec.cols());
    } else {
        spdlog::warn("evaluate: no manifest.json in {}; overlays use row/column indices as axes", a.truth);
    }
    const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
    io::atomic_write(dir / "spectra_overlay.csv",
                     overlay_csv("wavenumber", wavenumbers, truth.w, w_rec, *rep.permutation));
    io::atomic_write(dir / "kinetics_overlay.csv",
                     overlay_csv("time", times, truth.h.transpose(), h_rec.transpose(), *rep.permutation));
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();
    CLI::App app{"Spectral unmixing of time-resolved spectra"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset from a JSON config");
    synth_cmd->add_option("-c,--config", synth_args.config, "dataset config")->required();
    synth_cmd->add_option("-o,--out", synth_args.out, "output directory");

    FactorizeArgs fa;
    auto* fact_cmd = app.add_subcommand("factorize", "Factorize a spectral matrix M ~ W H");
    fact_cmd->add_option("-i,--input", fa.input, "M.csv")->required();
    fact_cmd->add_option("-r,--rank", fa.rank, "number of components")->required();
    fact_cmd->add_option("--preset", fa.preset, "weight preset: paper-4.2 or paper-4.4");
    fact_cmd->add_option("--alpha", fa.alpha, "weight of min(W)");
    fact_cmd->add_option("--beta", fa.beta, "weight of min(H)");
    fact_cmd->add_option("--gamma", fa.gamma, "weight of H column-sum deviation");
    fact_cmd->add_option("--delta", fa.delta, "weight of min(P)");
    fact_cmd->add_option("--mu", fa.mu, "weight of P row-sum deviation");
    fact_cmd->add_option("--restarts", fa.restarts, "optimizer restarts");
    fact_cmd->add_option("--seed", fa.seed, "seed for restart perturbations");
    fact_cmd->add_flag("--project-feasible", fa.project_feasible, "clamp and renormalize H_rec columns");
    fact_cmd->add_option("--init", fa.init, "starting transform: feasible or simplex");
    fact_cmd->add_option("--max-iter", fa.max_iter, "Nelder-Mead iteration budget");
    fact_cmd->add_option("--max-feval", fa.max_feval, "Nelder-Mead evaluation budget");
    fact_cmd->add_option("--tol-x", fa.tol_x, "simplex size tolerance");
    fact_cmd->add_option("--tol-f", fa.tol_f, "function spread tolerance");
    fact_cmd->add_option("-o,--out", fa.out, "output directory");

    EvaluateArgs ea;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compare a recovery with ground truth");
    eval_cmd->add_option("-r,--result", ea.result, "directory with W_rec/H_rec/P_rec.csv")->required();
    eval_cmd->add_option("-t,--truth", ea.truth, "directory with W/H[/P/M].csv and manifest.json")->required();
    eval_cmd->add_option("-o,--out", ea.out, "report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("config", e.what());
        return 2;
    }

    try {
        if (*synth_cmd) {
            run_synth(synth_args);
        } else if (*fact_cmd) {
            run_factorize(fa);
        } else if (*eval_cmd) {
            run_evaluate(ea);
        }
    } catch (const Error& e) {
        print_error(to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        print_error("data", e.what());
        return 3;
    }
    return 0;
}
