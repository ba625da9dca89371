#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "phipca/aggregate.hpp"
#include "phipca/io.hpp"
#include "phipca/perturb.hpp"
#include "phipca/recon.hpp"
#include "phipca/sim.hpp"
#include "phipca/spiked.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "phipca 1.0.0";

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw phipca::ConfigError("cannot create output directory '" + dir + "'");
}

phipca::RunManifest start_manifest(const std::string& command, json config, std::uint64_t seed) {
    phipca::RunManifest manifest;
    manifest.command = command;
    manifest.config = std::move(config);
    manifest.seed = seed;
    manifest.version = kVersion;
    manifest.stamp_start();
    return manifest;
}

void finish_manifest(phipca::RunManifest& manifest, const std::string& dir,
                     std::vector<std::string> outputs) {
    manifest.outputs = std::move(outputs);
    manifest.stamp_end();
    manifest.write(dir);
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string csv_in;
    int m = 0;  // 0: floor(sqrt(n))
    double beta = -1.0;
    bool use_log = false;
    std::optional<double> ridge;
    std::uint64_t seed = 1;
    std::string out = ".";
};

int cmd_fit(const FitArgs& args) {
    Eigen::MatrixXd x = phipca::parse_csv_matrix(args.csv_in);
    const int m = args.m > 0 ? args.m : phipca::default_m(static_cast<int>(x.rows()));
    const phipca::PhiSpec phi =
        args.use_log ? phipca::PhiSpec::log_limit() : phipca::PhiSpec::power(args.beta);
    phipca::AggregatedModel model = phipca::fit_phi_pca(x, m, phi, args.seed, args.ridge);

    ensure_out_dir(args.out);
    std::vector<phipca::CsvRow> eval_rows;
    for (double v : model.decomp.values) eval_rows.push_back({phipca::format_double(v)});
    phipca::write_csv((fs::path(args.out) / "eigenvalues.csv").string(), {"eigenvalue"},
                      eval_rows);

    const int p = static_cast<int>(x.cols());
    phipca::CsvRow header;
    for (int j = 0; j < p; ++j) header.push_back("pc" + std::to_string(j + 1));
    std::vector<phipca::CsvRow> evec_rows;
    for (int i = 0; i < p; ++i) {
        phipca::CsvRow row;
        for (int j = 0; j < p; ++j)
            row.push_back(phipca::format_double(model.decomp.vectors(i, j)));
        evec_rows.push_back(std::move(row));
    }
    phipca::write_csv((fs::path(args.out) / "eigenvectors.csv").string(), header, evec_rows);

    json cfg{{"in", args.csv_in},
             {"m", m},
             {"phi", args.use_log ? json("log") : json(args.beta)},
             {"ridge", args.ridge ? json(*args.ridge) : json(nullptr)}};
    auto manifest = start_manifest("fit", cfg, args.seed);
    finish_manifest(manifest, args.out, {"eigenvalues.csv", "eigenvectors.csv"});
    return 0;
}

// ---------------------------------------------------------------- simulate

phipca::SimConfig sim_config_from_json(const json& j) {
    phipca::SimConfig config;
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("n", config.n);
    get("p", config.p);
    get("r", config.r);
    get("pi", config.pi);
    get("sigma_out", config.sigma_out);
    get("t_dof", config.t_dof);
    get("replicates", config.replicates);
    get("q_max", config.q_max);
    get("m", config.m);
    get("seed", config.seed);
    if (j.contains("methods")) {
        config.methods.clear();
        for (const auto& name : j.at("methods"))
            config.methods.push_back(phipca::method_from_name(name.get<std::string>()));
    }
    return config;
}

json sim_config_to_json(const phipca::SimConfig& c) {
    json methods = json::array();
    for (auto k : c.methods) methods.push_back(phipca::method_name(k));
    return json{{"n", c.n},
                {"p", c.p},
                {"r", c.r},
                {"pi", c.pi},
                {"sigma_out", c.sigma_out},
                {"t_dof", c.t_dof},
                {"replicates", c.replicates},
                {"q_max", c.q_max},
                {"m", c.m},
                {"methods", methods},
                {"seed", c.seed}};
}

int cmd_simulate(const phipca::SimConfig& config, const std::string& out) {
    config.validate();
    phipca::SimResult result = phipca::run_experiment(config);

    ensure_out_dir(out);
    std::vector<phipca::CsvRow> rows;
    for (const auto& curve : result.curves) {
        for (std::size_t i = 0; i < curve.q.size(); ++i) {
            rows.push_back({phipca::method_name(curve.method), std::to_string(curve.q[i]),
                            phipca::format_double(curve.mean_sq[i]),
                            phipca::format_double(curve.stderr_sq[i]),
                            std::to_string(config.replicates)});
        }
    }
    phipca::write_csv((fs::path(out) / "curves.csv").string(),
                      {"method", "q", "mean_sq", "stderr", "replicates"}, rows);

    auto manifest = start_manifest("simulate", sim_config_to_json(config), config.seed);
    manifest.config["failed_fits"] = result.failed_fits;
    finish_manifest(manifest, out, {"curves.csv"});
    return 0;
}

// ---------------------------------------------------------------- perturb-check

struct PerturbArgs {
    int p = 6;
    int r = 2;
    std::vector<double> betas{-1.0, 0.0, 1.0};  // 0 encodes the log-limit
    std::vector<int> ms{2, 4};
    std::vector<double> eps{1e-2, 1e-3, 1e-4};
    std::uint64_t seed = 1;
    std::string out = ".";
};

int cmd_perturb_check(const PerturbArgs& args) {
    phipca::PopulationModel model = phipca::make_population(args.p, 100 * args.p, args.r,
                                                            args.seed);
    // A generic outlier with leverage in both signal and noise directions.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(args.p);
    for (int j = 0; j < args.p; ++j) x += (1.0 + 0.5 * j) * model.gamma(j);

    std::vector<phipca::CsvRow> rows;
    for (double beta : args.betas) {
        const phipca::PhiSpec phi =
            beta == 0.0 ? phipca::PhiSpec::log_limit() : phipca::PhiSpec::power(beta);
        for (int m : args.ms) {
            auto report = phipca::verify_expansion(model, phi, x, m, args.eps);
            for (const auto& row : report) {
                rows.push_back({phipca::format_double(row.beta), std::to_string(row.m),
                                phipca::format_double(row.eps), row.quantity,
                                phipca::format_double(row.analytic),
                                phipca::format_double(row.numeric),
                                phipca::format_double(row.rel_error), row.moment_mode});
            }
        }
    }
    ensure_out_dir(args.out);
    phipca::write_csv(
        (fs::path(args.out) / "expansion.csv").string(),
        {"beta", "m", "eps", "quantity", "analytic", "numeric", "rel_error", "moment_mode"}, rows);

    json cfg{{"p", args.p},     {"r", args.r},     {"betas", args.betas},
             {"ms", args.ms},   {"eps", args.eps}};
    auto manifest = start_manifest("perturb-check", cfg, args.seed);
    finish_manifest(manifest, args.out, {"expansion.csv"});
    return 0;
}

// ---------------------------------------------------------------- flip-analyze

struct FlipArgs {
    std::string grid = "a-eta";  // or "m-delta"
    int steps_a = 50, steps_b = 50;
    double a_min = 1.05, a_max = 10.0;
    double eta_min = 1.05, eta_max = 10.0;
    double delta_min = 0.01, delta_max = 0.45;
    int m_min = 2, m_max = 40;
    double a_fixed = 3.0, eta_fixed = 5.0, delta_fixed = 0.1;
    int m_fixed = 10;
    int p = 4;
    std::string out = ".";
};

int cmd_flip_analyze(const FlipArgs& args) {
    std::vector<phipca::CsvRow> rows;
    auto emit = [&rows, &args](double a, double eta, int m, double delta) {
        phipca::SpikedModel sm(args.p, a, eta, delta, m);
        rows.push_back({phipca::format_double(a), phipca::format_double(eta), std::to_string(m),
                        phipca::format_double(delta),
                        phipca::hm_flip_holds(sm) ? "1" : "0",
                        phipca::gm_flip_holds(sm) ? "1" : "0",
                        phipca::is_immune(sm) ? "1" : "0"});
    };
    if (args.grid == "a-eta") {
        for (int i = 0; i < args.steps_a; ++i) {
            const double a = args.a_min + (args.a_max - args.a_min) * i /
                                              std::max(1, args.steps_a - 1);
            for (int j = 0; j < args.steps_b; ++j) {
                const double eta = args.eta_min + (args.eta_max - args.eta_min) * j /
                                                      std::max(1, args.steps_b - 1);
                emit(a, eta, args.m_fixed, args.delta_fixed);
            }
        }
    } else if (args.grid == "m-delta") {
        for (int i = 0; i < args.steps_a; ++i) {
            const int m = args.m_min +
                          static_cast<int>(std::lround(static_cast<double>(i) *
                                                       (args.m_max - args.m_min) /
                                                       std::max(1, args.steps_a - 1)));
            for (int j = 0; j < args.steps_b; ++j) {
                const double delta = args.delta_min + (args.delta_max - args.delta_min) * j /
                                                          std::max(1, args.steps_b - 1);
                emit(args.a_fixed, args.eta_fixed, m, delta);
            }
        }
    } else {
        throw phipca::ConfigError("flip-analyze: grid must be 'a-eta' or 'm-delta'");
    }
    ensure_out_dir(args.out);
    phipca::write_csv((fs::path(args.out) / "flips.csv").string(),
                      {"a", "eta", "m", "delta", "hm_flip", "gm_flip", "immune"}, rows);

    json cfg{{"grid", args.grid},         {"steps", {args.steps_a, args.steps_b}},
             {"a_fixed", args.a_fixed},   {"eta_fixed", args.eta_fixed},
             {"m_fixed", args.m_fixed},   {"delta_fixed", args.delta_fixed},
             {"p", args.p}};
    auto manifest = start_manifest("flip-analyze", cfg, 0);
    finish_manifest(manifest, args.out, {"flips.csv"});
    return 0;
}

// ---------------------------------------------------------------- reconstruct

int cmd_reconstruct(phipca::ReconConfig config, const std::string& setting) {
    if (setting == "i" || setting == "1")
        config.setting = 'i';
    else if (setting == "ii" || setting == "2")
        config.setting = 'I';
    else
        throw phipca::ConfigError("reconstruct: --setting must be i or ii");
    if (config.data_dir.empty()) {
        if (const char* env = std::getenv("PHI_PCA_DATA_DIR")) config.data_dir = env;
    }
    if (config.out_dir.empty()) config.out_dir = ".";
    ensure_out_dir(config.out_dir);

    std::vector<phipca::ReconResult> results = phipca::run_recon_study(config);
    std::vector<phipca::CsvRow> rows;
    for (const auto& res : results) {
        rows.push_back({std::to_string(res.digit), res.method, std::to_string(res.r),
                        phipca::format_double(res.pi), phipca::format_double(res.sigma_out),
                        phipca::format_double(res.mean_mse())});
    }
    phipca::write_csv((fs::path(config.out_dir) / "mse.csv").string(),
                      {"digit", "method", "r", "pi", "sigma_out", "mean_mse"}, rows);

    std::vector<std::string> outputs{"mse.csv"};
    for (const auto& entry : fs::directory_iterator(config.out_dir)) {
        if (entry.path().extension() == ".pgm") outputs.push_back(entry.path().filename());
    }
    std::sort(outputs.begin() + 1, outputs.end());

    json cfg{{"digits", config.digits},
             {"setting", setting},
             {"methods", config.methods},
             {"r", config.r},
             {"data_dir", config.data_dir},
             {"fallback_synthetic", config.fallback_synthetic},
             {"n_train_cap", config.n_train_cap},
             {"n_test", config.n_test},
             {"scale_pixels", config.scale_pixels}};
    auto manifest = start_manifest("reconstruct", cfg, config.seed);
    finish_manifest(manifest, config.out_dir, outputs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phi-PCA: robust PCA via phi-aggregated subsample covariances"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker thread count (0: hardware default)");

    // fit
    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "phi-PCA fit of a CSV sample matrix");
    fit->add_option("--in", fit_args.csv_in, "input CSV (rows = samples)")->required();
    fit->add_option("--m", fit_args.m, "number of blocks (0: floor(sqrt(n)))");
    auto* beta_opt = fit->add_option("--beta", fit_args.beta, "power-transform exponent");
    fit->add_flag("--log", fit_args.use_log, "use the log-limit (GM) transform")
        ->excludes(beta_opt);
    double ridge_val = 0.0;
    auto* ridge_opt = fit->add_option("--ridge", ridge_val, "spectral ridge added per block");
    fit->add_option("--seed", fit_args.seed, "partition seed");
    fit->add_option("--out", fit_args.out, "output directory");

    // simulate
    std::string sim_config_path, sim_out = ".";
    phipca::SimConfig sim_defaults;
    auto* sim = app.add_subcommand("simulate", "subspace-recovery Monte Carlo experiment");
    sim->add_option("--config", sim_config_path, "JSON config (keys mirror the config fields)");
    sim->add_option("--out", sim_out, "output directory");
    auto* o_n = sim->add_option("--n", sim_defaults.n);
    auto* o_p = sim->add_option("--p", sim_defaults.p);
    auto* o_r = sim->add_option("--r", sim_defaults.r);
    auto* o_pi = sim->add_option("--pi", sim_defaults.pi);
    auto* o_sig = sim->add_option("--sigma-out", sim_defaults.sigma_out);
    auto* o_dof = sim->add_option("--t-dof", sim_defaults.t_dof);
    auto* o_rep = sim->add_option("--replicates", sim_defaults.replicates);
    auto* o_qm = sim->add_option("--q-max", sim_defaults.q_max);
    auto* o_m = sim->add_option("--m", sim_defaults.m);
    auto* o_seed = sim->add_option("--seed", sim_defaults.seed);
    std::vector<std::string> sim_methods;
    auto* o_methods = sim->add_option("--methods", sim_methods, "subset of HM GM AM GM2 PPCA PCA optPCA");

    // perturb-check
    PerturbArgs pt_args;
    auto* pt = app.add_subcommand("perturb-check", "numeric vs analytic expansion report");
    pt->add_option("--p", pt_args.p);
    pt->add_option("--r", pt_args.r);
    pt->add_option("--betas", pt_args.betas, "power exponents (0 = log-limit)");
    pt->add_option("--ms", pt_args.ms, "block counts");
    pt->add_option("--eps", pt_args.eps, "contamination strengths");
    pt->add_option("--seed", pt_args.seed);
    pt->add_option("--out", pt_args.out);

    // flip-analyze
    FlipArgs fl_args;
    auto* fl = app.add_subcommand("flip-analyze", "spiked-model flip phase diagram");
    fl->add_option("--grid", fl_args.grid, "a-eta or m-delta");
    fl->add_option("--steps", fl_args.steps_a)->each([&fl_args](const std::string& v) {
        fl_args.steps_b = std::stoi(v);
    });
    fl->add_option("--a-min", fl_args.a_min);
    fl->add_option("--a-max", fl_args.a_max);
    fl->add_option("--eta-min", fl_args.eta_min);
    fl->add_option("--eta-max", fl_args.eta_max);
    fl->add_option("--delta-min", fl_args.delta_min);
    fl->add_option("--delta-max", fl_args.delta_max);
    fl->add_option("--m-min", fl_args.m_min);
    fl->add_option("--m-max", fl_args.m_max);
    fl->add_option("--a", fl_args.a_fixed);
    fl->add_option("--eta", fl_args.eta_fixed);
    fl->add_option("--delta", fl_args.delta_fixed);
    fl->add_option("--m", fl_args.m_fixed);
    fl->add_option("--p", fl_args.p);
    fl->add_option("--out", fl_args.out);

    // reconstruct
    phipca::ReconConfig rc_config;
    std::string rc_setting = "i";
    auto* rc = app.add_subcommand("reconstruct", "image reconstruction MSE study");
    rc->add_option("--digit", rc_config.digits, "digit classes");
    rc->add_option("--setting", rc_setting, "i (vary pi) or ii (vary sigma_out)");
    rc->add_option("--methods", rc_config.methods, "subset of HM GM AM PCA");
    rc->add_option("--data-dir", rc_config.data_dir, "IDX dataset directory");
    rc->add_flag("--fallback-synthetic,!--no-fallback-synthetic", rc_config.fallback_synthetic,
                 "use the synthetic corpus when the dataset is absent");
    rc->add_option("--r", rc_config.r, "reconstruction rank");
    rc->add_option("--seed", rc_config.seed);
    rc->add_option("--n-train", rc_config.n_train_cap);
    rc->add_option("--n-test", rc_config.n_test);
    rc->add_flag("--scale", rc_config.scale_pixels, "divide pixels by 255 before fitting");
    rc->add_option("--pgm-count", rc_config.pgm_emit_count, "reconstructions written per grid point");
    rc->add_option("--out", rc_config.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
        // Parallelism is orchestrated at the module level (per-block loops);
        // Eigen's internal GEMM threading is pinned to one thread so results
        // do not depend on --threads through reduction order.
        Eigen::setNbThreads(1);
        if (*fit) {
            if (*ridge_opt) fit_args.ridge = ridge_val;
            return cmd_fit(fit_args);
        }
        if (*sim) {
            phipca::SimConfig config;
            if (!sim_config_path.empty()) {
                std::ifstream in(sim_config_path);
                if (!in)
                    throw phipca::ConfigError("cannot open config '" + sim_config_path + "'");
                json j;
                try {
                    j = json::parse(in);
                } catch (const json::parse_error& e) {
                    throw phipca::ParseError(std::string("config JSON: ") + e.what());
                }
                config = sim_config_from_json(j);
            }
            // flags > file > defaults
            if (*o_n) config.n = sim_defaults.n;
            if (*o_p) config.p = sim_defaults.p;
            if (*o_r) config.r = sim_defaults.r;
            if (*o_pi) config.pi = sim_defaults.pi;
            if (*o_sig) config.sigma_out = sim_defaults.sigma_out;
            if (*o_dof) config.t_dof = sim_defaults.t_dof;
            if (*o_rep) config.replicates = sim_defaults.replicates;
            if (*o_qm) config.q_max = sim_defaults.q_max;
            if (*o_m) config.m = sim_defaults.m;
            if (*o_seed) config.seed = sim_defaults.seed;
            if (*o_methods) {
                config.methods.clear();
                for (const auto& name : sim_methods)
                    config.methods.push_back(phipca::method_from_name(name));
            }
            return cmd_simulate(config, sim_out);
        }
        if (*pt) return cmd_perturb_check(pt_args);
        if (*fl) return cmd_flip_analyze(fl_args);
        if (*rc) return cmd_reconstruct(rc_config, rc_setting);
    } catch (const phipca::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
