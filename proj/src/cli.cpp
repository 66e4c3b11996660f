#include "foldsimplex/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <unistd.h>

#include "foldsimplex/analysis.hpp"
#include "foldsimplex/data.hpp"
#include "foldsimplex/estimation.hpp"
#include "foldsimplex/inference.hpp"
#include "foldsimplex/model.hpp"
#include "foldsimplex/presets.hpp"

namespace foldsimplex {

using json = nlohmann::json;

namespace {

json to_json(const Vector& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(to_json(Vector(m.row(r).transpose())));
    }
    return rows;
}

// Writes through a temporary file in the target directory, then renames it.
void write_atomically(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            raise(ErrorKind::io, "cannot write " + tmp);
        }
        f << content;
        f.flush();
        if (!f) {
            raise(ErrorKind::io, "write to " + tmp + " failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        raise(ErrorKind::io, "cannot rename " + tmp + " to " + path);
    }
}

struct DataFlags {
    std::string path;
    std::string delimiter = ",";
    bool no_header = false;
    bool normalize = false;
    std::vector<int> drop_rows;

    void add_to(CLI::App* cmd) {
        cmd->add_option("input", path, "Composition CSV")->required();
        cmd->add_option("--delimiter", delimiter, "Field delimiter")->capture_default_str();
        cmd->add_flag("--no-header", no_header, "First line is data");
        cmd->add_flag("--normalize", normalize, "Close rows that do not sum to 1");
        cmd->add_option("--drop-rows", drop_rows, "1-based data rows to leave out")->delimiter(',');
    }

    DataMatrix load() const {
        if (delimiter.size() != 1) {
            raise(ErrorKind::invalid_argument, "delimiter must be one character");
        }
        DatasetOptions options;
        options.delimiter = delimiter[0];
        options.has_header = !no_header;
        options.normalize = normalize;
        DataMatrix data = read_dataset_file(path, options);
        return drop_rows.empty() ? data : data.drop_ids(drop_rows);
    }
};

struct ParamFlags {
    double alpha = 1.0;
    std::vector<double> mu;
    std::string sigma_path;
    std::optional<double> p;

    void add_to(CLI::App* cmd, bool with_p) {
        cmd->add_option("--alpha", alpha, "alpha in [-1, 1]")->capture_default_str();
        cmd->add_option("--mu", mu, "Mean in R^{D-1}, comma separated")->delimiter(',')->required();
        cmd->add_option("--sigma", sigma_path, "Square CSV covariance")->required();
        if (with_p) {
            cmd->add_option("--p", p, "Weight of the inside branch (default: N(mu, Sigma) mass of the region)");
        }
    }

    FoldedNormalParams params(double p_value = 1.0) const {
        const Matrix sigma = read_matrix_file(sigma_path);
        Vector m = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
        if (sigma.rows() != m.size()) {
            raise(ErrorKind::invalid_dimension, "sigma must be (D-1) x (D-1) for the given mu");
        }
        return make_params(alpha, alpha == 0.0 ? 1.0 : p_value, std::move(m), sigma);
    }
};

struct OutputFlags {
    std::string output = "-";
    std::string manifest;

    void add_to(CLI::App* cmd) {
        cmd->add_option("-o,--output", output, "Output file ('-' for standard output)")->capture_default_str();
        cmd->add_option("--manifest", manifest, "Manifest path (default: <output>.manifest.json)");
    }
};

class Runner {
public:
    Runner(std::vector<std::string> args, std::ostream& out, std::ostream& err)
        : args_(std::move(args)), out_(out), err_(err) {}

    // Emits `body` and the run manifest. JSON reports carry the manifest inline as well.
    void emit(const std::string& command, const OutputFlags& flags, const std::string& body, json manifest_extra,
              std::uint64_t seed, const std::vector<std::string>& inputs, bool body_is_json) {
        json manifest = {{"command", command},
                         {"arguments", std::vector<std::string>(args_.begin() + 1, args_.end())},
                         {"parameters", parameters_},
                         {"seed", seed},
                         {"library_version", library_version}};
        json digests = json::array();
        for (const std::string& path : inputs) {
            if (!path.empty()) {
                digests.push_back({{"path", path}, {"sha256", file_sha256(path)}});
            }
        }
        manifest["input_digest"] = digests;
        if (!manifest_extra.is_null()) {
            manifest["summary"] = std::move(manifest_extra);
        }

        std::string text = body;
        if (body_is_json) {
            json report = json::parse(body);
            report["manifest"] = manifest;
            text = report.dump(2) + "\n";
        }
        if (flags.output == "-") {
            out_ << text;
        } else {
            write_atomically(flags.output, text);
        }
        std::string manifest_path = flags.manifest;
        if (manifest_path.empty() && flags.output != "-") {
            manifest_path = flags.output + ".manifest.json";
        }
        if (!manifest_path.empty()) {
            write_atomically(manifest_path, manifest.dump(2) + "\n");
        } else if (!body_is_json) {
            err_ << manifest.dump() << '\n';
        }
    }

    void record(CLI::App* cmd) {
        parameters_ = json::object();
        for (const CLI::Option* opt : cmd->get_options()) {
            if (opt->get_name() == "--help" || opt->count() == 0) {
                continue;
            }
            std::string key = opt->get_name();
            key.erase(0, key.find_first_not_of('-'));
            std::replace(key.begin(), key.end(), '-', '_');
            std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
            const auto results = opt->results();
            parameters_[key] = results.size() == 1 ? json(results.front()) : json(results);
        }
    }

private:
    std::vector<std::string> args_;
    std::ostream& out_;
    std::ostream& err_;
    json parameters_ = json::object();
};

json fit_report(const DataMatrix& data, const FitResult& fit, const std::vector<ProfilePoint>& profile,
                std::uint64_t seed, int pca_components) {
    json report = {{"n", data.rows()},
                   {"parts", data.parts()},
                   {"names", data.names()},
                   {"row_ids", data.row_ids()},
                   {"alpha", fit.params.alpha},
                   {"p", fit.params.p},
                   {"mu", to_json(fit.params.mu)},
                   {"sigma", to_json(fit.params.sigma)},
                   {"log_likelihood", fit.log_likelihood},
                   {"iterations", fit.iterations},
                   {"converged", fit.converged},
                   {"trace", fit.trace}};
    json prof = json::array();
    for (const ProfilePoint& pt : profile) {
        prof.push_back({{"alpha", pt.alpha}, {"log_likelihood", pt.log_likelihood}});
    }
    report["profile"] = prof;
    report["log_likelihood_alpha0"] = loglik_alpha0(data).log_likelihood;
    if (fit.params.alpha != 0.0) {
        report["induced_p"] = 1.0 - outside_probability(fit.params, 1000000, seed).total;
    } else {
        report["induced_p"] = 1.0;
    }
    if (fit.converged) {
        report["frechet_mean"] = to_json(frechet_mean(fit).parts());
        if (pca_components > 0) {
            const PcaResult pca = simplex_pca(fit, pca_components);
            json curves = json::array();
            for (std::size_t k = 0; k < pca.curves.size(); ++k) {
                curves.push_back({{"t", to_json(pca.grid[k])}, {"points", to_json(pca.curves[k])}});
            }
            report["pca"] = {{"eigenvalues", to_json(pca.eigenvalues)},
                             {"eigenvectors", to_json(pca.eigenvectors)},
                             {"curves", curves}};
        }
    } else {
        report["frechet_mean"] = nullptr;
    }
    return report;
}

std::string contour_csv(const ContourGrid& grid) {
    std::ostringstream os;
    os << "i,j,k,x1,x2,x3,log_density\n";
    os << std::setprecision(17);
    for (std::size_t r = 0; r < grid.index.size(); ++r) {
        const auto& ijk = grid.index[r];
        const auto row = static_cast<Eigen::Index>(r);
        os << ijk[0] << ',' << ijk[1] << ',' << ijk[2] << ',' << grid.nodes(row, 0) << ',' << grid.nodes(row, 1)
           << ',' << grid.nodes(row, 2) << ',';
        if (!std::isnan(grid.log_density[row])) {
            os << grid.log_density[row];
        }
        os << '\n';
    }
    return os.str();
}

} // namespace

int exit_code(ErrorKind kind) { return exit_usage + 1 + static_cast<int>(kind); }

std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(ErrorKind::io, "cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string bytes = buffer.str();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        raise(ErrorKind::io, "SHA-256 failed for " + path);
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return hex.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Alpha-folded normal models for compositional data", "foldsimplex"};
    app.require_subcommand(1);
    app.set_version_flag("--version", library_version);
    Runner runner(args, out, err);
    std::function<int()> action;

    // fit
    DataFlags fit_data;
    OutputFlags fit_out;
    std::optional<double> fit_alpha_value;
    double grid_step = 0.05;
    bool no_refine = false;
    double tol = 1e-6;
    int max_iter = 500;
    int pca_components = 0;
    std::uint64_t fit_seed = 1;
    auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit, profiling alpha unless --alpha is given");
    fit_data.add_to(fit_cmd);
    fit_out.add_to(fit_cmd);
    fit_cmd->add_option("--alpha", fit_alpha_value, "Fix alpha (0 gives the logistic normal)");
    fit_cmd->add_option("--grid-step", grid_step, "Spacing of the alpha grid on [-1, 1]")->capture_default_str();
    fit_cmd->add_flag("--no-refine", no_refine, "Skip Brent refinement after the grid");
    fit_cmd->add_option("--tol", tol, "EM log-likelihood tolerance")->capture_default_str();
    fit_cmd->add_option("--max-iter", max_iter, "EM iteration cap")->capture_default_str();
    fit_cmd->add_option("--pca", pca_components, "Principal components to report")->capture_default_str();
    fit_cmd->add_option("--seed", fit_seed, "Seed for the induced-p Monte Carlo")->capture_default_str();
    fit_cmd->callback([&] {
        action = [&] {
            runner.record(fit_cmd);
            const DataMatrix data = fit_data.load();
            EmOptions em;
            em.tol = tol;
            em.max_iter = max_iter;
            FitResult fit;
            std::vector<ProfilePoint> profile;
            if (fit_alpha_value) {
                fit = fit_at(data, *fit_alpha_value, em);
                profile.push_back({*fit_alpha_value, fit.log_likelihood});
            } else {
                const std::vector<double> grid =
                    grid_step == 0.05 ? default_alpha_grid() : local_alpha_grid(0.0, 1.0, grid_step);
                AlphaSearchResult search = fit_alpha(data, grid, !no_refine, em);
                fit = std::move(search.best_fit);
                profile = std::move(search.profile);
            }
            const json report = fit_report(data, fit, profile, fit_seed, pca_components);
            runner.emit("fit", fit_out, report.dump(), nullptr, fit_seed, {fit_data.path}, true);
            return fit.converged ? 0 : exit_check_failed;
        };
    });

    // sample
    ParamFlags sample_params;
    OutputFlags sample_out;
    int sample_n = 100;
    std::uint64_t sample_seed = 1;
    bool with_branches = false;
    std::vector<std::string> names;
    auto* sample_cmd = app.add_subcommand("sample", "Draw compositions from the alpha-folded normal");
    sample_params.add_to(sample_cmd, false);
    sample_out.add_to(sample_cmd);
    sample_cmd->add_option("-n,--n", sample_n, "Number of draws")->capture_default_str();
    sample_cmd->add_option("--seed", sample_seed, "Random seed")->capture_default_str();
    sample_cmd->add_option("--names", names, "Part names")->delimiter(',');
    sample_cmd->add_flag("--branches", with_branches, "Add a column naming the branch of each draw");
    sample_cmd->callback([&] {
        action = [&] {
            runner.record(sample_cmd);
            const FoldedNormalParams theta = sample_params.params();
            if (sample_n < 0) {
                raise(ErrorKind::invalid_argument, "n must be non-negative");
            }
            std::vector<std::string> header = names.empty() ? default_part_names(theta.parts()) : names;
            if (static_cast<int>(header.size()) != theta.parts()) {
                raise(ErrorKind::invalid_argument, "number of names does not match D");
            }
            std::ostringstream os;
            if (with_branches) {
                header.push_back("branch");
            }
            write_dataset_header(os, header);
            if (sample_n > 0) {
                const SampleResult drawn = sample_with_branches(theta, sample_n, sample_seed);
                std::ostringstream rows;
                write_dataset(rows, drawn.data);
                std::istringstream lines(rows.str());
                std::string line;
                std::getline(lines, line);
                for (int i = 0; std::getline(lines, line); ++i) {
                    os << line;
                    if (with_branches) {
                        os << ',' << to_string(drawn.branches[static_cast<std::size_t>(i)]);
                    }
                    os << '\n';
                }
            }
            runner.emit("sample", sample_out, os.str(), nullptr, sample_seed, {sample_params.sigma_path}, false);
            return 0;
        };
    });

    // contour
    ParamFlags contour_params;
    OutputFlags contour_out;
    int resolution = 200;
    std::string density_name = "mixture";
    std::uint64_t contour_seed = 1;
    double persistence = 0.01;
    auto* contour_cmd = app.add_subcommand("contour", "Log-density on a barycentric grid over the 2-simplex");
    contour_params.add_to(contour_cmd, true);
    contour_out.add_to(contour_cmd);
    contour_cmd->add_option("--resolution", resolution, "Grid subdivisions per edge")->capture_default_str();
    contour_cmd->add_option("--density", density_name, "mixture or fold")
        ->check(CLI::IsMember({"mixture", "fold"}))
        ->capture_default_str();
    contour_cmd->add_option("--seed", contour_seed, "Seed for the default p")->capture_default_str();
    contour_cmd->add_option("--persistence", persistence, "Mode persistence threshold")->capture_default_str();
    contour_cmd->callback([&] {
        action = [&] {
            runner.record(contour_cmd);
            FoldedNormalParams theta = contour_params.params();
            if (theta.alpha != 0.0) {
                theta.p = contour_params.p ? *contour_params.p
                                           : 1.0 - outside_probability(theta, 1000000, contour_seed).total;
                theta.validate();
            }
            const ContourGrid grid = contour_grid(
                theta, resolution, density_name == "fold" ? GridDensity::fold : GridDensity::mixture);
            const json summary = {{"p", theta.p},
                                  {"modes", count_modes(grid, persistence)},
                                  {"local_maxima", count_local_maxima(grid)},
                                  {"mass", grid_mass(grid)}};
            runner.emit("contour", contour_out, contour_csv(grid), summary, contour_seed,
                        {contour_params.sigma_path}, false);
            return 0;
        };
    });

    // outside
    ParamFlags outside_params;
    OutputFlags outside_out;
    double draws = 1e6;
    std::uint64_t outside_seed = 1;
    auto* outside_cmd = app.add_subcommand("outside", "Monte-Carlo mass left outside the simplex, per part");
    outside_params.add_to(outside_cmd, false);
    outside_out.add_to(outside_cmd);
    outside_cmd->add_option("--draws", draws, "Number of normal draws")->capture_default_str();
    outside_cmd->add_option("--seed", outside_seed, "Random seed")->capture_default_str();
    outside_cmd->callback([&] {
        action = [&] {
            runner.record(outside_cmd);
            const FoldedNormalParams theta = outside_params.params();
            const OutsideProbability o =
                outside_probability(theta, static_cast<std::int64_t>(std::llround(draws)), outside_seed);
            const json report = {{"total", o.total}, {"per_component", to_json(o.per_component)}, {"draws", o.draws}};
            runner.emit("outside", outside_out, report.dump(), nullptr, outside_seed, {outside_params.sigma_path},
                        true);
            return 0;
        };
    });

    // test
    DataFlags test_data;
    OutputFlags test_out;
    int test_B = 299;
    std::uint64_t test_seed = 1;
    std::string statistic = "alpha";
    auto* test_cmd = app.add_subcommand("test", "Bootstrap test of alpha = 0");
    test_data.add_to(test_cmd);
    test_out.add_to(test_cmd);
    test_cmd->add_option("--B", test_B, "Bootstrap replicates")->capture_default_str();
    test_cmd->add_option("--seed", test_seed, "Random seed")->capture_default_str();
    test_cmd->add_option("--statistic", statistic, "alpha or lr")
        ->check(CLI::IsMember({"alpha", "lr"}))
        ->capture_default_str();
    test_cmd->callback([&] {
        action = [&] {
            runner.record(test_cmd);
            const DataMatrix data = test_data.load();
            const BootstrapTestResult r = bootstrap_test_alpha(
                data, test_B, test_seed,
                statistic == "lr" ? BootstrapStatistic::likelihood_ratio : BootstrapStatistic::alpha);
            const json report = {{"statistic", statistic}, {"replicates", test_B},         {"alpha_obs", r.alpha_obs},
                                 {"lr_obs", r.lr_obs},     {"p_value", r.p_value}, {"alpha_boot", r.alpha_boot},
                                 {"lr_boot", r.lr_boot},   {"redraws", r.redraws}};
            runner.emit("test", test_out, report.dump(), nullptr, test_seed, {test_data.path}, true);
            return 0;
        };
    });

    // ci
    DataFlags ci_data;
    OutputFlags ci_out;
    std::string method = "bootstrap";
    int ci_B = 1000;
    double level = 0.95;
    double h = 1e-2;
    std::uint64_t ci_seed = 1;
    auto* ci_cmd = app.add_subcommand("ci", "Confidence interval for alpha");
    ci_data.add_to(ci_cmd);
    ci_out.add_to(ci_cmd);
    ci_cmd->add_option("--method", method, "bootstrap or curvature")
        ->check(CLI::IsMember({"bootstrap", "curvature"}))
        ->capture_default_str();
    ci_cmd->add_option("--B", ci_B, "Bootstrap replicates")->capture_default_str();
    ci_cmd->add_option("--level", level, "Confidence level")->capture_default_str();
    ci_cmd->add_option("--step", h, "Finite-difference step for the curvature method")->capture_default_str();
    ci_cmd->add_option("--seed", ci_seed, "Random seed")->capture_default_str();
    ci_cmd->callback([&] {
        action = [&] {
            runner.record(ci_cmd);
            const DataMatrix data = ci_data.load();
            json report;
            if (method == "bootstrap") {
                const BootstrapInterval r = bootstrap_ci_alpha(data, ci_B, level, ci_seed);
                report = {{"method", method},   {"alpha_hat", r.alpha_obs}, {"lower", r.lower},
                          {"upper", r.upper},   {"level", level},           {"replicates", ci_B},
                          {"alpha_boot", r.alpha_boot}, {"redraws", r.redraws}};
            } else {
                const CurvatureInterval r = curvature_ci_alpha(data, level, h);
                report = {{"method", method}, {"alpha_hat", r.alpha_hat}, {"lower", r.lower},
                          {"upper", r.upper}, {"level", level},           {"se", r.se},
                          {"h", h},           {"second_derivative", r.second_derivative}};
            }
            runner.emit("ci", ci_out, report.dump(), nullptr, ci_seed, {ci_data.path}, true);
            return 0;
        };
    });

    // study
    OutputFlags study_out;
    std::string preset;
    std::string format = "csv";
    std::vector<double> alphas;
    std::vector<double> kappas;
    std::vector<int> ns;
    int reps = 0;
    std::vector<double> study_mu;
    std::string study_sigma_path;
    std::optional<std::uint64_t> study_seed;
    bool estimate_alpha = false;
    double truth_draws = 1e6;
    auto* study_cmd = app.add_subcommand("study", "Parameter-recovery simulation");
    study_out.add_to(study_cmd);
    study_cmd->add_option("--preset", preset, "Named configuration")->check(CLI::IsMember({"desk"}));
    study_cmd->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    study_cmd->add_option("--alphas", alphas, "alpha values")->delimiter(',');
    study_cmd->add_option("--kappas", kappas, "Covariance scales")->delimiter(',');
    study_cmd->add_option("--ns", ns, "Sample sizes")->delimiter(',');
    study_cmd->add_option("--reps", reps, "Replications per cell");
    study_cmd->add_option("--mu", study_mu, "Mean in R^{D-1}")->delimiter(',');
    study_cmd->add_option("--sigma", study_sigma_path, "Base covariance CSV");
    study_cmd->add_option("--seed", study_seed, "Random seed");
    study_cmd->add_flag("--estimate-alpha", estimate_alpha, "Also profile alpha in every replicate");
    study_cmd->add_option("--truth-draws", truth_draws, "Monte-Carlo draws for the true p")->capture_default_str();
    study_cmd->callback([&] {
        action = [&] {
            runner.record(study_cmd);
            StudyConfig cfg = preset == "desk" ? presets::desk_study() : StudyConfig{};
            if (!alphas.empty()) {
                cfg.alphas = alphas;
            }
            if (!kappas.empty()) {
                cfg.kappas = kappas;
            }
            if (!ns.empty()) {
                cfg.ns = ns;
            }
            if (reps > 0) {
                cfg.replications = reps;
            }
            if (!study_mu.empty()) {
                cfg.base_mu = Eigen::Map<const Vector>(study_mu.data(), static_cast<Eigen::Index>(study_mu.size()));
            }
            if (!study_sigma_path.empty()) {
                cfg.base_sigma = read_matrix_file(study_sigma_path);
            }
            if (study_seed) {
                cfg.seed = *study_seed;
            }
            cfg.estimate_alpha = cfg.estimate_alpha || estimate_alpha;
            cfg.truth_draws = static_cast<std::int64_t>(std::llround(truth_draws));
            if (cfg.base_mu.size() == 0 || cfg.base_sigma.size() == 0) {
                raise(ErrorKind::invalid_argument, "study needs --preset or --mu and --sigma");
            }
            const StudyReport report = recovery_study(cfg);
            std::string body;
            if (format == "json") {
                body = study_json(report);
            } else {
                std::ostringstream os;
                write_study_csv(os, report);
                body = os.str();
            }
            json summary = {{"cells", report.cells.size()}};
            runner.emit("study", study_out, body, summary, cfg.seed, {study_sigma_path}, format == "json");
            return 0;
        };
    });

    try {
        std::vector<std::string> rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
        app.parse(rest);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    }

    try {
        return action ? action() : exit_usage;
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(ErrorKind::numeric_failure);
    }
}

} // namespace foldsimplex
