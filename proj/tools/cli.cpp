#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "atl/config.hpp"
#include "atl/error.hpp"
#include "atl/experiments.hpp"
#include "atl/selection.hpp"
#include "atl/solver.hpp"

namespace atl::cli {
namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Write to a sibling temp file, then rename over the target.
void write_atomically(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        f << content;
        if (!f.flush()) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string index_list(const std::vector<Index>& idx) {
    std::string out;
    for (Index j : idx) {
        if (!out.empty()) {
            out += ' ';
        }
        out += std::to_string(j + 1);
    }
    return out.empty() ? "(none)" : out;
}

struct FitArgs {
    std::string data;
    bool header = false;
    std::string method = "lasso";
    double lambda = 0.0;
    double eta = 0.0;
    double alpha = 1.0;
    std::string kappa;
    double gamma = 1.0;
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    std::string initial;
    double clip = 1e-3;
    std::string out;
    int max_sweeps = 100000;
    double tolerance = 1e-10;
};

struct StudyArgs {
    std::string name;
    std::string config;
    std::string out = ".";
    std::uint64_t seed = 0;
    int replicates = 0;
    int jobs = 0;
    std::vector<std::string> methods;
    std::vector<std::string> sets;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

int cmd_fit(const FitArgs& a, const CLI::App& cmd, std::ostream& out, std::ostream& err) {
    const bool has_lambda = cmd.count("--lambda") > 0;
    const bool has_eta = cmd.count("--eta") > 0;
    const bool has_alpha = cmd.count("--alpha") > 0;
    const bool has_kappa = cmd.count("--kappa") > 0;

    const Family family = parse_family(a.method);
    if (needs_initial_estimate(family) && a.initial.empty()) {
        throw UsageError("--initial is required for method " + to_string(family));
    }
    const bool transfer = family == Family::transfer_lasso || family == Family::adaptive_transfer_lasso;
    if (has_lambda == has_kappa) {
        throw UsageError("give exactly one of --lambda or --kappa");
    }
    if (has_eta && (!transfer || !has_lambda)) {
        throw UsageError("--eta only applies with --lambda to transfer methods");
    }
    if (has_alpha && (!transfer || !has_kappa)) {
        throw UsageError("--alpha only applies with --kappa to transfer methods");
    }
    if (transfer && has_kappa && !has_alpha) {
        throw UsageError("transfer methods need --alpha with --kappa");
    }

    const DataTable table = read_data_csv(a.data, a.header);
    const Index p = table.design.cols();
    std::optional<Eigen::VectorXd> beta_tilde;
    if (!a.initial.empty()) {
        beta_tilde = read_vector_file(a.initial);
        if (beta_tilde->size() != p) {
            throw UsageError("initial estimator has " + std::to_string(beta_tilde->size()) + " entries, data has " +
                             std::to_string(p) + " features");
        }
    }
    const double gamma1 = family == Family::adaptive_lasso ? a.gamma : a.gamma1;
    const double gamma2 = a.gamma2;

    FitOptions options;
    options.max_sweeps = a.max_sweeps;
    options.tolerance = a.tolerance;

    PenaltySpec penalty;
    if (has_lambda) {
        penalty = make_penalty(family, gamma1, gamma2, a.lambda, transfer ? a.eta : 0.0, beta_tilde, a.clip, p);
    } else {
        const double alpha = transfer ? a.alpha : 1.0;
        if (!(alpha > 0.0 && alpha <= 1.0)) {
            throw UsageError("--alpha must lie in (0, 1]");
        }
        const PenaltySpec shape =
            make_penalty(family, gamma1, gamma2, alpha, 1.0 - alpha, beta_tilde, a.clip, p);
        double kappa = 0.0;
        if (a.kappa == "auto") {
            kappa = lambda_max(table.design, table.response, shape.v, shape.w, shape.anchor, alpha, options);
        } else {
            kappa = parse_double(a.kappa, "--kappa");
        }
        penalty = make_penalty(family, gamma1, gamma2, alpha * kappa, (1.0 - alpha) * kappa, beta_tilde, a.clip, p);
    }

    const FitResult r = fit(table.design, table.response, penalty, options);
    out << "method: " << to_string(family) << "\n";
    out << "n: " << table.design.rows() << "\n";
    out << "p: " << p << "\n";
    out << "lambda: " << format_double(penalty.lambda) << "\n";
    out << "eta: " << format_double(penalty.eta) << "\n";
    out << "converged: " << (r.converged ? "yes" : "no") << "\n";
    out << "iterations: " << r.iterations << "\n";
    out << "kkt_residual: " << format_double(r.kkt_residual) << "\n";
    out << "objective: " << format_double(r.objective) << "\n";
    out << "active_set: " << index_list(r.active_set()) << "\n";
    if (needs_initial_estimate(family) && family != Family::adaptive_lasso) {
        out << "anchored_set: " << index_list(r.anchored_set()) << "\n";
    }
    out << "beta:\n";
    for (Index j = 0; j < p; ++j) {
        out << "  " << (j + 1) << " " << format_double(r.beta_hat(j)) << "\n";
    }
    if (!a.out.empty()) {
        std::ostringstream csv;
        csv << "index,beta\n";
        for (Index j = 0; j < p; ++j) {
            csv << (j + 1) << ',' << format_double(r.beta_hat(j)) << '\n';
        }
        write_atomically(a.out, csv.str());
    }
    if (!r.converged) {
        err << "fit did not converge (kkt residual " << format_double(r.kkt_residual) << ")\n";
        return 2;
    }
    return 0;
}

std::string manifest_text(const ExperimentConfig& config, const std::string& started, const std::string& finished,
                          const std::string& status, const fs::path& csv) {
    std::ostringstream m;
    m << "# atlasso run manifest\n";
    m << "# tool_version = " << kToolVersion << "\n";
    m << "# study = " << to_string(config.study) << "\n";
    m << "# status = " << status << "\n";
    m << "# started = " << started << "\n";
    m << "# finished = " << finished << "\n";
    m << "# jobs = " << config.jobs << "\n";
    m << "# output = " << csv.string() << "\n";
    m << "# Resolved configuration; pass this file to --config to rerun.\n";
    m << to_key_value(config).to_string();
    return m.str();
}

int cmd_study(const StudyArgs& a, const CLI::App& cmd, std::ostream& out) {
    const Study study = parse_study(a.name);
    KeyValueConfig kv = a.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(a.config);
    for (const auto& s : a.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--set expects key=value, got '" + s + "'");
        }
        kv.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    if (cmd.count("--seed") > 0) {
        kv.set("seed", std::to_string(a.seed));
    }
    if (cmd.count("--replicates") > 0) {
        kv.set("replicates", std::to_string(a.replicates));
    }
    if (!a.methods.empty()) {
        std::string list;
        for (const auto& m : a.methods) {
            list += (list.empty() ? "" : ",") + to_string(parse_family(m));
        }
        kv.set("study." + to_string(study) + ".methods", list);
    }
    ExperimentConfig config = experiment_config_from(study, kv);
    if (cmd.count("--jobs") > 0) {
        if (a.jobs < 1) {
            throw UsageError("--jobs must be at least 1");
        }
        config.jobs = a.jobs;
    }

    const fs::path dir(a.out);
    fs::create_directories(dir);
    const fs::path csv = dir / (to_string(study) + ".csv");
    const fs::path manifest = dir / "manifest.txt";
    const std::string started = utc_now();
    write_atomically(manifest, manifest_text(config, started, "", "running", csv));

    const SweepResult result = run_study(config);
    write_atomically(csv, result.to_csv());
    write_atomically(manifest, manifest_text(config, started, utc_now(), "complete", csv));
    out << "wrote " << csv.string() << " (" << result.rows.size() << " rows)\n";
    out << "wrote " << manifest.string() << "\n";
    return 0;
}

} // namespace

DataTable read_data_csv(const std::string& path, bool header) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open data file '" + path + "'");
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (header && line_no == 1) {
            continue;
        }
        if (trim(line).empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            const std::string t = trim(cell);
            double v = 0.0;
            std::size_t used = 0;
            try {
                v = std::stod(t, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (t.empty() || used != t.size() || !std::isfinite(v)) {
                throw std::runtime_error(path + ": row " + std::to_string(line_no) + ", column " +
                                         std::to_string(col) + ": cannot parse '" + t + "' as a number");
            }
            row.push_back(v);
        }
        if (!line.empty() && line.back() == ',') {
            throw std::runtime_error(path + ": row " + std::to_string(line_no) + ", column " +
                                     std::to_string(col + 1) + ": empty field");
        }
        if (width == 0) {
            width = row.size();
            if (width < 2) {
                throw std::runtime_error(path + ": row " + std::to_string(line_no) +
                                         ": need a response column and at least one feature column");
            }
        } else if (row.size() != width) {
            throw std::runtime_error(path + ": row " + std::to_string(line_no) + ": expected " +
                                     std::to_string(width) + " columns, found " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw std::runtime_error(path + ": no data rows");
    }
    DataTable t;
    const Index n = static_cast<Index>(rows.size());
    t.response.resize(n);
    t.design.resize(n, static_cast<Index>(width - 1));
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        t.response(i) = r[0];
        for (std::size_t j = 1; j < width; ++j) {
            t.design(i, static_cast<Index>(j - 1)) = r[j];
        }
    }
    return t;
}

Eigen::VectorXd read_vector_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream tokens(text);
    std::vector<double> values;
    std::string tok;
    while (tokens >> tok) {
        values.push_back(parse_double(tok, path));
    }
    if (values.empty()) {
        throw std::runtime_error(path + ": no values");
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Anchored weighted-L1 regression: single fits and simulation studies", "atlasso"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    FitArgs fa;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit one problem from a CSV file (response first, then features)");
    fit_cmd->add_option("--data", fa.data, "CSV data file")->required();
    fit_cmd->add_flag("--header", fa.header, "Skip the first line of the data file");
    fit_cmd->add_option("--method", fa.method, "lasso | adaptive | transfer | adaptive-transfer")
        ->capture_default_str();
    fit_cmd->add_option("--lambda", fa.lambda, "Sparsity strength lambda");
    fit_cmd->add_option("--eta", fa.eta, "Anchor strength eta (transfer methods)");
    fit_cmd->add_option("--alpha", fa.alpha, "lambda / (lambda + eta), used with --kappa");
    fit_cmd->add_option("--kappa", fa.kappa, "Total strength lambda + eta, or 'auto' for the fully anchored value");
    fit_cmd->add_option("--gamma", fa.gamma, "Adaptive Lasso exponent")->capture_default_str();
    fit_cmd->add_option("--gamma1", fa.gamma1, "Adaptive transfer exponent on v")->capture_default_str();
    fit_cmd->add_option("--gamma2", fa.gamma2, "Adaptive transfer exponent on w")->capture_default_str();
    fit_cmd->add_option("--initial", fa.initial, "File with the initial estimator (p values)");
    fit_cmd->add_option("--clip", fa.clip, "Magnitude floor for adaptive weights")->capture_default_str();
    fit_cmd->add_option("--out", fa.out, "Write coefficients to this CSV file");
    fit_cmd->add_option("--max-sweeps", fa.max_sweeps, "Coordinate descent sweep cap")->capture_default_str();
    fit_cmd->add_option("--tolerance", fa.tolerance, "Relative coordinate change tolerance")->capture_default_str();

    StudyArgs sa;
    CLI::App* study_cmd = app.add_subcommand("study", "Run a simulation study and write CSV plus manifest");
    study_cmd
        ->add_option("name", sa.name,
                     "convergence | phase-diagram | comparison | inconsistent-source | contours | priors")
        ->required();
    study_cmd->add_option("--config", sa.config, "key = value config file (a previous manifest works)");
    study_cmd->add_option("--out", sa.out, "Output directory")->capture_default_str();
    study_cmd->add_option("--seed", sa.seed, "Experiment seed");
    study_cmd->add_option("--replicates", sa.replicates, "Replicates per cell");
    study_cmd->add_option("--jobs", sa.jobs, "Worker threads (default: ATL_JOBS or 1)");
    study_cmd->add_option("--method", sa.methods, "Restrict to these methods")->delimiter(',');
    study_cmd->add_option("--set", sa.sets, "Override a config key (key=value), repeatable");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*fit_cmd) {
            return cmd_fit(fa, *fit_cmd, out, err);
        }
        return cmd_study(sa, *study_cmd, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        err << (*fit_cmd ? fit_cmd->help() : study_cmd->help());
        return 1;
    } catch (const InternalError& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace atl::cli
