#include "atl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "atl/error.hpp"

namespace atl {
namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) {
            out += ",";
        }
        out += s;
    }
    return out;
}

std::string join_doubles(const std::vector<double>& values) {
    std::vector<std::string> items;
    for (double v : values) {
        items.push_back(format_double(v));
    }
    return join(items);
}

std::string join_indices(const std::vector<Index>& values) {
    std::vector<std::string> items;
    for (Index v : values) {
        items.push_back(std::to_string(v));
    }
    return join(items);
}

std::vector<double> delta_axis() {
    std::vector<double> out;
    for (int i = -8; i <= 8; ++i) {
        out.push_back(0.25 * i);
    }
    return out;
}

std::vector<Index> to_indices(const std::vector<double>& values, const std::string& what) {
    std::vector<Index> out;
    for (double v : values) {
        if (v != std::floor(v) || v < 1) {
            throw ParameterError(what + " entries must be positive integers");
        }
        out.push_back(static_cast<Index>(v));
    }
    return out;
}

std::string study_prefix(Study study) {
    return "study." + to_string(study) + ".";
}

std::vector<std::string> study_keys(Study study) {
    switch (study) {
    case Study::convergence:
        return {"n", "m", "slope_min_n", "methods", "clip_floor"};
    case Study::phase_diagram:
        return {"n", "m", "delta_lambda", "delta_eta", "methods", "gamma1", "gamma2", "clip_floor"};
    case Study::comparison:
        return {"sigma", "p", "n", "m", "initial", "folds", "grid_size", "grid_ratio", "test_size", "methods",
                "clip_floor"};
    case Study::inconsistent_source:
        return {"sigma", "p",         "n",         "m",       "initial",   "folds",
                "grid_size", "grid_ratio", "test_size", "methods", "clip_floor", "cases"};
    case Study::contours:
        return {"beta_tilde", "lambda", "eta", "gamma1", "gamma2", "extent", "resolution", "methods", "clip_floor"};
    case Study::priors:
        return {"beta_tilde", "lambda", "eta", "gamma1", "gamma2", "extent", "resolution", "methods", "clip_floor"};
    }
    return {};
}

char parse_case(const std::string& text) {
    if (text == "none") return '0';
    if (text == "A" || text == "a") return 'A';
    if (text == "B" || text == "b") return 'B';
    throw ParameterError("unknown source case '" + text + "' (expected none, A, B)");
}

std::string case_text(char c) {
    return c == '0' ? "none" : std::string(1, c);
}

bool strictly_increasing(const std::vector<Index>& v) {
    return std::adjacent_find(v.begin(), v.end(), [](Index a, Index b) { return a >= b; }) == v.end();
}

} // namespace

// ---------------------------------------------------------------------------
// names

std::string to_string(Study study) {
    switch (study) {
    case Study::convergence: return "convergence";
    case Study::phase_diagram: return "phase_diagram";
    case Study::comparison: return "comparison";
    case Study::inconsistent_source: return "inconsistent_source";
    case Study::contours: return "contours";
    case Study::priors: return "priors";
    }
    return "unknown";
}

const std::vector<Study>& all_studies() {
    static const std::vector<Study> studies = {Study::convergence, Study::phase_diagram, Study::comparison,
                                               Study::inconsistent_source, Study::contours, Study::priors};
    return studies;
}

Study parse_study(const std::string& name) {
    std::string canonical = name;
    std::replace(canonical.begin(), canonical.end(), '-', '_');
    for (Study s : all_studies()) {
        if (to_string(s) == canonical) {
            return s;
        }
    }
    throw ParameterError("unknown study '" + name +
                         "' (expected convergence, phase-diagram, comparison, inconsistent-source, contours, priors)");
}

Index MRule::resolve(Index n) const {
    switch (kind) {
    case Kind::square: return n * n;
    case Kind::fixed: return fixed_m;
    case Kind::equal: return n;
    }
    return n;
}

std::string MRule::to_string() const {
    switch (kind) {
    case Kind::square: return "square";
    case Kind::fixed: return std::to_string(fixed_m);
    case Kind::equal: return "equal";
    }
    return "square";
}

MRule MRule::parse(const std::string& text) {
    MRule rule;
    if (text == "square") {
        rule.kind = Kind::square;
    } else if (text == "equal") {
        rule.kind = Kind::equal;
    } else {
        rule.kind = Kind::fixed;
        rule.fixed_m = static_cast<Index>(parse_int(text, "m"));
        if (rule.fixed_m < 1) {
            throw ParameterError("fixed source size m must be positive");
        }
    }
    return rule;
}

// ---------------------------------------------------------------------------
// schedules

std::vector<ScheduledMethod> default_convergence_schedules() {
    using F = Family;
    return {
        {F::lasso, "i", 0.25, 0.0, 0.0, 0.0},
        {F::lasso, "ii", 0.75, 0.0, 0.0, 0.0},
        {F::adaptive_lasso, "i", -1.0, 0.0, 1.0, 0.0},
        {F::adaptive_lasso, "ii", 0.25, 0.0, 1.0, 0.0},
        {F::adaptive_lasso, "iii", 0.75, 0.0, 1.0, 0.0},
        {F::transfer_lasso, "i", 0.5, 0.75, 0.0, 0.0},
        {F::transfer_lasso, "ii", 0.25, 0.25, 0.0, 0.0},
        {F::transfer_lasso, "iii", 0.75, 0.5, 0.0, 0.0},
        {F::adaptive_transfer_lasso, "i", -0.5, 2.0, 1.0, 1.0},
        {F::adaptive_transfer_lasso, "ii", 0.5, 1.5, 1.0, 1.0},
        {F::adaptive_transfer_lasso, "iii", -1.0, 0.25, 1.0, 1.0},
        {F::adaptive_transfer_lasso, "iv", -1.0, 1.0, 1.0, 1.0},
        {F::adaptive_transfer_lasso, "v", 0.0, 0.25, 1.0, 1.0},
        {F::adaptive_transfer_lasso, "vi", 0.75, 0.5, 1.0, 1.0},
    };
}

PenaltySpec scheduled_penalty(const ScheduledMethod& method, const Eigen::VectorXd& beta_tilde, double clip_floor,
                              double n, Index p) {
    const double lambda = schedule_value(n, method.delta_lambda);
    const double eta = schedule_value(n, method.delta_eta);
    return make_penalty(method.family, method.gamma1, method.gamma2, lambda, eta, beta_tilde, clip_floor, p);
}

// ---------------------------------------------------------------------------
// configuration

void ExperimentConfig::validate() const {
    truth.validate();
    if (replicates < 1) {
        throw ParameterError("replicates must be at least 1");
    }
    if (jobs < 1) {
        throw ParameterError("jobs must be at least 1");
    }
    if (!(clip_floor > 0.0)) {
        throw ParameterError("clip_floor must be positive");
    }
    if (methods.empty()) {
        throw ParameterError("at least one method is required");
    }
    switch (study) {
    case Study::convergence:
        if (n_grid.size() < 2 || !strictly_increasing(n_grid)) {
            throw ParameterError("n grid must hold at least two strictly increasing sizes");
        }
        if (std::count_if(n_grid.begin(), n_grid.end(), [&](Index n) { return n >= slope_min_n; }) < 2) {
            throw ParameterError("slope needs at least two sizes with n >= slope_min_n");
        }
        for (Index n : n_grid) {
            if (m_rule.resolve(n) < truth.p()) {
                throw ParameterError("OLS initial estimator needs m >= p (n = " + std::to_string(n) + ")");
            }
        }
        break;
    case Study::phase_diagram:
        if (n_grid.size() != 2 || !strictly_increasing(n_grid)) {
            throw ParameterError("phase diagram needs exactly two increasing sizes");
        }
        if (delta_lambda.empty() || delta_eta.empty()) {
            throw ParameterError("phase diagram needs nonempty delta axes");
        }
        for (Family f : methods) {
            if (f != Family::transfer_lasso && f != Family::adaptive_transfer_lasso) {
                throw ParameterError("phase diagram methods are transfer_lasso and adaptive_transfer_lasso");
            }
        }
        for (Index n : n_grid) {
            if (m_rule.resolve(n) < truth.p()) {
                throw ParameterError("OLS initial estimator needs m >= p");
            }
        }
        break;
    case Study::comparison:
    case Study::inconsistent_source:
        if (sigmas.empty() || dims.empty() || n_grid.empty()) {
            throw ParameterError("comparison needs nonempty sigma, p and n lists");
        }
        if (!strictly_increasing(n_grid)) {
            throw ParameterError("n grid must be strictly increasing");
        }
        for (double s : sigmas) {
            if (!(s >= 0.0)) {
                throw ParameterError("sigma must be nonnegative");
            }
        }
        for (Index p : dims) {
            for (Index j = p; j < truth.p(); ++j) {
                if (truth.beta_star(j) != 0.0) {
                    throw ParameterError("p = " + std::to_string(p) + " truncates a nonzero true coefficient");
                }
            }
        }
        if (folds < 2 || n_grid.front() < folds) {
            throw ParameterError("cross-validation needs 2 <= folds <= smallest n");
        }
        if (grid_size < 2 || !(grid_ratio > 0.0 && grid_ratio < 1.0)) {
            throw ParameterError("grid_size >= 2 and grid_ratio in (0, 1) required");
        }
        if (test_size < 1) {
            throw ParameterError("test_size must be positive");
        }
        if (study == Study::inconsistent_source && cases.empty()) {
            throw ParameterError("at least one source case is required");
        }
        break;
    case Study::contours:
        if (contour_anchor.size() != 2) {
            throw ParameterError("contour anchor must have two entries");
        }
        [[fallthrough]];
    case Study::priors:
        if (!(extent_lo < extent_hi) || resolution < 2) {
            throw ParameterError("extent must be increasing and resolution at least 2");
        }
        if (study == Study::priors && prior_anchors.empty()) {
            throw ParameterError("priors need at least one anchor value");
        }
        break;
    }
}

ExperimentConfig default_config(Study study) {
    ExperimentConfig c;
    c.study = study;
    c.jobs = default_jobs();
    c.methods = {Family::lasso, Family::adaptive_lasso, Family::transfer_lasso, Family::adaptive_transfer_lasso};
    switch (study) {
    case Study::convergence:
        c.n_grid = {20, 50, 100, 200, 500, 1000, 2000, 5000};
        c.m_rule.kind = MRule::Kind::square;
        c.schedules = default_convergence_schedules();
        c.clip_floor = 1e-12;
        break;
    case Study::phase_diagram:
        c.n_grid = {1000, 5000};
        c.m_rule.kind = MRule::Kind::square;
        c.delta_lambda = delta_axis();
        c.delta_eta = delta_axis();
        c.methods = {Family::transfer_lasso, Family::adaptive_transfer_lasso};
        c.clip_floor = 1e-12;
        break;
    case Study::comparison:
        c.sigmas = {1, 3, 6, 10};
        c.dims = {10, 20, 50, 100};
        c.n_grid = {10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000};
        c.m_rule = {MRule::Kind::fixed, 10000};
        break;
    case Study::inconsistent_source:
        c.sigmas = {1, 3, 6, 10};
        c.dims = {10, 20, 50, 100};
        c.n_grid = {10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000};
        c.m_rule = {MRule::Kind::fixed, 10000};
        c.cases = {'0', 'A', 'B'};
        break;
    case Study::contours:
        c.contour_anchor = Eigen::Vector2d(0.5, 2.0);
        c.extent_lo = -1.0;
        c.extent_hi = 3.0;
        c.resolution = 81;
        break;
    case Study::priors:
        c.prior_anchors = {0.5, 2.0};
        c.extent_lo = -3.0;
        c.extent_hi = 4.0;
        c.resolution = 141;
        break;
    }
    return c;
}

std::vector<std::string> valid_config_keys(Study study) {
    std::vector<std::string> keys = {"seed", "replicates", "truth.p", "truth.beta", "truth.sigma", "truth.rho"};
    for (const auto& k : study_keys(study)) {
        keys.push_back(study_prefix(study) + k);
    }
    return keys;
}

ExperimentConfig experiment_config_from(Study study, const KeyValueConfig& kv) {
    const std::vector<std::string> valid = valid_config_keys(study);
    const std::vector<std::string> unknown = kv.unknown_keys(valid);
    if (!unknown.empty()) {
        throw ParameterError("unknown config key(s) " + join(unknown) + "; valid keys: " + join(valid));
    }
    ExperimentConfig c = default_config(study);
    const std::string pre = study_prefix(study);
    c.seed = kv.get_uint64("seed", c.seed);
    c.replicates = static_cast<int>(kv.get_int("replicates", c.replicates));
    if (kv.contains("truth.p") || kv.contains("truth.beta") || kv.contains("truth.sigma") ||
        kv.contains("truth.rho")) {
        c.truth = true_model_from_config(kv);
    }
    if (auto m = kv.get(pre + "methods")) {
        c.methods.clear();
        for (const auto& name : split_list(*m)) {
            c.methods.push_back(parse_family(name));
        }
    }
    c.clip_floor = kv.get_double(pre + "clip_floor", c.clip_floor);
    if (auto v = kv.get(pre + "n")) {
        c.n_grid = to_indices(kv.get_doubles(pre + "n", {}), "n");
    }
    if (auto v = kv.get(pre + "m")) {
        c.m_rule = MRule::parse(*v);
    }
    switch (study) {
    case Study::convergence: {
        c.slope_min_n = static_cast<Index>(kv.get_int(pre + "slope_min_n", c.slope_min_n));
        std::vector<ScheduledMethod> kept;
        for (const auto& s : c.schedules) {
            if (std::find(c.methods.begin(), c.methods.end(), s.family) != c.methods.end()) {
                kept.push_back(s);
            }
        }
        c.schedules = kept;
        break;
    }
    case Study::phase_diagram:
        c.delta_lambda = kv.get_doubles(pre + "delta_lambda", c.delta_lambda);
        c.delta_eta = kv.get_doubles(pre + "delta_eta", c.delta_eta);
        c.gamma1 = kv.get_double(pre + "gamma1", c.gamma1);
        c.gamma2 = kv.get_double(pre + "gamma2", c.gamma2);
        break;
    case Study::comparison:
    case Study::inconsistent_source:
        c.sigmas = kv.get_doubles(pre + "sigma", c.sigmas);
        if (kv.contains(pre + "p")) {
            c.dims = to_indices(kv.get_doubles(pre + "p", {}), "p");
        }
        c.initial = parse_initial_method(kv.get_string(pre + "initial", to_string(c.initial)));
        c.folds = static_cast<int>(kv.get_int(pre + "folds", c.folds));
        c.grid_size = static_cast<int>(kv.get_int(pre + "grid_size", c.grid_size));
        c.grid_ratio = kv.get_double(pre + "grid_ratio", c.grid_ratio);
        c.test_size = static_cast<Index>(kv.get_int(pre + "test_size", c.test_size));
        if (auto v = kv.get(pre + "cases")) {
            c.cases.clear();
            for (const auto& name : split_list(*v)) {
                c.cases.push_back(parse_case(name));
            }
        }
        break;
    case Study::contours:
    case Study::priors: {
        if (kv.contains(pre + "beta_tilde")) {
            const std::vector<double> bt = kv.get_doubles(pre + "beta_tilde", {});
            if (study == Study::contours) {
                c.contour_anchor = Eigen::Map<const Eigen::VectorXd>(bt.data(), static_cast<Index>(bt.size()));
            } else {
                c.prior_anchors = bt;
            }
        }
        c.lambda = kv.get_double(pre + "lambda", c.lambda);
        c.eta = kv.get_double(pre + "eta", c.eta);
        c.gamma1 = kv.get_double(pre + "gamma1", c.gamma1);
        c.gamma2 = kv.get_double(pre + "gamma2", c.gamma2);
        if (kv.contains(pre + "extent")) {
            const std::vector<double> ext = kv.get_doubles(pre + "extent", {});
            if (ext.size() != 2) {
                throw ParameterError(pre + "extent needs two values (lo, hi)");
            }
            c.extent_lo = ext[0];
            c.extent_hi = ext[1];
        }
        c.resolution = static_cast<int>(kv.get_int(pre + "resolution", c.resolution));
        break;
    }
    }
    c.validate();
    return c;
}

KeyValueConfig to_key_value(const ExperimentConfig& c) {
    KeyValueConfig kv;
    const std::string pre = study_prefix(c.study);
    kv.set("seed", std::to_string(c.seed));
    kv.set("replicates", std::to_string(c.replicates));
    kv.set("truth.p", std::to_string(c.truth.p()));
    std::vector<double> beta(c.truth.beta_star.data(), c.truth.beta_star.data() + c.truth.p());
    kv.set("truth.beta", join_doubles(beta));
    kv.set("truth.sigma", format_double(c.truth.sigma));
    kv.set("truth.rho", format_double(c.truth.covariance_rho));
    std::vector<std::string> methods;
    for (Family f : c.methods) {
        methods.push_back(to_string(f));
    }
    kv.set(pre + "methods", join(methods));
    kv.set(pre + "clip_floor", format_double(c.clip_floor));
    switch (c.study) {
    case Study::convergence:
        kv.set(pre + "n", join_indices(c.n_grid));
        kv.set(pre + "m", c.m_rule.to_string());
        kv.set(pre + "slope_min_n", std::to_string(c.slope_min_n));
        break;
    case Study::phase_diagram:
        kv.set(pre + "n", join_indices(c.n_grid));
        kv.set(pre + "m", c.m_rule.to_string());
        kv.set(pre + "delta_lambda", join_doubles(c.delta_lambda));
        kv.set(pre + "delta_eta", join_doubles(c.delta_eta));
        kv.set(pre + "gamma1", format_double(c.gamma1));
        kv.set(pre + "gamma2", format_double(c.gamma2));
        break;
    case Study::comparison:
    case Study::inconsistent_source: {
        kv.set(pre + "sigma", join_doubles(c.sigmas));
        kv.set(pre + "p", join_indices(c.dims));
        kv.set(pre + "n", join_indices(c.n_grid));
        kv.set(pre + "m", c.m_rule.to_string());
        kv.set(pre + "initial", to_string(c.initial));
        kv.set(pre + "folds", std::to_string(c.folds));
        kv.set(pre + "grid_size", std::to_string(c.grid_size));
        kv.set(pre + "grid_ratio", format_double(c.grid_ratio));
        kv.set(pre + "test_size", std::to_string(c.test_size));
        if (c.study == Study::inconsistent_source) {
            std::vector<std::string> cases;
            for (char k : c.cases) {
                cases.push_back(case_text(k));
            }
            kv.set(pre + "cases", join(cases));
        }
        break;
    }
    case Study::contours:
    case Study::priors: {
        if (c.study == Study::contours) {
            std::vector<double> bt(c.contour_anchor.data(), c.contour_anchor.data() + c.contour_anchor.size());
            kv.set(pre + "beta_tilde", join_doubles(bt));
        } else {
            kv.set(pre + "beta_tilde", join_doubles(c.prior_anchors));
        }
        kv.set(pre + "lambda", format_double(c.lambda));
        kv.set(pre + "eta", format_double(c.eta));
        kv.set(pre + "gamma1", format_double(c.gamma1));
        kv.set(pre + "gamma2", format_double(c.gamma2));
        kv.set(pre + "extent", join_doubles({c.extent_lo, c.extent_hi}));
        kv.set(pre + "resolution", std::to_string(c.resolution));
        break;
    }
    }
    return kv;
}

// ---------------------------------------------------------------------------
// results

std::string coordinate_text(double value) {
    return format_double(value);
}

void SweepResult::write_csv(std::ostream& out) const {
    out << "study";
    for (const auto& name : coordinate_names) {
        out << ',' << name;
    }
    out << ",method,metric,mean,stderr,replicates,excluded\n";
    for (const auto& row : rows) {
        out << study;
        for (const auto& c : row.coordinates) {
            out << ',' << c;
        }
        out << ',' << row.method << ',' << row.metric << ',' << format_double(row.mean) << ','
            << format_double(row.std_error) << ',' << row.replicates << ',' << row.excluded << '\n';
    }
}

std::string SweepResult::to_csv() const {
    std::ostringstream out;
    write_csv(out);
    return out.str();
}

const ResultRow* SweepResult::find(const std::string& method, const std::string& metric,
                                   const std::vector<std::pair<std::string, std::string>>& coords) const {
    std::vector<std::pair<std::size_t, std::string>> wanted;
    for (const auto& [name, value] : coords) {
        const auto it = std::find(coordinate_names.begin(), coordinate_names.end(), name);
        if (it == coordinate_names.end()) {
            return nullptr;
        }
        wanted.emplace_back(static_cast<std::size_t>(it - coordinate_names.begin()), value);
    }
    for (const auto& row : rows) {
        if (row.method != method || row.metric != metric) {
            continue;
        }
        bool match = true;
        for (const auto& [idx, value] : wanted) {
            if (row.coordinates[idx] != value) {
                match = false;
                break;
            }
        }
        if (match) {
            return &row;
        }
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// phase regions

std::string phase_region(Family family, double a, double b, double gamma1, double gamma2, double mu) {
    switch (family) {
    case Family::lasso:
        if (a <= 0.5) return "i";
        if (a < 1.0) return "ii";
        return "";
    case Family::adaptive_lasso: {
        const double lo = 0.5 - mu * gamma1 / 2.0;
        if (a <= lo) return "i";
        if (a <= 0.5) return "ii";
        if (a < 1.0) return "iii";
        return "";
    }
    case Family::transfer_lasso:
        if (b > 0.5 && a < b) return "i";
        if (a <= 0.5 && b <= 0.5) return "ii";
        if (a > 0.5 && a < 1.0 && b < a) return "iii";
        return "";
    case Family::adaptive_transfer_lasso: {
        const double lo = 0.5 - mu * gamma1 / 2.0;
        const double hi = 0.5 + mu * gamma2 / 2.0;
        const double spread = mu * (gamma1 + gamma2) / 2.0;
        if (b > hi && b > a + spread) return "i";
        if (a > lo && b > 0.5 && b > a && b < a + spread) return "ii";
        if (a <= lo && b <= 0.5) return "iii";
        if (a <= lo && b > 0.5 && b <= hi) return "iv";
        if (a > lo && a <= 0.5 && b <= 0.5) return "v";
        if (a > 0.5 && a < 1.0 && a > b) return "vi";
        return "";
    }
    }
    return "";
}

double expected_slope(Family family, const std::string& region, double a, double mu) {
    const bool source_rate = (family == Family::transfer_lasso && region == "i") ||
                             (family == Family::adaptive_transfer_lasso && (region == "i" || region == "ii"));
    if (source_rate) {
        return -mu / 2.0;
    }
    const bool slow = (family == Family::lasso && region == "ii") ||
                      (family == Family::adaptive_lasso && region == "iii") ||
                      (family == Family::transfer_lasso && region == "iii") ||
                      (family == Family::adaptive_transfer_lasso && region == "vi");
    if (slow) {
        return a - 1.0;
    }
    if (region.empty()) {
        throw ParameterError("no predicted slope outside the theoretical regions");
    }
    return -0.5;
}

bool interior_cell(Family family, double a, double b, double step, double gamma1, double gamma2, double mu) {
    const std::string region = phase_region(family, a, b, gamma1, gamma2, mu);
    if (region.empty()) {
        return false;
    }
    for (int da = -1; da <= 1; ++da) {
        for (int db = -1; db <= 1; ++db) {
            if (phase_region(family, a + da * step, b + db * step, gamma1, gamma2, mu) != region) {
                return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// execution

int default_jobs() {
    if (const char* env = std::getenv("ATL_JOBS")) {
        try {
            const long long v = parse_int(env, "ATL_JOBS");
            if (v >= 1) {
                return static_cast<int>(v);
            }
        } catch (const ParameterError&) {
        }
    }
    return 1;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

SweepResult run_study(const ExperimentConfig& config) {
    switch (config.study) {
    case Study::convergence: return run_convergence(config);
    case Study::phase_diagram: return run_phase_diagram(config);
    case Study::comparison: return run_comparison(config);
    case Study::inconsistent_source: return run_inconsistent_source(config);
    case Study::contours: return run_contours(config);
    case Study::priors: return run_priors(config);
    }
    throw InternalError("unhandled study");
}

} // namespace atl
