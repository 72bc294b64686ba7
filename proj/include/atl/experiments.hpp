#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "atl/config.hpp"
#include "atl/datagen.hpp"
#include "atl/initial.hpp"
#include "atl/metrics.hpp"
#include "atl/selection.hpp"

namespace atl {

enum class Study { convergence, phase_diagram, comparison, inconsistent_source, contours, priors };

std::string to_string(Study study);
/// Accepts underscores or hyphens (phase-diagram, phase_diagram).
Study parse_study(const std::string& name);
const std::vector<Study>& all_studies();

/// How the source size m follows the target size n.
struct MRule {
    enum class Kind { square, fixed, equal };
    Kind kind = Kind::square;
    Index fixed_m = 0;

    Index resolve(Index n) const;
    std::string to_string() const;
    /// "square", "equal" or an integer.
    static MRule parse(const std::string& text);
};

/// A method run at hyperparameters lambda = n^delta_lambda, eta = n^delta_eta.
struct ScheduledMethod {
    Family family = Family::lasso;
    std::string region;
    double delta_lambda = 0.0;
    double delta_eta = 0.0; ///< ignored for the families without an anchor term
    double gamma1 = 0.0;
    double gamma2 = 0.0;
};

/// Schedules of the convergence study, one per theoretical region.
std::vector<ScheduledMethod> default_convergence_schedules();

/// lambda v and eta w penalty for explicit (lambda, eta).
PenaltySpec scheduled_penalty(const ScheduledMethod& method, const Eigen::VectorXd& beta_tilde, double clip_floor,
                              double n, Index p);

struct ExperimentConfig {
    Study study = Study::convergence;
    TrueModel truth = default_true_model();
    int replicates = 10;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::vector<Family> methods;
    double clip_floor = 1e-3;

    // convergence
    std::vector<Index> n_grid;
    MRule m_rule;
    std::vector<ScheduledMethod> schedules;
    Index slope_min_n = 500;

    // phase diagram
    std::vector<double> delta_lambda;
    std::vector<double> delta_eta;
    double gamma1 = 1.0;
    double gamma2 = 1.0;

    // comparison / inconsistent source
    std::vector<double> sigmas;
    std::vector<Index> dims;
    InitialMethod initial = InitialMethod::lasso;
    int folds = 10;
    int grid_size = 100;
    double grid_ratio = 1e-6;
    Index test_size = 1000;
    std::vector<char> cases; ///< '0' (consistent source), 'A', 'B'

    // contours / priors; gamma1 and gamma2 above give the adaptive weights
    double lambda = 1.0;
    double eta = 1.0;
    Eigen::VectorXd contour_anchor;
    std::vector<double> prior_anchors;
    double extent_lo = -1.0;
    double extent_hi = 3.0;
    int resolution = 81;

    /// Throws ParameterError on inconsistent settings.
    void validate() const;
};

/// Full-size defaults of each study.
ExperimentConfig default_config(Study study);

/// Config keys accepted for `study` (global keys included).
std::vector<std::string> valid_config_keys(Study study);

/// Applies the keys of `kv` on top of default_config(study). Unknown keys throw
/// ParameterError listing the valid ones.
ExperimentConfig experiment_config_from(Study study, const KeyValueConfig& kv);

/// Fully resolved key = value form; feeding it back reproduces the config.
KeyValueConfig to_key_value(const ExperimentConfig& config);

struct ResultRow {
    std::vector<std::string> coordinates; ///< parallel to SweepResult::coordinate_names
    std::string method;
    std::string metric;
    double mean = 0.0;
    double std_error = 0.0;
    int replicates = 0;
    int excluded = 0;
};

/// Long-format table: study, <coordinates...>, method, metric, mean, stderr, replicates, excluded.
struct SweepResult {
    std::string study;
    std::vector<std::string> coordinate_names;
    std::vector<ResultRow> rows;

    void write_csv(std::ostream& out) const;
    std::string to_csv() const;
    /// First row matching method, metric and every given (name, value) coordinate.
    const ResultRow* find(const std::string& method, const std::string& metric,
                          const std::vector<std::pair<std::string, std::string>>& coords) const;
};

/// Text used for numeric coordinates in result rows.
std::string coordinate_text(double value);

// Phase regions for lambda = n^a, eta = n^b with source size m = n^mu.

/// Region label ("i", "ii", ...) or "" on boundaries and outside all regions.
std::string phase_region(Family family, double a, double b, double gamma1 = 1.0, double gamma2 = 1.0,
                         double mu = 2.0);
/// log-log slope of the l2 error predicted for a region (m = n^mu).
double expected_slope(Family family, const std::string& region, double a, double mu = 2.0);
/// True when (a, b) and its neighbours at distance `step` in both axes lie in the same region.
bool interior_cell(Family family, double a, double b, double step, double gamma1 = 1.0, double gamma2 = 1.0,
                   double mu = 2.0);

/// Runs `body(i)` for i in [0, count) on up to `jobs` threads. Exceptions propagate.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

/// Worker count from the ATL_JOBS environment variable, or 1.
int default_jobs();

SweepResult run_convergence(const ExperimentConfig& config);
SweepResult run_phase_diagram(const ExperimentConfig& config);
SweepResult run_comparison(const ExperimentConfig& config);
SweepResult run_inconsistent_source(const ExperimentConfig& config);
SweepResult run_contours(const ExperimentConfig& config);
SweepResult run_priors(const ExperimentConfig& config);
SweepResult run_study(const ExperimentConfig& config);

} // namespace atl
