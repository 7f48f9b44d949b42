/**
 * Run configuration, scenario orchestration and report output.
 *
 * Configurations are INI files (see scenarios/README.md for the grammar).
 * Exit codes: 0 every enabled check passes, 1 a check failed, 2 usage or
 * configuration error, 3 runtime error.
 */
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rbe/collision.hpp"
#include "rbe/diagnostics.hpp"
#include "rbe/solver.hpp"

namespace rbe {

enum ExitCode : int
{
    exit_pass = 0,
    exit_check_failure = 1,
    exit_usage = 2,
    exit_runtime = 3
};

enum class ScenarioKind
{
    solve,
    kernel_check
};

struct ConfigProblem
{
    std::string key;
    std::string reason;
};

//! Every problem found in a configuration.
struct ConfigError : Error
{
    explicit ConfigError(std::vector<ConfigProblem> list);
    std::vector<ConfigProblem> problems;
};

struct DiagnosticsToggles
{
    bool conservation{true};
    double conservation_tol{1e-3};
    bool h_theorem{false};
    //! D below this value is not resolved for the identity check.
    double resolved_floor{0.0};
    bool inertia{false};
    double inertia_tol{0.02};
    bool gronwall{false};
    bool entropy_bound{true};
    bool apriori{true};
    bool loss_tail{false};
    double loss_tail_radius{1.0};
    std::vector<double> loss_tail_k;
    //! Write a checkpoint every this many steps (0: final state only).
    int checkpoint_every{0};
};

struct KernelCheckConfig
{
    double radius{1.0};
    std::vector<double> probes{5, 10, 20, 40};
    BallQuadrature ball{};
    double jiang_ratio_max{0.2};
    double de_ratio_min{0.8};
    double de_ratio_max{1.25};
    std::vector<int> truncation_n;
    double truncation_k{2.0};
};

struct RunConfig
{
    std::string name;
    std::string description;
    ScenarioKind kind{ScenarioKind::solve};

    std::string cross_section_spec;
    CrossSectionModel model = CrossSectionModel::constant(0.0);
    std::string table_path;
    TruncationParams trunc{};

    InitialSpec initial{};
    bool closed_form{true};
    double p_max{3.0};
    int p_axis{7};
    SpatialMode space_mode{SpatialMode::homogeneous};
    double x_max{4.0};
    int x_axis{8};
    int n_theta{8};
    int n_psi{8};

    SolverConfig solver{};
    DiagnosticsToggles diagnostics{};
    KernelCheckConfig kernel_check{};

    std::filesystem::path output_dir{"out"};
    unsigned long seed{1};
    int threads{0};
};

/*!
 * Parse INI text. Relative table paths resolve against base_dir. Throws
 * ConfigError listing every unknown key, missing key and bad value.
 */
RunConfig parse_config(std::string const& text, std::filesystem::path const& base_dir = {});
RunConfig load_config(std::filesystem::path const& path);

//! Truncated initial data f0n on the configured grids.
DistributionField initial_field(RunConfig const& cfg);
CollisionSettings collision_settings(RunConfig const& cfg);

struct ScenarioInfo
{
    std::string name;
    std::string description;
    std::filesystem::path path;
};

//! Directory of shipped scenarios: $RBE_SCENARIO_DIR or the source tree.
std::filesystem::path scenario_directory();
std::vector<ScenarioInfo> list_scenarios(std::filesystem::path const& dir = scenario_directory());
//! A path to a file, or the name of a shipped scenario; NotFound otherwise.
std::filesystem::path resolve_scenario(std::string const& name_or_path,
                                       std::filesystem::path const& dir = scenario_directory());

//! Names accepted by describe().
std::vector<std::string> check_names();
//! Statement and anchor of a diagnostic; NotFound for an unknown name.
std::string describe(std::string const& check);

struct ScenarioOutcome
{
    std::vector<VerificationReport> reports;
    std::vector<std::filesystem::path> files;
    int exit_code{exit_pass};
};

/*!
 * Solve (or evaluate the kernel conditions), write outputs under
 * cfg.output_dir, print the report table to log, and return the outcome.
 * Solver and I/O errors propagate as exceptions; NonConvergence is thrown
 * after the trace CSV is written.
 */
ScenarioOutcome run_scenario(RunConfig const& cfg, std::ostream& log);

//! Entry point of the rbe executable; returns the process exit code.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rbe
