#include "rbe/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "rbe/parallel.hpp"

#ifndef RBE_SCENARIO_DIR
#    define RBE_SCENARIO_DIR "scenarios"
#endif

namespace rbe {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string join_problems(std::vector<ConfigProblem> const& list)
{
    std::string s = "invalid configuration:";
    for (auto const& p : list)
        s += "\n  " + p.key + ": " + p.reason;
    return s;
}

//---------------------------------------------------------------------------//
// CONFIG READING
//---------------------------------------------------------------------------//

std::map<std::string, std::set<std::string>> const& known_keys()
{
    static std::map<std::string, std::set<std::string>> const keys{
        {"scenario", {"name", "description", "kind"}},
        {"cross_section", {"family", "c0", "a", "b", "table"}},
        {"truncation", {"n"}},
        {"initial",
         {"kind", "beta", "amplitude", "drift", "width", "center", "x_half", "p_half", "p_center",
          "closed_form"}},
        {"lattice", {"p_max", "n_axis"}},
        {"space", {"mode", "x_max", "n_axis"}},
        {"quadrature", {"n_theta", "n_psi"}},
        {"solver", {"mode", "window", "dt", "tol", "max_iter", "with_entropy"}},
        {"diagnostics",
         {"conservation", "conservation_tol", "h_theorem", "resolved_floor", "inertia",
          "inertia_tol", "gronwall", "entropy_bound", "apriori", "loss_tail", "loss_tail_radius",
          "loss_tail_k", "checkpoint_every"}},
        {"kernel_check",
         {"radius", "probes", "n_radial", "n_polar", "n_azimuth", "jiang_ratio_max", "de_ratio_min",
          "de_ratio_max", "truncation_n", "truncation_k"}},
        {"output", {"dir"}},
        {"run", {"seed", "threads"}},
    };
    return keys;
}

class Reader
{
  public:
    explicit Reader(pt::ptree const& tree) : tree_(tree) {}

    std::vector<ConfigProblem>& problems() { return problems_; }
    void problem(std::string key, std::string reason)
    {
        problems_.push_back({std::move(key), std::move(reason)});
    }

    bool has(std::string const& key) const { return raw(key).has_value(); }

    std::optional<std::string> raw(std::string const& key) const
    {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (v)
            return trim(*v);
        return std::nullopt;
    }

    std::string text(std::string const& key, std::string fallback, bool required = false)
    {
        auto v = raw(key);
        if (!v)
        {
            if (required)
                problem(key, "missing required key");
            return fallback;
        }
        return *v;
    }

    double number(std::string const& key, double fallback, double lo, double hi, bool required = false)
    {
        auto v = raw(key);
        if (!v)
        {
            if (required)
                problem(key, "missing required key");
            return fallback;
        }
        double x;
        if (!parse_double(*v, x))
        {
            problem(key, "not a number: '" + *v + "'");
            return fallback;
        }
        if (!(x >= lo && x <= hi))
        {
            problem(key, "value " + *v + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
            return fallback;
        }
        return x;
    }

    long integer(std::string const& key, long fallback, long lo, long hi, bool required = false)
    {
        auto v = raw(key);
        if (!v)
        {
            if (required)
                problem(key, "missing required key");
            return fallback;
        }
        long x;
        if (!parse_long(*v, x))
        {
            problem(key, "not an integer: '" + *v + "'");
            return fallback;
        }
        if (x < lo || x > hi)
        {
            problem(key, "value " + *v + " outside [" + std::to_string(lo) + ", "
                             + std::to_string(hi) + "]");
            return fallback;
        }
        return x;
    }

    bool flag(std::string const& key, bool fallback)
    {
        auto v = raw(key);
        if (!v)
            return fallback;
        if (*v == "true" || *v == "yes" || *v == "1")
            return true;
        if (*v == "false" || *v == "no" || *v == "0")
            return false;
        problem(key, "expected true or false, got '" + *v + "'");
        return fallback;
    }

    std::vector<double> numbers(std::string const& key, std::vector<double> fallback)
    {
        auto v = raw(key);
        if (!v)
            return fallback;
        std::vector<double> out;
        std::istringstream in(*v);
        std::string tok;
        while (in >> tok)
        {
            double x;
            if (!parse_double(tok, x))
            {
                problem(key, "not a number: '" + tok + "'");
                return fallback;
            }
            out.push_back(x);
        }
        return out;
    }

    Vec3 vec(std::string const& key, Vec3 fallback)
    {
        auto v = numbers(key, {fallback.x, fallback.y, fallback.z});
        if (v.size() != 3)
        {
            problem(key, "expected three numbers");
            return fallback;
        }
        Vec3 out{v[0], v[1], v[2]};
        if (!is_finite(out))
            problem(key, "components must be finite");
        return out;
    }

    template<class E>
    E choice(std::string const& key, E fallback, std::vector<std::pair<char const*, E>> const& options)
    {
        auto v = raw(key);
        if (!v)
            return fallback;
        std::string names;
        for (auto const& [name, value] : options)
        {
            if (*v == name)
                return value;
            names += names.empty() ? name : std::string(", ") + name;
        }
        problem(key, "unknown value '" + *v + "' (expected one of " + names + ")");
        return fallback;
    }

  private:
    static std::string trim(std::string s)
    {
        auto not_space = [](unsigned char c) { return !std::isspace(c); };
        s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
        s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
        return s;
    }
    static bool parse_double(std::string const& s, double& x)
    {
        char* end = nullptr;
        x = std::strtod(s.c_str(), &end);
        return !s.empty() && end == s.c_str() + s.size() && std::isfinite(x);
    }
    static bool parse_long(std::string const& s, long& x)
    {
        char* end = nullptr;
        x = std::strtol(s.c_str(), &end, 10);
        return !s.empty() && end == s.c_str() + s.size();
    }
    static std::string fmt(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return buf;
    }

    pt::ptree const& tree_;
    std::vector<ConfigProblem> problems_;
};

void check_unknown(pt::ptree const& tree, Reader& r)
{
    auto const& keys = known_keys();
    for (auto const& [section, body] : tree)
    {
        auto it = keys.find(section);
        if (body.empty())
        {
            r.problem(section, "key outside any section");
            continue;
        }
        if (it == keys.end())
        {
            r.problem(section, "unknown section");
            continue;
        }
        for (auto const& [key, value] : body)
        {
            if (!it->second.count(key))
                r.problem(section + "." + key, "unknown key");
        }
    }
}

std::string describe_model(RunConfig const& c)
{
    char buf[160];
    switch (c.model.family())
    {
        case CrossSectionFamily::constant:
            std::snprintf(buf, sizeof buf, "constant c0=%g", c.model.c0());
            break;
        case CrossSectionFamily::power_law:
            std::snprintf(buf, sizeof buf, "power_law c0=%g a=%g b=%g", c.model.c0(),
                          c.model.exponent_g(), c.model.exponent_sin());
            break;
        case CrossSectionFamily::tabulated:
            return "tabulated " + c.table_path;
    }
    return buf;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigProblem> list)
    : Error(join_problems(list)), problems(std::move(list))
{
}

RunConfig parse_config(std::string const& text, fs::path const& base_dir)
{
    pt::ptree tree;
    try
    {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    }
    catch (pt::ini_parser_error const& e)
    {
        throw ConfigError({{"line " + std::to_string(e.line()), e.message()}});
    }

    Reader r(tree);
    check_unknown(tree, r);
    RunConfig c;
    double const big = 1e12;

    c.name = r.text("scenario.name", "", true);
    c.description = r.text("scenario.description", "");
    c.kind = r.choice("scenario.kind", ScenarioKind::solve,
                      {{"solve", ScenarioKind::solve}, {"kernel_check", ScenarioKind::kernel_check}});

    auto family = r.choice("cross_section.family", CrossSectionFamily::constant,
                           {{"constant", CrossSectionFamily::constant},
                            {"power_law", CrossSectionFamily::power_law},
                            {"tabulated", CrossSectionFamily::tabulated}});
    double c0 = r.number("cross_section.c0", 1.0, 0.0, big);
    double a = r.number("cross_section.a", 0.0, 0.0, 16.0);
    double b = r.number("cross_section.b", 0.0, 0.0, 16.0);
    switch (family)
    {
        case CrossSectionFamily::constant:
            c.model = CrossSectionModel::constant(c0);
            break;
        case CrossSectionFamily::power_law:
            c.model = CrossSectionModel::power_law(c0, a, b);
            break;
        case CrossSectionFamily::tabulated: {
            auto path = r.text("cross_section.table", "", true);
            if (!path.empty())
            {
                fs::path p = path;
                if (p.is_relative() && !base_dir.empty())
                    p = base_dir / p;
                try
                {
                    c.model = CrossSectionModel::tabulated(load_cross_section_table(p.string()));
                    c.table_path = p.string();
                }
                catch (Error const& e)
                {
                    r.problem("cross_section.table", e.what());
                }
            }
            break;
        }
    }
    if (family != CrossSectionFamily::tabulated && r.has("cross_section.table"))
        r.problem("cross_section.table", "only allowed with family = tabulated");

    c.trunc.n = static_cast<int>(r.integer("truncation.n", 1, 1, 1000000, c.kind == ScenarioKind::solve));

    c.initial.kind = r.choice("initial.kind", InitialKind::juttner,
                              {{"juttner", InitialKind::juttner},
                               {"double_juttner", InitialKind::double_juttner},
                               {"gaussian_x_juttner_p", InitialKind::gaussian_x_juttner_p},
                               {"indicator_box", InitialKind::indicator_box}});
    c.initial.beta = r.number("initial.beta", 1.0, 1e-6, 1e6);
    c.initial.amplitude = r.number("initial.amplitude", 1.0, 0.0, big);
    c.initial.drift = r.vec("initial.drift", {});
    c.initial.width = r.number("initial.width", 1.0, 1e-6, big);
    c.initial.center = r.vec("initial.center", {});
    c.initial.x_half = r.number("initial.x_half", 0.0, 0.0, big);
    c.initial.p_half = r.number("initial.p_half", 0.0, 0.0, big);
    c.initial.p_center = r.vec("initial.p_center", {});
    c.closed_form = r.flag("initial.closed_form", true);

    c.p_max = r.number("lattice.p_max", 3.0, 1e-3, 1e3);
    c.p_axis = static_cast<int>(r.integer("lattice.n_axis", 7, 2, 64));
    c.space_mode = r.choice("space.mode", SpatialMode::homogeneous,
                            {{"homogeneous", SpatialMode::homogeneous},
                             {"periodic", SpatialMode::periodic}});
    c.x_max = r.number("space.x_max", 4.0, 1e-3, 1e6);
    c.x_axis = static_cast<int>(r.integer("space.n_axis", 8, 1, 128));
    c.n_theta = static_cast<int>(r.integer("quadrature.n_theta", 8, 1, 512));
    c.n_psi = static_cast<int>(r.integer("quadrature.n_psi", 8, 2, 512));
    if (c.n_psi % 2 != 0)
        r.problem("quadrature.n_psi", "must be even");

    c.solver.mode = r.choice("solver.mode", SolverMode::march,
                             {{"march", SolverMode::march}, {"picard_window", SolverMode::picard_window}});
    c.solver.window = r.number("solver.window", 1.0, 1e-12, 1e6);
    c.solver.dt = r.number("solver.dt", 0.1, 1e-12, 1e6);
    c.solver.tol = r.number("solver.tol", 1e-8, 1e-300, big);
    c.solver.max_iter = static_cast<int>(r.integer("solver.max_iter", 30, 1, 100000));
    c.solver.with_entropy = r.flag("solver.with_entropy", false);
    if (c.kind == ScenarioKind::solve)
    {
        try
        {
            c.solver.validate();
        }
        catch (InvalidArgument const& e)
        {
            r.problem("solver.dt", e.what());
        }
    }

    auto& d = c.diagnostics;
    d.conservation = r.flag("diagnostics.conservation", true);
    d.conservation_tol = r.number("diagnostics.conservation_tol", 1e-3, 0.0, big);
    d.h_theorem = r.flag("diagnostics.h_theorem", false);
    d.resolved_floor = r.number("diagnostics.resolved_floor", 0.0, 0.0, big);
    d.inertia = r.flag("diagnostics.inertia", false);
    d.inertia_tol = r.number("diagnostics.inertia_tol", 0.02, 0.0, big);
    d.gronwall = r.flag("diagnostics.gronwall", false);
    d.entropy_bound = r.flag("diagnostics.entropy_bound", true);
    d.apriori = r.flag("diagnostics.apriori", true);
    d.loss_tail = r.flag("diagnostics.loss_tail", false);
    d.loss_tail_radius = r.number("diagnostics.loss_tail_radius", 1.0, 0.0, big);
    d.loss_tail_k = r.numbers("diagnostics.loss_tail_k", {});
    d.checkpoint_every = static_cast<int>(r.integer("diagnostics.checkpoint_every", 0, 0, 1000000));
    if (d.h_theorem && c.solver.mode == SolverMode::march && !c.solver.with_entropy)
        r.problem("diagnostics.h_theorem", "needs solver.with_entropy = true");
    if ((d.inertia || d.gronwall) && c.space_mode == SpatialMode::homogeneous)
        r.problem(d.inertia ? "diagnostics.inertia" : "diagnostics.gronwall",
                  "needs space.mode = periodic");
    if (d.loss_tail)
    {
        if (d.loss_tail_k.size() < 2)
            r.problem("diagnostics.loss_tail_k", "needs at least two values");
        else if (d.loss_tail_k.back() > c.p_max)
            r.problem("diagnostics.loss_tail_k", "values must not exceed lattice.p_max");
    }

    auto& k = c.kernel_check;
    k.radius = r.number("kernel_check.radius", 1.0, 1e-6, 1e6);
    k.probes = r.numbers("kernel_check.probes", k.probes);
    if (k.probes.empty() || std::any_of(k.probes.begin(), k.probes.end(), [](double p) { return !(p > 0.0); }))
        r.problem("kernel_check.probes", "needs positive values");
    k.ball.n_radial = static_cast<int>(r.integer("kernel_check.n_radial", 64, 2, 4096));
    k.ball.n_polar = static_cast<int>(r.integer("kernel_check.n_polar", 32, 2, 4096));
    k.ball.n_azimuth = static_cast<int>(r.integer("kernel_check.n_azimuth", 32, 2, 4096));
    k.jiang_ratio_max = r.number("kernel_check.jiang_ratio_max", 0.2, 0.0, big);
    k.de_ratio_min = r.number("kernel_check.de_ratio_min", 0.8, 0.0, big);
    k.de_ratio_max = r.number("kernel_check.de_ratio_max", 1.25, 0.0, big);
    for (double v : r.numbers("kernel_check.truncation_n", {}))
    {
        if (!(v >= 1.0) || v != std::floor(v) || v > 1e6)
        {
            r.problem("kernel_check.truncation_n", "needs integers >= 1");
            break;
        }
        k.truncation_n.push_back(static_cast<int>(v));
    }
    k.truncation_k = r.number("kernel_check.truncation_k", 2.0, 0.0, 1e6);

    c.output_dir = r.text("output.dir", "out");
    c.seed = static_cast<unsigned long>(r.integer("run.seed", 1, 0, 4294967295L));
    c.threads = static_cast<int>(r.integer("run.threads", 0, 0, 4096));

    if (!r.problems().empty())
        throw ConfigError(std::move(r.problems()));
    c.cross_section_spec = describe_model(c);
    if (c.solver.mode == SolverMode::picard_window)
        c.solver.c_n = compute_lipschitz_cn(c.trunc);
    return c;
}

RunConfig load_config(fs::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw NotFound("cannot open configuration " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

DistributionField initial_field(RunConfig const& c)
{
    MomentumLattice lat(c.p_max, c.p_axis);
    SpatialGrid space = c.space_mode == SpatialMode::homogeneous
                            ? SpatialGrid::homogeneous()
                            : SpatialGrid::periodic(c.x_max, c.x_axis);
    auto f = truncate_initial(make_initial(c.initial, space, lat), c.trunc);
    return c.closed_form ? f : f.as_gridded();
}

CollisionSettings collision_settings(RunConfig const& c)
{
    CollisionSettings cs;
    cs.model = c.model;
    cs.trunc = c.trunc;
    cs.quad = AngularQuadrature(c.n_theta, c.n_psi);
    return cs;
}

//---------------------------------------------------------------------------//
// SCENARIOS AND CHECK DESCRIPTIONS
//---------------------------------------------------------------------------//

fs::path scenario_directory()
{
    if (char const* env = std::getenv("RBE_SCENARIO_DIR"); env && *env)
        return env;
    return RBE_SCENARIO_DIR;
}

std::vector<ScenarioInfo> list_scenarios(fs::path const& dir)
{
    std::vector<ScenarioInfo> out;
    if (!fs::is_directory(dir))
        throw NotFound("scenario directory " + dir.string() + " not found");
    for (auto const& entry : fs::directory_iterator(dir))
    {
        if (entry.path().extension() != ".ini")
            continue;
        pt::ptree tree;
        try
        {
            pt::read_ini(entry.path().string(), tree);
        }
        catch (pt::ini_parser_error const&)
        {
            continue;
        }
        out.push_back({tree.get("scenario.name", entry.path().stem().string()),
                       tree.get("scenario.description", ""), entry.path()});
    }
    std::sort(out.begin(), out.end(),
              [](ScenarioInfo const& a, ScenarioInfo const& b) { return a.name < b.name; });
    return out;
}

fs::path resolve_scenario(std::string const& name_or_path, fs::path const& dir)
{
    if (fs::is_regular_file(name_or_path))
        return name_or_path;
    fs::path shipped = dir / (name_or_path + ".ini");
    if (fs::is_regular_file(shipped))
        return shipped;
    throw NotFound("no configuration file or shipped scenario named '" + name_or_path + "'");
}

namespace {

struct CheckText
{
    char const* name;
    char const* text;
};

CheckText const check_texts[] = {
    {"conservation_drift",
     "Relative drift of mass, momentum and energy over the run.\n"
     "Anchor: collision invariants; the weak form vanishes for psi in {1, p, p0}, so\n"
     "int int f psi is constant in time."},
    {"contraction",
     "Successive Picard distances in the exp(-2 C_n t)-weighted sup-L1 norm shrink by\n"
     "at most 0.55 per iteration and the iteration stops below tol.\n"
     "Anchor: the truncated Picard map is a contraction on a short window."},
    {"positivity",
     "The iterates of the positive Picard map are nonnegative, and at the fixed point\n"
     "the unclamped image is nonnegative up to rounding.\n"
     "Anchor: positivity argument for the positive part of the Picard map."},
    {"h_theorem",
     "H = int int f ln f is nonincreasing, and dH/dt = -D with D the entropy production.\n"
     "Anchor: entropy identity section (H-theorem)."},
    {"inertia_identity",
     "d/dt int int f |x|^2 = 2 int int f x.p/p0, checked by central differences.\n"
     "Anchor: moment identity for the inertia."},
    {"gronwall_inertia",
     "sup_t int int f |x|^2 <= e^T int int f0 (1 + |x|^2).\n"
     "Anchor: Gronwall estimate for the inertia."},
    {"entropy_mass_bound",
     "sup_t int int f |ln f| <= int int f0 [2 e^T (|x|^2 + 1) + 2 p0 + |ln f0|] + C1.\n"
     "Anchor: entropy estimate splitting f |ln f| by the size of f."},
    {"apriori_moment_bound",
     "sup_t int int f (1 + |x|^2 + p0 + |ln f|) <= C_T.\n"
     "Anchor: a-priori estimate of the existence theorem."},
    {"loss_tail_convergence",
     "The |p1| > k part of the normalized loss operator restricted to |p| <= R decreases\n"
     "in k; last/first <= 1e-2.\n"
     "Anchor: tail estimate used in the weak limit of the loss term."},
    {"condition_separation",
     "jiang: (1/p0^2) int_{B_R} A(g)/p10 dp1 decreases over the probes; de: (1/p0) times\n"
     "the same integral levels off. Output of check-kernel.\n"
     "Anchor: comparison of the kernel admissibility conditions (hard interactions)."},
    {"truncation_convergence",
     "max over p1 of int |B_n - B| vanishes once n clears every truncation indicator\n"
     "(bounded sigma) or decreases in n (unbounded sigma).\n"
     "Anchor: convergence of the truncated kernel."},
};

}  // namespace

std::vector<std::string> check_names()
{
    std::vector<std::string> out;
    for (auto const& c : check_texts)
        out.emplace_back(c.name);
    return out;
}

std::string describe(std::string const& check)
{
    for (auto const& c : check_texts)
    {
        if (check == c.name)
            return std::string(c.name) + "\n" + c.text + "\n";
    }
    throw NotFound("no diagnostic named '" + check + "'");
}

//---------------------------------------------------------------------------//
// RUNNING
//---------------------------------------------------------------------------//

namespace {

class Outputs
{
  public:
    Outputs(fs::path dir, ScenarioOutcome& outcome) : dir_(std::move(dir)), outcome_(outcome)
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec)
            throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    template<class F>
    fs::path write(std::string const& name, F&& body)
    {
        fs::path p = dir_ / name;
        std::ofstream out(p);
        if (!out)
            throw Error("cannot write " + p.string());
        body(out);
        out.flush();
        if (!out)
            throw Error("write failed for " + p.string());
        outcome_.files.push_back(p);
        return p;
    }

  private:
    fs::path dir_;
    ScenarioOutcome& outcome_;
};

std::string checkpoint_name(int step)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "checkpoint_%06d.txt", step);
    return buf;
}

void moment_reports(RunConfig const& c, RunRecord const& run, DistributionField const& last,
                    std::vector<VerificationReport>& reps)
{
    auto const& d = c.diagnostics;
    if (d.conservation)
        reps.push_back(conservation_drift(run.records, d.conservation_tol));
    if (d.h_theorem)
    {
        auto h = h_theorem_check(run.records, d.resolved_floor);
        reps.insert(reps.end(), h.begin(), h.end());
    }
    if (d.inertia)
        reps.push_back(inertia_identity_check(run, d.inertia_tol));
    if (d.gronwall)
        reps.push_back(gronwall_inertia_bound(run));
    if (d.entropy_bound)
        reps.push_back(entropy_mass_bound(run));
    if (d.apriori)
        reps.push_back(apriori_moment_bound(run));
    if (d.loss_tail)
        reps.push_back(
            loss_tail_convergence(last, collision_settings(c), d.loss_tail_radius, d.loss_tail_k).report);
}

void run_solve(RunConfig const& c, Outputs& out, std::vector<VerificationReport>& reps)
{
    auto f0n = initial_field(c);
    CollisionOperator op(f0n.lattice(), collision_settings(c));
    RunRecord run{f0n.space().mode(), {}};
    int const every = c.diagnostics.checkpoint_every;

    if (c.solver.mode == SolverMode::march)
    {
        auto res = solve_march(f0n, op, c.solver, [&](int step, DistributionField const& f) {
            if (every > 0 && step % every == 0)
                out.write(checkpoint_name(step), [&](std::ostream& o) { write_checkpoint(o, f); });
        });
        run.records = std::move(res.records);
        out.write("checkpoint_final.txt", [&](std::ostream& o) { write_checkpoint(o, res.final_field); });
        reps.push_back(march_positivity_check(res.final_field));
        moment_reports(c, run, res.final_field, reps);
    }
    else
    {
        FixedPointResult res;
        try
        {
            res = solve_fixed_point(f0n, op, c.solver);
        }
        catch (NonConvergence const& e)
        {
            out.write("trace.csv", [&](std::ostream& o) { write_trace_csv(o, e.trace); });
            throw;
        }
        out.write("trace.csv", [&](std::ostream& o) { write_trace_csv(o, res.trace); });
        for (std::size_t k = 0; k < res.solution.size(); ++k)
        {
            auto const& f = res.solution[k];
            MomentRecord r = moments(f);
            if (c.solver.with_entropy)
                r.entropy_production = op.evaluate(f, true).entropy_production;
            run.records.push_back(r);
            if (every > 0 && static_cast<int>(k) % every == 0)
                out.write(checkpoint_name(static_cast<int>(k)),
                          [&](std::ostream& o) { write_checkpoint(o, f); });
        }
        out.write("checkpoint_final.txt", [&](std::ostream& o) { write_checkpoint(o, res.solution.back()); });
        reps.push_back(contraction_check(res.trace, c.solver.tol));
        reps.push_back(positivity_check(res.solution, picard_map(res.solution, f0n, op, c.solver)));
        moment_reports(c, run, res.solution.back(), reps);
    }
    out.write("moments.csv", [&](std::ostream& o) { write_moment_csv(o, run.records); });
}

void run_kernel_check(RunConfig const& c, Outputs& out, std::vector<VerificationReport>& reps)
{
    auto const& k = c.kernel_check;
    auto cr = check_jiang_condition(c.model, k.radius, k.probes, k.ball);
    out.write("conditions.csv", [&](std::ostream& o) {
        o << "probe,jiang_value,de_value,jiang_error\n";
        char buf[160];
        for (std::size_t i = 0; i < cr.probes.size(); ++i)
        {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", cr.probes[i],
                          cr.jiang_values[i], cr.de_values[i], cr.error_estimates[i]);
            o << buf;
        }
    });

    std::size_t const m = cr.probes.size();
    VerificationReport jiang;
    jiang.name = "condition_jiang";
    jiang.claim = "jiang values strictly decreasing, last/first <= " + std::to_string(k.jiang_ratio_max);
    jiang.bound = k.jiang_ratio_max;
    bool decreasing = true;
    for (std::size_t i = 1; i < m; ++i)
        decreasing = decreasing && cr.jiang_values[i] < cr.jiang_values[i - 1];
    jiang.measured = cr.jiang_values.front() > 0.0 ? cr.jiang_values.back() / cr.jiang_values.front() : 0.0;
    jiang.pass = decreasing && jiang.measured <= k.jiang_ratio_max;
    jiang.note = decreasing ? "strictly decreasing" : "not strictly decreasing";
    reps.push_back(jiang);

    if (m >= 2)
    {
        VerificationReport de;
        de.name = "condition_de";
        de.claim = "de last/penultimate in [min, max]";
        de.bound = k.de_ratio_max;
        de.tolerance = k.de_ratio_min;
        de.measured = cr.de_values[m - 1] / cr.de_values[m - 2];
        de.pass = de.measured >= k.de_ratio_min && de.measured <= k.de_ratio_max;
        reps.push_back(de);
    }

    VerificationReport hard;
    hard.name = "hard_lower_bound";
    hard.claim = "inf over probes of A(g)/g^2 > 0";
    hard.measured = check_hard_lower_bound(c.model, k.probes);
    hard.pass = hard.measured > 0.0;
    reps.push_back(hard);

    if (!k.truncation_n.empty())
    {
        TruncationConvergenceOptions opts;
        opts.seed = c.seed;
        auto tc = truncation_convergence(c.model, k.radius, k.truncation_k, k.truncation_n, opts);
        out.write("truncation.csv", [&](std::ostream& o) {
            o << "n,value\n";
            char buf[96];
            for (std::size_t i = 0; i < tc.values.size(); ++i)
            {
                std::snprintf(buf, sizeof buf, "%d,%.17g\n", k.truncation_n[i], tc.values[i]);
                o << buf;
            }
        });
        VerificationReport rep;
        rep.name = "truncation_convergence";
        rep.claim = "values reach 0 for n >= clearing n, strictly decreasing before";
        bool ok = true;
        for (std::size_t i = 0; i < tc.values.size(); ++i)
        {
            bool cleared = tc.clearing_n > 0 && k.truncation_n[i] >= tc.clearing_n;
            if (cleared)
                ok = ok && tc.values[i] == 0.0;
            else if (i > 0)
                ok = ok && tc.values[i] < tc.values[i - 1];
        }
        rep.measured = tc.values.back();
        rep.pass = ok;
        rep.note = "clearing n = " + std::to_string(tc.clearing_n);
        reps.push_back(rep);
    }
}

}  // namespace

ScenarioOutcome run_scenario(RunConfig const& cfg, std::ostream& log)
{
    ScenarioOutcome outcome;
    Outputs out(cfg.output_dir, outcome);
    log << "scenario " << cfg.name << " (" << cfg.cross_section_spec << ", n = " << cfg.trunc.n
        << ")\n";
    if (cfg.kind == ScenarioKind::kernel_check)
        run_kernel_check(cfg, out, outcome.reports);
    else
        run_solve(cfg, out, outcome.reports);

    out.write("reports.json", [&](std::ostream& o) { write_reports_json(o, outcome.reports); });
    write_reports_table(log, outcome.reports);
    bool all = std::all_of(outcome.reports.begin(), outcome.reports.end(),
                           [](VerificationReport const& r) { return r.pass; });
    outcome.exit_code = all ? exit_pass : exit_check_failure;
    return outcome;
}

//---------------------------------------------------------------------------//
// COMMAND LINE
//---------------------------------------------------------------------------//

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Truncated relativistic Boltzmann solver and verification runs", "rbe"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string output_dir;
    int threads = -1;
    long long seed = -1;
    app.add_option("--output-dir", output_dir, "Output directory (overrides output.dir)");
    app.add_option("--threads", threads, "Worker threads, 0 for all cores (overrides run.threads)")
        ->check(CLI::Range(0, 4096));
    app.add_option("--seed", seed, "Random seed (overrides run.seed)")->check(CLI::Range(0LL, 4294967295LL));

    std::string config;
    auto* run = app.add_subcommand("run", "Solve a scenario and verify it");
    run->add_option("config", config, "Configuration file or shipped scenario name")->required();
    std::string kconfig;
    auto* kernel = app.add_subcommand("check-kernel", "Evaluate the kernel conditions of a configuration");
    kernel->add_option("config", kconfig, "Configuration file or shipped scenario name")->required();
    auto* list = app.add_subcommand("list", "List shipped scenarios");
    std::string check;
    auto* desc = app.add_subcommand("describe", "Explain a diagnostic");
    desc->add_option("name", check, "Diagnostic name")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int code = app.exit(e, out, err);
        return code == 0 ? exit_pass : exit_usage;
    }

    try
    {
        if (list->parsed())
        {
            for (auto const& s : list_scenarios())
                out << s.name << "  " << s.description << '\n';
            return exit_pass;
        }
        if (desc->parsed())
        {
            out << describe(check);
            return exit_pass;
        }
    }
    catch (NotFound const& e)
    {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    RunConfig cfg;
    try
    {
        cfg = load_config(resolve_scenario(run->parsed() ? config : kconfig));
    }
    catch (ConfigError const& e)
    {
        err << e.what() << '\n';
        return exit_usage;
    }
    catch (NotFound const& e)
    {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    if (kernel->parsed())
        cfg.kind = ScenarioKind::kernel_check;
    if (!output_dir.empty())
        cfg.output_dir = output_dir;
    if (threads >= 0)
        cfg.threads = threads;
    if (seed >= 0)
        cfg.seed = static_cast<unsigned long>(seed);
    set_thread_count(cfg.threads);

    try
    {
        auto outcome = run_scenario(cfg, out);
        out << (outcome.exit_code == exit_pass ? "all checks passed" : "some checks FAILED")
            << "; outputs in " << cfg.output_dir.string() << '\n';
        return outcome.exit_code;
    }
    catch (NonConvergence const& e)
    {
        err << "error: " << e.what() << "; trace in " << (cfg.output_dir / "trace.csv").string()
            << '\n';
        return exit_runtime;
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}

}  // namespace rbe
