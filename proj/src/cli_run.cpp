#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "wavelab/analysis.hpp"
#include "wavelab/cli.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/floquet.hpp"
#include "wavelab/parallel.hpp"
#include "wavelab/rays.hpp"
#include "wavelab/wkb.hpp"

namespace wavelab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& content)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << content;
    if (!out) throw Error("failed writing " + p.string());
}

// Rows of decimal text with 17 significant digits.
class Csv {
public:
    explicit Csv(const std::string& header) { os_ << std::setprecision(17) << header << '\n'; }
    template <class... T>
    void row(const T&... v)
    {
        bool first = true;
        ((os_ << (first ? "" : ",") << v, first = false), ...);
        os_ << '\n';
    }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const
    {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ValidationError("column " + name + " missing");
        return static_cast<std::size_t>(it - header.begin());
    }
    double number(std::size_t r, const std::string& name) const { return std::stod(rows[r][column(name)]); }
};

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(cur);
    return out;
}

CsvTable read_csv(const fs::path& p)
{
    std::istringstream in(read_file(p));
    CsvTable t;
    std::string line;
    if (std::getline(in, line)) t.header = split_line(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(split_line(line));
    return t;
}

// Files written so far, relative to the run directory.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
    void write(const std::string& name, const std::string& content)
    {
        write_file(dir_ / name, content);
        names_.push_back(name);
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
    void add(const std::string& name) { names_.push_back(name); }
    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& names() const { return names_; }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

Cutoff cutoff_of(const json& c, double rho)
{
    const double in = c.at("inner").get<double>(), out = c.at("outer").get<double>();
    if (in == 0.0 && out == 0.0) return {rho + 0.5, rho + 1.0};
    return {in, out};
}

MultiplierFunction multiplier_of(const json& m)
{
    const std::string kind = m.at("kind").get<std::string>();
    const double eps = m.at("epsilon").get<double>(), scale = m.at("scale").get<double>();
    if (kind == "rational") return MultiplierFunction::rational(eps, scale);
    if (kind == "odd") return MultiplierFunction::odd(eps, scale);
    return MultiplierFunction::constant(eps);
}

// Portable uniform draw in [0, 1).
double uniform(std::uint64_t& state)
{
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1p-53;
}

std::vector<double> in_ball(std::uint64_t& state, int n, double radius)
{
    for (;;) {
        std::vector<double> v(n);
        double r2 = 0.0;
        for (double& c : v) {
            c = 2.0 * uniform(state) - 1.0;
            r2 += c * c;
        }
        if (r2 <= 1.0 && r2 > 1e-12) {
            for (double& c : v) c *= radius;
            return v;
        }
    }
}

json running_summary(const std::vector<RunningIntegral>& runs, Outputs& out)
{
    Csv integrals("trial,t,integral,normalized");
    Csv summary("trial,total,norm_squared,ratio,tail_fraction,out_of_hypothesis");
    double lo = INFINITY, hi = 0.0, tail = 0.0;
    bool outside = false;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& r = runs[k];
        for (std::size_t j = 0; j < r.t.size(); ++j)
            integrals.row(k, r.t[j], r.integral[j], r.norm_squared > 0.0 ? r.integral[j] / r.norm_squared : 0.0);
        summary.row(k, r.total, r.norm_squared, r.ratio, r.tail_fraction, r.out_of_hypothesis ? "true" : "false");
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
        tail = std::max(tail, r.tail_fraction);
        outside = outside || r.out_of_hypothesis;
    }
    out.write("integrals.csv", integrals.str());
    out.write("summary.csv", summary.str());
    return {{"trials", runs.size()},
            {"min_ratio", lo},
            {"max_ratio", hi},
            {"ratio_spread", lo > 0.0 ? hi / lo : INFINITY},
            {"max_tail_fraction", tail},
            {"out_of_hypothesis", outside}};
}

void run_check_metric(const json& c, const Metric& m, Outputs& out)
{
    const json& s = c["check-metric"];
    const int n = c["metric"]["dimension"].get<int>();
    SampleGrid g{n, s["t_points"].get<int>(), s["x_points"].get<int>(), s["x_extent"].get<double>()};
    auto reports = check_basic_conditions(m, g);
    const auto nt = check_nontrapping_sufficient(m, g);
    reports.push_back(nt);
    if (s["multiplier"]["kind"] != "none")
        for (const auto& r : check_energy_conditions(m, multiplier_of(s["multiplier"]), g)) reports.push_back(r);
    out.write("conditions.csv", condition_csv(reports, n));
    bool all = true;
    for (const auto& r : reports) all = all && r.passed;
    out.write_json("summary.json", {{"all_passed", all}, {"beta", nt.beta}, {"conditions", reports.size()}});
}

void run_trace_rays(const json& c, const Metric& m, Outputs& out)
{
    const json& s = c["trace-rays"];
    const int n = c["metric"]["dimension"].get<int>();
    const int count = s["count"].get<int>();
    const double T = m.period(), rho = m.support_radius();
    const double launch = s["launch_radius"].get<double>() > 0.0 ? s["launch_radius"].get<double>() : rho;
    const double tol = s["tol"].get<double>(), span = s["periods"].get<double>() * T;
    RayOptions ro;
    ro.escape_radius = s["escape_factor"].get<double>() * rho;

    std::uint64_t state = c["seed"].get<std::uint64_t>();
    std::vector<PhasePoint> starts;
    for (int i = 0; i < count; ++i) {
        const double t0 = T * uniform(state);
        auto x = in_ball(state, n, launch);
        auto xi = in_ball(state, n, 1.0);
        double norm = 0.0;
        for (double v : xi) norm += v * v;
        for (double& v : xi) v /= std::sqrt(norm);
        starts.push_back(on_shell_point(m, t0, x, xi, i % 2 == 0 ? 1 : -1));
    }
    std::vector<RayTrajectory> rays(count);
    parallel_for(count, [&](std::size_t i) { rays[i] = integrate_ray(m, starts[i], starts[i].t + span, tol, ro); });

    std::string header = "id,branch,t0";
    for (int d = 0; d < n; ++d) header += ",x0_" + std::to_string(d + 1);
    for (int d = 0; d < n; ++d) header += ",xi0_" + std::to_string(d + 1);
    header += ",hamiltonian_residual,relative_residual,xi_identity_residual,xi_bound_ok,escaped,escape_time";
    std::ostringstream os;
    os << std::setprecision(17) << header << '\n';
    double worst_rel = 0.0, worst_id = 0.0;
    bool bound_ok = true;
    const double C0 = m.upper_bound();
    for (int i = 0; i < count; ++i) {
        const auto& r = rays[i];
        const auto& p = starts[i];
        double xi2 = 0.0;
        for (double v : p.xi) xi2 += v * v;
        const double rel = r.hamiltonian_residual_max / (xi2 * C0);
        const double id = xi_identity_residual(m, r);
        const bool ok = xi_lower_bound_check(m, r);
        worst_rel = std::max(worst_rel, rel);
        worst_id = std::max(worst_id, id);
        bound_ok = bound_ok && ok;
        os << i << ',' << r.branch << ',' << p.t;
        for (double v : p.x) os << ',' << v;
        for (double v : p.xi) os << ',' << v;
        os << ',' << r.hamiltonian_residual_max << ',' << rel << ',' << id << ',' << (ok ? "true" : "false") << ','
           << (r.escape_time ? "true" : "false") << ',' << (r.escape_time ? *r.escape_time : 0.0) << '\n';
    }
    out.write("rays.csv", os.str());
    out.write_json("summary.json", {{"rays", count},
                                    {"span", span},
                                    {"max_relative_residual", worst_rel},
                                    {"max_xi_identity_residual", worst_id},
                                    {"xi_bound_holds", bound_ok}});
}

void run_certify(const json& c, const Metric& m, Outputs& out)
{
    const json& s = c["certify-nontrapping"];
    const int n = c["metric"]["dimension"].get<int>();
    const double rho = m.support_radius(), R = s["radius_factor"].get<double>() * rho;
    const SampleGrid g{n, s["t_points"].get<int>(), s["x_points"].get<int>(), 0.0};
    const auto cond = check_nontrapping_sufficient(m, g);
    double horizon = s["horizon"].get<double>();
    std::string source = "config";
    if (horizon == 0.0) {
        if (!cond.passed)
            throw ConditionNotCertifiedError("sufficient non-trapping condition fails (margin " +
                                             std::to_string(cond.margin) +
                                             "); set certify-nontrapping.horizon to sample anyway");
        horizon = escape_bound_8_1(m, cond.beta, rho, R);
        source = "escape bound";
    }
    CertifySampling cs;
    cs.dimension = n;
    cs.shells = s["shells"].get<int>();
    cs.directions = s["directions"].get<int>();
    cs.times = s["times"].get<int>();
    cs.both_branches = s["both_branches"].get<bool>();
    cs.tol = s["tol"].get<double>();
    const auto cert = certify_nontrapping(m, R, cs, horizon);
    out.write("certificate.json", certificate_json(cert));
    out.write("conditions.csv", condition_csv({cond}, n));
    out.write_json("summary.json", {{"beta", cond.beta},
                                    {"margin", cond.margin},
                                    {"horizon", horizon},
                                    {"horizon_source", source},
                                    {"passed", cert.passed()},
                                    {"failures", cert.failures.size()},
                                    {"sample_count", cert.sample_count}});
}

void run_evolve(const json& c, const Metric& m, const Grid& grid, Outputs& out)
{
    const json& s = c["evolve"];
    CauchyData u = sample_random_data(c["seed"].get<std::uint64_t>(), s["support"].get<double>(),
                                      s["smoothness"].get<double>(), grid);
    const double region = s["region_radius"].get<double>() > 0.0 ? s["region_radius"].get<double>()
                                                                  : m.support_radius();
    const int samples = s["samples"].get<int>();
    const double tf = s["t_final"].get<double>();
    Csv csv("t,total,local,hdot_norm");
    auto record = [&](const CauchyData& d) {
        const auto e = energy(m, d, region);
        csv.row(d.time, e.total, e.local, e.hdot_norm);
    };
    record(u);
    for (int k = 1; k <= samples; ++k) {
        u = evolve(m, u, u.time, tf * k / samples);
        record(u);
    }
    out.write("energy.csv", csv.str());
    if (s["snapshot"].get<bool>()) {
        write_snapshot((out.dir() / "final").string(), u);
        out.add("final.bin");
        out.add("final.json");
    }
}

void run_wkb(const json& c, const Metric& m, Outputs& out)
{
    const json& s = c["wkb-compare"];
    WkbCompareOptions o;
    o.extent = s["extent"].get<double>();
    o.points = s["points"].get<int>();
    o.stride = s["stride"].get<int>();
    o.t0 = s["t0"].get<double>();
    o.eta = s["eta"].get<std::vector<double>>();
    o.centre = s["centre"].get<std::vector<double>>();
    o.width = s["width"].get<double>();
    o.time_samples = s["time_samples"].get<int>();
    o.floor = s["floor"].get<double>();
    const auto cmp = compare_wkb_fdtd(m, s["lambdas"].get<std::vector<double>>(), s["window"].get<double>(), o);
    out.write("wkb.csv", wkb_comparison_csv(cmp));
    out.write_json("summary.json", {{"window", cmp.window}, {"monotone", cmp.monotone}});
}

void run_floquet(const json& c, const Metric& m, const Grid& grid, Outputs& out)
{
    const json& s = c["floquet-spectrum"];
    const auto op = CutoffMonodromy::make(m, grid, s["periods"].get<int>(), s["base_time"].get<double>());
    const auto est = estimate_spectrum(op, s["eigenvalues"].get<int>(), s["tol"].get<double>(),
                                       s["max_iters"].get<int>(), c["seed"].get<std::uint64_t>());
    Csv csv("index,re,im,modulus,per_period_modulus,residual");
    for (std::size_t i = 0; i < est.multipliers.size(); ++i) {
        const auto& mu = est.multipliers[i];
        csv.row(i, mu.value.real(), mu.value.imag(), std::abs(mu.value),
                std::pow(std::abs(mu.value), 1.0 / op.periods), mu.residual);
    }
    out.write("spectrum.csv", csv.str());
    out.write_json("summary.json", {{"periods", op.periods},
                                    {"horizon", op.horizon()},
                                    {"spectral_radius", est.spectral_radius_estimate},
                                    {"iterations", est.iterations},
                                    {"converged", est.converged},
                                    {"breakdown", est.breakdown}});
}

void run_decay(const json& c, const Metric& m, const Grid& grid, Outputs& out)
{
    const json& s = c["decay-fit"];
    const auto data = sample_random_data(c["seed"].get<std::uint64_t>(), s["support"].get<double>(),
                                         s["smoothness"].get<double>(), grid);
    std::optional<DecayWindow> window;
    if (s["window_max"].get<double>() > 0.0)
        window = DecayWindow{s["window_min"].get<double>(), s["window_max"].get<double>()};
    const auto fit = fit_local_energy_decay(m, data, cutoff_of(s["cutoff"], m.support_radius()),
                                            s["horizon"].get<double>(), window, s["sample_interval"].get<double>());
    Csv csv("t,local");
    for (std::size_t i = 0; i < fit.t.size(); ++i) csv.row(fit.t[i], fit.local[i]);
    out.write("decay.csv", csv.str());
    out.write_json("fit.json", {{"delta", fit.delta},
                                {"C", fit.C},
                                {"r_squared", fit.r_squared},
                                {"t_min", fit.t_min},
                                {"t_max", fit.t_max},
                                {"floor_limited", fit.floor_limited},
                                {"period_factor", std::exp(-fit.delta * m.period())}});
}

void run_local_energy(const json& c, const Metric& m, const Grid& grid, Outputs& out)
{
    const json& s = c["local-energy-l2"];
    const int trials = s["trials"].get<int>();
    const auto seed = c["seed"].get<std::uint64_t>();
    const Cutoff phi = cutoff_of(s["cutoff"], m.support_radius());
    std::vector<RunningIntegral> runs(trials);
    parallel_for(trials, [&](std::size_t k) {
        const auto d = sample_random_data(seed + k, s["support"].get<double>(), s["smoothness"].get<double>(), grid);
        runs[k] = l2_local_energy_integral(m, d, phi, s["horizon"].get<double>(), s["sample_interval"].get<double>());
    });
    out.write_json("summary.json", running_summary(runs, out));
}

void run_local_smoothing(const json& c, const Metric& m, Outputs& out)
{
    const json& s = c["local-smoothing"];
    const int trials = s["trials"].get<int>();
    const auto seed = c["seed"].get<std::uint64_t>();
    const Grid grid = Grid::cartesian(c["metric"]["dimension"].get<int>(), s["extent"].get<double>(),
                                      s["points"].get<int>());
    const Cutoff phi = cutoff_of(s["cutoff"], m.support_radius());
    std::vector<RunningIntegral> runs(trials);
    for (int k = 0; k < trials; ++k) {
        const auto d = sample_random_data(seed + k, s["support"].get<double>(), s["smoothness"].get<double>(), grid);
        runs[k] = local_smoothing_free(phi, d, s["gamma"].get<double>(), s["horizon"].get<double>(),
                                       s["samples"].get<int>());
    }
    out.write_json("summary.json", running_summary(runs, out));
}

void run_identity(const json& c, const Metric& m, Outputs& out)
{
    const json& s = c["identity-8-5"];
    IdentityLadder ladder;
    ladder.dimension = c["metric"]["dimension"].get<int>();
    ladder.extent = s["extent"].get<double>();
    ladder.points = s["points"].get<std::vector<int>>();
    ladder.times = s["times"].get<std::vector<double>>();
    SpaceTimeFunction u;
    if (s["solution"] == "gaussian") {
        u = [](double t, std::span<const double> x) {
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            return std::cos(t) * std::exp(-r2);
        };
    } else {
        u = [](double t, std::span<const double> x) {
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            return std::cos(2.0 * x[0] + x[1] - std::sqrt(5.0) * t) * std::exp(-r2);
        };
    }
    const auto rep = verify_identity_8_5(m, multiplier_of(s["multiplier"]), u, ladder);
    Csv csv("h,residual,reference,relative,boundary_term,min_Z");
    double min_z = INFINITY;
    for (const auto& r : rep.rows) {
        csv.row(r.h, r.residual, r.reference, r.reference > 0.0 ? r.residual / r.reference : 0.0, r.boundary_term,
                r.min_Z);
        min_z = std::min(min_z, r.min_Z);
    }
    out.write("identity.csv", csv.str());
    out.write_json("summary.json",
                   {{"orders", rep.orders}, {"min_order", rep.min_order()}, {"monotone", rep.monotone}, {"min_Z", min_z}});
}

void run_energy_bound(const json& c, const Metric& m, const Grid& grid, Outputs& out)
{
    const json& s = c["energy-bound"];
    EnergyBoundOptions o;
    o.trials = s["trials"].get<int>();
    o.periods = s["periods"].get<double>();
    o.grid = grid;
    o.support_radius = s["support"].get<double>();
    o.smoothness = s["smoothness"].get<double>();
    o.seed = c["seed"].get<std::uint64_t>();
    o.samples_per_period = s["samples_per_period"].get<int>();
    o.trend_threshold = s["trend_threshold"].get<double>();
    o.cfl_safety = s["cfl_safety"].get<double>();
    const auto rep = energy_bound_experiment(m, o);
    Csv curve("trial,t,ratio");
    Csv table("trial,sup_ratio,slope_per_period");
    for (std::size_t k = 0; k < rep.trials.size(); ++k) {
        const auto& tr = rep.trials[k];
        for (std::size_t j = 0; j < tr.t.size(); ++j) curve.row(k, tr.t[j], tr.ratio[j]);
        table.row(k, tr.sup_ratio, tr.slope_per_period);
    }
    out.write("energy_bound.csv", curve.str());
    out.write("summary.csv", table.str());
    out.write_json("summary.json", {{"sup_ratio", rep.sup_ratio},
                                    {"min_ratio", rep.min_ratio},
                                    {"max_slope", rep.max_slope},
                                    {"trend_flag", rep.trend_flag}});
}

void run_strichartz(const json& c, const Metric& m, const Grid& grid, Outputs& out)
{
    const json& s = c["strichartz"];
    StrichartzTriple t;
    t.p = Exponent::parse(s["p"].get<std::string>());
    t.q = Exponent::parse(s["q"].get<std::string>());
    t.gamma = Exponent::parse(s["gamma"].get<std::string>());
    t.n = c["metric"]["dimension"].get<int>();
    StrichartzOptions o;
    o.trials = s["trials"].get<int>();
    o.horizon = s["horizon"].get<double>();
    o.grid = grid;
    o.support_radius = s["support"].get<double>();
    o.smoothness = s["smoothness"].get<double>();
    o.seed = c["seed"].get<std::uint64_t>();
    o.snapshot_every = s["snapshot_every"].get<int>();
    o.chi = cutoff_of(s["cutoff"], m.support_radius());
    const auto rep = strichartz_experiment(m, t, o);
    Csv csv("trial,lplq,sup_energy,data_norm,ratio,lplq_ratio,inner_lplq,outer_lplq");
    for (std::size_t k = 0; k < rep.trials.size(); ++k) {
        const auto& r = rep.trials[k];
        csv.row(k, r.lplq, r.sup_energy, r.data_norm, r.ratio, r.lplq_ratio, r.inner_lplq, r.outer_lplq);
    }
    out.write("strichartz.csv", csv.str());
    out.write_json("summary.json", {{"triple", {t.p.str(), t.q.str(), t.gamma.str(), t.n}},
                                    {"sup_ratio", rep.sup_ratio},
                                    {"spread", rep.spread},
                                    {"sup_lplq_ratio", rep.sup_lplq_ratio}});
}

void run_experiment(const ExperimentConfig& cfg, Outputs& out)
{
    const json& c = cfg.resolved;
    const std::string& e = cfg.experiment;
    const Metric m = build_metric(c);
    const Grid grid = build_grid(c);
    if (e == "check-metric") return run_check_metric(c, m, out);
    if (e == "trace-rays") return run_trace_rays(c, m, out);
    if (e == "certify-nontrapping") return run_certify(c, m, out);
    if (e == "evolve") return run_evolve(c, m, grid, out);
    if (e == "wkb-compare") return run_wkb(c, m, out);
    if (e == "floquet-spectrum") return run_floquet(c, m, grid, out);
    if (e == "decay-fit") return run_decay(c, m, grid, out);
    if (e == "local-energy-l2") return run_local_energy(c, m, grid, out);
    if (e == "identity-8-5") return run_identity(c, m, out);
    if (e == "energy-bound") return run_energy_bound(c, m, grid, out);
    if (e == "local-smoothing") return run_local_smoothing(c, m, out);
    if (e == "strichartz") return run_strichartz(c, m, grid, out);
    throw ValidationError("experiment: unknown experiment \"" + e + "\"");
}

// Inputs the plot step reads for each experiment.
const std::map<std::string, std::vector<std::string>>& plot_inputs()
{
    static const std::map<std::string, std::vector<std::string>> inputs = {
        {"check-metric", {"conditions.csv"}},
        {"trace-rays", {"rays.csv"}},
        {"certify-nontrapping", {"certificate.json"}},
        {"evolve", {"energy.csv"}},
        {"wkb-compare", {"wkb.csv"}},
        {"floquet-spectrum", {"spectrum.csv"}},
        {"decay-fit", {"decay.csv", "fit.json"}},
        {"local-energy-l2", {"integrals.csv", "summary.csv"}},
        {"identity-8-5", {"identity.csv"}},
        {"energy-bound", {"energy_bound.csv", "summary.csv"}},
        {"local-smoothing", {"integrals.csv", "summary.csv"}},
        {"strichartz", {"strichartz.csv"}},
    };
    return inputs;
}

void plot_running(const fs::path& dir, Outputs& out)
{
    const auto integrals = read_csv(dir / "integrals.csv");
    Csv curve("trial,t,normalized_integral");
    for (std::size_t r = 0; r < integrals.rows.size(); ++r)
        curve.row(integrals.rows[r][integrals.column("trial")], integrals.number(r, "t"),
                  integrals.number(r, "normalized"));
    out.write("plot/running_integrals.csv", curve.str());
    const auto summary = read_csv(dir / "summary.csv");
    Csv table("trial,ratio,tail_fraction");
    for (std::size_t r = 0; r < summary.rows.size(); ++r)
        table.row(summary.rows[r][summary.column("trial")], summary.number(r, "ratio"),
                  summary.number(r, "tail_fraction"));
    out.write("plot/ratio_table.csv", table.str());
}

void plot_for(const std::string& e, const fs::path& dir, Outputs& out)
{
    if (e == "check-metric") {
        const auto t = read_csv(dir / "conditions.csv");
        Csv csv("id,margin,passed");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            csv.row(t.rows[r][t.column("id")], t.number(r, "margin"), t.rows[r][t.column("passed")] == "true" ? 1 : 0);
        out.write("plot/conditions.csv", csv.str());
    } else if (e == "trace-rays") {
        const auto t = read_csv(dir / "rays.csv");
        std::vector<double> times;
        int trapped = 0;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            if (t.rows[r][t.column("escaped")] == "true")
                times.push_back(t.number(r, "escape_time"));
            else
                ++trapped;
        }
        Csv csv("bin_start,bin_end,count");
        if (!times.empty()) {
            const double hi = *std::max_element(times.begin(), times.end());
            const int bins = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(times.size())))));
            const double w = hi > 0.0 ? hi / bins : 1.0;
            std::vector<int> counts(bins, 0);
            for (double v : times) counts[std::min(bins - 1, static_cast<int>(v / w))]++;
            for (int b = 0; b < bins; ++b) csv.row(b * w, (b + 1) * w, counts[b]);
        }
        out.write("plot/escape_histogram.csv", csv.str());
        Csv res("id,relative_residual,xi_identity_residual");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            res.row(t.rows[r][0], t.number(r, "relative_residual"), t.number(r, "xi_identity_residual"));
        out.write("plot/ray_residuals.csv", res.str());
        out.write_json("plot/escape_summary.json", {{"escaped", times.size()}, {"not_escaped", trapped}});
    } else if (e == "certify-nontrapping") {
        const auto j = json::parse(read_file(dir / "certificate.json"));
        Csv csv("R,sample_count,max_escape_time,horizon,failures");
        csv.row(j["R"].get<double>(), j["sample_count"].get<long>(), j["max_escape_time"].get<double>(),
                j["horizon"].get<double>(), j["failures"].size());
        out.write("plot/certificate_table.csv", csv.str());
    } else if (e == "evolve") {
        const auto t = read_csv(dir / "energy.csv");
        const double e0 = t.rows.empty() ? 0.0 : t.number(0, "total");
        Csv csv("t,total_ratio,local_ratio");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            csv.row(t.number(r, "t"), e0 > 0.0 ? t.number(r, "total") / e0 : 0.0,
                    e0 > 0.0 ? t.number(r, "local") / e0 : 0.0);
        out.write("plot/energy_curve.csv", csv.str());
    } else if (e == "wkb-compare") {
        const auto t = read_csv(dir / "wkb.csv");
        Csv csv("lambda,log10_lambda,error,log10_error");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const double l = t.number(r, "lambda"), err = t.number(r, "error");
            csv.row(l, std::log10(l), err, err > 0.0 ? std::log10(err) : -INFINITY);
        }
        out.write("plot/wkb_errors.csv", csv.str());
    } else if (e == "floquet-spectrum") {
        const auto t = read_csv(dir / "spectrum.csv");
        Csv csv("re,im,modulus");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            csv.row(t.number(r, "re"), t.number(r, "im"), t.number(r, "modulus"));
        out.write("plot/spectrum.csv", csv.str());
    } else if (e == "decay-fit") {
        const auto t = read_csv(dir / "decay.csv");
        const auto fit = json::parse(read_file(dir / "fit.json"));
        // a floor-limited fit stores null for the rate
        const double delta = fit["delta"].is_number() ? fit["delta"].get<double>() : NAN;
        const double C = fit["C"].is_number() ? fit["C"].get<double>() : NAN;
        Csv csv("t,log_local_energy,fitted_line");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const double tt = t.number(r, "t"), v = t.number(r, "local");
            csv.row(tt, v > 0.0 ? std::log(v) : -INFINITY, C > 0.0 ? std::log(C) - delta * tt : NAN);
        }
        out.write("plot/decay_curve.csv", csv.str());
    } else if (e == "local-energy-l2" || e == "local-smoothing") {
        plot_running(dir, out);
    } else if (e == "identity-8-5") {
        const auto t = read_csv(dir / "identity.csv");
        Csv csv("h,relative_residual,observed_order");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            double order = 0.0;
            if (r > 0)
                order = std::log(t.number(r - 1, "residual") / t.number(r, "residual")) /
                        std::log(t.number(r - 1, "h") / t.number(r, "h"));
            csv.row(t.number(r, "h"), t.number(r, "relative"), order);
        }
        out.write("plot/convergence.csv", csv.str());
    } else if (e == "energy-bound") {
        const auto t = read_csv(dir / "energy_bound.csv");
        Csv csv("trial,t,ratio");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            csv.row(t.rows[r][0], t.number(r, "t"), t.number(r, "ratio"));
        out.write("plot/energy_ratio.csv", csv.str());
        const auto s = read_csv(dir / "summary.csv");
        Csv table("trial,sup_ratio,slope_per_period");
        for (std::size_t r = 0; r < s.rows.size(); ++r)
            table.row(s.rows[r][0], s.number(r, "sup_ratio"), s.number(r, "slope_per_period"));
        out.write("plot/ratio_table.csv", table.str());
    } else if (e == "strichartz") {
        const auto t = read_csv(dir / "strichartz.csv");
        Csv csv("trial,ratio,lplq_ratio");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            csv.row(t.rows[r][0], t.number(r, "ratio"), t.number(r, "lplq_ratio"));
        out.write("plot/ratio_table.csv", csv.str());
    }
}

std::vector<std::string> emit_into(const fs::path& run_dir, Outputs& out)
{
    const fs::path cfg = run_dir / "resolved_config.json";
    if (!fs::exists(cfg)) {
        std::string msg = "missing in " + run_dir.string() + ": resolved_config.json; a complete run holds "
                          "resolved_config.json, manifest.json and, per experiment:";
        for (const auto& [name, files] : plot_inputs()) {
            msg += "\n  " + name + ":";
            for (const auto& f : files) msg += " " + f;
        }
        throw ValidationError(msg);
    }
    const auto config = json::parse(read_file(cfg));
    const std::string e = config.value("experiment", "");
    const auto it = plot_inputs().find(e);
    if (it == plot_inputs().end()) throw ValidationError("resolved_config.json names unknown experiment \"" + e + "\"");
    std::vector<std::string> missing;
    for (const auto& f : it->second)
        if (!fs::exists(run_dir / f)) missing.push_back(f);
    if (!missing.empty()) {
        std::string msg = "missing in " + run_dir.string() + " for " + e + ":";
        for (const auto& f : missing) msg += " " + f;
        throw ValidationError(msg);
    }
    fs::create_directories(run_dir / "plot");
    const std::size_t before = out.names().size();
    plot_for(e, run_dir, out);
    return {out.names().begin() + static_cast<std::ptrdiff_t>(before), out.names().end()};
}

} // namespace

std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

std::string manifest_json(const RunManifest& m)
{
    nlohmann::ordered_json j;
    j["experiment"] = m.experiment;
    j["config_hash"] = m.config_hash;
    j["code_version"] = m.code_version;
    j["started"] = m.started;
    j["finished"] = m.finished;
    auto& a = j["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& art : m.artifacts) a.push_back({{"path", art.path}, {"sha256", art.sha256}, {"bytes", art.bytes}});
    return j.dump(2) + "\n";
}

std::vector<std::string> emit_plot_data(const fs::path& run_dir)
{
    Outputs out(run_dir);
    return emit_into(run_dir, out);
}

RunManifest run(const ExperimentConfig& config, const fs::path& out_dir)
{
    RunManifest manifest;
    manifest.experiment = config.experiment;
    manifest.code_version = code_version;
    manifest.started = utc_now();
    const std::string resolved = config.resolved.dump(2) + "\n";
    manifest.config_hash = sha256_hex(config.resolved.dump());

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw Error("cannot create output directory " + out_dir.string());
    fs::remove(out_dir / "manifest.json", ec);

    set_thread_count(config.resolved.at("threads").get<int>());
    Outputs out(out_dir);
    out.write("resolved_config.json", resolved);

    const char* phase = config.experiment.c_str();
    try {
        run_experiment(config, out);
        phase = "plot data";
        emit_into(out_dir, out);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(phase) + ": " + e.what());
    } catch (const Error& e) {
        throw Error(std::string(phase) + ": " + e.what());
    }

    auto names = out.names();
    std::sort(names.begin(), names.end());
    for (const auto& n : names) {
        const std::string bytes = read_file(out_dir / n);
        manifest.artifacts.push_back({n, sha256_hex(bytes), bytes.size()});
    }
    manifest.finished = utc_now();
    write_file(out_dir / "manifest.json", manifest_json(manifest));
    return manifest;
}

} // namespace wavelab
