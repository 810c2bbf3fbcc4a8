#include <algorithm>
#include <cmath>
#include <sstream>

#include "wavelab/analysis.hpp"
#include "wavelab/cli.hpp"
#include "wavelab/errors.hpp"

namespace wavelab {

using nlohmann::json;

namespace {

json cutoff_section() { return {{"inner", 0.0}, {"outer", 0.0}}; }

json experiment_defaults(const std::string& e)
{
    if (e == "check-metric")
        return {{"t_points", 32},
                {"x_points", 32},
                {"x_extent", 0.0},
                {"multiplier", {{"kind", "rational"}, {"epsilon", 0.5}, {"scale", 1.0}}}};
    if (e == "trace-rays")
        return {{"count", 100}, {"periods", 50.0}, {"tol", 1e-10}, {"launch_radius", 0.0}, {"escape_factor", 2.0}};
    if (e == "certify-nontrapping")
        return {{"shells", 8},       {"directions", 32}, {"times", 16},   {"both_branches", true},
                {"tol", 1e-10},      {"radius_factor", 2.0}, {"t_points", 32}, {"x_points", 32},
                {"horizon", 0.0}};
    if (e == "evolve")
        return {{"support", 1.5}, {"smoothness", 2.0}, {"t_final", 8.0}, {"samples", 16}, {"region_radius", 0.0},
                {"snapshot", true}};
    if (e == "wkb-compare")
        return {{"lambdas", {8.0, 16.0, 32.0}},
                {"window", 0.0},
                {"t0", 0.0},
                {"extent", 1.5},
                {"points", 64},
                {"stride", 4},
                {"eta", {1.0, 0.0, 0.0}},
                {"centre", {0.3, 0.0, 0.0}},
                {"width", 0.25},
                {"time_samples", 4},
                {"floor", 1e-3}};
    if (e == "floquet-spectrum")
        return {{"periods", 0}, {"eigenvalues", 4}, {"tol", 1e-6}, {"max_iters", 60}, {"base_time", 0.0}};
    if (e == "decay-fit")
        return {{"support", 1.5},    {"smoothness", 2.0},    {"horizon", 16.0},
                {"window_min", 0.0}, {"window_max", 0.0},    {"sample_interval", 0.0},
                {"cutoff", cutoff_section()}};
    if (e == "local-energy-l2")
        return {{"trials", 20},      {"horizon", 20.0},         {"support", 1.5},
                {"smoothness", 2.0}, {"sample_interval", 0.0}, {"cutoff", cutoff_section()}};
    if (e == "identity-8-5")
        return {{"extent", 1.5},
                {"points", {24, 48, 96}},
                {"times", {0.3, 0.9}},
                {"multiplier", {{"kind", "odd"}, {"epsilon", 0.5}, {"scale", 1.0}}},
                {"solution", "plane-wave"}};
    if (e == "energy-bound")
        return {{"trials", 10},      {"periods", 50.0},         {"support", 3.0},
                {"smoothness", 3.0}, {"samples_per_period", 8}, {"trend_threshold", 1e-3},
                {"cfl_safety", 0.45}};
    if (e == "local-smoothing")
        return {{"trials", 20},   {"gamma", 1.0},   {"horizon", 8.0},     {"samples", 64},
                {"extent", 6.0},  {"points", 32},   {"support", 1.5},     {"smoothness", 2.0},
                {"cutoff", cutoff_section()}};
    if (e == "strichartz")
        return {{"p", "8"},         {"q", "8"},          {"gamma", "1"},       {"trials", 20},
                {"horizon", 16.0},  {"support", 2.0},    {"smoothness", 2.0}, {"snapshot_every", 4},
                {"cutoff", {{"inner", 1.5}, {"outer", 2.0}}}};
    return nullptr;
}

std::string join_path(const std::string& base, const std::string& key)
{
    return base.empty() ? key : base + "." + key;
}

std::string type_name(const json& j)
{
    if (j.is_boolean()) return "boolean";
    if (j.is_number_integer()) return "integer";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_array()) return "array";
    if (j.is_object()) return "object";
    return "null";
}

bool compatible(const json& def, const json& v)
{
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_number_integer()) return v.is_number_integer();
    if (def.is_number()) return v.is_number();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) return v.is_array();
    if (def.is_object()) return v.is_object();
    return false;
}

// Overlays doc onto out (already holding the defaults), recording every
// unknown key and type mismatch.
void merge(json& out, const json& doc, const std::string& path, std::vector<std::string>& errors)
{
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string p = join_path(path, it.key());
        if (!out.contains(it.key())) {
            errors.push_back(p + ": unknown key");
            continue;
        }
        json& slot = out[it.key()];
        if (!compatible(slot, it.value())) {
            errors.push_back(p + ": expected " + type_name(slot) + ", got " + type_name(it.value()));
            continue;
        }
        if (slot.is_object())
            merge(slot, it.value(), p, errors);
        else
            slot = it.value();
    }
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

void apply_override(json& doc, const json& defaults, const std::string& assignment, std::vector<std::string>& errors)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        errors.push_back("--set " + assignment + ": expected key=value");
        return;
    }
    const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
    const json* def = &defaults;
    json* slot = &doc;
    const auto parts = split(key, '.');
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!def->is_object() || !def->contains(parts[i])) {
            errors.push_back("--set " + key + ": unknown key");
            return;
        }
        def = &(*def)[parts[i]];
        if (!slot->is_object()) *slot = json::object();
        slot = &(*slot)[parts[i]];
    }
    if (def->is_string()) {
        *slot = raw;
        return;
    }
    try {
        *slot = json::parse(raw);
    } catch (const json::parse_error&) {
        *slot = raw;
    }
}

class Checker {
public:
    Checker(const json& root, std::vector<std::string>& errors) : root_(root), errors_(errors) {}

    const json& at(const std::string& path) const
    {
        const json* j = &root_;
        for (const auto& p : split(path, '.')) j = &(*j)[p];
        return *j;
    }
    void fail(const std::string& path, const std::string& message) { errors_.push_back(path + ": " + message); }

    void positive(const std::string& path)
    {
        if (!(at(path).get<double>() > 0.0)) fail(path, "must be positive");
    }
    void nonnegative(const std::string& path)
    {
        if (!(at(path).get<double>() >= 0.0)) fail(path, "must be nonnegative");
    }
    void at_least(const std::string& path, long long lo)
    {
        if (at(path).get<long long>() < lo) fail(path, "must be at least " + std::to_string(lo));
    }
    void one_of(const std::string& path, std::initializer_list<const char*> options)
    {
        const auto v = at(path).get<std::string>();
        std::string list;
        for (const char* o : options) {
            if (v == o) return;
            list += (list.empty() ? "" : ", ") + std::string(o);
        }
        fail(path, "must be one of " + list + ", got \"" + v + "\"");
    }
    void vector_of(const std::string& path, std::size_t size, bool positive_entries)
    {
        const json& a = at(path);
        if (size && a.size() != size) fail(path, "must have " + std::to_string(size) + " entries");
        if (!size && a.empty()) fail(path, "must not be empty");
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_number())
                fail(path + "[" + std::to_string(i) + "]", "expected number, got " + type_name(a[i]));
            else if (positive_entries && !(a[i].get<double>() > 0.0))
                fail(path + "[" + std::to_string(i) + "]", "must be positive");
        }
    }
    void cutoff(const std::string& path)
    {
        nonnegative(path + ".inner");
        nonnegative(path + ".outer");
        const double in = at(path + ".inner").get<double>(), out = at(path + ".outer").get<double>();
        if ((in > 0.0 || out > 0.0) && !(out > in)) fail(path, "outer must exceed inner (both 0 selects rho + 1/2, rho + 1)");
    }

private:
    const json& root_;
    std::vector<std::string>& errors_;
};

void check_multiplier(Checker& c, const std::string& path, bool allow_none)
{
    if (allow_none)
        c.one_of(path + ".kind", {"rational", "odd", "constant", "none"});
    else
        c.one_of(path + ".kind", {"rational", "odd", "constant"});
    c.nonnegative(path + ".epsilon");
    c.positive(path + ".scale");
}

void check_semantics(const json& r, const std::string& e, std::vector<std::string>& errors)
{
    Checker c(r, errors);
    if (r["schema_version"].get<long long>() != config_schema_version)
        c.fail("schema_version", "unsupported version " + r["schema_version"].dump() + " (expected " +
                                     std::to_string(config_schema_version) + ")");
    c.at_least("seed", 0);
    c.at_least("threads", 1);

    c.one_of("metric.kind", {"flat", "bump", "frozen-tail"});
    const int n = r["metric"]["dimension"].get<int>();
    if (n < 3 || n % 2 == 0) c.fail("metric.dimension", "n must be odd and >= 3, got " + std::to_string(n));
    c.positive("metric.rho");
    c.positive("metric.period");
    c.nonnegative("metric.freeze_time");
    const json& harmonics = r["metric"]["harmonics"];
    for (std::size_t i = 0; i < harmonics.size(); ++i) {
        const std::string p = "metric.harmonics[" + std::to_string(i) + "]";
        const json& h = harmonics[i];
        if (!h.is_object()) {
            c.fail(p, "expected object with amplitude and frequency");
            continue;
        }
        for (auto it = h.begin(); it != h.end(); ++it)
            if (it.key() != "amplitude" && it.key() != "frequency") c.fail(p + "." + it.key(), "unknown key");
        if (!h.contains("amplitude") || !h["amplitude"].is_number()) c.fail(p + ".amplitude", "expected number");
        if (!h.contains("frequency") || !h["frequency"].is_number_integer() || h["frequency"].get<int>() < 1)
            c.fail(p + ".frequency", "expected integer >= 1");
    }

    c.one_of("grid.kind", {"radial", "cartesian"});
    c.positive("grid.extent");
    c.at_least("grid.points", 8);

    const std::string s = e + ".";
    if (e == "check-metric") {
        c.at_least(s + "t_points", 1);
        c.at_least(s + "x_points", 2);
        c.nonnegative(s + "x_extent");
        check_multiplier(c, s + "multiplier", true);
    } else if (e == "trace-rays") {
        c.at_least(s + "count", 1);
        c.positive(s + "periods");
        c.positive(s + "tol");
        c.nonnegative(s + "launch_radius");
        if (!(r[e]["escape_factor"].get<double>() > 1.0)) c.fail(s + "escape_factor", "must exceed 1");
    } else if (e == "certify-nontrapping") {
        for (const char* k : {"shells", "directions", "times", "t_points"}) c.at_least(s + k, 1);
        c.at_least(s + "x_points", 2);
        c.positive(s + "tol");
        c.nonnegative(s + "horizon");
        if (!(r[e]["radius_factor"].get<double>() > 1.0)) c.fail(s + "radius_factor", "must exceed 1");
    } else if (e == "evolve") {
        c.positive(s + "support");
        c.positive(s + "smoothness");
        c.positive(s + "t_final");
        c.at_least(s + "samples", 1);
        c.nonnegative(s + "region_radius");
    } else if (e == "wkb-compare") {
        c.vector_of(s + "lambdas", 0, true);
        c.nonnegative(s + "window");
        c.positive(s + "extent");
        c.at_least(s + "points", 8);
        c.at_least(s + "stride", 1);
        c.vector_of(s + "eta", static_cast<std::size_t>(n), false);
        c.vector_of(s + "centre", static_cast<std::size_t>(n), false);
        c.positive(s + "width");
        c.at_least(s + "time_samples", 1);
        c.nonnegative(s + "floor");
        double norm = 0.0;
        for (const auto& v : r[e]["eta"])
            if (v.is_number()) norm += v.get<double>() * v.get<double>();
        if (norm == 0.0) c.fail(s + "eta", "must be nonzero");
    } else if (e == "floquet-spectrum") {
        c.at_least(s + "periods", 0);
        c.at_least(s + "eigenvalues", 1);
        c.positive(s + "tol");
        c.at_least(s + "max_iters", 1);
    } else if (e == "decay-fit") {
        c.positive(s + "support");
        c.positive(s + "smoothness");
        c.positive(s + "horizon");
        c.nonnegative(s + "window_min");
        c.nonnegative(s + "window_max");
        c.nonnegative(s + "sample_interval");
        const double lo = r[e]["window_min"].get<double>(), hi = r[e]["window_max"].get<double>();
        if (hi > 0.0 && !(hi > lo)) c.fail(s + "window_max", "must exceed window_min (0 selects the default window)");
        c.cutoff(s + "cutoff");
    } else if (e == "local-energy-l2") {
        c.at_least(s + "trials", 1);
        c.positive(s + "horizon");
        c.positive(s + "support");
        c.positive(s + "smoothness");
        c.nonnegative(s + "sample_interval");
        c.cutoff(s + "cutoff");
    } else if (e == "identity-8-5") {
        c.positive(s + "extent");
        const json& pts = r[e]["points"];
        if (pts.size() < 2) c.fail(s + "points", "needs at least 2 grids");
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (!pts[i].is_number_integer() || pts[i].get<int>() < 4)
                c.fail(s + "points[" + std::to_string(i) + "]", "expected integer >= 4");
        c.vector_of(s + "times", 0, false);
        check_multiplier(c, s + "multiplier", false);
        c.one_of(s + "solution", {"gaussian", "plane-wave"});
    } else if (e == "energy-bound") {
        c.at_least(s + "trials", 1);
        c.positive(s + "periods");
        c.positive(s + "support");
        c.positive(s + "smoothness");
        c.at_least(s + "samples_per_period", 1);
        c.positive(s + "trend_threshold");
        if (!(c.at(s + "cfl_safety").get<double>() > 0.0 && c.at(s + "cfl_safety").get<double>() <= 1.0))
            c.fail(s + "cfl_safety", "must lie in (0, 1]");
    } else if (e == "local-smoothing") {
        c.at_least(s + "trials", 1);
        c.positive(s + "horizon");
        c.at_least(s + "samples", 2);
        c.positive(s + "extent");
        c.at_least(s + "points", 8);
        c.positive(s + "support");
        c.positive(s + "smoothness");
        c.cutoff(s + "cutoff");
    } else if (e == "strichartz") {
        c.at_least(s + "trials", 1);
        c.positive(s + "horizon");
        c.positive(s + "support");
        c.positive(s + "smoothness");
        c.at_least(s + "snapshot_every", 1);
        c.cutoff(s + "cutoff");
        StrichartzTriple t;
        t.n = n;
        bool parsed = true;
        for (const char* k : {"p", "q", "gamma"}) {
            try {
                const Exponent x = Exponent::parse(r[e][k].get<std::string>());
                (std::string(k) == "p" ? t.p : std::string(k) == "q" ? t.q : t.gamma) = x;
            } catch (const Error& err) {
                c.fail(s + k, err.what());
                parsed = false;
            }
        }
        if (parsed && n >= 3 && n % 2 == 1) {
            const auto v = check_admissibility(t, AdmissibilityRule::perturbed_1_4);
            if (!v.passed)
                c.fail(e, "(p, q, gamma, n) = (" + t.p.str() + ", " + t.q.str() + ", " + t.gamma.str() + ", " +
                              std::to_string(n) + ") is not admissible: violates " + v.binding_constraint);
        }
    }
}

} // namespace

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names = {
        "check-metric", "trace-rays",      "certify-nontrapping", "evolve",       "wkb-compare",     "floquet-spectrum",
        "decay-fit",    "local-energy-l2", "identity-8-5",        "energy-bound", "local-smoothing", "strichartz"};
    return names;
}

json default_config(const std::string& experiment)
{
    const json section = experiment_defaults(experiment);
    if (section.is_null()) throw ValidationError("experiment: unknown experiment \"" + experiment + "\"");
    json j = {{"schema_version", config_schema_version},
              {"experiment", experiment},
              {"seed", 1},
              {"threads", 1},
              {"metric",
               {{"kind", "bump"},
                {"dimension", 3},
                {"epsilon", 0.1},
                {"rho", 1.0},
                {"period", 4.0},
                {"harmonics", json::array({{{"amplitude", 0.5}, {"frequency", 1}}})},
                {"freeze_time", 1.0}}},
              {"grid", {{"kind", "radial"}, {"extent", 24.0}, {"points", 1201}}}};
    // 50 periods at unit speed need room for the waves to travel without reaching the boundary
    if (experiment == "energy-bound") j["grid"] = {{"kind", "radial"}, {"extent", 240.0}, {"points", 4801}};
    j[experiment] = section;
    return j;
}

ValidationResult validate(const std::string& text, const std::vector<std::string>& overrides,
                          const std::string& experiment)
{
    ValidationResult out;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        std::string msg = e.what();
        if (const auto pos = msg.find("column"); pos != std::string::npos)
            if (const auto colon = msg.find(": ", pos); colon != std::string::npos) msg = msg.substr(colon + 2);
        out.errors.push_back("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
        return out;
    }
    if (!doc.is_object()) {
        out.errors.push_back("config: top level must be an object");
        return out;
    }

    std::string name = experiment;
    if (name.empty()) {
        if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
            out.errors.push_back("experiment: missing");
            return out;
        }
        name = doc["experiment"].get<std::string>();
    } else if (doc.contains("experiment") && doc["experiment"] != name) {
        out.errors.push_back("experiment: config names " + doc["experiment"].dump() + " but \"" + name +
                             "\" was requested");
    }
    if (experiment_defaults(name).is_null()) {
        std::string list;
        for (const auto& n : experiment_names()) list += (list.empty() ? "" : ", ") + n;
        out.errors.push_back("experiment: unknown experiment \"" + name + "\" (expected one of " + list + ")");
        return out;
    }
    doc["experiment"] = name;

    json resolved = default_config(name);
    for (const auto& o : overrides) apply_override(doc, resolved, o, out.errors);
    // mistyped keys keep their defaults so the remaining checks still run
    merge(resolved, doc, "", out.errors);
    check_semantics(resolved, name, out.errors);
    if (out.errors.empty()) {
        try {
            build_metric(resolved);
        } catch (const Error& e) {
            out.errors.push_back(std::string("metric: ") + e.what());
        }
        try {
            build_grid(resolved).validate();
        } catch (const Error& e) {
            out.errors.push_back(std::string("grid: ") + e.what());
        }
    }
    if (out.errors.empty()) out.config = ExperimentConfig{name, resolved};
    return out;
}

ExperimentConfig validate_or_throw(const std::string& text, const std::vector<std::string>& overrides,
                                   const std::string& experiment)
{
    auto r = validate(text, overrides, experiment);
    if (r.ok()) return *r.config;
    std::string msg = "invalid config:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw ValidationError(msg);
}

Metric build_metric(const json& resolved)
{
    const json& m = resolved.at("metric");
    const std::string kind = m.at("kind").get<std::string>();
    const double rho = m.at("rho").get<double>(), period = m.at("period").get<double>();
    if (kind == "flat") return flat_metric(rho, period);
    std::vector<Harmonic> harmonics;
    for (const auto& h : m.at("harmonics"))
        harmonics.push_back({h.at("amplitude").get<double>(), h.at("frequency").get<int>()});
    Metric bump = build_radial_bump(m.at("epsilon").get<double>(), rho, period, harmonics);
    if (kind == "bump") return bump;
    if (kind == "frozen-tail") return build_frozen_tail(bump, m.at("freeze_time").get<double>(), period);
    throw ValidationError("metric.kind: unknown kind \"" + kind + "\"");
}

Grid build_grid(const json& resolved)
{
    const json& g = resolved.at("grid");
    const int n = resolved.at("metric").at("dimension").get<int>();
    const double extent = g.at("extent").get<double>();
    const int points = g.at("points").get<int>();
    return g.at("kind") == "radial" ? Grid::radial_grid(n, extent, points) : Grid::cartesian(n, extent, points);
}

} // namespace wavelab
