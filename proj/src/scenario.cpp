#include "tlalpan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tlalpan/collapse.hpp"
#include "tlalpan/doubleslit.hpp"
#include "tlalpan/echo.hpp"
#include "tlalpan/io_util.hpp"
#include "tlalpan/moshinsky.hpp"
#include "tlalpan/twotime.hpp"

namespace tlalpan::scenario {

using nlohmann::json;

ExperimentKind kind_from_string(const std::string& s) {
    if (s == "moshinsky-fringes") return ExperimentKind::MoshinskyFringes;
    if (s == "cavity-echo") return ExperimentKind::CavityEcho;
    if (s == "coupled-slit") return ExperimentKind::CoupledSlit;
    if (s == "chi-sweep") return ExperimentKind::ChiSweep;
    if (s == "abl-check") return ExperimentKind::AblCheck;
    throw std::invalid_argument("unknown experiment kind: " + s);
}

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::MoshinskyFringes: return "moshinsky-fringes";
        case ExperimentKind::CavityEcho: return "cavity-echo";
        case ExperimentKind::CoupledSlit: return "coupled-slit";
        case ExperimentKind::ChiSweep: return "chi-sweep";
        case ExperimentKind::AblCheck: return "abl-check";
    }
    return "?";
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot open config: " + p.string());
    json j;
    f >> j;
    return from_json(j);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.raw = j;
    if (j.contains("kind") && j["kind"].is_string())
        cfg.kind = kind_from_string(j["kind"].get<std::string>());
    if (j.contains("seed") && j["seed"].is_number())
        cfg.seed = j["seed"].get<std::uint64_t>();
    return cfg;
}

// ---------------------------------------------------------------------------
// Validation. Unknown keys are errors: a silently ignored physics parameter
// is the costliest failure mode of a config format.

namespace {

struct Schema {
    // key -> {required, subkeys (empty means scalar/array leaf)}
    struct Node {
        bool required = false;
        std::set<std::string> subkeys;
        std::set<std::string> required_subkeys;
    };
    std::map<std::string, Node> keys;
};

Schema schema_for(ExperimentKind k) {
    Schema s;
    auto leaf = [](bool req) { return Schema::Node{req, {}, {}}; };
    s.keys["kind"] = leaf(true);
    s.keys["seed"] = leaf(true);
    s.keys["notes"] = leaf(false);
    switch (k) {
        case ExperimentKind::MoshinskyFringes:
            s.keys["scenario"] = {true,
                                  {"k", "m", "hbar", "tau", "kappa_c", "alpha_width_rel"},
                                  {"tau"}};
            s.keys["kappas"] = leaf(true);
            s.keys["x0"] = leaf(true);
            s.keys["profile"] = {false, {"t_max", "n_t", "x_max", "n_x"}, {}};
            s.keys["boundary_taus"] = leaf(false);
            s.keys["epsilon_l1"] = leaf(false);
            break;
        case ExperimentKind::CavityEcho:
        case ExperimentKind::CoupledSlit:
            s.keys["rectangle"] = {true, {"width", "height"}, {"width", "height"}};
            s.keys["stadium"] = {true, {"straight", "radius", "height"}, {"straight", "radius"}};
            s.keys["spacing"] = leaf(true);
            s.keys["epsilon"] = leaf(true);
            s.keys["packet"] = {false, {"width_spacings", "band_fraction"}, {}};
            s.keys["times"] = {true, {"t_max", "n_t"}, {"t_max", "n_t"}};
            break;
        case ExperimentKind::ChiSweep:
            s.keys["geometry"] = {false,
                                  {"slit_separation", "slit_width", "wavelength",
                                   "screen_distance", "screen_half_extent", "n_bins"},
                                  {}};
            s.keys["chis"] = leaf(false);
            s.keys["n_chi"] = leaf(false);
            s.keys["n_events"] = leaf(true);
            break;
        case ExperimentKind::AblCheck:
            s.keys["dims"] = leaf(false);
            s.keys["n_trials"] = leaf(true);
            break;
    }
    return s;
}

void check_positive(const json& j, const std::string& path, const std::string& key,
                    std::vector<Violation>& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number() || !(j[key].get<double>() > 0.0))
        out.push_back({path + key, "must be a positive number", false});
}

}  // namespace

std::vector<Violation> validate(const ExperimentConfig& cfg) {
    std::vector<Violation> out;
    const json& j = cfg.raw;
    if (!j.is_object()) {
        out.push_back({"", "config must be a JSON object", false});
        return out;
    }
    if (!j.contains("kind") || !j["kind"].is_string()) {
        out.push_back({"kind", "missing or not a string", false});
        return out;
    }
    ExperimentKind kind;
    try {
        kind = kind_from_string(j["kind"].get<std::string>());
    } catch (const std::exception& e) {
        out.push_back({"kind", e.what(), false});
        return out;
    }
    const Schema schema = schema_for(kind);

    for (const auto& [key, val] : j.items()) {
        auto it = schema.keys.find(key);
        if (it == schema.keys.end()) {
            out.push_back({key, "unknown key", false});
            continue;
        }
        if (!it->second.subkeys.empty()) {
            if (!val.is_object()) {
                out.push_back({key, "must be an object", false});
                continue;
            }
            for (const auto& [sk, sv] : val.items()) {
                (void)sv;
                if (!it->second.subkeys.count(sk))
                    out.push_back({key + "." + sk, "unknown key", false});
            }
            for (const auto& rq : it->second.required_subkeys)
                if (!val.contains(rq)) out.push_back({key + "." + rq, "missing required key", false});
        }
    }
    for (const auto& [key, node] : schema.keys)
        if (node.required && !j.contains(key))
            out.push_back({key, "missing required key", false});
    if (!j.contains("seed") || !j["seed"].is_number_unsigned())
        out.push_back({"seed", "missing or not an unsigned integer", false});

    // kind-specific value checks
    switch (kind) {
        case ExperimentKind::MoshinskyFringes: {
            if (j.contains("scenario") && j["scenario"].is_object()) {
                const json& sc = j["scenario"];
                for (const char* k : {"k", "m", "hbar", "tau", "kappa_c", "alpha_width_rel"})
                    check_positive(sc, "scenario.", k, out);
            }
            if (j.contains("kappas") &&
                (!j["kappas"].is_array() || j["kappas"].empty()))
                out.push_back({"kappas", "must be a non-empty array", false});
            if (j.contains("x0") && (!j["x0"].is_number() || j["x0"].get<double>() < 0.0))
                out.push_back({"x0", "must be a non-negative number", false});
            break;
        }
        case ExperimentKind::CavityEcho:
        case ExperimentKind::CoupledSlit: {
            check_positive(j, "", "spacing", out);
            if (j.contains("epsilon") &&
                (!j["epsilon"].is_number() || j["epsilon"].get<double>() < 0.0))
                out.push_back({"epsilon", "must be a non-negative number", false});
            if (j.contains("rectangle") && j["rectangle"].is_object()) {
                check_positive(j["rectangle"], "rectangle.", "width", out);
                check_positive(j["rectangle"], "rectangle.", "height", out);
            }
            if (j.contains("stadium") && j["stadium"].is_object()) {
                const json& st = j["stadium"];
                check_positive(st, "stadium.", "straight", out);
                if (st.contains("radius")) {
                    if (!st["radius"].is_number() || st["radius"].get<double>() < 0.0) {
                        out.push_back({"stadium.radius", "must be a non-negative number", false});
                    } else if (st["radius"].get<double>() == 0.0) {
                        if (!st.contains("height") || !(st["height"].is_number() &&
                                                        st["height"].get<double>() > 0.0))
                            out.push_back({"stadium.height",
                                           "required and positive when radius is 0", false});
                        out.push_back({"stadium.radius",
                                       "zero radius: stadium degenerates to a rectangle", true});
                    }
                }
            }
            break;
        }
        case ExperimentKind::ChiSweep: {
            if (j.contains("n_events") && (!j["n_events"].is_number_integer() ||
                                           j["n_events"].get<std::int64_t>() < 1))
                out.push_back({"n_events", "must be a positive integer", false});
            if (j.contains("chis")) {
                if (!j["chis"].is_array() || j["chis"].empty()) {
                    out.push_back({"chis", "must be a non-empty array", false});
                } else {
                    for (const auto& c : j["chis"])
                        if (!c.is_number() || c.get<double>() < 0.0 || c.get<double>() > 1.0) {
                            out.push_back({"chis", "entries must lie in [0,1]", false});
                            break;
                        }
                }
            }
            if (j.contains("geometry") && j["geometry"].is_object()) {
                const json& g = j["geometry"];
                for (const char* k :
                     {"slit_separation", "slit_width", "wavelength", "screen_distance"})
                    check_positive(g, "geometry.", k, out);
            }
            break;
        }
        case ExperimentKind::AblCheck: {
            if (j.contains("n_trials") && (!j["n_trials"].is_number_integer() ||
                                           j["n_trials"].get<std::int64_t>() < 1))
                out.push_back({"n_trials", "must be a positive integer", false});
            if (j.contains("dims")) {
                if (!j["dims"].is_array() || j["dims"].empty())
                    out.push_back({"dims", "must be a non-empty array", false});
                else
                    for (const auto& d : j["dims"])
                        if (!d.is_number_integer() || d.get<int>() < 2 || d.get<int>() > 64) {
                            out.push_back({"dims", "entries must be integers in [2,64]", false});
                            break;
                        }
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Runners.

namespace {

void require_valid(const ExperimentConfig& cfg) {
    auto viols = validate(cfg);
    std::string msg;
    bool fatal = false;
    for (const auto& v : viols) {
        if (v.warning) continue;
        fatal = true;
        msg += (msg.empty() ? "" : "; ") + v.field + ": " + v.message;
    }
    if (fatal) throw std::invalid_argument("config validation failed: " + msg);
}

struct ArtifactWriter {
    std::filesystem::path dir;
    TableFormat format;
    RunManifest* manifest;

    void table(const std::string& stem, const CsvTable& t) const {
        const bool csv = format == TableFormat::Csv;
        const std::string name = stem + (csv ? ".csv" : ".json");
        const std::string body = csv ? t.to_csv() : t.to_json();
        write_file_atomic(dir / name, body);
        manifest->files.push_back({name, "", body.size()});
    }
    void text(const std::string& name, const std::string& body) const {
        write_file_atomic(dir / name, body);
        manifest->files.push_back({name, "", body.size()});
    }
    void finalize() const {
        for (auto& e : manifest->files) {
            char buf[20];
            std::snprintf(buf, sizeof(buf), "%016llx",
                          static_cast<unsigned long long>(fnv1a64_file(dir / e.name)));
            e.digest = buf;
        }
    }
};

double jget(const json& j, const std::string& key, double dflt) {
    return (j.contains(key) && j[key].is_number()) ? j[key].get<double>() : dflt;
}

json run_moshinsky(const ExperimentConfig& cfg, const ArtifactWriter& w) {
    json summary;
    const json& j = cfg.raw;
    moshinsky::ShutterScenario base;
    if (j.contains("scenario")) {
        const json& sc = j["scenario"];
        base.k = jget(sc, "k", 1.0);
        base.m = jget(sc, "m", 1.0);
        base.hbar = jget(sc, "hbar", 1.0);
        base.tau = jget(sc, "tau", 15.0);
        base.kappa_c = jget(sc, "kappa_c", 1.0);
        base.alpha_width_rel = jget(sc, "alpha_width_rel", 0.05);
    }
    const double x0 = j["x0"].get<double>();
    std::vector<double> kappas = j["kappas"].get<std::vector<double>>();

    moshinsky::SpaceTimeGrid grid;
    grid.x_min = 0.0;
    grid.x_max = jget(j.value("profile", json::object()), "x_max", 40.0);
    grid.n_x = static_cast<int>(jget(j.value("profile", json::object()), "n_x", 65.0));
    grid.t_max = jget(j.value("profile", json::object()), "t_max", 20.0);
    grid.n_t = static_cast<int>(jget(j.value("profile", json::object()), "n_t", 400.0));
    grid.t_min = grid.t_max / grid.n_t;

    const double eps_l1 = jget(j, "epsilon_l1", 1e-2);

    // alpha = 0 baseline profile
    const auto base_field = moshinsky::psi_retarded_field(base, grid);
    const auto base_prof = moshinsky::temporal_profile(base_field, x0);

    CsvTable sweep;
    sweep.columns = {"kappa", "alpha", "fringe_count", "visibility", "l1_gap", "tau_rc"};
    std::vector<moshinsky::TemporalProfile> profs(kappas.size());
    std::vector<double> alphas(kappas.size());
    parallel_for(kappas.size(), [&](std::size_t i) {
        moshinsky::ShutterScenario s = base;
        s.kappa = kappas[i];
        alphas[i] = moshinsky::alpha(s);
        profs[i] = moshinsky::temporal_profile(moshinsky::psi_total(s, grid), x0);
    });
    int drop_index = -1;
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        double l1 = 0.0;
        const double dt = (grid.t_max - grid.t_min) / (grid.n_t - 1);
        for (int it = 0; it < grid.n_t; ++it)
            l1 += std::abs(profs[i].intensity[it] - base_prof.intensity[it]) * dt;
        // retro-coherence time over the configured boundary times
        std::vector<collapse::BoundaryProbeRun> probe;
        std::vector<double> btaus =
            j.contains("boundary_taus") ? j["boundary_taus"].get<std::vector<double>>()
                                        : std::vector<double>{0.25 * grid.t_max, 0.5 * grid.t_max,
                                                              0.75 * grid.t_max};
        for (double tb : btaus) {
            moshinsky::ShutterScenario s = base;
            s.kappa = kappas[i];
            s.tau = tb;
            const auto with = moshinsky::temporal_profile(moshinsky::psi_total(s, grid), x0);
            probe.push_back({tb, with.intensity, base_prof.intensity});
        }
        const double tau_rc = collapse::retro_coherence_time(probe, eps_l1);
        sweep.rows.push_back({kappas[i], alphas[i], static_cast<double>(profs[i].fringes.count),
                              profs[i].fringes.visibility, l1, tau_rc});
        if (drop_index < 0 && profs[i].fringes.count <= base_prof.fringes.count)
            drop_index = static_cast<int>(i);
    }
    w.table("fringe_sweep", sweep);

    // field tables at the sweep endpoints
    for (std::size_t pick : {std::size_t{0}, kappas.size() - 1}) {
        moshinsky::ShutterScenario s = base;
        s.kappa = kappas[pick];
        const auto field = moshinsky::psi_total(s, grid);
        CsvTable ft;
        ft.columns = {"x", "t", "re", "im", "intensity"};
        const auto xs = grid.xs();
        const auto ts = grid.ts();
        for (int it = 0; it < grid.n_t; ++it)
            for (int ix = 0; ix < grid.n_x; ++ix) {
                const auto v = field.at(it, ix);
                ft.rows.push_back({xs[ix], ts[it], v.real(), v.imag(), std::norm(v)});
            }
        std::ostringstream stem;
        stem << "field_kappa_" << pick;
        w.table(stem.str(), ft);
    }

    summary["baseline_fringe_count"] = base_prof.fringes.count;
    summary["x0"] = x0;
    summary["drop_kappa"] = drop_index >= 0 ? json(kappas[drop_index]) : json();
    return summary;
}

json run_cavity_pair(const ExperimentConfig& cfg, const ArtifactWriter& w, bool coupled) {
    json summary;
    const json& j = cfg.raw;
    echo::Rectangle rect{j["rectangle"]["width"].get<double>(),
                         j["rectangle"]["height"].get<double>()};
    echo::Stadium stad;
    stad.straight = j["stadium"]["straight"].get<double>();
    stad.radius = j["stadium"]["radius"].get<double>();
    if (j["stadium"].contains("height")) stad.height = j["stadium"]["height"].get<double>();
    const double spacing = j["spacing"].get<double>();
    const double epsilon = j["epsilon"].get<double>();
    const double width_sp = jget(j.value("packet", json::object()), "width_spacings", 4.0);
    const double band_fr = jget(j.value("packet", json::object()), "band_fraction", 0.35);
    const double t_max = j["times"]["t_max"].get<double>();
    const int n_t = j["times"]["n_t"].get<int>();
    std::vector<double> times(n_t);
    for (int i = 0; i < n_t; ++i) times[i] = t_max * i / (n_t - 1);

    const auto creg = echo::build_cavity(rect, spacing);
    const auto ccha = echo::build_cavity(stad, spacing);
    const auto preg = echo::gaussian_packet(creg, width_sp, band_fr);
    const auto pcha = echo::gaussian_packet(ccha, width_sp, band_fr);

    summary["sites_rectangle"] = creg.n_sites();
    summary["sites_stadium"] = ccha.n_sites();
    summary["epsilon"] = epsilon;

    if (!coupled) {
        const auto er = echo::loschmidt_echo(creg, preg, epsilon, times, cfg.seed);
        const auto es = echo::loschmidt_echo(ccha, pcha, epsilon, times, cfg.seed);
        CsvTable tr, ts_;
        tr.columns = {"t", "value"};
        ts_.columns = {"t", "value"};
        for (int i = 0; i < n_t; ++i) {
            tr.rows.push_back({times[i], er.fidelity[i]});
            ts_.rows.push_back({times[i], es.fidelity[i]});
        }
        w.table("echo_rectangle", tr);
        w.table("echo_stadium", ts_);
        const auto cmp = echo::compare_geometries(er, es);
        summary["rate_rectangle"] = cmp.regular.rate;
        summary["rate_stadium"] = cmp.chaotic.rate;
        summary["ratio"] = cmp.ratio;
        summary["ratio_stderr"] = cmp.ratio_stderr;
        summary["chaotic_faster"] = cmp.chaotic_faster;
        summary["no_decay"] = cmp.no_decay;
    } else {
        const auto vr = echo::coupled_slit_visibility(creg, preg, epsilon, times, cfg.seed);
        const auto vs = echo::coupled_slit_visibility(ccha, pcha, epsilon, times, cfg.seed);
        CsvTable tr, ts_;
        tr.columns = {"t", "value"};
        ts_.columns = {"t", "value"};
        for (int i = 0; i < n_t; ++i) {
            tr.rows.push_back({times[i], vr.visibility[i]});
            ts_.rows.push_back({times[i], vs.visibility[i]});
        }
        w.table("visibility_rectangle", tr);
        w.table("visibility_stadium", ts_);
        summary["avg_v_rectangle"] = vr.time_average;
        summary["avg_v_stadium"] = vs.time_average;
        summary["max_recurrence_rectangle"] = vr.max_recurrence;
        summary["max_recurrence_stadium"] = vs.max_recurrence;
        summary["recurrences_rectangle"] = vr.recurrences_above_half;
        summary["recurrences_stadium"] = vs.recurrences_above_half;
    }
    return summary;
}

doubleslit::SlitGeometry slit_geometry_from(const json& j) {
    doubleslit::SlitGeometry g;
    if (j.contains("geometry")) {
        const json& gj = j["geometry"];
        g.slit_separation = jget(gj, "slit_separation", g.slit_separation);
        g.slit_width = jget(gj, "slit_width", g.slit_width);
        g.wavelength = jget(gj, "wavelength", g.wavelength);
        g.screen_distance = jget(gj, "screen_distance", g.screen_distance);
        g.screen_half_extent = jget(gj, "screen_half_extent", 0.0);
        g.n_bins = static_cast<int>(jget(gj, "n_bins", 512.0));
    }
    return g;
}

std::vector<double> chis_from(const json& j) {
    if (j.contains("chis")) return j["chis"].get<std::vector<double>>();
    const int n = j.contains("n_chi") ? j["n_chi"].get<int>() : 21;
    std::vector<double> chis(n);
    for (int i = 0; i < n; ++i) chis[i] = static_cast<double>(i) / (n - 1);
    return chis;
}

json run_chi_sweep(const ExperimentConfig& cfg, const ArtifactWriter& w) {
    json summary;
    const json& j = cfg.raw;
    const auto g = slit_geometry_from(j);
    const auto chis = chis_from(j);
    const auto n_events = j["n_events"].get<std::uint64_t>();

    const auto curve = doubleslit::visibility_curve(g, chis, n_events, cfg.seed);
    CsvTable ct;
    ct.columns = {"chi", "V", "stderr"};
    for (const auto& p : curve) ct.rows.push_back({p.chi, p.visibility, p.stderr_v});
    w.table("visibility_curve", ct);

    summary["v0_analytic"] = doubleslit::analytic_visibility_v0(g);
    summary["n_events"] = n_events;
    if (curve.size() >= 10) {
        const auto cmp = doubleslit::compare_models(curve, n_events);
        json cj;
        cj["v0_linear"] = cmp.v0_linear;
        cj["rss_linear"] = cmp.rss_linear;
        cj["v0_qti"] = cmp.v0_qti;
        cj["chi_c"] = cmp.chi_c;
        cj["nu"] = cmp.nu;
        cj["rss_qti"] = cmp.rss_qti;
        cj["delta_aic"] = cmp.delta_aic;
        cj["qti_wins"] = cmp.qti_wins;
        cj["n_events_for_3sigma"] = cmp.n_events_for_3sigma;
        w.text("model_comparison.json", cj.dump(1) + "\n");
        summary["qti_wins"] = cmp.qti_wins;
        summary["delta_aic"] = cmp.delta_aic;
    }
    return summary;
}

json run_abl_check(const ExperimentConfig& cfg, const ArtifactWriter& w) {
    json summary;
    const json& j = cfg.raw;
    std::vector<int> dims = j.contains("dims") ? j["dims"].get<std::vector<int>>()
                                               : std::vector<int>{2, 3, 4};
    const int n_trials = j["n_trials"].get<int>();

    CsvTable t;
    t.columns = {"trial", "dim", "abl_sum_dev", "nonsignaling_dev"};
    double worst_sum = 0.0, worst_nonsig = 0.0;
    for (int trial = 0; trial < n_trials; ++trial) {
        const int d = dims[trial % dims.size()];
        const std::uint64_t s = mix_seed(cfg.seed, static_cast<std::uint64_t>(trial));
        std::mt19937_64 rng(s);
        std::normal_distribution<double> gauss;
        auto rand_state = [&] {
            Eigen::VectorXcd v(d);
            for (int i = 0; i < d; ++i) v[i] = std::complex<double>(gauss(rng), gauss(rng));
            return twotime::PureState::normalized(v);
        };
        const auto i0 = rand_state();
        const auto f0 = rand_state();
        const auto u_pre = twotime::UnitaryMatrix::haar_random(d, mix_seed(s, 1));
        const auto u_post = twotime::UnitaryMatrix::haar_random(d, mix_seed(s, 2));
        std::vector<twotime::Projector> projs;
        for (int k = 0; k < d; ++k) projs.push_back(twotime::Projector::onto_basis_state(d, k));

        double sum = 0.0;
        bool compatible = true;
        std::vector<double> dist;
        try {
            dist = twotime::abl_distribution(i0, f0, projs, u_pre, u_post);
        } catch (const std::domain_error&) {
            compatible = false;
        }
        if (compatible)
            for (double p : dist) sum += p;
        const double sum_dev = compatible ? std::abs(sum - 1.0) : 0.0;

        const auto basis_u = twotime::UnitaryMatrix::haar_random(d, mix_seed(s, 3));
        std::vector<twotime::PureState> fb;
        for (int k = 0; k < d; ++k)
            fb.push_back(twotime::PureState::normalized(basis_u.matrix().col(k)));
        const double nonsig = twotime::check_nonsignaling(i0, projs, fb, u_pre, u_post);

        worst_sum = std::max(worst_sum, sum_dev);
        worst_nonsig = std::max(worst_nonsig, nonsig);
        t.rows.push_back({static_cast<double>(trial), static_cast<double>(d), sum_dev, nonsig});
    }
    w.table("abl_trials", t);
    summary["max_abl_sum_deviation"] = worst_sum;
    summary["max_nonsignaling_deviation"] = worst_nonsig;
    summary["n_trials"] = n_trials;
    return summary;
}

void write_manifest(const std::filesystem::path& dir, RunManifest& m) {
    std::sort(m.files.begin(), m.files.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.name < b.name; });
    write_file_atomic(dir / "manifest.json", m.to_json().dump(1) + "\n");
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
    json j;
    j["kind"] = kind;
    j["seed"] = seed;
    j["summary"] = summary;
    j["files"] = json::array();
    for (const auto& f : files) {
        json e;
        e["name"] = f.name;
        e["fnv1a64"] = f.digest;
        e["bytes"] = f.bytes;
        j["files"].push_back(e);
    }
    return j;
}

RunManifest run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                           TableFormat format) {
    require_valid(cfg);
    std::filesystem::create_directories(out_dir);
    RunManifest m;
    const ArtifactWriter w{out_dir, format, &m};
    switch (cfg.kind) {
        case ExperimentKind::MoshinskyFringes: m.summary = run_moshinsky(cfg, w); break;
        case ExperimentKind::CavityEcho: m.summary = run_cavity_pair(cfg, w, false); break;
        case ExperimentKind::CoupledSlit: m.summary = run_cavity_pair(cfg, w, true); break;
        case ExperimentKind::ChiSweep: m.summary = run_chi_sweep(cfg, w); break;
        case ExperimentKind::AblCheck: m.summary = run_abl_check(cfg, w); break;
    }
    m.kind = to_string(cfg.kind);
    m.seed = cfg.seed;
    w.finalize();
    write_manifest(out_dir, m);
    return m;
}

RunManifest run_doubleslit_batches(const ExperimentConfig& cfg,
                                   const std::filesystem::path& out_dir, TableFormat format) {
    if (cfg.kind != ExperimentKind::ChiSweep)
        throw std::invalid_argument("doubleslit expects a chi-sweep config");
    require_valid(cfg);
    std::filesystem::create_directories(out_dir);
    RunManifest m;
    ArtifactWriter w{out_dir, format, &m};
    const auto g = slit_geometry_from(cfg.raw);
    const auto chis = chis_from(cfg.raw);
    const auto n_events = cfg.raw["n_events"].get<std::uint64_t>();
    json batches = json::array();
    for (std::size_t i = 0; i < chis.size(); ++i) {
        const auto b = doubleslit::simulate_batch(g, chis[i], n_events, mix_seed(cfg.seed, i));
        CsvTable t;
        t.columns = {"bin_center", "count"};
        for (int bin = 0; bin < g.n_bins; ++bin)
            t.rows.push_back({b.bin_centers[bin], b.screen.counts[bin]});
        std::ostringstream stem;
        stem << "screen_chi_" << i;
        w.table(stem.str(), t);
        const auto est = doubleslit::fit_visibility(g, b.screen);
        json bj;
        bj["chi"] = chis[i];
        bj["n_tagged"] = b.n_tagged;
        bj["visibility"] = est.v;
        bj["stderr"] = est.stderr_v;
        batches.push_back(bj);
    }
    m.summary["batches"] = batches;
    m.kind = to_string(cfg.kind);
    m.seed = cfg.seed;
    w.finalize();
    write_manifest(out_dir, m);
    return m;
}

RunManifest run_fit(const std::filesystem::path& sweep_csv, const std::filesystem::path& out_dir,
                    int bootstrap_resamples, std::uint64_t seed) {
    const CsvTable t = CsvTable::from_csv_file(sweep_csv);
    const std::vector<std::string> want = {"chi", "visibility", "O", "tau_rc"};
    std::vector<int> col(want.size(), -1);
    for (std::size_t w_ = 0; w_ < want.size(); ++w_)
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            if (t.columns[c] == want[w_]) col[w_] = static_cast<int>(c);
    for (std::size_t w_ = 0; w_ < want.size(); ++w_)
        if (col[w_] < 0)
            throw std::invalid_argument("fit: sweep csv missing column '" + want[w_] + "'");

    std::vector<collapse::OrderParameters> sweep;
    for (const auto& r : t.rows)
        sweep.push_back({r[col[0]], r[col[2]], r[col[3]], r[col[1]]});

    collapse::ScalingFitOptions opts;
    opts.bootstrap_resamples = bootstrap_resamples;
    opts.bootstrap_seed = seed;
    const auto fit = collapse::fit_scaling(sweep, opts);

    std::filesystem::create_directories(out_dir);
    RunManifest m;
    ArtifactWriter w{out_dir, TableFormat::Csv, &m};
    json fj;
    fj["chi_c"] = fit.chi_c;
    fj["beta"] = fit.beta;
    fj["nu"] = fit.nu;
    fj["gamma"] = fit.gamma;
    fj["v0"] = fit.v0;
    fj["amp_o"] = fit.amp_o;
    fj["amp_tau"] = fit.amp_tau;
    fj["cost"] = fit.cost;
    fj["residual_v"] = fit.residual_v;
    fj["residual_o"] = fit.residual_o;
    fj["residual_tau"] = fit.residual_tau;
    fj["converged"] = fit.converged;
    auto ci = [](const collapse::Interval& iv) { return json{{"lo", iv.lo}, {"hi", iv.hi}}; };
    fj["ci"]["chi_c"] = ci(fit.ci_chi_c);
    fj["ci"]["beta"] = ci(fit.ci_beta);
    fj["ci"]["nu"] = ci(fit.ci_nu);
    fj["ci"]["gamma"] = ci(fit.ci_gamma);
    fj["ci"]["v0"] = ci(fit.ci_v0);
    w.text("fit.json", fj.dump(1) + "\n");
    m.kind = "fit";
    m.seed = seed;
    m.summary = fj;
    w.finalize();
    write_manifest(out_dir, m);
    return m;
}

std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& results_dir,
                                                  const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(results_dir))
        throw std::invalid_argument("plot: results directory does not exist: " +
                                    results_dir.string());
    std::vector<fs::path> written;
    std::vector<fs::path> inputs;
    for (const auto& entry : fs::directory_iterator(results_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            inputs.push_back(entry.path());
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty())
        throw std::invalid_argument("plot: no csv result files found in " + results_dir.string());
    fs::create_directories(out_dir);
    for (const auto& p : inputs) {
        const CsvTable t = CsvTable::from_csv_file(p);
        const fs::path out = out_dir / (p.stem().string() + ".dat");
        write_file_atomic(out, t.to_plot());
        written.push_back(out);
    }
    return written;
}

}  // namespace tlalpan::scenario
