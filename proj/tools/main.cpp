#include <cstdlib>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"

#include "tlalpan/io_util.hpp"
#include "tlalpan/scenario.hpp"

namespace {

using tlalpan::scenario::ExperimentConfig;
using tlalpan::scenario::ExperimentKind;
using tlalpan::scenario::TableFormat;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

std::string default_out() {
    const char* env = std::getenv("TLALPAN_OUT");
    return env ? env : "out";
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
    auto* copt = cmd->add_option("--config", args.config_path, "experiment config (JSON)");
    if (needs_config) copt->required();
    cmd->add_option("--seed", args.seed, "RNG seed (overrides config)")
        ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_option("--out", args.out_dir, "output directory (default $TLALPAN_OUT or ./out)");
    cmd->add_option("--format", args.format, "table format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
}

std::uint64_t resolve_seed(CommonArgs& args, ExperimentConfig& cfg) {
    if (args.seed_given) {
        cfg.seed = args.seed;
        cfg.raw["seed"] = args.seed;
    } else if (!cfg.raw.contains("seed")) {
        std::random_device rd;
        const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        cfg.seed = s;
        cfg.raw["seed"] = s;
        std::cout << "auto-seed: " << s << " (pass --seed " << s << " to reproduce)\n";
    }
    return cfg.seed;
}

int run_kind(ExperimentKind expect, CommonArgs& args, bool batch_mode = false) {
    ExperimentConfig cfg = ExperimentConfig::from_file(args.config_path);
    if (cfg.kind != expect) {
        std::cerr << "error: config kind '" << to_string(cfg.kind) << "' does not match subcommand ('"
                  << to_string(expect) << "')\n";
        return 1;
    }
    resolve_seed(args, cfg);
    const auto viols = tlalpan::scenario::validate(cfg);
    bool fatal = false;
    for (const auto& v : viols) {
        std::cerr << (v.warning ? "warning: " : "error: ") << v.field << ": " << v.message << "\n";
        fatal |= !v.warning;
    }
    if (fatal) return 1;
    const TableFormat fmt = args.format == "json" ? TableFormat::Json : TableFormat::Csv;
    const std::string out = args.out_dir.empty() ? default_out() : args.out_dir;
    const auto manifest = batch_mode
                              ? tlalpan::scenario::run_doubleslit_batches(cfg, out, fmt)
                              : tlalpan::scenario::run_experiment(cfg, out, fmt);
    std::cout << "kind: " << manifest.kind << "\nseed: " << manifest.seed << "\nout: " << out
              << "\nfiles:\n";
    for (const auto& f : manifest.files)
        std::cout << "  " << f.name << "  fnv1a64=" << f.digest << "  bytes=" << f.bytes << "\n";
    std::cout << "summary: " << manifest.summary.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tlalpan-lab: time-symmetric quantum dynamics experiments"};
    app.require_subcommand(1);

    CommonArgs a_mosh, a_abl, a_ds, a_echo, a_cs, a_sweep, a_fit, a_plot;

    auto* c_mosh = app.add_subcommand("moshinsky", "shutter fringes over a kappa sweep");
    add_common(c_mosh, a_mosh, true);
    auto* c_abl = app.add_subcommand("abl", "pre/post-selection consistency sweep");
    add_common(c_abl, a_abl, true);
    auto* c_ds = app.add_subcommand("doubleslit", "tagged double-slit screen histograms");
    add_common(c_ds, a_ds, true);
    auto* c_echo = app.add_subcommand("echo", "cavity echo comparison");
    add_common(c_echo, a_echo, true);
    auto* c_cs = app.add_subcommand("coupled-slit", "cavity-marked slit visibility");
    add_common(c_cs, a_cs, true);
    auto* c_sweep = app.add_subcommand("sweep", "double-slit visibility versus chi");
    add_common(c_sweep, a_sweep, true);

    auto* c_fit = app.add_subcommand("fit", "fit scaling laws to a sweep CSV");
    std::string fit_csv;
    int fit_bootstrap = 200;
    c_fit->add_option("sweep", fit_csv, "sweep CSV (columns chi,visibility,O,tau_rc)")->required();
    c_fit->add_option("--bootstrap", fit_bootstrap, "bootstrap resamples");
    add_common(c_fit, a_fit, false);

    auto* c_plot = app.add_subcommand("plot", "emit gnuplot-ready flat files from results");
    std::string plot_dir;
    c_plot->add_option("results", plot_dir, "results directory to convert")->required();
    add_common(c_plot, a_plot, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (c_mosh->parsed()) return run_kind(ExperimentKind::MoshinskyFringes, a_mosh);
        if (c_abl->parsed()) return run_kind(ExperimentKind::AblCheck, a_abl);
        if (c_ds->parsed()) return run_kind(ExperimentKind::ChiSweep, a_ds, true);
        if (c_echo->parsed()) return run_kind(ExperimentKind::CavityEcho, a_echo);
        if (c_cs->parsed()) return run_kind(ExperimentKind::CoupledSlit, a_cs);
        if (c_sweep->parsed()) return run_kind(ExperimentKind::ChiSweep, a_sweep);
        if (c_fit->parsed()) {
            if (!a_fit.seed_given) a_fit.seed = 0x746c616c70616eULL;
            const std::string out = a_fit.out_dir.empty() ? default_out() : a_fit.out_dir;
            const auto m = tlalpan::scenario::run_fit(fit_csv, out, fit_bootstrap, a_fit.seed);
            std::cout << m.summary.dump(1) << "\n";
            return 0;
        }
        if (c_plot->parsed()) {
            const std::string out = a_plot.out_dir.empty() ? default_out() : a_plot.out_dir;
            const auto files = tlalpan::scenario::emit_plot_data(plot_dir, out);
            for (const auto& f : files) std::cout << f.string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
