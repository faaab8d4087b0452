#include <scumlab/scumlab.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

using namespace scum::harness;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    std::string check = "mgf";
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "experiment config (JSON)")->required()->envname("SCUMLAB_CONFIG");
    sub->add_option("--seed", f.seed, "master seed")->envname("SCUMLAB_SEED");
    sub->add_option("--workers", f.workers, "worker threads")->check(CLI::Range(1u, 256u))->envname("SCUMLAB_WORKERS");
    sub->add_option("--out", f.out, "output directory")->envname("SCUMLAB_OUT");
}

json load_with_overrides(const Flags& f) {
    json doc = load_json(f.config);
    if (!doc.is_object()) throw scum::ConfigError("config root must be an object");
    if (f.seed) doc["seed"] = *f.seed;
    if (f.workers) doc["workers"] = *f.workers;
    if (f.out) doc["output"] = *f.out;
    return doc;
}

int run_subcommand(const std::string& sub, const Flags& f) {
    if (sub == "validate") {
        const auto d = validate(load_with_overrides(f));
        if (d.empty()) {
            std::cout << "config is valid\n";
            return 0;
        }
        for (const auto& m : d) std::cerr << "error: " << m << "\n";
        return 1;
    }
    std::string hint = sub;
    if (sub == "gcb") hint = f.check == "birkhoff" ? "birkhoff" : "gcb-" + f.check;
    const json doc = load_with_overrides(f);
    const auto cfg = parse_config(doc, hint);
    const bool matches = sub == "gcb" ? (cfg.kind == "gcb-mgf" || cfg.kind == "gcb-deviation" || cfg.kind == "birkhoff")
                                      : cfg.kind == sub;
    if (!matches) throw scum::ConfigError("experiment: '" + cfg.kind + "' cannot run under the '" + sub + "' subcommand");
    const auto report = run(cfg);
    write_report(report, cfg.output);
    std::cout << report.summary();
    return report.exit_code();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and bound checks for chains with unbounded memory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("scumlab ") + kVersion);
    std::map<std::string, Flags> flags;
    const std::map<std::string, std::string> descriptions{
        {"regularity", "oscillation and variation profiles, Delta and Gamma"},
        {"couple", "maximal coupling disagreement against the recursion bounds"},
        {"gcb", "MGF, deviation and Birkhoff-sum checks"},
        {"dkw", "block-frequency deviations"},
        {"dbar", "d-bar bounds and coupling witness"},
        {"renewal", "renewal classification and stationary marginals"},
        {"validate", "check a config without running it"},
    };
    for (const auto& [name, text] : descriptions) {
        CLI::App* sub = app.add_subcommand(name, text);
        add_flags(sub, flags[name]);
        if (name == "gcb")
            sub->add_option("--check", flags[name].check, "mgf, deviation or birkhoff when the config names none")
                ->check(CLI::IsMember({"mgf", "deviation", "birkhoff"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    try {
        for (const auto* sub : app.get_subcommands()) return run_subcommand(sub->get_name(), flags[sub->get_name()]);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
