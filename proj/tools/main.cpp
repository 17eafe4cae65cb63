#include <CLI11.hpp>

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "acceptance.hpp"
#include "fbmtk/harness.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::string outdir;
    std::string seed;
    std::string tau;
    std::string mode;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("-c,--config", opts.config_path,
                    "plain-text key/value config file");
    sub->add_option("--set", opts.sets,
                    "override one config entry, as key=value (repeatable)");
    sub->add_option("-o,--outdir", opts.outdir, "output directory");
    sub->add_option("--seed", opts.seed, "ensemble seed");
    sub->add_option("--tau", opts.tau, "translation lag");
    sub->add_option("--mode", opts.mode, "estimator mode: oracle|fixed-point");
}

// Overridden entries get line 0 so diagnostics blame the command line,
// not the config file line the override replaced.
void override_entry(fbmtk::ConfigFile& file, const std::string& key,
                    const std::string& value) {
    for (auto& e : file.entries)
        if (e.key == key) {
            e.value = value;
            e.line = 0;
            return;
        }
    file.entries.push_back({key, value, 0});
}

std::string trimmed(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

// Config precedence, lowest to highest: file, --set, environment
// (FBMTK_SEED / FBMTK_OUTDIR, applied inside load_experiment_config),
// dedicated command-line flags.
fbmtk::ExperimentConfig build_config(const CommonOpts& opts) {
    fbmtk::ConfigFile file;
    file.source = "<defaults>";
    if (!opts.config_path.empty())
        file = fbmtk::parse_config_file(opts.config_path);
    for (const auto& kv : opts.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw fbmtk::ConfigInvalid("--set expects key=value, got '" + kv +
                                       "'");
        const std::string key = trimmed(kv.substr(0, eq));
        if (key.empty())
            throw fbmtk::ConfigInvalid("--set expects key=value, got '" + kv +
                                       "'");
        override_entry(file, key, trimmed(kv.substr(eq + 1)));
    }
    if (!opts.tau.empty()) override_entry(file, "tau", opts.tau);
    if (!opts.mode.empty()) override_entry(file, "mode", opts.mode);
    fbmtk::ExperimentConfig cfg = fbmtk::load_experiment_config(file);
    if (!opts.outdir.empty()) cfg.outdir = opts.outdir;
    if (!opts.seed.empty()) {
        char* end = nullptr;
        cfg.seed = std::strtoull(opts.seed.c_str(), &end, 10);
        if (end == opts.seed.c_str() || *end != '\0')
            throw fbmtk::ConfigInvalid("--seed expects a whole number");
    }
    return cfg;
}

int report(const fbmtk::RunManifest& manifest) {
    for (const auto& s : manifest.suites)
        std::printf("%-16s %-8s %s (%.1fs)\n", s.name.c_str(),
                    fbmtk::to_string(s.status), s.detail.c_str(), s.seconds);
    std::printf("%s in %.1fs, outputs per manifest.json\n",
                manifest.all_passed() ? "all suites passed" : "NOT all passed",
                manifest.wall_clock_seconds);
    return manifest.all_passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractional-noise simulation and drift-estimation toolkit"};
    app.require_subcommand(1);
    CommonOpts opts;
    std::string only;

    CLI::App* simulate =
        app.add_subcommand("simulate", "integrate paths and persist them");
    CLI::App* translate = app.add_subcommand(
        "translate-check",
        "compare measure-shifted vs plain translation deviation");
    CLI::App* apscan = app.add_subcommand(
        "ap-scan", "spectrum and almost-period scan of the mean observable");
    CLI::App* estimate =
        app.add_subcommand("estimate", "drift estimation at one horizon");
    CLI::App* experiment = app.add_subcommand(
        "experiment", "full consistency/noise-decay/fixed-point pipeline");
    for (CLI::App* sub :
         {simulate, translate, apscan, estimate, experiment})
        add_common(sub, opts);
    CLI::App* accept =
        app.add_subcommand("accept", "run the acceptance criteria");
    accept->add_option("--only", only,
                       "comma-separated criterion numbers, e.g. 1,4,11");

    CLI11_PARSE(app, argc, argv);

    try {
        if (accept->parsed()) {
            std::vector<int> ids;
            std::stringstream ss(only);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) ids.push_back(std::stoi(item));
            bool all = true;
            const auto outcomes = fbmtk::run_acceptance(
                ids, [](const fbmtk::CriterionOutcome& c) {
                    std::printf("c%02d %-7s %-28s %s (%.1fs)\n", c.id,
                                fbmtk::to_string(c.status), c.name.c_str(),
                                c.detail.c_str(), c.seconds);
                    std::fflush(stdout);
                });
            for (const auto& c : outcomes)
                all = all && c.status == fbmtk::SuiteStatus::Pass;
            std::printf("%zu criteria, %s\n", outcomes.size(),
                        all ? "all passed" : "NOT all passed");
            return all ? 0 : 1;
        }
        const fbmtk::ExperimentConfig cfg = build_config(opts);
        if (simulate->parsed()) return report(fbmtk::run_simulate(cfg));
        if (translate->parsed())
            return report(fbmtk::run_translate_check(cfg));
        if (apscan->parsed()) return report(fbmtk::run_ap_scan(cfg));
        if (estimate->parsed()) return report(fbmtk::run_estimate(cfg));
        return report(fbmtk::run_experiment(cfg));
    } catch (const fbmtk::Error& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
}
