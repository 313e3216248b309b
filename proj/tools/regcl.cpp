// regcl: configuration-driven experiment runner for continual learning with
// flip (regression) accounting. Subcommands:
//   run    train strategies across an experience stream and write reports
//   eval   standalone flip audit between two model snapshots
//   synth  materialize a synthetic dataset to sparse text

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regcl/regcl.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int cmd_run(const std::optional<std::string>& config_path,
            const std::vector<std::string>& sets, const std::optional<std::string>& seeds,
            const std::optional<std::string>& out, bool keep_all) {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw regcl::config_error("--set expects key=value, got '" + kv + "'");
        overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seeds) overrides.emplace_back("seeds", *seeds);
    if (out) overrides.emplace_back("out", *out);
    if (keep_all) overrides.emplace_back("snapshots.keep_all", "true");

    std::optional<std::filesystem::path> file;
    if (config_path) file = *config_path;
    regcl::RunConfig cfg = regcl::parse_config(file, overrides);

    regcl::RunResult result = regcl::run(cfg);
    std::cout << "report:   " << result.manifest.report_csv.string() << "\n"
              << "summary:  " << result.manifest.summary_txt.string() << "\n"
              << "manifest: " << result.manifest.manifest_path.string() << "\n";
    if (result.report.partial) {
        std::cerr << "warning: some seeds failed; see manifest\n";
    }
    return kExitOk;
}

int cmd_eval(const std::string& old_path, const std::string& new_path,
             const std::string& test_path, const std::string& cls) {
    auto r = regcl::eval_flips(old_path, new_path, test_path, cls);
    std::cout << "samples(" << cls << "): " << r.rates.n << " of " << r.n_total << "\n";
    if (r.rates.nfr) {
        std::printf("nfr: %.6f  (%lld flips)\n", *r.rates.nfr, r.rates.nf);
        std::printf("pfr: %.6f  (%lld flips)\n", *r.rates.pfr, r.rates.pf);
    } else {
        std::cout << "nfr: undefined (no samples of the selected class)\n";
        std::cout << "pfr: undefined (no samples of the selected class)\n";
    }
    std::printf("old accuracy: %.6f\nnew accuracy: %.6f\n", r.old_accuracy, r.new_accuracy);
    return kExitOk;
}

int cmd_synth(const std::string& scenario_name, const std::string& out_dir,
              std::uint64_t seed, const std::optional<std::string>& config_path) {
    regcl::Scenario scenario;
    if (scenario_name == "dil")
        scenario = regcl::Scenario::dil;
    else if (scenario_name == "cil")
        scenario = regcl::Scenario::cil;
    else
        throw regcl::config_error("unknown scenario '" + scenario_name + "' (expected dil|cil)");

    regcl::SynthConfig synth;
    if (config_path) {
        std::optional<std::filesystem::path> file = *config_path;
        synth = regcl::parse_config(file).synth;
    }
    const auto path = regcl::materialize_synth(synth, scenario, seed, out_dir);
    std::cout << "wrote " << path.string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"continual-learning experiments with regression accounting"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a configured experiment");
    std::optional<std::string> run_config, run_seeds, run_out;
    std::vector<std::string> run_sets;
    bool run_keep_all = false;
    run->add_option("--config", run_config, "config file (key = value lines)");
    run->add_option("--set", run_sets, "override a config key (key=value), repeatable");
    run->add_option("--seeds", run_seeds, "comma-separated seed list");
    run->add_option("--out", run_out, "output directory");
    run->add_flag("--keep-all", run_keep_all, "keep every snapshot instead of the last two");

    auto* eval = app.add_subcommand("eval", "flip audit between two snapshots");
    std::string eval_old, eval_new, eval_test, eval_class = "all";
    eval->add_option("--old", eval_old, "old snapshot file")->required();
    eval->add_option("--new", eval_new, "new snapshot file")->required();
    eval->add_option("--test", eval_test, "test set (sparse text)")->required();
    eval->add_option("--class", eval_class, "class selector: mw|gw|all");

    auto* synth = app.add_subcommand("synth", "materialize a synthetic dataset");
    std::string synth_scenario, synth_out = "synth-out";
    std::uint64_t synth_seed = 1;
    std::optional<std::string> synth_config;
    synth->add_option("--scenario", synth_scenario, "dil|cil")->required();
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--config", synth_config, "config file for synth.* keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed())
            return cmd_run(run_config, run_sets, run_seeds, run_out, run_keep_all);
        if (eval->parsed()) return cmd_eval(eval_old, eval_new, eval_test, eval_class);
        if (synth->parsed()) return cmd_synth(synth_scenario, synth_out, synth_seed, synth_config);
    } catch (const regcl::config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const regcl::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const regcl::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
