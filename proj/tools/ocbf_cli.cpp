#include "ocbf/outputs.hpp"
#include "ocbf/scenario.hpp"
#include "ocbf/sim.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace ocbf;

namespace {

struct Common {
    std::string scenario;
    std::optional<unsigned> seed;
    std::optional<double> beta;
    std::optional<std::string> sequencing;
    std::string out_dir;
};

void add_common(CLI::App* app, Common& c, bool need_scenario = true, bool beta_override = true) {
    auto* opt = app->add_option("--scenario", c.scenario, "Scenario JSON file");
    if (need_scenario) opt->required();
    app->add_option("--seed", c.seed, "Override the scenario seed");
    if (beta_override) app->add_option("--beta", c.beta, "Override beta");
    app->add_option("--sequencing", c.sequencing, "Passing-priority policy")
        ->check(CLI::IsMember({"fifo", "dr"}));
    app->add_option("--out-dir", c.out_dir, "Directory for output files");
}

ScenarioConfig load(const Common& c) {
    ScenarioConfig cfg = c.scenario.empty() ? ScenarioConfig{} : load_scenario(c.scenario);
    if (c.seed) cfg.seed = *c.seed;
    if (c.beta) cfg.beta = *c.beta;
    if (c.sequencing) cfg.sequencing = sequencing_from_string(*c.sequencing);
    cfg.validate();
    return cfg;
}

void print_summary(const SimResult& r) {
    const auto& f = r.fleet;
    const auto& s = r.safety;
    std::cout << "cavs=" << f.cavs << " travel_time=" << f.mean_travel_time << " energy=" << f.mean_energy
              << " fuel=" << f.mean_fuel << " ave_obj=" << f.average_objective << "\n"
              << "rear_violations=" << s.rear_end_violations << " lateral_violations=" << s.lateral_violations
              << " co_occupancy=" << s.co_occupancy << " infeasible_steps=" << s.infeasible_steps
              << " relaxations=" << s.relaxation_episodes << "\n"
              << "controller_us_per_step=" << r.mean_controller_time() * 1e6 << "\n";
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized intersection coordination simulator"};
    app.require_subcommand(1);

    Common run_opts;
    bool dump_constraints = false;
    auto* run_cmd = app.add_subcommand("run", "Run one scenario");
    add_common(run_cmd, run_opts);
    run_cmd->add_flag("--dump-constraints", dump_constraints, "Write constraints.csv");

    Common sweep_opts;
    std::string beta_list;
    std::string noise_list;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario over a list of beta values or noise levels");
    add_common(sweep_cmd, sweep_opts, true, false);
    auto* beta_opt = sweep_cmd->add_option("--beta", beta_list, "Comma-separated beta values");
    auto* noise_opt = sweep_cmd->add_option("--noise", noise_list,
                                            "Comma-separated noise levels, each w_p:w_v:w_u");
    beta_opt->excludes(noise_opt);

    Common geo_opts;
    auto* geo_cmd = app.add_subcommand("geometry", "Dump the intersection layout as JSON");
    add_common(geo_cmd, geo_opts, false);

    Common val_opts;
    auto* val_cmd = app.add_subcommand("validate", "Check a scenario file");
    add_common(val_cmd, val_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const ScenarioConfig cfg = load(run_opts);
            SimOptions opts;
            opts.record_trajectories = !run_opts.out_dir.empty();
            opts.record_constraints = dump_constraints;
            const SimResult r = run(cfg, opts);
            print_summary(r);
            if (!run_opts.out_dir.empty()) write_outputs(run_opts.out_dir, cfg, r);
        } else if (*sweep_cmd) {
            const ScenarioConfig base = load(sweep_opts);
            const std::string& dir = sweep_opts.out_dir;
            auto sweep_run = [&](const ScenarioConfig& cfg, std::string sub) {
                SimOptions opts;
                opts.record_trajectories = !dir.empty();
                const SimResult r = run(cfg, opts);
                std::replace(sub.begin(), sub.end(), ':', '_');
                if (!dir.empty()) write_outputs(dir + "/" + sub, cfg, r);
                return r;
            };
            auto emit = [&](const std::string& table) {
                std::cout << table;
                if (!dir.empty()) std::ofstream(dir + "/sweep.txt") << table;
            };
            std::vector<SweepRow> rows;
            if (!noise_list.empty()) {
                for (const auto& item : split(noise_list, ',')) {
                    const auto parts = split(item, ':');
                    if (parts.size() != 3) throw ConfigError("noise level '" + item + "' is not w_p:w_v:w_u");
                    ScenarioConfig cfg = base;
                    cfg.noise = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
                    cfg.validate();
                    rows.push_back({item, sweep_run(cfg, "noise_" + item), cfg.beta});
                }
                emit(sweep_table("noise", rows));
            } else {
                const auto items = split(beta_list.empty() ? std::to_string(base.beta) : beta_list, ',');
                for (const auto& item : items) {
                    ScenarioConfig cfg = base;
                    cfg.beta = std::stod(item);
                    cfg.validate();
                    rows.push_back({item, sweep_run(cfg, "beta_" + item), cfg.beta});
                }
                emit(sweep_table("beta", rows));
            }
        } else if (*geo_cmd) {
            const ScenarioConfig cfg = load(geo_opts);
            const std::string js = geometry_json(IntersectionGeometry(cfg.geometry));
            std::cout << js;
            if (!geo_opts.out_dir.empty()) {
                std::filesystem::create_directories(geo_opts.out_dir);
                std::ofstream(geo_opts.out_dir + "/geometry.json") << js;
            }
        } else if (*val_cmd) {
            load(val_opts);
            std::cout << "ok\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
