#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fluxgauge/config.hpp"
#include "fluxgauge/scenarios.hpp"

namespace {

constexpr int kExitConfigInvalid = 2;
constexpr int kExitRuntimeFailure = 3;

int run(const std::string& scenario_name, const std::string& config_path, std::optional<std::uint64_t> seed,
        std::optional<std::string> out, std::optional<double> resolution, bool allow_non_simple) {
    using namespace fluxgauge;
    try {
        const auto scenario = parse_scenario(scenario_name);
        if (!scenario) throw Error(ErrorCode::ConfigInvalid, "unknown scenario '" + scenario_name + "'");
        ExperimentConfig cfg = load_config(config_path);
        if (cfg.scenario != *scenario)
            throw Error(ErrorCode::ConfigInvalid, "config is for scenario '" + std::string(to_string(cfg.scenario)) +
                                                      "', not '" + scenario_name + "'");
        if (seed) cfg.seed = *seed;
        if (out) cfg.output_dir = *out;
        if (resolution) {
            if (!(*resolution > 0.0)) throw Error(ErrorCode::ConfigInvalid, "--resolution must be positive");
            cfg.resolution = *resolution;
        }
        if (allow_non_simple) cfg.allow_non_simple = true;

        const RunReport rep = run_scenario(cfg);
        write_outputs(rep);
        std::size_t holds = 0, violated = 0, inconclusive = 0;
        for (const auto& c : rep.checks) {
            if (c.verdict == Verdict::Holds) ++holds;
            if (c.verdict == Verdict::Violated) ++violated;
            if (c.verdict == Verdict::Inconclusive) ++inconclusive;
        }
        std::cout << to_string(cfg.scenario) << ": " << rep.checks.size() << " checks, " << holds << " HOLDS, "
                  << violated << " VIOLATED, " << inconclusive << " INCONCLUSIVE -> " << cfg.output_dir << "\n";
        for (const auto& c : rep.checks)
            if (c.proven_violation())
                std::cout << "proven bound violated: " << to_string(c.id) << " " << c.config_id << "\n";
        return rep.exit_code();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigInvalid ? kExitConfigInvalid : kExitRuntimeFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: RUNTIME_FAILURE: " << e.what() << "\n";
        return kExitRuntimeFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fluxgauge: flux integrals over implicit domains and the bounds they obey"};
    app.set_version_flag("--version", FLUXGAUGE_VERSION);
    app.require_subcommand(1);

    app.add_subcommand("list", "print the scenario catalog")->callback([] {
        std::cout << fluxgauge::list_scenarios();
    });

    int exit_code = 0;
    for (fluxgauge::Scenario s : fluxgauge::kScenarios) {
        const std::string name(fluxgauge::to_string(s));
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " scenario");
        auto config = std::make_shared<std::string>();
        auto seed = std::make_shared<std::uint64_t>(0);
        auto out = std::make_shared<std::string>();
        auto resolution = std::make_shared<double>(0.0);
        auto allow = std::make_shared<bool>(false);
        sub->add_option("--config", *config, "experiment config (JSON)")->required();
        auto* seed_opt = sub->add_option("--seed", *seed, "override the config seed");
        auto* out_opt = sub->add_option("--out", *out, "output directory");
        auto* res_opt = sub->add_option("--resolution", *resolution, "override the mesh pitch h");
        sub->add_flag("--allow-non-simple", *allow, "evaluate planar bounds on non-simple curves");
        sub->callback([=, &exit_code] {
            exit_code = run(name, *config, seed_opt->count() ? std::optional(*seed) : std::nullopt,
                            out_opt->count() ? std::optional(*out) : std::nullopt,
                            res_opt->count() ? std::optional(*resolution) : std::nullopt, *allow);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigInvalid;
    }
    return exit_code;
}
