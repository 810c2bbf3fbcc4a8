#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "wavelab/cli.hpp"
#include "wavelab/errors.hpp"

namespace {

constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

std::string read_config(const std::string& path)
{
    if (path.empty()) return "{}";
    std::ifstream in(path);
    if (!in) throw wavelab::ValidationError("cannot read config " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Experiments for wave equations with time-periodic sound speed"};
    app.require_subcommand(1);

    struct RunArgs {
        std::string config;
        std::vector<std::string> sets;
        std::string out;
    };
    std::vector<std::pair<CLI::App*, RunArgs>> runs;
    runs.reserve(wavelab::experiment_names().size());
    for (const auto& name : wavelab::experiment_names()) {
        runs.emplace_back(app.add_subcommand(name, "run the " + name + " experiment"), RunArgs{});
        auto& [cmd, args] = runs.back();
        cmd->add_option("--config", args.config, "JSON config; omitted keys take their defaults");
        cmd->add_option("--set", args.sets, "override a field, e.g. --set metric.epsilon=0.2");
        cmd->add_option("--out", args.out, "output directory")->required();
    }

    std::string v_config, v_experiment;
    std::vector<std::string> v_sets;
    auto* validate = app.add_subcommand("validate", "check a config and print it with defaults applied");
    validate->add_option("--config", v_config, "JSON config")->required();
    validate->add_option("--experiment", v_experiment, "experiment, if the config does not name one");
    validate->add_option("--set", v_sets, "override a field");

    std::string d_experiment;
    auto* defaults = app.add_subcommand("defaults", "print the default config of an experiment");
    defaults->add_option("experiment", d_experiment)->required();

    std::string plot_dir;
    auto* plot = app.add_subcommand("plot", "regenerate plot CSVs of a finished run");
    plot->add_option("run_dir", plot_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_validation;
    }

    try {
        for (auto& [cmd, args] : runs) {
            if (!cmd->parsed()) continue;
            const auto cfg = wavelab::validate_or_throw(read_config(args.config), args.sets, cmd->get_name());
            const auto manifest = wavelab::run(cfg, args.out);
            std::cout << manifest.artifacts.size() << " artifacts written to " << args.out << "\n";
            return 0;
        }
        if (validate->parsed()) {
            const auto cfg = wavelab::validate_or_throw(read_config(v_config), v_sets, v_experiment);
            std::cout << cfg.resolved.dump(2) << "\n";
        } else if (defaults->parsed()) {
            std::cout << wavelab::default_config(d_experiment).dump(2) << "\n";
        } else if (plot->parsed()) {
            for (const auto& f : wavelab::emit_plot_data(plot_dir)) std::cout << f << "\n";
        }
        return 0;
    } catch (const wavelab::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
}
