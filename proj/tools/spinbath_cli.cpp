// spinbath command-line front end: config-driven simulations, diagnostics
// and parameter sweeps. Exit codes: 0 success, 2 config error, 3 numerical
// failure.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "spinbath/config.hpp"
#include "spinbath/errors.hpp"
#include "spinbath/io.hpp"
#include "spinbath/run.hpp"

namespace {

struct CliOptions {
    std::string config_file;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

int run_task(spinbath::Task task, const CliOptions& opt) {
    using namespace spinbath;
    try {
        RunConfig config = opt.config_file.empty()
            ? RunConfig{}
            : RunConfig::from_text(read_file(opt.config_file));
        config.task = task;
        if (!opt.out_dir.empty()) config.output_dir = opt.out_dir;
        if (opt.seed_set) config.mc.seed = opt.seed;
        if (opt.threads > 0) config.threads = opt.threads;
        config.validate();
        const RunManifest manifest = run(config);
        std::printf("wrote %zu output file(s) to %s (%.2f s)\n",
                    manifest.outputs.size(), config.output_dir.c_str(),
                    manifest.wall_time_s);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "spinbath: driven spin-boson HEOM simulator and non-Markovianity "
        "diagnostics"};
    app.require_subcommand(1);

    CliOptions opt;
    const std::pair<const char*, spinbath::Task> tasks[] = {
        {"simulate", spinbath::Task::simulate},
        {"stcf", spinbath::Task::stcf},
        {"blp", spinbath::Task::blp},
        {"volume", spinbath::Task::volume},
        {"rates", spinbath::Task::rates},
        {"kernel", spinbath::Task::kernel},
        {"sweep", spinbath::Task::sweep},
    };
    for (const auto& [name, task] : tasks) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_file, "key=value config file");
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--seed", opt.seed, "Monte Carlo seed")
            ->each([&opt](const std::string&) { opt.seed_set = true; });
        sub->add_option("--threads", opt.threads, "worker threads");
        const spinbath::Task t = task;
        sub->callback([&opt, t]() { std::exit(run_task(t, opt)); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    return 0;
}
