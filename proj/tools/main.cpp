#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <adaf2m2/adaf2m2.h>

namespace {

struct CommonOpts {
    std::string config;
    std::vector<std::string> sets;
    std::string seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config, "JSON config file overlaid on the defaults");
    cmd->add_option("--set", opts.sets, "dotted-key override, key.path=value (repeatable)");
    cmd->add_option("--seed", opts.seed, "root seed for every derived random stream");
    cmd->add_option("--out", opts.out, "output directory for the run's artifacts");
}

int fail_with_last_error() {
    std::fprintf(stderr, "error: %s\n", adaf2m2_last_error());
    return 1;
}

int run(const CommonOpts& opts, adaf2m2_status (*command)(const adaf2m2_config*, FILE*)) {
    adaf2m2_config* cfg = opts.config.empty() ? adaf2m2_config_new()
                                              : adaf2m2_config_load(opts.config.c_str());
    if (!cfg) return fail_with_last_error();

    for (const std::string& assignment : opts.sets)
        if (adaf2m2_config_set(cfg, assignment.c_str()) != ADAF2M2_OK) {
            adaf2m2_config_free(cfg);
            return fail_with_last_error();
        }
    for (const auto& [key, value] : {std::pair{"seed", &opts.seed}, {"out", &opts.out}})
        if (!value->empty() &&
            adaf2m2_config_set(cfg, (std::string(key) + "=" + *value).c_str()) != ADAF2M2_OK) {
            adaf2m2_config_free(cfg);
            return fail_with_last_error();
        }

    const adaf2m2_status st = command(cfg, stdout);
    adaf2m2_config_free(cfg);
    return st == ADAF2M2_OK ? 0 : fail_with_last_error();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"feature-mask multi-forward training and evaluation laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", adaf2m2_version());

    struct Command {
        const char* name;
        const char* help;
        adaf2m2_status (*fn)(const adaf2m2_config*, FILE*);
        CommonOpts opts;
        CLI::App* cmd = nullptr;
    };
    Command commands[] = {
        {"train", "fit a model; writes checkpoint, train_log, resolved_config",
         adaf2m2_run_train, {}, nullptr},
        {"eval", "score a split against a checkpoint; writes report", adaf2m2_run_eval, {},
         nullptr},
        {"analyze", "adaptive-weight heatmaps and state-bucket tables", adaf2m2_run_analyze,
         {}, nullptr},
        {"gradcheck", "finite-difference verification of the training gradients",
         adaf2m2_run_gradcheck, {}, nullptr},
        {"gen-synth", "generate the synthetic long-tail dataset as TSV files",
         adaf2m2_run_gen_synth, {}, nullptr},
    };
    for (Command& c : commands) {
        c.cmd = app.add_subcommand(c.name, c.help);
        add_common(c.cmd, c.opts);
    }

    CLI11_PARSE(app, argc, argv);

    for (const Command& c : commands)
        if (c.cmd->parsed()) return run(c.opts, c.fn);
    return 1;
}
