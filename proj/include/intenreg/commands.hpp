#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "intenreg/cli_config.hpp"

namespace intenreg {

// Subcommand bodies, kept free of argv plumbing so tests can drive them
// directly. Progress goes to `out`; all failures are exceptions, mapped to
// exit codes by the executable.

struct PhantomGenArgs {
    std::string out_dir;
    int n_train = 64;
    int n_test = 16;
};
void cmd_phantom_gen(const RunConfig& cfg, const PhantomGenArgs& args, std::ostream& out);

struct RegisterArgs {
    std::string target_path;
    std::string source_path;
    std::string out_prefix;
    bool use_affine = true;
};
void cmd_register(const RunConfig& cfg, const RegisterArgs& args, std::ostream& out);

struct TrainArgs {
    std::string corpus_dir;
    std::string checkpoint_out;
};
void cmd_train(const RunConfig& cfg, const TrainArgs& args, std::ostream& out);

struct SweepArgs {
    std::string corpus_dir;  // parent holding train/ and test/ subdirectories
    std::string out_dir;
    std::vector<double> alpha_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    bool train_mode = false;  // default: per-pair direct optimization
};
void cmd_sweep(const RunConfig& cfg, const SweepArgs& args, std::ostream& out);

struct BiasExperimentArgs {
    std::string corpus_dir;
    std::string out_csv;
    int n_pairs = 5;                   // per pair kind
    std::vector<double> alphas{0.0, 0.75};  // one direct engine per alpha
};
void cmd_bias_experiment(const RunConfig& cfg, const BiasExperimentArgs& args,
                         std::ostream& out);

}  // namespace intenreg
