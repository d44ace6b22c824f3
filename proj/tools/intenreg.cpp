// intenreg: deformable 2D registration workbench.
//
// Subcommands: phantom-gen, register, train, sweep, bias-experiment.
// Global flags: --config <ini>, --seed <n>, --threads <n>. Flags given on
// the command line win over config-file values; everything is validated
// before any file is touched.
//
// Exit codes: 0 ok, 1 usage/validation, 2 I/O, 3 numerical divergence.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "intenreg/commands.hpp"

namespace {

std::vector<double> parse_alpha_list(const std::string& csv) {
    std::vector<double> out;
    std::istringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size())
            throw intenreg::ValidationError("bad alpha list entry: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw intenreg::ValidationError("empty alpha list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deformable 2D image registration workbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("--config", config_path, "INI config file");
    auto* seed_opt = app.add_option("--seed", seed, "global random seed");
    auto* threads_opt = app.add_option("--threads", threads, "worker thread cap");

    // phantom-gen
    auto* gen = app.add_subcommand("phantom-gen", "generate a synthetic corpus");
    intenreg::PhantomGenArgs gen_args;
    gen->add_option("--out", gen_args.out_dir, "output directory")->required();
    gen->add_option("--subjects", gen_args.n_train, "training subjects (default 64)");
    gen->add_option("--test-subjects", gen_args.n_test, "test subjects (default 16)");
    int gen_height = 0, gen_width = 0;
    auto* gh = gen->add_option("--height", gen_height, "phantom height");
    auto* gw = gen->add_option("--width", gen_width, "phantom width");

    // register
    auto* reg = app.add_subcommand("register", "register one image pair");
    intenreg::RegisterArgs reg_args;
    reg->add_option("--target", reg_args.target_path, "target image")->required();
    reg->add_option("--source", reg_args.source_path, "source image")->required();
    reg->add_option("--out", reg_args.out_prefix, "output path prefix")->required();
    bool no_affine = false;
    reg->add_flag("--no-affine", no_affine, "skip affine pre-alignment");

    // train
    auto* trn = app.add_subcommand("train", "train the amortized model");
    intenreg::TrainArgs trn_args;
    trn->add_option("--corpus", trn_args.corpus_dir, "corpus directory")->required();
    trn->add_option("--out", trn_args.checkpoint_out, "checkpoint path")->required();

    // sweep
    auto* swp = app.add_subcommand("sweep", "alpha sweep with pairwise matrices");
    intenreg::SweepArgs swp_args;
    swp->add_option("--corpus", swp_args.corpus_dir, "corpus parent (train/ + test/)")
        ->required();
    swp->add_option("--out", swp_args.out_dir, "output directory")->required();
    std::string swp_alphas;
    swp->add_option("--alphas", swp_alphas, "comma-separated alpha grid");
    std::string swp_engine = "direct";
    swp->add_option("--engine", swp_engine, "direct|train")
        ->check(CLI::IsMember({"direct", "train"}));

    // bias-experiment
    auto* bias = app.add_subcommand("bias-experiment", "illumination-bias dice drops");
    intenreg::BiasExperimentArgs bias_args;
    bias->add_option("--corpus", bias_args.corpus_dir, "corpus directory")->required();
    bias->add_option("--out", bias_args.out_csv, "output CSV path")->required();
    bias->add_option("--pairs", bias_args.n_pairs, "pairs per kind (default 5)");
    std::string bias_alphas;
    bias->add_option("--alphas", bias_alphas, "comma-separated engine alphas");

    // Shared loss/optimizer overrides, one instance per work subcommand;
    // only the parsed subcommand writes these values.
    struct Override {
        double alpha = 0, beta = 0, lr = 0, amplitude = 0, bias_sigma = 0;
        int window = 0, max_iters = 0, batch_size = 0, max_epochs = 0;
        std::string base;
    } ov;
    for (CLI::App* sub : {reg, trn, swp, bias}) {
        sub->add_option("--alpha", ov.alpha, "loss alpha in [0,1]");
        sub->add_option("--beta", ov.beta, "regularizer weight");
        sub->add_option("--base", ov.base, "mse|ncc")
            ->check(CLI::IsMember({"mse", "ncc"}));
        sub->add_option("--window", ov.window, "SSIM window (odd)");
        sub->add_option("--lr", ov.lr, "learning rate");
        sub->add_option("--max-iters", ov.max_iters, "direct-optimization iteration cap");
        sub->add_option("--batch-size", ov.batch_size, "training batch");
        sub->add_option("--max-epochs", ov.max_epochs, "training epoch cap");
        sub->add_option("--amplitude", ov.amplitude, "bias amplitude");
        sub->add_option("--bias-sigma", ov.bias_sigma, "bias sigma (px)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        intenreg::RunConfig cfg;
        if (!config_path.empty()) cfg = intenreg::load_run_config(config_path);
        if (seed_opt->count()) cfg.seed = seed;
        if (threads_opt->count()) cfg.threads = threads;

        // CLI wins over file values; ask the active subcommand which of its
        // override flags were actually given.
        CLI::App* active = app.get_subcommands().front();
        const bool has_overrides = active != gen;
        auto given = [&](const char* name) {
            return has_overrides && active->count(name) > 0;
        };
        if (given("--alpha")) cfg.loss.alpha = ov.alpha;
        if (given("--beta")) cfg.loss.beta = ov.beta;
        if (given("--base"))
            cfg.loss.base = ov.base == "ncc" ? intenreg::LossConfig::Base::NCC
                                             : intenreg::LossConfig::Base::MSE;
        if (given("--window")) cfg.loss.window = ov.window;
        if (given("--max-iters")) cfg.stop.max_iters = ov.max_iters;
        if (given("--batch-size")) cfg.train_batch_size = ov.batch_size;
        if (given("--max-epochs")) cfg.train_max_epochs = ov.max_epochs;
        if (given("--amplitude")) cfg.bias.amplitude = ov.amplitude;
        if (given("--bias-sigma")) cfg.bias.sigma = ov.bias_sigma;
        if (given("--lr")) {
            if (active == trn) cfg.train_lr = ov.lr;
            else cfg.direct_lr = ov.lr;
        }
        if (gh->count()) cfg.phantom.height = gen_height;
        if (gw->count()) cfg.phantom.width = gen_width;

        cfg.validate();

        if (app.got_subcommand(gen)) {
            intenreg::cmd_phantom_gen(cfg, gen_args, std::cout);
        } else if (app.got_subcommand(reg)) {
            reg_args.use_affine = !no_affine;
            intenreg::cmd_register(cfg, reg_args, std::cout);
        } else if (app.got_subcommand(trn)) {
            intenreg::cmd_train(cfg, trn_args, std::cout);
        } else if (app.got_subcommand(swp)) {
            if (!swp_alphas.empty()) swp_args.alpha_grid = parse_alpha_list(swp_alphas);
            swp_args.train_mode = swp_engine == "train";
            intenreg::cmd_sweep(cfg, swp_args, std::cout);
        } else if (app.got_subcommand(bias)) {
            if (!bias_alphas.empty()) bias_args.alphas = parse_alpha_list(bias_alphas);
            intenreg::cmd_bias_experiment(cfg, bias_args, std::cout);
        }
        return 0;
    } catch (const intenreg::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const intenreg::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const intenreg::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
