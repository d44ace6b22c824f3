#include "intenreg/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "intenreg/affine.hpp"
#include "intenreg/engine.hpp"
#include "intenreg/evalharness.hpp"
#include "intenreg/image_io.hpp"
#include "intenreg/render.hpp"
#include "intenreg/rng.hpp"
#include "intenreg/warp.hpp"

namespace intenreg {

namespace {

std::string fmt(double v, const char* spec = "%.17g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// Filenames want a compact, dot-free alpha: 0.25 -> "0p25".
std::string alpha_slug(double a) {
    std::string s = fmt(a, "%g");
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

std::string base_name(LossConfig::Base b) {
    return b == LossConfig::Base::MSE ? "mse" : "ncc";
}

void write_trace_csv(const std::string& path, const std::vector<LossValue>& trace,
                     const std::string& preamble) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    if (!preamble.empty()) f << preamble;
    f << "iteration,total,similarity,regularizer\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        f << i << ',' << fmt(trace[i].total) << ',' << fmt(trace[i].similarity_term)
          << ',' << fmt(trace[i].regularizer_term) << "\n";
    if (!f) throw IoError("short write to " + path);
}

LossConfig loss_with(const RunConfig& cfg, double alpha, LossConfig::Base base) {
    LossConfig l = cfg.loss;
    l.alpha = alpha;
    l.base = base;
    return l;
}

RegistrationEngine sweep_engine(const RunConfig& cfg, const SweepArgs& args,
                                const LossConfig& loss,
                                const std::vector<Image2D>& train_images,
                                std::ostream& out) {
    if (!args.train_mode)
        return make_direct_engine(loss, cfg.direct_adam(), cfg.stop);

    TrainConfig tc = cfg.train_config();
    tc.loss = loss;
    NetParams params = NetParams::init(cfg.seed);
    const TrainReport report = train(params, train_images, tc);
    out << "  trained " << report.epochs_run << " epochs (alpha=" << loss.alpha
        << ", base=" << base_name(loss.base) << ")\n";
    return make_amortized_engine(params);
}

}  // namespace

void cmd_phantom_gen(const RunConfig& cfg, const PhantomGenArgs& args, std::ostream& out) {
    if (args.n_train < 1)
        throw ValidationError("phantom-gen: --subjects must be >= 1, got " +
                              std::to_string(args.n_train));
    if (args.n_test < 0)
        throw ValidationError("phantom-gen: --test-subjects must be >= 0");
    if (args.out_dir.empty()) throw ValidationError("phantom-gen: --out is required");

    const PhantomConfig pc = cfg.phantom_config();
    const std::vector<PhantomSample> all =
        generate_corpus(pc, args.n_train + args.n_test);

    const std::vector<PhantomSample> train_split(all.begin(), all.begin() + args.n_train);
    write_corpus(args.out_dir + "/train", train_split, pc);
    if (args.n_test > 0) {
        const std::vector<PhantomSample> test_split(all.begin() + args.n_train, all.end());
        write_corpus(args.out_dir + "/test", test_split, pc);
    }
    out << "wrote " << args.n_train << " train + " << args.n_test << " test subjects to "
        << args.out_dir << "\n";
}

void cmd_register(const RunConfig& cfg, const RegisterArgs& args, std::ostream& out) {
    if (args.target_path.empty() || args.source_path.empty() || args.out_prefix.empty())
        throw ValidationError("register: --target, --source and --out are required");

    const Image2D target = read_image(args.target_path);
    Image2D source = read_image(args.source_path);
    require_same_shape(target, source, "register");

    std::string preamble;
    if (args.use_affine) {
        const AffineParams ap = affine_prealign(target, source);
        source = apply_affine(source, ap);
        preamble = "# affine t_row=" + fmt(ap.t_row) + " t_col=" + fmt(ap.t_col) +
                   " rotation=" + fmt(ap.rotation) + " scale=" + fmt(ap.scale) + "\n";
    }

    try {
        const RegistrationResult res =
            register_direct(target, source, cfg.loss, cfg.direct_adam(), cfg.stop);
        write_image(res.warped, args.out_prefix + "_warped.pgm");
        write_field(res.field, args.out_prefix + "_field.bin");
        write_trace_csv(args.out_prefix + "_trace.csv", res.loss_trace, preamble);
        out << "registered in " << res.iterations << " iterations ("
            << (res.stopped_by == StopReason::patience ? "patience" : "max_iters")
            << "), final loss " << fmt(res.loss_trace.back().total, "%.6g")
            << ", best loss " << fmt([&] {
                   double best = std::numeric_limits<double>::infinity();
                   for (const auto& lv : res.loss_trace) best = std::min(best, lv.total);
                   return best;
               }(), "%.6g")
            << "\n";
    } catch (const RegistrationDivergence& e) {
        // Keep the evidence around before the non-zero exit.
        write_trace_csv(args.out_prefix + "_trace.csv", e.partial_trace, preamble);
        throw;
    }
}

void cmd_train(const RunConfig& cfg, const TrainArgs& args, std::ostream& out) {
    if (args.corpus_dir.empty() || args.checkpoint_out.empty())
        throw ValidationError("train: --corpus and --out are required");

    const std::vector<PhantomSample> corpus = read_corpus(args.corpus_dir);
    std::vector<Image2D> images;
    images.reserve(corpus.size());
    for (const auto& s : corpus) images.push_back(s.image);

    NetParams params = NetParams::init(cfg.seed);
    const TrainReport report = train(params, images, cfg.train_config());
    save_checkpoint(params, args.checkpoint_out);

    std::ofstream f(args.checkpoint_out + ".report.csv", std::ios::trunc);
    if (!f) throw IoError("cannot write train report next to " + args.checkpoint_out);
    f << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < report.epoch_losses.size(); ++i)
        f << i << ',' << fmt(report.epoch_losses[i]) << "\n";
    if (!f) throw IoError("short write of train report");

    out << "trained " << report.epochs_run << " epochs ("
        << (report.stopped_by == TrainStop::patience ? "patience" : "max_epochs")
        << "), final epoch loss " << fmt(report.epoch_losses.back(), "%.6g")
        << ", checkpoint " << args.checkpoint_out << "\n";
}

void cmd_sweep(const RunConfig& cfg, const SweepArgs& args, std::ostream& out) {
    if (args.corpus_dir.empty() || args.out_dir.empty())
        throw ValidationError("sweep: --corpus and --out are required");
    if (args.alpha_grid.empty()) throw ValidationError("sweep: empty alpha grid");
    for (double a : args.alpha_grid)
        if (!(a >= 0.0 && a <= 1.0))
            throw ValidationError("sweep: alpha " + fmt(a, "%g") + " outside [0,1]");

    const std::vector<PhantomSample> test = read_corpus(args.corpus_dir + "/test");
    std::vector<Image2D> train_images;
    if (args.train_mode) {
        for (const auto& s : read_corpus(args.corpus_dir + "/train"))
            train_images.push_back(s.image);
    }

    std::filesystem::create_directories(args.out_dir);

    // The alpha = 0 run of each base is the delta baseline; make sure it
    // exists (and runs first) even if the grid omits it.
    std::vector<double> grid = args.alpha_grid;
    grid.push_back(0.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<PairFailure> failures;
    std::ostringstream summary;
    summary << "alpha,base,mean_dice\n";
    std::vector<BarRow> summary_rows;

    const std::string mode_tag = args.train_mode ? "train" : "direct";
    for (LossConfig::Base base : {LossConfig::Base::MSE, LossConfig::Base::NCC}) {
        DiceMatrix baseline;
        for (double alpha : grid) {
            const LossConfig loss = loss_with(cfg, alpha, base);
            const std::string tag =
                mode_tag + "_" + base_name(base) + "_a" + alpha_slug(alpha);
            out << "sweep " << tag << "\n";
            const RegistrationEngine engine =
                sweep_engine(cfg, args, loss, train_images, out);

            std::vector<PairFailure> local;
            const DiceMatrix m =
                pairwise_matrix(engine, test, tag, &local, cfg.threads);
            for (const auto& pf : local) failures.push_back(pf);

            const std::string stem =
                args.out_dir + "/dice_" + base_name(base) + "_a" + alpha_slug(alpha);
            write_matrix_csv(m, stem + ".csv");
            render_heatmap(m, stem + ".png");

            if (alpha == 0.0) baseline = m;
            const DeltaMatrix d = delta_matrix(m, baseline);
            const std::string dstem =
                args.out_dir + "/delta_" + base_name(base) + "_a" + alpha_slug(alpha);
            write_matrix_csv(d, dstem + ".csv");
            render_heatmap(d, dstem + ".png");

            double acc = 0.0;
            std::size_t cnt = 0;
            for (double v : m.values)
                if (std::isfinite(v)) {
                    acc += v;
                    ++cnt;
                }
            const double mean = cnt ? acc / double(cnt) : std::nan("");
            summary << fmt(alpha, "%g") << ',' << base_name(base) << ',' << fmt(mean)
                    << "\n";
            summary_rows.push_back(
                {base_name(base) + " " + fmt(alpha, "%g"), mean});
        }
    }

    {
        std::ofstream f(args.out_dir + "/summary.csv", std::ios::trunc);
        if (!f) throw IoError("cannot write sweep summary");
        f << summary.str();
    }
    render_barchart(summary_rows, "mean dice by alpha/base", args.out_dir + "/summary.png");

    if (!failures.empty()) {
        std::ofstream f(args.out_dir + "/failures.txt", std::ios::trunc);
        if (!f) throw IoError("cannot write failure manifest");
        for (const auto& pf : failures)
            f << "target " << pf.target << " source " << pf.source << ": " << pf.reason
              << "\n";
        out << failures.size() << " pair registrations failed; see failures.txt\n";
    }
    out << "sweep complete: " << grid.size() * 2 << " matrices in " << args.out_dir << "\n";
}

void cmd_bias_experiment(const RunConfig& cfg, const BiasExperimentArgs& args,
                         std::ostream& out) {
    if (args.corpus_dir.empty() || args.out_csv.empty())
        throw ValidationError("bias-experiment: --corpus and --out are required");
    if (args.n_pairs < 1) throw ValidationError("bias-experiment: --pairs must be >= 1");
    for (double a : args.alphas)
        if (!(a >= 0.0 && a <= 1.0))
            throw ValidationError("bias-experiment: alpha " + fmt(a, "%g") +
                                  " outside [0,1]");

    const std::vector<PhantomSample> samples = read_corpus(args.corpus_dir);
    const int n = int(samples.size());
    if (n < 2)
        throw ValidationError("bias-experiment: need at least 2 subjects for the "
                              "distinct-pair condition, corpus has " + std::to_string(n));

    Rng rng(mix_seed(cfg.seed, 0x42494153ull));  // pair-draw stream
    struct PairPick {
        int target, source;
        PairKind kind;
    };
    std::vector<PairPick> picks;
    for (int k = 0; k < args.n_pairs; ++k) {
        const int i = int(rng.next_below(std::uint64_t(n)));
        picks.push_back({i, i, PairKind::identical});
    }
    for (int k = 0; k < args.n_pairs; ++k) {
        const int i = int(rng.next_below(std::uint64_t(n)));
        int j = int(rng.next_below(std::uint64_t(n - 1)));
        if (j >= i) ++j;  // uniform over the off-diagonal
        picks.push_back({i, j, PairKind::distinct});
    }

    std::ofstream f(args.out_csv, std::ios::trunc);
    if (!f) throw IoError("cannot write " + args.out_csv);
    f << "pair,kind,engine,alpha,dice_clean,dice_biased,drop\n";

    struct Agg {
        std::string label;
        double sum = 0.0;
        int count = 0;
    };
    std::vector<Agg> agg;
    for (double alpha : args.alphas)
        agg.push_back({"a" + alpha_slug(alpha), 0.0, 0});

    for (std::size_t e = 0; e < args.alphas.size(); ++e) {
        const double alpha = args.alphas[e];
        const LossConfig loss = loss_with(cfg, alpha, cfg.loss.base);
        const RegistrationEngine engine =
            make_direct_engine(loss, cfg.direct_adam(), cfg.stop);
        const std::string tag = "direct_" + base_name(loss.base) + "_a" + alpha_slug(alpha);

        for (std::size_t p = 0; p < picks.size(); ++p) {
            const PairPick& pk = picks[p];
            const PhantomSample& t = samples[std::size_t(pk.target)];
            const PhantomSample& s = samples[std::size_t(pk.source)];
            const BiasExperimentReport r = bias_experiment(
                engine, t.image, t.labels, s.image, s.labels, cfg.bias);
            f << p << ',' << (r.pair_kind == PairKind::identical ? "identical" : "distinct")
              << ',' << tag << ',' << fmt(alpha, "%g") << ',' << fmt(r.dice_clean) << ','
              << fmt(r.dice_biased) << ',' << fmt(r.drop) << "\n";
            agg[e].sum += r.drop;
            agg[e].count += 1;
        }
    }
    if (!f) throw IoError("short write to " + args.out_csv);
    f.close();

    std::vector<BarRow> rows;
    for (const auto& a : agg) rows.push_back({a.label, a.sum / std::max(1, a.count)});
    std::filesystem::path chart(args.out_csv);
    chart.replace_extension(".png");
    render_barchart(rows, "mean dice drop by engine", chart.string());

    out << "bias experiment: " << picks.size() * args.alphas.size() << " rows in "
        << args.out_csv << "\n";
}

}  // namespace intenreg
