#include "retina/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>

#include "CLI11.hpp"
#include "retina/checkpoint.hpp"
#include "retina/dataset.hpp"
#include "retina/metrics.hpp"
#include "retina/training.hpp"

namespace retina::cli {

namespace fs = std::filesystem;

namespace {

/// Thrown for flag combinations CLI11 cannot validate on its own.
class UsageError : public Error {
public:
    using Error::Error;
};

struct DataFlags {
    std::string data_root;
    std::string low_dir;
    std::string high_dir;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--data-root", data_root, "Dataset root containing our485/ and eval15/");
        cmd.add_option("--low-dir", low_dir, "Explicit low-light directory (overrides the layout)");
        cmd.add_option("--high-dir", high_dir, "Explicit normal-light directory (overrides the layout)");
    }

    PairedDataset discover_split(Split split, std::ostream& err) const {
        std::optional<DirectoryOverride> dirs;
        if (!low_dir.empty() || !high_dir.empty()) {
            if (low_dir.empty() || high_dir.empty()) {
                throw UsageError("--low-dir and --high-dir must be given together");
            }
            dirs = DirectoryOverride{low_dir, high_dir};
        } else if (data_root.empty()) {
            throw UsageError("--data-root (or --low-dir/--high-dir) is required");
        }
        PairedDataset ds = discover(data_root, split, dirs);
        for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
        return ds;
    }
};

std::string format_real(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// -----------------------------------------------------------------------------
// train
// -----------------------------------------------------------------------------

struct TrainArgs {
    DataFlags data;
    TrainConfig cfg;
    InitConfig init;
    std::string padding = "replicate";
    std::string out = "model.json";
    bool save_every_epoch = false;
};

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
    InitConfig init = args.init;
    init.seed = args.cfg.seed;
    init.padding = parse_padding(args.padding);
    args.cfg.validate();

    const PairedDataset ds = args.data.discover_split(Split::Train, err);
    if (ds.pairs.empty()) {
        err << "error: no training pairs found\n";
        return kExitData;
    }

    std::optional<InMemoryPairs> cache;
    std::optional<DatasetPairs> lazy;
    const PairSource* source = nullptr;
    if (args.cfg.preload) {
        cache.emplace(preload(ds));
        source = &*cache;
    } else {
        lazy.emplace(ds);
        source = &*lazy;
    }

    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    meta["train"] = args.cfg.to_json();
    nlohmann::ordered_json init_json = nlohmann::ordered_json::object();
    init_json["sigma_g"] = init.sigma_g;
    init_json["sigma1"] = init.sigma1;
    init_json["sigma2"] = init.sigma2;
    meta["init"] = std::move(init_json);
    meta["train_pairs"] = ds.pairs.size();

    TrainHooks hooks;
    hooks.log = &out;
    if (args.save_every_epoch) {
        hooks.on_epoch_end = [&](std::size_t epoch, const RetinaModel& model) {
            fs::path p = args.out;
            p.replace_extension(".epoch" + std::to_string(epoch) + ".json");
            write_checkpoint(p, model, meta);
        };
    }

    const TrainResult result = train(*source, args.cfg, init_model(init), hooks);
    nlohmann::ordered_json history = nlohmann::ordered_json::array();
    for (double h : result.history) history.push_back(h);
    meta["history"] = std::move(history);
    write_checkpoint(args.out, result.model, meta);
    out << "wrote " << args.out << " (" << result.steps << " steps)\n";
    return kExitOk;
}

// -----------------------------------------------------------------------------
// enhance
// -----------------------------------------------------------------------------

struct EnhanceArgs {
    std::string model;
    std::string input;
    std::string output;
};

int cmd_enhance(const EnhanceArgs& args, std::ostream& out) {
    const Checkpoint ck = read_checkpoint(args.model);
    const Image img = read_png(args.input);
    if (img.channels() != kNumChannels) {
        throw DataError(args.input + ": expected an RGB image");
    }
    write_png(args.output, infer(ck.model, img));
    out << "wrote " << args.output << '\n';
    return kExitOk;
}

// -----------------------------------------------------------------------------
// eval
// -----------------------------------------------------------------------------

struct EvalArgs {
    std::string model;
    DataFlags data;
    std::string json;
    bool baseline = false;
};

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
    const PairedDataset ds = args.data.discover_split(Split::Test, err);
    if (ds.pairs.empty()) {
        err << "error: no test pairs found\n";
        return kExitData;
    }
    EvalReport report;
    if (args.baseline) {
        report = evaluate_baseline(ds);
    } else {
        if (args.model.empty()) throw UsageError("--model is required unless --baseline is given");
        report = evaluate(read_checkpoint(args.model).model, ds);
    }

    const std::string json = report.to_json().dump(2) + "\n";
    if (args.json == "-") {
        out << json;
        return kExitOk;
    }
    out << report.to_table();
    if (!args.json.empty()) {
        write_file(args.json, std::span(reinterpret_cast<const std::uint8_t*>(json.data()), json.size()));
    }
    return kExitOk;
}

// -----------------------------------------------------------------------------
// kernels
// -----------------------------------------------------------------------------

struct KernelsArgs {
    std::string model;
    std::string out_dir;
    std::size_t scale = 32;
};

Image kernel_heatmap(const Kernel2D& k, std::size_t scale) {
    const auto w = k.weights();
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    const float range = *hi - *lo;
    const std::size_t n = k.size() * scale;
    Image img(n, n, 1);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
            const float v = k.at(y / scale, x / scale);
            img.at(y, x) = range > 0.0f ? (v - *lo) / range : 0.0f;
        }
    }
    return img;
}

int cmd_kernels(const KernelsArgs& args, std::ostream& out) {
    const Checkpoint ck = read_checkpoint(args.model);
    const fs::path dir = args.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) {
        throw DataError("cannot create output directory " + dir.string());
    }
    for (const auto& [name, stage] : {std::pair{"stage_g", &ck.model.stage_g}, std::pair{"stage_f", &ck.model.stage_f}}) {
        for (std::size_t c = 0; c < kNumChannels; ++c) {
            const fs::path p = dir / (std::string(name) + "_c" + std::to_string(c) + ".png");
            write_png(p, kernel_heatmap(stage->kernels[c], args.scale));
            out << "wrote " << p.string() << '\n';
        }
    }
    nlohmann::ordered_json dump = nlohmann::ordered_json::object();
    dump["padding"] = std::string(to_string(ck.model.padding));
    dump["stage_g"] = stage_to_json(ck.model.stage_g);
    dump["stage_f"] = stage_to_json(ck.model.stage_f);
    const std::string text = dump.dump(2) + "\n";
    const fs::path jp = dir / "kernels.json";
    write_file(jp, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    out << "wrote " << jp.string() << '\n';
    return kExitOk;
}

// -----------------------------------------------------------------------------
// compare
// -----------------------------------------------------------------------------

struct CompareArgs {
    std::string input;
    std::string variant = "residual";
    double alpha = 1.0;
    double beta = 1.0;
    double sigma = 1.0;
    std::string output;
    bool stats = false;
};

int cmd_compare(const CompareArgs& args, std::ostream& out) {
    VariantConfig cfg{args.alpha, args.beta, parse_variant(args.variant)};
    const Image img = read_png(args.input);
    if (img.channels() != kNumChannels) {
        throw DataError(args.input + ": expected an RGB image");
    }
    const Image b = modulate_bipolar(img, args.sigma, cfg);
    if (args.stats) {
        const auto d = b.data();
        const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
        double sum = 0.0;
        for (float v : d) sum += v;
        out << "variant=" << to_string(cfg.variant) << " min=" << format_real(*lo) << " max=" << format_real(*hi)
            << " mean=" << format_real(sum / static_cast<double>(d.size())) << '\n';
    }
    if (!args.output.empty()) {
        write_png(args.output, b);
        out << "wrote " << args.output << '\n';
    }
    return kExitOk;
}

// -----------------------------------------------------------------------------
// gradcheck
// -----------------------------------------------------------------------------

struct GradcheckArgs {
    std::uint64_t seed = 42;
    std::size_t draws = 20;
    double epsilon = 1e-4;
    double threshold = 1e-5;
    bool corrupt = false;
};

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out) {
    std::vector<double> worst(kParameterCount, 0.0);
    double overall = 0.0;
    for (std::size_t d = 0; d < args.draws; ++d) {
        const GradCheckDraw draw = make_gradcheck_draw(args.seed + d);
        const GradCheckReport report =
            grad_check(draw.model, draw.image, draw.target, {args.epsilon, args.corrupt});
        for (const auto& p : report.parameters) worst[p.index] = std::max(worst[p.index], p.relative_error);
        overall = std::max(overall, report.max_relative_error);
    }
    for (std::size_t i = 0; i < kParameterCount; ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-24s %.3e\n", parameter_name(i).c_str(), worst[i]);
        out << buf;
    }
    const bool pass = overall < args.threshold;
    out << "parameters=" << kParameterCount << " draws=" << args.draws << " max_relative_error=" << format_real(overall)
        << " threshold=" << format_real(args.threshold) << ' ' << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retina-inspired low-light image restoration", "retina"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train the network on a paired dataset");
    train_args.data.add_to(*train);
    train->add_option("--epochs", train_args.cfg.epochs)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--batch-size", train_args.cfg.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--lr", train_args.cfg.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--seed", train_args.cfg.seed)->capture_default_str();
    train->add_option("--sigma-g", train_args.init.sigma_g)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--sigma1", train_args.init.sigma1)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--sigma2", train_args.init.sigma2)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--padding", train_args.padding)->check(CLI::IsMember({"replicate", "zero"}))->capture_default_str();
    train->add_option("--out", train_args.out)->capture_default_str();
    train->add_flag("--save-every-epoch", train_args.save_every_epoch, "Also write <out>.epochN.json after each epoch");
    train->add_flag("--preload", train_args.cfg.preload, "Decode the whole training split up front");

    EnhanceArgs enhance_args;
    auto* enhance = app.add_subcommand("enhance", "Restore a single low-light PNG");
    enhance->add_option("--model", enhance_args.model)->required();
    enhance->add_option("--input", enhance_args.input)->required();
    enhance->add_option("--output", enhance_args.output)->required();

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Score a checkpoint on the test split (SSIM, PSNR)");
    eval->add_option("--model", eval_args.model);
    eval_args.data.add_to(*eval);
    eval->add_option("--json", eval_args.json, "Write the report as JSON to this path ('-' for stdout)");
    eval->add_flag("--baseline", eval_args.baseline, "Score the unenhanced low-light images instead of a model");

    KernelsArgs kernels_args;
    auto* kernels = app.add_subcommand("kernels", "Export kernel heatmaps and raw weights");
    kernels->add_option("--model", kernels_args.model)->required();
    kernels->add_option("--out-dir", kernels_args.out_dir)->required();
    kernels->add_option("--scale", kernels_args.scale)->check(CLI::PositiveNumber)->capture_default_str();

    CompareArgs compare_args;
    auto* compare = app.add_subcommand("compare", "Apply a bipolar-cell modulation variant to an image");
    compare->add_option("--input", compare_args.input)->required();
    compare->add_option("--variant", compare_args.variant)
        ->check(CLI::IsMember({"recursive", "fir", "residual"}))
        ->capture_default_str();
    compare->add_option("--alpha", compare_args.alpha)->capture_default_str();
    compare->add_option("--beta", compare_args.beta)->capture_default_str();
    compare->add_option("--sigma", compare_args.sigma)->check(CLI::PositiveNumber)->capture_default_str();
    compare->add_option("--output", compare_args.output);
    compare->add_flag("--stats", compare_args.stats, "Print min/max/mean of the unclamped result");

    GradcheckArgs gradcheck_args;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
    gradcheck->add_option("--seed", gradcheck_args.seed)->capture_default_str();
    gradcheck->add_option("--draws", gradcheck_args.draws)->check(CLI::PositiveNumber)->capture_default_str();
    gradcheck->add_option("--epsilon", gradcheck_args.epsilon)->check(CLI::PositiveNumber)->capture_default_str();
    gradcheck->add_flag("--corrupt-gradient", gradcheck_args.corrupt, "Debug: perturb the analytic gradient");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*train) return cmd_train(train_args, out, err);
        if (*enhance) return cmd_enhance(enhance_args, out);
        if (*eval) return cmd_eval(eval_args, out, err);
        if (*kernels) return cmd_kernels(kernels_args, out);
        if (*compare) return cmd_compare(compare_args, out);
        if (*gradcheck) return cmd_gradcheck(gradcheck_args, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidParameterError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DivisionByZeroError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace retina::cli
