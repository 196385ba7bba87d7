#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gazekit/checkpoint.hpp"
#include "gazekit/eval.hpp"
#include "gazekit/model.hpp"
#include "gazekit/synth.hpp"

namespace fs = std::filesystem;
using namespace gazekit;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(std::stoi(item));
    }
    if (out.empty()) {
        throw std::invalid_argument("expected a comma-separated integer list, got '" + csv + "'");
    }
    return out;
}

int default_threads() {
    if (const char* env = std::getenv("GAZEKIT_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) {
            return n;
        }
    }
    return 1;
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
    fs::path out = path;
    out.replace_filename(path.stem().string() + suffix + path.extension().string());
    return out;
}

struct GenArgs {
    int n = 1000;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::vector<double> yaw_range = {-kPi, kPi};
    std::vector<double> pitch_range = {-kPi / 2, kPi / 2};
    std::vector<double> scale_range = {0.5, 1.0};
    double noise = 0.02;
    int sequences = 0;  // 0 = static dataset
    int frames = 7;
    double drift = 0.05;
};

int run_gen(const GenArgs& a) {
    if (a.yaw_range.size() != 2 || a.pitch_range.size() != 2 || a.scale_range.size() != 2) {
        throw std::invalid_argument("ranges need exactly two values: lo hi");
    }
    fs::create_directories(a.out_dir);
    const fs::path manifest = fs::path(a.out_dir) / "manifest.jsonl";

    std::vector<Sample> samples;
    if (a.sequences == 0) {
        samples = generate_dataset(a.n, a.seed, {a.yaw_range[0], a.yaw_range[1]},
                                   {a.pitch_range[0], a.pitch_range[1]},
                                   {a.scale_range[0], a.scale_range[1]}, a.noise);
    } else {
        // Each clip starts at a seeded yaw leaving room for the drift.
        const double span = (a.frames - 1) * a.drift;
        const double lo = a.yaw_range[0] + std::max(0.0, -span);
        const double hi = a.yaw_range[1] - std::max(0.0, span);
        if (lo > hi) {
            throw std::invalid_argument("gen: drift leaves no room for the start yaw");
        }
        for (int k = 0; k < a.sequences; ++k) {
            std::vector<Sample> starts = generate_dataset(
                1, a.seed + 0x53 * (k + 1), {lo, hi}, {a.pitch_range[0], a.pitch_range[1]},
                {a.scale_range[0], a.scale_range[1]}, a.noise);
            std::vector<Sample> clip = generate_sequence(a.frames, starts[0].label, a.drift,
                                                         starts[0].meta.at("scale"),
                                                         a.seed + 0x151 * (k + 1), a.noise);
            for (Sample& s : clip) {
                s.meta["seq_id"] = k;
                samples.push_back(std::move(s));
            }
        }
    }
    save_manifest(samples, manifest);
    std::cout << samples.size() << " samples written to " << manifest.string() << "\n";
    return 0;
}

struct TrainArgs {
    std::string manifest;
    std::string out_ckpt = "model.gzk";
    std::string history = "history.csv";
    TrainConfig config;
    std::string head = "encoded";
    std::string agg = "spatial_max";
    std::string loss = "pinball";
    std::string crops = "64,57,50,43";
};

HeadMode parse_head(const std::string& s) {
    if (s == "encoded") {
        return HeadMode::encoded;
    }
    if (s == "raw") {
        return HeadMode::raw;
    }
    throw std::invalid_argument("unknown head mode '" + s + "'");
}

Aggregation parse_agg(const std::string& s) {
    if (s == "spatial_max") {
        return Aggregation::spatial_max;
    }
    if (s == "max_1d") {
        return Aggregation::max_1d;
    }
    if (s == "single_scale") {
        return Aggregation::single_scale;
    }
    throw std::invalid_argument("unknown aggregation '" + s + "'");
}

Decoder parse_decoder(const std::string& s) {
    if (s == "sc") {
        return Decoder::sc;
    }
    if (s == "wsc") {
        return Decoder::wsc;
    }
    if (s == "raw") {
        return Decoder::raw;
    }
    throw std::invalid_argument("unknown decoder '" + s + "'");
}

int run_train(TrainArgs& a) {
    a.config.head_mode = parse_head(a.head);
    a.config.aggregation = parse_agg(a.agg);
    a.config.loss = a.loss == "regularized" ? LossKind::regularized : LossKind::pinball;
    if (a.loss != "pinball" && a.loss != "regularized") {
        throw std::invalid_argument("unknown loss '" + a.loss + "'");
    }
    a.config.crops = parse_int_list(a.crops);
    CropSchedule check_schedule(a.config.crops);  // full config validation before any work
    (void)check_schedule;

    const std::vector<Sample> dataset = load_manifest(a.manifest);
    TrainResult result = train(dataset, a.config);

    save_checkpoint({result.params, a.config.crops}, a.out_ckpt);
    const fs::path tmp = a.history + ".tmp";
    {
        std::ofstream hist(tmp, std::ios::trunc);
        if (!hist) {
            throw std::runtime_error("cannot open " + tmp.string());
        }
        hist.precision(17);
        hist << "epoch,train_loss,val_angular_error_rad\n";
        for (const EpochStats& e : result.history) {
            hist << e.epoch << ',' << e.train_loss << ',' << e.val_error_rad << '\n';
        }
    }
    fs::rename(tmp, a.history);

    const EpochStats& last = result.history.back();
    std::cout << "trained " << a.config.epochs << " epochs; final train loss " << last.train_loss
              << ", val angular error " << last.val_error_rad << " rad\n"
              << "checkpoint: " << a.out_ckpt << "\nhistory: " << a.history << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string json_out = "report.json";
    std::string csv_out = "report.csv";
    std::string decoder;  // empty = match head mode
    std::string crops;    // empty = use checkpoint's schedule
    bool compare = false;
    std::string group_key;
    int bins = 10;
    std::string perturb;  // comma-separated magnifications
    std::string yaw_hist;
    int threads = default_threads();
};

int run_eval(const EvalArgs& a) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    std::vector<int> crops = ckpt.crops;
    if (!a.crops.empty()) {
        crops = parse_int_list(a.crops);
    }
    if (crops.empty()) {
        throw std::invalid_argument("eval: checkpoint carries no crop schedule; pass --crops");
    }
    const CropSchedule schedule(crops);
    Decoder decoder = ckpt.params.spec.head_mode == HeadMode::encoded ? Decoder::wsc : Decoder::raw;
    if (!a.decoder.empty()) {
        decoder = parse_decoder(a.decoder);
    }
    std::optional<std::vector<int>> magnifications;
    if (!a.perturb.empty()) {
        magnifications = parse_int_list(a.perturb);
    }

    const std::vector<Sample> dataset = load_manifest(a.manifest);
    ModelPredictor model(ckpt.params, schedule);

    const EvalReport report = evaluate(model, dataset, decoder, a.threads);
    std::optional<DecoderComparison> cmp;
    if (a.compare) {
        cmp = compare_decoders(model, dataset, a.threads);
    }
    std::optional<std::vector<MetaGroupRow>> groups;
    if (!a.group_key.empty()) {
        groups = group_by_meta(model, dataset, decoder, a.group_key, a.bins, a.threads);
    }
    std::optional<PerturbationReport> perturbation;
    if (magnifications) {
        perturbation = scale_robustness(model, dataset, decoder, *magnifications, a.threads);
    }

    write_eval_json(a.json_out, &report, cmp ? &*cmp : nullptr, groups ? &*groups : nullptr,
                    perturbation ? &*perturbation : nullptr);
    write_report_csv(report, a.csv_out);
    if (cmp) {
        const fs::path path = with_suffix(a.csv_out, "_decoders");
        std::ofstream out(path, std::ios::trunc);
        out.precision(17);
        out << "decoder,bin,mean_angular_error_rad,count\n";
        for (const EvalReport* r : {&cmp->sc, &cmp->wsc}) {
            out << r->decoder << ",all360," << r->overall_mean_rad << ',' << r->n << '\n';
            out << r->decoder << ",front180," << r->front180.mean_rad << ',' << r->front180.count << '\n';
            out << r->decoder << ",front40," << r->front40.mean_rad << ',' << r->front40.count << '\n';
            out << r->decoder << ",back," << r->back.mean_rad << ',' << r->back.count << '\n';
        }
    }
    if (groups) {
        write_groups_csv(*groups, with_suffix(a.csv_out, "_groups"));
    }
    if (perturbation) {
        write_perturbation_csv(*perturbation, with_suffix(a.csv_out, "_perturb"));
    }
    if (!a.yaw_hist.empty()) {
        if (ckpt.params.spec.head_mode != HeadMode::encoded) {
            throw std::invalid_argument("--yaw-hist needs an encoded-head checkpoint");
        }
        std::vector<YawEstimates> estimates;
        std::vector<double> truths;
        estimates.reserve(dataset.size());
        for (const Sample& s : dataset) {
            const ModelOutput out = model.predict(s.image);
            estimates.push_back(decode_yaw_wsc(EncodedGaze(out.s_theta, out.c_theta, out.s_phi)).estimates);
            truths.push_back(s.label.yaw);
        }
        write_histogram_csv(yaw_histogram(estimates, truths), a.yaw_hist);
    }

    std::cout << "n=" << report.n << " decoder=" << report.decoder << "\n"
              << "overall mean angular error: " << report.overall_mean_rad << " rad\n"
              << "front180: " << report.front180.mean_rad << " rad (" << report.front180.count << ")\n"
              << "back: " << report.back.mean_rad << " rad (" << report.back.count << ")\n";
    return 0;
}

int run_decode(const std::string& s_str, const std::string& c_str, const std::string& sphi_str) {
    double s, c, s_phi;
    try {
        std::size_t pos = 0;
        s = std::stod(s_str, &pos);
        if (pos != s_str.size()) {
            throw std::invalid_argument(s_str);
        }
        c = std::stod(c_str, &pos);
        if (pos != c_str.size()) {
            throw std::invalid_argument(c_str);
        }
        s_phi = std::stod(sphi_str, &pos);
        if (pos != sphi_str.size()) {
            throw std::invalid_argument(sphi_str);
        }
    } catch (const std::exception&) {
        throw std::invalid_argument("decode: arguments must be three real numbers");
    }
    if (s < -1 || s > 1 || c < -1 || c > 1 || s_phi < -1 || s_phi > 1) {
        std::cerr << "warning: inputs outside [-1, 1] clamped\n";
    }
    const EncodedGaze e(s, c, s_phi);
    const WscDecode wsc = decode_yaw_wsc(e);
    std::cout.precision(6);
    std::cout << std::fixed;
    std::cout << "theta_s=" << wsc.estimates.theta_s << "\ntheta_c=" << wsc.estimates.theta_c
              << "\ntheta_sc=" << decode_yaw_sc(e) << "\ntheta_wsc=" << wsc.yaw
              << "\nw=" << wsc.estimates.weight_w << "\npitch=" << decode_pitch(e) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gazekit: multi-scale gaze regression on synthetic or manifest data"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("gen", "generate a synthetic dataset (PGMs + JSONL manifest)");
    cmd_gen->add_option("--n", gen.n, "number of samples (static mode)");
    cmd_gen->add_option("--seed", gen.seed, "master seed");
    cmd_gen->add_option("--out", gen.out_dir, "output directory")->required();
    cmd_gen->add_option("--yaw-range", gen.yaw_range, "yaw range lo hi (rad)")->expected(2);
    cmd_gen->add_option("--pitch-range", gen.pitch_range, "pitch range lo hi (rad)")->expected(2);
    cmd_gen->add_option("--scale-range", gen.scale_range, "head scale range lo hi")->expected(2);
    cmd_gen->add_option("--noise", gen.noise, "additive noise amplitude");
    cmd_gen->add_option("--sequences", gen.sequences, "emit this many drifting clips instead");
    cmd_gen->add_option("--frames", gen.frames, "frames per clip (odd)");
    cmd_gen->add_option("--drift", gen.drift, "yaw drift per frame (rad)");

    TrainArgs tr;
    CLI::App* cmd_train = app.add_subcommand("train", "train a model from a manifest");
    cmd_train->add_option("--manifest", tr.manifest, "training manifest")->required();
    cmd_train->add_option("--out", tr.out_ckpt, "checkpoint output path");
    cmd_train->add_option("--history", tr.history, "history CSV output path");
    cmd_train->add_option("--epochs", tr.config.epochs, "training epochs")->required();
    cmd_train->add_option("--seed", tr.config.seed, "seed for init/shuffles/split");
    cmd_train->add_option("--lr", tr.config.learning_rate, "Adam learning rate");
    cmd_train->add_option("--batch", tr.config.batch_size, "batch size");
    cmd_train->add_option("--head", tr.head, "head mode: encoded|raw");
    cmd_train->add_option("--agg", tr.agg, "aggregation: spatial_max|max_1d|single_scale");
    cmd_train->add_option("--loss", tr.loss, "loss: pinball|regularized");
    cmd_train->add_option("--reg-weight", tr.config.reg_weight, "pinball weight in the regularized loss");
    cmd_train->add_option("--crops", tr.crops, "crop schedule, e.g. 64,57,50,43");
    cmd_train->add_option("--val-frac", tr.config.val_fraction, "validation fraction of the dataset");

    EvalArgs ev;
    CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint against a manifest");
    cmd_eval->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
    cmd_eval->add_option("--manifest", ev.manifest, "evaluation manifest")->required();
    cmd_eval->add_option("--json", ev.json_out, "JSON report path");
    cmd_eval->add_option("--csv", ev.csv_out, "CSV report path");
    cmd_eval->add_option("--decoder", ev.decoder, "decoder: wsc|sc|raw (default matches head)");
    cmd_eval->add_option("--crops", ev.crops, "override the checkpoint crop schedule");
    cmd_eval->add_flag("--compare-decoders", ev.compare, "also report sc vs wsc on shared forwards");
    cmd_eval->add_option("--group-by", ev.group_key, "bin by this metadata key");
    cmd_eval->add_option("--bins", ev.bins, "bin count for --group-by");
    cmd_eval->add_option("--perturb", ev.perturb, "zoom magnifications, e.g. 4,8,12,16");
    cmd_eval->add_option("--yaw-hist", ev.yaw_hist, "write the 72-bin yaw histogram CSV here");
    cmd_eval->add_option("--threads", ev.threads, "evaluation threads (env GAZEKIT_THREADS)");

    std::vector<std::string> decode_vals;
    CLI::App* cmd_decode = app.add_subcommand("decode", "decode an encoded triple: s_theta c_theta s_phi");
    cmd_decode->add_option("values", decode_vals, "s_theta c_theta s_phi")->expected(3);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (cmd_gen->parsed()) {
            return run_gen(gen);
        }
        if (cmd_train->parsed()) {
            return run_train(tr);
        }
        if (cmd_eval->parsed()) {
            return run_eval(ev);
        }
        if (cmd_decode->parsed()) {
            return run_decode(decode_vals[0], decode_vals[1], decode_vals[2]);
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
