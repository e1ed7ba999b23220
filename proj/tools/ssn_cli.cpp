// ssn: propose -> train -> detect -> eval -> plot-data over manifest datasets.

#include "ssn/io.hpp"
#include "ssn/pipeline.hpp"
#include "ssn/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

using namespace ssn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<Video> load(const fs::path& manifest_path, bool require_actionness, io::Manifest* out = nullptr) {
    io::Manifest m = io::read_manifest(manifest_path);
    std::vector<Video> videos = io::load_videos(m, require_actionness);
    if (out) *out = std::move(m);
    return videos;
}

// Fixed-format numbers keep CSV output stable.
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string threshold_key(double t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", t);
    return buf;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    SyntheticConfig cfg;
    double test_fraction = 0.5;
};

void run_synth(const SynthArgs& a) {
    const std::vector<Video> videos = generate_synthetic(a.cfg, "syn");
    const fs::path dir(a.out);
    const auto n_test = static_cast<std::size_t>(std::lround(a.test_fraction * static_cast<double>(videos.size())));
    io::Manifest train, test;
    for (std::size_t k = 1; k <= a.cfg.num_classes; ++k) train.classes.push_back("action_" + std::to_string(k));
    test.classes = train.classes;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        const Video& v = videos[i];
        const std::string rel = "features/" + v.id + ".ssnf";
        io::write_features(dir / rel, v.features);
        io::ManifestVideo mv{v.id, rel, std::nullopt, v.stride_frames, v.instances};
        (i < videos.size() - n_test ? train : test).videos.push_back(std::move(mv));
    }
    io::write_manifest(dir / "train.json", train);
    io::write_manifest(dir / "test.json", test);
    std::cerr << "wrote " << train.videos.size() << " training and " << test.videos.size() << " test videos to "
              << dir.string() << "\n";
}

// ---------------------------------------------------------------------------

struct ProbeArgs {
    std::string manifest;
    std::string from;
    std::string out;
    ProbeOptions options;
};

void run_probe(const ProbeArgs& a) {
    io::Manifest m;
    std::vector<Video> videos = load(a.manifest, false, &m);
    ActionnessProbe probe;
    if (a.from.empty()) {
        probe = fit_actionness(videos, a.options);
    } else {
        std::vector<Video> source = load(a.from, false);
        probe = fit_actionness(source, a.options);
        apply_actionness(videos, probe);
    }
    const fs::path out = a.out.empty() ? fs::path(a.manifest) : fs::path(a.out);
    const fs::path base = out.parent_path();
    for (std::size_t i = 0; i < videos.size(); ++i) {
        const std::string rel = "actionness/" + videos[i].id + ".ssna";
        io::write_actionness(base / rel, videos[i].actionness);
        m.videos[i].actionness_path = rel;
        const fs::path feat(m.videos[i].feature_path);
        if (feat.is_relative()) m.videos[i].feature_path = fs::relative(m.base_dir / feat, base.empty() ? "." : base).generic_string();
    }
    io::write_manifest(out, m);
    std::cerr << "scored actionness for " << videos.size() << " videos\n";
}

// ---------------------------------------------------------------------------

struct ProposeArgs {
    std::string manifest;
    std::string out;
    TagConfig tag;
};

void run_propose(const ProposeArgs& a) {
    const std::vector<Video> videos = load(a.manifest, true);
    io::write_proposals(a.out, propose(videos, a.tag));
    std::cerr << "proposed for " << videos.size() << " videos\n";
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string manifest;
    std::string proposals;
    std::string config;
    std::string out;
    std::string log;
    std::optional<std::size_t> epochs;
    std::optional<std::uint64_t> seed;
    std::optional<double> learning_rate;
};

json stats_json(const StepStats& s) {
    return {{"loss", s.loss}, {"activity", s.activity}, {"completeness", s.completeness}, {"regression", s.regression}};
}

void run_train(const TrainArgs& a) {
    io::Manifest m;
    const std::vector<Video> videos = load(a.manifest, false, &m);
    if (videos.empty()) throw TrainingError("the manifest lists no videos");
    TrainConfig cfg = a.config.empty() ? TrainConfig{} : io::read_train_config(a.config);
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.seed) cfg.seed = *a.seed;
    if (a.learning_rate) cfg.learning_rate = *a.learning_rate;

    const io::ProposalFile props = io::read_proposals(a.proposals);
    const std::size_t K = std::max<std::size_t>(1, m.num_classes());
    const TrainResult r = train(videos, align_proposals(videos, props), cfg, K);
    io::write_checkpoint(a.out, r.params);

    json iterations = json::array();
    for (const StepStats& s : r.iterations) iterations.push_back(stats_json(s));
    const json log{{"config", io::train_config_to_json(cfg)},
                   {"pools",
                    {{"positive", r.pool_positive}, {"background", r.pool_background}, {"incomplete", r.pool_incomplete}}},
                   {"batch",
                    {{"positive", r.composition.positive},
                     {"background", r.composition.background},
                     {"incomplete", r.composition.incomplete}}},
                   {"epoch_loss", r.epoch_loss},
                   {"iterations", std::move(iterations)}};
    io::write_json(a.log.empty() ? a.out + ".log.json" : a.log, log);
    std::cerr << "trained " << r.iterations.size() << " iterations";
    if (!r.epoch_loss.empty()) std::cerr << ", final epoch loss " << r.epoch_loss.back();
    std::cerr << "\n";
}

// ---------------------------------------------------------------------------

struct DetectArgs {
    std::string manifest;
    std::string proposals;
    std::string model;
    std::string out;
    DetectOptions options;
};

void run_detect(const DetectArgs& a) {
    const std::vector<Video> videos = load(a.manifest, false);
    const ModelParams params = io::read_checkpoint(a.model);
    const io::ProposalFile props = io::read_proposals(a.proposals);
    const std::vector<Detection> dets = detect(videos, props, params, a.options);
    io::write_detections(a.out, dets);
    std::cerr << "wrote " << dets.size() << " detections\n";
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string manifest;
    std::string detections;
    std::string proposals;
    std::string metric = "map";
    std::string grid = "activitynet";
    std::string interpolation = "all";
    std::vector<std::size_t> budgets{10, 50, 100};
    std::string out;
};

json map_report(const EvalArgs& a, const io::Manifest& m) {
    if (a.detections.empty()) throw std::invalid_argument("--metric map needs --detections");
    const auto dets = io::read_detections(a.detections);
    const auto gts = m.instances();
    const std::vector<double> grid = a.grid == "thumos" ? thumos_thresholds() : activitynet_thresholds();
    const Interpolation interp = a.interpolation == "11" ? Interpolation::ElevenPoint : Interpolation::AllPoint;
    const MapReport r = mean_ap(dets, gts, grid, interp);

    json table = json::object();
    for (std::size_t i = 0; i < grid.size(); ++i) table[threshold_key(grid[i])] = r.map[i];
    json columns = json::object();
    const std::vector<double> shown = a.grid == "thumos" ? grid : report_thresholds();
    for (double t : shown) columns[threshold_key(t)] = mean_ap(dets, gts, std::vector<double>{t}, interp).map[0];
    columns["average"] = r.average;
    json per_class = json::object();
    for (const auto& [label, aps] : r.per_class) {
        const std::string name = label >= 1 && static_cast<std::size_t>(label) <= m.classes.size()
                                     ? m.classes[static_cast<std::size_t>(label) - 1]
                                     : "class_" + std::to_string(label);
        json row = json::object();
        for (std::size_t i = 0; i < grid.size(); ++i) row[threshold_key(grid[i])] = aps[i];
        per_class[name] = std::move(row);
    }
    return {{"metric", "map"},
            {"grid", a.grid},
            {"interpolation", a.interpolation == "11" ? "11-point" : "all-point"},
            {"detections", dets.size()},
            {"instances", gts.size()},
            {"columns", std::move(columns)},
            {"map", std::move(table)},
            {"average_map", r.average},
            {"per_class", std::move(per_class)}};
}

json ar_report(const EvalArgs& a, const io::Manifest& m) {
    if (a.proposals.empty()) throw std::invalid_argument("--metric ar needs --proposals");
    const ProposalSet set = to_proposal_set(io::read_proposals(a.proposals));
    const auto gts = m.instances();
    const std::vector<double> grid = a.grid == "thumos" ? thumos_thresholds() : activitynet_thresholds();
    std::vector<std::size_t> budgets = a.budgets;
    budgets.push_back(0);
    json rows = json::array();
    for (std::size_t b : budgets) {
        json recall = json::object();
        for (double t : grid) recall[threshold_key(t)] = recall_at_iou(set, gts, t, b);
        rows.push_back({{"proposals_per_video", b == 0 ? json("all") : json(b)},
                        {"average_recall", average_recall(set, gts, grid, b)},
                        {"recall", std::move(recall)}});
    }
    return {{"metric", "ar"}, {"grid", a.grid}, {"instances", gts.size()}, {"table", std::move(rows)}};
}

void run_eval(const EvalArgs& a) {
    const io::Manifest m = io::read_manifest(a.manifest);
    const json report = a.metric == "ar" ? ar_report(a, m) : map_report(a, m);
    if (a.out.empty()) std::cout << report.dump(2) << "\n";
    else io::write_json(a.out, report);
}

// ---------------------------------------------------------------------------

struct PlotArgs {
    std::string manifest;
    std::string proposals;
    std::string detections;
    std::string out_dir;
    double iou = 0.5;
    std::size_t top_k = 0;
};

void run_plot(const PlotArgs& a) {
    const io::Manifest m = io::read_manifest(a.manifest);
    const auto gts = m.instances();
    const fs::path dir(a.out_dir);
    if (a.proposals.empty() && a.detections.empty())
        throw std::invalid_argument("plot-data needs --proposals and/or --detections");
    if (!a.proposals.empty()) {
        const ProposalSet set = to_proposal_set(io::read_proposals(a.proposals));
        std::ostringstream csv;
        csv << "iou,recall\n";
        for (int i = 1; i <= 19; ++i) {
            const double t = 0.05 * i;
            csv << threshold_key(t) << "," << num(recall_at_iou(set, gts, t, a.top_k)) << "\n";
        }
        io::write_file_atomic(dir / "recall_vs_iou.csv", csv.str());
    }
    if (!a.detections.empty()) {
        const auto dets = io::read_detections(a.detections);
        std::ostringstream csv;
        csv << "class,rank,score,recall,precision\n";
        for (std::size_t k = 1; k <= m.num_classes(); ++k) {
            const auto pr = precision_recall(dets, gts, static_cast<int>(k), a.iou);
            for (std::size_t i = 0; i < pr.size(); ++i)
                csv << m.classes[k - 1] << "," << i + 1 << "," << num(pr[i].score) << "," << num(pr[i].recall) << ","
                    << num(pr[i].precision) << "\n";
        }
        io::write_file_atomic(dir / "precision_recall.csv", csv.str());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structured segment network detector: temporal actionness grouping proposals, "
                 "pyramid-pooled classifiers, evaluation."};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Write a synthetic dataset with planted instances");
    c_synth->add_option("--out", synth.out, "Output directory")->required();
    c_synth->add_option("--videos", synth.cfg.num_videos, "Number of videos")->capture_default_str();
    c_synth->add_option("--snippets", synth.cfg.num_snippets, "Snippets per video")->capture_default_str();
    c_synth->add_option("--dim", synth.cfg.feature_dim, "Feature dimension")->capture_default_str();
    c_synth->add_option("--classes", synth.cfg.num_classes, "Number of activity classes")->capture_default_str();
    c_synth->add_option("--noise", synth.cfg.noise, "Feature noise standard deviation")->capture_default_str();
    c_synth->add_option("--seed", synth.cfg.seed, "Random seed")->capture_default_str();
    c_synth->add_option("--test-fraction", synth.test_fraction, "Share of videos in test.json")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();

    ProbeArgs probe;
    auto* c_probe = app.add_subcommand("probe", "Fit a logistic actionness probe and write actionness files");
    c_probe->add_option("--manifest", probe.manifest, "Dataset manifest to score")->required();
    c_probe->add_option("--from", probe.from, "Fit on this manifest instead (e.g. the training split)");
    c_probe->add_option("--out", probe.out, "Updated manifest (default: overwrite --manifest)");
    c_probe->add_option("--epochs", probe.options.epochs, "SGD epochs")->capture_default_str();
    c_probe->add_option("--lr", probe.options.learning_rate, "Learning rate")->capture_default_str();
    c_probe->add_option("--seed", probe.options.seed, "Random seed")->capture_default_str();

    ProposeArgs propose_args;
    auto* c_propose = app.add_subcommand("propose", "Generate TAG proposals from actionness");
    c_propose->add_option("--manifest", propose_args.manifest, "Dataset manifest")->required();
    c_propose->add_option("--out", propose_args.out, "Proposal JSON")->required();
    c_propose->add_option("--grid-step", propose_args.tag.grid_step, "Step of the gamma/tau grid")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6))
        ->capture_default_str();
    c_propose->add_option("--nms-iou", propose_args.tag.nms_iou, "NMS threshold on the union")->capture_default_str();
    c_propose->add_option("--top-k", propose_args.tag.max_proposals, "Keep at most this many per video (0 = all)")
        ->capture_default_str();

    TrainArgs train_args;
    auto* c_train = app.add_subcommand("train", "Train the classifiers and regressors");
    c_train->add_option("--manifest", train_args.manifest, "Training manifest")->required();
    c_train->add_option("--proposals", train_args.proposals, "Proposal JSON")->required();
    c_train->add_option("--config", train_args.config, "Training config JSON");
    c_train->add_option("--out", train_args.out, "Checkpoint path")->required();
    c_train->add_option("--log", train_args.log, "Loss log JSON (default: <out>.log.json)");
    c_train->add_option("--epochs", train_args.epochs, "Override the config's epoch count");
    c_train->add_option("--seed", train_args.seed, "Override the config's seed");
    c_train->add_option("--lr", train_args.learning_rate, "Override the config's learning rate");

    DetectArgs detect_args;
    auto* c_detect = app.add_subcommand("detect", "Score proposals and write detections");
    c_detect->add_option("--manifest", detect_args.manifest, "Dataset manifest")->required();
    c_detect->add_option("--proposals", detect_args.proposals, "Proposal JSON")->required();
    c_detect->add_option("--model", detect_args.model, "Checkpoint")->required();
    c_detect->add_option("--out", detect_args.out, "Detection JSON")->required();
    c_detect->add_flag("--naive", detect_args.options.naive, "Pool features first, then classify");
    c_detect->add_option("--score-threshold", detect_args.options.post.score_threshold, "Drop lower scores")
        ->capture_default_str();
    c_detect->add_option("--nms-iou", detect_args.options.post.nms_iou, "Per-class NMS threshold")
        ->capture_default_str();

    EvalArgs eval_args;
    auto* c_eval = app.add_subcommand("eval", "mAP of detections or average recall of proposals");
    c_eval->add_option("--manifest", eval_args.manifest, "Ground-truth manifest")->required();
    c_eval->add_option("--detections", eval_args.detections, "Detection JSON (map)");
    c_eval->add_option("--proposals", eval_args.proposals, "Proposal JSON (ar)");
    c_eval->add_option("--metric", eval_args.metric, "map or ar")
        ->check(CLI::IsMember({"map", "ar"}))
        ->capture_default_str();
    c_eval->add_option("--grid", eval_args.grid, "IoU grid: activitynet (0.5:0.05:0.95) or thumos (0.1:0.1:0.5)")
        ->check(CLI::IsMember({"activitynet", "thumos"}))
        ->capture_default_str();
    c_eval->add_option("--interpolation", eval_args.interpolation, "AP interpolation: all or 11")
        ->check(CLI::IsMember({"all", "11"}))
        ->capture_default_str();
    c_eval->add_option("--budgets", eval_args.budgets, "Proposal budgets for the AR table")->capture_default_str();
    c_eval->add_option("--out", eval_args.out, "Report JSON (default: stdout)");

    PlotArgs plot;
    auto* c_plot = app.add_subcommand("plot-data", "Write recall-vs-IoU and precision-recall CSV files");
    c_plot->add_option("--manifest", plot.manifest, "Ground-truth manifest")->required();
    c_plot->add_option("--proposals", plot.proposals, "Proposal JSON");
    c_plot->add_option("--detections", plot.detections, "Detection JSON");
    c_plot->add_option("--out-dir", plot.out_dir, "Directory for the CSV files")->required();
    c_plot->add_option("--iou", plot.iou, "IoU threshold of the PR curves")->capture_default_str();
    c_plot->add_option("--top-k", plot.top_k, "Proposal budget per video (0 = all)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*c_synth) run_synth(synth);
        else if (*c_probe) run_probe(probe);
        else if (*c_propose) run_propose(propose_args);
        else if (*c_train) run_train(train_args);
        else if (*c_detect) run_detect(detect_args);
        else if (*c_eval) run_eval(eval_args);
        else if (*c_plot) run_plot(plot);
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return 1;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
