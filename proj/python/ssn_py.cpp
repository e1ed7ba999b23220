#include "ssn/io.hpp"
#include "ssn/pipeline.hpp"
#include "ssn/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace ssn;

namespace {

Interval interval_from(const py::handle& h) {
    if (py::isinstance<Interval>(h)) return h.cast<Interval>();
    const auto seq = h.cast<py::sequence>();
    if (seq.size() != 2) throw py::value_error("an interval is a (start, end) pair");
    return {seq[0].cast<double>(), seq[1].cast<double>()};
}

std::vector<Interval> intervals_from(const py::iterable& items) {
    std::vector<Interval> out;
    for (const auto& h : items) out.push_back(interval_from(h));
    return out;
}

std::vector<ScoredInterval> scored_from(const py::iterable& items) {
    std::vector<ScoredInterval> out;
    for (const auto& h : items) {
        if (py::isinstance<ScoredInterval>(h)) {
            out.push_back(h.cast<ScoredInterval>());
            continue;
        }
        const auto seq = h.cast<py::sequence>();
        if (seq.size() == 2) out.push_back({interval_from(seq[0]), seq[1].cast<double>()});
        else if (seq.size() == 3) out.push_back({{seq[0].cast<double>(), seq[1].cast<double>()}, seq[2].cast<double>()});
        else throw py::value_error("a scored interval is ((start, end), score) or (start, end, score)");
    }
    return out;
}

py::dict stage_dict(const StageFeatures& f) {
    py::dict d;
    d["starting"] = f.starting;
    d["course"] = f.course;
    d["ending"] = f.ending;
    d["global"] = f.global();
    return d;
}

} // namespace

PYBIND11_MODULE(_ssn, m) {
    m.doc() = "Structured segment network core";
    m.attr("__version__") = "0.1.0";

    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

    // -- intervals ----------------------------------------------------------
    py::class_<Interval>(m, "Interval")
        .def(py::init<double, double>(), py::arg("start"), py::arg("end"))
        .def_readwrite("start", &Interval::start)
        .def_readwrite("end", &Interval::end)
        .def_property_readonly("duration", &Interval::duration)
        .def_property_readonly("center", &Interval::center)
        .def(py::self == py::self)
        .def("__iter__", [](const Interval& i) { return py::iter(py::make_tuple(i.start, i.end)); })
        .def("__repr__", [](const Interval& i) {
            return "Interval(" + std::to_string(i.start) + ", " + std::to_string(i.end) + ")";
        });

    py::class_<ScoredInterval>(m, "ScoredInterval")
        .def(py::init([](const py::object& iv, double score) { return ScoredInterval{interval_from(iv), score}; }),
             py::arg("interval"), py::arg("score"))
        .def_readwrite("interval", &ScoredInterval::interval)
        .def_readwrite("score", &ScoredInterval::score)
        .def(py::self == py::self);

    py::class_<GroundTruth>(m, "GroundTruth")
        .def(py::init([](std::string vid, const py::object& iv, int label) {
                 return GroundTruth{std::move(vid), interval_from(iv), label};
             }),
             py::arg("video_id"), py::arg("interval"), py::arg("label"))
        .def_readwrite("video_id", &GroundTruth::video_id)
        .def_readwrite("interval", &GroundTruth::interval)
        .def_readwrite("label", &GroundTruth::label);

    py::enum_<Stage>(m, "Stage")
        .value("STARTING", Stage::Starting)
        .value("COURSE", Stage::Course)
        .value("ENDING", Stage::Ending);

    py::class_<AugmentedProposal>(m, "AugmentedProposal")
        .def_readonly("original", &AugmentedProposal::original)
        .def_readonly("starting", &AugmentedProposal::starting)
        .def_readonly("course", &AugmentedProposal::course)
        .def_readonly("ending", &AugmentedProposal::ending);

    m.def("iou", [](const py::object& a, const py::object& b) { return iou(interval_from(a), interval_from(b)); });
    m.def("augment", [](const py::object& p, double length) { return augment(interval_from(p), length); },
          py::arg("proposal"), py::arg("video_length"));
    m.def("nms", [](const py::iterable& items, double threshold) { return nms(scored_from(items), threshold); },
          py::arg("items"), py::arg("threshold"));

    // -- TAG ----------------------------------------------------------------
    m.def("flood_basins", [](const std::vector<double>& a, double gamma) { return flood_basins(a, gamma); },
          py::arg("actionness"), py::arg("gamma"));
    m.def("group_from_seed",
          [](const py::iterable& basins, std::size_t seed, double tau) {
              return group_from_seed(intervals_from(basins), seed, tau);
          },
          py::arg("basins"), py::arg("seed"), py::arg("tau"));
    m.def("generate_proposals",
          [](const std::vector<double>& a, double step, double nms_iou, std::size_t max_proposals) {
              return generate_proposals(a, TagConfig{step, nms_iou, max_proposals});
          },
          py::arg("actionness"), py::arg("grid_step") = 0.05, py::arg("nms_iou") = 0.95, py::arg("max_proposals") = 0);

    // -- STPP and model -------------------------------------------------------
    py::enum_<PoolMode>(m, "PoolMode").value("AVERAGE", PoolMode::Average).value("MAX", PoolMode::Max);

    py::class_<PyramidConfig>(m, "PyramidConfig")
        .def(py::init([](const std::string& label) { return parse_pyramid(label); }), py::arg("label") = "(1,2)-1")
        .def_readwrite("course_levels", &PyramidConfig::course_levels)
        .def_readwrite("use_augmentation", &PyramidConfig::use_augmentation)
        .def_readwrite("mode", &PyramidConfig::mode)
        .def_property_readonly("num_regions", &PyramidConfig::num_regions)
        .def("label", &PyramidConfig::label)
        .def("__repr__", [](const PyramidConfig& c) { return "PyramidConfig('" + c.label() + "')"; });

    m.def("stpp_features",
          [](const FeatureMatrix& f, const py::object& proposal, const PyramidConfig& cfg, bool sparse_center) {
              const AugmentedProposal ap = augment(interval_from(proposal), static_cast<double>(f.rows()));
              if (!sparse_center) return stage_dict(stpp_features(f, ap, cfg));
              const SparseSample s = sparse_sample_center(ap, static_cast<std::size_t>(f.rows()));
              return stage_dict(stpp_features(f, ap, cfg, &s));
          },
          py::arg("features"), py::arg("proposal"), py::arg("pyramid") = PyramidConfig{},
          py::arg("sparse_center") = false);

    py::class_<ModelParams>(m, "ModelParams")
        .def_static("zeros", &ModelParams::zeros, py::arg("num_classes"), py::arg("feature_dim"),
                    py::arg("pyramid") = PyramidConfig{}, py::arg("lambda_") = 1.0)
        .def_readonly("num_classes", &ModelParams::num_classes)
        .def_readonly("feature_dim", &ModelParams::feature_dim)
        .def_readonly("pyramid", &ModelParams::pyramid)
        .def_readwrite("lambda_", &ModelParams::lambda)
        .def_readwrite("activity_w", &ModelParams::activity_w)
        .def_readwrite("activity_b", &ModelParams::activity_b)
        .def_readwrite("completeness_w", &ModelParams::completeness_w)
        .def_readwrite("completeness_b", &ModelParams::completeness_b)
        .def_readwrite("regression_w", &ModelParams::regression_w)
        .def_readwrite("regression_b", &ModelParams::regression_b)
        .def("validate", &ModelParams::validate);

    m.def("joint_score",
          [](const ModelParams& p, const FeatureMatrix& f, const py::object& proposal) {
              const AugmentedProposal ap = augment(interval_from(proposal), static_cast<double>(f.rows()));
              return Vector(joint_score(p, stpp_features(f, ap, p.pyramid)));
          },
          py::arg("params"), py::arg("features"), py::arg("proposal"));
    m.def("regression_targets",
          [](const py::object& p, const py::object& g) {
              const RegressionTarget t = regression_targets(interval_from(p), interval_from(g));
              return py::make_tuple(t.center_shift, t.log_span);
          });
    m.def("apply_regression", [](const py::object& p, double center_shift, double log_span) {
        return apply_regression(interval_from(p), {center_shift, log_span});
    });
    m.def("smooth_l1", &smooth_l1);

    // -- videos and the pipeline ----------------------------------------------
    py::class_<Video>(m, "Video")
        .def(py::init<>())
        .def_readwrite("id", &Video::id)
        .def_readwrite("features", &Video::features)
        .def_readwrite("actionness", &Video::actionness)
        .def_readwrite("instances", &Video::instances)
        .def_property_readonly("num_snippets", &Video::num_snippets);

    py::class_<SyntheticConfig>(m, "SyntheticConfig")
        .def(py::init<>())
        .def_readwrite("num_videos", &SyntheticConfig::num_videos)
        .def_readwrite("num_snippets", &SyntheticConfig::num_snippets)
        .def_readwrite("feature_dim", &SyntheticConfig::feature_dim)
        .def_readwrite("num_classes", &SyntheticConfig::num_classes)
        .def_readwrite("noise", &SyntheticConfig::noise)
        .def_readwrite("signal", &SyntheticConfig::signal)
        .def_readwrite("seed", &SyntheticConfig::seed);

    m.def("generate_synthetic", &generate_synthetic, py::arg("config") = SyntheticConfig{},
          py::arg("prefix") = "video");

    m.def("fit_actionness",
          [](std::vector<Video> videos, int epochs, double lr, std::uint64_t seed) {
              fit_actionness(videos, ProbeOptions{epochs, lr, seed});
              return videos;
          },
          py::arg("videos"), py::arg("epochs") = 100, py::arg("learning_rate") = 0.1, py::arg("seed") = 0,
          "Fits an actionness probe on all videos and returns copies with actionness filled in.");

    m.def("propose",
          [](const std::vector<Video>& videos, double step, std::size_t top_k) {
              return propose(videos, TagConfig{step, 0.95, top_k});
          },
          py::arg("videos"), py::arg("grid_step") = 0.05, py::arg("top_k") = 0);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("ratio", &TrainConfig::ratio)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("momentum", &TrainConfig::momentum)
        .def_readwrite("ohem_fraction", &TrainConfig::ohem_fraction)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("iterations_per_epoch", &TrainConfig::iterations_per_epoch)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("pyramid", &TrainConfig::pyramid)
        .def_readwrite("lambda_", &TrainConfig::lambda);

    m.def("train",
          [](const std::vector<Video>& videos, const VideoProposals& proposals, const TrainConfig& cfg,
             std::size_t num_classes) {
              const TrainResult r = train(videos, align_proposals(videos, proposals), cfg, num_classes);
              return py::make_tuple(r.params, r.epoch_loss);
          },
          py::arg("videos"), py::arg("proposals"), py::arg("config") = TrainConfig{}, py::arg("num_classes"),
          "Returns (params, per-epoch mean loss).");

    py::class_<Detection>(m, "Detection")
        .def(py::init<>())
        .def_readwrite("video_id", &Detection::video_id)
        .def_readwrite("label", &Detection::label)
        .def_readwrite("interval", &Detection::interval)
        .def_readwrite("proposal", &Detection::proposal)
        .def_readwrite("score", &Detection::score)
        .def_readwrite("activity", &Detection::activity)
        .def_readwrite("completeness", &Detection::completeness);

    m.def("score_proposals",
          [](const FeatureMatrix& f, const py::iterable& proposals, const ModelParams& p, bool naive) {
              const std::vector<Interval> props = intervals_from(proposals);
              if (naive) return score_proposals_naive(f, props, p, "video");
              return score_proposals(compute_snippet_responses(f, p), props, p, "video");
          },
          py::arg("features"), py::arg("proposals"), py::arg("params"), py::arg("naive") = false);

    m.def("detect",
          [](const std::vector<Video>& videos, const VideoProposals& proposals, const ModelParams& p, double thr,
             double nms_iou, bool naive) {
              return detect(videos, proposals, p, DetectOptions{{thr, nms_iou}, naive});
          },
          py::arg("videos"), py::arg("proposals"), py::arg("params"), py::arg("score_threshold") = 0.01,
          py::arg("nms_iou") = 0.6, py::arg("naive") = false);

    // -- evaluation -------------------------------------------------------------
    m.def("all_instances", [](const std::vector<Video>& v) { return all_instances(v); });
    m.def("recall_at_iou",
          [](const std::map<std::string, py::list>& proposals, const std::vector<GroundTruth>& gts, double thr,
             std::size_t top_k) {
              ProposalSet set;
              for (const auto& [k, v] : proposals) set[k] = intervals_from(v);
              return recall_at_iou(set, gts, thr, top_k);
          },
          py::arg("proposals"), py::arg("instances"), py::arg("threshold"), py::arg("top_k") = 0);
    m.def("average_precision",
          [](const std::vector<Detection>& d, const std::vector<GroundTruth>& g, int label, double thr, bool eleven) {
              return average_precision(d, g, label, thr,
                                       eleven ? Interpolation::ElevenPoint : Interpolation::AllPoint);
          },
          py::arg("detections"), py::arg("instances"), py::arg("label"), py::arg("threshold"),
          py::arg("eleven_point") = false);
    m.def("mean_ap",
          [](const std::vector<Detection>& d, const std::vector<GroundTruth>& g, std::vector<double> thresholds) {
              if (thresholds.empty()) thresholds = activitynet_thresholds();
              const MapReport r = mean_ap(d, g, thresholds);
              py::dict out;
              out["thresholds"] = r.thresholds;
              out["map"] = r.map;
              out["average"] = r.average;
              out["per_class"] = r.per_class;
              return out;
          },
          py::arg("detections"), py::arg("instances"), py::arg("thresholds") = std::vector<double>{});

    // -- files --------------------------------------------------------------------
    m.def("write_features", &io::write_features);
    m.def("read_features", &io::read_features);
    m.def("write_actionness", &io::write_actionness);
    m.def("read_actionness", &io::read_actionness);
    m.def("write_checkpoint", &io::write_checkpoint);
    m.def("read_checkpoint", &io::read_checkpoint);
}
