#include "ssn/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace ssn::io {

using nlohmann::json;

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::little) {
        return value;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

class ByteWriter {
public:
    void raw(const char* data, std::size_t n) { buf_.append(data, n); }

    template <class T>
    void put(T value) {
        const T le = to_little(value);
        char bytes[sizeof(T)];
        std::memcpy(bytes, &le, sizeof(T));
        buf_.append(bytes, sizeof(T));
    }

    const std::string& bytes() const noexcept { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

    void expect_magic(const char (&magic)[5]) {
        need(4, "magic");
        if (std::memcmp(data_.data() + pos_, magic, 4) != 0)
            fail("bad magic, expected '" + std::string(magic) + "'");
        pos_ += 4;
    }

    template <class T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(value);
    }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t size() const noexcept { return data_.size(); }

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError(source_, "byte " + std::to_string(pos_), 0, msg);
    }

private:
    void need(std::size_t n, const char* what) const {
        if (remaining() < n) fail(std::string("truncated file while reading ") + what);
    }

    std::string data_;
    std::string source_;
    std::size_t pos_ = 0;
};

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[noreturn]] void schema_error(const std::string& source, const std::string& pointer, const std::string& msg) {
    throw FormatError(source, pointer.empty() ? "/" : pointer, 0, msg);
}

const json& member(const json& obj, const char* key, const std::string& ptr, const std::string& source) {
    if (!obj.is_object()) schema_error(source, ptr, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(source, ptr + "/" + key, "missing required field");
    return *it;
}

double number(const json& v, const std::string& ptr, const std::string& source) {
    if (!v.is_number()) schema_error(source, ptr, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(source, ptr, "expected a finite number");
    return d;
}

long long integer(const json& v, const std::string& ptr, const std::string& source) {
    if (!v.is_number_integer()) schema_error(source, ptr, "expected an integer");
    return v.get<long long>();
}

std::string string_field(const json& v, const std::string& ptr, const std::string& source) {
    if (!v.is_string()) schema_error(source, ptr, "expected a string");
    return v.get<std::string>();
}

const json& array_of(const json& v, const std::string& ptr, const std::string& source) {
    if (!v.is_array()) schema_error(source, ptr, "expected an array");
    return v;
}

Interval interval_of(const json& obj, const std::string& ptr, const std::string& source) {
    const Interval iv{number(member(obj, "start", ptr, source), ptr + "/start", source),
                      number(member(obj, "end", ptr, source), ptr + "/end", source)};
    if (!(iv.end > iv.start)) schema_error(source, ptr, "interval end must exceed start");
    return iv;
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

} // namespace

void write_file_atomic(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
    const std::string text = read_bytes(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        throw FormatError(path.string(), "byte " + std::to_string(e.byte), line_of_offset(text, offset),
                          "malformed JSON: " + std::string(e.what()));
    }
}

void write_json(const fs::path& path, const json& doc) { write_file_atomic(path, doc.dump(2) + "\n"); }

void write_features(const fs::path& path, const FeatureMatrix& features) {
    if (!features.allFinite()) throw std::invalid_argument("features must be finite");
    ByteWriter w;
    w.raw("SSNF", 4);
    w.put(static_cast<std::uint32_t>(features.rows()));
    w.put(static_cast<std::uint32_t>(features.cols()));
    for (Eigen::Index t = 0; t < features.rows(); ++t)
        for (Eigen::Index d = 0; d < features.cols(); ++d) w.put(static_cast<float>(features(t, d)));
    write_file_atomic(path, w.bytes());
}

FeatureMatrix read_features(const fs::path& path) {
    ByteReader r(read_bytes(path), path.string());
    r.expect_magic("SSNF");
    const auto T = r.get<std::uint32_t>("snippet count");
    const auto D = r.get<std::uint32_t>("feature dimension");
    if (r.remaining() != 4ull * T * D)
        r.fail("size mismatch: expected " + std::to_string(12ull + 4ull * T * D) + " bytes, file has " +
               std::to_string(r.size()));
    FeatureMatrix f(T, D);
    for (std::uint32_t t = 0; t < T; ++t) {
        for (std::uint32_t d = 0; d < D; ++d) {
            const float v = r.get<float>("feature value");
            if (!std::isfinite(v)) r.fail("non-finite feature value at snippet " + std::to_string(t));
            f(t, d) = v;
        }
    }
    return f;
}

void write_actionness(const fs::path& path, const std::vector<double>& actionness) {
    ByteWriter w;
    w.raw("SSNA", 4);
    w.put(static_cast<std::uint32_t>(actionness.size()));
    for (double a : actionness) {
        if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("actionness values must lie in [0, 1]");
        w.put(static_cast<float>(a));
    }
    write_file_atomic(path, w.bytes());
}

std::vector<double> read_actionness(const fs::path& path) {
    ByteReader r(read_bytes(path), path.string());
    r.expect_magic("SSNA");
    const auto T = r.get<std::uint32_t>("snippet count");
    if (r.remaining() != 4ull * T)
        r.fail("size mismatch: expected " + std::to_string(8ull + 4ull * T) + " bytes, file has " +
               std::to_string(r.size()));
    std::vector<double> out(T);
    for (std::uint32_t t = 0; t < T; ++t) {
        const float v = r.get<float>("actionness value");
        if (!(v >= 0.0f && v <= 1.0f)) r.fail("actionness outside [0, 1] at snippet " + std::to_string(t));
        out[t] = v;
    }
    return out;
}

std::vector<GroundTruth> Manifest::instances() const {
    std::vector<GroundTruth> out;
    for (const ManifestVideo& v : videos) out.insert(out.end(), v.instances.begin(), v.instances.end());
    return out;
}

Manifest parse_manifest(const json& doc, const std::string& source) {
    Manifest m;
    if (!doc.is_object()) schema_error(source, "", "manifest must be a JSON object");
    if (auto it = doc.find("classes"); it != doc.end()) {
        const json& classes = array_of(*it, "/classes", source);
        for (std::size_t i = 0; i < classes.size(); ++i)
            m.classes.push_back(string_field(classes[i], "/classes/" + std::to_string(i), source));
    }

    const json& videos = array_of(member(doc, "videos", "", source), "/videos", source);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        const std::string ptr = "/videos/" + std::to_string(i);
        const json& v = videos[i];
        ManifestVideo mv;
        mv.id = string_field(member(v, "id", ptr, source), ptr + "/id", source);
        if (!seen.insert(mv.id).second) schema_error(source, ptr + "/id", "duplicate video id '" + mv.id + "'");
        mv.feature_path = string_field(member(v, "feature_path", ptr, source), ptr + "/feature_path", source);
        if (auto a = v.find("actionness_path"); a != v.end() && !a->is_null())
            mv.actionness_path = string_field(*a, ptr + "/actionness_path", source);
        if (auto s = v.find("snippet_stride_frames"); s != v.end()) {
            const long long stride = integer(*s, ptr + "/snippet_stride_frames", source);
            if (stride < 1) schema_error(source, ptr + "/snippet_stride_frames", "stride must be >= 1");
            mv.stride_frames = static_cast<int>(stride);
        }
        if (auto inst = v.find("instances"); inst != v.end()) {
            const json& arr = array_of(*inst, ptr + "/instances", source);
            for (std::size_t j = 0; j < arr.size(); ++j) {
                const std::string iptr = ptr + "/instances/" + std::to_string(j);
                GroundTruth g;
                g.video_id = mv.id;
                const long long label = integer(member(arr[j], "class", iptr, source), iptr + "/class", source);
                if (label < 1) schema_error(source, iptr + "/class", "class labels start at 1 (0 is background)");
                if (!m.classes.empty() && static_cast<std::size_t>(label) > m.classes.size())
                    schema_error(source, iptr + "/class", "class label exceeds the class table");
                g.label = static_cast<int>(label);
                g.interval = interval_of(arr[j], iptr, source);
                if (g.interval.start < 0.0) schema_error(source, iptr + "/start", "instance starts before the video");
                mv.instances.push_back(g);
            }
        }
        m.videos.push_back(std::move(mv));
    }

    if (m.classes.empty()) {
        int max_label = 0;
        for (const auto& v : m.videos)
            for (const auto& g : v.instances) max_label = std::max(max_label, g.label);
        for (int k = 1; k <= max_label; ++k) m.classes.push_back("class_" + std::to_string(k));
    }
    return m;
}

Manifest read_manifest(const fs::path& path) {
    Manifest m = parse_manifest(read_json(path), path.string());
    m.base_dir = path.parent_path();
    return m;
}

json manifest_to_json(const Manifest& manifest) {
    json videos = json::array();
    for (const ManifestVideo& v : manifest.videos) {
        json entry{{"id", v.id}, {"feature_path", v.feature_path}, {"snippet_stride_frames", v.stride_frames}};
        if (v.actionness_path) entry["actionness_path"] = *v.actionness_path;
        json inst = json::array();
        for (const GroundTruth& g : v.instances)
            inst.push_back({{"class", g.label}, {"start", g.interval.start}, {"end", g.interval.end}});
        entry["instances"] = std::move(inst);
        videos.push_back(std::move(entry));
    }
    return {{"classes", manifest.classes}, {"videos", std::move(videos)}};
}

void write_manifest(const fs::path& path, const Manifest& manifest) { write_json(path, manifest_to_json(manifest)); }

std::vector<Video> load_videos(const Manifest& manifest, bool require_actionness) {
    auto resolve = [&](const std::string& p) {
        const fs::path path(p);
        return path.is_absolute() ? path : manifest.base_dir / path;
    };

    std::vector<Video> videos;
    videos.reserve(manifest.videos.size());
    for (const ManifestVideo& mv : manifest.videos) {
        Video v;
        v.id = mv.id;
        v.stride_frames = mv.stride_frames;
        v.features = read_features(resolve(mv.feature_path));
        if (v.features.rows() == 0) throw FormatError(mv.feature_path, "", 0, "video '" + mv.id + "' has no snippets");
        if (mv.actionness_path) {
            v.actionness = read_actionness(resolve(*mv.actionness_path));
            if (v.actionness.size() != v.num_snippets())
                throw FormatError(*mv.actionness_path, "", 0,
                                  "actionness length " + std::to_string(v.actionness.size()) +
                                      " differs from snippet count " + std::to_string(v.num_snippets()));
        } else if (require_actionness) {
            throw std::runtime_error("video '" + mv.id + "' has no actionness file");
        }
        for (const GroundTruth& g : mv.instances) {
            if (g.interval.end > v.length())
                throw FormatError("<manifest>", "video " + mv.id, 0,
                                  "instance [" + std::to_string(g.interval.start) + ", " +
                                      std::to_string(g.interval.end) + ") exceeds the video length " +
                                      std::to_string(v.num_snippets()));
        }
        v.instances = mv.instances;
        videos.push_back(std::move(v));
    }
    return videos;
}

json proposals_to_json(const ProposalFile& proposals) {
    json doc = json::object();
    for (const auto& [video, list] : proposals) {
        json arr = json::array();
        for (const ScoredInterval& p : list)
            arr.push_back({{"start", p.interval.start}, {"end", p.interval.end}, {"score", p.score}});
        doc[video] = std::move(arr);
    }
    return doc;
}

ProposalFile parse_proposals(const json& doc, const std::string& source) {
    if (!doc.is_object()) schema_error(source, "", "proposal file must map video ids to lists");
    ProposalFile out;
    for (const auto& [video, list] : doc.items()) {
        const std::string ptr = "/" + video;
        const json& arr = array_of(list, ptr, source);
        auto& dst = out[video];
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string iptr = ptr + "/" + std::to_string(i);
            dst.push_back({interval_of(arr[i], iptr, source), number(member(arr[i], "score", iptr, source),
                                                                      iptr + "/score", source)});
        }
    }
    return out;
}

void write_proposals(const fs::path& path, const ProposalFile& proposals) {
    write_json(path, proposals_to_json(proposals));
}

ProposalFile read_proposals(const fs::path& path) { return parse_proposals(read_json(path), path.string()); }

json detections_to_json(const std::vector<Detection>& detections) {
    json doc = json::object();
    for (const Detection& d : detections) {
        if (!doc.contains(d.video_id)) doc[d.video_id] = json::array();
        doc[d.video_id].push_back(
            {{"class", d.label}, {"start", d.interval.start}, {"end", d.interval.end}, {"score", d.score}});
    }
    return doc;
}

std::vector<Detection> parse_detections(const json& doc, const std::string& source) {
    if (!doc.is_object()) schema_error(source, "", "detection file must map video ids to lists");
    std::vector<Detection> out;
    for (const auto& [video, list] : doc.items()) {
        const std::string ptr = "/" + video;
        const json& arr = array_of(list, ptr, source);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string iptr = ptr + "/" + std::to_string(i);
            Detection d;
            d.video_id = video;
            const long long label = integer(member(arr[i], "class", iptr, source), iptr + "/class", source);
            if (label < 1) schema_error(source, iptr + "/class", "detections need a class label >= 1");
            d.label = static_cast<int>(label);
            d.interval = interval_of(arr[i], iptr, source);
            d.proposal = d.interval;
            d.score = number(member(arr[i], "score", iptr, source), iptr + "/score", source);
            d.proposal_index = i;
            out.push_back(std::move(d));
        }
    }
    return out;
}

void write_detections(const fs::path& path, const std::vector<Detection>& detections) {
    write_json(path, detections_to_json(detections));
}

std::vector<Detection> read_detections(const fs::path& path) {
    return parse_detections(read_json(path), path.string());
}

void write_checkpoint(const fs::path& path, const ModelParams& params) {
    params.validate();
    ByteWriter w;
    w.raw("SSNM", 4);
    w.put(kCheckpointVersion);
    w.put(static_cast<std::uint32_t>(params.num_classes));
    w.put(static_cast<std::uint32_t>(params.feature_dim));
    w.put(static_cast<std::uint32_t>(params.pyramid.course_levels.size()));
    for (int b : params.pyramid.course_levels) w.put(static_cast<std::uint32_t>(b));
    w.put(static_cast<std::uint8_t>(params.pyramid.use_augmentation ? 1 : 0));
    w.put(static_cast<std::uint8_t>(params.pyramid.mode));
    w.put(static_cast<std::uint16_t>(0));
    w.put(params.lambda);
    auto block = [&](const auto& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) w.put(static_cast<double>(m(r, c)));
    };
    block(params.activity_w);
    block(params.activity_b);
    block(params.completeness_w);
    block(params.completeness_b);
    block(params.regression_w);
    block(params.regression_b);
    write_file_atomic(path, w.bytes());
}

ModelParams read_checkpoint(const fs::path& path) {
    ByteReader r(read_bytes(path), path.string());
    r.expect_magic("SSNM");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
    const auto K = r.get<std::uint32_t>("class count");
    const auto D = r.get<std::uint32_t>("feature dimension");
    const auto L = r.get<std::uint32_t>("pyramid level count");
    if (K == 0 || D == 0 || L == 0 || L > 64) r.fail("invalid checkpoint header");
    PyramidConfig pyramid;
    pyramid.course_levels.clear();
    for (std::uint32_t i = 0; i < L; ++i) {
        const auto b = r.get<std::uint32_t>("pyramid level");
        if (b == 0 || b > 4096) r.fail("invalid pyramid level part count");
        pyramid.course_levels.push_back(static_cast<int>(b));
    }
    const auto aug = r.get<std::uint8_t>("augmentation flag");
    const auto mode = r.get<std::uint8_t>("pool mode");
    r.get<std::uint16_t>("reserved");
    if (aug > 1 || mode > 1) r.fail("invalid pyramid flags");
    pyramid.use_augmentation = aug == 1;
    pyramid.mode = static_cast<PoolMode>(mode);
    const double lambda = r.get<double>("lambda");

    ModelParams p = ModelParams::zeros(K, D, pyramid, 1.0);
    p.lambda = lambda;
    const std::size_t expected = 8ull * static_cast<std::size_t>(
                                            p.activity_w.size() + p.activity_b.size() + p.completeness_w.size() +
                                            p.completeness_b.size() + p.regression_w.size() + p.regression_b.size());
    if (r.remaining() != expected)
        r.fail("weight payload is " + std::to_string(r.remaining()) + " bytes, expected " + std::to_string(expected));
    auto block = [&](auto& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = r.get<double>("weight");
    };
    block(p.activity_w);
    block(p.activity_b);
    block(p.completeness_w);
    block(p.completeness_b);
    block(p.regression_w);
    block(p.regression_b);
    try {
        p.validate();
    } catch (const std::exception& e) {
        r.fail(e.what());
    }
    return p;
}

namespace {

const char* sampling_name(SamplingMode m) { return m == SamplingMode::Center ? "center" : "random"; }
const char* pool_name(PoolMode m) { return m == PoolMode::Max ? "max" : "average"; }

} // namespace

json train_config_to_json(const TrainConfig& c) {
    return {
        {"batch_size", c.batch_size},
        {"ratio", c.ratio},
        {"learning_rate", c.learning_rate},
        {"momentum", c.momentum},
        {"lr_step", c.lr_step},
        {"lr_decay", c.lr_decay},
        {"ohem_fraction", c.ohem_fraction},
        {"epochs", c.epochs},
        {"iterations_per_epoch", c.iterations_per_epoch},
        {"seed", c.seed},
        {"sampling", sampling_name(c.sampling)},
        {"pyramid", c.pyramid.label()},
        {"pool", pool_name(c.pyramid.mode)},
        {"lambda", c.lambda},
        {"include_ground_truth", c.include_ground_truth},
        {"assignment",
         {{"positive_iou", c.rule.positive_iou},
          {"incomplete_containment", c.rule.incomplete_containment},
          {"incomplete_iou_max", c.rule.incomplete_iou_max},
          {"background_iou_max", c.rule.background_iou_max}}},
    };
}

TrainConfig parse_train_config(const json& doc, TrainConfig c, const std::string& source) {
    if (!doc.is_object()) schema_error(source, "", "config must be a JSON object");
    auto count = [&](const json& v, const std::string& ptr) {
        const long long n = integer(v, ptr, source);
        if (n < 0) schema_error(source, ptr, "expected a non-negative integer");
        return static_cast<std::size_t>(n);
    };

    for (const auto& [key, v] : doc.items()) {
        const std::string ptr = "/" + key;
        if (key == "batch_size") c.batch_size = count(v, ptr);
        else if (key == "ratio") {
            const json& arr = array_of(v, ptr, source);
            if (arr.size() != 3) schema_error(source, ptr, "ratio needs three entries");
            for (std::size_t i = 0; i < 3; ++i) c.ratio[i] = count(arr[i], ptr + "/" + std::to_string(i));
        } else if (key == "learning_rate") c.learning_rate = number(v, ptr, source);
        else if (key == "momentum") c.momentum = number(v, ptr, source);
        else if (key == "lr_step") c.lr_step = count(v, ptr);
        else if (key == "lr_decay") c.lr_decay = number(v, ptr, source);
        else if (key == "ohem_fraction") c.ohem_fraction = number(v, ptr, source);
        else if (key == "epochs") c.epochs = count(v, ptr);
        else if (key == "iterations_per_epoch") c.iterations_per_epoch = count(v, ptr);
        else if (key == "seed") c.seed = count(v, ptr);
        else if (key == "sampling") {
            const std::string s = string_field(v, ptr, source);
            if (s == "random") c.sampling = SamplingMode::Random;
            else if (s == "center") c.sampling = SamplingMode::Center;
            else schema_error(source, ptr, "sampling must be 'random' or 'center'");
        } else if (key == "pyramid") {
            const PoolMode mode = c.pyramid.mode;
            try {
                c.pyramid = parse_pyramid(string_field(v, ptr, source));
            } catch (const std::invalid_argument& e) {
                schema_error(source, ptr, e.what());
            }
            c.pyramid.mode = mode;
        } else if (key == "pool") {
            const std::string s = string_field(v, ptr, source);
            if (s == "average") c.pyramid.mode = PoolMode::Average;
            else if (s == "max") c.pyramid.mode = PoolMode::Max;
            else schema_error(source, ptr, "pool must be 'average' or 'max'");
        } else if (key == "lambda") c.lambda = number(v, ptr, source);
        else if (key == "include_ground_truth") {
            if (!v.is_boolean()) schema_error(source, ptr, "expected a boolean");
            c.include_ground_truth = v.get<bool>();
        } else if (key == "assignment") {
            if (!v.is_object()) schema_error(source, ptr, "expected an object");
            for (const auto& [k2, v2] : v.items()) {
                const std::string p2 = ptr + "/" + k2;
                if (k2 == "positive_iou") c.rule.positive_iou = number(v2, p2, source);
                else if (k2 == "incomplete_containment") c.rule.incomplete_containment = number(v2, p2, source);
                else if (k2 == "incomplete_iou_max") c.rule.incomplete_iou_max = number(v2, p2, source);
                else if (k2 == "background_iou_max") c.rule.background_iou_max = number(v2, p2, source);
                else schema_error(source, p2, "unknown assignment option");
            }
        } else {
            schema_error(source, ptr, "unknown config option");
        }
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        schema_error(source, "", e.what());
    }
    return c;
}

TrainConfig read_train_config(const fs::path& path, TrainConfig base) {
    return parse_train_config(read_json(path), std::move(base), path.string());
}

} // namespace ssn::io
