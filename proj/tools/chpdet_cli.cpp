/*
 * Copyright 2026 The chpdet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chpdet/chpdet.hpp"
#include "support/criteria.hpp"

namespace {

namespace fs = std::filesystem;
using chpdet::ChpBox;
using chpdet::io::AnnotationFile;
using json = nlohmann::ordered_json;

constexpr const char* kConfigEnv = "CHPDET_CLASS_CONFIG";

/// Usage problems detected after parsing (exit 2, like parse errors).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest text that reads back to the same double.
std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Resolved settings are echoed to stderr so stdout stays clean for results.
class ConfigLog {
public:
    explicit ConfigLog(std::string command) : command_(std::move(command)) {}

    template <typename T>
    void add(const std::string& key, const T& value) {
        if constexpr (std::is_floating_point_v<T>) {
            entries_.emplace_back(key, shortest(value));
        } else {
            std::ostringstream os;
            os << value;
            entries_.emplace_back(key, os.str());
        }
    }

    void print() const {
        std::cerr << "[chpdet " << command_ << "] resolved config:\n";
        for (const auto& [k, v] : entries_) {
            std::cerr << "  " << k << " = " << v << "\n";
        }
    }

private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        out += (out.empty() ? "" : ",") + s;
    }
    return out;
}

std::string join(const std::vector<double>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i ? "," : "") + shortest(items[i]);
    }
    return out;
}

struct ClassSource {
    std::string path;

    // --classes wins, then the environment variable, then the built-in table.
    std::pair<chpdet::ClassLengthTable, std::string> load() const {
        if (!path.empty()) {
            return {chpdet::io::load_class_table(path), path};
        }
        if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') {
            return {chpdet::io::load_class_table(env), std::string(env) + " (from " + kConfigEnv + ")"};
        }
        return {chpdet::default_class_table(), "built-in"};
    }
};

chpdet::ClassLengthTable resolve_classes(const ClassSource& src, ConfigLog& log) {
    auto [table, origin] = src.load();
    log.add("classes", origin);
    std::vector<std::string> names;
    for (const auto& c : table.classes) {
        names.push_back(c.name + ":" + shortest(c.mean_length_m));
    }
    log.add("class_lengths_m", join(names));
    return table;
}

chpdet::RBox parse_rbox(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw UsageError("box literal '" + text + "': '" + item + "' is not a number");
        }
    }
    if (v.size() != 5) {
        throw UsageError("box literal '" + text + "' must be cx,cy,w,h,theta");
    }
    chpdet::RBox r{v[0], v[1], v[2], v[3], v[4]};
    if (!(r.w > 0.0 && r.h > 0.0)) {
        throw UsageError("box literal '" + text + "' needs positive w and h");
    }
    r.theta = chpdet::normalize_degrees(r.theta);
    return r;
}

void write_output(const std::string& path, const std::string& bytes) {
    if (path == "-") {
        std::cout << bytes;
        std::cout.flush();
        return;
    }
    chpdet::io::write_file_atomic(path, bytes);
}

std::string annotations_text(const AnnotationFile& f, const chpdet::ClassLengthTable& table) {
    chpdet::io::validate(f);
    return chpdet::io::annotations_to_json(f, table).dump(2) + "\n";
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    chpdet::synth::SceneSpec spec;
    std::vector<std::string> class_names;
    std::string out = "-";
    std::string mask;
};

int run_synth(const SynthArgs& a, const ClassSource& src) {
    ConfigLog log("synth");
    const auto table = resolve_classes(src, log);
    chpdet::synth::SceneSpec spec = a.spec;
    for (const auto& n : a.class_names) {
        spec.classes.push_back(table.id_of(n));
    }
    log.add("seed", spec.seed);
    log.add("size", std::to_string(spec.width) + "x" + std::to_string(spec.height));
    log.add("gsd", spec.gsd);
    log.add("ships", std::to_string(spec.min_ships) + ".." + std::to_string(spec.max_ships));
    log.add("ship_classes", a.class_names.empty() ? std::string("all") : join(a.class_names));
    log.add("aspect", shortest(spec.min_aspect) + ".." + shortest(spec.max_aspect));
    log.add("max_pair_iou", spec.max_pair_iou);
    log.add("max_retries", spec.max_retries);
    log.add("lambda", table.lambda);
    log.add("out", a.out);
    log.add("mask", a.mask.empty() ? std::string("none") : a.mask);
    log.print();

    const AnnotationFile scene = chpdet::synth::synth_scene(spec, table);
    const std::string text = annotations_text(scene, table);
    std::string pgm;
    if (!a.mask.empty()) {
        pgm = chpdet::synth::encode_pgm(chpdet::synth::rasterize(scene));
    }
    write_output(a.out, text);
    if (!a.mask.empty()) {
        chpdet::io::write_file_atomic(a.mask, pgm);
    }
    std::cerr << "synth: " << scene.objects.size() << " ships\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
    std::string in;
    std::string out;
    int stride = 4;
    double alpha = 1.2;
    double min_overlap = 0.7;
};

int run_encode(const EncodeArgs& a, const ClassSource& src) {
    ConfigLog log("encode");
    const auto table = resolve_classes(src, log);
    log.add("in", a.in);
    log.add("out", a.out);
    log.add("stride", a.stride);
    log.add("alpha", a.alpha);
    log.add("gaussian_min_overlap", a.min_overlap);
    log.print();

    const AnnotationFile f = chpdet::io::load_annotations(a.in, table);
    chpdet::EncodingConfig cfg;
    cfg.stride = a.stride;
    cfg.alpha = a.alpha;
    cfg.gaussian_min_overlap = a.min_overlap;
    cfg.num_classes = static_cast<int>(table.classes.size());
    cfg.input_w = f.width;
    cfg.input_h = f.height;
    const auto targets = chpdet::encode_targets(f.objects, cfg);
    for (const auto& w : targets.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    chpdet::io::save_map_bundle(a.out, {f.image_id, f.width, f.height, f.gsd, a.stride, targets.maps});
    std::cerr << "encode: " << targets.num_objects() << " objects -> " << cfg.map_w() << "x" << cfg.map_h()
              << " maps\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct DecodeArgs {
    std::string in;
    std::string out = "-";
    chpdet::DecodeConfig cfg;
};

int run_decode(const DecodeArgs& a, const ClassSource& src) {
    ConfigLog log("decode");
    const auto table = resolve_classes(src, log);
    log.add("in", a.in);
    log.add("out", a.out);
    log.add("top_k", a.cfg.top_k);
    log.add("head_score_threshold", a.cfg.head_score_threshold);
    log.add("score_floor", a.cfg.score_floor);
    log.print();

    const auto bundle = chpdet::io::load_map_bundle(a.in);
    if (bundle.maps.num_classes() > table.classes.size()) {
        throw chpdet::Error("maps have " + std::to_string(bundle.maps.num_classes()) +
                            " class channels but the class table names only " +
                            std::to_string(table.classes.size()));
    }
    chpdet::DecodeConfig cfg = a.cfg;
    cfg.stride = bundle.stride;
    AnnotationFile out{bundle.image_id, bundle.width, bundle.height, bundle.gsd,
                       chpdet::decode_detections(bundle.maps, cfg)};
    write_output(a.out, annotations_text(out, table));
    std::size_t fallback = 0;
    for (const auto& d : out.objects) {
        fallback += (d.flags & chpdet::kFlagHeadFallback) ? 1 : 0;
    }
    std::cerr << "decode: " << out.objects.size() << " detections (" << fallback << " without a head peak)\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct NmsArgs {
    std::string in;
    std::string out = "-";
    double iou = 0.15;
    bool class_agnostic = false;
};

int run_nms(const NmsArgs& a, const ClassSource& src) {
    ConfigLog log("nms");
    const auto table = resolve_classes(src, log);
    log.add("in", a.in);
    log.add("out", a.out);
    log.add("iou_threshold", a.iou);
    log.add("class_agnostic", a.class_agnostic ? "true" : "false");
    log.print();

    AnnotationFile f = chpdet::io::load_annotations(a.in, table);
    const std::size_t before = f.objects.size();
    f.objects = chpdet::rotated_nms(f.objects, a.iou, a.class_agnostic);
    write_output(a.out, annotations_text(f, table));
    std::cerr << "nms: " << before << " -> " << f.objects.size() << " detections\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct RefineArgs {
    std::string in;
    std::string out = "-";
    std::optional<double> lambda;
};

int run_refine(const RefineArgs& a, const ClassSource& src) {
    ConfigLog log("refine");
    auto table = resolve_classes(src, log);
    if (a.lambda) {
        table.lambda = *a.lambda;
    }
    AnnotationFile f = chpdet::io::load_annotations(a.in, table);
    table.gsd = f.gsd;
    log.add("in", a.in);
    log.add("out", a.out);
    log.add("lambda", table.lambda);
    log.add("gsd", table.gsd);
    log.print();

    f.objects = chpdet::refine_scores(f.objects, table);
    write_output(a.out, annotations_text(f, table));
    return 0;
}

// ---------------------------------------------------------------------------

struct TileArgs {
    int width = 0;
    int height = 0;
    int slice = 1024;
    int stride = 820;
    int model = 512;
    std::string plan;
    std::string in;
    std::string out_dir;
    std::vector<std::string> inputs;
    std::string out = "-";
    double rnms = 0.15;
    bool class_agnostic = false;
};

json plan_to_json(const std::vector<chpdet::SliceSpec>& slices, int w, int h, int stride) {
    json j;
    j["image_width"] = w;
    j["image_height"] = h;
    j["stride"] = stride;
    json arr = json::array();
    for (const auto& s : slices) {
        arr.push_back({{"origin_x", s.origin_x}, {"origin_y", s.origin_y}, {"slice_size", s.slice_size},
                       {"model_size", s.model_size}});
    }
    j["slices"] = std::move(arr);
    return j;
}

std::vector<chpdet::SliceSpec> plan_from_file(const std::string& path) {
    const json j = chpdet::io::detail::parse_json(chpdet::io::read_file(path), path);
    const json slices = chpdet::io::detail::required<json>(j, "slices", path);
    std::vector<chpdet::SliceSpec> out;
    for (std::size_t i = 0; i < slices.size(); ++i) {
        const std::string where = path + ": slices[" + std::to_string(i) + "]";
        out.push_back({chpdet::io::detail::required<int>(slices[i], "origin_x", where),
                       chpdet::io::detail::required<int>(slices[i], "origin_y", where),
                       chpdet::io::detail::required<int>(slices[i], "slice_size", where),
                       chpdet::io::detail::required<int>(slices[i], "model_size", where)});
    }
    return out;
}

std::string slice_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "slice_%03zu.json", i);
    return buf;
}

int run_tile_plan(const TileArgs& a) {
    ConfigLog log("tile plan");
    log.add("image", std::to_string(a.width) + "x" + std::to_string(a.height));
    log.add("slice_size", a.slice);
    log.add("slice_stride", a.stride);
    log.add("model_size", a.model);
    log.add("out", a.out);
    log.print();
    const auto slices = chpdet::make_slices(a.width, a.height, a.slice, a.stride, a.model);
    write_output(a.out, plan_to_json(slices, a.width, a.height, a.stride).dump(2) + "\n");
    std::cerr << "tile plan: " << slices.size() << " slices\n";
    return 0;
}

// Cuts a global annotation file into one model-scale file per slice. An object goes to
// every slice that contains its whole box.
int run_tile_split(const TileArgs& a, const ClassSource& src) {
    ConfigLog log("tile split");
    const auto table = resolve_classes(src, log);
    log.add("in", a.in);
    log.add("out_dir", a.out_dir);
    log.add("slice_size", a.slice);
    log.add("slice_stride", a.stride);
    log.add("model_size", a.model);
    log.print();

    const AnnotationFile f = chpdet::io::load_annotations(a.in, table);
    const auto slices = chpdet::make_slices(f.width, f.height, a.slice, a.stride, a.model);
    std::vector<std::pair<std::string, std::string>> files;
    for (std::size_t i = 0; i < slices.size(); ++i) {
        const auto& s = slices[i];
        AnnotationFile part{f.image_id + "/" + std::to_string(i), s.model_size, s.model_size, f.gsd / s.scale(), {}};
        for (const ChpBox& b : f.objects) {
            bool inside = true;
            for (const auto& p : chpdet::rbox_to_quad(chpdet::chp_to_rbox(b)).vertices) {
                inside = inside && p.x >= s.origin_x && p.y >= s.origin_y && p.x < s.origin_x + s.slice_size &&
                         p.y < s.origin_y + s.slice_size;
            }
            if (inside) {
                part.objects.push_back(chpdet::to_model(b, s));
            }
        }
        files.emplace_back(slice_name(i), annotations_text(part, table));
    }
    fs::create_directories(a.out_dir);
    for (const auto& [name, text] : files) {
        chpdet::io::write_file_atomic(fs::path(a.out_dir) / name, text);
    }
    chpdet::io::write_file_atomic(fs::path(a.out_dir) / "plan.json",
                                  plan_to_json(slices, f.width, f.height, a.stride).dump(2) + "\n");
    std::cerr << "tile split: " << slices.size() << " slices written to " << a.out_dir << "\n";
    return 0;
}

int run_tile_merge(const TileArgs& a, const ClassSource& src) {
    ConfigLog log("tile merge");
    const auto table = resolve_classes(src, log);
    log.add("plan", a.plan);
    log.add("inputs", join(a.inputs));
    log.add("rnms_threshold", a.rnms);
    log.add("class_agnostic", a.class_agnostic ? "true" : "false");
    log.add("out", a.out);
    log.print();

    const json plan = chpdet::io::detail::parse_json(chpdet::io::read_file(a.plan), a.plan);
    const auto slices = plan_from_file(a.plan);
    if (slices.size() != a.inputs.size()) {
        throw UsageError("plan has " + std::to_string(slices.size()) + " slices but " +
                         std::to_string(a.inputs.size()) + " detection files were given");
    }
    std::vector<chpdet::SliceDetections> per_slice;
    std::string image_id;
    double gsd = 1.0;
    for (std::size_t i = 0; i < slices.size(); ++i) {
        const AnnotationFile part = chpdet::io::load_annotations(a.inputs[i], table);
        if (i == 0) {
            image_id = part.image_id.substr(0, part.image_id.rfind('/'));
            gsd = part.gsd * slices[i].scale();
        }
        per_slice.emplace_back(slices[i], part.objects);
    }
    AnnotationFile merged{image_id,
                          chpdet::io::detail::required<int>(plan, "image_width", a.plan),
                          chpdet::io::detail::required<int>(plan, "image_height", a.plan),
                          gsd,
                          chpdet::merge_detections(per_slice, a.rnms, a.class_agnostic)};
    write_output(a.out, annotations_text(merged, table));
    std::cerr << "tile merge: " << merged.objects.size() << " detections\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::vector<std::string> dets;
    std::vector<std::string> gts;
    std::vector<double> thresholds{0.5, 0.6, 0.7, 0.8};
    double bda_iou = 0.5;
    std::string out;
    std::string pr_csv;
};

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

int run_eval(const EvalArgs& a, const ClassSource& src) {
    ConfigLog log("eval");
    const auto table = resolve_classes(src, log);
    log.add("detections", join(a.dets));
    log.add("ground_truth", join(a.gts));
    log.add("iou_thresholds", join(a.thresholds));
    log.add("bda_iou", a.bda_iou);
    log.add("out", a.out.empty() ? std::string("none") : a.out);
    log.add("pr_csv", a.pr_csv.empty() ? std::string("none") : a.pr_csv);
    log.print();

    if (a.dets.size() != a.gts.size()) {
        throw UsageError("--det and --gt must be given the same number of times");
    }
    chpdet::ImageBoxes dets;
    chpdet::ImageBoxes gts;
    for (std::size_t i = 0; i < a.dets.size(); ++i) {
        dets.push_back(chpdet::io::load_annotations(a.dets[i], table).objects);
        gts.push_back(chpdet::io::load_annotations(a.gts[i], table).objects);
    }
    const auto r = chpdet::evaluate(dets, gts, a.thresholds, a.bda_iou);

    auto class_name = [&](int c) { return table.at(c).name; };
    std::ostringstream text;
    text << "images " << dets.size() << "\n";
    for (std::size_t t = 0; t < r.thresholds.size(); ++t) {
        text << "mAP@" << fixed(r.thresholds[t], 2) << " = " << fixed(r.map_at[t]) << "\n";
    }
    for (const auto& [c, aps] : r.per_class_ap) {
        text << "  " << class_name(c) << ":";
        for (std::size_t t = 0; t < aps.size(); ++t) {
            const auto& counts = r.counts.at(c)[t];
            text << " AP@" << fixed(r.thresholds[t], 2) << "=" << (aps[t] ? fixed(*aps[t]) : std::string("n/a"))
                 << " (tp " << counts.tp << " fp " << counts.fp << " fn " << counts.fn << ")";
        }
        text << "\n";
    }
    text << "BDA@" << fixed(r.bda_iou, 2) << " = " << fixed(r.bda) << " (" << r.bda_correct << "/"
         << r.bda_true_positives << ")\n";

    std::string report_text;
    if (!a.out.empty()) {
        json j;
        j["images"] = dets.size();
        j["thresholds"] = r.thresholds;
        j["map"] = r.map_at;
        json classes = json::object();
        for (const auto& [c, aps] : r.per_class_ap) {
            json e;
            json ap = json::array();
            json counts = json::array();
            for (std::size_t t = 0; t < aps.size(); ++t) {
                ap.push_back(aps[t] ? json(*aps[t]) : json(nullptr));
                const auto& k = r.counts.at(c)[t];
                counts.push_back({{"tp", k.tp}, {"fp", k.fp}, {"fn", k.fn}});
            }
            e["ap"] = std::move(ap);
            e["counts"] = std::move(counts);
            classes[class_name(c)] = std::move(e);
        }
        j["classes"] = std::move(classes);
        j["bda"] = {{"iou", r.bda_iou}, {"true_positives", r.bda_true_positives}, {"correct", r.bda_correct},
                    {"value", r.bda}};
        report_text = j.dump(2) + "\n";
    }
    std::string csv;
    if (!a.pr_csv.empty()) {
        std::ostringstream os;
        os.precision(17);
        os << "class,iou_threshold,rank,recall,precision\n";
        for (const auto& [c, curves] : r.pr_curves) {
            for (std::size_t t = 0; t < curves.size(); ++t) {
                for (std::size_t k = 0; k < curves[t].size(); ++k) {
                    os << class_name(c) << "," << r.thresholds[t] << "," << k + 1 << "," << curves[t][k].recall << ","
                       << curves[t][k].precision << "\n";
                }
            }
        }
        csv = os.str();
    }
    if (!a.out.empty()) {
        write_output(a.out, report_text);
    }
    if (!a.pr_csv.empty()) {
        write_output(a.pr_csv, csv);
    }
    std::cout << text.str();
    return 0;
}

// ---------------------------------------------------------------------------

struct IouArgs {
    std::string a;
    std::string b;
    int raster = 0;
};

int run_iou(const IouArgs& args) {
    const chpdet::RBox a = parse_rbox(args.a);
    const chpdet::RBox b = parse_rbox(args.b);
    ConfigLog log("iou");
    log.add("a", args.a);
    log.add("b", args.b);
    log.add("raster_grid", args.raster == 0 ? std::string("off") : std::to_string(args.raster));
    log.print();
    std::cout << fixed(chpdet::rotated_iou(a, b), 6) << "\n";
    if (args.raster != 0) {
        std::cout << "raster " << fixed(chpdet::rotated_iou_raster(a, b, args.raster), 6) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

// Runs the acceptance oracle suites; criterion 0 means all of them.
int run_selftest(int criterion) {
    ConfigLog log("selftest");
    log.add("criterion", criterion == 0 ? std::string("all") : std::to_string(criterion));
    log.print();
    std::fflush(stderr);
    return criteria::run(criterion) == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chpdet: center-head-point oriented ship detection toolkit"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "show help for every subcommand");
    ClassSource classes;
    app.add_option("--classes", classes.path,
                   std::string("class config JSON (default: $") + kConfigEnv + ", else the built-in table)");

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "generate a random synthetic scene");
    s->add_option("--seed", synth.spec.seed, "random seed")->capture_default_str();
    s->add_option("--width", synth.spec.width, "image width")->capture_default_str();
    s->add_option("--height", synth.spec.height, "image height")->capture_default_str();
    s->add_option("--gsd", synth.spec.gsd, "metres per pixel")->capture_default_str();
    s->add_option("--min-ships", synth.spec.min_ships)->capture_default_str();
    s->add_option("--max-ships", synth.spec.max_ships)->capture_default_str();
    s->add_option("--class", synth.class_names, "restrict to these class names (repeatable)");
    s->add_option("--min-aspect", synth.spec.min_aspect, "minimum length/width")->capture_default_str();
    s->add_option("--max-aspect", synth.spec.max_aspect, "maximum length/width")->capture_default_str();
    s->add_option("--max-iou", synth.spec.max_pair_iou, "pairwise IoU cap")->capture_default_str();
    s->add_option("--retries", synth.spec.max_retries, "placement attempts per ship")->capture_default_str();
    s->add_option("-o,--out", synth.out, "annotation file, - for stdout")->capture_default_str();
    s->add_option("--mask", synth.mask, "also write a PGM mask for inspection");

    EncodeArgs encode;
    auto* e = app.add_subcommand("encode", "annotations -> target map bundle");
    e->add_option("-i,--in", encode.in, "annotation file")->required();
    e->add_option("-o,--out", encode.out, "output bundle directory")->required();
    e->add_option("--stride", encode.stride, "output stride")->capture_default_str();
    e->add_option("--alpha", encode.alpha, "Gaussian spread factor")->capture_default_str();
    e->add_option("--min-overlap", encode.min_overlap, "Gaussian radius overlap")->capture_default_str();

    DecodeArgs decode;
    auto* d = app.add_subcommand("decode", "map bundle -> detections");
    d->add_option("-i,--in", decode.in, "bundle directory")->required();
    d->add_option("-o,--out", decode.out, "detections file, - for stdout")->capture_default_str();
    d->add_option("--top-k", decode.cfg.top_k, "peaks kept per class")->capture_default_str();
    d->add_option("--head-thr", decode.cfg.head_score_threshold, "head peak threshold")->capture_default_str();
    d->add_option("--score-floor", decode.cfg.score_floor, "minimum center score")->capture_default_str();

    NmsArgs nms;
    auto* n = app.add_subcommand("nms", "rotated non-maximum suppression");
    n->add_option("-i,--in", nms.in, "detections file")->required();
    n->add_option("-o,--out", nms.out)->capture_default_str();
    n->add_option("--iou", nms.iou, "suppression threshold")->capture_default_str();
    n->add_flag("--class-agnostic", nms.class_agnostic, "suppress across classes");

    RefineArgs refine;
    auto* r = app.add_subcommand("refine", "rescale scores with the ship length prior");
    r->add_option("-i,--in", refine.in, "detections file")->required();
    r->add_option("-o,--out", refine.out)->capture_default_str();
    r->add_option("--lambda", refine.lambda, "relative length spread (default: class config, 0.2)");

    TileArgs tile;
    auto* t = app.add_subcommand("tile", "slice large images and merge slice detections");
    t->require_subcommand(1, 1);
    auto* tp = t->add_subcommand("plan", "list slice windows for an image size");
    tp->add_option("--width", tile.width)->required();
    tp->add_option("--height", tile.height)->required();
    auto* ts = t->add_subcommand("split", "cut a global annotation file into per-slice files");
    ts->add_option("-i,--in", tile.in, "annotation file")->required();
    ts->add_option("--out-dir", tile.out_dir, "directory for slice_NNN.json and plan.json")->required();
    auto* tm = t->add_subcommand("merge", "map slice detections back and run RNMS");
    tm->add_option("--plan", tile.plan, "plan.json")->required();
    tm->add_option("--inputs", tile.inputs, "per-slice detection files, in plan order")->required();
    tm->add_option("--rnms", tile.rnms, "RNMS threshold")->capture_default_str();
    tm->add_flag("--class-agnostic", tile.class_agnostic);
    for (auto* sub : {tp, ts}) {
        sub->add_option("--slice", tile.slice, "slice size")->capture_default_str();
        sub->add_option("--stride", tile.stride, "slice stride")->capture_default_str();
        sub->add_option("--model", tile.model, "model input size")->capture_default_str();
    }
    for (auto* sub : {tp, tm}) {
        sub->add_option("-o,--out", tile.out)->capture_default_str();
    }

    EvalArgs eval;
    auto* v = app.add_subcommand("eval", "VOC07 mAP and bow direction accuracy");
    v->add_option("--det", eval.dets, "detections file (repeatable, paired with --gt)")->required();
    v->add_option("--gt", eval.gts, "ground-truth file (repeatable)")->required();
    v->add_option("--iou", eval.thresholds, "IoU thresholds")->capture_default_str()->delimiter(',');
    v->add_option("--bda-iou", eval.bda_iou, "IoU threshold for BDA")->capture_default_str();
    v->add_option("-o,--out", eval.out, "JSON report");
    v->add_option("--pr-csv", eval.pr_csv, "precision/recall curves as CSV");

    IouArgs iou;
    auto* i = app.add_subcommand("iou", "IoU of two boxes given as cx,cy,w,h,theta");
    i->add_option("--a", iou.a)->required();
    i->add_option("--b", iou.b)->required();
    i->add_option("--raster", iou.raster, "also report the rasterized IoU at this grid");

    int selftest_criterion = 0;
    auto* st = app.add_subcommand("selftest", "run the oracle acceptance suites");
    st->add_option("--criterion", selftest_criterion, "run a single criterion (1-9)")->check(CLI::Range(1, 9));

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ok) {
        return app.exit(ok);
    } catch (const CLI::ParseError& err) {
        std::cerr << "error: " << err.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (s->parsed()) return run_synth(synth, classes);
        if (e->parsed()) return run_encode(encode, classes);
        if (d->parsed()) return run_decode(decode, classes);
        if (n->parsed()) return run_nms(nms, classes);
        if (r->parsed()) return run_refine(refine, classes);
        if (tp->parsed()) return run_tile_plan(tile);
        if (ts->parsed()) return run_tile_split(tile, classes);
        if (tm->parsed()) return run_tile_merge(tile, classes);
        if (v->parsed()) return run_eval(eval, classes);
        if (i->parsed()) return run_iou(iou);
        if (st->parsed()) return run_selftest(selftest_criterion);
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 2;
}
