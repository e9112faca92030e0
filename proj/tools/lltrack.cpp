// Command-line front end: track, eval, enhance, synth.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "lltrack/enhance.hpp"
#include "lltrack/eval.hpp"
#include "lltrack/imgproc.hpp"
#include "lltrack/synthetic.hpp"
#include "lltrack/tracker.hpp"

namespace fs = std::filesystem;
using namespace lltrack;

namespace {

// One --<key> option per tracker config key, defaulting to the built-in value.
struct ConfigFlags {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    void add(CLI::App& app, const std::string& prefix_filter = {}, const std::string& skip = {}) {
        const tracker::TrackerConfig defaults;
        for (const auto& key : tracker::config_keys()) {
            if (!prefix_filter.empty() && key.rfind(prefix_filter, 0) != 0) continue;
            if (key == skip) continue;
            const std::string def = tracker::get_config_value(defaults, key);
            options[key] = app.add_option("--" + key, values[key], def.empty() ? "config value (empty: built-in)"
                                                                               : "config value")
                               ->default_str(def);
        }
    }

    tracker::TrackerConfig apply(tracker::TrackerConfig cfg) const {
        for (const auto& [key, opt] : options) {
            if (opt->count() > 0) tracker::set_config_value(cfg, key, values.at(key));
        }
        cfg.validate();
        return cfg;
    }
};

tracker::TrackerConfig base_config(const std::string& path) {
    return path.empty() ? tracker::TrackerConfig{} : tracker::load_config(path);
}

int run_track(const std::string& seq_dir, const std::string& init, const std::string& config_path,
              const std::string& out_path, const std::string& enhance_mode, const std::string& diag_path,
              const ConfigFlags& flags) {
    tracker::TrackerConfig cfg = flags.apply(base_config(config_path));
    if (!enhance_mode.empty()) cfg.enhance_mode = tracker::parse_enhance_mode(enhance_mode);

    const imgproc::SequenceHandle seq = imgproc::load_sequence(seq_dir);
    BoundingBox start;
    if (init == "gt") {
        if (!seq.ground_truth || seq.ground_truth->empty()) {
            throw std::runtime_error("--init gt: no ground truth in " + seq_dir);
        }
        start = seq.ground_truth->front();
    } else {
        start = imgproc::parse_box(init);
    }

    std::ofstream diag;
    if (!diag_path.empty()) {
        diag.open(diag_path);
        if (!diag) throw std::runtime_error("cannot write " + diag_path);
        diag << "frame,r_max,apce,csrm,c_long,candidate_c_long,redetect,accepted,enhanced,update_ok,updated,rematched\n";
    }

    tracker::Tracker trk(cfg);
    std::vector<BoundingBox> boxes;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const ImageBuffer img = imgproc::load_image(seq.frame_paths[i]);
        memory::ConfidenceReport rep;
        if (i == 0) {
            trk.init(img, start);
            rep = trk.last_report();
        } else {
            rep = trk.step(img).report;
        }
        boxes.push_back(trk.box());
        if (diag) {
            char line[256];
            std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d,%d,%d,%d,%d\n", trk.frame_index(),
                          rep.r_max, rep.apce, rep.csrm, rep.c_long, rep.candidate_c_long, rep.redetect_ran,
                          rep.redetect_accepted, rep.enhanced, rep.gates.update_ok, rep.filters_updated, rep.rematched);
            diag << line;
        }
    }
    eval::write_boxes(out_path, boxes);
    return 0;
}

int run_eval(const std::string& dataset, const std::string& mode, const std::string& config_path,
             const std::string& out_dir, unsigned workers, const ConfigFlags& flags) {
    const tracker::TrackerConfig cfg = flags.apply(base_config(config_path));
    const eval::Protocol protocol = eval::parse_protocol(mode);
    const auto sources = eval::load_dataset(dataset);
    const eval::DatasetReport report = eval::evaluate(sources, cfg, protocol, workers);
    eval::write_report(out_dir, report, protocol);
    std::printf("sequences %zu  DP@20 %.4f  AUC %.4f  FPS %.2f\n", report.sequences.size(), report.precision.summary,
                report.success.summary, report.fps);
    return 0;
}

int run_enhance(const std::string& in, const std::string& out, const std::string& method, const std::string& box,
                const ConfigFlags& flags) {
    const tracker::TrackerConfig cfg = flags.apply({});
    const enhance::EnhanceConfig& ec = cfg.enhance;
    const ImageBuffer img = imgproc::load_image(in);
    const BoundingBox bb = box.empty() ? BoundingBox{0.0, 0.0, static_cast<double>(img.width),
                                                     static_cast<double>(img.height)}
                                       : imgproc::parse_box(box);
    if (method == "fast") {
        if (!enhance::should_enhance(img, bb, ec)) {
            if (fs::path(in).extension() == fs::path(out).extension()) {
                fs::copy_file(in, out, fs::copy_options::overwrite_existing);
            } else {
                imgproc::save_image(out, img);
            }
            return 0;
        }
        imgproc::save_image(out, enhance::fast_enhance(img, bb, ec));
    } else if (method == "lime") {
        imgproc::save_image(out, enhance::lime(img, ec));
    } else if (method == "inverted") {
        imgproc::save_image(out, enhance::recover_inverted(img, ec));
    } else {
        throw ConfigError("unknown method '" + method + "' (expected fast, lime or inverted)");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-term correlation-filter tracker with low-light enhancement"};
    app.require_subcommand(1);

    std::string seq_dir, init = "gt", config_path, out_path, enhance_mode, diag_path;
    ConfigFlags track_flags;
    CLI::App* track = app.add_subcommand("track", "Track one sequence and write per-frame boxes");
    track->add_option("--seq", seq_dir, "Sequence directory (img/ plus groundtruth_rect.txt)")->required();
    track->add_option("--init", init, "Initial box x,y,w,h (0-based) or 'gt'")->capture_default_str();
    track->add_option("--config", config_path, "key = value config file");
    track->add_option("--out", out_path, "Output box file")->required();
    track->add_option("--enhance", enhance_mode, "Enhancement mode auto|on|off (overrides config)")
        ->check(CLI::IsMember({"auto", "on", "off"}))
        ->default_str("auto");
    track->add_option("--diag", diag_path, "Per-frame confidence diagnostics file");
    track_flags.add(*track, {}, "enhance");

    std::string dataset, mode = "ope", eval_config, eval_out;
    unsigned workers = 0;
    ConfigFlags eval_flags;
    CLI::App* ev = app.add_subcommand("eval", "Evaluate a dataset of sequences");
    ev->add_option("--dataset", dataset, "Directory of sequence directories")->required();
    ev->add_option("--mode", mode, "Protocol ope|tre")->check(CLI::IsMember({"ope", "tre"}))->capture_default_str();
    ev->add_option("--config", eval_config, "key = value config file");
    ev->add_option("--out", eval_out, "Output directory")->required();
    ev->add_option("--workers", workers, "Parallel sequences (0: all cores)")->capture_default_str();
    eval_flags.add(*ev);

    std::string enh_in, enh_out, method = "fast", enh_box;
    ConfigFlags enhance_flags;
    CLI::App* en = app.add_subcommand("enhance", "Enhance one low-light image");
    en->add_option("--in", enh_in, "Input image")->required()->check(CLI::ExistingFile);
    en->add_option("--out", enh_out, "Output image")->required();
    en->add_option("--method", method, "fast|lime|inverted")
        ->check(CLI::IsMember({"fast", "lime", "inverted"}))
        ->capture_default_str();
    en->add_option("--box", enh_box, "Gating box x,y,w,h (default: whole image)");
    enhance_flags.add(*en, "enhance_");

    std::string kind, synth_out;
    CLI::App* sy = app.add_subcommand("synth", "Write a synthetic test sequence");
    sy->add_option("--kind", kind, "translate|scale|darken")
        ->required()
        ->check(CLI::IsMember({"translate", "scale", "darken"}));
    sy->add_option("--out", synth_out, "Output sequence directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*track) return run_track(seq_dir, init, config_path, out_path, enhance_mode, diag_path, track_flags);
        if (*ev) return run_eval(dataset, mode, eval_config, eval_out, workers, eval_flags);
        if (*en) return run_enhance(enh_in, enh_out, method, enh_box, enhance_flags);
        if (*sy) {
            synthetic::write_sequence(synthetic::Sequence(synthetic::parse_kind(kind)), synth_out);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
