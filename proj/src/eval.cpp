#include "lltrack/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace lltrack::eval {

std::optional<BoundingBox> DiskSource::truth(std::size_t i) const {
    if (!seq_.ground_truth || i >= seq_.ground_truth->size()) return std::nullopt;
    return (*seq_.ground_truth)[i];
}

double center_error(const BoundingBox& a, const BoundingBox& b) { return std::hypot(a.cx() - b.cx(), a.cy() - b.cy()); }

std::vector<double> SequenceResult::center_errors() const {
    std::vector<double> e(predicted.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = center_error(predicted[i], truth[i]);
    return e;
}

std::vector<double> SequenceResult::ious() const {
    std::vector<double> o(predicted.size());
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = iou(predicted[i], truth[i]);
    return o;
}

std::vector<double> precision_thresholds() {
    std::vector<double> t(51);
    for (int i = 0; i <= 50; ++i) t[i] = i;
    return t;
}

std::vector<double> success_thresholds() {
    std::vector<double> t(21);
    for (int i = 0; i <= 20; ++i) t[i] = i / 20.0;
    return t;
}

CurveData precision_from_errors(const std::vector<double>& errors, const std::vector<double>& thresholds) {
    if (errors.empty()) throw std::invalid_argument("precision curve: no frames");
    CurveData c;
    c.thresholds = thresholds;
    for (double t : thresholds) {
        const auto n = std::count_if(errors.begin(), errors.end(), [t](double e) { return e <= t; });
        c.rates.push_back(static_cast<double>(n) / errors.size());
    }
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] == 20.0) c.summary = c.rates[i];
    }
    return c;
}

CurveData success_from_ious(const std::vector<double>& overlaps, const std::vector<double>& thresholds) {
    if (overlaps.empty()) throw std::invalid_argument("success curve: no frames");
    CurveData c;
    c.thresholds = thresholds;
    double sum = 0.0;
    for (double t : thresholds) {
        const auto n = std::count_if(overlaps.begin(), overlaps.end(), [t](double o) { return o > t; });
        c.rates.push_back(static_cast<double>(n) / overlaps.size());
        sum += c.rates.back();
    }
    c.summary = thresholds.empty() ? 0.0 : sum / thresholds.size();
    return c;
}

CurveData precision_curve(const std::vector<SequenceResult>& results) {
    std::vector<double> all;
    for (const auto& r : results) {
        const auto e = r.center_errors();
        all.insert(all.end(), e.begin(), e.end());
    }
    return precision_from_errors(all);
}

CurveData success_curve(const std::vector<SequenceResult>& results) {
    std::vector<double> all;
    for (const auto& r : results) {
        const auto o = r.ious();
        all.insert(all.end(), o.begin(), o.end());
    }
    return success_from_ious(all);
}

CurveData precision_curve(const SequenceResult& result) { return precision_from_errors(result.center_errors()); }
CurveData success_curve(const SequenceResult& result) { return success_from_ious(result.ious()); }

SequenceResult run_from(const FrameSource& src, const tracker::TrackerConfig& cfg, std::size_t start) {
    using Clock = std::chrono::steady_clock;
    if (start >= src.size()) throw std::invalid_argument("run: start frame beyond the sequence");
    const auto init_box = src.truth(start);
    if (!init_box) throw std::invalid_argument("run: sequence " + src.name() + " has no ground truth");

    SequenceResult res;
    res.name = src.name();
    res.start = start;
    tracker::Tracker trk(cfg);
    for (std::size_t i = start; i < src.size(); ++i) {
        const ImageBuffer img = src.frame(i);
        const auto gt = src.truth(i);
        if (!gt) throw std::invalid_argument("run: missing ground truth for frame " + std::to_string(i));
        const auto t0 = Clock::now();
        if (i == start) {
            trk.init(img, *init_box);
            res.predicted.push_back(trk.box());
            res.reports.push_back(trk.last_report());
        } else {
            tracker::StepResult out = trk.step(img);
            res.predicted.push_back(out.box);
            res.reports.push_back(out.report);
        }
        res.seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        res.truth.push_back(*gt);
    }
    return res;
}

SequenceResult run_ope(const FrameSource& src, const tracker::TrackerConfig& cfg) { return run_from(src, cfg, 0); }

std::vector<std::size_t> tre_starts(std::size_t n, int segments) {
    if (n == 0 || segments <= 0) return {};
    const std::size_t s = std::min<std::size_t>(static_cast<std::size_t>(segments), n);
    std::vector<std::size_t> out(s);
    for (std::size_t k = 0; k < s; ++k) out[k] = k * n / s;
    return out;
}

std::vector<SequenceResult> run_tre(const FrameSource& src, const tracker::TrackerConfig& cfg, int segments) {
    std::vector<SequenceResult> out;
    for (std::size_t start : tre_starts(src.size(), segments)) out.push_back(run_from(src, cfg, start));
    return out;
}

double measure_fps(const std::vector<SequenceResult>& results) {
    double seconds = 0.0;
    std::size_t frames = 0;
    for (const auto& r : results) {
        frames += r.seconds.size();
        for (double s : r.seconds) seconds += s;
    }
    if (frames == 0) throw std::invalid_argument("measure_fps: no timed frames");
    return seconds > 0.0 ? frames / seconds : std::numeric_limits<double>::infinity();
}

double measure_fps(const SequenceResult& result) { return measure_fps(std::vector<SequenceResult>{result}); }

Protocol parse_protocol(const std::string& s) {
    if (s == "ope") return Protocol::kOpe;
    if (s == "tre") return Protocol::kTre;
    throw ConfigError("unknown evaluation mode '" + s + "' (expected ope or tre)");
}

DatasetReport evaluate(const std::vector<std::shared_ptr<const FrameSource>>& sources,
                       const tracker::TrackerConfig& cfg, Protocol protocol, unsigned workers) {
    if (sources.empty()) throw std::invalid_argument("evaluate: no sequences");
    DatasetReport report;
    report.runs.resize(sources.size());
    std::vector<std::exception_ptr> errors(sources.size());

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < sources.size(); i = next++) {
            try {
                report.runs[i] = protocol == Protocol::kOpe ? std::vector<SequenceResult>{run_ope(*sources[i], cfg)}
                                                            : run_tre(*sources[i], cfg);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(sources.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<SequenceResult> all;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const auto& runs = report.runs[i];
        SequenceSummary s;
        s.name = sources[i]->name();
        for (const auto& r : runs) s.frames += r.predicted.size();
        s.dp20 = precision_curve(runs).summary;
        s.auc = success_curve(runs).summary;
        s.fps = measure_fps(runs);
        report.sequences.push_back(s);
        all.insert(all.end(), runs.begin(), runs.end());
    }
    report.precision = precision_curve(all);
    report.success = success_curve(all);
    report.fps = measure_fps(all);
    return report;
}

std::vector<std::shared_ptr<const FrameSource>> load_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("dataset directory not found: " + dir.string());
    std::vector<std::filesystem::path> seqs;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_directory() && std::filesystem::is_directory(e.path() / "img")) seqs.push_back(e.path());
    }
    std::sort(seqs.begin(), seqs.end());
    if (seqs.empty()) throw std::runtime_error("no sequences under " + dir.string());
    std::vector<std::shared_ptr<const FrameSource>> out;
    for (const auto& p : seqs) out.push_back(std::make_shared<DiskSource>(imgproc::load_sequence(p)));
    return out;
}

void write_curve(const std::filesystem::path& path, const CurveData& curve) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char line[64];
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
        std::snprintf(line, sizeof(line), "%g,%.6f\n", curve.thresholds[i], curve.rates[i]);
        out << line;
    }
}

void write_boxes(const std::filesystem::path& path, const std::vector<BoundingBox>& boxes, std::size_t first_frame) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char line[160];
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const BoundingBox& b = boxes[i];
        std::snprintf(line, sizeof(line), "%zu,%.2f,%.2f,%.2f,%.2f\n", first_frame + i, b.x, b.y, b.w, b.h);
        out << line;
    }
}

void write_report(const std::filesystem::path& dir, const DatasetReport& report, Protocol protocol) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "summary.csv");
        if (!out) throw std::runtime_error("cannot write " + (dir / "summary.csv").string());
        out << "# protocol " << (protocol == Protocol::kOpe ? "ope" : "tre")
            << "; auc in [0,1] (x100 for the percentage convention)\n";
        out << "sequence,frames,dp20,auc,fps\n";
        char line[256];
        for (const auto& s : report.sequences) {
            std::snprintf(line, sizeof(line), "%s,%zu,%.4f,%.4f,%.2f\n", s.name.c_str(), s.frames, s.dp20, s.auc, s.fps);
            out << line;
        }
        std::snprintf(line, sizeof(line), "ALL,,%.4f,%.4f,%.2f\n", report.precision.summary, report.success.summary,
                      report.fps);
        out << line;
    }
    write_curve(dir / "precision.txt", report.precision);
    write_curve(dir / "success.txt", report.success);
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        for (const auto& r : report.runs[i]) {
            std::string name = r.name;
            if (protocol == Protocol::kTre) name += "_from" + std::to_string(r.start);
            write_boxes(dir / (name + ".txt"), r.predicted, r.start + 1);
        }
    }
}

}  // namespace lltrack::eval
