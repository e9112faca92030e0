#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lltrack/imgproc.hpp"
#include "lltrack/memory.hpp"
#include "lltrack/synthetic.hpp"
#include "lltrack/tracker.hpp"
#include "lltrack/types.hpp"

namespace lltrack::eval {

using lltrack::iou;

/// Random-access frames with optional ground truth.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::string name() const = 0;
    virtual std::size_t size() const = 0;
    virtual ImageBuffer frame(std::size_t i) const = 0;
    virtual std::optional<BoundingBox> truth(std::size_t i) const = 0;
};

/// Frames decoded from an on-disk sequence directory.
class DiskSource : public FrameSource {
public:
    explicit DiskSource(imgproc::SequenceHandle seq) : seq_(std::move(seq)) {}
    std::string name() const override { return seq_.name; }
    std::size_t size() const override { return seq_.size(); }
    ImageBuffer frame(std::size_t i) const override { return imgproc::load_image(seq_.frame_paths.at(i)); }
    std::optional<BoundingBox> truth(std::size_t i) const override;

private:
    imgproc::SequenceHandle seq_;
};

/// Frames rendered on demand by the synthetic generator.
class SyntheticSource : public FrameSource {
public:
    explicit SyntheticSource(synthetic::Sequence seq) : seq_(std::move(seq)) {}
    std::string name() const override { return seq_.name(); }
    std::size_t size() const override { return static_cast<std::size_t>(seq_.size()); }
    ImageBuffer frame(std::size_t i) const override { return seq_.frame(static_cast<int>(i)); }
    std::optional<BoundingBox> truth(std::size_t i) const override { return seq_.truth(static_cast<int>(i)); }

private:
    synthetic::Sequence seq_;
};

/// Aligned per-frame predictions, ground truth and tracker wall-clock.
struct SequenceResult {
    std::string name;
    std::size_t start = 0;  // first frame of the run within the sequence
    std::vector<BoundingBox> predicted;
    std::vector<BoundingBox> truth;
    std::vector<double> seconds;
    std::vector<memory::ConfidenceReport> reports;  // one per frame; the first is the init frame

    std::vector<double> center_errors() const;
    std::vector<double> ious() const;
};

double center_error(const BoundingBox& a, const BoundingBox& b);

struct CurveData {
    std::vector<double> thresholds;
    std::vector<double> rates;
    double summary = 0.0;  // DP at 20 px or AUC
};

/// Thresholds 0..50 px in unit steps.
std::vector<double> precision_thresholds();
/// 21 thresholds 0, 0.05, ..., 1.
std::vector<double> success_thresholds();

/// Fraction of errors <= t for each threshold; summary is the rate at t = 20 (0 if absent).
CurveData precision_from_errors(const std::vector<double>& errors,
                                const std::vector<double>& thresholds = precision_thresholds());

/// Fraction of overlaps > t for each threshold; summary is the mean rate.
CurveData success_from_ious(const std::vector<double>& overlaps,
                            const std::vector<double>& thresholds = success_thresholds());

/// Curves pooled over all frames of all results.
CurveData precision_curve(const std::vector<SequenceResult>& results);
CurveData success_curve(const std::vector<SequenceResult>& results);
CurveData precision_curve(const SequenceResult& result);
CurveData success_curve(const SequenceResult& result);

/// Runs the tracker from frame `start` (initialized on its ground truth) to the end.
SequenceResult run_from(const FrameSource& src, const tracker::TrackerConfig& cfg, std::size_t start);

SequenceResult run_ope(const FrameSource& src, const tracker::TrackerConfig& cfg);

/// Evenly spaced start frames floor(k n / s), k < s, with s = min(segments, n).
std::vector<std::size_t> tre_starts(std::size_t n, int segments = 20);

std::vector<SequenceResult> run_tre(const FrameSource& src, const tracker::TrackerConfig& cfg, int segments = 20);

/// Frames per second of tracker time.
double measure_fps(const std::vector<SequenceResult>& results);
double measure_fps(const SequenceResult& result);

enum class Protocol { kOpe, kTre };
Protocol parse_protocol(const std::string& s);

struct SequenceSummary {
    std::string name;
    std::size_t frames = 0;
    double dp20 = 0.0;
    double auc = 0.0;
    double fps = 0.0;
};

struct DatasetReport {
    std::vector<SequenceSummary> sequences;
    CurveData precision;
    CurveData success;
    double fps = 0.0;
    std::vector<std::vector<SequenceResult>> runs;  // per sequence
};

/// Evaluates every source, `workers` sequences at a time (0: hardware concurrency).
DatasetReport evaluate(const std::vector<std::shared_ptr<const FrameSource>>& sources,
                       const tracker::TrackerConfig& cfg, Protocol protocol, unsigned workers = 0);

/// Every subdirectory of `dir` holding an `img/` folder.
std::vector<std::shared_ptr<const FrameSource>> load_dataset(const std::filesystem::path& dir);

/// `threshold,rate` lines.
void write_curve(const std::filesystem::path& path, const CurveData& curve);

/// `frame,x,y,w,h` lines with two decimals; frames numbered from `first_frame`.
void write_boxes(const std::filesystem::path& path, const std::vector<BoundingBox>& boxes, std::size_t first_frame = 1);

/// Writes summary.csv, precision.txt, success.txt and per-sequence box files.
void write_report(const std::filesystem::path& dir, const DatasetReport& report, Protocol protocol);

}  // namespace lltrack::eval
