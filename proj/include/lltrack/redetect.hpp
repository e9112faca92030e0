#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "lltrack/features.hpp"
#include "lltrack/types.hpp"

namespace lltrack::redetect {

inline constexpr int kSvmDims = features::kHistogramBins + 1;

using SvmVector = std::vector<double>;

/// Linear detector h over [histogram, 1].
struct SvmModel {
    SvmVector h = SvmVector(kSvmDims, 0.0);
    double tau = 1.0;
};

struct Sample {
    SvmVector v;
    int label = 1;  // +1 target, -1 background
};

struct TrainingBatch {
    std::vector<Sample> samples;
};

/// Appends the constant bias feature.
SvmVector augment(const features::HistogramVector& hist);

double dot(const SvmVector& a, const SvmVector& b);

/// Histogram feature of the box clipped to the image; empty optional when the clip is empty.
std::optional<SvmVector> box_feature(const ImageBuffer& img, const BoundingBox& bb);

/// Offsets (fractions of w, h) used for the two rings of negatives.
struct NegativeRings {
    double near = 0.6;
    double far = 1.0;
    double max_iou = 0.3;
};

/// One positive at bb and up to 16 negatives: bb shifted by each ring fraction of (w, h)
/// along the 8 compass directions, keeping boxes with IoU <= max_iou and a non-empty
/// intersection with the image.
TrainingBatch sample_batch(const ImageBuffer& img, const BoundingBox& bb, const NegativeRings& rings = {});

/// Boxes sample_batch would use for negatives (after filtering).
std::vector<BoundingBox> negative_boxes(const ImageBuffer& img, const BoundingBox& bb, const NegativeRings& rings = {});

/// max(0, 1 - c <h, v>).
double hinge_loss(const SvmVector& h, const SvmVector& v, int c);

/// Passive-aggressive step h - l / (|grad|^2 + 1/(2 tau)) * grad with grad = -c v.
SvmVector pa_update(const SvmVector& h, const SvmVector& v, int c, double tau);

/// One pass of PA updates over the batch. Returns the mean hinge loss before the pass.
double train(SvmModel& model, const TrainingBatch& batch);

struct ScanResult {
    BoundingBox box;
    double score = 0.0;
    int windows = 0;
};

/// Dense sliding-window scan at stride (w/10, h/10) over the whole frame at a single
/// size; returns the first maximal window in row-major order.
ScanResult scan(const ImageBuffer& img, const SvmModel& model, double w, double h);

}  // namespace lltrack::redetect
