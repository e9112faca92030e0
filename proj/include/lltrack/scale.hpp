#pragma once

#include <vector>

#include "lltrack/dcf.hpp"
#include "lltrack/types.hpp"

namespace lltrack::scale {

struct ScaleParams {
    int n_scales = 17;
    int n_interp = 33;
    double step = 1.02;
    double sigma_factor = 0.25;  // label sigma = sigma_factor * sqrt(n_scales), in exponent units
    double lambda = 0.01;
    double eta = 0.025;
    int max_template_area = 512;
    int cell = 4;
    double min_scale = 0.2;
    double max_scale = 5.0;
    int dims = 0;  // compressed scale channels; 0 keeps min(n_scales, D_s)
};

struct ScaleEstimate {
    double multiplier = 1.0;   // step^exponent
    double exponent = 0.0;     // interpolated argmax, in [-(N-1)/2, (N-1)/2]
    double s_max = 0.0;
    std::vector<double> interpolated;  // n_interp scores ordered by ascending exponent
};

/// 1-D scale filter over a pyramid of target-sized HOG samples.
class ScaleModel {
public:
    ScaleModel() = default;
    /// `w0 x h0` is the target size at scale 1.
    ScaleModel(const ScaleParams& params, double w0, double h0);

    const ScaleParams& params() const { return params_; }
    int template_width() const { return tmpl_w_; }
    int template_height() const { return tmpl_h_; }
    double current_scale() const { return current_scale_; }
    void set_current_scale(double s);
    double base_width() const { return w0_; }
    double base_height() const { return h0_; }

    /// Exponent of pyramid column k: k - (N-1)/2.
    int exponent_of(int k) const { return k - (params_.n_scales - 1) / 2; }

    /// Patch side for exponent n around a target of size `side`.
    static double patch_side(double side, double step, int n);

    void train(const FeatureMap& pyramid);
    ScaleEstimate estimate(const FeatureMap& pyramid) const;
    /// Template blend plus projection/numerator/denominator refresh.
    void update(const FeatureMap& pyramid);

    /// Multiplies the current scale, clamped to [min_scale, max_scale].
    void apply(double multiplier);

    const dcf::CompressedFilter& filter() const { return filter_; }
    const FeatureMap& window() const { return window_; }
    const spectral::SpectralMap& label() const { return label_; }

private:
    ScaleParams params_;
    double w0_ = 0.0, h0_ = 0.0;
    int tmpl_w_ = 0, tmpl_h_ = 0;
    double current_scale_ = 1.0;
    FeatureMap window_;  // 1 x N x 1
    spectral::SpectralMap label_;
    dcf::CompressedFilter filter_;
};

/// For each exponent n in [-(N-1)/2, (N-1)/2] samples a^n W x a^n H (at least 8 x 8)
/// about the box center, resizes to the scale template, extracts HOG and
/// stores it as column n of a 1 x N x D_s map weighted by a Hann window over scales.
/// `bb` carries the current target size.
FeatureMap build_scale_pyramid(const ImageBuffer& img, const BoundingBox& bb, const ScaleModel& model);

/// 1-D scores over the N circular scale shifts: column j is shift wrap_offset(j, N).
ResponseMap scale_scores(const ScaleModel& model, const FeatureMap& pyramid);

/// Periodic trigonometric interpolation (DFT zero-padding) of N samples, index j being
/// shift wrap_offset(j, N), evaluated at `n_out` evenly spaced shifts spanning
/// [-(N-1)/2, (N-1)/2]. Exact at the original integer shifts.
std::vector<double> interpolate_scores(const std::vector<double>& shift_scores, int n_out);

/// Shift values at which interpolate_scores evaluates.
std::vector<double> interpolation_grid(int n_scales, int n_out);

/// estimate_scale as a free function; also multiplies the model's current scale.
ScaleEstimate estimate_scale(ScaleModel& model, const FeatureMap& pyramid);

/// update_scale as a free function.
void update_scale(ScaleModel& model, const FeatureMap& pyramid);

}  // namespace lltrack::scale
