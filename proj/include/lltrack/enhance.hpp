#pragma once

#include <vector>

#include "lltrack/types.hpp"

namespace lltrack::enhance {

/// Per-pixel illumination on the image grid.
using IlluminationMap = RealField;

struct WeightField {
    RealField horizontal;
    RealField vertical;
};

struct EnhanceConfig {
    double k = 1.0;          // exposure control
    double t_l = 48.0;       // luminance gate, 0-255 scale
    int iterations = 1;
    double beta = 0.15;
    double epsilon = 1e-3;
    double sigma = 2.0;
    double alpha = 0.95;     // atmospheric light of the inverted model
    int window = 5;          // odd side of the weight neighbourhood

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Mean box luminance strictly below T_L.
bool should_enhance(const ImageBuffer& img, const BoundingBox& bb, const EnhanceConfig& cfg);

/// Exposure gain clamp(k (128/255) / max(mu/255, eps), 1, 8) for box luminance mu.
double exposure_gain(double box_luminance, const EnhanceConfig& cfg);

/// Multiplies by the box-luminance gain and clips at 1, `iterations` times.
ImageBuffer fast_enhance(const ImageBuffer& img, const BoundingBox& bb, const EnhanceConfig& cfg);

/// Channel maximum per pixel.
IlluminationMap initial_illumination(const ImageBuffer& img);

/// Forward differences with a replicated last row/column (zero there).
RealField gradient_h(const RealField& t);
RealField gradient_v(const RealField& t);

/// Structure-aware weights: inverse magnitude of the Gaussian-smoothed gradient.
WeightField build_weights(const IlluminationMap& t_hat, const EnhanceConfig& cfg);

/// Per-pixel coefficients of the smoothness term: beta W / (|grad T_hat| + eps).
WeightField smoothness_coefficients(const IlluminationMap& t_hat, const EnhanceConfig& cfg);

/// |T_hat - T|^2 + sum_p a_h (grad_h T)^2 + a_v (grad_v T)^2 with a from smoothness_coefficients.
double refinement_objective(const IlluminationMap& t, const IlluminationMap& t_hat, const WeightField& coeff);

struct Refinement {
    IlluminationMap map;                 // clamped to [eps, 1]
    std::vector<double> objective_trace; // objective of each iterate, starting at T_hat
    int iterations = 0;
    bool converged = true;
};

/// Minimises the quadratic refinement objective with preconditioned conjugate gradients
/// (relative residual 1e-6, at most 1000 iterations).
Refinement refine_illumination(const IlluminationMap& t_hat, const EnhanceConfig& cfg);

/// L / (T + eps) per channel, clamped to [0, 1].
ImageBuffer recover(const ImageBuffer& img, const IlluminationMap& t, const EnhanceConfig& cfg);

/// Inverted-image (haze) model with atmospheric light alpha.
ImageBuffer recover_inverted(const ImageBuffer& img, const EnhanceConfig& cfg);

/// Initial map, refinement and recovery in sequence.
ImageBuffer lime(const ImageBuffer& img, const EnhanceConfig& cfg);

}  // namespace lltrack::enhance
