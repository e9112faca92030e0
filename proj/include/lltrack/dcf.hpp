#pragma once

#include <vector>

#include "lltrack/spectral.hpp"
#include "lltrack/types.hpp"

namespace lltrack::dcf {

using spectral::SpectralMap;

/// Row-orthonormal d x D compression matrix, stored row-major.
struct ProjectionMatrix {
    int rows = 0;  // d
    int cols = 0;  // D
    std::vector<double> data;

    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }

    static ProjectionMatrix identity(int D);
};

/// Fourier-domain numerator/denominator pair with the running template.
struct LinearFilterModel {
    SpectralMap numerator;    // A_t, one plane per (compressed) channel
    RealField denominator;    // B_t = blended sum of power spectra
    FeatureMap tmpl;          // mu_t, uncompressed running average of training samples
    SpectralMap label;        // Y, single plane
    double lambda = 0.01;
    double eta = 0.025;

    bool trained() const { return !numerator.data.empty(); }
};

/// A = conj(Y) X, B = sum_k |X^k|^2, template = x.
LinearFilterModel train_initial(const FeatureMap& x, const SpectralMap& Y, double lambda, double eta = 0.025);

/// Blends A, B and the template toward the sample `x` with rate eta.
LinearFilterModel update_model(const LinearFilterModel& model, const FeatureMap& x);

/// Spectrum H of the spatial filter applied at detection: H^l = conj(A^l) / (B + lambda).
SpectralMap filter_spectrum(const LinearFilterModel& model);

struct ProjectionOptions {
    bool center = true;
    int max_iterations = 300;
    double tolerance = 1e-13;
    const ProjectionMatrix* warm_start = nullptr;
};

/// Top-d principal directions of the template's channel covariance (pixels as
/// observations), found by QR-based subspace iteration. Rows are orthonormal and
/// ordered by decreasing variance.
ProjectionMatrix compute_projection(const FeatureMap& mu, int d, const ProjectionOptions& opts = {});

/// Per-pixel compression x -> P x.
FeatureMap project(const ProjectionMatrix& P, const FeatureMap& x);

struct Peak {
    int row = 0;
    int col = 0;
    double dy = 0.0;   // signed circular shift with subpixel refinement
    double dx = 0.0;
    double value = 0.0;
};

/// Discrete argmax (first in row-major order) refined by separable parabola fits
/// through the circular neighbours.
Peak find_peak(const ResponseMap& r);

struct Detection {
    ResponseMap response;
    Peak peak;
    double r_max = 0.0;
};

/// Compress z with P, then evaluate the response of a model whose numerator lives in
/// the compressed space.
Detection detect(const LinearFilterModel& model, const ProjectionMatrix& P, const FeatureMap& z);

/// Response for a model and sample that share the same channels.
Detection detect_uncompressed(const LinearFilterModel& model, const FeatureMap& z);

/// Translation, scale and long-term filter building block: the template is kept
/// uncompressed, the numerator and denominator live in the space of the projection
/// computed at the last refresh.
class CompressedFilter {
public:
    struct Params {
        double lambda = 0.01;
        double eta = 0.025;
        int dims = 18;
        bool center = true;
    };

    CompressedFilter() = default;
    CompressedFilter(const Params& params, SpectralMap label) : params_(params), label_(std::move(label)) {}

    /// First-frame training on sample x.
    void train(const FeatureMap& x);

    /// mu <- (1 - eta) mu + eta x. Leaves the numerator, denominator and projection untouched.
    void update_template(const FeatureMap& x);

    /// Recomputes the projection from the template, re-projects the numerator from the
    /// template and blends the denominator with the compressed sample x.
    void refresh(const FeatureMap& x);

    /// Projection from another filter (long-term filter sharing the translation basis).
    void refresh_with(const ProjectionMatrix& P, const FeatureMap& x);

    Detection detect(const FeatureMap& z) const;

    /// Forgets everything learned; keeps parameters and label.
    void reset() { model_ = {}; projection_ = {}; }

    bool trained() const { return model_.trained(); }
    const LinearFilterModel& model() const { return model_; }
    const ProjectionMatrix& projection() const { return projection_; }
    const FeatureMap& tmpl() const { return model_.tmpl; }
    void set_template(FeatureMap mu) { model_.tmpl = std::move(mu); }
    const Params& params() const { return params_; }

private:
    void solve(const ProjectionMatrix& P, const FeatureMap& x, bool first);

    Params params_;
    SpectralMap label_;
    LinearFilterModel model_;
    ProjectionMatrix projection_;
};

}  // namespace lltrack::dcf
