#include "lltrack/scale.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lltrack/features.hpp"
#include "lltrack/imgproc.hpp"

namespace lltrack::scale {

ScaleModel::ScaleModel(const ScaleParams& params, double w0, double h0) : params_(params), w0_(w0), h0_(h0) {
    if (params.n_scales < 3 || params.n_scales % 2 == 0) throw std::invalid_argument("ScaleModel: n_scales must be odd and >= 3");
    if (params.n_interp < params.n_scales) throw std::invalid_argument("ScaleModel: n_interp must be >= n_scales");
    if (params.step <= 1.0) throw std::invalid_argument("ScaleModel: scale step must exceed 1");
    if (w0 <= 0 || h0 <= 0) throw std::invalid_argument("ScaleModel: target size must be positive");

    const double f = std::min(1.0, std::sqrt(params.max_template_area / (w0 * h0)));
    const int cell = params.cell;
    tmpl_w_ = std::max(2 * cell, static_cast<int>(std::floor(w0 * f / cell)) * cell);
    tmpl_h_ = std::max(2 * cell, static_cast<int>(std::floor(h0 * f / cell)) * cell);

    const int N = params.n_scales;
    const auto w = imgproc::hann(N + 2);
    window_ = FeatureMap(1, N, 1);
    for (int k = 0; k < N; ++k) window_.at(0, 0, k) = w[k + 1];

    const double sigma = params.sigma_factor * std::sqrt(static_cast<double>(N));
    label_ = spectral::dft(spectral::gaussian_label(1, N, sigma));

    dcf::CompressedFilter::Params fp;
    fp.lambda = params.lambda;
    fp.eta = params.eta;
    fp.dims = params.dims > 0 ? params.dims : N;  // clipped to D_s in train()
    fp.center = false;
    filter_ = dcf::CompressedFilter(fp, label_);
}

void ScaleModel::set_current_scale(double s) {
    current_scale_ = std::clamp(s, params_.min_scale, params_.max_scale);
}

void ScaleModel::apply(double multiplier) { set_current_scale(current_scale_ * multiplier); }

double ScaleModel::patch_side(double side, double step, int n) {
    return std::max(8.0, side * std::pow(step, n));
}

void ScaleModel::train(const FeatureMap& pyramid) { filter_.train(pyramid); }

void ScaleModel::update(const FeatureMap& pyramid) {
    if (!filter_.trained()) {
        filter_.train(pyramid);
        return;
    }
    filter_.update_template(pyramid);
    filter_.refresh(pyramid);
}

FeatureMap build_scale_pyramid(const ImageBuffer& img, const BoundingBox& bb, const ScaleModel& model) {
    const auto& p = model.params();
    const int N = p.n_scales;
    FeatureMap out;
    for (int k = 0; k < N; ++k) {
        const int n = model.exponent_of(k);
        const double pw = ScaleModel::patch_side(bb.w, p.step, n);
        const double ph = ScaleModel::patch_side(bb.h, p.step, n);
        const BoundingBox sb = BoundingBox::from_center(bb.cx(), bb.cy(), pw, ph);
        const ImageBuffer patch = imgproc::extract_patch(img, sb, 1.0, model.template_width(), model.template_height());
        const FeatureMap h = features::hog(patch, p.cell);
        if (k == 0) out = FeatureMap(1, N, static_cast<int>(h.data.size()));
        const double w = model.window().at(0, 0, k);
        for (std::size_t i = 0; i < h.data.size(); ++i) out.at(static_cast<int>(i), 0, k) = h.data[i] * w;
    }
    return out;
}

ResponseMap scale_scores(const ScaleModel& model, const FeatureMap& pyramid) {
    if (!model.filter().trained()) throw std::invalid_argument("estimate_scale: untrained scale model");
    return model.filter().detect(pyramid).response;
}

std::vector<double> interpolation_grid(int n_scales, int n_out) {
    const double half = (n_scales - 1) / 2.0;
    std::vector<double> t(n_out);
    for (int i = 0; i < n_out; ++i) t[i] = n_out == 1 ? 0.0 : -half + 2.0 * half * i / (n_out - 1);
    return t;
}

std::vector<double> interpolate_scores(const std::vector<double>& shift_scores, int n_out) {
    const int N = static_cast<int>(shift_scores.size());
    FeatureMap s(1, N, 1);
    for (int j = 0; j < N; ++j) s.at(0, 0, j) = shift_scores[j];
    const spectral::SpectralMap S = spectral::dft(s);

    const auto grid = interpolation_grid(N, n_out);
    std::vector<double> out(n_out);
    for (int i = 0; i < n_out; ++i) {
        const double t = grid[i];
        double v = S.at(0, 0, 0).real();
        for (int k = 1; k <= (N - 1) / 2; ++k) {
            const double ang = 2.0 * std::numbers::pi * k * t / N;
            v += 2.0 * (S.at(0, 0, k) * std::complex<double>(std::cos(ang), std::sin(ang))).real();
        }
        if (N % 2 == 0) v += S.at(0, 0, N / 2).real() * std::cos(std::numbers::pi * t);
        out[i] = v / N;
    }
    return out;
}

ScaleEstimate ScaleModel::estimate(const FeatureMap& pyramid) const {
    const ResponseMap r = scale_scores(*this, pyramid);
    const auto interp = interpolate_scores(r.data, params_.n_interp);
    const auto grid = interpolation_grid(params_.n_scales, params_.n_interp);

    // ties resolve toward the smallest scale change
    std::vector<int> order(grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(grid[a]) < std::abs(grid[b]); });
    int best = order[0];
    for (int i : order) {
        if (interp[i] > interp[best]) best = i;
    }

    ScaleEstimate e;
    e.exponent = grid[best];
    e.multiplier = std::pow(params_.step, e.exponent);
    e.s_max = interp[best];
    e.interpolated = interp;
    return e;
}

ScaleEstimate estimate_scale(ScaleModel& model, const FeatureMap& pyramid) {
    ScaleEstimate e = model.estimate(pyramid);
    model.apply(e.multiplier);
    return e;
}

void update_scale(ScaleModel& model, const FeatureMap& pyramid) { model.update(pyramid); }

}  // namespace lltrack::scale
