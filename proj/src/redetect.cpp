#include "lltrack/redetect.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace lltrack::redetect {

namespace {

struct PixelRect {
    int x0, y0, x1, y1;  // half-open
    bool empty() const { return x1 <= x0 || y1 <= y0; }
};

PixelRect clip_rect(const ImageBuffer& img, const BoundingBox& bb) {
    PixelRect r;
    r.x0 = std::max(0, static_cast<int>(std::lround(bb.x)));
    r.y0 = std::max(0, static_cast<int>(std::lround(bb.y)));
    r.x1 = std::min(img.width, static_cast<int>(std::lround(bb.x + bb.w)));
    r.y1 = std::min(img.height, static_cast<int>(std::lround(bb.y + bb.h)));
    return r;
}

int pixel_bin(const ImageBuffer& img, int y, int x) {
    const double r = img.at(y, x, 0);
    const double g = img.channels == 3 ? img.at(y, x, 1) : r;
    const double b = img.channels == 3 ? img.at(y, x, 2) : r;
    return features::histogram_bin(r, g, b);
}

}  // namespace

SvmVector augment(const features::HistogramVector& hist) {
    SvmVector v(kSvmDims);
    std::copy(hist.begin(), hist.end(), v.begin());
    v.back() = 1.0;
    return v;
}

double dot(const SvmVector& a, const SvmVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::optional<SvmVector> box_feature(const ImageBuffer& img, const BoundingBox& bb) {
    const PixelRect r = clip_rect(img, bb);
    if (r.empty()) return std::nullopt;
    features::HistogramVector hist{};
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) hist[pixel_bin(img, y, x)] += 1.0;
    }
    const double n = static_cast<double>(r.x1 - r.x0) * (r.y1 - r.y0);
    for (double& v : hist) v /= n;
    return augment(hist);
}

std::vector<BoundingBox> negative_boxes(const ImageBuffer& img, const BoundingBox& bb, const NegativeRings& rings) {
    static constexpr std::array<std::array<int, 2>, 8> kCompass{
        {{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};
    std::vector<BoundingBox> out;
    for (double f : {rings.near, rings.far}) {
        for (const auto& d : kCompass) {
            const BoundingBox nb{bb.x + d[0] * f * bb.w, bb.y + d[1] * f * bb.h, bb.w, bb.h};
            if (iou(nb, bb) > rings.max_iou) continue;
            if (clip_rect(img, nb).empty()) continue;
            out.push_back(nb);
        }
    }
    return out;
}

TrainingBatch sample_batch(const ImageBuffer& img, const BoundingBox& bb, const NegativeRings& rings) {
    if (!(bb.w > 0 && bb.h > 0)) throw std::invalid_argument("sample_batch: empty box");
    TrainingBatch batch;
    auto pos = box_feature(img, bb);
    if (!pos) throw std::invalid_argument("sample_batch: box outside the image");
    batch.samples.push_back({std::move(*pos), +1});
    for (const BoundingBox& nb : negative_boxes(img, bb, rings)) {
        batch.samples.push_back({*box_feature(img, nb), -1});
    }
    return batch;
}

double hinge_loss(const SvmVector& h, const SvmVector& v, int c) {
    return std::max(0.0, 1.0 - c * dot(h, v));
}

SvmVector pa_update(const SvmVector& h, const SvmVector& v, int c, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("pa_update: tau must be positive");
    const double loss = hinge_loss(h, v, c);
    if (loss <= 0.0) return h;
    // grad = -c v, so |grad|^2 = |v|^2
    const double step = loss / (dot(v, v) + 1.0 / (2.0 * tau));
    SvmVector out = h;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += step * c * v[i];
    return out;
}

double train(SvmModel& model, const TrainingBatch& batch) {
    if (batch.samples.empty()) return 0.0;
    double total = 0.0;
    for (const Sample& s : batch.samples) {
        total += hinge_loss(model.h, s.v, s.label);
        model.h = pa_update(model.h, s.v, s.label, model.tau);
    }
    return total / static_cast<double>(batch.samples.size());
}

ScanResult scan(const ImageBuffer& img, const SvmModel& model, double w, double h) {
    if (!(w > 0 && h > 0)) throw std::invalid_argument("scan: window size must be positive");
    const int ww = std::max(1, static_cast<int>(std::lround(w)));
    const int wh = std::max(1, static_cast<int>(std::lround(h)));

    ScanResult best;
    if (ww > img.width || wh > img.height) {
        best.box = BoundingBox::from_center(img.width / 2.0, img.height / 2.0, w, h);
        best.score = dot(model.h, *box_feature(img, best.box));
        best.windows = 1;
        return best;
    }

    // <h, [hist, 1]> is the window mean of h[bin(p)] plus the bias, so one integral
    // image of the per-pixel weights scores every window.
    const int W = img.width, H = img.height;
    std::vector<double> integral(static_cast<std::size_t>(W + 1) * (H + 1), 0.0);
    auto I = [&](int y, int x) -> double& { return integral[static_cast<std::size_t>(y) * (W + 1) + x]; };
    for (int y = 0; y < H; ++y) {
        double row = 0.0;
        for (int x = 0; x < W; ++x) {
            row += model.h[pixel_bin(img, y, x)];
            I(y + 1, x + 1) = I(y, x + 1) + row;
        }
    }

    const int sx = std::max(1, static_cast<int>(std::lround(w / 10.0)));
    const int sy = std::max(1, static_cast<int>(std::lround(h / 10.0)));
    const double area = static_cast<double>(ww) * wh;
    const double bias = model.h.back();
    bool first = true;
    for (int y = 0; y + wh <= H; y += sy) {
        for (int x = 0; x + ww <= W; x += sx) {
            const double sum = I(y + wh, x + ww) - I(y, x + ww) - I(y + wh, x) + I(y, x);
            const double score = sum / area + bias;
            ++best.windows;
            if (first || score > best.score) {
                best.score = score;
                best.box = {static_cast<double>(x), static_cast<double>(y), static_cast<double>(ww),
                            static_cast<double>(wh)};
                first = false;
            }
        }
    }
    return best;
}

}  // namespace lltrack::redetect
