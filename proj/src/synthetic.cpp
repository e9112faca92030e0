#include "lltrack/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "lltrack/imgproc.hpp"

namespace lltrack::synthetic {

Kind parse_kind(const std::string& s) {
    if (s == "translate") return Kind::kTranslate;
    if (s == "scale") return Kind::kScale;
    if (s == "darken") return Kind::kDarken;
    throw ConfigError("unknown synthetic kind '" + s + "' (expected translate, scale or darken)");
}

std::string to_string(Kind k) {
    switch (k) {
        case Kind::kTranslate: return "translate";
        case Kind::kScale: return "scale";
        case Kind::kDarken: return "darken";
    }
    return "translate";
}

Sequence::Sequence(Kind kind, Options opts) : kind_(kind), opts_(opts) {
    if (opts_.width < 64 || opts_.height < 64) throw std::invalid_argument("synthetic: frame must be at least 64 x 64");
}

int Sequence::size() const { return kind_ == Kind::kScale ? 50 : 100; }

BoundingBox Sequence::truth(int i) const {
    const double s = opts_.target_size;
    const double cy = opts_.height / 2.0;
    switch (kind_) {
        case Kind::kTranslate: return BoundingBox::from_center(60.0 + 2.0 * i, cy, s, s);
        case Kind::kScale: {
            const double side = s * std::pow(1.02, i);
            return BoundingBox::from_center(opts_.width / 2.0, cy, side, side);
        }
        case Kind::kDarken: return BoundingBox::from_center(100.0 + i, cy, s, s);
    }
    return {};
}

namespace {

using Rgb = std::array<double, 3>;

Rgb background(double x, double y) {
    const double two_pi = 2.0 * std::numbers::pi;
    const double v = 0.45 + 0.08 * std::sin(two_pi * x / 37.0) * std::cos(two_pi * y / 29.0) +
                     0.04 * std::sin(two_pi * (x + y) / 53.0);
    return {0.95 * v, v, 1.05 * v};
}

// Pattern over the unit square: a dark rim around a 4 x 4 grid of colored tiles.
Rgb target(double u, double v) {
    static constexpr std::array<Rgb, 4> kPalette{
        {{0.85, 0.20, 0.15}, {0.15, 0.35, 0.85}, {0.95, 0.85, 0.20}, {0.10, 0.60, 0.25}}};
    if (u < 0.08 || u > 0.92 || v < 0.08 || v > 0.92) return {0.05, 0.05, 0.05};
    const int iu = std::min(3, static_cast<int>(u * 4.0));
    const int iv = std::min(3, static_cast<int>(v * 4.0));
    return kPalette[(iu + 3 * iv) % 4];
}

}  // namespace

ImageBuffer Sequence::frame(int i) const {
    if (i < 0 || i >= size()) throw std::out_of_range("synthetic: frame index out of range");
    constexpr int kSuper = 3;
    const BoundingBox bb = truth(i);
    ImageBuffer img(opts_.height, opts_.width, 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            Rgb acc{0.0, 0.0, 0.0};
            for (int sy = 0; sy < kSuper; ++sy) {
                for (int sx = 0; sx < kSuper; ++sx) {
                    const double px = x + (sx + 0.5) / kSuper;
                    const double py = y + (sy + 0.5) / kSuper;
                    const double u = (px - bb.x) / bb.w;
                    const double v = (py - bb.y) / bb.h;
                    const Rgb c = (u >= 0.0 && u < 1.0 && v >= 0.0 && v < 1.0) ? target(u, v) : background(px, py);
                    for (int k = 0; k < 3; ++k) acc[k] += c[k];
                }
            }
            for (int k = 0; k < 3; ++k) img.at(y, x, k) = acc[k] / (kSuper * kSuper);
        }
    }

    if (kind_ == Kind::kDarken) {
        if (i + 1 > opts_.dark_after) {
            for (double& v : img.data) v *= opts_.dark_factor;
        }
        std::mt19937 rng(opts_.seed + static_cast<std::uint32_t>(i));
        std::normal_distribution<double> noise(0.0, opts_.noise_sigma);
        for (double& v : img.data) v = std::clamp(v + noise(rng), 0.0, 1.0);
    }
    return imgproc::quantize_8bit(img);
}

void write_sequence(const Sequence& seq, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "img");
    std::ofstream gt(dir / "groundtruth_rect.txt");
    if (!gt) throw std::runtime_error("cannot write " + (dir / "groundtruth_rect.txt").string());
    for (int i = 0; i < seq.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%04d.png", i + 1);
        imgproc::save_image(dir / "img" / name, seq.frame(i));
        const BoundingBox b = seq.truth(i);
        char line[128];
        std::snprintf(line, sizeof(line), "%.2f,%.2f,%.2f,%.2f\n", b.x + 1.0, b.y + 1.0, b.w, b.h);
        gt << line;
    }
}

}  // namespace lltrack::synthetic
