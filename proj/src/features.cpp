#include "lltrack/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

#include "lltrack/imgproc.hpp"

#ifndef LLTRACK_DEFAULT_COLOR_NAMES
#define LLTRACK_DEFAULT_COLOR_NAMES "data/color_names.txt"
#endif

namespace fs = std::filesystem;

namespace lltrack::features {

// ---------------------------------------------------------------------------
// HOG
// ---------------------------------------------------------------------------

namespace {

constexpr int kOrientations = 9;
constexpr double kHogEps = 1e-4;
constexpr double kHogClip = 0.2;
constexpr double kTextureWeight = 0.2357;

struct Gradient {
    double mag;
    int bin;  // 0..17, signed orientation
};

Gradient pixel_gradient(const ImageBuffer& img, int y, int x, const double* uu, const double* vv) {
    const int xm = std::max(x - 1, 0), xp = std::min(x + 1, img.width - 1);
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, img.height - 1);
    double best_dx = 0.0, best_dy = 0.0, best_v = -1.0;
    for (int c = 0; c < img.channels; ++c) {
        const double dx = img.at(y, xp, c) - img.at(y, xm, c);
        const double dy = img.at(yp, x, c) - img.at(ym, x, c);
        const double v = dx * dx + dy * dy;
        if (v > best_v) {
            best_v = v;
            best_dx = dx;
            best_dy = dy;
        }
    }
    // snap to one of 18 signed orientations
    double best_dot = 0.0;
    int best_o = 0;
    for (int o = 0; o < kOrientations; ++o) {
        const double dot = uu[o] * best_dx + vv[o] * best_dy;
        if (dot > best_dot) {
            best_dot = dot;
            best_o = o;
        } else if (-dot > best_dot) {
            best_dot = -dot;
            best_o = o + kOrientations;
        }
    }
    return {std::sqrt(best_v), best_o};
}

}  // namespace

FeatureMap hog(const ImageBuffer& patch, int cell) {
    if (cell <= 0 || patch.height % cell != 0 || patch.width % cell != 0) {
        throw std::invalid_argument("hog: patch dimensions must be multiples of the cell size");
    }
    const int mr = patch.height / cell;
    const int mc = patch.width / cell;
    const int ncell = mr * mc;

    double uu[kOrientations], vv[kOrientations];
    for (int o = 0; o < kOrientations; ++o) {
        uu[o] = std::cos(o * std::numbers::pi / kOrientations);
        vv[o] = std::sin(o * std::numbers::pi / kOrientations);
    }

    // 18-bin histograms with bilinear spatial voting
    std::vector<double> hist(static_cast<std::size_t>(ncell) * 2 * kOrientations, 0.0);
    auto hist_at = [&](int r, int c) { return hist.data() + (static_cast<std::size_t>(r) * mc + c) * 2 * kOrientations; };
    for (int y = 0; y < patch.height; ++y) {
        const double yp = (y + 0.5) / cell - 0.5;
        const int iyp = static_cast<int>(std::floor(yp));
        const double vy0 = yp - iyp, vy1 = 1.0 - vy0;
        for (int x = 0; x < patch.width; ++x) {
            const Gradient g = pixel_gradient(patch, y, x, uu, vv);
            if (g.mag == 0.0) continue;
            const double xp = (x + 0.5) / cell - 0.5;
            const int ixp = static_cast<int>(std::floor(xp));
            const double vx0 = xp - ixp, vx1 = 1.0 - vx0;
            if (iyp >= 0 && ixp >= 0) hist_at(iyp, ixp)[g.bin] += vy1 * vx1 * g.mag;
            if (iyp >= 0 && ixp + 1 < mc) hist_at(iyp, ixp + 1)[g.bin] += vy1 * vx0 * g.mag;
            if (iyp + 1 < mr && ixp >= 0) hist_at(iyp + 1, ixp)[g.bin] += vy0 * vx1 * g.mag;
            if (iyp + 1 < mr && ixp + 1 < mc) hist_at(iyp + 1, ixp + 1)[g.bin] += vy0 * vx0 * g.mag;
        }
    }

    // unsigned energy per cell
    std::vector<double> norm(ncell, 0.0);
    for (int r = 0; r < mr; ++r) {
        for (int c = 0; c < mc; ++c) {
            const double* h = hist_at(r, c);
            double e = 0.0;
            for (int o = 0; o < kOrientations; ++o) {
                const double s = h[o] + h[o + kOrientations];
                e += s * s;
            }
            norm[r * mc + c] = e;
        }
    }
    auto norm_at = [&](int r, int c) {
        r = std::clamp(r, 0, mr - 1);
        c = std::clamp(c, 0, mc - 1);
        return norm[r * mc + c];
    };
    auto block = [&](int r, int c) {  // 2x2 block with top-left cell (r, c)
        return 1.0 / std::sqrt(norm_at(r, c) + norm_at(r, c + 1) + norm_at(r + 1, c) + norm_at(r + 1, c + 1) + kHogEps);
    };

    FeatureMap out(mr, mc, kHogChannels);
    for (int r = 0; r < mr; ++r) {
        for (int c = 0; c < mc; ++c) {
            const double n[4] = {block(r, c), block(r - 1, c), block(r, c - 1), block(r - 1, c - 1)};
            const double* h = hist_at(r, c);
            double texture[4] = {0, 0, 0, 0};
            for (int o = 0; o < 2 * kOrientations; ++o) {
                double sum = 0.0;
                for (int k = 0; k < 4; ++k) {
                    const double v = std::min(h[o] * n[k], kHogClip);
                    sum += v;
                    texture[k] += v;
                }
                out.at(o, r, c) = 0.5 * sum;
            }
            for (int o = 0; o < kOrientations; ++o) {
                const double s = h[o] + h[o + kOrientations];
                double sum = 0.0;
                for (int k = 0; k < 4; ++k) sum += std::min(s * n[k], kHogClip);
                out.at(2 * kOrientations + o, r, c) = 0.5 * sum;
            }
            for (int k = 0; k < 4; ++k) out.at(3 * kOrientations + k, r, c) = kTextureWeight * texture[k];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Color names
// ---------------------------------------------------------------------------

const std::array<std::array<double, ColorNameTable::kCoordinates>, ColorNameTable::kNames>& ColorNameTable::basis() {
    // Haar-style tree over the names: four pairs, pairs of pairs, the two quads, then
    // the first eight names against {red, white, yellow}. Column order matches the
    // widely distributed 10-column reduced table.
    static const auto b = [] {
        std::array<std::array<double, kCoordinates>, kNames> m{};
        const double s2 = 1.0 / std::sqrt(2.0);
        for (int p = 0; p < 4; ++p) {
            m[2 * p][p] = s2;
            m[2 * p + 1][p] = -s2;
        }
        m[0][6] = m[1][6] = 0.5;
        m[2][6] = m[3][6] = -0.5;
        m[4][7] = m[5][7] = 0.5;
        m[6][7] = m[7][7] = -0.5;
        for (int k = 0; k < 8; ++k) {
            m[k][8] = (k < 4 ? 1.0 : -1.0) / std::sqrt(8.0);
            m[k][9] = std::sqrt(3.0 / 88.0);
        }
        for (int k = 8; k < 11; ++k) m[k][9] = -std::sqrt(8.0 / 33.0);
        m[8][4] = s2;
        m[9][4] = -s2;
        m[8][5] = m[9][5] = 1.0 / std::sqrt(6.0);
        m[10][5] = -std::sqrt(2.0 / 3.0);
        return m;
    }();
    return b;
}

ColorNameTable ColorNameTable::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("color-name table not found: " + path.string());

    ColorNameTable t;
    t.probs_.reserve(static_cast<std::size_t>(kRows) * kNames);
    t.coords_.reserve(static_cast<std::size_t>(kRows) * kCoordinates);
    const auto& B = basis();

    std::string line;
    int rows = 0;
    std::vector<double> vals;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        vals.clear();
        double v;
        while (ls >> v) vals.push_back(v);
        if (vals.empty()) continue;
        if (rows >= kRows) throw ConfigError("color-name table has more than 32768 rows");
        if (vals.size() == kNames) {
            for (double p : vals) t.probs_.push_back(p);
            for (int j = 0; j < kCoordinates; ++j) {
                double s = 0.0;
                for (int k = 0; k < kNames; ++k) s += vals[k] * B[k][j];
                t.coords_.push_back(s);
            }
        } else if (vals.size() == kCoordinates) {
            for (double c : vals) t.coords_.push_back(c);
            for (int k = 0; k < kNames; ++k) {
                double s = 1.0 / kNames;
                for (int j = 0; j < kCoordinates; ++j) s += vals[j] * B[k][j];
                t.probs_.push_back(std::max(0.0, s));
            }
        } else {
            throw ConfigError("color-name table row " + std::to_string(rows + 1) + " has " +
                              std::to_string(vals.size()) + " values (expected 10 or 11)");
        }
        ++rows;
    }
    if (rows != kRows) throw ConfigError("color-name table has " + std::to_string(rows) + " rows, expected 32768");
    return t;
}

fs::path ColorNameTable::default_path() {
    if (const char* env = std::getenv("LLTRACK_COLOR_NAMES"); env && *env) return env;
    return LLTRACK_DEFAULT_COLOR_NAMES;
}

const ColorNameTable& ColorNameTable::shared(const fs::path& path) {
    static std::mutex mu;
    static std::map<fs::path, ColorNameTable> cache;
    const fs::path key = path.empty() ? default_path() : path;
    std::lock_guard lock(mu);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, load(key)).first;
    return it->second;
}

int ColorNameTable::index_of(double r, double g, double b) {
    const int r8 = imgproc::to_u8(r), g8 = imgproc::to_u8(g), b8 = imgproc::to_u8(b);
    return r8 / 8 + 32 * (g8 / 8) + 1024 * (b8 / 8);
}

namespace {

template <int D, typename Lookup>
FeatureMap pool_lookup(const ImageBuffer& patch, int cell, Lookup lookup) {
    if (cell <= 0 || patch.height % cell != 0 || patch.width % cell != 0) {
        throw std::invalid_argument("color names: patch dimensions must be multiples of the cell size");
    }
    const int mr = patch.height / cell, mc = patch.width / cell;
    FeatureMap out(mr, mc, D);
    const double inv = 1.0 / (cell * cell);
    for (int y = 0; y < patch.height; ++y) {
        for (int x = 0; x < patch.width; ++x) {
            const double r = patch.at(y, x, 0);
            const double g = patch.channels == 3 ? patch.at(y, x, 1) : r;
            const double b = patch.channels == 3 ? patch.at(y, x, 2) : r;
            const auto v = lookup(ColorNameTable::index_of(r, g, b));
            for (int k = 0; k < D; ++k) out.at(k, y / cell, x / cell) += v[k] * inv;
        }
    }
    return out;
}

}  // namespace

FeatureMap color_names(const ImageBuffer& patch, int cell, const ColorNameTable& table) {
    return pool_lookup<ColorNameTable::kCoordinates>(patch, cell, [&](int i) { return table.coordinates(i); });
}

FeatureMap color_name_probabilities(const ImageBuffer& patch, int cell, const ColorNameTable& table) {
    return pool_lookup<ColorNameTable::kNames>(patch, cell, [&](int i) { return table.probabilities(i); });
}

FeatureMap fuse(const FeatureMap& hog_map, const FeatureMap& cn, const FeatureMap& window) {
    if (!hog_map.same_grid(cn) || !hog_map.same_grid(window)) {
        throw std::invalid_argument("fuse: feature grids do not match");
    }
    FeatureMap out(hog_map.rows, hog_map.cols, hog_map.channels + cn.channels);
    const std::size_t plane = out.plane_size();
    const double* w = window.plane(0);
    for (int c = 0; c < out.channels; ++c) {
        const double* src = c < hog_map.channels ? hog_map.plane(c) : cn.plane(c - hog_map.channels);
        double* dst = out.plane(c);
        for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * w[i];
    }
    return out;
}

FeatureMap fused_features(const ImageBuffer& patch, const FeatureMap& window, int cell,
                          const ColorNameTable& table) {
    return fuse(hog(patch, cell), color_names(patch, cell, table), window);
}

int histogram_bin(double r, double g, double b) {
    const int qr = imgproc::to_u8(r) / 32, qg = imgproc::to_u8(g) / 32, qb = imgproc::to_u8(b) / 32;
    return 64 * qr + 8 * qg + qb;
}

HistogramVector quantized_color_histogram(const ImageBuffer& patch) {
    HistogramVector h{};
    const std::size_t n = static_cast<std::size_t>(patch.height) * patch.width;
    if (n == 0) return h;
    for (int y = 0; y < patch.height; ++y) {
        for (int x = 0; x < patch.width; ++x) {
            const double r = patch.at(y, x, 0);
            const double g = patch.channels == 3 ? patch.at(y, x, 1) : r;
            const double b = patch.channels == 3 ? patch.at(y, x, 2) : r;
            h[histogram_bin(r, g, b)] += 1.0;
        }
    }
    for (double& v : h) v /= static_cast<double>(n);
    return h;
}

}  // namespace lltrack::features
