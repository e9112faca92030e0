#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lltrack {

/// Invalid or missing configuration (bad key, missing data asset).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// H x W x C raster with interleaved channels and values in [0, 1].
struct ImageBuffer {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    ImageBuffer() = default;
    ImageBuffer(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || (c != 1 && c != 3)) {
            throw std::invalid_argument("ImageBuffer: invalid dimensions");
        }
    }

    bool empty() const { return data.empty(); }

    double& at(int y, int x, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

/// Axis-aligned box in 0-based pixel coordinates. May extend past the image.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }
    double area() const { return w * h; }

    static BoundingBox from_center(double cx, double cy, double w, double h) {
        return {cx - w / 2.0, cy - h / 2.0, w, h};
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Dense m x n x d real tensor stored channel-planar: plane c is a row-major m x n grid.
struct FeatureMap {
    int rows = 0;
    int cols = 0;
    int channels = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int m, int n, int d, double fill = 0.0)
        : rows(m), cols(n), channels(d),
          data(static_cast<std::size_t>(m) * n * d, fill) {}

    std::size_t plane_size() const { return static_cast<std::size_t>(rows) * cols; }

    double& at(int c, int r, int col) {
        return data[c * plane_size() + static_cast<std::size_t>(r) * cols + col];
    }
    double at(int c, int r, int col) const {
        return data[c * plane_size() + static_cast<std::size_t>(r) * cols + col];
    }

    double* plane(int c) { return data.data() + c * plane_size(); }
    const double* plane(int c) const { return data.data() + c * plane_size(); }

    bool same_grid(const FeatureMap& o) const { return rows == o.rows && cols == o.cols; }
};

/// Single-channel real m x n field: response maps, filter denominators, illumination maps.
struct RealField {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    RealField() = default;
    RealField(int m, int n, double fill = 0.0)
        : rows(m), cols(n), data(static_cast<std::size_t>(m) * n, fill) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

using ResponseMap = RealField;

/// Intersection over union; 0 for disjoint or empty boxes.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace lltrack
