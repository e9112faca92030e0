#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lltrack/types.hpp"

namespace lltrack::imgproc {

/// Image-sequence directory in the OTB layout: `img/` frames plus optional `groundtruth_rect.txt`.
struct SequenceHandle {
    std::string name;
    std::vector<std::filesystem::path> frame_paths;
    std::optional<std::vector<BoundingBox>> ground_truth;

    std::size_t size() const { return frame_paths.size(); }
};

/// Loads frame paths in ascending numeric order. Ground-truth boxes are converted to
/// 0-based coordinates when `one_based` is set. A line-count mismatch truncates both
/// lists to the shorter length with a warning.
SequenceHandle load_sequence(const std::filesystem::path& dir, bool one_based = true);

/// Parses one `x,y,w,h` line (comma, tab or whitespace separated).
BoundingBox parse_box(const std::string& line);

ImageBuffer load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const ImageBuffer& img);

std::uint8_t to_u8(double v);
inline double from_u8(std::uint8_t v) { return v / 255.0; }

/// Quantizes every sample to the nearest 8-bit level.
ImageBuffer quantize_8bit(const ImageBuffer& img);

/// Samples the continuous rectangle `region` onto an `out_w x out_h` grid. Shrinking
/// averages each output footprint exactly (area weights), enlarging is bilinear;
/// out-of-image samples replicate the nearest edge pixel. An integer-aligned region of
/// the output size is copied unchanged.
ImageBuffer resample(const ImageBuffer& img, const BoundingBox& region, int out_w, int out_h);

/// Region of `padding * (w, h)` about the box center.
BoundingBox patch_rect(const BoundingBox& bb, double padding);

/// resample(img, patch_rect(bb, padding), out_w, out_h).
ImageBuffer extract_patch(const ImageBuffer& img, const BoundingBox& bb, double padding,
                          int out_w, int out_h);

/// BT.601 luma on the 0-255 scale, averaged over the box clipped to the image (or the
/// whole image when no box is given or the clipped box is empty).
double mean_luminance(const ImageBuffer& img, const std::optional<BoundingBox>& bb = std::nullopt);

ImageBuffer to_gray(const ImageBuffer& img);

/// Outer product of two symmetric 1-D Hann windows.
FeatureMap cosine_window(int m, int n);

std::vector<double> hann(int n);

}  // namespace lltrack::imgproc
