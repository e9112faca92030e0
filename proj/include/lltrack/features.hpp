#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "lltrack/types.hpp"

namespace lltrack::features {

inline constexpr int kHogChannels = 31;
inline constexpr int kColorNameChannels = 10;
inline constexpr int kFusedChannels = kHogChannels + kColorNameChannels;
inline constexpr int kHistogramBins = 512;

/// 31-channel Felzenszwalb HOG on a `cell`-pixel grid: 18 signed orientations,
/// 9 unsigned orientations, 4 texture energies. Patch sides must be multiples of `cell`.
FeatureMap hog(const ImageBuffer& patch, int cell = 4);

/// RGB -> color-name lookup over a 32x32x32 quantization of the color cube.
///
/// Holds the 11 name probabilities (black, blue, brown, grey, green, orange, pink,
/// purple, red, white, yellow) and their 10-D coordinates in an orthonormal basis
/// of the zero-sum subspace. The coordinates are what trackers use as features;
/// they represent the probabilities without loss because every row sums to one.
class ColorNameTable {
public:
    static constexpr int kNames = 11;
    static constexpr int kCoordinates = kColorNameChannels;
    static constexpr int kRows = 32 * 32 * 32;

    enum Name { kBlack, kBlue, kBrown, kGrey, kGreen, kOrange, kPink, kPurple, kRed, kWhite, kYellow };

    /// Reads a text table of 32768 rows with either 11 probabilities or 10 reduced
    /// coordinates per row. `#` lines are comments.
    static ColorNameTable load(const std::filesystem::path& path);

    /// Table at `path`, or the bundled asset when `path` is empty. Cached per path.
    static const ColorNameTable& shared(const std::filesystem::path& path = {});

    static std::filesystem::path default_path();

    static int index_of(double r, double g, double b);

    std::span<const double, kNames> probabilities(int index) const {
        return std::span<const double, kNames>(probs_.data() + index * kNames, kNames);
    }
    std::span<const double, kCoordinates> coordinates(int index) const {
        return std::span<const double, kCoordinates>(coords_.data() + index * kCoordinates, kCoordinates);
    }

    /// The 11 x 10 basis mapping probabilities to coordinates (row k = name k).
    static const std::array<std::array<double, kCoordinates>, kNames>& basis();

private:
    std::vector<double> probs_;
    std::vector<double> coords_;
};

/// 10-channel color-name coordinates average-pooled to the `cell` grid. Gray patches
/// are treated as R = G = B.
FeatureMap color_names(const ImageBuffer& patch, int cell = 4,
                       const ColorNameTable& table = ColorNameTable::shared());

/// 11-channel name probabilities pooled to the `cell` grid (cell 1 = per pixel).
FeatureMap color_name_probabilities(const ImageBuffer& patch, int cell = 1,
                                    const ColorNameTable& table = ColorNameTable::shared());

/// Channel concatenation followed by per-channel multiplication with `window` (m x n x 1).
FeatureMap fuse(const FeatureMap& hog, const FeatureMap& cn, const FeatureMap& window);

/// HOG + color names on the same grid, windowed.
FeatureMap fused_features(const ImageBuffer& patch, const FeatureMap& window, int cell = 4,
                          const ColorNameTable& table = ColorNameTable::shared());

using HistogramVector = std::array<double, kHistogramBins>;

/// Joint 8x8x8 color histogram, L1-normalized. Bin index is 64*r + 8*g + b.
HistogramVector quantized_color_histogram(const ImageBuffer& patch);

/// Joint histogram bin of one pixel.
int histogram_bin(double r, double g, double b);

}  // namespace lltrack::features
