#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lltrack/types.hpp"

namespace lltrack::synthetic {

enum class Kind { kTranslate, kScale, kDarken };

Kind parse_kind(const std::string& s);
std::string to_string(Kind k);

struct Options {
    int width = 320;
    int height = 240;
    double target_size = 40.0;
    double noise_sigma = 0.01;       // darken only
    double dark_factor = 0.1;        // darken only
    int dark_after = 50;             // darken: frames after this 1-based index are dimmed
    std::uint32_t seed = 2024;
};

/// Procedural sequence of a textured square on a textured background.
///   translate: 100 frames, 2 px/frame to the right
///   scale:     50 frames, side multiplied by 1.02 per frame about a fixed center
///   darken:    100 frames, 1 px/frame, luminance x0.1 after frame 50, Gaussian noise,
///              8-bit quantized
class Sequence {
public:
    explicit Sequence(Kind kind, Options opts = {});

    Kind kind() const { return kind_; }
    const Options& options() const { return opts_; }
    std::string name() const { return to_string(kind_); }
    int size() const;

    /// 0-based frame index.
    ImageBuffer frame(int i) const;
    BoundingBox truth(int i) const;

private:
    Kind kind_;
    Options opts_;
};

/// Writes `img/0001.png ...` and a 1-based `groundtruth_rect.txt`.
void write_sequence(const Sequence& seq, const std::filesystem::path& dir);

}  // namespace lltrack::synthetic
