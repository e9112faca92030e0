#include "lltrack/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <spdlog/spdlog.h>

namespace fs = std::filesystem;

namespace lltrack::imgproc {

namespace {

bool is_image_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp" || ext == ".ppm" ||
           ext == ".pgm" || ext == ".tif" || ext == ".tiff";
}

// Numeric value of the stem, or -1 when it has no digits.
long long stem_number(const fs::path& p) {
    std::string stem = p.stem().string();
    std::string digits;
    for (char c : stem) {
        if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
    }
    return digits.empty() ? -1 : std::stoll(digits);
}

}  // namespace

BoundingBox parse_box(const std::string& line) {
    std::string s = line;
    std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\t' || c == ';'; }, ' ');
    std::istringstream in(s);
    BoundingBox bb;
    if (!(in >> bb.x >> bb.y >> bb.w >> bb.h)) {
        throw std::invalid_argument("malformed box: '" + line + "'");
    }
    return bb;
}

SequenceHandle load_sequence(const fs::path& dir, bool one_based) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("sequence directory not found: " + dir.string());
    }
    fs::path img_dir = dir / "img";
    if (!fs::is_directory(img_dir)) {
        throw std::runtime_error("missing img/ directory in " + dir.string());
    }

    SequenceHandle seq;
    seq.name = dir.filename().string();
    if (seq.name.empty()) seq.name = dir.parent_path().filename().string();
    for (const auto& entry : fs::directory_iterator(img_dir)) {
        if (entry.is_regular_file() && is_image_ext(entry.path())) {
            seq.frame_paths.push_back(entry.path());
        }
    }
    if (seq.frame_paths.empty()) {
        throw std::runtime_error("zero frames in " + img_dir.string());
    }
    std::sort(seq.frame_paths.begin(), seq.frame_paths.end(), [](const fs::path& a, const fs::path& b) {
        long long na = stem_number(a), nb = stem_number(b);
        if (na != nb) return na < nb;
        return a.filename() < b.filename();
    });

    fs::path gt_path = dir / "groundtruth_rect.txt";
    if (fs::exists(gt_path)) {
        std::ifstream in(gt_path);
        std::vector<BoundingBox> boxes;
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            BoundingBox bb = parse_box(line);
            if (one_based) {
                bb.x -= 1.0;
                bb.y -= 1.0;
            }
            boxes.push_back(bb);
        }
        if (boxes.size() != seq.frame_paths.size()) {
            spdlog::warn("{}: {} ground-truth lines for {} frames; truncating to the shorter", seq.name,
                         boxes.size(), seq.frame_paths.size());
            std::size_t n = std::min(boxes.size(), seq.frame_paths.size());
            if (n == 0) throw std::runtime_error("zero frames after ground-truth truncation");
            boxes.resize(n);
            seq.frame_paths.resize(n);
        }
        seq.ground_truth = std::move(boxes);
    }
    return seq;
}

std::uint8_t to_u8(double v) {
    double s = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<std::uint8_t>(s);
}

ImageBuffer quantize_8bit(const ImageBuffer& img) {
    ImageBuffer out = img;
    for (double& v : out.data) v = from_u8(to_u8(v));
    return out;
}

ImageBuffer load_image(const fs::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw std::runtime_error("cannot read image: " + path.string());
    if (m.depth() != CV_8U) {
        cv::Mat tmp;
        m.convertTo(tmp, CV_8U, m.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
        m = tmp;
    }
    const int src_ch = m.channels();
    const int ch = src_ch == 1 ? 1 : 3;
    ImageBuffer img(m.rows, m.cols, ch);
    for (int y = 0; y < m.rows; ++y) {
        const std::uint8_t* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            const std::uint8_t* px = row + x * src_ch;
            if (ch == 1) {
                img.at(y, x) = from_u8(px[0]);
            } else {
                // BGR(A) on disk
                img.at(y, x, 0) = from_u8(px[2]);
                img.at(y, x, 1) = from_u8(px[1]);
                img.at(y, x, 2) = from_u8(px[0]);
            }
        }
    }
    return img;
}

void save_image(const fs::path& path, const ImageBuffer& img) {
    cv::Mat m(img.height, img.width, img.channels == 1 ? CV_8UC1 : CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        std::uint8_t* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width; ++x) {
            if (img.channels == 1) {
                row[x] = to_u8(img.at(y, x));
            } else {
                row[3 * x + 0] = to_u8(img.at(y, x, 2));
                row[3 * x + 1] = to_u8(img.at(y, x, 1));
                row[3 * x + 2] = to_u8(img.at(y, x, 0));
            }
        }
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), m)) throw std::runtime_error("cannot write image: " + path.string());
}

namespace {

struct Tap {
    int index;
    double weight;
};

// Source taps for each output sample along one axis. Output j covers
// [start + j*step, start + (j+1)*step); shrinking averages that interval exactly,
// enlarging interpolates linearly at its center. Indices are clamped (edge replication).
std::vector<std::vector<Tap>> axis_taps(double start, double length, int out, int in) {
    const double step = length / out;
    std::vector<std::vector<Tap>> taps(out);
    for (int j = 0; j < out; ++j) {
        auto& t = taps[j];
        if (step >= 1.0) {
            const double a = start + j * step;
            const double b = a + step;
            for (int k = static_cast<int>(std::floor(a)); k < b; ++k) {
                const double overlap = std::min(b, k + 1.0) - std::max(a, static_cast<double>(k));
                if (overlap > 0.0) t.push_back({std::clamp(k, 0, in - 1), overlap / step});
            }
        } else {
            const double c = start + (j + 0.5) * step - 0.5;
            const int k = static_cast<int>(std::floor(c));
            const double f = c - k;
            t.push_back({std::clamp(k, 0, in - 1), 1.0 - f});
            t.push_back({std::clamp(k + 1, 0, in - 1), f});
        }
    }
    return taps;
}

}  // namespace

BoundingBox patch_rect(const BoundingBox& bb, double padding) {
    return BoundingBox::from_center(bb.cx(), bb.cy(), padding * bb.w, padding * bb.h);
}

ImageBuffer resample(const ImageBuffer& img, const BoundingBox& region, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("resample: out_size must be positive");
    if (!(region.w > 0.0 && region.h > 0.0)) throw std::invalid_argument("resample: empty region");
    const auto tx = axis_taps(region.x, region.w, out_w, img.width);
    const auto ty = axis_taps(region.y, region.h, out_h, img.height);
    const int C = img.channels;

    // horizontal pass over every source row the vertical taps touch
    int row_lo = img.height, row_hi = -1;
    for (const auto& t : ty) {
        for (const Tap& tap : t) {
            row_lo = std::min(row_lo, tap.index);
            row_hi = std::max(row_hi, tap.index);
        }
    }
    const int rows = row_hi - row_lo + 1;
    std::vector<double> tmp(static_cast<std::size_t>(rows) * out_w * C, 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < out_w; ++j) {
            double* dst = &tmp[(static_cast<std::size_t>(r) * out_w + j) * C];
            for (const Tap& tap : tx[j]) {
                for (int c = 0; c < C; ++c) dst[c] += tap.weight * img.at(row_lo + r, tap.index, c);
            }
        }
    }

    ImageBuffer out(out_h, out_w, C);
    for (int i = 0; i < out_h; ++i) {
        for (const Tap& tap : ty[i]) {
            const double* src = &tmp[static_cast<std::size_t>(tap.index - row_lo) * out_w * C];
            double* dst = &out.data[static_cast<std::size_t>(i) * out_w * C];
            for (int k = 0; k < out_w * C; ++k) dst[k] += tap.weight * src[k];
        }
    }
    return out;
}

ImageBuffer extract_patch(const ImageBuffer& img, const BoundingBox& bb, double padding, int out_w,
                          int out_h) {
    if (padding < 1.0) throw std::invalid_argument("extract_patch: padding must be >= 1");
    if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("extract_patch: out_size must be positive");
    return resample(img, patch_rect(bb, padding), out_w, out_h);
}

namespace {

double luma(const ImageBuffer& img, int y, int x) {
    if (img.channels == 1) return img.at(y, x);
    return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

}  // namespace

double mean_luminance(const ImageBuffer& img, const std::optional<BoundingBox>& bb) {
    int x0 = 0, y0 = 0, x1 = img.width, y1 = img.height;
    if (bb) {
        const int bx0 = std::max(0, static_cast<int>(std::floor(bb->x)));
        const int by0 = std::max(0, static_cast<int>(std::floor(bb->y)));
        const int bx1 = std::min(img.width, static_cast<int>(std::ceil(bb->x + bb->w)));
        const int by1 = std::min(img.height, static_cast<int>(std::ceil(bb->y + bb->h)));
        if (bx1 > bx0 && by1 > by0) {
            x0 = bx0;
            y0 = by0;
            x1 = bx1;
            y1 = by1;
        }
    }
    double sum = 0.0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) sum += luma(img, y, x);
    }
    return 255.0 * sum / (static_cast<double>(x1 - x0) * (y1 - y0));
}

ImageBuffer to_gray(const ImageBuffer& img) {
    if (img.channels == 1) return img;
    ImageBuffer out(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) out.at(y, x) = luma(img, y, x);
    }
    return out;
}

std::vector<double> hann(int n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    for (int i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
    }
    return w;
}

FeatureMap cosine_window(int m, int n) {
    if (m < 2 || n < 2) throw std::invalid_argument("cosine_window: m and n must be >= 2");
    const auto wr = hann(m);
    const auto wc = hann(n);
    FeatureMap win(m, n, 1);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < n; ++c) win.at(0, r, c) = wr[r] * wc[c];
    }
    return win;
}

}  // namespace lltrack::imgproc
