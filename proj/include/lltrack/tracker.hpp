#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lltrack/dcf.hpp"
#include "lltrack/enhance.hpp"
#include "lltrack/features.hpp"
#include "lltrack/memory.hpp"
#include "lltrack/redetect.hpp"
#include "lltrack/scale.hpp"
#include "lltrack/types.hpp"

namespace lltrack::tracker {

enum class EnhanceMode { kAuto, kOn, kOff };

EnhanceMode parse_enhance_mode(const std::string& s);
std::string to_string(EnhanceMode m);

/// How a re-detection candidate is accepted.
enum class RedetectAccept { kLongTerm, kMargin };

struct TrackerConfig {
    double lambda = 0.01;
    double eta = 0.025;
    double sigma_factor = 1.0 / 16.0;
    double padding = 2.0;
    double lt_padding = 1.0;
    int cell = 4;
    int max_template_cells = 2500;
    int dims = 18;
    int scale_dims = 0;  // 0: min(n_scales, D_s)
    int n_scales = 17;
    int n_interp = 33;
    double scale_step = 1.02;
    double scale_sigma_factor = 0.25;
    int scale_max_area = 512;
    double t_redetect = 0.2;
    double t_accept = 0.4;
    int update_interval = 3;
    double gate_r_max = 0.9;
    double gate_quality = 0.75;
    memory::QualityMetric quality = memory::QualityMetric::kApce;
    int rematch_interval = 5;
    RedetectAccept redetect_accept = RedetectAccept::kLongTerm;
    double svm_tau = 1.0;
    int svm_init_epochs = 5;
    EnhanceMode enhance_mode = EnhanceMode::kAuto;
    enhance::EnhanceConfig enhance;
    std::string color_names;  // empty: default table

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Sets one `key = value` entry. Unknown keys and malformed values throw ConfigError.
void set_config_value(TrackerConfig& cfg, const std::string& key, const std::string& value);

/// Current value of a key in its textual form.
std::string get_config_value(const TrackerConfig& cfg, const std::string& key);

/// All keys in a stable order.
const std::vector<std::string>& config_keys();

/// Reads flat `key = value` lines; `#` starts a comment.
TrackerConfig load_config(const std::filesystem::path& path, TrackerConfig base = {});

/// Parses config text (same format as load_config).
TrackerConfig parse_config(const std::string& text, TrackerConfig base = {});

struct StepResult {
    BoundingBox box;
    memory::ConfidenceReport report;
};

/// Sampling geometry of one filter: a padded window about the target resized to a
/// fixed cell grid.
struct PatchGeometry {
    double padding = 1.0;
    int width = 0;   // template pixels
    int height = 0;
    int cell = 4;

    int rows() const { return height / cell; }
    int cols() const { return width / cell; }
};

/// Per-frame long-term tracker: translation, scale and long-term correlation filters
/// with confidence-gated updates, SVM re-detection and low-light enhancement.
class Tracker {
public:
    explicit Tracker(TrackerConfig cfg = {});

    /// Trains every model on the first frame. Throws std::invalid_argument for boxes
    /// narrower or shorter than 4 px after clipping to the frame.
    void init(const ImageBuffer& frame, const BoundingBox& bb);

    StepResult step(const ImageBuffer& frame);

    bool initialized() const { return initialized_; }
    int frame_index() const { return frame_index_; }
    BoundingBox box() const;
    double current_scale() const { return scale_.current_scale(); }
    const TrackerConfig& config() const { return cfg_; }

    const dcf::CompressedFilter& translation() const { return translation_; }
    const scale::ScaleModel& scale_model() const { return scale_; }
    const memory::LongTermFilter& long_term() const { return long_term_; }
    const redetect::SvmModel& svm() const { return svm_; }
    const memory::ConfidenceHistory& history() const { return history_; }
    const memory::ConfidenceReport& last_report() const { return last_report_; }
    const PatchGeometry& translation_geometry() const { return geom_; }
    const PatchGeometry& long_term_geometry() const { return lt_geom_; }

    /// Translation-filter detection about `center` at the current scale; the returned
    /// center includes the peak displacement.
    std::pair<dcf::Detection, std::pair<double, double>> detect_at(const ImageBuffer& frame, double cx,
                                                                   double cy) const;

private:
    FeatureMap sample(const ImageBuffer& frame, double cx, double cy, const PatchGeometry& g,
                      const FeatureMap& window) const;
    BoundingBox target_box(double cx, double cy) const;
    double long_term_at(const ImageBuffer& frame, double cx, double cy) const;
    bool rematch();

    TrackerConfig cfg_;
    const features::ColorNameTable* table_ = nullptr;
    bool initialized_ = false;
    int frame_index_ = 0;
    double cx_ = 0.0, cy_ = 0.0;
    double base_w_ = 0.0, base_h_ = 0.0;

    PatchGeometry geom_, lt_geom_;
    FeatureMap window_, lt_window_;
    dcf::CompressedFilter translation_;
    scale::ScaleModel scale_;
    memory::LongTermFilter long_term_;
    redetect::SvmModel svm_;
    memory::ConfidenceHistory history_;
    memory::GateConfig gate_cfg_;
    memory::ConfidenceReport last_report_;
    FeatureMap initial_template_;     // translation template of the first frame
    FeatureMap initial_lt_template_;  // long-term template of the first frame
};

/// Normalized circular cross-correlation peak between two same-shaped feature maps.
double correlation_peak(const FeatureMap& a, const FeatureMap& b);

}  // namespace lltrack::tracker
