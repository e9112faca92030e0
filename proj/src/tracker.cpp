#include "lltrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "lltrack/imgproc.hpp"
#include "lltrack/spectral.hpp"

namespace lltrack::tracker {

EnhanceMode parse_enhance_mode(const std::string& s) {
    if (s == "auto") return EnhanceMode::kAuto;
    if (s == "on") return EnhanceMode::kOn;
    if (s == "off") return EnhanceMode::kOff;
    throw ConfigError("unknown enhancement mode '" + s + "' (expected auto, on or off)");
}

std::string to_string(EnhanceMode m) {
    switch (m) {
        case EnhanceMode::kAuto: return "auto";
        case EnhanceMode::kOn: return "on";
        case EnhanceMode::kOff: return "off";
    }
    return "auto";
}

void TrackerConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("invalid config: ") + what);
    };
    require(lambda > 0.0, "lambda must be positive");
    require(eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
    require(sigma_factor > 0.0, "sigma_factor must be positive");
    require(padding >= 1.0 && lt_padding >= 1.0, "padding must be >= 1");
    require(cell >= 1, "cell must be >= 1");
    require(max_template_cells >= 4, "max_template_cells must be >= 4");
    require(dims >= 1, "dims must be >= 1");
    require(scale_dims >= 0, "scale_dims must be >= 0");
    require(n_scales >= 3 && n_scales % 2 == 1, "n_scales must be odd and >= 3");
    require(n_interp >= n_scales, "n_interp must be >= n_scales");
    require(scale_step > 1.0, "scale_step must exceed 1");
    require(scale_sigma_factor > 0.0, "scale_sigma_factor must be positive");
    require(scale_max_area >= 16, "scale_max_area must be >= 16");
    require(t_redetect >= 0.0 && t_accept >= 0.0, "thresholds must be non-negative");
    require(update_interval >= 1, "update_interval must be >= 1");
    require(gate_r_max >= 0.0 && gate_quality >= 0.0, "gate factors must be non-negative");
    require(rematch_interval >= 0, "rematch_interval must be >= 0");
    require(svm_tau > 0.0, "svm_tau must be positive");
    require(svm_init_epochs >= 1, "svm_init_epochs must be >= 1");
    enhance.validate();
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size() || !std::isfinite(out)) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
    return out;
}

int parse_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    int out = 0;
    try {
        out = std::stoi(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

struct Entry {
    std::function<void(TrackerConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const TrackerConfig&)> get;
};

template <typename Member>
Entry number(Member member) {
    return {[member](TrackerConfig& c, const std::string& k, const std::string& v) {
                if constexpr (std::is_same_v<std::remove_reference_t<decltype(c.*member)>, int>) {
                    c.*member = parse_int(k, v);
                } else {
                    c.*member = parse_double(k, v);
                }
            },
            [member](const TrackerConfig& c) {
                if constexpr (std::is_same_v<std::remove_cvref_t<decltype(c.*member)>, int>) {
                    return std::to_string(c.*member);
                } else {
                    return format_double(c.*member);
                }
            }};
}

template <typename Member>
Entry enhance_number(Member member) {
    return {[member](TrackerConfig& c, const std::string& k, const std::string& v) {
                if constexpr (std::is_same_v<std::remove_reference_t<decltype(c.enhance.*member)>, int>) {
                    c.enhance.*member = parse_int(k, v);
                } else {
                    c.enhance.*member = parse_double(k, v);
                }
            },
            [member](const TrackerConfig& c) {
                if constexpr (std::is_same_v<std::remove_cvref_t<decltype(c.enhance.*member)>, int>) {
                    return std::to_string(c.enhance.*member);
                } else {
                    return format_double(c.enhance.*member);
                }
            }};
}

const std::vector<std::pair<std::string, Entry>>& entries() {
    static const std::vector<std::pair<std::string, Entry>> table = {
        {"lambda", number(&TrackerConfig::lambda)},
        {"eta", number(&TrackerConfig::eta)},
        {"sigma_factor", number(&TrackerConfig::sigma_factor)},
        {"padding", number(&TrackerConfig::padding)},
        {"lt_padding", number(&TrackerConfig::lt_padding)},
        {"cell", number(&TrackerConfig::cell)},
        {"max_template_cells", number(&TrackerConfig::max_template_cells)},
        {"dims", number(&TrackerConfig::dims)},
        {"scale_dims", number(&TrackerConfig::scale_dims)},
        {"n_scales", number(&TrackerConfig::n_scales)},
        {"n_interp", number(&TrackerConfig::n_interp)},
        {"scale_step", number(&TrackerConfig::scale_step)},
        {"scale_sigma_factor", number(&TrackerConfig::scale_sigma_factor)},
        {"scale_max_area", number(&TrackerConfig::scale_max_area)},
        {"t_redetect", number(&TrackerConfig::t_redetect)},
        {"t_accept", number(&TrackerConfig::t_accept)},
        {"update_interval", number(&TrackerConfig::update_interval)},
        {"gate_r_max", number(&TrackerConfig::gate_r_max)},
        {"gate_quality", number(&TrackerConfig::gate_quality)},
        {"quality",
         {[](TrackerConfig& c, const std::string&, const std::string& v) { c.quality = memory::parse_quality_metric(v); },
          [](const TrackerConfig& c) { return memory::to_string(c.quality); }}},
        {"rematch_interval", number(&TrackerConfig::rematch_interval)},
        {"redetect_accept",
         {[](TrackerConfig& c, const std::string&, const std::string& v) {
              if (v == "c_long") {
                  c.redetect_accept = RedetectAccept::kLongTerm;
              } else if (v == "margin") {
                  c.redetect_accept = RedetectAccept::kMargin;
              } else {
                  throw ConfigError("config key 'redetect_accept': expected c_long or margin, got '" + v + "'");
              }
          },
          [](const TrackerConfig& c) {
              return std::string(c.redetect_accept == RedetectAccept::kLongTerm ? "c_long" : "margin");
          }}},
        {"svm_tau", number(&TrackerConfig::svm_tau)},
        {"svm_init_epochs", number(&TrackerConfig::svm_init_epochs)},
        {"enhance",
         {[](TrackerConfig& c, const std::string&, const std::string& v) { c.enhance_mode = parse_enhance_mode(v); },
          [](const TrackerConfig& c) { return to_string(c.enhance_mode); }}},
        {"enhance_k", enhance_number(&enhance::EnhanceConfig::k)},
        {"enhance_t_l", enhance_number(&enhance::EnhanceConfig::t_l)},
        {"enhance_iterations", enhance_number(&enhance::EnhanceConfig::iterations)},
        {"enhance_beta", enhance_number(&enhance::EnhanceConfig::beta)},
        {"enhance_epsilon", enhance_number(&enhance::EnhanceConfig::epsilon)},
        {"enhance_sigma", enhance_number(&enhance::EnhanceConfig::sigma)},
        {"enhance_alpha", enhance_number(&enhance::EnhanceConfig::alpha)},
        {"enhance_window", enhance_number(&enhance::EnhanceConfig::window)},
        {"color_names",
         {[](TrackerConfig& c, const std::string&, const std::string& v) { c.color_names = v; },
          [](const TrackerConfig& c) { return c.color_names; }}},
    };
    return table;
}

const Entry& find_entry(const std::string& key) {
    for (const auto& [k, e] : entries()) {
        if (k == key) return e;
    }
    throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

void set_config_value(TrackerConfig& cfg, const std::string& key, const std::string& value) {
    find_entry(key).set(cfg, key, value);
}

std::string get_config_value(const TrackerConfig& cfg, const std::string& key) { return find_entry(key).get(cfg); }

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& e : entries()) k.push_back(e.first);
        return k;
    }();
    return keys;
}

TrackerConfig parse_config(const std::string& text, TrackerConfig base) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

TrackerConfig load_config(const std::filesystem::path& path, TrackerConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

double correlation_peak(const FeatureMap& a, const FeatureMap& b) {
    if (!a.same_grid(b) || a.channels != b.channels) throw std::invalid_argument("correlation_peak: shape mismatch");
    double na = 0.0, nb = 0.0;
    for (double v : a.data) na += v * v;
    for (double v : b.data) nb += v * v;
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    const spectral::SpectralMap A = spectral::dft(a);
    const spectral::SpectralMap B = spectral::dft(b);
    spectral::SpectralMap C(a.rows, a.cols, 1);
    for (int c = 0; c < a.channels; ++c) {
        const auto* pa = A.plane(c);
        const auto* pb = B.plane(c);
        for (std::size_t i = 0; i < C.plane_size(); ++i) C.data[i] += std::conj(pa[i]) * pb[i];
    }
    const FeatureMap corr = spectral::idft(C);
    return *std::max_element(corr.data.begin(), corr.data.end()) / std::sqrt(na * nb);
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

BoundingBox Tracker::target_box(double cx, double cy) const {
    const double s = scale_.current_scale();
    return BoundingBox::from_center(cx, cy, base_w_ * s, base_h_ * s);
}

BoundingBox Tracker::box() const { return target_box(cx_, cy_); }

FeatureMap Tracker::sample(const ImageBuffer& frame, double cx, double cy, const PatchGeometry& g,
                           const FeatureMap& window) const {
    const ImageBuffer patch = imgproc::extract_patch(frame, target_box(cx, cy), g.padding, g.width, g.height);
    return features::fused_features(patch, window, g.cell, *table_);
}

std::pair<dcf::Detection, std::pair<double, double>> Tracker::detect_at(const ImageBuffer& frame, double cx,
                                                                        double cy) const {
    dcf::Detection det = translation_.detect(sample(frame, cx, cy, geom_, window_));
    const BoundingBox region = imgproc::patch_rect(target_box(cx, cy), geom_.padding);
    const double sx = region.w / geom_.width;
    const double sy = region.h / geom_.height;
    const double ncx = cx + det.peak.dx * geom_.cell * sx;
    const double ncy = cy + det.peak.dy * geom_.cell * sy;
    return {std::move(det), {ncx, ncy}};
}

double Tracker::long_term_at(const ImageBuffer& frame, double cx, double cy) const {
    return memory::long_term_confidence(long_term_, sample(frame, cx, cy, lt_geom_, lt_window_));
}

namespace {

std::optional<ImageBuffer> enhanced_copy(const ImageBuffer& frame, const BoundingBox& bb, const TrackerConfig& cfg) {
    switch (cfg.enhance_mode) {
        case EnhanceMode::kOff: return std::nullopt;
        case EnhanceMode::kOn: return enhance::fast_enhance(frame, bb, cfg.enhance);
        case EnhanceMode::kAuto:
            if (enhance::should_enhance(frame, bb, cfg.enhance)) return enhance::fast_enhance(frame, bb, cfg.enhance);
            return std::nullopt;
    }
    return std::nullopt;
}

PatchGeometry make_geometry(double padding, double w, double h, double shrink, int cell) {
    PatchGeometry g;
    g.padding = padding;
    g.cell = cell;
    g.width = cell * std::max(2, static_cast<int>(std::lround(padding * w * shrink / cell)));
    g.height = cell * std::max(2, static_cast<int>(std::lround(padding * h * shrink / cell)));
    return g;
}

}  // namespace

void Tracker::init(const ImageBuffer& frame_in, const BoundingBox& bb) {
    const double x0 = std::max(0.0, bb.x), y0 = std::max(0.0, bb.y);
    const double x1 = std::min<double>(frame_in.width, bb.x + bb.w);
    const double y1 = std::min<double>(frame_in.height, bb.y + bb.h);
    if (!(x1 - x0 >= 4.0 && y1 - y0 >= 4.0)) {
        throw std::invalid_argument("Tracker::init: target box must be at least 4 x 4 px inside the frame");
    }
    table_ = &features::ColorNameTable::shared(cfg_.color_names);

    frame_index_ = 1;
    base_w_ = x1 - x0;
    base_h_ = y1 - y0;
    cx_ = x0 + base_w_ / 2.0;
    cy_ = y0 + base_h_ / 2.0;

    scale::ScaleParams sp;
    sp.n_scales = cfg_.n_scales;
    sp.n_interp = cfg_.n_interp;
    sp.step = cfg_.scale_step;
    sp.sigma_factor = cfg_.scale_sigma_factor;
    sp.lambda = cfg_.lambda;
    sp.eta = cfg_.eta;
    sp.max_template_area = cfg_.scale_max_area;
    sp.cell = cfg_.cell;
    sp.dims = cfg_.scale_dims;
    scale_ = scale::ScaleModel(sp, base_w_, base_h_);

    const BoundingBox clipped = box();
    const auto enhanced = enhanced_copy(frame_in, clipped, cfg_);
    const ImageBuffer& frame = enhanced ? *enhanced : frame_in;

    const int cell = cfg_.cell;
    const double padded_area = cfg_.padding * base_w_ * cfg_.padding * base_h_;
    const double shrink = std::min(1.0, std::sqrt(cfg_.max_template_cells * static_cast<double>(cell * cell) / padded_area));
    geom_ = make_geometry(cfg_.padding, base_w_, base_h_, shrink, cell);
    lt_geom_ = make_geometry(cfg_.lt_padding, base_w_, base_h_, shrink, cell);
    window_ = imgproc::cosine_window(geom_.rows(), geom_.cols());
    lt_window_ = imgproc::cosine_window(lt_geom_.rows(), lt_geom_.cols());

    const double sigma = cfg_.sigma_factor * std::sqrt(base_w_ * base_h_) * shrink / cell;
    const spectral::SpectralMap label = spectral::dft(spectral::gaussian_label(geom_.rows(), geom_.cols(), sigma));
    const spectral::SpectralMap lt_label =
        spectral::dft(spectral::gaussian_label(lt_geom_.rows(), lt_geom_.cols(), sigma));

    dcf::CompressedFilter::Params fp;
    fp.lambda = cfg_.lambda;
    fp.eta = cfg_.eta;
    fp.dims = cfg_.dims;
    fp.center = true;

    translation_ = dcf::CompressedFilter(fp, label);
    initial_template_ = sample(frame, cx_, cy_, geom_, window_);
    translation_.train(initial_template_);

    scale_.train(scale::build_scale_pyramid(frame, clipped, scale_));

    long_term_ = memory::LongTermFilter(fp, lt_label, cfg_.t_accept);
    initial_lt_template_ = sample(frame, cx_, cy_, lt_geom_, lt_window_);
    long_term_.train(translation_.projection(), initial_lt_template_);

    svm_ = {};
    svm_.tau = cfg_.svm_tau;
    const redetect::TrainingBatch batch = redetect::sample_batch(frame, clipped);
    for (int e = 0; e < cfg_.svm_init_epochs; ++e) redetect::train(svm_, batch);

    history_ = {};
    gate_cfg_ = {cfg_.gate_r_max, cfg_.gate_quality, cfg_.quality, cfg_.t_redetect, cfg_.t_accept};
    last_report_ = {};
    last_report_.enhanced = enhanced.has_value();
    initialized_ = true;
}

bool Tracker::rematch() {
    const double peak = correlation_peak(long_term_.filter().tmpl(), initial_lt_template_);
    if (peak >= cfg_.t_accept) return false;
    translation_.update_template(initial_template_);
    return true;
}

StepResult Tracker::step(const ImageBuffer& frame_in) {
    if (!initialized_) throw std::logic_error("Tracker::step called before init");
    ++frame_index_;
    memory::ConfidenceReport rep;

    // (1) enhancement gated on the previous box
    const auto enhanced = enhanced_copy(frame_in, box(), cfg_);
    const ImageBuffer& frame = enhanced ? *enhanced : frame_in;
    rep.enhanced = enhanced.has_value();

    // (2) translation
    auto [det, center] = detect_at(frame, cx_, cy_);
    double cx = center.first, cy = center.second;
    rep.r_max = det.r_max;
    rep.apce = memory::apce(det.response);
    rep.csrm = memory::csrm(det.response);

    // (3) long-term confidence
    rep.c_long = long_term_at(frame, cx, cy);
    const bool redetect_needed = rep.c_long < cfg_.t_redetect;

    // (4) re-detection
    bool accepted = false;
    if (redetect_needed) {
        rep.redetect_ran = true;
        const double s = scale_.current_scale();
        const redetect::ScanResult cand = redetect::scan(frame, svm_, base_w_ * s, base_h_ * s);
        rep.candidate_c_long = long_term_at(frame, cand.box.cx(), cand.box.cy());
        accepted = cfg_.redetect_accept == RedetectAccept::kLongTerm ? rep.candidate_c_long >= cfg_.t_accept
                                                                     : cand.score >= 0.0;
        if (accepted) {
            auto [det2, center2] = detect_at(frame, cand.box.cx(), cand.box.cy());
            cx = center2.first;
            cy = center2.second;
            rep.r_max = det2.r_max;
            rep.apce = memory::apce(det2.response);
            rep.csrm = memory::csrm(det2.response);
            rep.c_long = long_term_at(frame, cx, cy);
        }
    }
    rep.redetect_accepted = accepted;
    rep.gates = memory::gate(rep, history_, gate_cfg_);
    rep.gates.redetect_needed = redetect_needed;
    rep.gates.accept_candidate = accepted;
    cx_ = cx;
    cy_ = cy;

    // (5) scale at the final center
    scale::estimate_scale(scale_, scale::build_scale_pyramid(frame, box(), scale_));

    // (6) updates
    const FeatureMap x = sample(frame, cx_, cy_, geom_, window_);
    translation_.update_template(x);
    const bool update_frame = frame_index_ % cfg_.update_interval == 0 && rep.gates.update_ok;
    if (update_frame) {
        translation_.refresh(x);
        scale_.update(scale::build_scale_pyramid(frame, box(), scale_));
        rep.filters_updated = true;
    }
    if (rep.gates.update_ok) history_.add(rep.r_max, memory::quality_of(rep, cfg_.quality));
    long_term_.update(translation_.projection(), sample(frame, cx_, cy_, lt_geom_, lt_window_), rep.c_long);
    const BoundingBox b = box();
    const bool inside = b.x < frame.width && b.y < frame.height && b.x + b.w > 0 && b.y + b.h > 0;
    if (update_frame && rep.c_long >= cfg_.t_accept && inside) {
        redetect::train(svm_, redetect::sample_batch(frame, b));
    }

    // (7) template re-match
    if (cfg_.rematch_interval > 0 && frame_index_ % cfg_.rematch_interval == 0) rep.rematched = rematch();

    last_report_ = rep;
    return {box(), rep};
}

}  // namespace lltrack::tracker
