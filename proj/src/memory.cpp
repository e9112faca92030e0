#include "lltrack/memory.hpp"

#include <algorithm>
#include <stdexcept>

namespace lltrack::memory {

namespace {

// |num_peak|^2 / mean((v - floor)^2) over a transformed map; 0 when degenerate.
template <typename F>
double peak_energy_ratio(const ResponseMap& r, F transform) {
    if (r.data.empty()) return 0.0;
    const auto [mn_it, mx_it] = std::minmax_element(r.data.begin(), r.data.end());
    const double lo = transform(*mn_it);
    const double hi = transform(*mx_it);
    double energy = 0.0;
    for (double v : r.data) {
        const double d = transform(v) - lo;
        energy += d * d;
    }
    energy /= static_cast<double>(r.data.size());
    if (*mx_it == *mn_it || energy <= 0.0) return 0.0;
    const double peak = hi - lo;
    return peak * peak / energy;
}

}  // namespace

double apce(const ResponseMap& r) {
    return peak_energy_ratio(r, [](double v) { return v; });
}

double csrm(const ResponseMap& r) {
    return peak_energy_ratio(r, [](double v) { return v * v; });
}

QualityMetric parse_quality_metric(const std::string& s) {
    if (s == "apce") return QualityMetric::kApce;
    if (s == "csrm") return QualityMetric::kCsrm;
    throw ConfigError("unknown quality metric '" + s + "' (expected apce or csrm)");
}

std::string to_string(QualityMetric m) { return m == QualityMetric::kApce ? "apce" : "csrm"; }

void ConfidenceHistory::add(double r_max, double quality) {
    ++count_;
    sum_r_max_ += r_max;
    sum_quality_ += quality;
}

Gates gate(const ConfidenceReport& report, const ConfidenceHistory& hist, const GateConfig& cfg) {
    Gates g;
    if (hist.count() > 0) {
        g.update_ok = report.r_max >= cfg.r_max_factor * hist.mean_r_max() &&
                      quality_of(report, cfg.quality) >= cfg.quality_factor * hist.mean_quality();
    }
    g.redetect_needed = report.c_long < cfg.t_redetect;
    g.accept_candidate = report.candidate_c_long >= cfg.t_accept;
    return g;
}

void LongTermFilter::train(const dcf::ProjectionMatrix& P, const FeatureMap& x) {
    filter_.reset();
    filter_.set_template(x);
    filter_.refresh_with(P, x);
}

bool LongTermFilter::update(const dcf::ProjectionMatrix& P, const FeatureMap& x, double c_long) {
    if (c_long < t_accept_) return false;
    filter_.update_template(x);
    filter_.refresh_with(P, x);
    return true;
}

double long_term_confidence(const LongTermFilter& f, const FeatureMap& z) {
    if (!f.trained()) throw std::invalid_argument("long_term_confidence: untrained filter");
    return f.filter().detect(z).r_max;
}

LongTermFilter update_long_term(const LongTermFilter& f, const dcf::ProjectionMatrix& P, const FeatureMap& x,
                                double c_long) {
    LongTermFilter out = f;
    out.update(P, x, c_long);
    return out;
}

}  // namespace lltrack::memory
