#pragma once

#include <string>

#include "lltrack/dcf.hpp"
#include "lltrack/types.hpp"

namespace lltrack::memory {

/// Average peak-to-correlation energy: |Rmax - Rmin|^2 / mean((R - Rmin)^2); 0 for flat maps.
double apce(const ResponseMap& r);

/// Squared-response analogue: |Rmax^2 - Rmin^2|^2 / mean((R^2 - Rmin^2)^2), with Rmax and
/// Rmin taken over R; 0 for flat maps.
double csrm(const ResponseMap& r);

enum class QualityMetric { kApce, kCsrm };

QualityMetric parse_quality_metric(const std::string& s);
std::string to_string(QualityMetric m);

struct Gates {
    bool update_ok = true;
    bool redetect_needed = false;
    bool accept_candidate = false;
};

struct ConfidenceReport {
    double r_max = 0.0;
    double apce = 0.0;
    double csrm = 0.0;
    double c_long = 0.0;
    double candidate_c_long = 0.0;  // only meaningful when re-detection ran
    bool redetect_ran = false;
    bool redetect_accepted = false;
    bool enhanced = false;
    bool filters_updated = false;  // translation and scale filters re-solved this frame
    bool rematched = false;        // initial template blended back in
    Gates gates;
};

/// Running means of r_max and the quality metric over frames that passed the update gate.
class ConfidenceHistory {
public:
    void add(double r_max, double quality);
    int count() const { return count_; }
    double mean_r_max() const { return count_ ? sum_r_max_ / count_ : 0.0; }
    double mean_quality() const { return count_ ? sum_quality_ / count_ : 0.0; }

private:
    int count_ = 0;
    double sum_r_max_ = 0.0;
    double sum_quality_ = 0.0;
};

struct GateConfig {
    double r_max_factor = 0.9;
    double quality_factor = 0.75;
    QualityMetric quality = QualityMetric::kApce;
    double t_redetect = 0.2;  // T_r
    double t_accept = 0.4;    // T_a
};

inline double quality_of(const ConfidenceReport& r, QualityMetric m) {
    return m == QualityMetric::kApce ? r.apce : r.csrm;
}

/// update_ok passes by default on an empty history. accept_candidate reads
/// report.candidate_c_long.
Gates gate(const ConfidenceReport& report, const ConfidenceHistory& hist, const GateConfig& cfg);

/// Conservatively updated target-only filter whose peak response is the tracking confidence.
class LongTermFilter {
public:
    LongTermFilter() = default;
    LongTermFilter(const dcf::CompressedFilter::Params& params, spectral::SpectralMap label, double t_accept)
        : filter_(params, std::move(label)), t_accept_(t_accept) {}

    /// Trains on x compressed with P.
    void train(const dcf::ProjectionMatrix& P, const FeatureMap& x);

    /// Applies the running update when c_long >= T_a; returns whether it did.
    bool update(const dcf::ProjectionMatrix& P, const FeatureMap& x, double c_long);

    bool trained() const { return filter_.trained(); }
    const dcf::CompressedFilter& filter() const { return filter_; }
    double t_accept() const { return t_accept_; }

private:
    dcf::CompressedFilter filter_;
    double t_accept_ = 0.4;
};

/// Peak of the long-term filter response on z.
double long_term_confidence(const LongTermFilter& f, const FeatureMap& z);

/// Functional form of LongTermFilter::update.
LongTermFilter update_long_term(const LongTermFilter& f, const dcf::ProjectionMatrix& P, const FeatureMap& x,
                                double c_long);

}  // namespace lltrack::memory
