// Prints one PASS/FAIL line per acceptance criterion. Exit status is nonzero when a
// gating criterion fails; the fast-enhance timing is reported but does not gate.
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lltrack/dcf.hpp"
#include "lltrack/enhance.hpp"
#include "lltrack/eval.hpp"
#include "lltrack/memory.hpp"
#include "lltrack/redetect.hpp"
#include "lltrack/spectral.hpp"
#include "lltrack/synthetic.hpp"
#include "lltrack/tracker.hpp"
#include "test_support.hpp"

using namespace lltrack;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

FeatureMap spatial_filter(const spectral::SpectralMap& A, const RealField& B, double lambda) {
    spectral::SpectralMap F = A;
    for (int c = 0; c < F.channels; ++c) {
        for (std::size_t i = 0; i < F.plane_size(); ++i) F.plane(c)[i] /= B.data[i] + lambda;
    }
    return spectral::idft(F);
}

double spatial_objective(const FeatureMap& f, const FeatureMap& x, const FeatureMap& y, double lambda) {
    const RealField r = testutil::circular_correlation(f, x);
    double e = 0.0;
    for (std::size_t i = 0; i < r.data.size(); ++i) e += (r.data[i] - y.data[i]) * (r.data[i] - y.data[i]);
    for (double v : f.data) e += lambda * v * v;
    return e;
}

Verdict spectral_oracle() {
    std::mt19937 rng(1001);
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const FeatureMap x = testutil::random_map(rng, 16, 16, 3);
        const FeatureMap z = testutil::random_map(rng, 16, 16, 3);
        const auto Y = spectral::dft(spectral::gaussian_label(16, 16, 1.5));
        const dcf::LinearFilterModel m = dcf::train_initial(x, Y, 0.01);
        const ResponseMap fast = spectral::spectral_response(m.numerator, m.denominator, spectral::dft(z), 0.01);
        const RealField slow = testutil::circular_correlation(spatial_filter(m.numerator, m.denominator, 0.01), z);
        worst = std::max(worst, testutil::max_abs_diff(fast.data, slow.data));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-6 && secs < 5.0, "max error " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Verdict filter_optimality() {
    std::mt19937 rng(1002);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double lambda = 0.01;
    int beaten = 0;
    double worst_residual = 0.0;
    for (int s = 0; s < 20; ++s) {
        const FeatureMap x = testutil::random_map(rng, 8, 8, 2);
        const FeatureMap y = spectral::gaussian_label(8, 8, 1.0);
        const auto Y = spectral::dft(y);
        const dcf::LinearFilterModel m = dcf::train_initial(x, Y, lambda);
        const FeatureMap f = spatial_filter(m.numerator, m.denominator, lambda);
        const double best = spatial_objective(f, x, y, lambda);
        for (int k = 0; k < 100; ++k) {
            FeatureMap g = f;
            const double scale = std::pow(10.0, -1.0 - 3.0 * k / 100.0);
            for (double& v : g.data) v += scale * noise(rng);
            if (spatial_objective(g, x, y, lambda) < best) ++beaten;
        }
        const auto X = spectral::dft(x);
        const auto H = dcf::filter_spectrum(m);
        for (std::size_t i = 0; i < X.plane_size(); ++i) {
            for (int l = 0; l < 2; ++l) {
                spectral::Complex lhs = lambda * H.plane(l)[i];
                for (int c = 0; c < 2; ++c) lhs += std::conj(X.plane(l)[i]) * X.plane(c)[i] * H.plane(c)[i];
                worst_residual = std::max(worst_residual, std::abs(lhs - std::conj(X.plane(l)[i]) * Y.plane(0)[i]));
            }
        }
    }
    return {beaten == 0 && worst_residual < 1e-8,
            std::to_string(beaten) + " of 2000 perturbations lower, normal-equation residual " +
                fmt("%.2e", worst_residual)};
}

Verdict pca_contract() {
    std::mt19937 rng(1003);
    double orth = 0.0, full_rank = 0.0, recon = 0.0;
    for (int k = 0; k < 10; ++k) {
        FeatureMap mu = testutil::random_map(rng, 10, 10, 8);
        for (int c = 0; c < 8; ++c) {
            for (std::size_t i = 0; i < mu.plane_size(); ++i) mu.plane(c)[i] *= 1.0 + c;
        }
        const int d = 1 + k % 7;
        const dcf::ProjectionMatrix P = dcf::compute_projection(mu, d);
        Eigen::MatrixXd Pm(P.rows, P.cols);
        for (int i = 0; i < P.rows; ++i) {
            for (int j = 0; j < P.cols; ++j) Pm(i, j) = P.at(i, j);
        }
        orth = std::max(orth, (Pm * Pm.transpose() - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff());

        Eigen::MatrixXd X(mu.plane_size(), 8);
        for (int c = 0; c < 8; ++c) {
            for (std::size_t i = 0; i < mu.plane_size(); ++i) X(i, c) = mu.plane(c)[i];
        }
        X.rowwise() -= X.colwise().mean();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X.transpose() * X);
        const double discarded = eig.eigenvalues().head(8 - d).sum();
        recon = std::max(recon, std::abs((X - X * Pm.transpose() * Pm).squaredNorm() - discarded));

        const FeatureMap z = testutil::random_map(rng, 10, 10, 8);
        const auto label = spectral::dft(spectral::gaussian_label(10, 10, 1.0));
        dcf::CompressedFilter f({0.01, 0.025, 8, true}, label);
        f.train(mu);
        const dcf::Detection ref = dcf::detect_uncompressed(dcf::train_initial(mu, label, 0.01), z);
        full_rank = std::max(full_rank, testutil::max_abs_diff(f.detect(z).response.data, ref.response.data));
    }
    return {orth < 1e-8 && full_rank < 1e-9 && recon < 1e-6,
            "|PP'-I| " + fmt("%.1e", orth) + ", d=D detection " + fmt("%.1e", full_rank) + ", reconstruction " +
                fmt("%.1e", recon)};
}

double naive_peak_energy(const ResponseMap& r, bool squared) {
    double mx = r.at(0, 0), mn = r.at(0, 0);
    for (int i = 0; i < r.rows; ++i) {
        for (int j = 0; j < r.cols; ++j) {
            mx = std::max(mx, r.at(i, j));
            mn = std::min(mn, r.at(i, j));
        }
    }
    if (mx == mn) return 0.0;
    auto lift = [&](double v) { return squared ? v * v : v; };
    double s = 0.0;
    for (int i = 0; i < r.rows; ++i) {
        for (int j = 0; j < r.cols; ++j) s += (lift(r.at(i, j)) - lift(mn)) * (lift(r.at(i, j)) - lift(mn));
    }
    const double peak = lift(mx) - lift(mn);
    return peak * peak / (s / (r.rows * r.cols));
}

Verdict confidence_oracles() {
    std::mt19937 rng(1004);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const ResponseMap r = testutil::random_field(rng, 8, 8, -0.3, 1.0);
        worst = std::max(worst, std::abs(memory::apce(r) - naive_peak_energy(r, false)));
        worst = std::max(worst, std::abs(memory::csrm(r) - naive_peak_energy(r, true)));
    }
    ResponseMap peak(4, 4, 0.0);
    peak.at(1, 2) = 1.0;
    const ResponseMap flat(4, 4, 0.3);
    const bool exact = memory::apce(peak) == 16.0 && memory::csrm(peak) == 16.0 && memory::apce(flat) == 0.0 &&
                       memory::csrm(flat) == 0.0;
    return {worst < 1e-10 && exact,
            "max error " + fmt("%.1e", worst) + ", single peak " + fmt("%g", memory::apce(peak)) + "/" +
                fmt("%g", memory::csrm(peak)) + ", constant " + fmt("%g", memory::apce(flat))};
}

Verdict pa_svm() {
    using namespace redetect;
    SvmVector unit(kSvmDims, 0.0);
    unit[0] = 1.0;
    const SvmVector h = pa_update(SvmVector(kSvmDims, 0.0), unit, 1, 1.0);
    const bool hand = std::abs(h[0] - 2.0 / 3.0) < 1e-15;

    std::mt19937 rng(1005);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int increases = 0;
    for (int k = 0; k < 1000; ++k) {
        SvmVector w(kSvmDims), v(kSvmDims);
        for (int i = 0; i < kSvmDims; ++i) {
            w[i] = u(rng);
            v[i] = 0.1 * u(rng);
        }
        const int c = k % 2 ? 1 : -1;
        if (hinge_loss(pa_update(w, v, c, 1.0), v, c) > hinge_loss(w, v, c)) ++increases;
    }

    // Two separable colour clusters.
    std::uniform_real_distribution<double> p(0.0, 1.0);
    TrainingBatch batch;
    for (int k = 0; k < 40; ++k) {
        features::HistogramVector hist{};
        const int base = k % 2 == 0 ? 0 : 300;
        for (int i = 0; i < 10; ++i) hist[base + i] = p(rng);
        double s = 0.0;
        for (double x : hist) s += x;
        for (double& x : hist) x /= s;
        batch.samples.push_back({augment(hist), k % 2 == 0 ? 1 : -1});
    }
    SvmModel model;
    int zero_at = -1, errors = 0;
    double total = 0.0;
    for (int epoch = 1; epoch <= 100 && zero_at < 0; ++epoch) {
        train(model, batch);
        total = 0.0;
        errors = 0;
        for (const auto& s : batch.samples) {
            total += hinge_loss(model.h, s.v, s.label);
            if (s.label * dot(model.h, s.v) <= 0.0) ++errors;
        }
        if (total == 0.0) zero_at = epoch;
    }
    std::string detail = std::string("hand case ") + (hand ? "2/3" : "wrong") + ", " + std::to_string(increases) +
                         " loss increases in 1000 updates, ";
    if (zero_at > 0) {
        detail += "zero loss at epoch " + std::to_string(zero_at);
    } else {
        detail += "training loss after 100 epochs " + fmt("%.2e", total) + " with " + std::to_string(errors) +
                  " misclassified (exact zero not reached: the step shrinks the loss geometrically)";
    }
    return {hand && increases == 0 && zero_at > 0, detail};
}

Verdict enhancement_solver() {
    std::mt19937 rng(1006);
    enhance::EnhanceConfig cfg;
    cfg.beta = 0.15;
    double worst = 0.0;
    bool monotone = true, beta_zero = true;
    for (int k = 0; k < 10; ++k) {
        const RealField t_hat = testutil::random_field(rng, 8, 8, 0.05, 1.0);
        const enhance::Refinement r = enhance::refine_illumination(t_hat, cfg);
        for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
            monotone = monotone && r.objective_trace[i] <= r.objective_trace[i - 1] * (1.0 + 1e-12);
        }

        // Dense normal equations with independently evaluated weights.
        const int n = 64, r_win = cfg.window / 2;
        auto diff = [&](int y, int x, bool h) {
            y = std::clamp(y, 0, 7);
            x = std::clamp(x, 0, 7);
            if (h) return x + 1 < 8 ? t_hat.at(y, x + 1) - t_hat.at(y, x) : 0.0;
            return y + 1 < 8 ? t_hat.at(y + 1, x) - t_hat.at(y, x) : 0.0;
        };
        auto coeff = [&](int y, int x, bool h) {
            double norm = 0.0, s = 0.0;
            for (int dy = -r_win; dy <= r_win; ++dy) {
                for (int dx = -r_win; dx <= r_win; ++dx) {
                    const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * cfg.sigma * cfg.sigma));
                    norm += g;
                    s += g * diff(y + dy, x + dx, h);
                }
            }
            return cfg.beta / (std::abs(s / norm) + cfg.epsilon) / (std::abs(diff(y, x, h)) + cfg.epsilon);
        };
        Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd b(n);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                const int p = y * 8 + x;
                b(p) = t_hat.at(y, x);
                for (bool h : {true, false}) {
                    const int q = h ? p + 1 : p + 8;
                    if ((h && x + 1 >= 8) || (!h && y + 1 >= 8)) continue;
                    const double a = coeff(y, x, h);
                    M(p, p) += a;
                    M(q, q) += a;
                    M(p, q) -= a;
                    M(q, p) -= a;
                }
            }
        }
        const Eigen::VectorXd ref = M.ldlt().solve(b);
        for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(r.map.data[i] - ref(i)));

        enhance::EnhanceConfig off = cfg;
        off.beta = 0.0;
        beta_zero = beta_zero && enhance::refine_illumination(t_hat, off).map.data == t_hat.data;
    }
    return {worst < 1e-5 && monotone && beta_zero,
            "max deviation from dense solve " + fmt("%.1e", worst) + ", objective " +
                (monotone ? "non-increasing" : "increased") + ", beta=0 " + (beta_zero ? "exact" : "differs")};
}

double worst_center_error(const eval::SequenceResult& r) {
    double w = 0.0;
    for (double e : r.center_errors()) w = std::max(w, e);
    return w;
}

Verdict synthetic_tracking() {
    const tracker::TrackerConfig cfg;
    const eval::SequenceResult tr =
        eval::run_ope(eval::SyntheticSource{synthetic::Sequence(synthetic::Kind::kTranslate)}, cfg);
    const double translate_err = worst_center_error(tr);

    const synthetic::Sequence scale_seq(synthetic::Kind::kScale);
    tracker::Tracker t(cfg);
    t.init(scale_seq.frame(0), scale_seq.truth(0));
    for (int i = 1; i < scale_seq.size(); ++i) t.step(scale_seq.frame(i));
    const double truth = scale_seq.truth(scale_seq.size() - 1).w / scale_seq.truth(0).w;
    const double scale_rel = std::abs(t.current_scale() / truth - 1.0);

    const eval::SyntheticSource dark{synthetic::Sequence(synthetic::Kind::kDarken)};
    const double dark_err = worst_center_error(eval::run_ope(dark, cfg));
    tracker::TrackerConfig off = cfg;
    off.enhance_mode = tracker::EnhanceMode::kOff;
    const double dark_off_err = worst_center_error(eval::run_ope(dark, off));

    return {translate_err <= 3.0 && scale_rel <= 0.05 && dark_err <= 5.0,
            "translate max error " + fmt("%.2f", translate_err) + " px, scale " + fmt("%.4f", t.current_scale()) +
                " vs " + fmt("%.4f", truth) + ", darken max error " + fmt("%.2f", dark_err) +
                " px (enhancement off: " + fmt("%.2f", dark_off_err) + " px, not gated)"};
}

Verdict update_interval_ordering() {
    const std::vector<eval::SyntheticSource> suite{
        eval::SyntheticSource{synthetic::Sequence(synthetic::Kind::kTranslate)},
        eval::SyntheticSource{synthetic::Sequence(synthetic::Kind::kScale)},
        eval::SyntheticSource{synthetic::Sequence(synthetic::Kind::kDarken)}};
    const int intervals[3] = {1, 3, 5};
    double best[3] = {0.0, 0.0, 0.0};
    // Interleaved repetitions; the best of each reduces scheduling noise.
    for (int rep = 0; rep < 2; ++rep) {
        for (int k = 0; k < 3; ++k) {
            tracker::TrackerConfig cfg;
            cfg.update_interval = intervals[k];
            std::vector<eval::SequenceResult> runs;
            for (const auto& src : suite) runs.push_back(eval::run_ope(src, cfg));
            best[k] = std::max(best[k], eval::measure_fps(runs));
        }
    }
    return {best[2] >= best[1] && best[1] >= best[0],
            "FPS N_s=1 " + fmt("%.1f", best[0]) + ", N_s=3 " + fmt("%.1f", best[1]) + ", N_s=5 " +
                fmt("%.1f", best[2])};
}

Verdict metric_arithmetic() {
    const eval::CurveData c = eval::success_from_ious(std::vector<double>(10, 0.5), {0.0, 0.25, 0.5, 0.75, 1.0});
    eval::SequenceResult echo;
    for (int i = 0; i < 50; ++i) {
        const BoundingBox b{10.0 + 2 * i, 30.0, 25.0, 35.0};
        echo.truth.push_back(b);
        echo.predicted.push_back(b);
    }
    const double dp = eval::precision_curve(echo).summary;
    return {c.summary == 0.4 && dp == 1.0, "AUC " + fmt("%.17g", c.summary) + ", echo DP@20 " + fmt("%g", dp)};
}

Verdict fast_enhance_speed() {
    std::mt19937 rng(1010);
    ImageBuffer img = testutil::random_image(rng, 240, 320);
    for (double& v : img.data) v *= 0.1;
    const BoundingBox bb{140, 100, 40, 40};
    const enhance::EnhanceConfig cfg;
    double best = 1e300;
    for (int k = 0; k < 20; ++k) {
        const auto t0 = Clock::now();
        const ImageBuffer out = enhance::fast_enhance(img, bb, cfg);
        best = std::min(best, seconds_since(t0));
        if (out.data[0] < img.data[0]) return {false, "output darker than input"};
    }
    return {best < 0.010, fmt("%.3f", best * 1e3) + " ms per 320x240 frame (best of 20)"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Verdict()> check;
        bool gating;
    };
    const std::vector<Criterion> criteria{
        {"spectral response matches brute-force correlation", spectral_oracle, true},
        {"filter optimality", filter_optimality, true},
        {"PCA contract", pca_contract, true},
        {"confidence oracles", confidence_oracles, true},
        {"PA-SVM", pa_svm, true},
        {"enhancement solver", enhancement_solver, true},
        {"synthetic tracking", synthetic_tracking, true},
        {"update-interval FPS ordering", update_interval_ordering, true},
        {"metric arithmetic", metric_arithmetic, true},
        {"fast-enhance real time (soft)", fast_enhance_speed, false},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass && criteria[i].gating) ++failed;
        std::printf("criterion %zu: %s - %s: %s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].name,
                    v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d gating criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
