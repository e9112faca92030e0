#include "lltrack/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "lltrack/imgproc.hpp"

namespace lltrack::enhance {

void EnhanceConfig::validate() const {
    if (!(k > 0.0)) throw ConfigError("enhance: k must be positive");
    if (!(t_l >= 0.0 && t_l <= 255.0)) throw ConfigError("enhance: T_L must lie in [0, 255]");
    if (iterations < 1) throw ConfigError("enhance: iterations must be >= 1");
    if (!(beta >= 0.0)) throw ConfigError("enhance: beta must be non-negative");
    if (!(epsilon > 0.0)) throw ConfigError("enhance: epsilon must be positive");
    if (!(sigma > 0.0)) throw ConfigError("enhance: sigma must be positive");
    if (window < 1 || window % 2 == 0) throw ConfigError("enhance: window must be odd and positive");
}

bool should_enhance(const ImageBuffer& img, const BoundingBox& bb, const EnhanceConfig& cfg) {
    return imgproc::mean_luminance(img, bb) < cfg.t_l;
}

double exposure_gain(double box_luminance, const EnhanceConfig& cfg) {
    const double g = cfg.k * (128.0 / 255.0) / std::max(box_luminance / 255.0, cfg.epsilon);
    return std::clamp(g, 1.0, 8.0);
}

ImageBuffer fast_enhance(const ImageBuffer& img, const BoundingBox& bb, const EnhanceConfig& cfg) {
    ImageBuffer out = img;
    for (int it = 0; it < cfg.iterations; ++it) {
        const double g = exposure_gain(imgproc::mean_luminance(out, bb), cfg);
        if (g == 1.0) break;
        for (double& v : out.data) v = std::min(1.0, g * v);
    }
    return out;
}

IlluminationMap initial_illumination(const ImageBuffer& img) {
    IlluminationMap t(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double m = img.at(y, x, 0);
            for (int c = 1; c < img.channels; ++c) m = std::max(m, img.at(y, x, c));
            t.at(y, x) = m;
        }
    }
    return t;
}

RealField gradient_h(const RealField& t) {
    RealField g(t.rows, t.cols);
    for (int y = 0; y < t.rows; ++y) {
        for (int x = 0; x + 1 < t.cols; ++x) g.at(y, x) = t.at(y, x + 1) - t.at(y, x);
    }
    return g;
}

RealField gradient_v(const RealField& t) {
    RealField g(t.rows, t.cols);
    for (int y = 0; y + 1 < t.rows; ++y) {
        for (int x = 0; x < t.cols; ++x) g.at(y, x) = t.at(y + 1, x) - t.at(y, x);
    }
    return g;
}

namespace {

std::vector<double> gaussian_kernel(int side, double sigma) {
    const int r = side / 2;
    std::vector<double> k(static_cast<std::size_t>(side) * side);
    double sum = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            k[static_cast<std::size_t>(dy + r) * side + dx + r] = v;
            sum += v;
        }
    }
    for (double& v : k) v /= sum;
    return k;
}

// |G * grad| over the window with replicated borders, then 1 / (. + eps).
RealField inverse_smoothed(const RealField& grad, const std::vector<double>& kernel, int side, double eps) {
    const int r = side / 2;
    RealField w(grad.rows, grad.cols);
    for (int y = 0; y < grad.rows; ++y) {
        for (int x = 0; x < grad.cols; ++x) {
            double s = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = std::clamp(y + dy, 0, grad.rows - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = std::clamp(x + dx, 0, grad.cols - 1);
                    s += kernel[static_cast<std::size_t>(dy + r) * side + dx + r] * grad.at(yy, xx);
                }
            }
            w.at(y, x) = 1.0 / (std::abs(s) + eps);
        }
    }
    return w;
}

// y = (I + Dh' Ah Dh + Dv' Av Dv) t
void apply_system(const RealField& t, const WeightField& a, RealField& y) {
    const int H = t.rows, W = t.cols;
    y.data = t.data;
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c + 1 < W; ++c) {
            const double f = a.horizontal.at(r, c) * (t.at(r, c + 1) - t.at(r, c));
            y.at(r, c) -= f;
            y.at(r, c + 1) += f;
        }
    }
    for (int r = 0; r + 1 < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const double f = a.vertical.at(r, c) * (t.at(r + 1, c) - t.at(r, c));
            y.at(r, c) -= f;
            y.at(r + 1, c) += f;
        }
    }
}

RealField system_diagonal(const WeightField& a) {
    const int H = a.horizontal.rows, W = a.horizontal.cols;
    RealField d(H, W, 1.0);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c + 1 < W; ++c) {
            d.at(r, c) += a.horizontal.at(r, c);
            d.at(r, c + 1) += a.horizontal.at(r, c);
        }
    }
    for (int r = 0; r + 1 < H; ++r) {
        for (int c = 0; c < W; ++c) {
            d.at(r, c) += a.vertical.at(r, c);
            d.at(r + 1, c) += a.vertical.at(r, c);
        }
    }
    return d;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

WeightField build_weights(const IlluminationMap& t_hat, const EnhanceConfig& cfg) {
    const auto kernel = gaussian_kernel(cfg.window, cfg.sigma);
    return {inverse_smoothed(gradient_h(t_hat), kernel, cfg.window, cfg.epsilon),
            inverse_smoothed(gradient_v(t_hat), kernel, cfg.window, cfg.epsilon)};
}

WeightField smoothness_coefficients(const IlluminationMap& t_hat, const EnhanceConfig& cfg) {
    WeightField w = build_weights(t_hat, cfg);
    const RealField gh = gradient_h(t_hat);
    const RealField gv = gradient_v(t_hat);
    for (std::size_t i = 0; i < gh.data.size(); ++i) {
        w.horizontal.data[i] *= cfg.beta / (std::abs(gh.data[i]) + cfg.epsilon);
        w.vertical.data[i] *= cfg.beta / (std::abs(gv.data[i]) + cfg.epsilon);
    }
    return w;
}

double refinement_objective(const IlluminationMap& t, const IlluminationMap& t_hat, const WeightField& coeff) {
    double f = 0.0;
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        const double d = t_hat.data[i] - t.data[i];
        f += d * d;
    }
    const RealField gh = gradient_h(t);
    const RealField gv = gradient_v(t);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        f += coeff.horizontal.data[i] * gh.data[i] * gh.data[i] + coeff.vertical.data[i] * gv.data[i] * gv.data[i];
    }
    return f;
}

Refinement refine_illumination(const IlluminationMap& t_hat, const EnhanceConfig& cfg) {
    if (!(cfg.beta >= 0.0)) throw std::invalid_argument("refine_illumination: beta must be non-negative");
    constexpr int kMaxIterations = 1000;
    constexpr double kRelativeResidual = 1e-6;

    Refinement out;
    out.map = t_hat;
    const WeightField a = smoothness_coefficients(t_hat, cfg);
    out.objective_trace.push_back(refinement_objective(out.map, t_hat, a));

    if (cfg.beta > 0.0) {
        const RealField diag = system_diagonal(a);
        RealField& x = out.map;
        RealField ax(x.rows, x.cols);
        apply_system(x, a, ax);
        std::vector<double> r(x.data.size()), z(r.size()), p(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = t_hat.data[i] - ax.data[i];
        const double rhs_norm = std::sqrt(dot(t_hat.data, t_hat.data));
        const double stop = kRelativeResidual * (rhs_norm > 0.0 ? rhs_norm : 1.0);
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / diag.data[i];
        p = z;
        double rz = dot(r, z);
        RealField pf(x.rows, x.cols), ap(x.rows, x.cols);

        out.converged = std::sqrt(dot(r, r)) < stop;
        while (!out.converged && out.iterations < kMaxIterations) {
            pf.data = p;
            apply_system(pf, a, ap);
            const double alpha = rz / dot(p, ap.data);
            for (std::size_t i = 0; i < r.size(); ++i) {
                x.data[i] += alpha * p[i];
                r[i] -= alpha * ap.data[i];
            }
            ++out.iterations;
            out.objective_trace.push_back(refinement_objective(x, t_hat, a));
            if (std::sqrt(dot(r, r)) < stop) {
                out.converged = true;
                break;
            }
            for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / diag.data[i];
            const double rz_next = dot(r, z);
            const double b = rz_next / rz;
            rz = rz_next;
            for (std::size_t i = 0; i < r.size(); ++i) p[i] = z[i] + b * p[i];
        }
        if (!out.converged) {
            spdlog::warn("refine_illumination: no convergence after {} iterations", out.iterations);
        }
    }

    for (double& v : out.map.data) v = std::clamp(v, cfg.epsilon, 1.0);
    return out;
}

ImageBuffer recover(const ImageBuffer& img, const IlluminationMap& t, const EnhanceConfig& cfg) {
    if (t.rows != img.height || t.cols != img.width) throw std::invalid_argument("recover: grid mismatch");
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double denom = std::max(t.at(y, x), 0.0) + cfg.epsilon;
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = std::clamp(img.at(y, x, c) / denom, 0.0, 1.0);
        }
    }
    return out;
}

ImageBuffer recover_inverted(const ImageBuffer& img, const EnhanceConfig& cfg) {
    const double a = cfg.alpha;
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("recover_inverted: alpha must lie in (0, 1]");
    const IlluminationMap m = initial_illumination(img);
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double t = 1.0 - 1.0 / a + m.at(y, x) / a;
            const double denom = std::max(t, 0.0) + cfg.epsilon;
            for (int c = 0; c < img.channels; ++c) {
                const double r = (img.at(y, x, c) - 1.0 + a) / denom + (1.0 - a);
                out.at(y, x, c) = std::clamp(r, 0.0, 1.0);
            }
        }
    }
    return out;
}

ImageBuffer lime(const ImageBuffer& img, const EnhanceConfig& cfg) {
    const Refinement ref = refine_illumination(initial_illumination(img), cfg);
    return recover(img, ref.map, cfg);
}

}  // namespace lltrack::enhance
