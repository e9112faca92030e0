#include "lltrack/dcf.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace lltrack::dcf {

using spectral::Complex;

ProjectionMatrix ProjectionMatrix::identity(int D) {
    ProjectionMatrix P{D, D, std::vector<double>(static_cast<std::size_t>(D) * D, 0.0)};
    for (int i = 0; i < D; ++i) P.at(i, i) = 1.0;
    return P;
}

LinearFilterModel train_initial(const FeatureMap& x, const SpectralMap& Y, double lambda, double eta) {
    if (lambda <= 0.0) throw std::invalid_argument("train_initial: lambda must be positive");
    if (Y.rows != x.rows || Y.cols != x.cols || Y.channels != 1) {
        throw std::invalid_argument("train_initial: label grid mismatch");
    }
    LinearFilterModel m;
    m.lambda = lambda;
    m.eta = eta;
    m.label = Y;
    m.tmpl = x;
    SpectralMap X = spectral::dft(x);
    m.denominator = spectral::power_sum(X);
    const std::size_t n = X.plane_size();
    const Complex* y = Y.plane(0);
    for (int c = 0; c < X.channels; ++c) {
        Complex* p = X.plane(c);
        for (std::size_t i = 0; i < n; ++i) p[i] = std::conj(y[i]) * p[i];
    }
    m.numerator = std::move(X);
    return m;
}

LinearFilterModel update_model(const LinearFilterModel& model, const FeatureMap& x) {
    if (!x.same_grid(model.tmpl) || x.channels != model.numerator.channels) {
        throw std::invalid_argument("update_model: grid mismatch");
    }
    const double eta = model.eta;
    LinearFilterModel m = model;
    const SpectralMap X = spectral::dft(x);
    const RealField P = spectral::power_sum(X);
    const std::size_t n = X.plane_size();
    const Complex* y = m.label.plane(0);
    for (int c = 0; c < X.channels; ++c) {
        Complex* a = m.numerator.plane(c);
        const Complex* xc = X.plane(c);
        for (std::size_t i = 0; i < n; ++i) a[i] = (1.0 - eta) * a[i] + eta * std::conj(y[i]) * xc[i];
    }
    for (std::size_t i = 0; i < n; ++i) m.denominator.data[i] = (1.0 - eta) * m.denominator.data[i] + eta * P.data[i];
    for (std::size_t i = 0; i < m.tmpl.data.size(); ++i) m.tmpl.data[i] = (1.0 - eta) * m.tmpl.data[i] + eta * x.data[i];
    return m;
}

SpectralMap filter_spectrum(const LinearFilterModel& model) {
    SpectralMap H = model.numerator;
    const std::size_t n = H.plane_size();
    for (int c = 0; c < H.channels; ++c) {
        Complex* h = H.plane(c);
        for (std::size_t i = 0; i < n; ++i) h[i] = std::conj(h[i]) / (model.denominator.data[i] + model.lambda);
    }
    return H;
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

namespace {

using Eigen::MatrixXd;

MatrixXd orthonormal_columns(const MatrixXd& Z) {
    Eigen::HouseholderQR<MatrixXd> qr(Z);
    return qr.householderQ() * MatrixXd::Identity(Z.rows(), Z.cols());
}

// Top-k invariant subspace of the symmetric PSD matrix S by subspace iteration,
// rotated so columns are Ritz vectors in decreasing order.
MatrixXd top_subspace(const MatrixXd& S, int k, const MatrixXd* warm, int max_iter, double tol) {
    const int n = static_cast<int>(S.rows());
    MatrixXd Q;
    if (warm && warm->rows() == n && warm->cols() == k) {
        Q = orthonormal_columns(*warm);
    } else {
        std::mt19937 rng(7);
        std::normal_distribution<double> g;
        MatrixXd Z(n, k);
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < n; ++i) Z(i, j) = g(rng);
        Q = orthonormal_columns(Z);
    }
    // Stop on the invariant-subspace residual |S Q - Q (Q'S Q)|, which is linear in the
    // subspace angle (the trace is only quadratic in it).
    const double scale = std::max(S.trace(), 1e-300);
    for (int it = 0; it < max_iter; ++it) {
        const MatrixXd Z = S * Q;
        if (Z.norm() <= 1e-300) break;  // S == 0: any basis is principal
        if ((Z - Q * (Q.transpose() * Z)).norm() <= tol * scale) break;
        Q = orthonormal_columns(Z);
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> ritz(Q.transpose() * S * Q);
    MatrixXd V = ritz.eigenvectors().rowwise().reverse();
    return orthonormal_columns(Q * V);
}

}  // namespace

ProjectionMatrix compute_projection(const FeatureMap& mu, int d, const ProjectionOptions& opts) {
    const int D = mu.channels;
    const int N = static_cast<int>(mu.plane_size());
    if (d < 1 || d > D) throw std::invalid_argument("compute_projection: need 1 <= d <= D");

    Eigen::Map<const MatrixXd> X(mu.data.data(), N, D);  // channel planes are columns
    MatrixXd Xc = X;
    if (opts.center) Xc.rowwise() -= X.colwise().mean();

    MatrixXd basis;  // D x d
    if (D <= N) {
        const MatrixXd C = (Xc.transpose() * Xc) / static_cast<double>(N);
        MatrixXd warm;
        if (opts.warm_start && opts.warm_start->rows == d && opts.warm_start->cols == D) {
            warm = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                       opts.warm_start->data.data(), d, D)
                       .transpose();
        }
        basis = top_subspace(C, d, warm.size() ? &warm : nullptr, opts.max_iterations, opts.tolerance);
    } else {
        // Fewer observations than variables: work with the N x N Gram matrix and map back.
        const int k = std::min(d, N);
        const MatrixXd G = (Xc * Xc.transpose()) / static_cast<double>(N);
        const MatrixXd U = top_subspace(G, k, nullptr, opts.max_iterations, opts.tolerance);
        MatrixXd V = Xc.transpose() * U;  // D x k, columns ordered by variance
        // Drop numerically null directions, then complete to d orthonormal columns.
        const double ref = V.colwise().norm().maxCoeff();
        int keep = 0;
        for (int j = 0; j < k; ++j) {
            if (V.col(j).norm() > 1e-10 * std::max(ref, 1e-300)) V.col(keep++) = V.col(j);
        }
        MatrixXd Z(D, d);
        Z.leftCols(keep) = V.leftCols(keep);
        std::mt19937 rng(11);
        std::normal_distribution<double> g;
        for (int j = keep; j < d; ++j)
            for (int i = 0; i < D; ++i) Z(i, j) = g(rng);
        basis = orthonormal_columns(Z);
        // Householder QR may flip signs but keeps the span of the leading columns.
    }

    ProjectionMatrix P{d, D, std::vector<double>(static_cast<std::size_t>(d) * D)};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < D; ++j) P.at(i, j) = basis(j, i);
    return P;
}

FeatureMap project(const ProjectionMatrix& P, const FeatureMap& x) {
    if (P.cols != x.channels) throw std::invalid_argument("project: projection dimension mismatch");
    const int N = static_cast<int>(x.plane_size());
    FeatureMap out(x.rows, x.cols, P.rows);
    Eigen::Map<const MatrixXd> X(x.data.data(), N, x.channels);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Pm(P.data.data(), P.rows,
                                                                                                 P.cols);
    Eigen::Map<MatrixXd> Y(out.data.data(), N, P.rows);
    Y.noalias() = X * Pm.transpose();
    return out;
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

namespace {

double parabola_offset(double left, double center, double right) {
    const double denom = left - 2.0 * center + right;
    if (denom >= 0.0) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace

Peak find_peak(const ResponseMap& r) {
    Peak p;
    p.value = r.data.empty() ? 0.0 : r.data[0];
    for (int i = 0; i < r.rows; ++i) {
        for (int j = 0; j < r.cols; ++j) {
            if (r.at(i, j) > p.value) {
                p.value = r.at(i, j);
                p.row = i;
                p.col = j;
            }
        }
    }
    double sub_r = 0.0, sub_c = 0.0;
    if (r.rows > 2) {
        sub_r = parabola_offset(r.at((p.row + r.rows - 1) % r.rows, p.col), p.value, r.at((p.row + 1) % r.rows, p.col));
    }
    if (r.cols > 2) {
        sub_c = parabola_offset(r.at(p.row, (p.col + r.cols - 1) % r.cols), p.value, r.at(p.row, (p.col + 1) % r.cols));
    }
    p.dy = spectral::wrap_offset(p.row, r.rows) + sub_r;
    p.dx = spectral::wrap_offset(p.col, r.cols) + sub_c;
    return p;
}

Detection detect_uncompressed(const LinearFilterModel& model, const FeatureMap& z) {
    if (!model.trained()) throw std::invalid_argument("detect: untrained model");
    if (z.channels != model.numerator.channels) throw std::invalid_argument("detect: channel mismatch");
    Detection d;
    d.response = spectral::spectral_response(model.numerator, model.denominator, spectral::dft(z), model.lambda);
    d.peak = find_peak(d.response);
    d.r_max = d.peak.value;
    return d;
}

Detection detect(const LinearFilterModel& model, const ProjectionMatrix& P, const FeatureMap& z) {
    if (P.cols != z.channels || P.rows != model.numerator.channels) {
        throw std::invalid_argument("detect: projection dimension mismatch");
    }
    return detect_uncompressed(model, project(P, z));
}

// ---------------------------------------------------------------------------
// CompressedFilter
// ---------------------------------------------------------------------------

void CompressedFilter::solve(const ProjectionMatrix& P, const FeatureMap& x, bool first) {
    // numerator from the projected template, denominator from the projected sample
    const LinearFilterModel from_template = train_initial(project(P, model_.tmpl), label_, params_.lambda, params_.eta);
    const SpectralMap Xs = spectral::dft(project(P, x));
    const RealField sample_power = spectral::power_sum(Xs);
    model_.numerator = from_template.numerator;
    model_.label = label_;
    model_.lambda = params_.lambda;
    model_.eta = params_.eta;
    if (first) {
        model_.denominator = sample_power;
    } else {
        const double eta = params_.eta;
        for (std::size_t i = 0; i < sample_power.data.size(); ++i) {
            model_.denominator.data[i] = (1.0 - eta) * model_.denominator.data[i] + eta * sample_power.data[i];
        }
    }
    projection_ = P;
}

void CompressedFilter::train(const FeatureMap& x) {
    model_.tmpl = x;
    const int d = std::min(params_.dims, x.channels);
    ProjectionOptions opts;
    opts.center = params_.center;
    solve(compute_projection(x, d, opts), x, true);
}

void CompressedFilter::update_template(const FeatureMap& x) {
    if (!x.same_grid(model_.tmpl) || x.channels != model_.tmpl.channels) {
        throw std::invalid_argument("update_template: grid mismatch");
    }
    const double eta = params_.eta;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        model_.tmpl.data[i] = (1.0 - eta) * model_.tmpl.data[i] + eta * x.data[i];
    }
}

void CompressedFilter::refresh(const FeatureMap& x) {
    ProjectionOptions opts;
    opts.center = params_.center;
    opts.warm_start = &projection_;
    opts.tolerance = 1e-10;
    solve(compute_projection(model_.tmpl, projection_.rows, opts), x, false);
}

void CompressedFilter::refresh_with(const ProjectionMatrix& P, const FeatureMap& x) {
    solve(P, x, !model_.trained());
}

Detection CompressedFilter::detect(const FeatureMap& z) const {
    return dcf::detect(model_, projection_, z);
}

}  // namespace lltrack::dcf
