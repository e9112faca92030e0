#include "lltrack/spectral.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

#include <fftw3.h>

namespace lltrack::spectral {

namespace {

// The FFTW planner is not re-entrant; plan execution with the new-array API is.
std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
}

class Plan2d {
public:
    Plan2d(int m, int n) : size_(static_cast<std::size_t>(m) * n) {
        in_ = fftw_alloc_complex(size_);
        out_ = fftw_alloc_complex(size_);
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_2d(m, n, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_2d(m, n, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Plan2d() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(in_);
        fftw_free(out_);
    }
    Plan2d(const Plan2d&) = delete;
    Plan2d& operator=(const Plan2d&) = delete;

    Complex* in() { return reinterpret_cast<Complex*>(in_); }
    const Complex* out() const { return reinterpret_cast<const Complex*>(out_); }
    void forward() { fftw_execute(forward_); }
    void backward() { fftw_execute(backward_); }
    std::size_t size() const { return size_; }

private:
    std::size_t size_;
    fftw_complex* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

// Plans and scratch buffers are owned per thread.
Plan2d& plan_for(int m, int n) {
    thread_local std::map<std::pair<int, int>, std::unique_ptr<Plan2d>> plans;
    auto& p = plans[{m, n}];
    if (!p) p = std::make_unique<Plan2d>(m, n);
    return *p;
}

thread_local double g_last_residue = 0.0;

}  // namespace

SpectralMap dft(const FeatureMap& x) {
    SpectralMap X(x.rows, x.cols, x.channels);
    if (x.data.empty()) return X;
    Plan2d& plan = plan_for(x.rows, x.cols);
    const std::size_t n = plan.size();
    for (int c = 0; c < x.channels; ++c) {
        const double* src = x.plane(c);
        Complex* in = plan.in();
        for (std::size_t i = 0; i < n; ++i) in[i] = Complex(src[i], 0.0);
        plan.forward();
        std::memcpy(static_cast<void*>(X.plane(c)), plan.out(), n * sizeof(Complex));
    }
    return X;
}

SpectralMap idft_complex(const SpectralMap& X) {
    SpectralMap x(X.rows, X.cols, X.channels);
    if (X.data.empty()) return x;
    Plan2d& plan = plan_for(X.rows, X.cols);
    const std::size_t n = plan.size();
    const double scale = 1.0 / static_cast<double>(n);
    for (int c = 0; c < X.channels; ++c) {
        std::memcpy(static_cast<void*>(plan.in()), X.plane(c), n * sizeof(Complex));
        plan.backward();
        const Complex* out = plan.out();
        Complex* dst = x.plane(c);
        for (std::size_t i = 0; i < n; ++i) dst[i] = out[i] * scale;
    }
    return x;
}

FeatureMap idft(const SpectralMap& X) {
    const SpectralMap z = idft_complex(X);
    FeatureMap x(X.rows, X.cols, X.channels);
    double residue = 0.0;
    for (std::size_t i = 0; i < z.data.size(); ++i) {
        x.data[i] = z.data[i].real();
        residue = std::max(residue, std::abs(z.data[i].imag()));
    }
    g_last_residue = residue;
    return x;
}

double last_imaginary_residue() { return g_last_residue; }

FeatureMap gaussian_label(int m, int n, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_label: sigma must be positive");
    FeatureMap y(m, n, 1);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int r = 0; r < m; ++r) {
        const double du = wrap_offset(r, m);
        for (int c = 0; c < n; ++c) {
            const double dv = wrap_offset(c, n);
            y.at(0, r, c) = std::exp(-(du * du + dv * dv) * inv);
        }
    }
    return y;
}

RealField power_sum(const SpectralMap& X) {
    RealField B(X.rows, X.cols);
    const std::size_t n = X.plane_size();
    for (int c = 0; c < X.channels; ++c) {
        const Complex* p = X.plane(c);
        for (std::size_t i = 0; i < n; ++i) B.data[i] += std::norm(p[i]);
    }
    return B;
}

ResponseMap spectral_response(const SpectralMap& A, const RealField& B, const SpectralMap& Z, double lambda) {
    if (A.rows != Z.rows || A.cols != Z.cols || A.channels != Z.channels || B.rows != A.rows || B.cols != A.cols) {
        throw std::invalid_argument("spectral_response: grid mismatch");
    }
    if (lambda <= 0.0) throw std::invalid_argument("spectral_response: lambda must be positive");
    const std::size_t n = A.plane_size();
    SpectralMap num(A.rows, A.cols, 1);
    Complex* acc = num.plane(0);
    for (int c = 0; c < A.channels; ++c) {
        const Complex* a = A.plane(c);
        const Complex* z = Z.plane(c);
        for (std::size_t i = 0; i < n; ++i) acc[i] += std::conj(a[i]) * z[i];
    }
    for (std::size_t i = 0; i < n; ++i) acc[i] /= (B.data[i] + lambda);
    const FeatureMap y = idft(num);
    ResponseMap r(A.rows, A.cols);
    r.data = y.data;
    return r;
}

}  // namespace lltrack::spectral
