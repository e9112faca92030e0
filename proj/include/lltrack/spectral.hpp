#pragma once

#include <complex>
#include <vector>

#include "lltrack/types.hpp"

namespace lltrack::spectral {

using Complex = std::complex<double>;

/// Complex m x n x d grid, channel-planar like FeatureMap.
struct SpectralMap {
    int rows = 0;
    int cols = 0;
    int channels = 0;
    std::vector<Complex> data;

    SpectralMap() = default;
    SpectralMap(int m, int n, int d) : rows(m), cols(n), channels(d), data(static_cast<std::size_t>(m) * n * d) {}

    std::size_t plane_size() const { return static_cast<std::size_t>(rows) * cols; }
    Complex* plane(int c) { return data.data() + c * plane_size(); }
    const Complex* plane(int c) const { return data.data() + c * plane_size(); }
    Complex& at(int c, int r, int col) { return data[c * plane_size() + static_cast<std::size_t>(r) * cols + col]; }
    Complex at(int c, int r, int col) const { return data[c * plane_size() + static_cast<std::size_t>(r) * cols + col]; }
};

/// Unnormalized forward DFT of every channel.
SpectralMap dft(const FeatureMap& x);

/// Inverse DFT (scaled by 1/(mn)) keeping the real part.
FeatureMap idft(const SpectralMap& X);

/// Inverse DFT returning the complex result (no real-part projection).
SpectralMap idft_complex(const SpectralMap& X);

/// Largest |imag| seen by the last idft call on this thread. Conjugate-symmetric
/// spectra leave only rounding residue here.
double last_imaginary_residue();

/// Gaussian regression target with its peak moved to index (0, 0).
FeatureMap gaussian_label(int m, int n, double sigma);

/// Signed circular offset of index i on a grid of size n: [0, n/2] positive, the rest negative.
inline int wrap_offset(int i, int n) { return i <= (n - 1) / 2 ? i : i - n; }

/// Power spectrum summed over channels: sum_k conj(X^k) X^k.
RealField power_sum(const SpectralMap& X);

/// real(idft( sum_l conj(A^l) Z^l / (B + lambda) )).
ResponseMap spectral_response(const SpectralMap& A, const RealField& B, const SpectralMap& Z, double lambda);

}  // namespace lltrack::spectral
