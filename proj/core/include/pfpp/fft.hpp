#pragma once

#include <complex>
#include <vector>

namespace pfpp {

/// In-place complex FFT. Unnormalized forward transform
/// X_m = sum_j x_j e^{-2 pi i j m / n}; the inverse divides by n.
/// Thread-safe: FFTW plan creation is serialized internally.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse);

} // namespace pfpp
