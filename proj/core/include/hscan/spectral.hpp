#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hscan::spectral {

std::size_t next_pow2(std::size_t n) noexcept;

/// Forward real FFT of `x` zero-padded to n points; returns n/2+1 bins.
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n);

/// Inverse of rfft(), normalized so irfft(rfft(x, n), n) == x.
std::vector<double> irfft(std::span<const std::complex<double>> bins, std::size_t n);

/// Multiplies the spectrum of `x` (zero-padded to n) by response(f_hz) and
/// returns the first `out_len` output samples.
std::vector<double> filter(std::span<const double> x, double sample_rate, std::size_t n,
                           std::size_t out_len,
                           const std::function<std::complex<double>(double)>& response);

/// Linear convolution of x with an FIR kernel, truncated to x.size() samples
/// (causal alignment: y[n] = sum_k h[k] x[n-k]).
std::vector<double> convolve_fir(std::span<const double> x, std::span<const double> h);

}  // namespace hscan::spectral
