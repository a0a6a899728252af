#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace echorec {

using cplx = std::complex<double>;

/// In-place radix-2 FFT. n must be a power of two.
void fft_inplace(std::vector<cplx>& a, bool inverse);

std::vector<cplx> fft(const std::vector<cplx>& a);
std::vector<cplx> ifft(const std::vector<cplx>& a);

/// Forward FFT of a real signal zero-padded to n (power of two).
std::vector<cplx> fft_real(const std::vector<double>& x, size_t n);

size_t next_pow2(size_t n);

/// Linear convolution of two real signals, truncated to out_len samples.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b,
                             size_t out_len);

}  // namespace echorec
