#include "echorec/fft.hpp"

#include <cmath>

#include "echorec/errors.hpp"

namespace echorec {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        raise(ErrorCode::InvalidConfig, "fft size must be a power of two");

    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& c : a) c *= inv_n;
    }
}

std::vector<cplx> fft(const std::vector<cplx>& a) {
    std::vector<cplx> out = a;
    fft_inplace(out, false);
    return out;
}

std::vector<cplx> ifft(const std::vector<cplx>& a) {
    std::vector<cplx> out = a;
    fft_inplace(out, true);
    return out;
}

std::vector<cplx> fft_real(const std::vector<double>& x, size_t n) {
    std::vector<cplx> a(n, cplx(0.0, 0.0));
    const size_t m = std::min(x.size(), n);
    for (size_t i = 0; i < m; ++i) a[i] = cplx(x[i], 0.0);
    fft_inplace(a, false);
    return a;
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b,
                             size_t out_len) {
    if (a.empty() || b.empty()) return std::vector<double>(out_len, 0.0);
    const size_t full = a.size() + b.size() - 1;
    const size_t n = next_pow2(full);
    std::vector<cplx> fa = fft_real(a, n);
    std::vector<cplx> fb = fft_real(b, n);
    for (size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    fft_inplace(fa, true);
    std::vector<double> out(out_len, 0.0);
    const size_t m = std::min(out_len, full);
    for (size_t i = 0; i < m; ++i) out[i] = fa[i].real();
    return out;
}

}  // namespace echorec
