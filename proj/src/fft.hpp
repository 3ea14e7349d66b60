// SPDX-License-Identifier: Apache-2.0
//
// Cached FFTW plans. Planning is serialized; execution on new arrays through
// the new-array interface is thread-safe.
#pragma once

#include <complex>

namespace gkp::detail {

/// In-place unnormalized DFT of `howmany` lines of length n. sign = -1 forward, +1 backward.
void fft_inplace(std::complex<double>* data, int n, int howmany, int stride, int dist, int sign);

inline void fft_line(std::complex<double>* data, int n, int sign) { fft_inplace(data, n, 1, 1, n, sign); }

}  // namespace gkp::detail
