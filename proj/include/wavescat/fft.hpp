#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace wavescat {

using cplx = std::complex<double>;

// Unnormalized forward DFT, in place.  Thread-safe; plans are cached per
// length and reused across calls (FFTW_ESTIMATE keeps planning deterministic,
// so repeated runs produce bit-identical results).
void fft_inplace(cplx* data, std::size_t n);

// Inverse DFT scaled by 1/n, in place.
void ifft_inplace(cplx* data, std::size_t n);

void fft_inplace(std::vector<cplx>& v);
void ifft_inplace(std::vector<cplx>& v);

std::vector<cplx> fft(std::vector<cplx> v);
std::vector<cplx> ifft(std::vector<cplx> v);

std::size_t next_pow2(std::size_t n);
bool is_pow2(std::size_t n);

}  // namespace wavescat
