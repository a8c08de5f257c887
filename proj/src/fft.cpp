#include "wavescat/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace wavescat {

namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

// Plan creation is not thread-safe in FFTW; execution via the new-array
// interface is.  Plans are created once per length with FFTW_UNALIGNED so
// they can run on any caller buffer.
class PlanCache {
 public:
  PlanPair get(std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    fftw_complex* scratch = fftw_alloc_complex(n);
    PlanPair p;
    p.fwd = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch,
                             FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.bwd = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch,
                             FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    plans_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void fft_inplace(cplx* data, std::size_t n) {
  if (n <= 1) return;
  PlanPair p = cache().get(n);
  fftw_execute_dft(p.fwd, reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

void ifft_inplace(cplx* data, std::size_t n) {
  if (n <= 1) return;
  PlanPair p = cache().get(n);
  fftw_execute_dft(p.bwd, reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) data[i] *= scale;
}

void fft_inplace(std::vector<cplx>& v) { fft_inplace(v.data(), v.size()); }
void ifft_inplace(std::vector<cplx>& v) { ifft_inplace(v.data(), v.size()); }

std::vector<cplx> fft(std::vector<cplx> v) {
  fft_inplace(v);
  return v;
}

std::vector<cplx> ifft(std::vector<cplx> v) {
  ifft_inplace(v);
  return v;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace wavescat
