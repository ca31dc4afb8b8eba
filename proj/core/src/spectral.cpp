#include "hscan/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace hscan::spectral {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> allocate(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : plan_(p) {
    if (plan_ == nullptr) throw std::runtime_error("FFTW planning failed");
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n) {
  auto in = allocate<double>(n);
  auto out = allocate<fftw_complex>(n / 2 + 1);
  std::unique_ptr<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = std::make_unique<Plan>(
        fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  const std::size_t copy = std::min(n, x.size());
  std::copy_n(x.begin(), copy, in.get());
  std::fill(in.get() + copy, in.get() + n, 0.0);
  plan->execute();
  std::vector<std::complex<double>> bins(n / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = {out[k][0], out[k][1]};
  return bins;
}

std::vector<double> irfft(std::span<const std::complex<double>> bins, std::size_t n) {
  if (bins.size() != n / 2 + 1) throw std::invalid_argument("irfft: bin count does not match n");
  auto in = allocate<fftw_complex>(n / 2 + 1);
  auto out = allocate<double>(n);
  std::unique_ptr<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = std::make_unique<Plan>(
        fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  for (std::size_t k = 0; k < bins.size(); ++k) {
    in[k][0] = bins[k].real();
    in[k][1] = bins[k].imag();
  }
  plan->execute();
  std::vector<double> x(out.get(), out.get() + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : x) v *= scale;
  return x;
}

std::vector<double> filter(std::span<const double> x, double sample_rate, std::size_t n,
                           std::size_t out_len,
                           const std::function<std::complex<double>(double)>& response) {
  auto bins = rfft(x, n);
  const double df = sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < bins.size(); ++k) bins[k] *= response(df * static_cast<double>(k));
  auto y = irfft(bins, n);
  y.resize(std::min(out_len, n));
  return y;
}

std::vector<double> convolve_fir(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return std::vector<double>(x.size(), 0.0);
  const std::size_t n = next_pow2(x.size() + h.size() - 1);
  auto xs = rfft(x, n);
  const auto hs = rfft(h, n);
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= hs[k];
  auto y = irfft(xs, n);
  y.resize(x.size());
  return y;
}

}  // namespace hscan::spectral
