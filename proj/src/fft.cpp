#include "spinlab/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace spinlab {

namespace {
// The FFTW planner is not reentrant.
std::mutex planner_mutex;
}

std::vector<std::complex<double>> real_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("empty transform");
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<double> inverse_real_dft(std::span<const std::complex<double>> half, std::size_t n) {
  if (half.size() != n / 2 + 1) throw std::invalid_argument("coefficient count does not match length");
  std::vector<std::complex<double>> in(half.begin(), half.end());
  std::vector<double> out(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

CircularConvolver::CircularConvolver(int n0, int n1, std::span<const double> kernel) : n0_(n0), n1_(n1) {
  if (n0 < 1 || n1 < 1) throw std::invalid_argument("bad grid");
  const std::size_t n = static_cast<std::size_t>(n0) * static_cast<std::size_t>(n1);
  if (kernel.size() != n) throw std::invalid_argument("kernel size does not match grid");
  const std::size_t half = static_cast<std::size_t>(n0) * static_cast<std::size_t>(n1 / 2 + 1);
  buf_.assign(n, 0.0);
  spec_.assign(half, {});
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    forward_ = fftw_plan_dft_r2c_2d(n0, n1, buf_.data(), reinterpret_cast<fftw_complex*>(spec_.data()),
                                    FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_2d(n0, n1, reinterpret_cast<fftw_complex*>(spec_.data()), buf_.data(),
                                     FFTW_ESTIMATE);
  }
  std::copy(kernel.begin(), kernel.end(), buf_.begin());
  fftw_execute(static_cast<fftw_plan>(forward_));
  kernel_spec_ = spec_;
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& z : kernel_spec_) z *= scale;
}

CircularConvolver::~CircularConvolver() {
  std::lock_guard<std::mutex> lock(planner_mutex);
  if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  if (backward_) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

void CircularConvolver::apply(std::span<const double> in, std::span<double> out) {
  if (in.size() != buf_.size() || out.size() != buf_.size()) throw std::invalid_argument("size mismatch");
  std::copy(in.begin(), in.end(), buf_.begin());
  fftw_execute(static_cast<fftw_plan>(forward_));
  for (std::size_t i = 0; i < spec_.size(); ++i) spec_[i] *= kernel_spec_[i];
  // c2r overwrites its input, spec_ is scratch anyway
  fftw_execute(static_cast<fftw_plan>(backward_));
  std::copy(buf_.begin(), buf_.end(), out.begin());
}

int good_fft_size(int n) {
  int best = 1;
  while (best < n) best *= 2;
  for (int p3 = 1; p3 <= best; p3 *= 3)
    for (int m = p3; m <= best; m *= 2)
      if (m >= n && m < best) best = m;
  return best;
}

std::vector<double> linear_convolve_2d(std::span<const double> a, int a0, int a1, std::span<const double> b, int b0,
                                       int b1) {
  if (a.size() != static_cast<std::size_t>(a0) * a1 || b.size() != static_cast<std::size_t>(b0) * b1)
    throw std::invalid_argument("array size mismatch");
  const int r0 = a0 + b0 - 1, r1 = a1 + b1 - 1;
  const int n0 = good_fft_size(r0), n1 = good_fft_size(r1);
  std::vector<double> kern(static_cast<std::size_t>(n0) * n1, 0.0), in(kern.size(), 0.0), out(kern.size());
  for (int i = 0; i < b0; ++i)
    for (int j = 0; j < b1; ++j) kern[static_cast<std::size_t>(i) * n1 + j] = b[static_cast<std::size_t>(i) * b1 + j];
  for (int i = 0; i < a0; ++i)
    for (int j = 0; j < a1; ++j) in[static_cast<std::size_t>(i) * n1 + j] = a[static_cast<std::size_t>(i) * a1 + j];
  CircularConvolver conv(n0, n1, kern);
  conv.apply(in, out);
  std::vector<double> res(static_cast<std::size_t>(r0) * r1);
  for (int i = 0; i < r0; ++i)
    for (int j = 0; j < r1; ++j) res[static_cast<std::size_t>(i) * r1 + j] = out[static_cast<std::size_t>(i) * n1 + j];
  return res;
}

}  // namespace spinlab
