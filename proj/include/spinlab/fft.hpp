#pragma once

#include <complex>
#include <span>
#include <vector>

namespace spinlab {

// X_s = sum_j x_j exp(-2 pi i s j / N) for s = 0..N/2.
std::vector<std::complex<double>> real_dft(std::span<const double> x);

// x_j = sum_{s=0}^{N-1} X_s exp(+2 pi i s j / N), with X given for s = 0..N/2
// and the rest filled in by Hermitian symmetry. Unnormalized.
std::vector<double> inverse_real_dft(std::span<const std::complex<double>> half, std::size_t n);

// Circular convolution with a fixed kernel on an n0 x n1 grid (row-major,
// index i0 * n1 + i1). Plans once, applies many times; not thread safe.
class CircularConvolver {
 public:
  CircularConvolver(int n0, int n1, std::span<const double> kernel);
  ~CircularConvolver();
  CircularConvolver(const CircularConvolver&) = delete;
  CircularConvolver& operator=(const CircularConvolver&) = delete;

  int rows() const { return n0_; }
  int cols() const { return n1_; }
  void apply(std::span<const double> in, std::span<double> out);

 private:
  int n0_, n1_;
  std::vector<double> buf_;
  std::vector<std::complex<double>> spec_, kernel_spec_;
  void* forward_ = nullptr;
  void* backward_ = nullptr;
};

// Full linear convolution of an a0 x a1 array with a b0 x b1 array; the
// result is (a0 + b0 - 1) x (a1 + b1 - 1).
std::vector<double> linear_convolve_2d(std::span<const double> a, int a0, int a1, std::span<const double> b, int b0,
                                       int b1);

// Smallest 2^i 3^j >= n.
int good_fft_size(int n);

}  // namespace spinlab
