#pragma once

// Thin RAII wrapper over FFTW for in-place complex transforms of a fixed length.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace iontrap {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Unnormalized forward (e^{-i...}) and backward (e^{+i...}) DFT of length n.
/// The planner is serialized; execution on distinct FftPlan objects is safe
/// from multiple threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n), buffer_(n) {
    if (n == 0) throw std::invalid_argument("FftPlan: zero length");
    std::lock_guard lock(detail::fftw_planner_mutex());
    auto* data = reinterpret_cast<fftw_complex*>(buffer_.data());
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(len, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(len, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t size() const { return n_; }

  void forward(std::span<std::complex<double>> data) { run(forward_, data); }
  void backward(std::span<std::complex<double>> data) { run(backward_, data); }

 private:
  void run(fftw_plan plan, std::span<std::complex<double>> data) {
    if (data.size() != n_) throw std::invalid_argument("FftPlan: length mismatch");
    std::copy(data.begin(), data.end(), buffer_.begin());
    fftw_execute(plan);
    std::copy(buffer_.begin(), buffer_.end(), data.begin());
  }

  std::size_t n_;
  std::vector<std::complex<double>> buffer_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace iontrap
