#include "ewi/fft.hpp"

#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace ewi {

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace

Fft::Fft(std::size_t n) : n_(n)
{
    if (n == 0) throw std::invalid_argument("Fft: length must be > 0");
    std::vector<std::complex<double>> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard<std::mutex> lock(planner_mutex());
    // FFTW_UNALIGNED lets the plans run on any std::vector buffer.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, flags);
    backward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, flags);
    if (!forward_plan_ || !backward_plan_) throw std::runtime_error("Fft: FFTW planning failed");
}

Fft::~Fft()
{
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

void Fft::forward(std::complex<double>* data) const
{
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), p, p);
}

void Fft::backward(std::complex<double>* data) const
{
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), p, p);
}

} // namespace ewi
