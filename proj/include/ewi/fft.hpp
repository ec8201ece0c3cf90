#pragma once

#include <complex>
#include <cstddef>

namespace ewi {

/// In-place complex FFT of fixed length backed by FFTW. Transforms are
/// unnormalized (backward(forward(x)) = n x). Plans are created once under a
/// lock; executing them is safe from several threads on distinct buffers.
class Fft {
public:
    explicit Fft(std::size_t n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }
    void forward(std::complex<double>* data) const;
    void backward(std::complex<double>* data) const;

private:
    std::size_t n_;
    void* forward_plan_;
    void* backward_plan_;
};

} // namespace ewi
