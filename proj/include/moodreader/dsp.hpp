#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace mr {

/// Direct-form-II-transposed biquad section.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;  // normalized (a0 == 1)
    double magnitude_at(double freq_hz, double fs) const;
};

/// Butterworth designs as cascades of RBJ biquads (even order only).
std::vector<Biquad> butter_lowpass(std::size_t order, double cutoff_hz, double fs);
std::vector<Biquad> butter_highpass(std::size_t order, double cutoff_hz, double fs);
/// Second-order notch with quality factor q.
Biquad notch_biquad(double center_hz, double fs, double q);

std::vector<double> apply_cascade(const std::vector<Biquad>& sections,
                                  const std::vector<double>& x);

/// Zero-phase forward-backward filtering with odd-reflection edge padding.
std::vector<double> filtfilt(const std::vector<Biquad>& sections, const std::vector<double>& x);

double cascade_magnitude(const std::vector<Biquad>& sections, double freq_hz, double fs);

/// Real-input DFT (FFTW); returns the one-sided spectrum, n/2+1 bins.
std::vector<std::complex<double>> rfft(const std::vector<double>& x);

/// Amplitude of the sinusoidal component nearest freq_hz, from a Hann-free
/// rectangular-window DFT; used by tests as an independent probe.
double tone_amplitude(const std::vector<double>& x, double freq_hz, double fs);

std::vector<double> hanning_window(std::size_t n);

}  // namespace mr
