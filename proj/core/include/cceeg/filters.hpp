#pragma once

#include <cstdint>
#include <vector>

namespace cceeg {

// One second-order IIR section, normalized so a0 = 1:
//   y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2].
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Butterworth designs via bilinear transform with frequency prewarping.
// `order` must be even (conjugate pole pairs only). When `two_pass_comp` is
// true the cutoff is shifted so that a forward+backward (squared-magnitude)
// application lands its -3 dB point at `fc` instead of creeping inward —
// the standard compensation fc' = fc / (sqrt(2)-1)^(1/(2*order)) for lowpass
// and its reciprocal for highpass.
std::vector<Biquad> butterworth_lowpass(int order, double fc, double fs,
                                        bool two_pass_comp = false);
std::vector<Biquad> butterworth_highpass(int order, double fc, double fs,
                                         bool two_pass_comp = false);

// Constrained notch (band-reject) biquad at f0 with quality factor q, unity
// gain at DC and Nyquist.
Biquad notch_biquad(double f0, double fs, double q);

// Cascade magnitude response at frequency f (single pass).
double sos_gain(const std::vector<Biquad>& sos, double f, double fs);

// Zero-phase filtering: forward pass, reverse, second pass, reverse. The
// signal is extended at both ends by `padlen` samples of odd reflection and
// each section starts from its step-response steady state, which suppresses
// edge transients the same way common scientific implementations do.
void filtfilt(const std::vector<Biquad>& sos, std::vector<double>& x, std::int64_t padlen);

// Sensible padding for a given sample rate: long enough for slow transients,
// capped below the signal length.
std::int64_t default_padlen(double fs, std::int64_t signal_len);

// Polyphase rational-ratio resampler (Kaiser-windowed sinc, beta = 8.6,
// half-width 10*max(L,M) high-rate taps). The output has
// round(n_in * target_rate / fs) samples and is group-delay aligned with the
// input. target_rate == fs reproduces the input up to float rounding.
std::vector<double> resample_signal(const std::vector<double>& x, double fs, double target_rate);

}  // namespace cceeg
