#include "cceeg/filters.hpp"

#include "cceeg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace cceeg {

namespace {

using cd = std::complex<double>;

// Shift factor that puts the two-pass -3 dB point of an order-n Butterworth
// at the nominal cutoff: (sqrt(2)-1)^(1/(2n)).
double two_pass_shift(int order) {
  return std::pow(std::sqrt(2.0) - 1.0, 1.0 / (2.0 * order));
}

void check_design(int order, double fc, double fs) {
  if (order < 2 || order % 2 != 0)
    throw ConfigError("butterworth: order must be a positive even number");
  if (!(fc > 0.0) || !(fc < fs / 2.0))
    throw ConfigError("butterworth: cutoff must lie in (0, fs/2)");
}

// Analog Butterworth prototype poles on the unit circle (left half plane),
// returned as the half with positive imaginary part; conjugates are implied.
std::vector<cd> prototype_poles(int order) {
  std::vector<cd> poles;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = M_PI * (2.0 * k + 1.0) / (2.0 * order) + M_PI / 2.0;
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

Biquad pole_pair_to_biquad(cd zp, bool highpass) {
  Biquad s;
  s.a1 = -2.0 * zp.real();
  s.a2 = std::norm(zp);
  // Lowpass zeros sit at z = -1, highpass zeros at z = +1.
  const double sign = highpass ? -1.0 : 1.0;
  // Normalize to unity gain at DC (lowpass) / Nyquist (highpass):
  // evaluate denominator at the matching point.
  const double denom_ref = highpass ? (1.0 - s.a1 + s.a2) : (1.0 + s.a1 + s.a2);
  const double g = denom_ref / 4.0;
  s.b0 = g;
  s.b1 = 2.0 * sign * g;
  s.b2 = g;
  return s;
}

std::vector<Biquad> design(int order, double fc, double fs, bool highpass) {
  const double warped = 2.0 * fs * std::tan(M_PI * fc / fs);
  std::vector<Biquad> sos;
  for (cd p : prototype_poles(order)) {
    const cd analog = highpass ? warped / p : warped * p;
    const cd zp = (1.0 + analog / (2.0 * fs)) / (1.0 - analog / (2.0 * fs));
    sos.push_back(pole_pair_to_biquad(zp, highpass));
  }
  return sos;
}

}  // namespace

std::vector<Biquad> butterworth_lowpass(int order, double fc, double fs, bool two_pass_comp) {
  check_design(order, fc, fs);
  double eff = two_pass_comp ? fc / two_pass_shift(order) : fc;
  eff = std::min(eff, 0.499 * fs);
  return design(order, eff, fs, false);
}

std::vector<Biquad> butterworth_highpass(int order, double fc, double fs, bool two_pass_comp) {
  check_design(order, fc, fs);
  const double eff = two_pass_comp ? fc * two_pass_shift(order) : fc;
  return design(order, eff, fs, true);
}

Biquad notch_biquad(double f0, double fs, double q) {
  if (!(f0 > 0.0) || !(f0 < fs / 2.0)) throw ConfigError("notch: f0 must lie in (0, fs/2)");
  if (!(q > 0.0)) throw ConfigError("notch: q must be > 0");
  const double w0 = 2.0 * M_PI * f0 / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * c / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

double sos_gain(const std::vector<Biquad>& sos, double f, double fs) {
  const cd z = std::exp(cd(0.0, -2.0 * M_PI * f / fs));
  cd h(1.0, 0.0);
  for (const Biquad& s : sos)
    h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
  return std::abs(h);
}

namespace {

// Single forward pass of one section in transposed direct form II, state
// seeded with the step-response steady state scaled by the first sample.
void lfilter_zi(const Biquad& s, std::vector<double>& x) {
  const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  double s1 = (s.b1 + s.b2 - (s.a1 + s.a2) * dc) * x[0];
  double s2 = (s.b2 - s.a2 * dc) * x[0];
  for (double& v : x) {
    const double y = s.b0 * v + s1;
    s1 = s.b1 * v - s.a1 * y + s2;
    s2 = s.b2 * v - s.a2 * y;
    v = y;
  }
}

}  // namespace

void filtfilt(const std::vector<Biquad>& sos, std::vector<double>& x, std::int64_t padlen) {
  const auto T = static_cast<std::int64_t>(x.size());
  if (T < 2) return;
  padlen = std::clamp<std::int64_t>(padlen, 0, T - 1);

  // Odd reflection about both end samples.
  std::vector<double> ext;
  ext.reserve(static_cast<std::size_t>(T + 2 * padlen));
  for (std::int64_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[static_cast<std::size_t>(i)]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::int64_t i = 1; i <= padlen; ++i)
    ext.push_back(2.0 * x[static_cast<std::size_t>(T - 1)] - x[static_cast<std::size_t>(T - 1 - i)]);

  for (const Biquad& s : sos) lfilter_zi(s, ext);
  std::reverse(ext.begin(), ext.end());
  for (const Biquad& s : sos) lfilter_zi(s, ext);
  std::reverse(ext.begin(), ext.end());

  std::copy(ext.begin() + padlen, ext.begin() + padlen + T, x.begin());
}

std::int64_t default_padlen(double fs, std::int64_t signal_len) {
  const auto want = static_cast<std::int64_t>(std::llround(2.0 * fs));
  return std::clamp<std::int64_t>(std::max<std::int64_t>(want, 27), 0, signal_len - 1);
}

namespace {

double bessel_i0(double x) {
  // Power series; converges quickly for the argument range windows use.
  double sum = 1.0, term = 1.0;
  const double half = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half / k) * (half / k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// Best rational approximation of ratio with denominator <= max_den
// (continued fractions).
void rational_approx(double ratio, std::int64_t max_den, std::int64_t& num, std::int64_t& den) {
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = ratio;
  for (int it = 0; it < 64; ++it) {
    const auto a = static_cast<std::int64_t>(std::floor(r));
    std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    const double frac = r - static_cast<double>(a);
    if (frac < 1e-12) break;
    r = 1.0 / frac;
  }
  num = p1;
  den = q1;
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) { num /= g; den /= g; }
}

}  // namespace

std::vector<double> resample_signal(const std::vector<double>& x, double fs, double target_rate) {
  if (!(fs > 0.0) || !(target_rate > 0.0))
    throw ConfigError("resample: rates must be positive");
  const auto T = static_cast<std::int64_t>(x.size());
  const auto n_out = static_cast<std::int64_t>(
      std::llround(static_cast<double>(T) * target_rate / fs));
  if (T == 0 || n_out == 0) return {};

  std::int64_t L = 1, M = 1;
  rational_approx(target_rate / fs, 1024, L, M);
  if (L <= 0 || M <= 0) throw ConfigError("resample: cannot represent the rate ratio");

  const std::int64_t lm = std::max(L, M);
  const std::int64_t H = 10 * lm;  // half-width in the high-rate domain
  const double beta = 8.6;
  const double i0b = bessel_i0(beta);
  const double fcut = 1.0 / (2.0 * static_cast<double>(lm));

  // h[k], k in [-H, H]: L * 2*fcut * sinc(2*fcut*k) * kaiser(k/H).
  std::vector<double> h(static_cast<std::size_t>(2 * H + 1));
  for (std::int64_t k = -H; k <= H; ++k) {
    const double t = 2.0 * fcut * static_cast<double>(k);
    double sinc = 1.0;
    if (k != 0) sinc = std::sin(M_PI * t) / (M_PI * t);
    const double r = static_cast<double>(k) / static_cast<double>(H);
    const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
    h[static_cast<std::size_t>(k + H)] = static_cast<double>(L) * 2.0 * fcut * sinc * win;
  }

  std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
  for (std::int64_t j = 0; j < n_out; ++j) {
    // High-rate position of output j; input i contributes via h[j*M - i*L].
    const std::int64_t pos = j * M;
    const std::int64_t i_lo = std::max<std::int64_t>(0, (pos - H + L - 1) / L);
    const std::int64_t i_hi = std::min<std::int64_t>(T - 1, (pos + H) / L);
    double acc = 0.0;
    for (std::int64_t i = i_lo; i <= i_hi; ++i)
      acc += x[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(pos - i * L + H)];
    y[static_cast<std::size_t>(j)] = acc;
  }
  return y;
}

}  // namespace cceeg
