#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace fiberlab {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using Bits = std::vector<std::uint8_t>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPlanck = 6.62607015e-34;

/// Complex baseband field of both polarizations, in sqrt(W) units.
class DualPolWaveform {
 public:
  DualPolWaveform(CVec x, CVec y, double sample_rate);

  const CVec& x() const { return x_; }
  const CVec& y() const { return y_; }
  double sample_rate() const { return sample_rate_; }
  std::size_t size() const { return x_.size(); }
  bool empty() const { return x_.empty(); }

 private:
  CVec x_;
  CVec y_;
  double sample_rate_;
};

/// Transmitted bits and symbols of both polarizations.
struct SymbolFrame {
  Bits bits_x;
  Bits bits_y;
  CVec syms_x;
  CVec syms_y;
  double baud_rate = 0.0;

  std::size_t size() const { return syms_x.size(); }
};

struct SystemParams {
  double alpha = 0.0;          // Np/m
  double beta2 = 0.0;          // s^2/m
  double gamma = 0.0;          // 1/(W m)
  double pmd_coef = 0.0;       // s/sqrt(m)
  double span_length = 80e3;   // m
  int n_spans = 1;
  double symbol_rate = 32e9;   // Bd
  int sps_forward = 4;
  int sps_rx = 2;
  int steps_per_span = 40;
  double linewidth = 0.0;      // Hz
  double noise_figure_db = 5.0;
  double rolloff = 0.25;
  double center_wavelength = 1550e-9;  // m
  bool ase_enabled = true;
  bool pmd_enabled = true;

  double segment_length() const { return span_length / steps_per_span; }
  double total_length() const { return span_length * n_spans; }
  double forward_rate() const { return symbol_rate * sps_forward; }
  double rx_rate() const { return symbol_rate * sps_rx; }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  /// Link parameters of the 14 x 80 km, 64 GBd reference system.
  static SystemParams reference_link();
};

/// beta2 [s^2/m] from the dispersion parameter D [ps/nm/km].
double beta2_from_dispersion(double d_ps_nm_km, double wavelength = 1550e-9);
/// alpha [Np/m] from attenuation in dB/km.
double alpha_from_db_per_km(double a_db_km);
/// PMD coefficient [s/sqrt(m)] from ps/sqrt(km).
double pmd_from_ps_sqrt_km(double tau);

/// Mean of |x|^2 + |y|^2 over samples.
double measure_power(const DualPolWaveform& w);

double dbm_to_watts(double p_dbm);
double watts_to_dbm(double p_watts);

}  // namespace fiberlab

namespace fiberlab {

/// Places `w` at sample `lead` of a zero waveform of `total` samples.
DualPolWaveform zero_pad(const DualPolWaveform& w, std::size_t lead, std::size_t total);
/// Samples [offset, offset + n) of `w`.
DualPolWaveform crop(const DualPolWaveform& w, std::size_t offset, std::size_t n);
/// Multiplies both polarizations by a real factor.
DualPolWaveform scale(const DualPolWaveform& w, double factor);

}  // namespace fiberlab
