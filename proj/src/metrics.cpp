#include "fiberlab/metrics.hpp"

#include <charconv>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

namespace fiberlab {

BitErrors count_bit_errors(const Bits& a, const Bits& b) {
  if (a.size() != b.size()) throw std::invalid_argument("bit sequences differ in length");
  BitErrors e;
  e.bits = a.size();
  for (std::size_t i = 0; i < a.size(); ++i) e.errors += (a[i] != 0) != (b[i] != 0);
  return e;
}

double ber(const Bits& tx, const Bits& rx) {
  if (tx.empty()) throw std::invalid_argument("ber of an empty sequence");
  return count_bit_errors(tx, rx).rate();
}

namespace {

// Acklam's rational approximation of the standard normal quantile
// (relative error ~1e-9), used only as the Newton starting point.
double normal_quantile_guess(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549671010720346e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double lo = 0.02425;
  if (p < lo) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - lo) return -normal_quantile_guess(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double erfcinv(double y) {
  if (!(y > 0.0 && y < 2.0)) throw std::domain_error("erfcinv needs 0 < y < 2");
  // erfc(x) = y  <=>  x = -Phi^-1(y/2) / sqrt(2)
  double x = -normal_quantile_guess(0.5 * y) / std::sqrt(2.0);
  const double k = 2.0 / std::sqrt(kPi);
  for (int it = 0; it < 4; ++it) {
    const double f = std::erfc(x) - y;
    const double fp = -k * std::exp(-x * x);
    // Halley step; f'' = -2x f'
    const double step = f / fp;
    const double next = x - step / (1.0 + x * step);
    if (next == x) break;
    x = next;
  }
  return x;
}

double q_factor_db(double ber) {
  if (!(ber > 0.0 && ber < 0.5)) throw UndefinedQ("Q-factor undefined for BER " + format_double(ber));
  return 20.0 * std::log10(std::sqrt(2.0) * erfcinv(2.0 * ber));
}

double evm_db(const CVec& est, const CVec& ref) {
  if (est.size() != ref.size()) throw std::invalid_argument("evm: length mismatch");
  if (ref.empty()) throw std::invalid_argument("evm: empty input");
  double err = 0.0, pow = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    err += std::norm(est[i] - ref[i]);
    pow += std::norm(ref[i]);
  }
  if (pow == 0.0) throw std::invalid_argument("evm: zero-power reference");
  if (err == 0.0) return kEvmFloorDb;
  return std::max(kEvmFloorDb, 10.0 * std::log10(err / pow));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void constellation_dump(const CVec& syms, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "re,im\n";
  for (const auto& s : syms) os << format_double(s.real()) << ',' << format_double(s.imag()) << '\n';
  if (!os) throw std::runtime_error("write failed for " + path);
}

CVec constellation_load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(is, line) || line != "re,im") throw std::runtime_error(path + ": missing re,im header");
  CVec out;
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error(path + ": malformed row '" + line + "'");
    double re = 0.0, im = 0.0;
    const auto r1 = std::from_chars(line.data(), line.data() + comma, re);
    const auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), im);
    if (r1.ec != std::errc() || r2.ec != std::errc()) throw std::runtime_error(path + ": bad number in '" + line + "'");
    out.emplace_back(re, im);
  }
  return out;
}

ResultRow make_result(double power_dbm, std::string equalizer, int rx_mode, const BitErrors& e, std::uint64_t seed) {
  ResultRow r;
  r.launch_power_dbm = power_dbm;
  r.equalizer = std::move(equalizer);
  r.rx_mode = rx_mode;
  r.ber = e.rate();
  r.n_bits = e.bits;
  r.n_errors = e.errors;
  r.seed = seed;
  if (r.ber > 0.0 && r.ber < 0.5) r.q_factor_db = q_factor_db(r.ber);
  return r;
}

void write_result_header(std::ostream& os) {
  os << "launch_power_dbm,equalizer,rx_mode,ber,q_factor_db,n_bits,n_errors,flops_per_symbol,params,seed,reportable\n";
}

void write_result_row(std::ostream& os, const ResultRow& r) {
  os << format_double(r.launch_power_dbm) << ',' << r.equalizer << ',' << r.rx_mode << ',' << format_double(r.ber) << ','
     << (r.q_factor_db ? format_double(*r.q_factor_db) : std::string("n/a")) << ',' << r.n_bits << ',' << r.n_errors
     << ',' << r.flops_per_symbol << ',' << r.params << ',' << r.seed << ',' << (r.reportable() ? 1 : 0) << '\n';
}

}  // namespace fiberlab
