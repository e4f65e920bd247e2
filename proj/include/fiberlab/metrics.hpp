#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "fiberlab/signal.hpp"

namespace fiberlab {

class UndefinedQ : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct BitErrors {
  std::size_t errors = 0;
  std::size_t bits = 0;
  double rate() const { return bits ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0; }
};

BitErrors count_bit_errors(const Bits& a, const Bits& b);
double ber(const Bits& tx, const Bits& rx);

/// Inverse complementary error function on (0, 2).
double erfcinv(double y);
/// 20 log10(sqrt(2) erfcinv(2 ber)); UndefinedQ unless 0 < ber < 0.5.
double q_factor_db(double ber);

inline constexpr double kEvmFloorDb = -100.0;
/// 10 log10(mean|e - r|^2 / mean|r|^2), floored at kEvmFloorDb.
double evm_db(const CVec& est, const CVec& ref);

/// "re,im" CSV, shortest round-trip decimal form.
void constellation_dump(const CVec& syms, const std::string& path);
CVec constellation_load(const std::string& path);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

inline constexpr std::size_t kMinReportableBits = 100000;

struct ResultRow {
  double launch_power_dbm = 0.0;
  std::string equalizer;
  int rx_mode = 1;
  double ber = 0.0;
  std::optional<double> q_factor_db;  // absent when ber is 0 or >= 0.5
  std::size_t n_bits = 0;
  std::size_t n_errors = 0;
  std::uint64_t flops_per_symbol = 0;
  std::uint64_t params = 0;
  std::uint64_t seed = 0;

  /// Enough bits for the BER to be quoted.
  bool reportable() const { return n_bits >= kMinReportableBits; }
};

ResultRow make_result(double power_dbm, std::string equalizer, int rx_mode, const BitErrors& e, std::uint64_t seed);

void write_result_header(std::ostream& os);
void write_result_row(std::ostream& os, const ResultRow& r);

}  // namespace fiberlab
