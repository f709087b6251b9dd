#pragma once

// Right-hand side of the six-species light-regulated gene circuit.
//
//   dA/dt     = V_m / (kappa_A + 1) - gamma_A A
//   dB/dt     = V_B / (kappa_B + 1) - gamma_B B
//   dC_RNA/dt = tau_prc kappa_A A / (1 + kappa_A A + kappa_B B) - gamma_CRNA C_p
//   dC_p/dt   = tau_lrc kappa_A C_RNA - gamma_CP C_p
//   dZ_RNA/dt = V_m C_p / (kappa_A + C_p) - gamma_ZRNA Z_RNA
//   dZ_p/dt   = tau_lrz Z_RNA - gamma_ZP Z_p
//
// The C_RNA decay term acts on C_p as written in the source model. Setting
// CircuitOptions::eq3_decay_on_crna switches it to the conventional
// -gamma_CRNA C_RNA.

#include <array>
#include <cmath>
#include <cstddef>
#include <string_view>

#include "odesurro/error.hpp"

namespace odesurro {

inline constexpr std::size_t kNumSpecies = 6;
inline constexpr std::size_t kNumParams = 13;

// Fixed species order used by every file format and by the network.
enum Species : std::size_t { kA = 0, kB, kCRna, kCp, kZRna, kZp };

inline constexpr std::array<std::string_view, kNumSpecies> kSpeciesNames = {
    "A", "B", "C_RNA", "C_p", "Z_RNA", "Z_p"};

using StateVector = std::array<double, kNumSpecies>;

struct ParameterSet {
  double gamma_A = 0.0;
  double gamma_B = 0.0;
  double gamma_CRNA = 0.0;
  double gamma_CP = 0.0;
  double gamma_ZRNA = 0.0;
  double gamma_ZP = 0.0;
  double tau_prc = 0.0;
  double tau_lrc = 0.0;
  double tau_lrz = 0.0;
  double V_m = 0.0;
  double V_B = 0.0;
  double kappa_A = 0.0;
  double kappa_B = 0.0;

  static constexpr std::array<std::string_view, kNumParams> names = {
      "gamma_A", "gamma_B", "gamma_CRNA", "gamma_CP", "gamma_ZRNA", "gamma_ZP", "tau_prc",
      "tau_lrc", "tau_lrz", "V_m",        "V_B",      "kappa_A",    "kappa_B"};

  std::array<double, kNumParams> to_array() const {
    return {gamma_A, gamma_B, gamma_CRNA, gamma_CP, gamma_ZRNA, gamma_ZP, tau_prc,
            tau_lrc, tau_lrz, V_m,        V_B,      kappa_A,    kappa_B};
  }

  static ParameterSet from_array(const std::array<double, kNumParams>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8], a[9], a[10], a[11], a[12]};
  }

  bool valid() const {
    for (double x : to_array()) {
      if (!std::isfinite(x) || x < 0.0) return false;
    }
    return true;
  }

  bool operator==(const ParameterSet&) const = default;
};

struct CircuitOptions {
  bool eq3_decay_on_crna = false;
};

inline bool all_finite(const StateVector& s) {
  for (double x : s) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline StateVector rhs(const StateVector& s, const ParameterSet& p,
                       const CircuitOptions& opts = {}) {
  const double a = s[kA], b = s[kB], c_rna = s[kCRna], c_p = s[kCp], z_rna = s[kZRna],
               z_p = s[kZp];

  const double promoter = 1.0 + p.kappa_A * a + p.kappa_B * b;
  const double z_denom = p.kappa_A + c_p;
  if (promoter == 0.0) throw DegenerateDenominator("C_RNA production (1 + kappa_A A + kappa_B B)");
  if (z_denom == 0.0) throw DegenerateDenominator("Z_RNA production (kappa_A + C_p)");

  StateVector d;
  d[kA] = p.V_m / (p.kappa_A + 1.0) - p.gamma_A * a;
  d[kB] = p.V_B / (p.kappa_B + 1.0) - p.gamma_B * b;
  d[kCRna] = p.tau_prc * p.kappa_A * a / promoter -
             p.gamma_CRNA * (opts.eq3_decay_on_crna ? c_rna : c_p);
  d[kCp] = p.tau_lrc * p.kappa_A * c_rna - p.gamma_CP * c_p;
  d[kZRna] = p.V_m * c_p / z_denom - p.gamma_ZRNA * z_rna;
  d[kZp] = p.tau_lrz * z_rna - p.gamma_ZP * z_p;
  return d;
}

}  // namespace odesurro
