#pragma once

#include <array>
#include <span>
#include <vector>

namespace chronogaze::wavelet {

/// Symlet-16 decomposition low-pass filter (32 taps).
extern const std::array<double, 32> kSym16Lowpass;

/// Quadrature-mirror high-pass companion: hi[k] = (-1)^(k+1) lo[N-1-k].
std::array<double, 32> sym16_highpass();

/// One periodized analysis step: out[i] = sum_j f[j] x[(2i + F/2 - j) mod n].
/// Odd-length input is extended by repeating its last sample, so the output
/// has ceil(n/2) coefficients.
std::vector<double> analyze_periodized(std::span<const double> x, std::span<const double> filter);

/// Level-2 detail coefficients of a two-level sym16 decomposition.
std::vector<double> level2_detail(std::span<const double> x);

}  // namespace chronogaze::wavelet
