#include "chronogaze/wavelet.hpp"

namespace chronogaze::wavelet {

const std::array<double, 32> kSym16Lowpass = {
    6.230006701220761e-06,   -3.113556407621969e-06,  -0.00010943147929529757, 2.8078582128442894e-05,
    0.0008523547108047095,   -0.0001084456223089688,  -0.0038809122526038786,  0.0007182119788317892,
    0.012666731659857348,    -0.0031265171722710075,  -0.031051202843553064,   0.004869274404904607,
    0.032333091610663785,    -0.06698304907021778,    -0.034574228416972504,   0.39712293362064416,
    0.7565249878756971,      0.47534280601152273,     -0.054040601387606135,   -0.15959219218520598,
    0.03072113906330156,     0.07803785290341991,     -0.003510275068374009,   -0.024952758046290123,
    0.001359844742484172,    0.0069377611308027096,   -0.00022211647621176323, -0.0013387206066921965,
    3.656592483348223e-05,   0.00016545679579108483,  -5.396483179315242e-06,  -1.0797982104319795e-05};

std::array<double, 32> sym16_highpass() {
  std::array<double, 32> hi{};
  for (std::size_t k = 0; k < hi.size(); ++k) {
    const double v = kSym16Lowpass[hi.size() - 1 - k];
    hi[k] = (k % 2 == 0) ? -v : v;
  }
  return hi;
}

std::vector<double> analyze_periodized(std::span<const double> x, std::span<const double> filter) {
  if (x.empty()) return {};
  const std::size_t n = x.size() + (x.size() % 2);
  auto at = [&](std::size_t i) { return i < x.size() ? x[i] : x.back(); };
  const std::size_t half = filter.size() / 2;
  std::vector<double> out(n / 2, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    // (2i + half - j) mod n with non-negative arithmetic; n may be smaller than the filter.
    const std::size_t base = 2 * i + half + n * (filter.size() / n + 1);
    for (std::size_t j = 0; j < filter.size(); ++j) acc += filter[j] * at((base - j) % n);
    out[i] = acc;
  }
  return out;
}

std::vector<double> level2_detail(std::span<const double> x) {
  static const auto hi = sym16_highpass();
  const auto approx = analyze_periodized(x, kSym16Lowpass);
  return analyze_periodized(approx, hi);
}

}  // namespace chronogaze::wavelet
