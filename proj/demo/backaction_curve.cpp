// Prints the effective anisotropy and the back-action strength for a
// collective spin of size S against a detuned oscillator, together with the
// distance between the exact and factorized propagators at the same times.

#include <cstdio>

#include "tcb/analytic.hpp"
#include "tcb/propagator.hpp"

int main() {
  const double s = 10.0, delta = -0.5;
  const int n_sector = 4;
  const auto kernel = tcb::BackActionKernel::large_s(delta, s);
  const auto p = tcb::make_tc_params(delta, s, tcb::policy_n_max(n_sector, tcb::SpinSpace(s)));
  const auto sp = p.space();
  const tcb::BlockSpectrum spectrum(p, sp);

  std::printf("%6s %14s %14s %14s\n", "t", "A", "g^2|G|", "error");
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.25 * i;
    const double err = tcb::column_restricted_distance(spectrum.propagator(t),
                                                       tcb::factorized_propagator(p, sp, t).combined(), n_sector);
    std::printf("%6.2f %14.6e %14.6e %14.6e\n", t, kernel.A(t), kernel.g * kernel.g * std::abs(kernel.G(t)), err);
  }
}
