// Reduced dynamics of the spin when the oscillator starts in a coherent
// state: Kraus completeness, agreement with the partial trace, and the
// entanglement entropy of the spin over time.

#include <cstdio>
#include <numbers>

#include "tcb/channel.hpp"

int main() {
  const double s = 3.0, delta = -0.5;
  const tcb::cplx alpha = 1.0;
  const auto p = tcb::make_tc_params(delta, s, tcb::policy_n_max(tcb::coherent_sector(alpha), tcb::SpinSpace(s)));
  const auto sp = p.space();
  const auto gamma = tcb::coherent_boson(alpha, sp.fock()).state;
  const auto xi = tcb::spin_coherent(std::numbers::pi / 2, 0.0, p.spin);

  std::printf("%6s %12s %12s %12s %12s\n", "t", "defect", "route gap", "entropy", "vs exact");
  for (int i = 0; i <= 8; ++i) {
    const double t = 0.25 * i;
    const auto r = tcb::channel_report(gamma, xi, p, sp, t);
    std::printf("%6.2f %12.3e %12.3e %12.6f %12.3e\n", t, r.kraus.completeness_defect, r.dual_route_gap, r.entropy,
                r.exact_route_gap);
  }
}
