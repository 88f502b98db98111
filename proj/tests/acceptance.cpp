// Acceptance gate: one PASS/FAIL line per criterion, followed by the measured
// quantities behind it. Exit status is the number of failed criteria.
//
// Usage: acceptance [path-to-tcb]
// With a path, criterion 8 also runs the command-line tool twice per command
// and compares the bytes it wrote.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tcb/analytic.hpp"
#include "tcb/channel.hpp"
#include "tcb/cli/commands.hpp"
#include "tcb/model.hpp"
#include "tcb/numerics.hpp"
#include "tcb/propagator.hpp"
#include "tcb/zassenhaus.hpp"

using namespace tcb;

namespace {

// Pinned thresholds.
constexpr double kIdentityTol = 1e-11;
constexpr double kZassenhausSlope = 3.9;
constexpr double kImagTol = 1e-13;
constexpr double kOddTol = 1e-12;
constexpr double kRouteTol = 1e-13;
constexpr double kQuarticSlope = 3.9;
constexpr double kUnitarityPerDim = 1e-9;
constexpr double kErrorSlope = 2.0;
constexpr double kCompletenessTol = 1e-8;
constexpr double kDualRouteTol = 1e-10;
constexpr double kAblationTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "    failed: " << what << "\n";
    }
  }
};

using Clock = std::chrono::steady_clock;

std::string fmt(double x) { return cli::format_double(x); }

// --------------------------------------------------------------------------

void criterion_1(Outcome& o) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> freq(0.3, 2.0), coup(0.02, 1.0);
  std::uniform_int_distribution<int> twice_s(1, 10), nmax(2, 16);
  double worst_rel = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    TCParams p;
    p.omega = freq(rng);
    p.h = freq(rng);
    p.g = coup(rng);
    p.spin = SpinSpace::from_twice(twice_s(rng));
    p.n_max = nmax(rng);
    const auto r = verify_commutator_identities(p, p.space());
    const double rel = r.worst() / std::max(1.0, r.scale);
    worst_rel = std::max(worst_rel, rel);
    o.require(r.within(kIdentityTol), "draw " + std::to_string(draw) + " relative residual " + fmt(rel));
  }
  o.detail << "    worst relative residual over 20 draws: " << fmt(worst_rel) << "\n";
}

void criterion_2(Outcome& o) {
  const auto p = make_tc_params(-0.5, 3.0, 10);
  std::vector<double> ts, res;
  for (double t : {1e-3, 2e-3, 4e-3, 7e-3, 1e-2}) {
    ts.push_back(t);
    res.push_back(zassenhaus_product_residual(p, t, 3));
  }
  const double slope = fit_loglog_slope(ts, res);
  o.detail << "    log-log slope of the order-3 product residual: " << fmt(slope) << "\n";
  o.require(slope >= kZassenhausSlope, "slope below " + fmt(kZassenhausSlope));
}

void criterion_3(Outcome& o) {
  const auto p = make_tc_params(-0.5, 2.0, 12);
  for (int n = 1; n <= 4; ++n) {
    const auto f = surviving_commutator_forms(n, p);
    o.require(f.match_adx, "ad_X^n Y closed form, n = " + std::to_string(n));
    o.require(f.match_ady, "ad_Y ad_X^(n-1) Y closed form, n = " + std::to_string(n));
  }
  o.detail << "    n = 1..4 compared symbolically\n";
}

void criterion_4(Outcome& o) {
  double worst_real = 0.0, worst_res = 0.0, worst_odd = 0.0, worst_route = 0.0, worst_fd = 0.0;
  for (double d : {-1.2, -0.5, -0.1, 0.25, 0.8}) {
    const auto k = BackActionKernel::large_s(d, 10.0);
    const auto km = BackActionKernel::large_s(-d, 10.0);
    for (int i = 0; i <= 500; ++i) {
      const double t = 0.01 * i;
      worst_real = std::max(worst_real, std::abs(k.G(t).real()));
      worst_odd = std::max(worst_odd, std::abs(k.A(t) + km.A(t)));
      if (i % 10 == 0 && i > 0) {
        const auto kf = k.k_functions(t);
        const cplx lhs = kf.k3 - 0.5 * std::norm(k.f(t));
        const cplx rhs = -2.0 * kf.k1 + k.M(t);
        worst_route = std::max(worst_route, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
        // A = i g² dG/dt must come out real
        const double h = 1e-5;
        const cplx fd = cplx{0.0, 1.0} * k.g * k.g * (k.G(t + h) - k.G(t - h)) / (2.0 * h);
        worst_fd = std::max(worst_fd, std::abs(fd.imag()) / std::max(k.g * k.g, std::abs(fd)));
      }
    }
  }
  const auto k0 = BackActionKernel::large_s(0.0, 10.0);
  for (int i = 0; i <= 500; ++i) worst_res = std::max(worst_res, std::abs(k0.G(0.01 * i)));

  // A = (g²δ/2) t² + O(t⁴): the remainder after the quadratic term falls off with slope 4
  const auto k = BackActionKernel::large_s(-0.5, 10.0);
  const double c = k.g * k.g * k.delta / 2.0;
  std::vector<double> ts, rem;
  for (double t = 0.02; t <= 0.2001; t += 0.02) {
    ts.push_back(t);
    rem.push_back(std::abs(k.A(t) - c * t * t));
  }
  const double quartic = fit_loglog_slope(ts, rem);

  o.detail << "    max |Re G|: " << fmt(worst_real) << "\n    max |G| at resonance: " << fmt(worst_res)
           << "\n    max |A(d) + A(-d)|: " << fmt(worst_odd) << "\n    max route mismatch (relative): "
           << fmt(worst_route) << "\n    max relative Im of i g^2 dG/dt: " << fmt(worst_fd)
           << "\n    slope of |A - (g^2 d/2) t^2|: " << fmt(quartic) << "\n";
  o.require(worst_real <= kImagTol, "G has a real part");
  o.require(worst_res == 0.0, "G does not vanish at resonance");
  o.require(worst_odd <= kOddTol, "A is not odd in the detuning");
  o.require(worst_route <= kRouteTol, "the two routes to G disagree");
  o.require(worst_fd <= 1e-8, "i g^2 dG/dt is not real");
  o.require(quartic >= kQuarticSlope, "small-t remainder is not quartic");
}

void criterion_5(Outcome& o) {
  auto min_in_window = [](double d, double s) {
    const auto k = BackActionKernel::large_s(d, s);
    double m = 0.0;
    for (int i = 0; 0.01 * i < s / 4; ++i) m = std::min(m, k.A(0.01 * i));
    return m;
  };
  const double m01 = min_in_window(-0.1, 10.0), m05 = min_in_window(-0.5, 10.0);
  o.detail << "    min A in window, S = 10: d = -0.1 " << fmt(m01) << ", d = -0.5 " << fmt(m05) << "\n";
  o.require(m01 < m05, "minimum not deeper for d = -0.1");

  const auto k = BackActionKernel::large_s(-0.5, 10.0);
  int changes = 0;
  double prev = k.A(1.0), root = std::nan("");
  for (int i = 1; i <= 300; ++i) {
    const double t = 1.0 + 0.01 * i;
    const double a = k.A(t);
    if ((a < 0) != (prev < 0)) {
      ++changes;
      root = t;
    }
    prev = a;
  }
  o.detail << "    sign changes of A on [1, 4] for d = -0.5: " << changes << " (near t = " << fmt(root) << ")\n";
  o.require(changes == 1, "expected exactly one sign change");

  double last = std::numeric_limits<double>::infinity();
  o.detail << "    |A(d = -0.5, t = 1)|:";
  for (double s : {3.0, 5.0, 10.0, 20.0}) {
    const double a = std::abs(BackActionKernel::large_s(-0.5, s).A(1.0));
    o.detail << " S=" << s << " " << fmt(a);
    o.require(a < last, "|A| not decreasing at S = " + fmt(s));
    last = a;
  }
  o.detail << "\n";
}

void criterion_6(Outcome& o) {
  const int n_sector = 4;
  double last = std::numeric_limits<double>::infinity();
  o.detail << "    error at t = 1, d = -0.5:";
  for (double s : {5.0, 10.0, 20.0, 40.0}) {
    const SpinSpace spin(s);
    const auto p = make_tc_params(-0.5, s, policy_n_max(n_sector, spin));
    const auto sp = p.space();
    const auto pair = make_propagator_pair(p, sp, 1.0, n_sector);
    const double dim = static_cast<double>(sp.dim());
    o.require(pair.exact.unitarity_residual() <= kUnitarityPerDim * dim, "exact route not unitary at S = " + fmt(s));
    o.require(pair.factorized.unitarity_residual() <= kUnitarityPerDim * dim,
              "factorized route not unitary at S = " + fmt(s));
    const double e = propagator_error(pair);
    o.detail << " S=" << s << " " << fmt(e);
    o.require(e < last, "error not decreasing at S = " + fmt(s));
    last = e;
  }
  o.detail << "\n";

  const SpinSpace spin(10.0);
  const auto p = make_tc_params(-0.5, 10.0, policy_n_max(n_sector, spin));
  const auto sp = p.space();
  const BlockSpectrum spectrum(p, sp);
  std::vector<double> ts, errs;
  for (int i = 0; i < 8; ++i) {
    const double t = 0.02 * std::pow(10.0, i / 7.0);
    ts.push_back(t);
    errs.push_back(column_restricted_distance(spectrum.propagator(t), factorized_propagator(p, sp, t).combined(),
                                              n_sector));
  }
  const double slope = fit_loglog_slope(ts, errs);
  o.detail << "    small-t log-log slope of the error (S = 10): " << fmt(slope) << "\n";
  o.require(slope >= kErrorSlope, "error slope below " + fmt(kErrorSlope));
}

void criterion_7(Outcome& o) {
  const int n_sector = coherent_sector(1.0);
  double worst_defect = 0.0, worst_gap = 0.0, worst_ablation = 0.0, worst_eigen_ablation = 0.0;
  std::ostringstream by_spin;
  for (double s : {0.5, 1.0, 2.0, 3.0, 5.0}) {
    double spin_worst = 0.0;
    const SpinSpace spin(s);
    const auto p = make_tc_params(-0.5, s, policy_n_max(n_sector, spin));
    const auto sp = p.space();
    const auto gamma = coherent_boson(1.0, sp.fock()).state;
    const auto xi = spin_coherent(std::numbers::pi / 2, 0.0, p.spin);
    for (double t : {0.0, 0.5, 1.0, 1.5, 2.0}) {
      const auto r = channel_report(gamma, xi, p, sp, t);
      if (s == 3.0) worst_defect = std::max(worst_defect, r.kraus.completeness_defect);
      worst_gap = std::max(worst_gap, r.dual_route_gap);
      spin_worst = std::max(spin_worst, std::abs(r.entropy - r.entropy_ablated));
      const auto re = channel_report(gamma, StateVector::basis(spin.dim(), spin.dim() / 2), p, sp, t);
      worst_eigen_ablation = std::max(worst_eigen_ablation, std::abs(re.entropy - re.entropy_ablated));
    }
    worst_ablation = std::max(worst_ablation, spin_worst);
    by_spin << " S=" << s << " " << fmt(spin_worst);
  }
  o.detail << "    completeness defect (S = 3, t <= 2): " << fmt(worst_defect)
           << "\n    Kraus route vs partial trace: " << fmt(worst_gap)
           << "\n    entropy change on removing the back-action factor, spin coherent start, max over t <= 2:" << by_spin.str()
           << "\n    same for an Sz eigenstate start: " << fmt(worst_eigen_ablation) << "\n";
  o.require(worst_defect <= kCompletenessTol, "completeness defect too large");
  o.require(worst_gap <= kDualRouteTol, "Kraus route and partial trace disagree");
  o.require(worst_ablation <= kAblationTol,
            "entropy changes when the back-action factor is removed (it does not commute with W_int)");
}

std::string run_tool(const std::string& tool, const std::string& command) {
  const std::string cmd = "'" + tool + "' " + command + " --threads 2";
  std::string out;
  if (FILE* pipe = popen(cmd.c_str(), "r")) {
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    if (pclose(pipe) != 0) out += "\n<nonzero exit>";
  } else {
    out = "<could not start>";
  }
  return out;
}

void criterion_8(Outcome& o, const std::string& tool) {
  int compared = 0;
  for (const auto& name : cli::command_names()) {
    const auto cfg = cli::resolve_config(name, {});
    const auto a = cli::run_command(cfg).csv;
    const auto b = cli::run_command(cfg).csv;
    auto single = cli::resolve_config(name, {{"threads", "1"}});
    const auto c = cli::run_command(single).csv;
    o.require(a == b, name + ": repeated in-process runs differ");
    o.require(a == c, name + ": output depends on the thread count");
    ++compared;
    if (!tool.empty()) {
      const auto x = run_tool(tool, name);
      const auto y = run_tool(tool, name);
      o.require(x == y, name + ": repeated tool runs differ");
      o.require(x == a, name + ": tool output differs from the in-process run");
    }
  }
  o.detail << "    commands compared: " << compared << (tool.empty() ? " (in process only)" : " (in process and via the tool)")
           << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string tool = argc > 1 ? argv[1] : "";
  struct Item {
    int id;
    const char* title;
    double budget_s;  // runtime limit, 0 for none
    std::function<void(Outcome&)> run;
  };
  const std::vector<Item> items{
      {1, "commutator identities, 20 random draws", 10.0, criterion_1},
      {2, "Zassenhaus product residual is fourth order", 30.0, criterion_2},
      {3, "surviving commutators match their closed forms", 0.0, criterion_3},
      {4, "analytic functions", 5.0, criterion_4},
      {5, "anisotropy phenomenology", 0.0, criterion_5},
      {6, "exact and factorized propagators", 300.0, criterion_6},
      {7, "channel: completeness, dual route, back-action ablation", 0.0, criterion_7},
      {8, "deterministic output", 0.0, [&](Outcome& o) { criterion_8(o, tool); }},
  };

  int failed = 0;
  for (const auto& it : items) {
    Outcome o;
    const auto start = Clock::now();
    try {
      it.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (it.budget_s > 0.0) o.require(secs < it.budget_s, "runtime " + fmt(secs) + " s over " + fmt(it.budget_s) + " s");
    failed += o.pass ? 0 : 1;
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.2f s", secs);
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << it.id << ": " << it.title << " (" << timing << ")\n"
              << o.detail.str();
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion(s) failed") << "\n";
  return failed;
}
