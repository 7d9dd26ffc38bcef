// Mechanical evaluation of the dichotomy hypotheses: emits a regime verdict
// only when every hypothesis backing it passes, with the spectral error bar
// widening the undecided band around the critical slope.
#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rdlab/diagnostics.hpp"
#include "rdlab/manifold.hpp"
#include "rdlab/spectral.hpp"

namespace rdlab {

enum class Verdict { BlowsUpAllData, GlobalForSmallData, LargeDataBlowUp, Undetermined };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::BlowsUpAllData: return "BlowsUpAllData";
    case Verdict::GlobalForSmallData: return "GlobalForSmallData";
    case Verdict::LargeDataBlowUp: return "LargeDataBlowUp";
    default: return "Undetermined";
  }
}

struct ChecklistItem {
  std::string hypothesis;
  std::string evidence;
  bool pass = false;
};

struct GlobalCert {
  double alpha = 0.0;
  double delta = 0.0;
  double sup_bound = 0.0;
  double l1_bound = 0.0;
};

struct RegimePrediction {
  Verdict verdict = Verdict::Undetermined;
  std::optional<GlobalCert> certificate;
  std::vector<ChecklistItem> checklist;
};

struct ManifoldChecks {
  ScReport sc;
  BoundReport bound;
  FkProbe fk;
};

struct U0Props {
  double sup = 0.0;
  double l1 = 0.0;
  bool nontrivial = false;
  std::optional<double> kaplan_w0;         // eigen-weighted mass on the probe ball
  std::optional<double> kaplan_threshold;  // where the reaction overtakes the drain
};

inline U0Props u0_props(const RadialField& u0) {
  U0Props p;
  p.sup = u0.sup();
  p.l1 = u0.mass();
  p.nontrivial = p.sup > 0.0;
  return p;
}

struct ClassifierOptions {
  std::vector<double> delta_grid{0.125, 0.25, 0.5, 1.0, 2.0};
  double S = 8.0;       // window for the convexity and monotonicity scans
  double C_bar = 1.0;   // empirical kernel prefactor feeding the L1 bound
};

namespace detail {

inline bool nondecreasing_on(const Nonlinearity& f, double S) {
  const int samples = 512;
  double prev = 0.0;
  for (int j = 1; j <= samples; ++j) {
    const double v = eval(f, S * j / samples);
    if (v < prev - 1e-12 * (1.0 + std::abs(prev))) return false;
    prev = v;
  }
  return true;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

// The verdict logic follows the theorems exactly: blow-up for all data needs
// the convex minorant's slope strictly above the spectral bottom, global for
// small data needs the linear majorant strictly below it, and the error bar
// of the estimate blocks both within its band.
inline RegimePrediction predict_regime(const SpectralEstimate& spec, const Nonlinearity& f,
                                       const ManifoldChecks& mc, const U0Props& u0,
                                       const ClassifierOptions& opt = {}) {
  RegimePrediction out;
  const HypothesisReport hyp = analyze_hypotheses(f, opt.S, opt.delta_grid);
  const double lam = spec.extrapolated;
  const double err = spec.errbar;

  auto item = [&](const std::string& name, bool pass, const std::string& evidence) {
    out.checklist.push_back({name, evidence, pass});
    return pass;
  };

  // Hypotheses of the all-data blow-up theorem.
  const bool h_mono = item("minorant nondecreasing with h(0)=0",
                           detail::nondecreasing_on(f.h(), opt.S),
                           "sampled on (0, " + detail::fmt(opt.S) + "]");
  const bool h_convex =
      item("minorant convex", hyp.convexity.convex,
           "worst second difference " + detail::fmt(hyp.convexity.worst));
  const bool h_tail = item("reciprocal tail integral finite", hyp.tail.finite,
                           "value " + detail::fmt(hyp.tail.value));
  const bool sc_ok = item("stochastically complete", mc.sc.verdict == ScVerdict::Sufficient,
                          "volume growth slope " + detail::fmt(mc.sc.fitted_slope));
  const bool slope_super =
      item("minorant slope exceeds the spectral bottom", hyp.slope_at_zero > lam + err,
           detail::fmt(hyp.slope_at_zero) + " vs " + detail::fmt(lam) + " +- " +
               detail::fmt(err));
  const bool data_nontrivial =
      item("datum nontrivial", u0.nontrivial, "sup " + detail::fmt(u0.sup));

  if (h_mono && h_convex && h_tail && sc_ok && slope_super && data_nontrivial) {
    out.verdict = Verdict::BlowsUpAllData;
    return out;
  }

  // Hypotheses of the small-data global theorem.
  const bool cert_exists = item("linear majorant certificate exists",
                                hyp.linear_bound.has_value(),
                                hyp.linear_bound
                                    ? "alpha " + detail::fmt(hyp.linear_bound->alpha) +
                                          " on (0, " + detail::fmt(hyp.linear_bound->delta) + "]"
                                    : "ratio f(x)/x unbounded on the grid");
  const bool cert_sub =
      item("majorant slope below the spectral bottom",
           hyp.linear_bound && hyp.linear_bound->alpha > 0.0 &&
               hyp.linear_bound->alpha <= lam - err,
           hyp.linear_bound ? detail::fmt(hyp.linear_bound->alpha) + " vs " + detail::fmt(lam) +
                                  " -+ " + detail::fmt(err)
                            : "no certificate");
  const bool fk_ok = item("Faber-Krahn probe positive", mc.fk.worst > 0.0,
                          "worst product " + detail::fmt(mc.fk.worst));
  bool small_ok = false;
  std::optional<GlobalCert> cert;
  if (cert_exists && cert_sub) {
    const auto [sup_b, l1_b] =
        smallness_bounds(lam, hyp.linear_bound->alpha, hyp.linear_bound->delta, opt.C_bar);
    cert = GlobalCert{hyp.linear_bound->alpha, hyp.linear_bound->delta, sup_b, l1_b};
    small_ok = u0.sup <= sup_b && u0.l1 <= l1_b;
    item("datum within the smallness bounds", small_ok,
         "sup " + detail::fmt(u0.sup) + " <= " + detail::fmt(sup_b) + ", L1 " +
             detail::fmt(u0.l1) + " <= " + detail::fmt(l1_b));
  } else {
    item("datum within the smallness bounds", false, "no admissible certificate");
  }
  if (cert_exists && cert_sub && fk_ok && small_ok) {
    out.verdict = Verdict::GlobalForSmallData;
    out.certificate = cert;
    return out;
  }

  // Large-data blow-up on a fixed ball.
  const bool bound_div =
      item("volume-vs-distance integral diverges", mc.bound.verdict == BoundVerdict::Diverges,
           "doubling ratio " + detail::fmt(mc.bound.doubling_ratio));
  const bool kaplan_ready =
      item("datum exceeds the ball threshold",
           u0.kaplan_w0 && u0.kaplan_threshold && *u0.kaplan_w0 > *u0.kaplan_threshold,
           u0.kaplan_w0 && u0.kaplan_threshold
               ? "w0 " + detail::fmt(*u0.kaplan_w0) + " vs " + detail::fmt(*u0.kaplan_threshold)
               : "no ball probe supplied");
  if (h_convex && h_tail && bound_div && kaplan_ready) {
    out.verdict = Verdict::LargeDataBlowUp;
    return out;
  }

  out.verdict = Verdict::Undetermined;
  return out;
}

struct ContradictionWitness {
  bool applicable = false;
  double gap = 0.0;          // alpha - (lambda1 + eps)
  double T_violation = 0.0;  // first horizon where the decay inequality fails
  std::string note;
};

// Reenacts the proof's closing inequality: a reaction slope above the
// spectral bottom forces e^{gap T} past the ratio of the functional's upper
// bound to the semigroup's lower constant.
inline ContradictionWitness contradiction_witness(const SpectralEstimate& spec, double alpha,
                                                  const LowerBoundReport& lower, double eps,
                                                  double phi0_upper) {
  if (!(eps > 0.0)) throw domain_error("contradiction_witness: eps must be > 0");
  if (!(phi0_upper > 0.0)) throw domain_error("contradiction_witness: upper bound must be > 0");
  ContradictionWitness w;
  w.gap = alpha - (spec.extrapolated + eps);
  if (!lower.holds) {
    w.note = "semigroup lower bound not established";
    return w;
  }
  if (!(lower.c1 > 0.0)) throw domain_error("contradiction_witness: lower constant must be > 0");
  if (w.gap <= 0.0) {
    w.note = "no positive exponent gap";
    return w;
  }
  w.applicable = true;
  const double ratio = phi0_upper / lower.c1;
  w.T_violation = std::max(lower.t0, std::log(std::max(ratio, 1.0)) / w.gap);
  std::ostringstream note;
  note << "e^{" << w.gap << " T} exceeds " << ratio << " past T=" << w.T_violation;
  w.note = note.str();
  return w;
}

}  // namespace rdlab
