#include "cfx/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "cfx/error.hpp"

namespace cfx {
namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for kXgk[1], kXgk[3], kXgk[5], kXgk[7].
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  cplx value;
  double error;
  int depth;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const Integrand& f, double a, double b, int depth) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const cplx fc = f(center);
  cplx kronrod = kWgk[7] * fc;
  cplx gauss = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const cplx sum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss), depth};
}

double target(const QuadOptions& opt, double magnitude) {
  return std::max(opt.abs_tol, opt.rel_tol * magnitude);
}

// Integral of the density-weighted integrand over (0, inf) for one side of a
// tempered-stable measure: log substitution on (0, 1], truncated tail on [1, inf).
QuadResult tempered_side(const Integrand& f, const TemperedStable& ts, double sign,
                         const QuadOptions& opt) {
  const auto density = [&](double z) {
    return ts.c * std::exp(-ts.tempering * z) * std::pow(z, -1.0 - ts.alpha);
  };
  QuadResult inner;
  // z = e^{-s}, dz = e^{-s} ds; unit panels in s.
  const Integrand in_log = [&](double s) {
    const double z = std::exp(-s);
    return f(sign * z) * (density(z) * z);
  };
  double magnitude = 0.0;
  double prev = std::numeric_limits<double>::quiet_NaN();
  int growing = 0;
  constexpr int kMaxPanels = 700;
  for (int k = 0; k < kMaxPanels; ++k) {
    QuadResult panel = integrate_interval(in_log, k, k + 1.0, opt);
    inner += panel;
    const double size = std::abs(panel.value);
    magnitude += size;
    if (k >= 1 && prev > 0.0) {
      const double ratio = size / prev;
      growing = ratio >= 0.98 ? growing + 1 : 0;
      if (growing >= 40) {
        throw Error(Errc::QuadratureFail, "mark integral diverges at z = 0");
      }
      if (k >= 8 && ratio < 0.95) {
        // remaining panels bounded by a geometric series
        const double tail = size * ratio / (1.0 - ratio);
        if (tail <= 0.1 * target(opt, magnitude)) {
          inner.error += tail;
          break;
        }
      }
    }
    if (k >= 8 && size == 0.0 && prev == 0.0) break;
    prev = size;
    if (k == kMaxPanels - 1) inner.converged = false;
  }

  // Outer part: truncate where density * (1+z)^2 falls below the cutoff.
  double upper = 1.0;
  while (density(upper) * (1.0 + upper) * (1.0 + upper) > opt.tail_cutoff && upper < 1e6) {
    upper *= 1.5;
  }
  const Integrand outer_f = [&](double z) { return f(sign * z) * density(z); };
  QuadResult outer = upper > 1.0 ? integrate_interval(outer_f, 1.0, upper, opt) : QuadResult{};
  // |f(z)| <= A (1+z)^2 beyond the cutoff; A sampled at the cut.
  double growth = 0.0;
  for (double z : {upper, 1.5 * upper, 2.0 * upper}) {
    growth = std::max(growth, std::abs(f(sign * z)) / ((1.0 + z) * (1.0 + z)));
  }
  const double lam = ts.tempering;
  const double w = 1.0 / (lam * (1.0 + upper));
  outer.error += growth * density(upper) * (1.0 + upper) * (1.0 + upper) / lam *
                 (1.0 + 2.0 * w + 2.0 * w * w);
  inner += outer;
  return inner;
}

QuadResult exponential_side(const Integrand& f, double weight, double eta, double sign,
                            const QuadOptions& opt) {
  if (weight <= 0.0) return {};
  const auto density = [&](double z) { return weight * eta * std::exp(-eta * z); };
  double upper = std::log(weight * eta / opt.tail_cutoff) / eta;
  upper = std::max(upper, 1.0 / eta);
  upper = std::log(weight * eta * (1.0 + upper) * (1.0 + upper) / opt.tail_cutoff) / eta;
  const Integrand g = [&](double z) { return f(sign * z) * density(z); };
  // a few fixed breakpoints help the oscillatory case
  QuadResult out;
  constexpr int kPieces = 8;
  for (int p = 0; p < kPieces; ++p) {
    out += integrate_interval(g, upper * p / kPieces, upper * (p + 1) / kPieces, opt);
  }
  double growth = 0.0;
  for (double z : {upper, 1.5 * upper, 2.0 * upper}) {
    growth = std::max(growth, std::abs(f(sign * z)) / ((1.0 + z) * (1.0 + z)));
  }
  const double w = 1.0 / (eta * (1.0 + upper));
  out.error += growth * density(upper) * (1.0 + upper) * (1.0 + upper) / eta *
               (1.0 + 2.0 * w + 2.0 * w * w);
  return out;
}

}  // namespace

QuadResult integrate_interval(const Integrand& f, double a, double b, const QuadOptions& opt) {
  if (!(b > a)) return {};
  std::priority_queue<Panel> heap;
  Panel first = gk15(f, a, b, 0);
  cplx total = first.value;
  double error = first.error;
  heap.push(first);
  constexpr std::size_t kMaxPanels = 4000;
  while (error > target(opt, std::abs(total)) && !heap.empty() && heap.size() < kMaxPanels) {
    Panel worst = heap.top();
    if (worst.depth >= opt.max_depth) break;
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gk15(f, worst.a, mid, worst.depth + 1);
    Panel right = gk15(f, mid, worst.b, worst.depth + 1);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // re-sum to drop accumulated rounding from the running updates
  total = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return {total, error, error <= target(opt, std::abs(total))};
}

QuadResult integrate(const Integrand& f, const MarkMeasure& measure, const QuadOptions& opt) {
  QuadResult result;
  double magnitude = 0.0;
  const auto add = [&](const QuadResult& r) {
    result += r;
    magnitude += std::abs(r.value);
  };
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, std::monostate>) {
          // empty measure
        } else if constexpr (std::is_same_v<M, PointMass>) {
          add({m.weight * f(m.size), 0.0, true});
        } else if constexpr (std::is_same_v<M, DoubleExponential>) {
          add(exponential_side(f, m.p_up, m.eta_up, 1.0, opt));
          add(exponential_side(f, 1.0 - m.p_up, m.eta_down, -1.0, opt));
        } else {
          add(tempered_side(f, m, 1.0, opt));
          add(tempered_side(f, m, -1.0, opt));
        }
      },
      measure);
  // Pieces are accepted against their own magnitude; the sum against the total
  // magnitude so that cancellation between wings does not count as failure.
  result.converged = result.error <= std::max(opt.abs_tol, opt.rel_tol * magnitude) * 10.0;
  if (!result.converged && opt.throw_on_fail) {
    throw Error(Errc::QuadratureFail,
                "error estimate " + std::to_string(result.error) + " above tolerance");
  }
  return result;
}

}  // namespace cfx
