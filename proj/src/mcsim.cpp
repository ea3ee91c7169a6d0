#include "cfx/mcsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "cfx/error.hpp"
#include "cfx/quadrature.hpp"
#include "cfx/rng.hpp"

namespace cfx {

Eigen::ArrayXd default_u_grid() { return Eigen::ArrayXd::LinSpaced(11, 0.5, 3.0); }

namespace {

constexpr std::uint64_t kBasePathId = 1ull << 63;

// The part of F that is simulated as discrete marks, plus the moments the
// compensators need. Tempered-stable marks below eps are replaced by a
// Gaussian acting on x.
class JumpLaw {
 public:
  JumpLaw(const JumpSystem& js, double eps) : spec_(js.spec()) {
    if (js.empty()) return;
    const MarkMeasure& F = js.marks();
    QuadOptions opt;
    opt.rel_tol = 1e-10;
    if (const auto* ts = std::get_if<TemperedStable>(&F)) {
      ts_ = *ts;
      eps_ = eps;
      const auto density = [ts](double z) { return ts->c * std::exp(-ts->tempering * z) * std::pow(z, -1.0 - ts->alpha); };
      const double upper = eps + 60.0 / ts->tempering;
      const auto side = [&](auto fn) {
        return integrate_interval([&](double z) { return cplx(fn(z) * density(z), 0.0); }, eps, upper, opt)
            .value.real();
      };
      mass_ = 2.0 * side([](double) { return 1.0; });
      abs1_ = 2.0 * side([](double z) { return z; });
      m1_ = 0.0;
      const double small = integrate_interval(
          [&](double s) {
            const double z = eps * std::exp(-s);
            return cplx(z * z * density(z) * z, 0.0);
          },
          0.0, 60.0, opt).value.real();
      small_var_ = 2.0 * small;
    } else {
      const auto moment = [&](auto fn) {
        return integrate([fn](double z) { return cplx(fn(z), 0.0); }, F, opt).value.real();
      };
      mass_ = total_mass(F);
      m1_ = moment([](double z) { return z; });
      abs1_ = moment([](double z) { return std::abs(z); });
      if (const auto* pm = std::get_if<PointMass>(&F)) point_ = *pm;
      if (const auto* de = std::get_if<DoubleExponential>(&F)) de_ = *de;
    }
    const auto& sh = spec_.gamma_sigma_shape;
    const auto& ex = spec_.intensity_excitation;
    shape_mean_ = sh.a0 * mass_ + sh.a1 * m1_;
    excite_mean_ = ex.b0 * mass_ + ex.b1 * abs1_;
    active_ = mass_ > 0.0 || small_var_ > 0.0;
  }

  bool active() const { return active_; }
  double mass() const { return mass_; }
  double m1() const { return m1_; }
  double shape_mean() const { return shape_mean_; }
  double excite_mean() const { return excite_mean_; }
  double small_var() const { return small_var_; }

  double sample(PathRng& rng) const {
    if (point_) return point_->size;
    if (de_) {
      return rng.uniform() < de_->p_up ? rng.exponential(de_->eta_up) : -rng.exponential(de_->eta_down);
    }
    // Pareto proposal on [eps, inf), tempered by rejection.
    for (;;) {
      const double z = eps_ * std::pow(rng.uniform(), -1.0 / ts_.alpha);
      if (rng.uniform() <= std::exp(-ts_.tempering * (z - eps_))) {
        return rng.uniform() < 0.5 ? z : -z;
      }
    }
  }

 private:
  JumpSpec spec_;
  std::optional<PointMass> point_;
  std::optional<DoubleExponential> de_;
  TemperedStable ts_;
  double eps_ = 0.0;
  double mass_ = 0.0;
  double m1_ = 0.0;
  double abs1_ = 0.0;
  double shape_mean_ = 0.0;
  double excite_mean_ = 0.0;
  double small_var_ = 0.0;
  bool active_ = false;
};

struct SimState {
  double x, sigma, ss, sp, g, h, l;
};

SimState from_model_state(const ModelState& s) {
  return {s.x, s.sigma, s.sigma_sigma, s.sigma_perp, s.gamma_scale, s.gamma_sigma_scale,
          s.intensity_scale};
}

struct Counters {
  std::size_t sigma_reflections = 0;
  std::size_t intensity_reflections = 0;
};

class Stepper {
 public:
  Stepper(const Model& model, const SimOptions& opt)
      : model_(model), spec_(model.spec()), law_(model.jumps(), opt.small_jump_eps), opt_(opt),
        second_bm_(model.uses_second_brownian()) {}

  // One Euler step of length dt starting at time t. on_jump(time, z, dx, dsigma)
  // is called for each accepted mark.
  template <class OnJump>
  void step(SimState& s, double t, double dt, double sqrt_dt, PathRng& bm, PathRng& jr, Counters& c,
            OnJump&& on_jump) const {
    const auto& l2 = spec_.second_layer;
    const auto& js = spec_.jumps;
    const double dW = sqrt_dt * bm.normal();
    const double dWb = second_bm_ ? sqrt_dt * bm.normal() : 0.0;

    SimState n = s;
    n.x += (spec_.drift_alpha - s.l * s.g * law_.m1()) * dt + s.sigma * dW;
    n.sigma += (model_.sigma_drift(s.sigma) - s.l * s.h * law_.shape_mean()) * dt + s.ss * dW + s.sp * dWb;
    n.ss += l2.ss_drift * dt + l2.ss_vol * dW;
    n.sp += l2.perp_drift * dt + l2.perp_vol * dW;
    if (law_.active()) {
      n.g += (js.gamma_drift - js.gamma_jump * s.l * law_.m1()) * dt + js.gamma_vol * dW;
      n.h += js.gamma_sigma_drift * dt + js.gamma_sigma_vol * dW;
      n.l += (js.intensity_kappa * (js.intensity_theta - s.l) - s.l * law_.excite_mean()) * dt +
             js.intensity_vol * dW;
      if (law_.small_var() > 0.0 && s.l > 0.0) {
        n.x += s.g * std::sqrt(s.l * law_.small_var() * dt) * jr.normal();
      }
      // Thinning: candidates at rate mass * B with B >= current intensity,
      // accepted when v <= lambda. The intensity only moves at accepted marks
      // within the step.
      double g = s.g, l = s.l, elapsed = 0.0;
      if (law_.mass() > 0.0) {
        while (l > 0.0) {
          const double bound = 1.5 * l;
          elapsed += jr.exponential(law_.mass() * bound);
          if (elapsed > dt) break;
          const double z = law_.sample(jr);
          const double v = bound * jr.uniform();
          if (v > l) continue;
          const double dx = g * z;
          const double dsig = s.h * js.gamma_sigma_shape(z);
          n.x += dx;
          n.sigma += dsig;
          const double dg = js.gamma_jump * z;
          const double dl = js.intensity_excitation(z);
          g += dg;
          n.g += dg;
          l += dl;
          n.l += dl;
          on_jump(t + elapsed, z, dx, dsig);
        }
      }
    }
    if (n.sigma < opt_.sigma_floor) {
      n.sigma = 2.0 * opt_.sigma_floor - n.sigma;
      ++c.sigma_reflections;
    }
    if (n.l < 0.0) {
      n.l = -n.l;
      ++c.intensity_reflections;
    }
    s = n;
  }

  // x_{T} - x_0 for forward path `path` of length T in `steps` steps.
  double leg(const ModelState& start, double T, std::uint64_t seed, std::uint64_t path,
             Counters& c) const {
    PathRng bm(seed, Stream::Brownian, path);
    PathRng jr(seed, Stream::Jumps, path);
    SimState s = from_model_state(start);
    const int steps = opt_.steps_per_leg;
    const double dt = T / steps;
    const double sq = std::sqrt(dt);
    const auto none = [](double, double, double, double) {};
    for (int k = 0; k < steps; ++k) step(s, k * dt, dt, sq, bm, jr, c, none);
    return s.x - start.x;
  }

 private:
  const Model& model_;
  const ModelSpec& spec_;
  JumpLaw law_;
  SimOptions opt_;
  bool second_bm_;
};

void check_stability(const Counters& c, std::size_t steps, const SimOptions& opt) {
  if (steps > 0 && static_cast<double>(c.sigma_reflections) > opt.max_floor_fraction * steps) {
    throw Error(Errc::UnstableScheme, "sigma floor hit in " + std::to_string(c.sigma_reflections) +
                                          " of " + std::to_string(steps) + " steps");
  }
}

// Runs body(begin, end, acc) over fixed-size chunks of [0, n) and returns the
// per-chunk accumulators in chunk order.
template <class Acc, class Body>
std::vector<Acc> run_chunks(std::size_t n, const SimOptions& opt, const Acc& zero, Body body) {
  const std::size_t chunk = std::max<std::size_t>(1, opt.chunk_paths);
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Acc> out(n_chunks, zero);
  unsigned threads = opt.threads > 0 ? static_cast<unsigned>(opt.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_chunks));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  const auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n_chunks || failed.load()) return;
      try {
        body(k * chunk, std::min(n, (k + 1) * chunk), out[k]);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

struct CfAcc {
  Eigen::ArrayXcd sum_a, sum_b;
  Eigen::ArrayXd sq_a, sq_b, sq_d;
  Counters counters;
};

CfAcc zero_acc(Eigen::Index m) {
  return {Eigen::ArrayXcd::Zero(m), Eigen::ArrayXcd::Zero(m), Eigen::ArrayXd::Zero(m),
          Eigen::ArrayXd::Zero(m), Eigen::ArrayXd::Zero(m), {}};
}

CFGrid finish(const Eigen::ArrayXd& u, double T, const Eigen::ArrayXcd& sum, const Eigen::ArrayXd& sq,
              std::size_t n) {
  CFGrid g;
  g.u = u;
  g.T = T;
  g.n_paths = n;
  g.provenance = "mc";
  const double dn = static_cast<double>(n);
  g.value = sum / dn;
  if (n > 1) {
    const Eigen::ArrayXd var = ((sq / dn) - g.value.abs2()).max(0.0) * (dn / (dn - 1.0));
    g.std_error = (var / dn).sqrt();
  } else {
    g.std_error = Eigen::ArrayXd::Zero(u.size());
  }
  return g;
}

void require_paths(std::size_t n) {
  if (n < 1) throw Error(Errc::DomainError, "n_paths must be >= 1");
}

}  // namespace

Path simulate_path(const Model& model, double horizon, double dt, std::uint64_t seed,
                   const SimOptions& opt) {
  if (!(dt > 0.0) || !(horizon >= dt)) throw Error(Errc::DomainError, "need dt > 0 and horizon >= dt");
  const Stepper stepper(model, opt);
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  Path p;
  p.dt = dt;
  const auto reserve = [&](std::vector<double>& v) { v.reserve(steps + 1); };
  for (auto* v : {&p.times, &p.x, &p.sigma, &p.sigma_sigma, &p.sigma_perp, &p.gamma_scale,
                  &p.gamma_sigma_scale, &p.intensity_scale}) {
    reserve(*v);
  }
  const ModelState init = model.initial_state();
  SimState s = from_model_state(init);
  const auto record = [&](double t) {
    p.times.push_back(t);
    p.x.push_back(s.x);
    p.sigma.push_back(s.sigma);
    p.sigma_sigma.push_back(s.ss);
    p.sigma_perp.push_back(s.sp);
    p.gamma_scale.push_back(s.g);
    p.gamma_sigma_scale.push_back(s.h);
    p.intensity_scale.push_back(s.l);
  };
  record(init.time);
  PathRng bm(seed, Stream::Brownian, kBasePathId);
  PathRng jr(seed, Stream::Jumps, kBasePathId);
  Counters c;
  const double sq = std::sqrt(dt);
  const auto on_jump = [&](double t, double z, double dx, double dsig) {
    p.events.push_back({t, z, dx, dsig});
  };
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = init.time + k * dt;
    stepper.step(s, t, dt, sq, bm, jr, c, on_jump);
    record(init.time + (k + 1) * dt);
  }
  p.sigma_reflections = c.sigma_reflections;
  p.intensity_reflections = c.intensity_reflections;
  check_stability(c, steps, opt);
  return p;
}

ModelState frozen_state(const Model& model, const Path& path, double t) {
  if (path.times.empty()) throw Error(Errc::OutOfRange, "empty path");
  const double t0 = path.times.front();
  const double tol = 1e-9 * std::max(1.0, std::abs(path.times.back()));
  if (t < t0 - tol || t > path.times.back() + tol) {
    throw Error(Errc::OutOfRange, "time outside the path horizon");
  }
  auto k = static_cast<std::size_t>(std::floor((t - t0) / path.dt + 1e-9));
  k = std::min(k, path.size() - 1);
  ModelState s;
  s.time = t;
  s.x = path.x[k];
  s.sigma = path.sigma[k];
  s.alpha = model.spec().drift_alpha;
  s.sigma_sigma = path.sigma_sigma[k];
  s.sigma_perp = path.sigma_perp[k];
  s.gamma_scale = path.gamma_scale[k];
  s.gamma_sigma_scale = path.gamma_sigma_scale[k];
  s.intensity_scale = path.intensity_scale[k];
  return s;
}

CFGrid conditional_cf_mc(const Model& model, const ModelState& state, double T,
                         const Eigen::ArrayXd& u_grid, std::size_t n_paths, std::uint64_t seed,
                         const SimOptions& opt) {
  require_paths(n_paths);
  if (!(T > 0.0)) throw Error(Errc::DomainError, "T must be positive");
  const Stepper stepper(model, opt);
  const Eigen::ArrayXd w = u_grid / std::sqrt(T);
  const auto chunks = run_chunks(n_paths, opt, zero_acc(u_grid.size()),
                                 [&](std::size_t b, std::size_t e, CfAcc& acc) {
                                   for (std::size_t p = b; p < e; ++p) {
                                     const double d = stepper.leg(state, T, seed, p, acc.counters);
                                     for (Eigen::Index j = 0; j < w.size(); ++j) {
                                       const cplx z(std::cos(w[j] * d), std::sin(w[j] * d));
                                       acc.sum_a[j] += z;
                                       acc.sq_a[j] += 1.0;
                                     }
                                   }
                                 });
  CfAcc total = zero_acc(u_grid.size());
  for (const auto& c : chunks) {
    total.sum_a += c.sum_a;
    total.sq_a += c.sq_a;
    total.counters.sigma_reflections += c.counters.sigma_reflections;
  }
  check_stability(total.counters, n_paths * opt.steps_per_leg, opt);
  return finish(u_grid, T, total.sum_a, total.sq_a, n_paths);
}

PairedCF paired_cf_mc(const Model& model, const ModelState& state_a, double T_a,
                      const ModelState& state_b, double T_b, const Eigen::ArrayXd& u_grid,
                      std::size_t n_paths, std::uint64_t seed, const SimOptions& opt) {
  require_paths(n_paths);
  if (!(T_a > 0.0) || !(T_b > 0.0)) throw Error(Errc::DomainError, "tenors must be positive");
  const Stepper stepper(model, opt);
  const Eigen::ArrayXd wa = u_grid / std::sqrt(T_a);
  const Eigen::ArrayXd wb = u_grid / std::sqrt(T_b);
  const auto chunks = run_chunks(n_paths, opt, zero_acc(u_grid.size()),
                                 [&](std::size_t b, std::size_t e, CfAcc& acc) {
                                   for (std::size_t p = b; p < e; ++p) {
                                     const double da = stepper.leg(state_a, T_a, seed, p, acc.counters);
                                     const double db = stepper.leg(state_b, T_b, seed, p, acc.counters);
                                     for (Eigen::Index j = 0; j < wa.size(); ++j) {
                                       const cplx za(std::cos(wa[j] * da), std::sin(wa[j] * da));
                                       const cplx zb(std::cos(wb[j] * db), std::sin(wb[j] * db));
                                       acc.sum_a[j] += za;
                                       acc.sum_b[j] += zb;
                                       acc.sq_a[j] += 1.0;
                                       acc.sq_b[j] += 1.0;
                                       acc.sq_d[j] += std::norm(za - zb);
                                     }
                                   }
                                 });
  CfAcc total = zero_acc(u_grid.size());
  for (const auto& c : chunks) {
    total.sum_a += c.sum_a;
    total.sum_b += c.sum_b;
    total.sq_a += c.sq_a;
    total.sq_b += c.sq_b;
    total.sq_d += c.sq_d;
    total.counters.sigma_reflections += c.counters.sigma_reflections;
  }
  check_stability(total.counters, 2 * n_paths * opt.steps_per_leg, opt);
  PairedCF out;
  out.a = finish(u_grid, T_a, total.sum_a, total.sq_a, n_paths);
  out.b = finish(u_grid, T_b, total.sum_b, total.sq_b, n_paths);
  out.diff = out.a.value - out.b.value;
  const double dn = static_cast<double>(n_paths);
  if (n_paths > 1) {
    const Eigen::ArrayXd var = ((total.sq_d / dn) - out.diff.abs2()).max(0.0) * (dn / (dn - 1.0));
    out.diff_std_error = (var / dn).sqrt();
  } else {
    out.diff_std_error = Eigen::ArrayXd::Zero(u_grid.size());
  }
  return out;
}

std::vector<IncrementCF> increment_cf_mc(const Model& model, const Path& base_path,
                                         const HFGrid& grid, const Eigen::ArrayXd& u_grid,
                                         std::size_t n_paths, std::uint64_t seed,
                                         const SimOptions& opt) {
  if (base_path.times.empty() || grid.t_i(grid.i_max) < base_path.times.front() - 1e-12 ||
      grid.t > base_path.times.back() + 1e-12) {
    throw Error(Errc::GridError, "base path does not cover the grid window");
  }
  std::vector<IncrementCF> out;
  for (int i = 1; i <= grid.i_max; ++i) {
    const ModelState prev = frozen_state(model, base_path, grid.t_i(i - 1));
    const ModelState cur = frozen_state(model, base_path, grid.t_i(i));
    out.push_back({i, paired_cf_mc(model, prev, grid.T_i(i - 1), cur, grid.T_i(i), u_grid, n_paths,
                                   seed, opt)});
  }
  return out;
}

Eigen::ArrayXd terminal_samples(const Model& model, const ModelState& state, double T,
                                std::size_t n_paths, std::uint64_t seed, const SimOptions& opt) {
  require_paths(n_paths);
  const Stepper stepper(model, opt);
  Eigen::ArrayXd x(static_cast<Eigen::Index>(n_paths));
  const auto chunks = run_chunks(n_paths, opt, Counters{},
                                 [&](std::size_t b, std::size_t e, Counters& c) {
                                   for (std::size_t p = b; p < e; ++p) {
                                     x[static_cast<Eigen::Index>(p)] =
                                         state.x + stepper.leg(state, T, seed, p, c);
                                   }
                                 });
  Counters total;
  for (const auto& c : chunks) total.sigma_reflections += c.sigma_reflections;
  check_stability(total, n_paths * opt.steps_per_leg, opt);
  return x;
}

}  // namespace cfx
