#include "reachpred/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace reachpred {

double signed_distance_danger_zone(const RelativeState& x, double capture_radius) {
  if (!(capture_radius > 0.0)) throw std::invalid_argument("capture radius must be positive");
  return std::hypot(x.xr, x.yr) - capture_radius;
}

namespace {

struct Stencil {
  double pm[3];
  double pp[3];
};

/// One-sided differences at every node; ghost nodes on the open axes use linear
/// extrapolation, which makes the outward difference equal the inward one.
template <class NodeUpdate>
double sweep(const Grid3& g, const std::vector<double>& v, std::vector<double>& out,
             NodeUpdate update) {
  const std::size_t nx = g.dims[0], ny = g.dims[1], nt = g.dims[2];
  const double inv[3] = {1.0 / g.spacing(0), 1.0 / g.spacing(1), 1.0 / g.spacing(2)};
  const std::size_t sx = ny * nt, sy = nt;
  double residual = 0.0;

#pragma omp parallel for schedule(static) reduction(max : residual)
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t k = 0; k < nt; ++k) {
        const std::size_t c = i * sx + j * sy + k;
        const double vc = v[c];
        Stencil s;
        if (i == 0) {
          s.pp[0] = (v[c + sx] - vc) * inv[0];
          s.pm[0] = s.pp[0];
        } else if (i == nx - 1) {
          s.pm[0] = (vc - v[c - sx]) * inv[0];
          s.pp[0] = s.pm[0];
        } else {
          s.pm[0] = (vc - v[c - sx]) * inv[0];
          s.pp[0] = (v[c + sx] - vc) * inv[0];
        }
        if (j == 0) {
          s.pp[1] = (v[c + sy] - vc) * inv[1];
          s.pm[1] = s.pp[1];
        } else if (j == ny - 1) {
          s.pm[1] = (vc - v[c - sy]) * inv[1];
          s.pp[1] = s.pm[1];
        } else {
          s.pm[1] = (vc - v[c - sy]) * inv[1];
          s.pp[1] = (v[c + sy] - vc) * inv[1];
        }
        const std::size_t km = (k == 0) ? c + nt - 1 : c - 1;
        const std::size_t kp = (k == nt - 1) ? c + 1 - nt : c + 1;
        s.pm[2] = (vc - v[km]) * inv[2];
        s.pp[2] = (v[kp] - vc) * inv[2];

        const double nv = update(i, j, k, vc, s);
        out[c] = nv;
        residual = std::max(residual, std::abs(nv - vc));
      }
    }
  }
  return residual;
}

struct AxisTables {
  std::vector<double> x, y, cos_t, sin_t;
  explicit AxisTables(const Grid3& g) {
    for (std::size_t i = 0; i < g.dims[0]; ++i) x.push_back(g.coord(0, i));
    for (std::size_t j = 0; j < g.dims[1]; ++j) y.push_back(g.coord(1, j));
    for (std::size_t k = 0; k < g.dims[2]; ++k) {
      cos_t.push_back(std::cos(g.coord(2, k)));
      sin_t.push_back(std::sin(g.coord(2, k)));
    }
  }
};

double max_abs(double a, double b) { return std::max(std::abs(a), std::abs(b)); }

}  // namespace

BrsResult solve_brs(const Grid3& grid, const DubinsParams& params, const BrsOptions& opts) {
  grid.validate();
  params.validate();
  if (!(opts.capture_radius > 0.0)) throw std::invalid_argument("capture radius must be positive");
  const double need = 3.0 * opts.capture_radius;
  for (int a = 0; a < 2; ++a) {
    if (grid.mins[a] > -need || grid.maxs[a] < need)
      throw GridTooSmall("solve_brs: grid must cover the danger zone with a margin of 2 capture radii");
  }

  const AxisTables t(grid);
  const double v = params.speed;
  const double w_lo = params.omega_min, w_hi = params.omega_max;
  const double w_abs = max_abs(w_lo, w_hi);
  const double w_span = w_hi - w_lo;

  ValueFunction vf;
  vf.grid = grid;
  vf.kind = TubeKind::backward;
  vf.params = params;
  vf.capture_radius = opts.capture_radius;
  vf.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.dims[0]; ++i)
    for (std::size_t j = 0; j < grid.dims[1]; ++j)
      for (std::size_t k = 0; k < grid.dims[2]; ++k)
        vf.values[grid.index(i, j, k)] = std::hypot(t.x[i], t.y[j]) - opts.capture_radius;

  // Dissipation bounds depend only on the node, so the CFL step is fixed.
  double a0 = 0.0, a1 = 0.0;
  for (std::size_t i = 0; i < grid.dims[0]; ++i)
    for (std::size_t j = 0; j < grid.dims[1]; ++j)
      for (std::size_t k = 0; k < grid.dims[2]; ++k) {
        a0 = std::max(a0, std::abs(-v + v * t.cos_t[k]) + w_abs * std::abs(t.y[j]));
        a1 = std::max(a1, v * std::abs(t.sin_t[k]) + w_abs * std::abs(t.x[i]));
      }
  const double dt = opts.cfl / (a0 / grid.spacing(0) + a1 / grid.spacing(1) + w_span / grid.spacing(2));

  auto update = [&](std::size_t i, std::size_t j, std::size_t k, double vc, const Stencil& s) {
    const double x = t.x[i], y = t.y[j], c = t.cos_t[k], sn = t.sin_t[k];
    const double p0 = 0.5 * (s.pm[0] + s.pp[0]);
    const double p1 = 0.5 * (s.pm[1] + s.pp[1]);
    const double p2 = 0.5 * (s.pm[2] + s.pp[2]);
    const double drift0 = -v + v * c;
    const double drift1 = v * sn;
    const double evade = p0 * y - p1 * x - p2;
    const double ham = p0 * drift0 + p1 * drift1 + std::max(w_lo * evade, w_hi * evade) +
                       std::min(w_lo * p2, w_hi * p2);
    const double alpha0 = std::abs(drift0) + w_abs * std::abs(y);
    const double alpha1 = std::abs(drift1) + w_abs * std::abs(x);
    const double diss = 0.5 * (alpha0 * (s.pp[0] - s.pm[0]) + alpha1 * (s.pp[1] - s.pm[1]) +
                               w_span * (s.pp[2] - s.pm[2]));
    return vc + dt * std::min(0.0, ham + diss);
  };

  BrsResult res;
  res.dt = dt;
  std::vector<double> next(vf.values.size());
  for (int it = 1; it <= opts.max_iters; ++it) {
    res.residual = sweep(grid, vf.values, next, update);
    vf.values.swap(next);
    res.iterations = it;
    if (res.residual < opts.tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) vf.horizon = res.iterations * dt;
  res.vf = std::move(vf);
  return res;
}

void BoundedInterval::validate(const DubinsParams& params) const {
  constexpr double slack = 1e-12;
  if (!(params.omega_min - slack <= lo && lo <= hi && hi <= params.omega_max + slack))
    throw std::invalid_argument("BoundedInterval [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                "] violates omega_min <= lo <= hi <= omega_max");
}

std::vector<double> initial_ball(const Grid3& grid, const VehicleState& initial, double radius_cells) {
  const double h[3] = {grid.spacing(0), grid.spacing(1), grid.spacing(2)};
  const double unit = grid.cell();
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.dims[0]; ++i) {
    const double dx = (grid.coord(0, i) - initial.px) / h[0];
    for (std::size_t j = 0; j < grid.dims[1]; ++j) {
      const double dy = (grid.coord(1, j) - initial.py) / h[1];
      for (std::size_t k = 0; k < grid.dims[2]; ++k) {
        const double dp = wrap_angle(grid.coord(2, k) - initial.psi) / h[2];
        out[grid.index(i, j, k)] = unit * (std::sqrt(dx * dx + dy * dy + dp * dp) - radius_cells);
      }
    }
  }
  return out;
}

namespace {

bool inside_box(const Grid3& g, const VehicleState& s) {
  return s.px >= g.mins[0] && s.px <= g.maxs[0] && s.py >= g.mins[1] && s.py <= g.maxs[1];
}

/// Samples of [lo, hi]: the end points plus every lattice point strictly inside.
std::vector<double> control_samples(double lo, double hi, double lattice) {
  std::vector<double> u{lo};
  for (double q = std::floor(lo / lattice) + 1.0; q * lattice < hi - 1e-12; q += 1.0) {
    const double w = q * lattice;
    if (w > lo + 1e-12) u.push_back(w);
  }
  if (hi > lo) u.push_back(hi);
  return u;
}

/// Where a vehicle that ends at heading `theta` after driving `s` with turn rate
/// `u` started, relative to its end point.
std::array<double, 3> backtrack(double theta, double u, double s, double v) {
  const double theta0 = theta - u * s;
  if (std::abs(u) < 1e-12) return {-v * s * std::cos(theta), -v * s * std::sin(theta), 0.0};
  return {-(v / u) * (std::sin(theta) - std::sin(theta0)), (v / u) * (std::cos(theta) - std::cos(theta0)),
          -u * s};
}

struct Shift {
  long di, dj;
  std::size_t k0, k1;
  double wx, wy, wt;
};

Shift make_shift(const Grid3& g, std::size_t k, const std::array<double, 3>& d) {
  const double fx = d[0] / g.spacing(0), fy = d[1] / g.spacing(1);
  const double ft = d[2] / g.spacing(2);
  Shift sh;
  sh.di = static_cast<long>(std::floor(fx));
  sh.dj = static_cast<long>(std::floor(fy));
  sh.wx = fx - std::floor(fx);
  sh.wy = fy - std::floor(fy);
  const double kk = static_cast<double>(k) + ft;
  const double kf = std::floor(kk);
  sh.wt = kk - kf;
  const long nt = static_cast<long>(g.dims[2]);
  const long k0 = ((static_cast<long>(kf) % nt) + nt) % nt;
  sh.k0 = static_cast<std::size_t>(k0);
  sh.k1 = static_cast<std::size_t>((k0 + 1) % nt);
  return sh;
}

/// out[n] = min(out[n], min over shifts of the interpolated source value).
void apply_min(const Grid3& g, const std::vector<double>& v, const std::vector<std::vector<Shift>>& shifts,
               std::vector<double>& out) {
  const long nx = static_cast<long>(g.dims[0]), ny = static_cast<long>(g.dims[1]);
  const std::size_t nt = g.dims[2];
  auto clampi = [](long a, long n) { return static_cast<std::size_t>(std::clamp(a, 0L, n - 1)); };
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nx; ++i) {
    for (long j = 0; j < ny; ++j) {
      const std::size_t base = (static_cast<std::size_t>(i) * ny + j) * nt;
      for (std::size_t k = 0; k < nt; ++k) {
        double best = out[base + k];
        for (const Shift& sh : shifts[k]) {
          const std::size_t i0 = clampi(i + sh.di, nx), i1 = clampi(i + sh.di + 1, nx);
          const std::size_t j0 = clampi(j + sh.dj, ny), j1 = clampi(j + sh.dj + 1, ny);
          auto plane = [&](std::size_t kk) {
            const double a = v[(i0 * ny + j0) * nt + kk], b = v[(i0 * ny + j1) * nt + kk];
            const double c = v[(i1 * ny + j0) * nt + kk], d = v[(i1 * ny + j1) * nt + kk];
            const double lo = a + sh.wy * (b - a), hi = c + sh.wy * (d - c);
            return lo + sh.wx * (hi - lo);
          };
          const double p0 = plane(sh.k0), p1 = plane(sh.k1);
          best = std::min(best, p0 + sh.wt * (p1 - p0));
        }
        out[base + k] = best;
      }
    }
  }
}

template <class OnBoundary>
ValueFunction evolve_forward(const Grid3& grid, const VehicleState& initial, const TubeSchedule& schedule,
                             const DubinsParams& params, const FrsOptions& opts, bool tube,
                             OnBoundary on_boundary) {
  grid.validate();
  params.validate();
  if (schedule.empty()) throw std::invalid_argument("solve_frs: schedule is empty");
  if (!inside_box(grid, initial)) throw std::invalid_argument("solve_frs: initial state outside the grid");
  if (!(opts.max_step > 0.0) || opts.tube_samples < 1 || !(opts.control_lattice > 0.0))
    throw std::invalid_argument("solve_frs: bad solver options");
  for (const auto& e : schedule) {
    if (!(e.duration >= 0.0)) throw std::invalid_argument("solve_frs: negative interval duration");
    e.bounds.validate(params);
  }

  const double v = params.speed;
  const std::size_t nt = grid.dims[2];

  ValueFunction vf;
  vf.grid = grid;
  vf.kind = TubeKind::forward;
  vf.params = params;
  vf.capture_radius = opts.initial_radius_cells * grid.cell();
  vf.values = initial_ball(grid, initial, opts.initial_radius_cells);
  std::vector<double> state = vf.values;
  std::vector<double> next(state.size());
  double elapsed = 0.0;
  on_boundary(vf);

  for (const auto& e : schedule) {
    if (e.duration > 0.0) {
      const int steps = std::max(1, static_cast<int>(std::ceil(e.duration / opts.max_step - 1e-9)));
      const double dt = e.duration / steps;
      const auto us = control_samples(e.bounds.lo, e.bounds.hi, opts.control_lattice);
      // One shift table per sub-time; the last one advances the state.
      std::vector<std::vector<std::vector<Shift>>> tables(opts.tube_samples);
      for (int m = 0; m < opts.tube_samples; ++m) {
        const double s = dt * (m + 1) / opts.tube_samples;
        tables[m].resize(nt);
        for (std::size_t k = 0; k < nt; ++k)
          for (double u : us) tables[m][k].push_back(make_shift(grid, k, backtrack(grid.coord(2, k), u, s, v)));
      }
      for (int step = 0; step < steps; ++step) {
        std::fill(next.begin(), next.end(), std::numeric_limits<double>::infinity());
        apply_min(grid, state, tables.back(), next);
        if (tube) {
          for (int m = 0; m + 1 < opts.tube_samples; ++m) apply_min(grid, state, tables[m], vf.values);
          for (std::size_t n = 0; n < next.size(); ++n) vf.values[n] = std::min(vf.values[n], next[n]);
        }
        state.swap(next);
      }
      elapsed += e.duration;
    }
    if (!tube) vf.values = state;
    vf.horizon = elapsed;
    on_boundary(vf);
  }
  vf.horizon = elapsed;
  return vf;
}

}  // namespace

ValueFunction solve_frs(const Grid3& grid, const VehicleState& initial, const TubeSchedule& schedule,
                        const DubinsParams& params, const FrsOptions& opts) {
  return evolve_forward(grid, initial, schedule, params, opts, true, [](const ValueFunction&) {});
}

std::vector<ValueFunction> solve_frs_slices(const Grid3& grid, const VehicleState& initial,
                                            const TubeSchedule& schedule, const DubinsParams& params,
                                            const FrsOptions& opts) {
  std::vector<ValueFunction> slices;
  evolve_forward(grid, initial, schedule, params, opts, false,
                 [&](const ValueFunction& vf) { slices.push_back(vf); });
  return slices;
}

Lookup contains_lookup(const ValueFunction& vf, const VehicleState& s) {
  return value_at(vf, s.px, s.py, s.psi);
}

bool contains_state(const ValueFunction& vf, const VehicleState& s) {
  const Lookup l = contains_lookup(vf, s);
  return l.in_bounds && l.value <= 0.0;
}

SubsetReport subset_report(const ValueFunction& inner, const ValueFunction& outer, double tol) {
  if (!(inner.grid == outer.grid)) throw std::invalid_argument("is_subset: grid mismatch");
  SubsetReport r;
  for (std::size_t n = 0; n < inner.values.size(); ++n) {
    if (inner.values[n] <= 0.0 && outer.values[n] > tol) {
      r.ok = false;
      ++r.violations;
      if (r.offending.size() < 16) r.offending.push_back(n);
    }
  }
  return r;
}

bool is_subset(const ValueFunction& inner, const ValueFunction& outer, double tol) {
  return subset_report(inner, outer, tol).ok;
}

}  // namespace reachpred
