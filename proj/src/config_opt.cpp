#include "corrdet/config_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace corrdet {

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) throw InvalidArgument("linspace: count must be >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
  out.back() = hi;
  return out;
}

double optimal_correlation_equation(const FieldParams& params, double a) {
  const ScalarInnovations inn = scalar_riccati_fixed_point(params, CorrelationCoefficient(a));
  const double snr = params.snr();
  const double r = inn.r_e / params.noise_variance;
  const double a2 = a * a;
  const double lead = 1.0 + a2 + snr * (1.0 - a2);
  return lead * lead - 2.0 * (r + a2 * a2 / r);
}

namespace {

double exponent_at(const FieldParams& params, double a) {
  return scalar_exponent_at(params, CorrelationCoefficient(a)).exponent_per_sensor;
}

// Ascending scan points: uniform on [0, 0.999] plus 1 - 10^-k up to k = 6.
std::vector<double> bracket_scan_grid() {
  std::vector<double> grid = linspace(0.0, 0.999, 1000);
  for (double k = 3.25; k <= 6.0 + 1e-12; k += 0.25) grid.push_back(1.0 - std::pow(10.0, -k));
  return grid;
}

}  // namespace

OptimalSpacingResult optimal_correlation(const FieldParams& params) {
  params.validate();
  const double snr = params.snr();
  if (!(snr < 1.0)) throw DomainError("optimal correlation is defined only for SNR < 1");

  const std::vector<double> grid = bracket_scan_grid();
  std::vector<double> values;
  values.reserve(grid.size());
  double lo = -1, hi = -1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values.push_back(optimal_correlation_equation(params, grid[i]));
    if (i > 0 && values[i - 1] < 0.0 && values[i] >= 0.0) {
      lo = grid[i - 1];
      hi = grid[i];
      break;
    }
  }
  if (lo < 0.0) {
    std::vector<double> scanned(grid.begin(), grid.begin() + values.size());
    throw RootNotFound("no sign change of the optimality equation on (0, 1)", scanned, values);
  }

  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (optimal_correlation_equation(params, mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }

  OptimalSpacingResult out;
  out.snr = snr;
  out.a_star = 0.5 * (lo + hi);
  out.residual = optimal_correlation_equation(params, out.a_star);
  out.exponent_at_optimum = exponent_at(params, out.a_star);
  out.delta_star = params.diffusion_rate > 0.0 ? -std::log(out.a_star) / params.diffusion_rate
                                               : std::numeric_limits<double>::infinity();
  if (!(std::abs(out.residual) < 1e-10))
    throw NumericFailure("optimality equation residual too large at the bracketed root",
                         out.residual);

  // Cross-check against the direct argmax of K.
  out.grid_step = 1e-3;
  std::vector<double> a_grid = linspace(0.001, 0.999, 999);
  std::vector<double> k_grid(a_grid.size());
  for (std::size_t i = 0; i < a_grid.size(); ++i) k_grid[i] = exponent_at(params, a_grid[i]);
  out.grid_argmax = a_grid[tie_broken_argmax(k_grid)];
  if (std::abs(out.grid_argmax - out.a_star) > out.grid_step + 1e-12)
    throw NumericFailure("root of the optimality equation disagrees with the grid argmax of K",
                         out.grid_argmax - out.a_star);
  const double delta = std::min(1e-3, 0.5 * (1.0 - out.a_star));
  const double k_lo = exponent_at(params, out.a_star - delta);
  const double k_hi = exponent_at(params, out.a_star + delta);
  const double slack = 1e-14 * std::max(1.0, out.exponent_at_optimum);
  if (out.exponent_at_optimum + slack < std::max(k_lo, k_hi))
    throw NumericFailure("root of the optimality equation is not a local maximum of K",
                         std::max(k_lo, k_hi) - out.exponent_at_optimum);
  return out;
}

OptimalSpacingResult optimal_spacing(const FieldParams& params) {
  params.validate();
  if (!(params.diffusion_rate > 0.0))
    throw DomainError("optimal spacing needs diffusion_rate > 0");
  return optimal_correlation(params);
}

std::vector<OptimalSpacingResult> optimal_spacing_curve(double diffusion_rate,
                                                        const std::vector<double>& snr_db,
                                                        double stationary_variance) {
  std::vector<OptimalSpacingResult> out;
  out.reserve(snr_db.size());
  for (double db : snr_db)
    out.push_back(optimal_spacing(field_params_from_snr_db(diffusion_rate, db, stationary_variance)));
  return out;
}

// ---------------------------------------------------------------------------

std::size_t tie_broken_argmax(const std::vector<double>& values) {
  if (values.empty()) throw InvalidArgument("argmax of an empty sweep");
  const double best = *std::max_element(values.begin(), values.end());
  const double tol = 1e-9 * std::max(std::abs(best), 1e-300);
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= best - tol) return i;
  return 0;
}

namespace {

void check_strictly_increasing(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw InvalidArgument(std::string(what) + ": grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw InvalidArgument(std::string(what) + ": grid must be strictly increasing");
}

SweepPoint make_point(std::vector<double> coords, const ExponentResult& r, int n_total) {
  SweepPoint pt;
  pt.coords = std::move(coords);
  pt.k_per_sensor = r.exponent_per_sensor;
  pt.k_per_block = r.exponent_per_block;
  pt.approx_miss_prob = std::exp(-n_total * r.exponent_per_sensor);
  return pt;
}

void finish(SweepResult& s) {
  std::vector<double> k(s.values.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = s.values[i].k_per_sensor;
  s.argmax = tie_broken_argmax(k);
}

}  // namespace

SweepResult correlation_sweep(const FieldParams& params, const std::vector<double>& a_grid,
                              int n_total) {
  params.validate();
  check_strictly_increasing(a_grid, "correlation sweep");
  SweepResult s;
  s.axis = "a";
  s.coord_names = {"a"};
  s.n_total = n_total;
  s.params = params;
  for (double a : a_grid)
    s.values.push_back(make_point({a}, scalar_exponent_at(params, CorrelationCoefficient(a)), n_total));
  finish(s);
  return s;
}

SweepResult snr_sweep(double a, const std::vector<double>& snr_grid, int n_total,
                      double stationary_variance) {
  check_strictly_increasing(snr_grid, "SNR sweep");
  SweepResult s;
  s.axis = "snr";
  s.coord_names = {"snr"};
  s.n_total = n_total;
  s.params = make_field_params(0.0, stationary_variance, stationary_variance);
  for (double snr : snr_grid) {
    const FieldParams p = make_field_params(0.0, stationary_variance, stationary_variance / snr);
    s.values.push_back(make_point({snr}, scalar_exponent_at(p, CorrelationCoefficient(a)), n_total));
  }
  finish(s);
  return s;
}

SweepResult field_size_sweep(const FieldParams& params, double field_length,
                             const std::vector<int>& n_grid) {
  params.validate();
  if (!(field_length > 0.0)) throw InvalidArgument("field_length must be > 0");
  SweepResult s;
  s.axis = "n";
  s.coord_names = {"n"};
  s.params = params;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1 || (i > 0 && n_grid[i] <= n_grid[i - 1]))
      throw InvalidArgument("field size sweep: n grid must be positive and strictly increasing");
    const int n = n_grid[i];
    s.values.push_back(
        make_point({double(n)}, scalar_exponent(params, field_length / n), n));
  }
  s.n_total = n_grid.empty() ? 0 : n_grid.back();
  finish(s);
  return s;
}

SweepResult cluster_size_sweep(const FieldParams& params, double field_length, int n_total,
                               const std::vector<int>& sizes) {
  params.validate();
  if (!(field_length > 0.0)) throw InvalidArgument("field_length must be > 0");
  if (n_total < 1) throw InvalidArgument("n_total must be >= 1");
  SweepResult s;
  s.axis = "cluster";
  s.coord_names = {"M"};
  s.n_total = n_total;
  s.params = params;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const int m = sizes[i];
    if (m < 1 || n_total % m != 0)
      throw InvalidArgument("cluster size " + std::to_string(m) + " does not divide n_total " +
                            std::to_string(n_total));
    if (i > 0 && m <= sizes[i - 1])
      throw InvalidArgument("cluster sizes must be strictly increasing");
    const int clusters = n_total / m;
    const ClusteredLayout layout{m, clusters, field_length / clusters};
    s.values.push_back(make_point({double(m)}, clustering_exponent(params, layout), n_total));
  }
  if (s.values.empty()) throw InvalidArgument("cluster size sweep needs at least one size");
  finish(s);
  return s;
}

std::string classify_m2(double d1, double period, double tol) {
  if (d1 <= tol || d1 >= period - tol) return "clustering";
  if (std::abs(d1 - 0.5 * period) <= tol) return "uniform";
  return "intermediate";
}

SweepResult offset_sweep_m2(const FieldParams& params, double period, int grid_points,
                            int n_total) {
  params.validate();
  if (!(period > 0.0)) throw InvalidArgument("period must be > 0");
  if (grid_points < 3) throw InvalidArgument("grid_points must be >= 3");
  SweepResult s;
  s.axis = "delta1";
  s.coord_names = {"delta1"};
  s.n_total = n_total;
  s.params = params;
  for (double d1 : linspace(0.0, period, grid_points)) {
    const PeriodicLayout layout{{d1, std::max(0.0, period - d1)}, 1};
    s.values.push_back(make_point({d1}, vector_exponent(params, layout), n_total));
  }
  finish(s);
  const double step = period / (grid_points - 1);
  s.classification = classify_m2(s.best().coords[0], period, 0.5 * step);
  return s;
}

std::vector<double> m3_offsets(double x2, double x3, double period) {
  double p[3] = {0.0, x2, x3};
  std::sort(p, p + 3);
  return {p[1] - p[0], p[2] - p[1], std::max(0.0, period - p[2])};
}

std::string classify_m3(double x2, double x3, double period, double tol) {
  const std::vector<double> gaps = m3_offsets(x2, x3, period);
  std::vector<double> nonzero;
  for (double g : gaps)
    if (g > tol) nonzero.push_back(g);
  switch (nonzero.size()) {
    case 0:
    case 1:
      return "clustering";
    case 2:
      return std::abs(nonzero[0] - nonzero[1]) <= 2.0 * tol ? "two_plus_one"
                                                             : "two_plus_one_offcenter";
    default:
      for (double g : gaps)
        if (std::abs(g - period / 3.0) > tol) return "irregular";
      return "uniform";
  }
}

SweepResult offset_sweep_m3(const FieldParams& params, double period, int grid_points,
                            int n_total) {
  params.validate();
  if (!(period > 0.0)) throw InvalidArgument("period must be > 0");
  if (grid_points < 3) throw InvalidArgument("grid_points must be >= 3");
  SweepResult s;
  s.axis = "x2x3";
  s.coord_names = {"x2", "x3"};
  s.n_total = n_total;
  s.params = params;
  const std::vector<double> grid = linspace(0.0, period, grid_points);
  s.values.reserve(grid.size() * grid.size());
  for (double x2 : grid)
    for (double x3 : grid) {
      const PeriodicLayout layout{m3_offsets(x2, x3, period), 1};
      s.values.push_back(make_point({x2, x3}, vector_exponent(params, layout), n_total));
    }
  finish(s);
  const double step = period / (grid_points - 1);
  s.classification = classify_m3(s.best().coords[0], s.best().coords[1], period, 0.5 * step);
  return s;
}

}  // namespace corrdet
