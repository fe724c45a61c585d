#include "vsepcf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vsepcf/error.hpp"
#include "vsepcf/quadrature.hpp"

namespace vsepcf {

// ---------------------------------------------------------------- Window

Window::Window(double x0, double y0, double x1, double y1)
    : x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
  if (!(std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) &&
        std::isfinite(y1)))
    throw InvalidArgument("window: corners must be finite");
  if (!(x1 > x0) || !(y1 > y0))
    throw InvalidArgument("window: upper corner must exceed lower corner");
}

double Window::min_side() const noexcept { return std::min(width(), height()); }

double Window::set_covariance(double dx, double dy) const noexcept {
  return std::max(0.0, width() - std::fabs(dx)) *
         std::max(0.0, height() - std::fabs(dy));
}

double Window::iso_set_covariance(double t) const {
  if (t < 0) throw InvalidArgument("iso_set_covariance: t must be >= 0");
  const double lx = width(), ly = height();
  if (t <= std::min(lx, ly)) {
    return lx * ly - (2.0 / std::numbers::pi) * (lx + ly) * t +
           t * t / std::numbers::pi;
  }
  return iso_set_covariance_quadrature(t);
}

double Window::iso_set_covariance_quadrature(double t) const {
  if (t < 0) throw InvalidArgument("iso_set_covariance: t must be >= 0");
  const double lx = width(), ly = height();
  // By symmetry average over θ in [0, π/2]. The integrand
  // (lx − t cosθ)(ly − t sinθ) is non-zero only on [lo, hi] and smooth there.
  const double lo = t > lx ? std::acos(lx / t) : 0.0;
  const double hi = t > ly ? std::asin(ly / t) : std::numbers::pi / 2;
  if (lo >= hi) return 0.0;
  const auto f = [&](double theta) {
    return std::max(0.0, lx - t * std::cos(theta)) *
           std::max(0.0, ly - t * std::sin(theta));
  };
  return integrate(f, lo, hi, 64) / (std::numbers::pi / 2);
}

// ---------------------------------------------------------- PointPattern

PointPattern::PointPattern(Window window, std::vector<Point> points,
                           std::optional<std::vector<double>> intensity)
    : window_(window), points_(std::move(points)), intensity_(std::move(intensity)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!window_.contains(points_[i]))
      throw InvalidArgument("point " + std::to_string(i) + " lies outside the window");
  }
  if (intensity_) {
    if (intensity_->size() != points_.size())
      throw InvalidArgument("intensity column length differs from point count");
    for (std::size_t i = 0; i < intensity_->size(); ++i) {
      const double v = (*intensity_)[i];
      if (!(v > 0) || !std::isfinite(v))
        throw InvalidArgument("intensity at point " + std::to_string(i) +
                              " must be positive and finite");
    }
  }
}

std::span<const double> PointPattern::intensity() const {
  if (!intensity_) throw InvalidArgument("pattern carries no intensity values");
  return *intensity_;
}

// -------------------------------------------------------- IntensityRaster

IntensityRaster::IntensityRaster(Window window, std::size_t nx, std::size_t ny,
                                 std::vector<double> values)
    : window_(window), nx_(nx), ny_(ny), values_(std::move(values)) {
  if (nx == 0 || ny == 0) throw InvalidArgument("raster: empty grid");
  if (values_.size() != nx * ny)
    throw InvalidArgument("raster: value count does not match nx*ny");
  for (double v : values_) {
    if (!(v >= 0) || !std::isfinite(v))
      throw InvalidArgument("raster: intensity values must be finite and >= 0");
  }
}

double IntensityRaster::at(const Point& p) const noexcept {
  if (!window_.contains(p)) return 0.0;
  auto ix = static_cast<std::size_t>((p.x - window_.x0()) / cell_width());
  auto iy = static_cast<std::size_t>((p.y - window_.y0()) / cell_height());
  ix = std::min(ix, nx_ - 1);
  iy = std::min(iy, ny_ - 1);
  return values_[iy * nx_ + ix];
}

// --------------------------------------------------------- IntensityModel

IntensityModel IntensityModel::constant(double rho) {
  if (!(rho > 0) || !std::isfinite(rho))
    throw InvalidArgument("constant intensity must be positive and finite");
  return IntensityModel(Kind::constant, rho, std::nullopt);
}

IntensityModel IntensityModel::per_point(std::optional<IntensityRaster> raster) {
  return IntensityModel(Kind::per_point, 0.0, std::move(raster));
}

double IntensityModel::at(const PointPattern& pattern, std::size_t i) const {
  if (kind_ == Kind::constant) return rho_;
  if (!pattern.has_intensity())
    throw InvalidArgument("per-point intensity requested but the pattern has none");
  return pattern.intensity()[i];
}

IntensityModel IntensityModel::scaled(double c) const {
  if (kind_ != Kind::constant)
    throw InvalidArgument("only a constant intensity can be rescaled");
  return constant(rho_ * c);
}

// --------------------------------------------------------------- PairList

PairList::PairList(double r_lo, double r_hi, std::vector<Pair> pairs)
    : r_lo_(r_lo), r_hi_(r_hi), pairs_(std::move(pairs)) {
  std::sort(pairs_.begin(), pairs_.end(), [](const Pair& a, const Pair& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  partner_.resize(pairs_.size());
  const auto less = [](const Pair& p, std::pair<std::uint32_t, std::uint32_t> key) {
    return p.i != key.first ? p.i < key.first : p.j < key.second;
  };
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const auto key = std::make_pair(pairs_[k].j, pairs_[k].i);
    auto it = std::lower_bound(pairs_.begin(), pairs_.end(), key, less);
    if (it == pairs_.end() || it->i != key.first || it->j != key.second)
      throw InvalidArgument("pair list is not symmetric");
    partner_[k] = static_cast<std::size_t>(it - pairs_.begin());
    if (pairs_[k].i < pairs_[k].j) unordered_.push_back(k);
  }
}

PairList close_pairs(const PointPattern& pattern, double r_lo, double r_hi,
                     const IntensityModel& intensity) {
  if (!(r_lo >= 0) || !(r_hi > r_lo))
    throw InvalidArgument("close_pairs: need 0 <= r_lo < r_hi");
  const Window& w = pattern.window();
  if (r_hi > w.min_side())
    throw InvalidArgument("close_pairs: r_hi exceeds the smaller window side");

  const std::size_t n = pattern.size();
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) rho[i] = intensity.at(pattern, i);

  // Bucket points into cells of side slightly above r_hi.
  constexpr std::size_t max_cells_per_axis = 4096;
  const auto cells_along = [&](double len) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(len / (r_hi * (1 + 1e-9))), 1,
                                   max_cells_per_axis);
  };
  const std::size_t nx = cells_along(w.width());
  const std::size_t ny = cells_along(w.height());
  const double cw = w.width() / nx, ch = w.height() / ny;
  // Neighbourhood reach in cells; 1 unless the cell count was capped.
  const auto reach_x = static_cast<std::size_t>(std::ceil(r_hi / cw));
  const auto reach_y = static_cast<std::size_t>(std::ceil(r_hi / ch));
  const auto cell_of = [&](const Point& p) {
    const auto ix = std::min(static_cast<std::size_t>((p.x - w.x0()) / cw), nx - 1);
    const auto iy = std::min(static_cast<std::size_t>((p.y - w.y0()) / ch), ny - 1);
    return std::make_pair(ix, iy);
  };

  // Counting sort of point indices by cell.
  std::vector<std::size_t> start(nx * ny + 1, 0);
  std::vector<std::size_t> cell_index(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [ix, iy] = cell_of(pattern[i]);
    cell_index[i] = iy * nx + ix;
    ++start[cell_index[i] + 1];
  }
  for (std::size_t c = 0; c < nx * ny; ++c) start[c + 1] += start[c];
  std::vector<std::uint32_t> members(n);
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < n; ++i)
      members[fill[cell_index[i]]++] = static_cast<std::uint32_t>(i);
  }

  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& u = pattern[i];
    const std::size_t ix = cell_index[i] % nx, iy = cell_index[i] / nx;
    const std::size_t cy_lo = iy >= reach_y ? iy - reach_y : 0;
    const std::size_t cx_lo = ix >= reach_x ? ix - reach_x : 0;
    const std::size_t cy_hi = std::min(iy + reach_y, ny - 1);
    const std::size_t cx_hi = std::min(ix + reach_x, nx - 1);
    for (std::size_t cy = cy_lo; cy <= cy_hi; ++cy) {
      for (std::size_t cx = cx_lo; cx <= cx_hi; ++cx) {
        const std::size_t c = cy * nx + cx;
        for (std::size_t m = start[c]; m < start[c + 1]; ++m) {
          const std::uint32_t j = members[m];
          if (j == i) continue;
          const Point& v = pattern[j];
          const double dx = v.x - u.x, dy = v.y - u.y;
          const double t = std::sqrt(dx * dx + dy * dy);
          if (t < r_lo || t > r_hi) continue;
          const double overlap = w.set_covariance(dx, dy);
          if (!(overlap > 0))
            throw InvalidArgument("close_pairs: zero window overlap for an in-range pair");
          pairs.push_back({static_cast<std::uint32_t>(i), j, t, dx, dy,
                           1.0 / (rho[i] * rho[j] * overlap)});
        }
      }
    }
  }
  return PairList(r_lo, r_hi, std::move(pairs));
}

}  // namespace vsepcf
