#pragma once

/**
 * @file geometry.hpp
 * @brief Rectangular observation windows, planar point patterns, intensity
 *        models and fixed-radius pair enumeration with translation edge
 *        correction.
 */

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace vsepcf {

struct Point {
  double x = 0;
  double y = 0;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
class Window {
public:
  Window(double x0, double y0, double x1, double y1);

  static Window unit_square() { return {0, 0, 1, 1}; }
  static Window square(double side) { return {0, 0, side, side}; }

  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  double x1() const noexcept { return x1_; }
  double y1() const noexcept { return y1_; }
  double width() const noexcept { return x1_ - x0_; }
  double height() const noexcept { return y1_ - y0_; }
  double area() const noexcept { return width() * height(); }
  double min_side() const noexcept;

  bool contains(const Point& p) const noexcept {
    return p.x >= x0_ && p.x <= x1_ && p.y >= y0_ && p.y <= y1_;
  }

  /// |W ∩ (W + shift)|. Zero outside the support.
  double set_covariance(double dx, double dy) const noexcept;

  /// Rotational average of the set covariance at distance t. Closed form for
  /// t <= min side, angular quadrature beyond.
  double iso_set_covariance(double t) const;

  /// Same quantity always via the 64-node angular rule.
  double iso_set_covariance_quadrature(double t) const;

  bool operator==(const Window&) const = default;

private:
  double x0_, y0_, x1_, y1_;
};

/// Points observed in a window, with optional per-point intensity values.
class PointPattern {
public:
  PointPattern(Window window, std::vector<Point> points,
               std::optional<std::vector<double>> intensity = std::nullopt);

  const Window& window() const noexcept { return window_; }
  std::span<const Point> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }

  bool has_intensity() const noexcept { return intensity_.has_value(); }
  std::span<const double> intensity() const;

  /// n / |W|.
  double plugin_intensity() const noexcept {
    return static_cast<double>(points_.size()) / window_.area();
  }

private:
  Window window_;
  std::vector<Point> points_;
  std::optional<std::vector<double>> intensity_;
};

/// Piecewise-constant intensity surface on a regular grid covering a window.
/// Used for the pair integral of the cross-validation criterion when the
/// intensity is not constant.
class IntensityRaster {
public:
  /// `values` is row-major with `nx` columns and `ny` rows, row 0 at y0.
  IntensityRaster(Window window, std::size_t nx, std::size_t ny,
                  std::vector<double> values);

  const Window& window() const noexcept { return window_; }
  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  double cell_width() const noexcept { return window_.width() / nx_; }
  double cell_height() const noexcept { return window_.height() / ny_; }
  double cell_value(std::size_t ix, std::size_t iy) const {
    return values_[iy * nx_ + ix];
  }
  /// Value of the cell containing p; 0 outside the window.
  double at(const Point& p) const noexcept;

private:
  Window window_;
  std::size_t nx_, ny_;
  std::vector<double> values_;
};

/// How ρ(u) is obtained when forming edge weights.
class IntensityModel {
public:
  enum class Kind { constant, per_point };

  static IntensityModel constant(double rho);
  /// Intensities are read from the pattern. The raster, when given, is used
  /// for integrals over W².
  static IntensityModel per_point(std::optional<IntensityRaster> raster = std::nullopt);

  Kind kind() const noexcept { return kind_; }
  bool is_constant() const noexcept { return kind_ == Kind::constant; }
  double rho() const noexcept { return rho_; }
  const std::optional<IntensityRaster>& raster() const noexcept { return raster_; }

  /// ρ(u_i). Throws InvalidArgument when a per-point value is missing or <= 0.
  double at(const PointPattern& pattern, std::size_t i) const;

  /// Same model with every intensity multiplied by c (constant model only).
  IntensityModel scaled(double c) const;

private:
  IntensityModel(Kind kind, double rho, std::optional<IntensityRaster> raster)
      : kind_(kind), rho_(rho), raster_(std::move(raster)) {}

  Kind kind_;
  double rho_;
  std::optional<IntensityRaster> raster_;
};

/// Ordered pair (i, j), i != j, with cached geometry and translation edge
/// weight e(u, v) = 1 / (ρ(u) ρ(v) |W ∩ W_{v-u}|).
struct Pair {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double t = 0;   ///< ‖u_j − u_i‖
  double dx = 0;  ///< x_j − x_i
  double dy = 0;  ///< y_j − y_i
  double e = 0;
};

/// All ordered pairs with r_lo <= t <= r_hi, sorted by (i, j). Both
/// orientations of every pair are present.
class PairList {
public:
  PairList() = default;
  PairList(double r_lo, double r_hi, std::vector<Pair> pairs);

  double r_lo() const noexcept { return r_lo_; }
  double r_hi() const noexcept { return r_hi_; }
  std::span<const Pair> pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const Pair& operator[](std::size_t k) const { return pairs_[k]; }

  /// Index of the reversed pair (j, i).
  std::size_t partner(std::size_t k) const { return partner_[k]; }

  /// Indices of the ordered pairs with i < j; one per unordered pair.
  const std::vector<std::size_t>& unordered() const noexcept { return unordered_; }

private:
  double r_lo_ = 0;
  double r_hi_ = 0;
  std::vector<Pair> pairs_;
  std::vector<std::size_t> partner_;
  std::vector<std::size_t> unordered_;
};

/// Grid-based fixed-radius enumeration, O(n + #pairs).
/// Throws InvalidArgument when r_hi exceeds the smaller window side or when
/// an intensity value is missing or non-positive.
PairList close_pairs(const PointPattern& pattern, double r_lo, double r_hi,
                     const IntensityModel& intensity);

}  // namespace vsepcf
