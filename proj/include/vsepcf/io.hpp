#pragma once

/**
 * @file io.hpp
 * @brief Text formats: point-pattern CSV, intensity-raster CSV, fit JSON and
 *        curve CSV.
 *
 * Pattern CSV: header `x,y` or `x,y,intensity`, one point per row.
 * Raster CSV: no header, one grid row per line, first line at y0, values
 * separated by commas; the raster covers the pattern window.
 * Fit JSON: {"kind": "vse" | "ose" | "kde", ...}. Doubles are written with 17
 * significant digits so a reloaded fit evaluates bit-identically.
 */

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "vsepcf/baselines.hpp"
#include "vsepcf/variational.hpp"

namespace vsepcf {

PointPattern read_pattern_csv(std::istream& in, const Window& window);
PointPattern read_pattern_csv(const std::filesystem::path& path, const Window& window);
void write_pattern_csv(std::ostream& out, const PointPattern& pattern);
void write_pattern_csv(const std::filesystem::path& path, const PointPattern& pattern);

IntensityRaster read_raster_csv(const std::filesystem::path& path, const Window& window);

/// "x0,y0,x1,y1".
Window parse_window(const std::string& text);
std::string format_window(const Window& window);

using AnyFit = std::variant<VseCoefficients, OseFit, KdeFit>;

std::string fit_kind(const AnyFit& fit);
double fit_r_min(const AnyFit& fit);
double fit_range(const AnyFit& fit);
/// ĝ(r) for any fit.
double evaluate_g(const AnyFit& fit, double r);

nlohmann::json fit_to_json(const AnyFit& fit);
AnyFit fit_from_json(const nlohmann::json& j);
void write_fit_json(const std::filesystem::path& path, const AnyFit& fit);
AnyFit read_fit_json(const std::filesystem::path& path);

/// `n` equispaced radii covering [r_min, r_min + R]. With the radius KDE
/// divisor the first point is nudged off r = 0.
std::vector<double> curve_grid(const AnyFit& fit, std::size_t n = 200);

/// Writes `header` then one row per entry of `columns[0]`, values as %.17g.
void write_columns_csv(std::ostream& out, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);
void write_columns_csv(const std::filesystem::path& path,
                       const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

/// `%.17g`, with inf/-inf/nan spelled out.
std::string format_double(double x);

}  // namespace vsepcf
