#include "vsepcf/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vsepcf/error.hpp"

namespace vsepcf {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty())
    throw InvalidArgument(where + ": cannot parse number '" + s + "'");
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  return out;
}

json intensity_json(const IntensityDescriptor& d) {
  return {{"mode", d.mode}, {"value", d.value}};
}

IntensityDescriptor intensity_from_json(const json& j) {
  IntensityDescriptor d;
  if (j.is_object()) {
    d.mode = j.value("mode", std::string("constant"));
    d.value = j.value("value", 0.0);
  }
  return d;
}

json basis_json(const BasisSpec& basis, int K) {
  return {{"nu", basis.nu()},
          {"R", basis.range()},
          {"rmin", basis.r_min()},
          {"K", K},
          {"k_max", basis.k_max()}};
}

BasisSpec basis_from_json(const json& j, int K) {
  if (j.at("nu").get<int>() != 0) throw InvalidArgument("fit JSON: only nu = 0 is supported");
  const int k_max = j.value("k_max", K);
  if (j.at("K").get<int>() != K)
    throw InvalidArgument("fit JSON: basis.K does not match the coefficient count");
  return BasisSpec(j.at("R").get<double>(), j.at("rmin").get<double>(), k_max);
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> vector_to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace

// ------------------------------------------------------------- patterns

PointPattern read_pattern_csv(std::istream& in, const Window& window) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split(line);
      break;
    }
  }
  if (header.size() < 2 || header.size() > 3 || header[0] != "x" || header[1] != "y" ||
      (header.size() == 3 && header[2] != "intensity"))
    throw InvalidArgument("pattern CSV: header must be 'x,y' or 'x,y,intensity'");
  const bool with_rho = header.size() == 3;
  std::vector<Point> points;
  std::vector<double> rho;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    const std::string where = "pattern CSV line " + std::to_string(lineno);
    if (f.size() != header.size())
      throw InvalidArgument(where + ": expected " + std::to_string(header.size()) + " fields");
    points.push_back({parse_double(f[0], where), parse_double(f[1], where)});
    if (with_rho) rho.push_back(parse_double(f[2], where));
  }
  if (with_rho) return PointPattern(window, std::move(points), std::move(rho));
  return PointPattern(window, std::move(points));
}

PointPattern read_pattern_csv(const std::filesystem::path& path, const Window& window) {
  auto in = open_in(path);
  return read_pattern_csv(in, window);
}

void write_pattern_csv(std::ostream& out, const PointPattern& pattern) {
  out << (pattern.has_intensity() ? "x,y,intensity\n" : "x,y\n");
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    out << format_double(pattern[i].x) << ',' << format_double(pattern[i].y);
    if (pattern.has_intensity()) out << ',' << format_double(pattern.intensity()[i]);
    out << '\n';
  }
}

void write_pattern_csv(const std::filesystem::path& path, const PointPattern& pattern) {
  auto out = open_out(path);
  write_pattern_csv(out, pattern);
}

IntensityRaster read_raster_csv(const std::filesystem::path& path, const Window& window) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0, nx = 0, ny = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    const std::string where = "raster CSV line " + std::to_string(lineno);
    if (nx == 0) nx = f.size();
    if (f.size() != nx) throw InvalidArgument(where + ": ragged row");
    for (const auto& s : f) values.push_back(parse_double(s, where));
    ++ny;
  }
  if (nx == 0) throw InvalidArgument("raster CSV: no values");
  return IntensityRaster(window, nx, ny, std::move(values));
}

Window parse_window(const std::string& text) {
  const auto f = split(text);
  if (f.size() != 4) throw InvalidArgument("window must be given as x0,y0,x1,y1");
  return Window(parse_double(f[0], "window"), parse_double(f[1], "window"),
                parse_double(f[2], "window"), parse_double(f[3], "window"));
}

std::string format_window(const Window& w) {
  return format_double(w.x0()) + "," + format_double(w.y0()) + "," + format_double(w.x1()) +
         "," + format_double(w.y1());
}

// ----------------------------------------------------------------- fits

std::string fit_kind(const AnyFit& fit) {
  static const char* names[] = {"vse", "ose", "kde"};
  return names[fit.index()];
}

double fit_r_min(const AnyFit& fit) {
  return std::visit(
      [](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, KdeFit>) return f.r_min;
        else return f.basis.r_min();
      },
      fit);
}

double fit_range(const AnyFit& fit) {
  return std::visit(
      [](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, KdeFit>) return f.range;
        else return f.basis.range();
      },
      fit);
}

double evaluate_g(const AnyFit& fit, double r) {
  return std::visit([r](const auto& f) { return f.g(r); }, fit);
}

json fit_to_json(const AnyFit& fit) {
  json j;
  j["kind"] = fit_kind(fit);
  if (const auto* v = std::get_if<VseCoefficients>(&fit)) {
    j["basis"] = basis_json(v->basis, v->K());
    j["psi"] = {{"b", v->psi.support()}};
    j["beta"] = vector_to_std(v->beta);
    j["intensity"] = intensity_json(v->intensity);
    j["variant"] = to_string(v->weighting);
  } else if (const auto* o = std::get_if<OseFit>(&fit)) {
    j["basis"] = basis_json(o->basis, o->K());
    j["theta"] = vector_to_std(o->theta);
    j["intensity"] = intensity_json(o->intensity);
  } else {
    const auto& k = std::get<KdeFit>(fit);
    j["kernel"] = "epanechnikov";
    j["bandwidth"] = k.bandwidth;
    j["divisor"] = to_string(k.divisor);
    j["rmin"] = k.r_min;
    j["R"] = k.range;
    j["pairs"] = {{"t", k.t}, {"e", k.e}};
    j["intensity"] = intensity_json(k.intensity);
  }
  return j;
}

AnyFit fit_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "vse") {
      Eigen::VectorXd beta = vector_from_json(j.at("beta"));
      const int K = static_cast<int>(beta.size());
      return VseCoefficients{std::move(beta), basis_from_json(j.at("basis"), K),
                             PsiSpec(j.at("psi").at("b").get<double>()),
                             weighting_from_string(j.value("variant", "inverse-distance")),
                             intensity_from_json(j.value("intensity", json::object()))};
    }
    if (kind == "ose") {
      Eigen::VectorXd theta = vector_from_json(j.at("theta"));
      const int K = static_cast<int>(theta.size());
      return OseFit{std::move(theta), basis_from_json(j.at("basis"), K),
                    intensity_from_json(j.value("intensity", json::object()))};
    }
    if (kind == "kde") {
      if (j.value("kernel", "epanechnikov") != "epanechnikov")
        throw InvalidArgument("fit JSON: unsupported kernel");
      KdeFit k;
      k.bandwidth = j.at("bandwidth").get<double>();
      k.divisor = kde_divisor_from_string(j.value("divisor", "distance"));
      k.r_min = j.at("rmin").get<double>();
      k.range = j.at("R").get<double>();
      k.t = j.at("pairs").at("t").get<std::vector<double>>();
      k.e = j.at("pairs").at("e").get<std::vector<double>>();
      k.intensity = intensity_from_json(j.value("intensity", json::object()));
      if (!(k.bandwidth > 0) || k.t.size() != k.e.size())
        throw InvalidArgument("fit JSON: malformed KDE record");
      return k;
    }
    throw InvalidArgument("fit JSON: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("fit JSON: ") + e.what());
  }
}

void write_fit_json(const std::filesystem::path& path, const AnyFit& fit) {
  auto out = open_out(path);
  out << fit_to_json(fit).dump(2) << '\n';
}

AnyFit read_fit_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("fit JSON: " + std::string(e.what()));
  }
  return fit_from_json(j);
}

std::vector<double> curve_grid(const AnyFit& fit, std::size_t n) {
  if (n < 2) throw InvalidArgument("curve grid needs at least two points");
  const double lo = fit_r_min(fit), range = fit_range(fit);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = lo + range * static_cast<double>(i) / static_cast<double>(n - 1);
  const auto* k = std::get_if<KdeFit>(&fit);
  if (k && k->divisor == KdeDivisor::radius && r[0] <= 0) r[0] = 1e-3 * range / (n - 1);
  return r;
}

// ---------------------------------------------------------------- curves

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_columns_csv(std::ostream& out, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw InvalidArgument("CSV: header/column mismatch");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << (c ? "," : "") << format_double(columns[c].at(i));
    out << '\n';
  }
}

void write_columns_csv(const std::filesystem::path& path,
                       const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
  auto out = open_out(path);
  write_columns_csv(out, header, columns);
}

}  // namespace vsepcf
