#include "etisac/tfs_geometry.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace etisac {

namespace {

constexpr double kDomainSlack = 1e-12;

enum class Harmonic { kCos, kSin };

// One row of the per-axis basis plus its u- and v-derivatives.
void basis_row(int q1, int q2, Harmonic h, double u, double v, double* f, double* fu, double* fv) {
  int idx = 0;
  f[idx] = std::cos(v);
  if (fu) fu[idx] = 0.0;
  if (fv) fv[idx] = -std::sin(v);
  ++idx;
  for (int m = 1; m <= q2; ++m, ++idx) {
    f[idx] = std::sin(m * v);
    if (fu) fu[idx] = 0.0;
    if (fv) fv[idx] = m * std::cos(m * v);
  }
  for (int l = 1; l <= q1; ++l) {
    const double t = h == Harmonic::kCos ? std::cos(l * u) : std::sin(l * u);
    const double dt = h == Harmonic::kCos ? -l * std::sin(l * u) : l * std::cos(l * u);
    for (int m = 1; m <= q2; ++m) {
      const double sv = std::sin(m * v);
      const double cv = std::cos(m * v);
      f[idx] = t * sv;
      if (fu) fu[idx] = dt * sv;
      if (fv) fv[idx] = t * m * cv;
      ++idx;
      f[idx] = t * cv;
      if (fu) fu[idx] = dt * cv;
      if (fv) fv[idx] = -t * m * sv;
      ++idx;
    }
  }
}

Harmonic axis_harmonic(int axis) { return axis == 1 ? Harmonic::kSin : Harmonic::kCos; }

void check_domain(double u, double v) {
  if (!(u >= -kPi - kDomainSlack && u <= kPi + kDomainSlack && v >= -kPi / 2 - kDomainSlack &&
        v <= kPi / 2 + kDomainSlack)) {
    std::ostringstream os;
    os << "surface coordinates out of range: u=" << u << " v=" << v;
    throw DomainError(os.str());
  }
}

// Distance from the origin to the surface of an origin-centered box along a
// unit direction.
double box_exit(const Vec3& dir, const Vec3& half) {
  double t = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) > 1e-15) t = std::min(t, half[i] / std::abs(dir[i]));
  }
  return t;
}

template <typename RadialFn>
std::vector<SurfaceSample> sample_star(int n_u, int n_v, RadialFn radius_along) {
  if (n_u < 2 || n_v < 2) throw DomainError("sample grid needs at least 2 x 2 points");
  std::vector<SurfaceSample> out;
  out.reserve(static_cast<std::size_t>(n_u) * n_v);
  const double du = 2 * kPi / n_u;
  const double dv = kPi / n_v;
  for (int i = 0; i < n_u; ++i) {
    const double u = -kPi + (i + 0.5) * du;
    for (int j = 0; j < n_v; ++j) {
      const double v = -kPi / 2 + (j + 0.5) * dv;
      const Vec3 dir(std::cos(v) * std::cos(u), std::cos(v) * std::sin(u), std::sin(v));
      out.push_back({u, v, radius_along(dir) * dir});
    }
  }
  return out;
}

}  // namespace

TfsShape TfsShape::zeros(int q1, int q2) {
  if (q1 < 1 || q2 < 1) throw DomainError("TFS orders must be >= 1");
  const int n = coeffs_per_axis(q1, q2);
  return {q1, q2, VecX::Zero(n), VecX::Zero(n), VecX::Zero(n)};
}

void TfsShape::validate() const {
  if (q1 < 1 || q2 < 1) throw DomainError("TFS orders must be >= 1");
  const auto n = coeffs_per_axis();
  if (coeff_x.size() != n || coeff_y.size() != n || coeff_z.size() != n) {
    throw DomainError("TFS coefficient vectors must each have 1 + q2 + 2 q1 q2 entries");
  }
}

void Kinematics::validate() const {
  if (!(d_o > 0.0)) throw DomainError("center range must be positive");
  if (!(theta_o > -kPi - kDomainSlack && theta_o <= kPi + kDomainSlack))
    throw DomainError("azimuth out of (-pi, pi]");
  if (!(phi_o >= -kPi / 2 - kDomainSlack && phi_o <= kPi / 2 + kDomainSlack))
    throw DomainError("elevation out of [-pi/2, pi/2]");
  if (!(orient > -kPi - kDomainSlack && orient <= kPi + kDomainSlack))
    throw DomainError("orientation out of (-pi, pi]");
}

double ScattererSet::total_area() const {
  double s = 0.0;
  for (const auto& sc : scatterers) s += sc.area;
  return s;
}

double ScattererSet::max_offset() const {
  double r = 0.0;
  for (const auto& sc : scatterers) r = std::max(r, sc.rho.norm());
  return r;
}

ScattererSet ScattererSet::normalized_copy() const {
  ScattererSet out = *this;
  const double total = total_area();
  if (!(total > 0.0)) throw VisibilityError("cannot normalize a set with zero total area");
  for (auto& sc : out.scatterers) sc.area /= total;
  out.normalized = true;
  return out;
}

Vec3 tfs_eval(const TfsShape& shape, double u, double v) { return tfs_eval_jet(shape, u, v).rho; }

TfsJet tfs_eval_jet(const TfsShape& shape, double u, double v) {
  check_domain(u, v);
  shape.validate();
  const int n = shape.coeffs_per_axis();
  VecX f(n), fu(n), fv(n);
  TfsJet jet{};
  const VecX* coeffs[3] = {&shape.coeff_x, &shape.coeff_y, &shape.coeff_z};
  for (int axis = 0; axis < 3; ++axis) {
    // x and z share the cosine basis; recompute only when the harmonic changes.
    if (axis != 2) basis_row(shape.q1, shape.q2, axis_harmonic(axis), u, v, f.data(), fu.data(), fv.data());
    jet.rho[axis] = f.dot(*coeffs[axis]);
    jet.d_du[axis] = fu.dot(*coeffs[axis]);
    jet.d_dv[axis] = fv.dot(*coeffs[axis]);
    if (axis == 1) basis_row(shape.q1, shape.q2, Harmonic::kCos, u, v, f.data(), fu.data(), fv.data());
  }
  return jet;
}

FitResult fit_tfs(std::span<const SurfaceSample> samples, int q1, int q2) {
  if (q1 < 1 || q2 < 1) throw DomainError("TFS orders must be >= 1");
  const int n = TfsShape::coeffs_per_axis(q1, q2);
  const auto rows = static_cast<Eigen::Index>(samples.size());
  if (rows * 3 < 3 * n || rows < n) throw SingularFitError("too few samples for the requested TFS orders");

  MatX cos_basis(rows, n), sin_basis(rows, n);
  MatX targets(rows, 3);
  VecX row(n);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& s = samples[static_cast<std::size_t>(r)];
    check_domain(s.u, s.v);
    basis_row(q1, q2, Harmonic::kCos, s.u, s.v, row.data(), nullptr, nullptr);
    cos_basis.row(r) = row.transpose();
    basis_row(q1, q2, Harmonic::kSin, s.u, s.v, row.data(), nullptr, nullptr);
    sin_basis.row(r) = row.transpose();
    targets.row(r) = s.xyz.transpose();
  }

  TfsShape shape = TfsShape::zeros(q1, q2);
  Eigen::ColPivHouseholderQR<MatX> qr_cos(cos_basis);
  Eigen::ColPivHouseholderQR<MatX> qr_sin(sin_basis);
  qr_cos.setThreshold(1e-10);
  qr_sin.setThreshold(1e-10);
  if (qr_cos.rank() < n || qr_sin.rank() < n) {
    throw SingularFitError("TFS design matrix is rank deficient; spread the (u, v) samples");
  }
  shape.coeff_x = qr_cos.solve(targets.col(0));
  shape.coeff_y = qr_sin.solve(targets.col(1));
  shape.coeff_z = qr_cos.solve(targets.col(2));

  MatX fitted(rows, 3);
  fitted.col(0) = cos_basis * shape.coeff_x;
  fitted.col(1) = sin_basis * shape.coeff_y;
  fitted.col(2) = cos_basis * shape.coeff_z;
  const double rms = std::sqrt((fitted - targets).rowwise().squaredNorm().mean());
  return {std::move(shape), rms};
}

Mat3 rotation_matrix(double orient) {
  const double c = std::cos(orient);
  const double s = std::sin(orient);
  Mat3 v;
  v << c, -s, 0, s, c, 0, 0, 0, 1;
  return v;
}

Vec3 direction_vector(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::cos(theta) * std::cos(phi), std::sin(phi)};
}

Vec3 center_position(const Kinematics& kin) { return kin.d_o * direction_vector(kin.theta_o, kin.phi_o); }

Spherical to_spherical(const Vec3& p) {
  const double r = p.norm();
  return {r, std::atan2(p.x(), p.y()), std::asin(std::clamp(p.z() / r, -1.0, 1.0))};
}

Scatterer place_scatterer(const Kinematics& kin, double u, double v, const Vec3& rho, double area) {
  Scatterer sc;
  sc.u = u;
  sc.v = v;
  sc.rho = rho;
  sc.area = area;
  sc.p_global = center_position(kin) + rotation_matrix(kin.orient) * rho;
  const auto sph = to_spherical(sc.p_global);
  sc.d_k = sph.range;
  sc.theta_k = sph.theta;
  sc.phi_k = sph.phi;
  return sc;
}

ScattererSet discretize_visible(const TfsShape& shape, const Kinematics& kin, int n_u, int n_v) {
  if (n_u < 2 || n_v < 2) throw DomainError("discretization grid needs n_u, n_v >= 2");
  shape.validate();
  kin.validate();
  const Mat3 rot = rotation_matrix(kin.orient);
  const Vec3 p_o = center_position(kin);
  const double du = 2 * kPi / n_u;
  const double dv = kPi / n_v;

  ScattererSet set;
  for (int i = 0; i < n_u; ++i) {
    const double u = -kPi + (i + 0.5) * du;
    for (int j = 0; j < n_v; ++j) {
      const double v = -kPi / 2 + (j + 0.5) * dv;
      const TfsJet jet = tfs_eval_jet(shape, u, v);
      const Vec3 normal = jet.d_du.cross(jet.d_dv);
      const double area = normal.norm() * du * dv;
      if (!(area > 1e-14)) continue;
      const Vec3 p = p_o + rot * jet.rho;
      if ((rot * normal).dot(-p) <= 0.0) continue;
      set.scatterers.push_back(place_scatterer(kin, u, v, jet.rho, area));
    }
  }
  if (set.scatterers.empty()) throw VisibilityError("no surface patch faces the base station");
  return set;
}

std::vector<SurfaceSample> sample_sphere(double radius, int n_u, int n_v) {
  return sample_star(n_u, n_v, [radius](const Vec3&) { return radius; });
}

std::vector<SurfaceSample> sample_cuboid(double length, double width, double height, int n_u, int n_v) {
  const Vec3 half(length / 2, width / 2, height / 2);
  return sample_star(n_u, n_v, [&half](const Vec3& dir) { return box_exit(dir, half); });
}

std::vector<SurfaceSample> sample_drone(double arm, double height, int n_u, int n_v) {
  const double arm_half_width = 0.1;
  const double arm_half_height = 0.08;
  const double hub_half = 0.25;
  const Vec3 arm_x(arm, arm_half_width, arm_half_height);
  const Vec3 arm_y(arm_half_width, arm, arm_half_height);
  const Vec3 hub(hub_half, hub_half, height / 2);
  return sample_star(n_u, n_v, [&](const Vec3& dir) {
    return std::max({box_exit(dir, arm_x), box_exit(dir, arm_y), box_exit(dir, hub)});
  });
}

TfsShape vehicle_shape() {
  static const TfsShape shape = [] {
    const auto samples = sample_cuboid(5.0, 2.0, 1.2, 96, 48);
    return fit_tfs(samples, 8, 8).shape;
  }();
  return shape;
}

TfsShape drone_shape() {
  static const TfsShape shape = [] {
    const auto samples = sample_drone(1.15, 0.65, 96, 48);
    return fit_tfs(samples, 8, 8).shape;
  }();
  return shape;
}

TfsShape sphere_shape(double radius) {
  TfsShape s = TfsShape::zeros(1, 1);
  // Layout for q1 = q2 = 1: [cos v, sin v, T(u) sin v, T(u) cos v].
  s.coeff_x[3] = radius;
  s.coeff_y[3] = radius;
  s.coeff_z[1] = radius;
  return s;
}

std::vector<SurfaceSample> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open sample file: " + path);
  std::vector<SurfaceSample> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      // Skip a header row if the first field is not numeric.
      if (line.find_first_not_of("0123456789+-.eE, \t\r") != std::string::npos) continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    SurfaceSample s;
    if (!(ls >> s.u >> s.v >> s.xyz.x() >> s.xyz.y() >> s.xyz.z())) {
      throw DomainError("malformed sample row: " + line);
    }
    out.push_back(s);
  }
  return out;
}

void to_json(nlohmann::json& j, const TfsShape& s) {
  auto vec = [](const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  j = {{"q1", s.q1}, {"q2", s.q2}, {"coeff_x", vec(s.coeff_x)}, {"coeff_y", vec(s.coeff_y)},
       {"coeff_z", vec(s.coeff_z)}};
}

void from_json(const nlohmann::json& j, TfsShape& s) {
  s.q1 = j.at("q1").get<int>();
  s.q2 = j.at("q2").get<int>();
  auto load = [&j](const char* key) {
    const auto v = j.at(key).get<std::vector<double>>();
    return VecX(Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  s.coeff_x = load("coeff_x");
  s.coeff_y = load("coeff_y");
  s.coeff_z = load("coeff_z");
  s.validate();
}

}  // namespace etisac
