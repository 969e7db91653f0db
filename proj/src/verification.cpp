#include "cpesim/verification.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <tuple>

namespace cpesim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPi = std::numbers::pi;

struct TrigTerm {
  int k;
  bool sin;
  double factor;
};

// Folds a signed frequency into the k >= 0 convention.
TrigTerm fold(int k, bool sin, double factor) {
  if (k < 0) return {-k, sin, sin ? -factor : factor};
  return {k, sin, factor};
}

// Product-to-sum for a trig pair sharing one direction.
std::array<TrigTerm, 2> trig_product(int k1, bool s1, int k2, bool s2) {
  if (!s1 && !s2)  // cos cos
    return {fold(k1 - k2, false, 0.5), fold(k1 + k2, false, 0.5)};
  if (s1 && s2)  // sin sin
    return {fold(k1 - k2, false, 0.5), fold(k1 + k2, false, -0.5)};
  if (s1 && !s2)  // sin cos
    return {fold(k1 + k2, true, 0.5), fold(k1 - k2, true, 0.5)};
  // cos sin
  return {fold(k1 + k2, true, 0.5), fold(k1 - k2, true, -0.5)};
}

bool trig_is_zero(int k, bool sin) { return sin && k == 0; }

double eval_trig(double arg_scale, int k, bool sin, double u) {
  const double a = arg_scale * k * u;
  return sin ? std::sin(a) : std::cos(a);
}

// Same construction with a real-valued frequency (time factors).
struct TimeTerm {
  double w;
  bool sin;
  double factor;
};

TimeTerm fold_t(double w, bool sin, double factor) {
  if (w < 0.0) return {-w, sin, sin ? -factor : factor};
  return {w, sin, factor};
}

std::array<TimeTerm, 2> trig_product_t(double w1, bool s1, double w2, bool s2) {
  if (!s1 && !s2) return {fold_t(w1 - w2, false, 0.5), fold_t(w1 + w2, false, 0.5)};
  if (s1 && s2) return {fold_t(w1 - w2, false, 0.5), fold_t(w1 + w2, false, -0.5)};
  if (s1 && !s2) return {fold_t(w1 + w2, true, 0.5), fold_t(w1 - w2, true, 0.5)};
  return {fold_t(w1 + w2, true, 0.5), fold_t(w1 - w2, true, -0.5)};
}

using ZPart = std::tuple<int, int, bool>;  // (pz, mz, sin)

// Exact antiderivative of z^p * trig(pi m z) from 0 to z, written as atoms
// plus the boundary constant; recursion by parts.
void integrate_z(int p, int m, bool sin, double coeff,
                 std::map<ZPart, double>& out) {
  if (m == 0) {
    if (sin) return;  // sin(0) = 0 everywhere
    out[{p + 1, 0, false}] += coeff / (p + 1);
    return;
  }
  const double c = kPi * m;
  if (!sin) {
    // int z^p cos(cz) = z^p sin(cz)/c - (p/c) int z^(p-1) sin(cz)
    out[{p, m, true}] += coeff / c;
    if (p > 0) integrate_z(p - 1, m, true, -coeff * p / c, out);
  } else {
    // int z^p sin(cz) = -z^p cos(cz)/c + (p/c) int z^(p-1) cos(cz); the
    // p = 0 case leaves the constant +1/c from the lower limit
    out[{p, m, false}] += -coeff / c;
    if (p > 0)
      integrate_z(p - 1, m, false, coeff * p / c, out);
    else
      out[{0, 0, false}] += coeff / c;
  }
}

double eval_zpart(int p, int m, bool sin, double z) {
  double v = 1.0;
  for (int i = 0; i < p; ++i) v *= z;
  if (m != 0 || sin) v *= sin ? std::sin(kPi * m * z) : std::cos(kPi * m * z);
  return v;
}

}  // namespace

SymField SymField::constant(double c) {
  TrigAtom a;
  a.coeff = c;
  return atom(a);
}

SymField SymField::atom(const TrigAtom& a) {
  SymField f;
  if (a.coeff != 0.0 && !trig_is_zero(a.kx, a.sin_x) && !trig_is_zero(a.ky, a.sin_y) &&
      !(a.mz == 0 && a.sin_z) && !(a.wt == 0.0 && a.sin_t))
    f.atoms_.push_back(a);
  return f;
}

void SymField::merge() {
  using Key = std::tuple<int, bool, int, bool, int, int, bool, double, bool>;
  std::map<Key, double> acc;
  for (const TrigAtom& a : atoms_) {
    if (a.coeff == 0.0) continue;
    acc[{a.kx, a.sin_x, a.ky, a.sin_y, a.pz, a.mz, a.sin_z, a.wt, a.sin_t}] += a.coeff;
  }
  atoms_.clear();
  for (const auto& [key, c] : acc) {
    if (c == 0.0) continue;
    TrigAtom a;
    std::tie(a.kx, a.sin_x, a.ky, a.sin_y, a.pz, a.mz, a.sin_z, a.wt, a.sin_t) = key;
    a.coeff = c;
    atoms_.push_back(a);
  }
}

SymField SymField::operator+(const SymField& o) const {
  SymField out = *this;
  out.atoms_.insert(out.atoms_.end(), o.atoms_.begin(), o.atoms_.end());
  out.merge();
  return out;
}

SymField SymField::operator-(const SymField& o) const { return *this + o.scaled(-1.0); }

SymField SymField::scaled(double s) const {
  SymField out = *this;
  for (TrigAtom& a : out.atoms_) a.coeff *= s;
  out.merge();
  return out;
}

SymField SymField::operator*(const SymField& o) const {
  SymField out;
  for (const TrigAtom& a : atoms_) {
    for (const TrigAtom& b : o.atoms_) {
      const auto xs = trig_product(a.kx, a.sin_x, b.kx, b.sin_x);
      const auto ys = trig_product(a.ky, a.sin_y, b.ky, b.sin_y);
      const auto zs = trig_product(a.mz, a.sin_z, b.mz, b.sin_z);
      const auto ts = trig_product_t(a.wt, a.sin_t, b.wt, b.sin_t);
      for (const TrigTerm& x : xs)
        for (const TrigTerm& y : ys)
          for (const TrigTerm& z : zs)
            for (const TimeTerm& t : ts) {
              if (trig_is_zero(x.k, x.sin) || trig_is_zero(y.k, y.sin) ||
                  trig_is_zero(z.k, z.sin) || (t.w == 0.0 && t.sin))
                continue;
              TrigAtom c;
              c.coeff = a.coeff * b.coeff * x.factor * y.factor * z.factor * t.factor;
              c.kx = x.k; c.sin_x = x.sin;
              c.ky = y.k; c.sin_y = y.sin;
              c.pz = a.pz + b.pz; c.mz = z.k; c.sin_z = z.sin;
              c.wt = t.w; c.sin_t = t.sin;
              out.atoms_.push_back(c);
            }
    }
  }
  out.merge();
  return out;
}

SymField SymField::dx() const {
  SymField out;
  for (const TrigAtom& a : atoms_) {
    if (a.kx == 0) continue;
    TrigAtom b = a;
    b.sin_x = !a.sin_x;
    b.coeff = a.coeff * kTwoPi * a.kx * (a.sin_x ? 1.0 : -1.0);
    out.atoms_.push_back(b);
  }
  out.merge();
  return out;
}

SymField SymField::dy() const {
  SymField out;
  for (const TrigAtom& a : atoms_) {
    if (a.ky == 0) continue;
    TrigAtom b = a;
    b.sin_y = !a.sin_y;
    b.coeff = a.coeff * kTwoPi * a.ky * (a.sin_y ? 1.0 : -1.0);
    out.atoms_.push_back(b);
  }
  out.merge();
  return out;
}

SymField SymField::dt() const {
  SymField out;
  for (const TrigAtom& a : atoms_) {
    if (a.wt == 0.0) continue;
    TrigAtom b = a;
    b.sin_t = !a.sin_t;
    b.coeff = a.coeff * a.wt * (a.sin_t ? 1.0 : -1.0);
    out.atoms_.push_back(b);
  }
  out.merge();
  return out;
}

SymField SymField::dz() const {
  SymField out;
  for (const TrigAtom& a : atoms_) {
    if (a.pz > 0) {  // power-rule part
      TrigAtom b = a;
      b.pz -= 1;
      b.coeff = a.coeff * a.pz;
      out.atoms_.push_back(b);
    }
    if (a.mz != 0) {  // trig part
      TrigAtom b = a;
      b.sin_z = !a.sin_z;
      b.coeff = a.coeff * kPi * a.mz * (a.sin_z ? 1.0 : -1.0);
      out.atoms_.push_back(b);
    }
  }
  out.merge();
  return out;
}

SymField SymField::vint() const {
  SymField out;
  for (const TrigAtom& a : atoms_) {
    std::map<ZPart, double> zparts;
    integrate_z(a.pz, a.mz, a.sin_z, 1.0, zparts);
    for (const auto& [zp, c] : zparts) {
      TrigAtom b = a;
      std::tie(b.pz, b.mz, b.sin_z) = zp;
      b.coeff = a.coeff * c;
      if (b.coeff != 0.0 && !(b.mz == 0 && b.sin_z)) out.atoms_.push_back(b);
    }
  }
  out.merge();
  return out;
}

SymField SymField::vavg() const {
  SymField integral = vint();
  SymField out;
  for (const TrigAtom& a : integral.atoms_) {
    TrigAtom b = a;
    b.coeff = a.coeff * eval_zpart(a.pz, a.mz, a.sin_z, 1.0);
    b.pz = 0; b.mz = 0; b.sin_z = false;
    out.atoms_.push_back(b);
  }
  out.merge();
  return out;
}

double SymField::eval(double x, double y, double z, double t) const {
  double total = 0.0;
  for (const TrigAtom& a : atoms_) {
    double v = a.coeff;
    v *= eval_trig(kTwoPi, a.kx, a.sin_x, x);
    v *= eval_trig(kTwoPi, a.ky, a.sin_y, y);
    v *= eval_zpart(a.pz, a.mz, a.sin_z, z);
    v *= a.sin_t ? std::sin(a.wt * t) : std::cos(a.wt * t);
    total += v;
  }
  return total;
}

Field3 SymField::eval_grid(const Grid& grid, double t) const {
  Field3 out(grid.nx, grid.ny, grid.nz);
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        out(i, j, k) = eval(grid.x(i), grid.y(j), grid.z(k), t);
  return out;
}

Field2 SymField::eval_surface(const Grid& grid, double t) const {
  Field2 out(grid.ny, grid.nx);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) out(j, i) = eval(grid.x(i), grid.y(j), 0.0, t);
  return out;
}

namespace {

SymField z_coordinate() {
  TrigAtom a;
  a.coeff = 1.0;
  a.pz = 1;
  return SymField::atom(a);
}

SymField int_power(const SymField& f, int n) {
  SymField out = SymField::constant(1.0);
  for (int i = 0; i < n; ++i) out = out * f;
  return out;
}

}  // namespace

MmsSymbolic mms_residual(const MmsSpec& spec, const SimParams& params) {
  MmsSymbolic out;
  const SymField divv = spec.vx.dx() + spec.vy.dy();
  const SymField vbar_x = spec.vx.vavg();
  const SymField vbar_y = spec.vy.vavg();
  const SymField& s = spec.surface;

  if (params.regime == Regime::GravityGamma2) {
    out.continuity = s.dt() + vbar_x * s.dx() + vbar_y * s.dy() + s * divv.vavg() +
                     (z_coordinate() * divv).vavg().scaled(0.5 * params.g);

    const SymField rho = s + z_coordinate().scaled(0.5 * params.g);
    const SymField vtx = spec.vx.vtilde();
    const SymField vty = spec.vy.vtilde();
    const SymField flux_integrand =
        (s * vtx).dx() + (s * vty).dy() +
        (z_coordinate() * divv).vtilde().scaled(0.5 * params.g);
    const SymField flux = flux_integrand.vint().scaled(-1.0);  // rho w

    const SymField press_coeff = s.scaled(2.0) + z_coordinate().scaled(params.g);
    out.momentum_x = rho * (spec.vx.dt() + spec.vx * spec.vx.dx() + spec.vy * spec.vx.dy()) +
                     flux * spec.vx.dz() + press_coeff * s.dx() -
                     (spec.vx.dx().dx() + spec.vx.dy().dy() + spec.vx.dz().dz())
                         .scaled(params.mu) -
                     divv.dx().scaled(params.mu + params.lambda);
    out.momentum_y = rho * (spec.vy.dt() + spec.vx * spec.vy.dx() + spec.vy * spec.vy.dy()) +
                     flux * spec.vy.dz() + press_coeff * s.dy() -
                     (spec.vy.dx().dx() + spec.vy.dy().dy() + spec.vy.dz().dz())
                         .scaled(params.mu) -
                     divv.dy().scaled(params.mu + params.lambda);
  } else if (params.regime == Regime::VacuumNoGravity) {
    out.continuity =
        s.dt() + vbar_x * s.dx() + vbar_y * s.dy() + (s * divv.vavg()).scaled(0.5);

    const SymField rho = s * s;
    const SymField vtx = spec.vx.vtilde();
    const SymField vty = spec.vy.vtilde();
    const SymField flux_integrand =
        s * divv.vtilde() + (vtx * s.dx() + vty * s.dy()).scaled(2.0);
    const SymField flux = flux_integrand.vint().scaled(-1.0);  // sigma w
    const SymField sflux = s * flux;                           // sigma (sigma w)

    const int pow_index = static_cast<int>(std::lround(2.0 * params.gamma - 1.0));
    if (std::abs(2.0 * params.gamma - 1.0 - pow_index) > 1e-12)
      throw SimError(ErrorKind::Config,
                     "vacuum manufactured solutions need integer 2*gamma-1");
    const SymField press_coeff = int_power(s, pow_index).scaled(2.0 * params.gamma);

    out.momentum_x = rho * (spec.vx.dt() + spec.vx * spec.vx.dx() + spec.vy * spec.vx.dy()) +
                     sflux * spec.vx.dz() + press_coeff * s.dx() -
                     (spec.vx.dx().dx() + spec.vx.dy().dy() + spec.vx.dz().dz())
                         .scaled(params.mu) -
                     divv.dx().scaled(params.mu + params.lambda);
    out.momentum_y = rho * (spec.vy.dt() + spec.vx * spec.vy.dx() + spec.vy * spec.vy.dy()) +
                     sflux * spec.vy.dz() + press_coeff * s.dy() -
                     (spec.vy.dx().dx() + spec.vy.dy().dy() + spec.vy.dz().dz())
                         .scaled(params.mu) -
                     divv.dy().scaled(params.mu + params.lambda);
  } else {
    throw SimError(ErrorKind::Config, "manufactured solutions cover the channel regimes");
  }
  return out;
}

void check_mms_boundary(const MmsSpec& spec) {
  for (const SymField* u : {&spec.vx, &spec.vy}) {
    const SymField du = u->dz();
    double worst = 0.0;
    for (double z : {0.0, 1.0})
      for (double x : {0.0, 0.17, 0.43})
        for (double y : {0.0, 0.29})
          for (double t : {0.0, 0.37, 1.1})
            worst = std::max(worst, std::abs(du.eval(x, y, z, t)));
    if (worst > 1e-12)
      throw SimError(ErrorKind::Config,
                     "manufactured velocity violates d_z v = 0 at z = 0,1");
  }
  // the surface variable must be z-independent
  for (const TrigAtom& a : spec.surface.atoms())
    if (a.pz != 0 || a.mz != 0)
      throw SimError(ErrorKind::Config, "manufactured surface variable depends on z");
}

StepForcing make_mms_source(const Grid& grid, const MmsSpec& spec,
                            const SimParams& params) {
  check_mms_boundary(spec);
  auto symbolic = std::make_shared<MmsSymbolic>(mms_residual(spec, params));
  StepForcing forcing;
  forcing.continuity = [symbolic, &grid](double t) {
    return symbolic->continuity.eval_surface(grid, t);
  };
  forcing.momentum = [symbolic, &grid](double t) {
    VecField3 f(grid.nx, grid.ny, grid.nz);
    f.x = symbolic->momentum_x.eval_grid(grid, t);
    f.y = symbolic->momentum_y.eval_grid(grid, t);
    return f;
  };
  return forcing;
}

ConvergenceReport convergence_order(const std::vector<double>& scales,
                                    const std::vector<double>& errors) {
  if (scales.size() != errors.size() || scales.size() < 3)
    throw SimError(ErrorKind::Config, "convergence study needs >= 3 resolutions");
  ConvergenceReport rep;
  rep.exact = true;
  rep.monotone = true;
  for (double e : errors)
    if (e > 1e-13) rep.exact = false;
  for (size_t i = 0; i + 1 < errors.size(); ++i) {
    if (errors[i + 1] >= errors[i]) rep.monotone = false;
    if (errors[i] > 0.0 && errors[i + 1] > 0.0)
      rep.orders.push_back(std::log(errors[i] / errors[i + 1]) /
                           std::log(scales[i] / scales[i + 1]));
  }
  rep.min_order = rep.orders.empty()
                      ? 0.0
                      : *std::min_element(rep.orders.begin(), rep.orders.end());
  return rep;
}

VecField3 dense_momentum_solve(const SpectralPlan& plan, const Grid& grid,
                               const Field3& rho, const VecField3& forcing,
                               const VecField3& v_n, const SimParams& params,
                               double dt) {
  const Eigen::Index n3 = static_cast<Eigen::Index>(grid.nx) * grid.ny * grid.nz;
  if (n3 > 4096)
    throw SimError(ErrorKind::Config, "dense momentum oracle limited to small grids");
  const Eigen::Index n = 2 * n3;

  const Field3 mass = lifted_mass(params, rho);
  auto pack = [&](const VecField3& u) {
    Eigen::VectorXd out(n);
    out.head(n3) = u.x.flat().matrix();
    out.tail(n3) = u.y.flat().matrix();
    return out;
  };
  auto unpack = [&](const Eigen::VectorXd& u) {
    VecField3 out(grid.nx, grid.ny, grid.nz);
    out.x.flat() = u.head(n3).array();
    out.y.flat() = u.tail(n3).array();
    return out;
  };

  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(n);
  for (Eigen::Index col = 0; col < n; ++col) {
    unit[col] = 1.0;
    a.col(col) = pack(apply_cn_operator(plan, grid, mass, params, dt, unpack(unit)));
    unit[col] = 0.0;
  }
  const Eigen::VectorXd b =
      pack(cn_rhs(plan, grid, mass, params, dt, v_n, forcing));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  return unpack(lu.solve(b));
}

}  // namespace cpesim
