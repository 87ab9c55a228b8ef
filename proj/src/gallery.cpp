#include "siph/gallery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace siph {

namespace {

double sgn(double v) { return (v > 0.0) - (v < 0.0); }

GroundTruth truth(bool si, std::optional<double> ph, bool decomposable, bool compact, bool diff,
                  bool cont) {
  return GroundTruth{si, ph, decomposable, compact, diff, cont};
}

const std::vector<std::string> kCenter{"center"};

std::vector<GalleryEntry> build_registry() {
  std::vector<GalleryEntry> r;
  r.push_back({"sphere", "||x||^2", 1, truth(true, 2.0, true, true, true, true), true, kCenter});
  r.push_back({"sq_norm", "||x||^2", 1, truth(true, 2.0, true, true, true, true), true, kCenter});
  r.push_back({"norm", "||x||", 1, truth(true, 1.0, true, true, false, true), true, kCenter});
  r.push_back({"ellipsoid", "x^T A x, A symmetric positive definite (default diag 1..4 log-spaced)",
               1, truth(true, 2.0, true, true, true, true), true, {"center", "diag", "A"}});
  r.push_back({"half_norm", "(sum_i sqrt|x_i|)^2", 1, truth(true, 1.0, true, true, false, true),
               false, kCenter});
  r.push_back({"linear_x1", "x_1", 1, truth(true, 1.0, true, false, true, true), true, kCenter});
  r.push_back({"piecewise_ph", "x_1 if x_1 x_2 > 0, else 0", 2,
               truth(true, 1.0, true, false, false, false), false, kCenter});
  r.push_back({"tanh_exp", "tanh(x_1) if x_1 >= 0, else 1 + exp(-x_1)", 1,
               truth(true, std::nullopt, false, false, false, false), false, kCenter});
  r.push_back({"gauss_si", "exp(-||x||^2)", 1, truth(true, std::nullopt, true, false, true, true),
               true, kCenter});
  r.push_back({"saddle_si", "phi(||x||^2), phi(t) = t/2 - sin(2t)/4", 1,
               truth(true, std::nullopt, true, true, true, true), true, kCenter});
  r.push_back({"logsq_si", "phi(|x_1|), phi(t) = int_0^t du/(1+log^2 u)", 1,
               truth(true, std::nullopt, true, false, true, true), true, kCenter});
  r.push_back({"footnote_1d", "x_1 if x_1 >= 0, else x_1^2", 1,
               truth(false, std::nullopt, false, false, false, true), false, kCenter});
  r.push_back({"zero", "0", 1, truth(true, 1.0, true, false, true, true), true, kCenter});
  r.push_back({"random_si", "phi(||x||(1 + eps g(x/||x||))), seeded", 1,
               truth(true, std::nullopt, true, true, true, true), true,
               {"center", "seed", "eps", "modes"}});
  return r;
}

Regularity regularity_of(const GroundTruth& t) {
  if (t.differentiable) return Regularity::c1;
  if (t.continuous) return Regularity::continuous;
  return Regularity::lower_semicontinuous;
}

double scalar_param(const Params& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (it->second.size() != 1) throw GalleryError("parameter '" + key + "' expects one value");
  return it->second.front();
}

struct Built {
  Evaluator f;
  GradientFn grad;
};

Built make_ellipsoid(std::size_t n, const Params& params) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (auto it = params.find("A"); it != params.end()) {
    if (params.count("diag")) throw GalleryError("ellipsoid: give either 'A' or 'diag', not both");
    if (it->second.size() != n * n) {
      throw GalleryError("ellipsoid: 'A' needs n*n = " + std::to_string(n * n) + " values");
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) A(i, j) = it->second[i * n + j];
  } else if (auto jt = params.find("diag"); jt != params.end()) {
    if (jt->second.size() != n) throw GalleryError("ellipsoid: 'diag' needs n values");
    for (std::size_t i = 0; i < n; ++i) A(i, i) = jt->second[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double e = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      A(i, i) = std::pow(4.0, e);
    }
  }
  if (!A.allFinite()) throw GalleryError("ellipsoid: matrix has non-finite entries");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + A.cwiseAbs().maxCoeff())) {
    throw GalleryError("ellipsoid: matrix is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw GalleryError("ellipsoid: matrix is not positive definite");

  std::vector<double> a(A.data(), A.data() + A.size());  // column-major, symmetric
  Evaluator f = [a, n](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double row = 0.0;
      for (std::size_t i = 0; i < n; ++i) row += a[j * n + i] * x[i];
      s += x[j] * row;
    }
    return s;
  };
  GradientFn g = [a, n](std::span<const double> x) {
    Vec out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double row = 0.0;
      for (std::size_t i = 0; i < n; ++i) row += a[j * n + i] * x[i];
      out[j] = 2.0 * row;
    }
    return out;
  };
  return {f, g};
}

Built make_entry(const std::string& name, std::size_t n, const Params& params) {
  if (name == "sphere" || name == "sq_norm") {
    return {[](std::span<const double> x) { return norm2(x); },
            [](std::span<const double> x) { return scaled(x, 2.0); }};
  }
  if (name == "norm") {
    return {[](std::span<const double> x) { return std::sqrt(norm2(x)); },
            [](std::span<const double> x) {
              const double r = std::sqrt(norm2(x));
              return r == 0.0 ? Vec(x.size(), 0.0) : scaled(x, 1.0 / r);
            }};
  }
  if (name == "ellipsoid") return make_ellipsoid(n, params);
  if (name == "half_norm") {
    return {[](std::span<const double> x) {
              double s = 0.0;
              for (double v : x) s += std::sqrt(std::fabs(v));
              return s * s;
            },
            {}};
  }
  if (name == "linear_x1") {
    return {[](std::span<const double> x) { return x[0]; },
            [](std::span<const double> x) { return unit_vector(x.size(), 0); }};
  }
  if (name == "piecewise_ph") {
    return {[](std::span<const double> x) { return x[0] * x[1] > 0.0 ? x[0] : 0.0; }, {}};
  }
  if (name == "tanh_exp") {
    return {[](std::span<const double> x) {
              return x[0] >= 0.0 ? std::tanh(x[0]) : 1.0 + std::exp(-x[0]);
            },
            {}};
  }
  if (name == "gauss_si") {
    return {[](std::span<const double> x) { return std::exp(-norm2(x)); },
            [](std::span<const double> x) { return scaled(x, -2.0 * std::exp(-norm2(x))); }};
  }
  if (name == "saddle_si") {
    return {[](std::span<const double> x) { return saddle_phi(norm2(x)); },
            [](std::span<const double> x) {
              const double s = std::sin(norm2(x));
              return scaled(x, 2.0 * s * s);
            }};
  }
  if (name == "logsq_si") {
    return {[](std::span<const double> x) { return logsq_phi(std::fabs(x[0])); },
            [](std::span<const double> x) {
              Vec g(x.size(), 0.0);
              const double a = std::fabs(x[0]);
              if (a > 0.0) {
                const double l = std::log(a);
                g[0] = sgn(x[0]) / (1.0 + l * l);
              }
              return g;
            }};
  }
  if (name == "footnote_1d") {
    return {[](std::span<const double> x) { return x[0] >= 0.0 ? x[0] : x[0] * x[0]; }, {}};
  }
  if (name == "zero") {
    return {[](std::span<const double>) { return 0.0; },
            [](std::span<const double> x) { return Vec(x.size(), 0.0); }};
  }
  throw GalleryError("unknown gallery entry '" + name + "'");
}

}  // namespace

const std::vector<GalleryEntry>& gallery_registry() {
  static const std::vector<GalleryEntry> registry = build_registry();
  return registry;
}

const GalleryEntry& gallery_entry(const std::string& name) {
  for (const auto& e : gallery_registry())
    if (e.name == name) return e;
  throw GalleryError("unknown gallery entry '" + name + "'");
}

nlohmann::ordered_json gallery_json() {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : gallery_registry()) {
    nlohmann::ordered_json t;
    t["si"] = e.truth.si;
    t["ph_degree"] = e.truth.ph_degree ? nlohmann::ordered_json(*e.truth.ph_degree) : nullptr;
    t["decomposable"] = e.truth.decomposable;
    t["compact_sublevel"] = e.truth.compact_sublevel;
    t["differentiable"] = e.truth.differentiable;
    t["continuous"] = e.truth.continuous;
    nlohmann::ordered_json j;
    j["name"] = e.name;
    j["description"] = e.description;
    j["min_dim"] = e.min_dim;
    j["analytic_gradient"] = e.analytic_gradient;
    j["params"] = e.params;
    j["ground_truth"] = t;
    entries.push_back(j);
  }
  return entries;
}

ScalarField make_builtin(const std::string& name, std::size_t n, const Params& params) {
  const GalleryEntry& entry = gallery_entry(name);
  if (n < entry.min_dim) {
    throw GalleryError(name + " needs dimension >= " + std::to_string(entry.min_dim));
  }
  for (const auto& [key, _] : params) {
    if (std::find(entry.params.begin(), entry.params.end(), key) == entry.params.end()) {
      throw GalleryError(name + ": unknown parameter '" + key + "'");
    }
  }

  ScalarField field = [&] {
    if (name == "random_si") {
      const double seed = scalar_param(params, "seed", 0.0);
      const double modes = scalar_param(params, "modes", 4.0);
      if (seed < 0.0 || seed != std::floor(seed)) throw GalleryError("random_si: bad seed");
      if (modes < 1.0 || modes != std::floor(modes)) throw GalleryError("random_si: bad modes");
      return random_si(static_cast<std::uint64_t>(seed), n, scalar_param(params, "eps", 0.3),
                       static_cast<int>(modes));
    }
    Built b = make_entry(name, n, params);
    FieldInfo info{name, entry.truth.ph_degree, entry.truth.si, regularity_of(entry.truth)};
    return ScalarField(n, std::move(b.f), std::move(info), std::move(b.grad));
  }();

  if (auto it = params.find("center"); it != params.end()) {
    if (it->second.size() != n) throw GalleryError(name + ": 'center' needs n values");
    field = field.translated(it->second);
  }
  return field;
}

double saddle_phi(double t) { return t / 2.0 - std::sin(2.0 * t) / 4.0; }

double logsq_phi(double t) {
  if (!(t > 0.0)) return 0.0;
  if (std::isinf(t)) return t;
  // u = e^{-v} turns the log singularity at u = 0 into an exponential tail.
  auto integrand = [](double v) { return std::exp(-v) / (1.0 + v * v); };
  const double a = -std::log(t);
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, a, std::numeric_limits<double>::infinity(), 15, 1e-13, &error);
}

MonotoneTransform MonotoneTransform::identity() { return MonotoneTransform(Kind::identity); }

MonotoneTransform MonotoneTransform::power(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw GalleryError("power transform needs beta > 0");
  MonotoneTransform m(Kind::power);
  m.a_ = beta;
  return m;
}

MonotoneTransform MonotoneTransform::exp_neg() { return MonotoneTransform(Kind::exp_neg); }

MonotoneTransform MonotoneTransform::affine(double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw GalleryError("affine transform needs a > 0 and finite b");
  }
  MonotoneTransform m(Kind::affine);
  m.a_ = a;
  m.b_ = b;
  return m;
}

MonotoneTransform MonotoneTransform::tanh() { return MonotoneTransform(Kind::tanh); }

MonotoneTransform MonotoneTransform::table(Vec t, Vec y) {
  if (t.size() != y.size() || t.size() < 2) {
    throw GalleryError("table transform needs at least two (t, y) knots");
  }
  const double dir = sgn(y[1] - y[0]);
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw GalleryError("table transform: knots must strictly increase");
    if (dir == 0.0 || sgn(y[i] - y[i - 1]) != dir) {
      throw GalleryError("table transform: values must be strictly monotone");
    }
  }
  MonotoneTransform m(Kind::table);
  m.knots_t_ = std::move(t);
  m.knots_y_ = std::move(y);
  return m;
}

MonotoneTransform MonotoneTransform::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  Vec args;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        args.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw GalleryError("transform '" + spec + "': bad number '" + item + "'");
      }
    }
  }
  auto want = [&](std::size_t k) {
    if (args.size() != k) throw GalleryError("transform '" + head + "' takes " + std::to_string(k) + " argument(s)");
  };
  if (head == "identity") return want(0), identity();
  if (head == "power") return want(1), power(args[0]);
  if (head == "exp_neg") return want(0), exp_neg();
  if (head == "affine") return want(2), affine(args[0], args[1]);
  if (head == "tanh") return want(0), tanh();
  if (head == "table") {
    if (args.size() % 2 != 0) throw GalleryError("table transform takes t,y pairs");
    Vec t, y;
    for (std::size_t i = 0; i < args.size(); i += 2) {
      t.push_back(args[i]);
      y.push_back(args[i + 1]);
    }
    return table(std::move(t), std::move(y));
  }
  throw GalleryError("unknown transform '" + head + "'");
}

double MonotoneTransform::operator()(double t) const {
  switch (kind_) {
    case Kind::identity: return t;
    case Kind::power: return sgn(t) * std::pow(std::fabs(t), a_);
    case Kind::exp_neg: return std::exp(-t);
    case Kind::affine: return a_ * t + b_;
    case Kind::tanh: return std::tanh(t);
    case Kind::table: {
      const auto& T = knots_t_;
      std::size_t i = static_cast<std::size_t>(std::upper_bound(T.begin(), T.end(), t) - T.begin());
      i = std::clamp<std::size_t>(i, 1, T.size() - 1);
      const double w = (t - T[i - 1]) / (T[i] - T[i - 1]);
      return knots_y_[i - 1] + w * (knots_y_[i] - knots_y_[i - 1]);
    }
  }
  return t;
}

double MonotoneTransform::derivative(double t) const {
  switch (kind_) {
    case Kind::identity: return 1.0;
    case Kind::power: {
      const double at = std::fabs(t);
      if (at == 0.0) return a_ == 1.0 ? 1.0 : (a_ > 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
      return a_ * std::pow(at, a_ - 1.0);
    }
    case Kind::exp_neg: return -std::exp(-t);
    case Kind::affine: return a_;
    case Kind::tanh: {
      const double c = std::cosh(t);
      return 1.0 / (c * c);
    }
    case Kind::table: {
      const auto& T = knots_t_;
      std::size_t i = static_cast<std::size_t>(std::upper_bound(T.begin(), T.end(), t) - T.begin());
      i = std::clamp<std::size_t>(i, 1, T.size() - 1);
      return (knots_y_[i] - knots_y_[i - 1]) / (T[i] - T[i - 1]);
    }
  }
  return 1.0;
}

int MonotoneTransform::orientation() const {
  if (kind_ == Kind::exp_neg) return -1;
  if (kind_ == Kind::table) return knots_y_[1] > knots_y_[0] ? 1 : -1;
  return 1;
}

std::string MonotoneTransform::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::identity: os << "identity"; break;
    case Kind::power: os << "power:" << a_; break;
    case Kind::exp_neg: os << "exp_neg"; break;
    case Kind::affine: os << "affine:" << a_ << ',' << b_; break;
    case Kind::tanh: os << "tanh"; break;
    case Kind::table:
      os << "table:";
      for (std::size_t i = 0; i < knots_t_.size(); ++i)
        os << (i ? "," : "") << knots_t_[i] << ',' << knots_y_[i];
      break;
  }
  return os.str();
}

ScalarField compose(const MonotoneTransform& phi, const ScalarField& p) {
  if (!p.info().ph_degree) {
    throw GalleryError("compose: '" + p.name() + "' carries no positive homogeneity degree");
  }
  const double alpha = *p.info().ph_degree;
  std::optional<double> degree;
  if (phi.kind() == MonotoneTransform::Kind::identity) degree = alpha;
  if (phi.kind() == MonotoneTransform::Kind::power) degree = alpha * phi.scale();
  if (phi.kind() == MonotoneTransform::Kind::affine && phi.offset() == 0.0) degree = alpha;

  Regularity reg = p.info().regularity;
  if (phi.kind() == MonotoneTransform::Kind::table && reg != Regularity::lower_semicontinuous) {
    reg = Regularity::continuous;
  }
  FieldInfo info{phi.describe() + "(" + p.name() + ")", degree, true, reg};

  Evaluator f = [phi, p](std::span<const double> x) { return phi(p.value(x)); };
  GradientFn g;
  if (p.has_gradient()) {
    g = [phi, p](std::span<const double> x) {
      return scaled(*p.analytic_gradient(x), phi.derivative(p.value(x)));
    };
  }
  return ScalarField(p.dim(), std::move(f), std::move(info), std::move(g), p.reference());
}

RandomSI::RandomSI(std::uint64_t seed, std::size_t n, double eps, int modes) : n_(n), eps_(eps) {
  if (n == 0) throw DimensionError("random_si: dimension must be positive");
  if (!(eps >= 0.0) || !(eps < 1.0)) throw GalleryError("random_si: eps must lie in [0, 1)");
  if (modes < 1) throw GalleryError("random_si: modes must be positive");
  Rng rng(derive_seed(seed, 0x5157, 0));
  double sum = 0.0;
  for (int k = 0; k < modes; ++k) {
    Vec w(n);
    for (auto& v : w) v = 1.5 * rng.normal();
    omega_.push_back(std::move(w));
    const double a = rng.uniform(0.5, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    amp_.push_back(a);
    sum += std::fabs(a);
    phase_.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  amp_sum_ = sum;
  double csum = 0.0;
  for (int j = 0; j < modes; ++j) {
    const double c = rng.uniform(0.2, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    c_.push_back(c);
    csum += std::fabs(c);
    nu_.push_back(rng.log_uniform(0.5, 3.0));
    d_.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  for (auto& c : c_) c /= csum;
  label_ = "random_si(seed=" + std::to_string(seed) + ")";
}

double RandomSI::g(std::span<const double> u) const {
  double s = 0.0;
  for (std::size_t k = 0; k < omega_.size(); ++k) s += amp_[k] * std::sin(dot(omega_[k], u) + phase_[k]);
  return s / amp_sum_;
}

double RandomSI::p(std::span<const double> x) const {
  const double r = std::sqrt(norm2(x));
  if (r == 0.0) return 0.0;
  const Vec u = scaled(x, 1.0 / r);
  return r * (1.0 + eps_ * g(u));
}

Vec RandomSI::grad_p(std::span<const double> x) const {
  const double r = std::sqrt(norm2(x));
  if (r == 0.0) return Vec(n_, 0.0);
  const Vec u = scaled(x, 1.0 / r);
  Vec dg(n_, 0.0);
  for (std::size_t k = 0; k < omega_.size(); ++k) {
    const double c = amp_[k] * std::cos(dot(omega_[k], u) + phase_[k]) / amp_sum_;
    for (std::size_t i = 0; i < n_; ++i) dg[i] += c * omega_[k][i];
  }
  const double radial = dot(dg, u);
  const double gu = g(u);
  Vec out(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    out[i] = u[i] * (1.0 + eps_ * gu) + eps_ * (dg[i] - radial * u[i]);
  }
  return out;
}

double RandomSI::phi(double t) const {
  double s = t;
  for (std::size_t j = 0; j < c_.size(); ++j) {
    s += 0.5 * c_[j] * (std::cos(d_[j]) - std::cos(nu_[j] * t + d_[j])) / nu_[j];
  }
  return s;
}

double RandomSI::phi_prime(double t) const {
  double s = 1.0;
  for (std::size_t j = 0; j < c_.size(); ++j) s += 0.5 * c_[j] * std::sin(nu_[j] * t + d_[j]);
  return s;
}

ScalarField RandomSI::homogeneous_part() const {
  auto self = std::make_shared<const RandomSI>(*this);
  FieldInfo info{label_ + ".p", 1.0, true, Regularity::continuous};
  return ScalarField(n_, [self](std::span<const double> x) { return self->p(x); }, std::move(info),
                     [self](std::span<const double> x) { return self->grad_p(x); });
}

ScalarField RandomSI::field() const {
  auto self = std::make_shared<const RandomSI>(*this);
  FieldInfo info{label_, std::nullopt, true, Regularity::c1};
  return ScalarField(
      n_, [self](std::span<const double> x) { return self->phi(self->p(x)); }, std::move(info),
      [self](std::span<const double> x) {
        return scaled(self->grad_p(x), self->phi_prime(self->p(x)));
      });
}

ScalarField random_si(std::uint64_t seed, std::size_t n, double eps, int modes) {
  return RandomSI(seed, n, eps, modes).field();
}

}  // namespace siph
