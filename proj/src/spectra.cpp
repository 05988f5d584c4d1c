#include "mvgrf/spectra.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mvgrf/error.hpp"

namespace mvgrf {

namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

// Integral over R^d of (kappa^2 + |omega|^2)^-(nu + d/2). Radial form with
// r = kappa tan(t):  surface(d) kappa^{-2 nu} int_0^{pi/2} sin^{d-1} cos^{2nu-1}.
double matern_mass(const MaternParams& p, int d) {
  const double surface = d == 1 ? 2.0 : 2.0 * std::numbers::pi;
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto integrand = [&](double t) {
    return std::pow(std::sin(t), d - 1) * std::pow(std::cos(t), 2.0 * p.nu - 1.0);
  };
  const double angular = integrator.integrate(integrand, 0.0, std::numbers::pi / 2);
  return surface * std::pow(p.kappa, -2.0 * p.nu) * angular;
}

template <class T>
void mix(std::uint64_t& h, const T& value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001B3ull;
  }
}

Eigen::MatrixXcd real_as_complex(const Eigen::MatrixXd& m) {
  return m.cast<std::complex<double>>();
}

// Lower-triangular L with L L^T = B B^T from the QR factorization of B^T,
// normalized to a nonnegative diagonal.
template <class Matrix>
Matrix lower_from_root(const Matrix& b) {
  const Eigen::Index p = b.rows();
  Eigen::HouseholderQR<Matrix> qr(b.adjoint());
  Matrix l = qr.matrixQR().topRows(p).template triangularView<Eigen::Upper>();
  l = l.adjoint().eval();
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto d = l(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) l.col(j) *= Eigen::numext::conj(d) / mag;
  }
  return l;
}

// Shared implementation for real and complex Hermitian inputs.
template <class Matrix>
Matrix sqrt_impl(const Matrix& h, SqrtMethod method, double trace) {
  using Scalar = typename Matrix::Scalar;
  const Eigen::Index p = h.rows();
  const double pivot_floor = 1e-12 * trace;

  if (method == SqrtMethod::lower_triangular) {
    Matrix l = Matrix::Zero(p, p);
    bool ok = true;
    for (Eigen::Index j = 0; j < p && ok; ++j) {
      double d = std::real(h(j, j));
      for (Eigen::Index k = 0; k < j; ++k) d -= std::norm(l(j, k));
      if (d < pivot_floor) {
        ok = false;
        break;
      }
      const double root = std::sqrt(d);
      l(j, j) = Scalar(root);
      for (Eigen::Index i = j + 1; i < p; ++i) {
        Scalar acc = h(i, j);
        for (Eigen::Index k = 0; k < j; ++k) acc -= l(i, k) * Eigen::numext::conj(l(j, k));
        l(i, j) = acc / root;
      }
    }
    if (ok) return l;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  const auto& lambda = eig.eigenvalues();
  const double min_eig = lambda.minCoeff();
  if (min_eig < -1e-8 * trace)
    throw DefinitenessError("matrix is not positive semidefinite (min eigenvalue " +
                                std::to_string(min_eig) + ")",
                            min_eig);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> root =
      lambda.cwiseMax(0.0).cwiseSqrt().template cast<Scalar>();
  const Matrix& v = eig.eigenvectors();
  if (method == SqrtMethod::hermitian) {
    Matrix out = v * root.asDiagonal() * v.adjoint();
    return (out + out.adjoint()) / 2.0;
  }
  return lower_from_root<Matrix>(v * root.asDiagonal());
}

}  // namespace

void MaternParams::validate() const {
  if (!finite_positive(variance) || !finite_positive(kappa) || !finite_positive(nu))
    throw ParameterError("Matern parameters must be positive and finite");
}

void WhiteBandParams::validate() const {
  if (!finite_positive(variance) || !finite_positive(bandwidth))
    throw ParameterError("white-band parameters must be positive and finite");
}

ComponentDensity::ComponentDensity(ComponentParams params, int d)
    : params_(std::move(params)), d_(d), constant_(0.0) {
  if (d != 1 && d != 2) throw DomainError("dimension must be 1 or 2");
  if (const auto* m = std::get_if<MaternParams>(&params_)) {
    m->validate();
    constant_ = m->variance / matern_mass(*m, d);
  } else {
    const auto& w = std::get<WhiteBandParams>(params_);
    w.validate();
    constant_ = w.variance / std::pow(2.0 * w.bandwidth, d);
  }
}

double ComponentDensity::variance() const {
  return std::visit([](const auto& p) { return p.variance; }, params_);
}

double ComponentDensity::operator()(std::span<const double> omega) const {
  if (static_cast<int>(omega.size()) < d_)
    throw ShapeError("frequency vector shorter than the dimension");
  double r2 = 0.0;
  for (int a = 0; a < d_; ++a) {
    if (!std::isfinite(omega[a])) throw DomainError("non-finite frequency");
    r2 += omega[a] * omega[a];
  }
  if (const auto* m = std::get_if<MaternParams>(&params_))
    return constant_ * std::pow(m->kappa * m->kappa + r2, -(m->nu + 0.5 * d_));
  const auto& w = std::get<WhiteBandParams>(params_);
  for (int a = 0; a < d_; ++a)
    if (std::abs(omega[a]) > w.bandwidth * (1.0 + 1e-12)) return 0.0;
  return constant_;
}

double component_density(const MaternParams& params, int d,
                         std::span<const double> omega) {
  return ComponentDensity(params, d)(omega);
}

SpectrumModel::SpectrumModel(int d, std::vector<ComponentParams> components,
                             std::vector<CrossTerm> cross)
    : d_(d), cross_(std::move(cross)) {
  if (d != 1 && d != 2) throw DomainError("dimension must be 1 or 2");
  if (components.empty()) throw ParameterError("model needs at least one component");
  densities_.reserve(components.size());
  for (auto& c : components) densities_.emplace_back(std::move(c), d);

  const int p = this->components();
  rho_ = Eigen::MatrixXd::Identity(p, p);
  delta_.assign(static_cast<std::size_t>(p) * p, {0.0, 0.0});
  for (const auto& t : cross_) {
    if (t.i < 0 || t.j >= p || t.i >= t.j)
      throw ParameterError("cross term indices must satisfy 0 <= i < j < p");
    if (!std::isfinite(t.rho) || t.rho < -1.0 || t.rho > 1.0)
      throw ParameterError("colocation coefficient must lie in [-1, 1]");
    if (rho_(t.i, t.j) != 0.0 || delta_[t.i * p + t.j] != std::array<double, 2>{0.0, 0.0})
      throw ParameterError("duplicate cross term");
    for (int a = 0; a < 2; ++a)
      if (!std::isfinite(t.delta[a])) throw ParameterError("phase lag must be finite");
    if (d == 1 && t.delta[1] != 0.0)
      throw ParameterError("phase lag has more entries than the dimension");
    rho_(t.i, t.j) = rho_(t.j, t.i) = t.rho;
    delta_[t.i * p + t.j] = t.delta;
  }
  if (p > 1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho_);
    if (eig.eigenvalues().minCoeff() < -1e-12)
      throw DefinitenessError("colocation matrix is not positive semidefinite",
                              eig.eigenvalues().minCoeff());
  }
}

Eigen::MatrixXcd SpectrumModel::cross_spectral_matrix(std::span<const double> omega) const {
  const int p = components();
  Eigen::VectorXd f(p);
  for (int i = 0; i < p; ++i) f[i] = densities_[i](omega);
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    s(i, i) = f[i];
    for (int j = i + 1; j < p; ++j) {
      const double rho = rho_(i, j);
      if (rho == 0.0) continue;
      const auto& delta = delta_[i * p + j];
      double phase = 0.0;
      for (int a = 0; a < d_; ++a) phase += omega[a] * delta[a];
      const std::complex<double> v =
          rho * std::sqrt(f[i] * f[j]) * std::polar(1.0, -phase);
      s(i, j) = v;
      s(j, i) = std::conj(v);
    }
  }
  return s;
}

std::uint64_t SpectrumModel::hash() const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  mix(h, d_);
  for (const auto& density : densities_) {
    mix(h, density.params().index());
    std::visit([&](const auto& p) {
      if constexpr (std::is_same_v<std::decay_t<decltype(p)>, MaternParams>) {
        mix(h, p.variance);
        mix(h, p.kappa);
        mix(h, p.nu);
      } else {
        mix(h, p.variance);
        mix(h, p.bandwidth);
      }
    }, density.params());
  }
  for (const auto& t : cross_) {
    mix(h, t.i);
    mix(h, t.j);
    mix(h, t.rho);
    mix(h, t.delta[0]);
    mix(h, t.delta[1]);
  }
  return h;
}

HermitianCheck validate_hermitian_psd(const Eigen::MatrixXcd& s, double tol) {
  if (s.rows() != s.cols()) throw ShapeError("matrix is not square");
  HermitianCheck out;
  if (s.size() == 0) {
    out.ok = true;
    return out;
  }
  out.max_asymmetry = (s - s.adjoint()).cwiseAbs().maxCoeff();
  Eigen::MatrixXcd h = (s + s.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  out.ok = out.max_asymmetry <= tol && out.min_eigenvalue >= -tol;
  return out;
}

const char* to_string(SqrtMethod m) {
  return m == SqrtMethod::lower_triangular ? "lower-triangular" : "hermitian";
}

SqrtMethod parse_sqrt_method(const std::string& name) {
  if (name == "lower-triangular") return SqrtMethod::lower_triangular;
  if (name == "hermitian") return SqrtMethod::hermitian;
  throw ParameterError("unknown square-root method '" + name + "'");
}

Eigen::MatrixXcd spectral_sqrt(const Eigen::MatrixXcd& s, SqrtMethod method) {
  if (s.rows() != s.cols()) throw ShapeError("matrix is not square");
  const Eigen::Index p = s.rows();
  if (p == 0) return s;
  const double trace = s.diagonal().real().sum();
  const double scale = std::max(trace, s.cwiseAbs().maxCoeff());
  if (!std::isfinite(scale)) throw DomainError("matrix has non-finite entries");
  if (scale == 0.0) return Eigen::MatrixXcd::Zero(p, p);
  if ((s - s.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw SymmetryError("matrix is not Hermitian");
  if (trace <= 0.0)
    throw DefinitenessError("matrix has nonpositive trace", trace);

  Eigen::MatrixXcd h = (s + s.adjoint()) / 2.0;
  if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::MatrixXd real = h.real();
    return real_as_complex(sqrt_impl<Eigen::MatrixXd>(real, method, trace));
  }
  return sqrt_impl<Eigen::MatrixXcd>(h, method, trace);
}

std::vector<Eigen::MatrixXcd> discretized_spectrum(const SpectrumModel& model,
                                                   const FrequencyGrid& freq) {
  if (model.dimension() != freq.grid.d)
    throw DomainError("model and grid dimensions differ");
  std::vector<Eigen::MatrixXcd> out(freq.size());
  for (std::size_t k = 0; k < freq.size(); ++k) {
    if (freq.kind[k] == FrequencyClass::reflected) continue;
    Eigen::MatrixXcd s = model.cross_spectral_matrix(freq.omega[k]);
    if (freq.kind[k] == FrequencyClass::self_conjugate) {
      out[k] = s.real().cast<std::complex<double>>();
    } else {
      out[freq.reflection[k]] = s.conjugate();
      out[k] = std::move(s);
    }
  }
  return out;
}

SpectralFilter build_filter(const SpectrumModel& model, const FrequencyGrid& freq,
                            SqrtMethod method) {
  SpectralFilter filter;
  filter.freq = freq;
  filter.method = method;
  filter.p = model.components();
  filter.factor.resize(freq.size());
  const auto spectrum = discretized_spectrum(model, freq);
  for (std::size_t k = 0; k < freq.size(); ++k) {
    if (freq.kind[k] == FrequencyClass::reflected) continue;
    Eigen::MatrixXcd l;
    try {
      l = spectral_sqrt(spectrum[k], method);
    } catch (const DefinitenessError& e) {
      std::ostringstream msg;
      msg << e.what() << " at omega = (" << freq.omega[k][0] << ", "
          << freq.omega[k][1] << ")";
      throw DefinitenessError(msg.str(), e.value(), static_cast<std::ptrdiff_t>(k));
    }
    if (freq.kind[k] == FrequencyClass::representative)
      filter.factor[freq.reflection[k]] = l.conjugate();
    filter.factor[k] = std::move(l);
  }
  return filter;
}

}  // namespace mvgrf
