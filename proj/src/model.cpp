#include "bcm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bcm {

namespace {

// Amplitude polynomial of one mode at t, factorial basis.
Complex amplitude_at(const std::vector<Complex>& coeffs, double t) {
  Complex p = 0.0;
  double power = 1.0;   // t^i
  double fact = 1.0;    // i!
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (i > 0) {
      power *= t;
      fact *= static_cast<double>(i);
    }
    p += coeffs[i] * (power / fact);
  }
  return p;
}

void check_mode(const Mode& mode, bool non_generic) {
  const Complex lam = mode.pole.lambda;
  if (!std::isfinite(lam.real()) || !std::isfinite(lam.imag())) {
    throw InvalidInputError("model: pole is not finite");
  }
  if (mode.pole.multiplicity < 1) {
    throw InvalidInputError("model: multiplicity must be >= 1");
  }
  if (mode.coeffs.size() != static_cast<std::size_t>(mode.pole.multiplicity)) {
    std::ostringstream os;
    os << "model: coefficient list length " << mode.coeffs.size()
       << " does not match multiplicity " << mode.pole.multiplicity;
    throw InvalidInputError(os.str());
  }
  for (const Complex& c : mode.coeffs) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw InvalidInputError("model: coefficient is not finite");
    }
  }
  if (!non_generic && std::abs(mode.coeffs.back()) == 0.0) {
    throw InvalidInputError(
        "model: leading coefficient a^L is zero; flag the model non-generic "
        "or drop the mode");
  }
}

}  // namespace

ExpPolyModel make_model(std::vector<Mode> modes, bool non_generic) {
  for (const Mode& m : modes) {
    check_mode(m, non_generic);
  }
  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    const Complex la = a.pole.lambda;
    const Complex lb = b.pole.lambda;
    if (la.real() != lb.real()) return la.real() < lb.real();
    return la.imag() < lb.imag();
  });
  for (std::size_t i = 1; i < modes.size(); ++i) {
    const Complex li = modes[i - 1].pole.lambda;
    const Complex lj = modes[i].pole.lambda;
    if (std::abs(li - lj) <= kPoleMergeTol * (1.0 + std::abs(li))) {
      std::ostringstream os;
      os << "model: poles (" << li.real() << "," << li.imag() << ") and ("
         << lj.real() << "," << lj.imag()
         << ") are closer than the merge tolerance";
      throw InvalidInputError(os.str());
    }
  }
  return ExpPolyModel{std::move(modes), non_generic};
}

Complex evaluate(const ExpPolyModel& model, double t) {
  Complex s = 0.0;
  for (const Mode& m : model.modes) {
    s += std::exp(m.pole.lambda * t) * amplitude_at(m.coeffs, t);
  }
  return s;
}

Complex evaluate_derivative(const ExpPolyModel& model, double t) {
  Complex s = 0.0;
  for (const Mode& m : model.modes) {
    const std::size_t L = m.coeffs.size();
    std::vector<Complex> da(L);
    for (std::size_t i = 0; i < L; ++i) {
      da[i] = m.pole.lambda * m.coeffs[i] +
              (i + 1 < L ? m.coeffs[i + 1] : Complex(0.0));
    }
    s += std::exp(m.pole.lambda * t) * amplitude_at(da, t);
  }
  return s;
}

SignalTrace synthesize(const ExpPolyModel& model, double t0, double h,
                       std::size_t n) {
  if (!(h > 0.0)) {
    throw InvalidInputError("synthesize: step must be positive");
  }
  if (n < 3) {
    throw InvalidInputError("synthesize: need at least 3 samples");
  }
  SignalTrace trace;
  trace.t0 = t0;
  trace.h = h;
  trace.values.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    trace.values[j] = evaluate(model, t0 + static_cast<double>(j) * h);
  }
  return trace;
}

std::vector<Complex> to_monomial(const std::vector<Complex>& coeffs) {
  std::vector<Complex> out(coeffs.size());
  double fact = 1.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (i > 0) fact *= static_cast<double>(i);
    out[i] = coeffs[i] / fact;
  }
  return out;
}

std::vector<Complex> from_monomial(const std::vector<Complex>& monomial) {
  std::vector<Complex> out(monomial.size());
  double fact = 1.0;
  for (std::size_t i = 0; i < monomial.size(); ++i) {
    if (i > 0) fact *= static_cast<double>(i);
    out[i] = monomial[i] * fact;
  }
  return out;
}

double model_distance(const ExpPolyModel& a, const ExpPolyModel& b, double w0,
                      double w1, std::size_t nodes) {
  if (!(w1 > w0)) {
    throw InvalidInputError("model_distance: empty window");
  }
  nodes = std::max<std::size_t>(nodes, 1001);
  const double h = (w1 - w0) / static_cast<double>(nodes - 1);
  double diff2 = 0.0;
  double na2 = 0.0;
  double nb2 = 0.0;
  for (std::size_t j = 0; j < nodes; ++j) {
    const double wq = (j == 0 || j + 1 == nodes) ? 0.5 * h : h;
    const double t = w0 + static_cast<double>(j) * h;
    const Complex va = evaluate(a, t);
    const Complex vb = evaluate(b, t);
    diff2 += wq * std::norm(va - vb);
    na2 += wq * std::norm(va);
    nb2 += wq * std::norm(vb);
  }
  const double denom = std::sqrt(std::max(na2, nb2));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff2) / denom;
}

}  // namespace bcm
