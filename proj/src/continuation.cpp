#include "bcm/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "bcm/estimate.hpp"

namespace bcm {

namespace {

constexpr double kGenericityThreshold = 1e-8;
constexpr double kGrowthGuard = 700.0;  // log of the double overflow edge

bool same_grid(const SignalTrace& a, const SignalTrace& b) {
  return a.values.size() == b.values.size() && a.t0 == b.t0 && a.h == b.h;
}

double trace_norm(const SignalTrace& t) {
  double s = 0.0;
  for (const Complex& v : t.values) s += std::norm(v);
  return std::sqrt(s);
}

std::vector<std::vector<Complex>> fit_channel(const std::vector<Pole>& poles,
                                              const SignalTrace& trace) {
  // A numerically silent channel fits to exact zeros directly; the lsq
  // design would be fine, but this keeps the output exact.
  if (trace_norm(trace) == 0.0) {
    std::vector<std::vector<Complex>> zeros;
    for (const Pole& p : poles) {
      zeros.emplace_back(static_cast<std::size_t>(p.multiplicity),
                         Complex(0.0));
    }
    return zeros;
  }
  const ExpPolyModel fit = recover_amplitudes_lsq(poles, trace);
  std::vector<std::vector<Complex>> coeffs;
  coeffs.reserve(fit.modes.size());
  for (const Mode& m : fit.modes) coeffs.push_back(m.coeffs);

  // Modes the channel does not excite inherit exact zeros.
  double largest = 0.0;
  for (const auto& mode_coeffs : coeffs) {
    for (const Complex& c : mode_coeffs) {
      largest = std::max(largest, std::abs(c));
    }
  }
  for (auto& mode_coeffs : coeffs) {
    bool silent = true;
    for (const Complex& c : mode_coeffs) {
      if (std::abs(c) > kGenericityThreshold * largest) {
        silent = false;
        break;
      }
    }
    if (silent) {
      std::fill(mode_coeffs.begin(), mode_coeffs.end(), Complex(0.0));
    }
  }
  return coeffs;
}

}  // namespace

ExpPolyModel channel_model(const TwoChannelModel& model, int channel) {
  if (channel != 0 && channel != 1) {
    throw InvalidInputError("channel index must be 0 or 1");
  }
  const auto& coeffs = channel == 0 ? model.coeffs0 : model.coeffs1;
  if (coeffs.size() != model.poles.size()) {
    throw InvalidInputError("two-channel model: coefficient lists do not "
                            "match the pole set");
  }
  std::vector<Mode> modes;
  for (std::size_t i = 0; i < model.poles.size(); ++i) {
    Mode m;
    m.pole = model.poles[i];
    m.coeffs = coeffs[i];
    modes.push_back(std::move(m));
  }
  // A channel may legitimately carry zero amplitudes for some mode.
  return make_model(std::move(modes), /*non_generic=*/true);
}

TwoChannelModel estimate_two_channel(const TwoChannelResponse& resp,
                                     const EstimateOptions& options) {
  if (!same_grid(resp.channel0, resp.channel1)) {
    throw InvalidInputError("two-channel estimate: channel grids differ");
  }

  // Poles and multiplicities from channel 0; channel 1 takes them over with
  // independently fitted amplitudes.  If channel 0 carries no signal the
  // roles swap.
  EstimateOptions pole_options = options;
  pole_options.recovery = RecoveryPath::kPaper;
  EstimateResult est;
  try {
    est = estimate_model(resp.channel0, pole_options);
  } catch (const NoSpectrumError&) {
    est = estimate_model(resp.channel1, pole_options);
  }

  TwoChannelModel model;
  for (const Mode& m : est.model.modes) {
    model.poles.push_back(m.pole);
  }
  // Amplitudes for both channels are fitted against the shared pole set;
  // refitting the estimating channel keeps the two channels on one amplitude
  // path and is what reaches round-trip accuracy on defective poles.
  model.coeffs0 = fit_channel(model.poles, resp.channel0);
  model.coeffs1 = fit_channel(model.poles, resp.channel1);
  return model;
}

GenericityReport is_generic(const TwoChannelModel& model, double threshold) {
  GenericityReport report;
  double largest = 0.0;
  for (const auto& channel : {&model.coeffs0, &model.coeffs1}) {
    for (const auto& mode_coeffs : *channel) {
      for (const Complex& c : mode_coeffs) {
        largest = std::max(largest, std::abs(c));
      }
    }
  }
  for (std::size_t i = 0; i < model.poles.size(); ++i) {
    const double lead0 =
        model.coeffs0[i].empty() ? 0.0 : std::abs(model.coeffs0[i].back());
    const double lead1 =
        model.coeffs1[i].empty() ? 0.0 : std::abs(model.coeffs1[i].back());
    if (!(std::max(lead0, lead1) > threshold * largest)) {
      report.generic = false;
      report.failing_modes.push_back(i);
    }
  }
  return report;
}

TwoChannelResponse extend_response(const TwoChannelModel& model, double t_from,
                                   double t_to, double h) {
  if (!(h > 0.0) || !(t_to > t_from)) {
    throw InvalidInputError("extend: invalid grid");
  }
  for (const Pole& p : model.poles) {
    const double worst = std::max(p.lambda.real() * t_to,
                                  p.lambda.real() * t_from);
    if (worst > kGrowthGuard) {
      std::ostringstream os;
      os << "extend: growth guard tripped for pole Re lambda = "
         << p.lambda.real() << " at t = "
         << (p.lambda.real() * t_to > p.lambda.real() * t_from ? t_to : t_from);
      throw InvalidInputError(os.str());
    }
  }
  // Snap to an integer node count when (t_to - t_from)/h is one up to
  // rounding; otherwise take the last node at or before t_to.
  const double ratio = (t_to - t_from) / h;
  const double rounded = std::round(ratio);
  const std::size_t steps =
      std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, rounded)
          ? static_cast<std::size_t>(rounded)
          : static_cast<std::size_t>(std::floor(ratio));
  const std::size_t n = steps + 1;
  if (n < 3) {
    throw InvalidInputError("extend: grid too coarse for the window");
  }

  const ExpPolyModel ch0 = channel_model(model, 0);
  const ExpPolyModel ch1 = channel_model(model, 1);
  TwoChannelResponse out;
  out.channel0 = synthesize(ch0, t_from, h, n);
  out.channel1 = synthesize(ch1, t_from, h, n);
  return out;
}

}  // namespace bcm
