#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bcm/continuation.hpp"
#include "bcm/estimate.hpp"
#include "bcm/io.hpp"
#include "bcm/model.hpp"
#include "bcm/oracle.hpp"

namespace {

using bcm::Complex;
using bcm::ExpPolyModel;
using bcm::format_double;
using bcm::Mode;

void print_summary(const std::string& status, std::size_t clusters,
                   double residual) {
  std::cout << "status=" << status << " clusters=" << clusters
            << " residual=" << format_double(residual) << '\n';
}

std::string format_complex(const Complex& c) {
  return "(" + format_double(c.real()) + "," + format_double(c.imag()) + ")";
}

bool is_two_channel_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw bcm::InvalidInputError("cannot open " + path);
  }
  std::string first;
  std::getline(in, first);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  return first == "model: exp-poly-2ch";
}

struct SynthArgs {
  std::string model_path;
  std::string out_path;
  double t0 = 0.0;
  double T = 1.0;
  std::size_t n = 201;
  bool two_channel = false;
};

int run_synth(const SynthArgs& args) {
  if (!(args.T > 0.0)) {
    throw bcm::InvalidInputError("synth: T must be positive");
  }
  if (args.n < 8) {
    throw bcm::InvalidInputError("synth: need at least 8 pencil nodes");
  }
  const double h = args.T / static_cast<double>(args.n - 1);
  const std::size_t samples = 2 * args.n - 1;
  std::size_t mode_count = 0;
  if (args.two_channel) {
    const bcm::TwoChannelModel model =
        bcm::read_two_channel_model(args.model_path);
    bcm::TwoChannelResponse resp;
    resp.channel0 =
        bcm::synthesize(bcm::channel_model(model, 0), args.t0, h, samples);
    resp.channel1 =
        bcm::synthesize(bcm::channel_model(model, 1), args.t0, h, samples);
    bcm::write_two_channel_trace(resp, args.out_path);
    mode_count = model.poles.size();
  } else {
    const ExpPolyModel model = bcm::read_model(args.model_path);
    bcm::write_trace(bcm::synthesize(model, args.t0, h, samples),
                     args.out_path);
    mode_count = model.modes.size();
  }
  print_summary("ok", mode_count, 0.0);
  return 0;
}

struct EstimateArgs {
  std::string trace_path;
  std::string out_path;
  double rank_tol = bcm::PencilConfig{}.rank_tol;
  double cluster_tol = bcm::PencilConfig{}.cluster_tol;
  double residual_tol = bcm::PencilConfig{}.residual_tol;
  std::string derivative = "fd";
  std::string recovery = "paper";
};

int run_estimate(const EstimateArgs& args) {
  const bcm::SignalTrace trace = bcm::read_trace(args.trace_path);

  bcm::EstimateOptions options;
  options.pencil.rank_tol = args.rank_tol;
  options.pencil.cluster_tol = args.cluster_tol;
  options.pencil.residual_tol = args.residual_tol;

  std::optional<ExpPolyModel> reference;
  if (args.derivative == "fd") {
    options.derivative = bcm::DerivativeMode::kFiniteDifference;
  } else if (args.derivative.rfind("analytic:", 0) == 0) {
    reference = bcm::read_model(args.derivative.substr(9));
    options.derivative = bcm::DerivativeMode::kAnalytic;
    options.reference = &*reference;
  } else {
    throw bcm::InvalidInputError(
        "estimate: --derivative must be 'fd' or 'analytic:PATH'");
  }

  if (args.recovery == "paper") {
    options.recovery = bcm::RecoveryPath::kPaper;
  } else if (args.recovery == "lsq") {
    options.recovery = bcm::RecoveryPath::kLsq;
  } else if (args.recovery == "both") {
    options.recovery = bcm::RecoveryPath::kBoth;
  } else {
    throw bcm::InvalidInputError(
        "estimate: --recovery must be 'paper', 'lsq', or 'both'");
  }

  const bcm::EstimateResult result = bcm::estimate_model(trace, options);

  for (std::size_t i = 0; i < result.clusters.size(); ++i) {
    const bcm::JordanCluster& c = result.clusters[i];
    std::cout << "cluster " << (i + 1) << ": lambda="
              << format_complex(c.lambda) << " multiplicity="
              << c.multiplicity << " residual="
              << format_double(c.residuals.empty() ? 0.0 : c.residuals[0])
              << '\n';
  }
  std::cout << "reconstruction residual: " << format_double(result.residual)
            << '\n';
  for (const std::string& note : result.notes) {
    std::cout << "note: " << note << '\n';
  }

  bcm::write_model(result.model, args.out_path);
  if (result.lsq_model) {
    bcm::write_model(*result.lsq_model, args.out_path + ".lsq");
    // Agreement report between the two coefficient paths.
    double worst = 0.0;
    for (std::size_t i = 0; i < result.model.modes.size(); ++i) {
      const Mode& a = result.model.modes[i];
      const Mode& b = result.lsq_model->modes[i];
      double scale = 0.0;
      for (const Complex& c : b.coeffs) {
        scale = std::max(scale, std::abs(c));
      }
      if (scale == 0.0) continue;
      for (std::size_t k = 0; k < a.coeffs.size(); ++k) {
        worst = std::max(worst, std::abs(a.coeffs[k] - b.coeffs[k]) / scale);
      }
    }
    std::cout << "recovery agreement: max coefficient deviation "
              << format_double(worst) << '\n';
  }

  print_summary("ok", result.clusters.size(), result.residual);
  return 0;
}

struct ExtendArgs {
  std::string model_path;
  std::string out_path;
  double from = 0.0;
  double to = 0.0;
  double step = 0.0;
};

int run_extend(const ExtendArgs& args) {
  if (is_two_channel_model_file(args.model_path)) {
    const bcm::TwoChannelModel model =
        bcm::read_two_channel_model(args.model_path);
    const bcm::TwoChannelResponse resp =
        bcm::extend_response(model, args.from, args.to, args.step);
    bcm::write_two_channel_trace(resp, args.out_path);
    print_summary("ok", model.poles.size(), 0.0);
    return 0;
  }
  const ExpPolyModel model = bcm::read_model(args.model_path);
  bcm::TwoChannelModel wrapped;
  for (const Mode& m : model.modes) {
    wrapped.poles.push_back(m.pole);
    wrapped.coeffs0.push_back(m.coeffs);
    wrapped.coeffs1.push_back(m.coeffs);
  }
  const bcm::TwoChannelResponse resp =
      bcm::extend_response(wrapped, args.from, args.to, args.step);
  bcm::write_trace(resp.channel0, args.out_path);
  print_summary("ok", model.modes.size(), 0.0);
  return 0;
}

struct CompareArgs {
  std::vector<std::string> models;
  std::vector<double> window;
  bool strict = false;
};

int run_compare(const CompareArgs& args) {
  const ExpPolyModel a = bcm::read_model(args.models[0]);
  const ExpPolyModel b = bcm::read_model(args.models[1]);
  const double w0 = args.window[0];
  const double w1 = args.window[1];

  // Greedy nearest-pole matching.
  std::vector<bool> used(b.modes.size(), false);
  bool clean = a.modes.size() == b.modes.size();
  std::size_t matched = 0;
  for (const Mode& ma : a.modes) {
    std::ptrdiff_t best = -1;
    double best_d = 0.0;
    for (std::size_t j = 0; j < b.modes.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(ma.pole.lambda - b.modes[j].pole.lambda);
      if (best < 0 || d < best_d) {
        best = static_cast<std::ptrdiff_t>(j);
        best_d = d;
      }
    }
    if (best < 0) {
      std::cout << "unmatched in A: pole " << format_complex(ma.pole.lambda)
                << '\n';
      clean = false;
      continue;
    }
    used[static_cast<std::size_t>(best)] = true;
    ++matched;
    const Mode& mb = b.modes[static_cast<std::size_t>(best)];
    double scale = 0.0;
    double dev = 0.0;
    const std::size_t common =
        std::min(ma.coeffs.size(), mb.coeffs.size());
    for (std::size_t k = 0; k < common; ++k) {
      scale = std::max({scale, std::abs(ma.coeffs[k]), std::abs(mb.coeffs[k])});
    }
    for (std::size_t k = 0; k < common; ++k) {
      dev = std::max(dev, std::abs(ma.coeffs[k] - mb.coeffs[k]));
    }
    std::cout << "pole " << format_complex(ma.pole.lambda) << " <-> "
              << format_complex(mb.pole.lambda)
              << ": dlambda=" << format_double(best_d) << " multiplicity "
              << ma.pole.multiplicity << "/" << mb.pole.multiplicity
              << " coeff deviation "
              << format_double(scale > 0.0 ? dev / scale : dev) << '\n';
    if (ma.pole.multiplicity != mb.pole.multiplicity) clean = false;
  }
  for (std::size_t j = 0; j < b.modes.size(); ++j) {
    if (!used[j]) {
      std::cout << "unmatched in B: pole "
                << format_complex(b.modes[j].pole.lambda) << '\n';
      clean = false;
    }
  }
  const double distance = bcm::model_distance(a, b, w0, w1);
  std::cout << "model distance: " << format_double(distance) << '\n';
  print_summary("ok", matched, distance);
  return (args.strict && !clean) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral estimation of exponential-polynomial signals"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "Sample a model file into a trace");
  synth_cmd->add_option("--model", synth.model_path, "model file")->required();
  synth_cmd->add_option("--out", synth.out_path, "output trace file")
      ->required();
  synth_cmd->add_option("--t0", synth.t0, "start time (default 0)");
  synth_cmd->add_option("--T", synth.T, "half window; trace covers [t0, t0+2T]")
      ->required();
  synth_cmd->add_option("--n", synth.n, "pencil nodes; the trace gets 2n-1 samples")
      ->required();
  synth_cmd->add_flag("--two-channel", synth.two_channel,
                      "model and trace carry v0/v1 channels");

  EstimateArgs est;
  CLI::App* est_cmd =
      app.add_subcommand("estimate", "Recover poles and amplitudes from a trace");
  est_cmd->add_option("--trace", est.trace_path, "input trace file")
      ->required();
  est_cmd->add_option("--out", est.out_path, "output model file")->required();
  est_cmd->add_option("--rank-tol", est.rank_tol,
                      "relative singular-value cutoff");
  est_cmd->add_option("--cluster-tol", est.cluster_tol,
                      "eigenvalue merge radius");
  est_cmd->add_option("--residual-tol", est.residual_tol,
                      "spurious-eigenpair filter");
  est_cmd->add_option("--derivative", est.derivative,
                      "'fd' or 'analytic:PATH' (reference model)");
  est_cmd->add_option("--recovery", est.recovery, "'paper', 'lsq', or 'both'");

  ExtendArgs ext;
  CLI::App* ext_cmd =
      app.add_subcommand("extend", "Evaluate a model outside its window");
  ext_cmd->add_option("--model", ext.model_path, "model file")->required();
  ext_cmd->add_option("--from", ext.from, "window start")->required();
  ext_cmd->add_option("--to", ext.to, "window end")->required();
  ext_cmd->add_option("--step", ext.step, "sample step")->required();
  ext_cmd->add_option("--out", ext.out_path, "output trace file")->required();

  CompareArgs cmp;
  CLI::App* cmp_cmd =
      app.add_subcommand("compare", "Match poles of two model files");
  cmp_cmd->add_option("--model", cmp.models, "the two model files to compare")
      ->expected(2)
      ->required();
  cmp_cmd->add_option("--window", cmp.window, "comparison window [a b]")
      ->expected(2)
      ->required();
  cmp_cmd->add_flag("--strict", cmp.strict,
                    "exit 1 on unmatched poles or multiplicity mismatch");

  int code = 0;
  synth_cmd->callback([&] { code = run_synth(synth); });
  est_cmd->callback([&] { code = run_estimate(est); });
  ext_cmd->callback([&] { code = run_extend(ext); });
  cmp_cmd->callback([&] { code = run_compare(cmp); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    print_summary("error", 0, 0.0);
    return 2;
  } catch (const bcm::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    print_summary("error", 0, 0.0);
    return 2;
  } catch (const bcm::NoSpectrumError& e) {
    std::cerr << "error: " << e.what() << '\n';
    print_summary("nopoles", 0, 0.0);
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    print_summary("error", 0, 0.0);
    return 4;
  }
  return code;
}
