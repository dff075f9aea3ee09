#include <cmath>
#include <complex>
#include <vector>

#include <doctest.h>

#include "bcm/discretization.hpp"
#include "bcm/model.hpp"
#include "bcm/pencil.hpp"
#include "bcm/recovery.hpp"

using bcm::Complex;
using bcm::DerivativeMode;
using bcm::JordanCluster;
using bcm::PencilConfig;
using bcm::Vec;

namespace {

bcm::Mode mode_of(Complex lambda, std::vector<Complex> coeffs) {
  bcm::Mode m;
  m.pole = {lambda, static_cast<int>(coeffs.size())};
  m.coeffs = std::move(coeffs);
  return m;
}

struct Pipeline {
  bcm::SignalTrace trace;
  bcm::KernelPencil pencil;
  std::vector<JordanCluster> matched;
};

Pipeline run_pipeline(const bcm::ExpPolyModel& model, double T, int n,
                      DerivativeMode mode) {
  Pipeline p;
  p.trace = bcm::synthesize(model, 0.0, T / (n - 1), 2 * n - 1);
  p.pencil = bcm::build_pencil(
      p.trace, mode, mode == DerivativeMode::kAnalytic ? &model : nullptr);
  const PencilConfig config{};
  p.matched = bcm::match_clusters(bcm::solve_forward(p.pencil, config),
                                  bcm::solve_adjoint(p.pencil, config), config);
  return p;
}

const bcm::Mode* find_mode(const bcm::ExpPolyModel& m, Complex lambda,
                           double tol = 1e-4) {
  for (const auto& mode : m.modes) {
    if (std::abs(mode.pole.lambda - lambda) <= tol * (1.0 + std::abs(lambda))) {
      return &mode;
    }
  }
  return nullptr;
}

}  // namespace

TEST_CASE("normalize_level0 makes every level-0 pairing equal one") {
  const auto model = bcm::make_model({mode_of(1.0, {1.0, 2.0})});
  auto p = run_pipeline(model, 1.0, 201, DerivativeMode::kAnalytic);
  REQUIRE(p.matched.size() == 1);
  JordanCluster cluster = p.matched[0];
  REQUIRE(cluster.multiplicity == 2);
  bcm::normalize_level0(cluster, p.pencil);
  for (std::size_t i = 0; i < cluster.chain.size(); ++i) {
    const Vec cf = bcm::apply_connecting(p.pencil, cluster.chain[i]);
    const Complex q =
        bcm::inner_product(cf, cluster.adjoint_chain[i], p.pencil.grid);
    CHECK(std::abs(q - Complex(1.0)) <= 1e-12);
  }
}

TEST_CASE("normalize_level0 rejects a degenerate pairing") {
  // Constant kernel: C^T maps everything onto constants, so any adjoint
  // vector with zero weighted mean pairs to exactly zero.
  const auto model = bcm::make_model({mode_of(0.0, {1.0})});
  const int n = 17;  // h = 1/16 is a power of two: the pairing is exactly 0
  const auto trace = bcm::synthesize(model, 0.0, 1.0 / (n - 1), 2 * n - 1);
  const auto pencil =
      bcm::build_pencil(trace, DerivativeMode::kFiniteDifference);
  JordanCluster cluster;
  cluster.lambda = 0.0;
  cluster.multiplicity = 1;
  cluster.chain = {Vec::Ones(n)};
  Vec alternating(n);
  for (int j = 0; j < n; ++j) alternating(j) = (j % 2 == 0) ? 1.0 : -1.0;
  cluster.adjoint_chain = {alternating};
  CHECK_THROWS_WITH_AS(bcm::normalize_level0(cluster, pencil),
                       doctest::Contains("degenerate pairing at chain index 1"),
                       bcm::NumericalError);
}

TEST_CASE("project_b_d recovers a pure exponential amplitude") {
  const auto model = bcm::make_model({mode_of(2.0, {3.0})});
  auto p = run_pipeline(model, 1.0, 201, DerivativeMode::kAnalytic);
  REQUIRE(p.matched.size() == 1);
  JordanCluster cluster = p.matched[0];
  bcm::normalize_level0(cluster, p.pencil);
  const auto proj = bcm::project_b_d(cluster, p.pencil, 0);
  REQUIRE(proj.b.size() == 1);
  REQUIRE(proj.d.size() == 1);
  CHECK(std::abs(proj.b[0] * proj.d[0] - Complex(3.0)) <= 1e-8);
}

TEST_CASE("project_b_d level gating") {
  const auto model = bcm::make_model({mode_of(1.0, {1.0, 2.0})});
  auto p = run_pipeline(model, 1.0, 201, DerivativeMode::kAnalytic);
  REQUIRE(p.matched.size() == 1);
  const JordanCluster& cluster = p.matched[0];
  REQUIRE(cluster.multiplicity == 2);

  CHECK_THROWS_AS(bcm::project_b_d(cluster, p.pencil, -1),
                  bcm::InvalidInputError);

  // Levels below the multiplicity share the chain-collapsed projections.
  const auto level0 = bcm::project_b_d(cluster, p.pencil, 0);
  const auto level1 = bcm::project_b_d(cluster, p.pencil, 1);
  REQUIRE(level0.b.size() == 2);
  REQUIRE(level1.b.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(level0.b[i] == level1.b[i]);
    CHECK(level0.d[i] == level1.d[i]);
  }

  // At the multiplicity there is no coefficient left to target.
  const auto level2 = bcm::project_b_d(cluster, p.pencil, 2);
  CHECK(level2.b.empty());
  CHECK(level2.d.empty());
}

TEST_CASE("recover_coefficients: pure exponential") {
  const auto model = bcm::make_model({mode_of(2.0, {3.0})});
  auto p = run_pipeline(model, 1.0, 201, DerivativeMode::kAnalytic);
  const auto rec = bcm::recover_coefficients(p.matched, p.pencil, p.trace);
  REQUIRE(rec.modes.size() == 1);
  CHECK(std::abs(rec.modes[0].pole.lambda - Complex(2.0)) <= 1e-8);
  REQUIRE(rec.modes[0].coeffs.size() == 1);
  CHECK(std::abs(rec.modes[0].coeffs[0] - Complex(3.0)) <= 1e-8);
}

TEST_CASE("recover_coefficients: defective mode with affine amplitude") {
  const auto model = bcm::make_model({mode_of(1.0, {1.0, 2.0})});
  auto p = run_pipeline(model, 1.0, 201, DerivativeMode::kAnalytic);
  const auto rec = bcm::recover_coefficients(p.matched, p.pencil, p.trace);
  REQUIRE(rec.modes.size() == 1);
  const auto& mode = rec.modes[0];
  CHECK(mode.pole.multiplicity == 2);
  CHECK(std::abs(mode.pole.lambda - Complex(1.0)) <= 1e-6);
  REQUIRE(mode.coeffs.size() == 2);
  CHECK(std::abs(mode.coeffs[0] - Complex(1.0)) <= 1e-6);
  CHECK(std::abs(mode.coeffs[1] - Complex(2.0)) <= 1e-6);
}

TEST_CASE("recover_coefficients: well-separated pair") {
  const auto model =
      bcm::make_model({mode_of(-1.0, {1.0}), mode_of(3.0, {4.0})});
  auto p = run_pipeline(model, 1.0, 201, DerivativeMode::kAnalytic);
  const auto rec = bcm::recover_coefficients(p.matched, p.pencil, p.trace);
  REQUIRE(rec.modes.size() == 2);
  const auto* low = find_mode(rec, -1.0);
  const auto* high = find_mode(rec, 3.0);
  REQUIRE(low != nullptr);
  REQUIRE(high != nullptr);
  CHECK(std::abs(low->coeffs[0] - Complex(1.0)) <= 1e-8);
  CHECK(std::abs(high->coeffs[0] - Complex(4.0)) <= 1e-8);
}

TEST_CASE("recovered amplitudes are invariant under chain rescaling") {
  const auto model = bcm::make_model({mode_of(-0.5, {2.0})});
  auto p = run_pipeline(model, 1.0, 201, DerivativeMode::kAnalytic);
  REQUIRE(p.matched.size() == 1);
  const auto base = bcm::recover_coefficients(p.matched, p.pencil, p.trace);

  auto scaled = p.matched;
  scaled[0].chain[0] *= Complex(3.7, -1.2);
  scaled[0].adjoint_chain[0] *= Complex(-0.4, 2.9);
  const auto rec = bcm::recover_coefficients(scaled, p.pencil, p.trace);
  CHECK(std::abs(rec.modes[0].coeffs[0] - base.modes[0].coeffs[0]) <=
        1e-10 * std::abs(base.modes[0].coeffs[0]));
}

TEST_CASE("recovered amplitudes are invariant under chain contamination") {
  // Replacing a Jordan chain by any Toeplitz combination of itself (the
  // freedom an eigensolver actually has) must not move the coefficients.
  const auto model = bcm::make_model({mode_of(1.0, {1.0, 2.0})});
  auto p = run_pipeline(model, 1.0, 201, DerivativeMode::kAnalytic);
  REQUIRE(p.matched.size() == 1);
  REQUIRE(p.matched[0].multiplicity == 2);
  const auto base = bcm::recover_coefficients(p.matched, p.pencil, p.trace);

  auto mixed = p.matched;
  const Complex c0(1.3, 0.4), c1(-0.7, 0.2);
  const Complex e0(0.9, -0.3), e1(0.5, 0.8);
  JordanCluster& cl = mixed[0];
  const Vec f0 = cl.chain[0], f1 = cl.chain[1];
  cl.chain[0] = c0 * f0;
  cl.chain[1] = c0 * f1 + c1 * f0;
  const Vec g0 = cl.adjoint_chain[0], g1 = cl.adjoint_chain[1];
  cl.adjoint_chain[0] = e0 * g0 + e1 * g1;
  cl.adjoint_chain[1] = e0 * g1;
  const auto rec = bcm::recover_coefficients(mixed, p.pencil, p.trace);
  for (std::size_t q = 0; q < 2; ++q) {
    CHECK(std::abs(rec.modes[0].coeffs[q] - base.modes[0].coeffs[q]) <=
          1e-10 * (1.0 + std::abs(base.modes[0].coeffs[q])));
  }
}

TEST_CASE("coefficients scale linearly with the trace") {
  const auto model = bcm::make_model(
      {mode_of(Complex(-0.8, 0.6), {1.5}), mode_of(Complex(0.4, -1.0), {2.0})});
  auto trace = bcm::synthesize(model, 0.0, 1.0 / 200.0, 401);
  auto run = [](const bcm::SignalTrace& tr) {
    const auto pencil =
        bcm::build_pencil(tr, DerivativeMode::kFiniteDifference);
    const PencilConfig config{};
    const auto matched =
        bcm::match_clusters(bcm::solve_forward(pencil, config),
                            bcm::solve_adjoint(pencil, config), config);
    return bcm::recover_coefficients(matched, pencil, tr);
  };
  const auto base = run(trace);
  const Complex c(0.5, 1.0);
  auto scaled_trace = trace;
  for (auto& v : scaled_trace.values) v *= c;
  const auto scaled = run(scaled_trace);
  REQUIRE(base.modes.size() == scaled.modes.size());
  for (std::size_t i = 0; i < base.modes.size(); ++i) {
    CHECK(std::abs(scaled.modes[i].pole.lambda - base.modes[i].pole.lambda) <=
          1e-10 * (1.0 + std::abs(base.modes[i].pole.lambda)));
    const Complex want = c * base.modes[i].coeffs[0];
    CHECK(std::abs(scaled.modes[i].coeffs[0] - want) <= 1e-9 * std::abs(want));
  }
}

TEST_CASE("least-squares amplitudes: single decaying exponential") {
  const auto model = bcm::make_model({mode_of(-1.0, {2.0})});
  const auto trace = bcm::synthesize(model, 0.0, 0.005, 401);
  const auto rec =
      bcm::recover_amplitudes_lsq({bcm::Pole{Complex(-1.0), 1}}, trace);
  REQUIRE(rec.modes.size() == 1);
  CHECK(std::abs(rec.modes[0].coeffs[0] - Complex(2.0)) <= 1e-12);
}

TEST_CASE("least-squares amplitudes: confluent columns") {
  const auto model = bcm::make_model({mode_of(1.0, {1.0, 2.0})});
  const auto trace = bcm::synthesize(model, 0.0, 0.005, 401);
  const auto rec =
      bcm::recover_amplitudes_lsq({bcm::Pole{Complex(1.0), 2}}, trace);
  REQUIRE(rec.modes.size() == 1);
  REQUIRE(rec.modes[0].coeffs.size() == 2);
  CHECK(std::abs(rec.modes[0].coeffs[0] - Complex(1.0)) <= 1e-10);
  CHECK(std::abs(rec.modes[0].coeffs[1] - Complex(2.0)) <= 1e-10);
}

TEST_CASE("least-squares amplitudes: duplicate poles are rejected") {
  const auto model = bcm::make_model({mode_of(-1.0, {2.0})});
  const auto trace = bcm::synthesize(model, 0.0, 0.005, 401);
  CHECK_THROWS_WITH_AS(
      bcm::recover_amplitudes_lsq(
          {bcm::Pole{Complex(-1.0), 1}, bcm::Pole{Complex(-1.0), 1}}, trace),
      doctest::Contains("rank deficient"), bcm::NumericalError);
}

TEST_CASE("least-squares amplitudes: input validation") {
  const auto model = bcm::make_model({mode_of(-1.0, {2.0})});
  const auto trace = bcm::synthesize(model, 0.0, 0.005, 401);
  CHECK_THROWS_AS(bcm::recover_amplitudes_lsq({}, trace),
                  bcm::InvalidInputError);
  CHECK_THROWS_AS(
      bcm::recover_amplitudes_lsq({bcm::Pole{Complex(-1.0), 0}}, trace),
      bcm::InvalidInputError);
}

TEST_CASE("both amplitude paths agree on a mixed model") {
  const auto model = bcm::make_model(
      {mode_of(Complex(-1.0, 0.0), {1.0}), mode_of(Complex(0.5, 1.5), {2.0}),
       mode_of(Complex(1.2, -0.7), {Complex(0.0, 1.0)})});
  auto p = run_pipeline(model, 1.0, 201, DerivativeMode::kAnalytic);
  const auto paper = bcm::recover_coefficients(p.matched, p.pencil, p.trace);
  std::vector<bcm::Pole> poles;
  for (const auto& m : paper.modes) poles.push_back(m.pole);
  const auto lsq = bcm::recover_amplitudes_lsq(poles, p.trace);
  REQUIRE(paper.modes.size() == lsq.modes.size());
  for (std::size_t i = 0; i < paper.modes.size(); ++i) {
    CHECK(std::abs(paper.modes[i].coeffs[0] - lsq.modes[i].coeffs[0]) <=
          1e-6 * (1.0 + std::abs(lsq.modes[i].coeffs[0])));
  }
}
