#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "bcm/io.hpp"
#include "bcm/model.hpp"

namespace fs = std::filesystem;
using bcm::Complex;

namespace {

fs::path temp_file(const std::string& stem) {
  static int counter = 0;
  return fs::temp_directory_path() /
         (stem + "-" + std::to_string(++counter) + ".txt");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

bcm::SignalTrace random_trace(unsigned seed, std::size_t n) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  bcm::SignalTrace tr;
  tr.t0 = 0.0;
  tr.h = 0.01;
  tr.values.resize(n);
  for (auto& v : tr.values) v = Complex(unit(rng), unit(rng));
  return tr;
}

bcm::ExpPolyModel sample_model() {
  bcm::Mode a;
  a.pole = {Complex(-1.5, 0.25), 2};
  a.coeffs = {Complex(1.0, -0.5), Complex(0.125, 3.0)};
  bcm::Mode b;
  b.pole = {Complex(0.5, -2.0), 1};
  b.coeffs = {Complex(2.0, 0.0)};
  bcm::Mode c;
  c.pole = {Complex(2.0, 1.0), 3};
  c.coeffs = {Complex(0.1, 0.0), Complex(0.0, 1e-3), Complex(-7.0, 0.25)};
  return bcm::make_model({a, b, c});
}

}  // namespace

TEST_CASE("trace round trip preserves every bit") {
  const auto tr = random_trace(9001, 101);
  const auto path = temp_file("trace-rt");
  bcm::write_trace(tr, path.string());
  const auto back = bcm::read_trace(path.string());
  REQUIRE(back.values.size() == tr.values.size());
  CHECK(back.t0 == tr.t0);
  CHECK(back.h == tr.h);
  for (std::size_t i = 0; i < tr.values.size(); ++i) {
    CHECK(back.values[i].real() == tr.values[i].real());
    CHECK(back.values[i].imag() == tr.values[i].imag());
  }
  // Writing the re-read trace reproduces the file byte for byte.
  const auto path2 = temp_file("trace-rt");
  bcm::write_trace(back, path2.string());
  CHECK(read_text(path) == read_text(path2));
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("trace reader reports the first non-monotone sample") {
  const auto path = temp_file("trace-shuffle");
  write_text(path,
             "t,re,im\n"
             "0,1,0\n"
             "0.02,1,0\n"
             "0.01,1,0\n"
             "0.03,1,0\n");
  CHECK_THROWS_WITH_AS(bcm::read_trace(path.string()),
                       doctest::Contains("non-monotone time at sample 2"),
                       bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("trace reader rejects a jittered grid") {
  auto tr = random_trace(9002, 33);
  const auto path = temp_file("trace-jitter");
  bcm::write_trace(tr, path.string());
  // Rewrite one time value with a 1e-3 relative step distortion.
  std::string text = read_text(path);
  const std::string needle = "\n" + bcm::format_double(5 * tr.h) + ",";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(),
               "\n" + bcm::format_double(5 * tr.h + 1e-3 * tr.h) + ",");
  write_text(path, text);
  CHECK_THROWS_WITH_AS(bcm::read_trace(path.string()),
                       doctest::Contains("non-uniform"),
                       bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("trace reader rejects malformed rows with a line number") {
  const auto path = temp_file("trace-bad");
  write_text(path,
             "t,re,im\n"
             "0,1,0\n"
             "0.5,oops,0\n"
             "1,1,0\n");
  CHECK_THROWS_WITH_AS(bcm::read_trace(path.string()),
                       doctest::Contains("line 3"), bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("trace reader rejects non-finite values") {
  const auto path = temp_file("trace-inf");
  write_text(path,
             "t,re,im\n"
             "0,1,0\n"
             "0.5,inf,0\n"
             "1,1,0\n");
  CHECK_THROWS_AS(bcm::read_trace(path.string()), bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("trace reader requires at least three samples") {
  const auto path = temp_file("trace-short");
  write_text(path, "t,re,im\n0,1,0\n1,1,0\n");
  CHECK_THROWS_AS(bcm::read_trace(path.string()), bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("model round trip is byte stable") {
  const auto m = sample_model();
  const auto path = temp_file("model-rt");
  bcm::write_model(m, path.string());
  const auto back = bcm::read_model(path.string());
  REQUIRE(back.modes.size() == m.modes.size());
  for (std::size_t i = 0; i < m.modes.size(); ++i) {
    CHECK(back.modes[i].pole.lambda == m.modes[i].pole.lambda);
    CHECK(back.modes[i].pole.multiplicity == m.modes[i].pole.multiplicity);
    REQUIRE(back.modes[i].coeffs.size() == m.modes[i].coeffs.size());
    for (std::size_t q = 0; q < m.modes[i].coeffs.size(); ++q) {
      CHECK(back.modes[i].coeffs[q] == m.modes[i].coeffs[q]);
    }
  }
  const auto path2 = temp_file("model-rt");
  bcm::write_model(back, path2.string());
  CHECK(read_text(path) == read_text(path2));
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("model reader rejects unknown fields") {
  const auto path = temp_file("model-unknown");
  write_text(path,
             "model: exp-poly\n"
             "mode:\n"
             "pole: 1 0\n"
             "multiplicity: 1\n"
             "coeffs: 2 0\n"
             "flavor: spicy\n");
  CHECK_THROWS_WITH_AS(bcm::read_model(path.string()),
                       doctest::Contains("flavor"), bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("model reader rejects coefficient count mismatches") {
  const auto path = temp_file("model-mismatch");
  write_text(path,
             "model: exp-poly\n"
             "mode:\n"
             "pole: 1 0\n"
             "multiplicity: 2\n"
             "coeffs: 2 0\n");
  CHECK_THROWS_AS(bcm::read_model(path.string()), bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("model reader rejects a missing header") {
  const auto path = temp_file("model-header");
  write_text(path, "mode:\npole: 1 0\nmultiplicity: 1\ncoeffs: 2 0\n");
  CHECK_THROWS_AS(bcm::read_model(path.string()), bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("two-channel trace round trip") {
  bcm::TwoChannelResponse resp;
  resp.channel0 = random_trace(9003, 41);
  resp.channel1 = random_trace(9004, 41);
  resp.channel1.t0 = resp.channel0.t0;
  resp.channel1.h = resp.channel0.h;
  const auto path = temp_file("trace2-rt");
  bcm::write_two_channel_trace(resp, path.string());
  const auto back = bcm::read_two_channel_trace(path.string());
  REQUIRE(back.channel0.values.size() == 41);
  REQUIRE(back.channel1.values.size() == 41);
  for (std::size_t i = 0; i < 41; ++i) {
    CHECK(back.channel0.values[i] == resp.channel0.values[i]);
    CHECK(back.channel1.values[i] == resp.channel1.values[i]);
  }
  const auto path2 = temp_file("trace2-rt");
  bcm::write_two_channel_trace(back, path2.string());
  CHECK(read_text(path) == read_text(path2));
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("two-channel trace rejects mismatched grids") {
  const auto path = temp_file("trace2-grid");
  write_text(path,
             "t,re,im,channel\n"
             "0,1,0,v0\n"
             "0.5,1,0,v0\n"
             "1,1,0,v0\n"
             "0,1,0,v1\n"
             "0.6,1,0,v1\n"
             "1.2,1,0,v1\n");
  CHECK_THROWS_AS(bcm::read_two_channel_trace(path.string()),
                  bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("two-channel trace rejects unknown channel tags") {
  const auto path = temp_file("trace2-tag");
  write_text(path,
             "t,re,im,channel\n"
             "0,1,0,v0\n"
             "0.5,1,0,v0\n"
             "1,1,0,v0\n"
             "0,1,0,v2\n"
             "0.5,1,0,v2\n"
             "1,1,0,v2\n");
  CHECK_THROWS_WITH_AS(bcm::read_two_channel_trace(path.string()),
                       doctest::Contains("channel"), bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("two-channel model round trip") {
  bcm::TwoChannelModel m;
  m.poles = {bcm::Pole{Complex(-1.0, 0.5), 2}, bcm::Pole{Complex(0.3, 0.0), 1}};
  m.coeffs0 = {{Complex(1.0, 0.0), Complex(0.5, -0.5)}, {Complex(2.0, 0.0)}};
  m.coeffs1 = {{Complex(0.0, 1.0), Complex(-1.0, 0.0)}, {Complex(0.0, 0.0)}};
  const auto path = temp_file("model2-rt");
  bcm::write_two_channel_model(m, path.string());
  const auto back = bcm::read_two_channel_model(path.string());
  REQUIRE(back.poles.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.poles[i].lambda == m.poles[i].lambda);
    CHECK(back.poles[i].multiplicity == m.poles[i].multiplicity);
    REQUIRE(back.coeffs0[i].size() == m.coeffs0[i].size());
    REQUIRE(back.coeffs1[i].size() == m.coeffs1[i].size());
    for (std::size_t q = 0; q < m.coeffs0[i].size(); ++q) {
      CHECK(back.coeffs0[i][q] == m.coeffs0[i][q]);
      CHECK(back.coeffs1[i][q] == m.coeffs1[i][q]);
    }
  }
  const auto path2 = temp_file("model2-rt");
  bcm::write_two_channel_model(back, path2.string());
  CHECK(read_text(path) == read_text(path2));
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("single-channel reader refuses a two-channel document") {
  bcm::TwoChannelModel m;
  m.poles = {bcm::Pole{Complex(-1.0, 0.0), 1}};
  m.coeffs0 = {{Complex(1.0, 0.0)}};
  m.coeffs1 = {{Complex(2.0, 0.0)}};
  const auto path = temp_file("model-cross");
  bcm::write_two_channel_model(m, path.string());
  CHECK_THROWS_AS(bcm::read_model(path.string()), bcm::InvalidInputError);
  fs::remove(path);
}

TEST_CASE("missing file errors name the path") {
  CHECK_THROWS_WITH_AS(bcm::read_trace("/nonexistent/trace.txt"),
                       doctest::Contains("/nonexistent/trace.txt"),
                       bcm::InvalidInputError);
}
