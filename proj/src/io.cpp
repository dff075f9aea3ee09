#include "bcm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

namespace bcm {

namespace {

constexpr std::string_view kTraceHeader = "t,re,im";
constexpr std::string_view kTwoChannelHeader = "t,re,im,channel";
constexpr std::string_view kModelHeader = "model: exp-poly";
constexpr std::string_view kTwoChannelModelHeader = "model: exp-poly-2ch";

[[noreturn]] void fail(const std::string& path, std::size_t line,
                       const std::string& what) {
  std::ostringstream os;
  os << path << ": line " << line << ": " << what;
  throw InvalidInputError(os.str());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidInputError("cannot open " + path);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InvalidInputError("cannot write " + path);
  }
  out << content;
  if (!out) {
    throw InvalidInputError("write failed for " + path);
  }
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const std::size_t pos = text.find('\n');
    std::string_view line =
        pos == std::string_view::npos ? text : text.substr(0, pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  // A trailing newline produces one phantom empty line; drop it.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  while (true) {
    const std::size_t pos = line.find(sep);
    if (pos == std::string_view::npos) {
      fields.push_back(line);
      return fields;
    }
    fields.push_back(line.substr(0, pos));
    line.remove_prefix(pos + 1);
  }
}

double parse_double(std::string_view token, const std::string& path,
                    std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail(path, line, "malformed number '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) {
    fail(path, line, "non-finite number '" + std::string(token) + "'");
  }
  return value;
}

int parse_int(std::string_view token, const std::string& path,
              std::size_t line) {
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail(path, line, "malformed integer '" + std::string(token) + "'");
  }
  return value;
}

struct ParsedRow {
  double t;
  Complex value;
  int channel;  // -1 for single-channel rows
};

std::vector<ParsedRow> parse_trace_rows(const std::string& path,
                                        const std::vector<std::string_view>& lines,
                                        bool two_channel) {
  const std::size_t expected_fields = two_channel ? 4 : 3;
  std::vector<ParsedRow> rows;
  rows.reserve(lines.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    if (fields.size() != expected_fields) {
      std::ostringstream os;
      os << "expected " << expected_fields << " fields, found "
         << fields.size();
      fail(path, i + 1, os.str());
    }
    ParsedRow row;
    row.t = parse_double(fields[0], path, i + 1);
    row.value = Complex(parse_double(fields[1], path, i + 1),
                        parse_double(fields[2], path, i + 1));
    row.channel = -1;
    if (two_channel) {
      if (fields[3] == "v0") {
        row.channel = 0;
      } else if (fields[3] == "v1") {
        row.channel = 1;
      } else {
        fail(path, i + 1,
             "unknown channel tag '" + std::string(fields[3]) + "'");
      }
    }
    rows.push_back(row);
  }
  return rows;
}

// Checks monotonicity and grid uniformity; returns the trace.
SignalTrace assemble_trace(const std::string& path,
                           const std::vector<ParsedRow>& rows) {
  if (rows.size() < 3) {
    throw InvalidInputError(path + ": trace needs at least 3 samples");
  }
  const std::size_t n = rows.size();
  for (std::size_t j = 1; j < n; ++j) {
    if (!(rows[j].t > rows[j - 1].t)) {
      std::ostringstream os;
      os << path << ": non-monotone time at sample " << j;
      throw InvalidInputError(os.str());
    }
  }
  const double t0 = rows.front().t;
  const double span = rows.back().t - t0;
  const double h = span / static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double expected = t0 + static_cast<double>(j) * h;
    if (std::abs(rows[j].t - expected) > 1e-12 * span) {
      std::ostringstream os;
      os << path << ": non-uniform grid at sample " << j;
      throw InvalidInputError(os.str());
    }
  }
  SignalTrace trace;
  trace.t0 = t0;
  trace.h = h;
  trace.values.resize(n);
  for (std::size_t j = 0; j < n; ++j) trace.values[j] = rows[j].value;
  return trace;
}

void append_trace_rows(std::ostringstream& os, const SignalTrace& trace,
                       const char* tag) {
  for (std::size_t j = 0; j < trace.values.size(); ++j) {
    const double t = trace.t0 + static_cast<double>(j) * trace.h;
    os << format_double(t) << ',' << format_double(trace.values[j].real())
       << ',' << format_double(trace.values[j].imag());
    if (tag != nullptr) os << ',' << tag;
    os << '\n';
  }
}

// ---- model documents ----

struct ModeBlock {
  std::size_t line = 0;  // line of the "mode:" marker, for error messages
  bool has_pole = false;
  Complex lambda;
  int multiplicity = 0;
  std::vector<Complex> coeffs;
  bool has_coeffs = false;
  int channel = -1;  // -1 none, 0/1 tagged
  bool unrecovered = false;
};

std::string_view key_of(std::string_view line) {
  const std::size_t pos = line.find(':');
  return pos == std::string_view::npos ? std::string_view{}
                                       : line.substr(0, pos);
}

std::string_view value_of(std::string_view line) {
  const std::size_t pos = line.find(':');
  std::string_view v =
      pos == std::string_view::npos ? std::string_view{} : line.substr(pos + 1);
  while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
  while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
  return v;
}

std::vector<Complex> parse_complex_list(std::string_view text,
                                        const std::string& path,
                                        std::size_t line) {
  std::vector<double> parts;
  for (std::string_view token : split(text, ' ')) {
    if (token.empty()) continue;
    parts.push_back(parse_double(token, path, line));
  }
  if (parts.size() % 2 != 0) {
    fail(path, line, "coefficients must come as re/im pairs");
  }
  std::vector<Complex> out(parts.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Complex(parts[2 * i], parts[2 * i + 1]);
  }
  return out;
}

struct ModelDocument {
  bool two_channel = false;
  bool non_generic = false;
  std::vector<ModeBlock> blocks;
};

ModelDocument parse_model_document(const std::string& path) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) {
    throw InvalidInputError(path + ": empty model file");
  }
  ModelDocument doc;
  if (lines[0] == kModelHeader) {
    doc.two_channel = false;
  } else if (lines[0] == kTwoChannelModelHeader) {
    doc.two_channel = true;
  } else {
    fail(path, 1, "expected '" + std::string(kModelHeader) + "' or '" +
                      std::string(kTwoChannelModelHeader) + "'");
  }
  ModeBlock* current = nullptr;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    if (line.empty()) continue;
    const std::string_view key = key_of(line);
    const std::string_view value = value_of(line);
    const std::size_t lineno = i + 1;
    if (key == "mode") {
      doc.blocks.emplace_back();
      doc.blocks.back().line = lineno;
      current = &doc.blocks.back();
      continue;
    }
    if (key == "non_generic") {
      if (current != nullptr) fail(path, lineno, "non_generic must precede modes");
      doc.non_generic = (value == "1");
      if (value != "0" && value != "1") {
        fail(path, lineno, "non_generic must be 0 or 1");
      }
      continue;
    }
    if (current == nullptr) {
      fail(path, lineno, "field outside a mode block");
    }
    if (key == "pole") {
      const auto pair = parse_complex_list(value, path, lineno);
      if (pair.size() != 1) fail(path, lineno, "pole needs one re/im pair");
      current->lambda = pair[0];
      current->has_pole = true;
    } else if (key == "multiplicity") {
      current->multiplicity = parse_int(value, path, lineno);
    } else if (key == "coeffs") {
      current->coeffs = parse_complex_list(value, path, lineno);
      current->has_coeffs = true;
    } else if (key == "channel") {
      if (value == "v0") {
        current->channel = 0;
      } else if (value == "v1") {
        current->channel = 1;
      } else {
        fail(path, lineno, "channel must be v0 or v1");
      }
    } else if (key == "flags") {
      if (value == "unrecovered") {
        current->unrecovered = true;
      } else {
        fail(path, lineno, "unknown flag '" + std::string(value) + "'");
      }
    } else {
      fail(path, lineno, "unknown field '" + std::string(key) + "'");
    }
  }
  for (const ModeBlock& b : doc.blocks) {
    if (!b.has_pole) fail(path, b.line, "mode block missing pole");
    if (b.multiplicity < 1) fail(path, b.line, "mode block missing multiplicity");
    if (!b.has_coeffs) fail(path, b.line, "mode block missing coeffs");
    if (b.coeffs.size() != static_cast<std::size_t>(b.multiplicity)) {
      std::ostringstream os;
      os << "coefficient list length " << b.coeffs.size()
         << " does not match multiplicity " << b.multiplicity;
      fail(path, b.line, os.str());
    }
    if (doc.two_channel && b.channel < 0) {
      fail(path, b.line, "two-channel mode block missing channel tag");
    }
    if (!doc.two_channel && b.channel >= 0) {
      fail(path, b.line, "channel tag in a single-channel model");
    }
  }
  return doc;
}

void append_mode_block(std::ostringstream& os, const Complex& lambda,
                       int multiplicity, const std::vector<Complex>& coeffs,
                       const char* channel, bool unrecovered) {
  os << "mode:\n";
  if (channel != nullptr) os << "channel: " << channel << '\n';
  os << "pole: " << format_double(lambda.real()) << ' '
     << format_double(lambda.imag()) << '\n';
  os << "multiplicity: " << multiplicity << '\n';
  os << "coeffs:";
  for (const Complex& c : coeffs) {
    os << ' ' << format_double(c.real()) << ' ' << format_double(c.imag());
  }
  os << '\n';
  if (unrecovered) os << "flags: unrecovered\n";
}

bool pole_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

SignalTrace read_trace(const std::string& path) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kTraceHeader) {
    fail(path, 1, "expected header '" + std::string(kTraceHeader) + "'");
  }
  return assemble_trace(path, parse_trace_rows(path, lines, false));
}

void write_trace(const SignalTrace& trace, const std::string& path) {
  std::ostringstream os;
  os << kTraceHeader << '\n';
  append_trace_rows(os, trace, nullptr);
  write_file(path, os.str());
}

TwoChannelResponse read_two_channel_trace(const std::string& path) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kTwoChannelHeader) {
    fail(path, 1,
         "expected header '" + std::string(kTwoChannelHeader) + "'");
  }
  const auto rows = parse_trace_rows(path, lines, true);
  std::vector<ParsedRow> ch0, ch1;
  for (const ParsedRow& row : rows) {
    (row.channel == 0 ? ch0 : ch1).push_back(row);
  }
  TwoChannelResponse resp;
  resp.channel0 = assemble_trace(path, ch0);
  resp.channel1 = assemble_trace(path, ch1);
  if (resp.channel0.values.size() != resp.channel1.values.size() ||
      resp.channel0.t0 != resp.channel1.t0 ||
      resp.channel0.h != resp.channel1.h) {
    throw InvalidInputError(path + ": channel grids differ");
  }
  return resp;
}

void write_two_channel_trace(const TwoChannelResponse& resp,
                             const std::string& path) {
  if (resp.channel0.values.size() != resp.channel1.values.size() ||
      resp.channel0.t0 != resp.channel1.t0 ||
      resp.channel0.h != resp.channel1.h) {
    throw InvalidInputError("two-channel trace: channel grids differ");
  }
  std::ostringstream os;
  os << kTwoChannelHeader << '\n';
  append_trace_rows(os, resp.channel0, "v0");
  append_trace_rows(os, resp.channel1, "v1");
  write_file(path, os.str());
}

ExpPolyModel read_model(const std::string& path) {
  const ModelDocument doc = parse_model_document(path);
  if (doc.two_channel) {
    throw InvalidInputError(path +
                            ": two-channel document; use the channel-aware "
                            "reader");
  }
  std::vector<Mode> modes;
  modes.reserve(doc.blocks.size());
  for (const ModeBlock& b : doc.blocks) {
    Mode m;
    m.pole = Pole{b.lambda, b.multiplicity};
    m.coeffs = b.coeffs;
    m.unrecovered = b.unrecovered;
    modes.push_back(std::move(m));
  }
  return make_model(std::move(modes), doc.non_generic);
}

void write_model(const ExpPolyModel& model, const std::string& path) {
  std::ostringstream os;
  os << kModelHeader << '\n';
  if (model.non_generic) os << "non_generic: 1\n";
  for (const Mode& m : model.modes) {
    append_mode_block(os, m.pole.lambda, m.pole.multiplicity, m.coeffs,
                      nullptr, m.unrecovered);
  }
  write_file(path, os.str());
}

TwoChannelModel read_two_channel_model(const std::string& path) {
  const ModelDocument doc = parse_model_document(path);
  if (!doc.two_channel) {
    throw InvalidInputError(path +
                            ": single-channel document; use read_model");
  }
  if (doc.blocks.size() % 2 != 0) {
    throw InvalidInputError(path + ": expected v0/v1 block pairs");
  }
  TwoChannelModel model;
  for (std::size_t i = 0; i < doc.blocks.size(); i += 2) {
    const ModeBlock& b0 = doc.blocks[i];
    const ModeBlock& b1 = doc.blocks[i + 1];
    if (b0.channel != 0 || b1.channel != 1 || b0.lambda != b1.lambda ||
        b0.multiplicity != b1.multiplicity) {
      std::ostringstream os;
      os << path << ": mode blocks at lines " << b0.line << " and " << b1.line
         << " do not form a v0/v1 pair with a shared pole";
      throw InvalidInputError(os.str());
    }
    model.poles.push_back(Pole{b0.lambda, b0.multiplicity});
    model.coeffs0.push_back(b0.coeffs);
    model.coeffs1.push_back(b1.coeffs);
  }
  // Canonical pole order, then the usual distinctness check.
  std::vector<std::size_t> order(model.poles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pole_less(model.poles[a].lambda, model.poles[b].lambda);
  });
  TwoChannelModel sorted;
  for (std::size_t i : order) {
    sorted.poles.push_back(model.poles[i]);
    sorted.coeffs0.push_back(std::move(model.coeffs0[i]));
    sorted.coeffs1.push_back(std::move(model.coeffs1[i]));
  }
  for (std::size_t i = 1; i < sorted.poles.size(); ++i) {
    const Complex li = sorted.poles[i - 1].lambda;
    const Complex lj = sorted.poles[i].lambda;
    if (std::abs(li - lj) <= kPoleMergeTol * (1.0 + std::abs(li))) {
      throw InvalidInputError(path + ": duplicate poles in two-channel model");
    }
  }
  return sorted;
}

void write_two_channel_model(const TwoChannelModel& model,
                             const std::string& path) {
  if (model.coeffs0.size() != model.poles.size() ||
      model.coeffs1.size() != model.poles.size()) {
    throw InvalidInputError("two-channel model: per-channel coefficient "
                            "lists do not match the pole set");
  }
  std::ostringstream os;
  os << kTwoChannelModelHeader << '\n';
  for (std::size_t i = 0; i < model.poles.size(); ++i) {
    append_mode_block(os, model.poles[i].lambda, model.poles[i].multiplicity,
                      model.coeffs0[i], "v0", false);
    append_mode_block(os, model.poles[i].lambda, model.poles[i].multiplicity,
                      model.coeffs1[i], "v1", false);
  }
  write_file(path, os.str());
}

}  // namespace bcm
