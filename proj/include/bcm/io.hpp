#pragma once

#include <string>

#include "bcm/continuation.hpp"
#include "bcm/model.hpp"

namespace bcm {

// File formats are plain text, deterministic, and locale-independent.
//
// Trace files: header "t,re,im" then one comma-separated row per sample;
// two-channel traces use header "t,re,im,channel" with channel tags v0/v1
// (all v0 rows first, canonical order).  Times must be strictly increasing
// on an exactly uniform grid (relative deviation <= 1e-12 of the span).
//
// Model files: line-oriented key/value blocks.  Single-channel documents
// start with "model: exp-poly", two-channel documents with
// "model: exp-poly-2ch"; each mode block lists pole, multiplicity, and the
// factorial-basis coefficients as re/im pairs.  All floats are written in
// shortest round-trip form, so write -> read -> write is byte-stable.

SignalTrace read_trace(const std::string& path);
void write_trace(const SignalTrace& trace, const std::string& path);

TwoChannelResponse read_two_channel_trace(const std::string& path);
void write_two_channel_trace(const TwoChannelResponse& resp,
                             const std::string& path);

ExpPolyModel read_model(const std::string& path);
void write_model(const ExpPolyModel& model, const std::string& path);

TwoChannelModel read_two_channel_model(const std::string& path);
void write_two_channel_model(const TwoChannelModel& model,
                             const std::string& path);

// Shortest representation that parses back to the identical double.
std::string format_double(double value);

}  // namespace bcm
