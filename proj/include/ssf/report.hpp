#pragma once

// Evaluation harness and rate-distortion reporting. All metrics come from an
// actually written and re-read stream; the decoder-side reconstructions are
// checked bitwise against the encoder's closed loop before anything is
// reported.

#include <string>
#include <vector>

#include "json.hpp"
#include "ssf/codec.hpp"
#include "ssf/dataset.hpp"

namespace ssf {

struct RdPoint {
  std::string family;
  double lambda = 0.0;
  double bpp = 0.0;
  double psnr_db = 0.0;
  std::string digest_hex;
};

struct EvalReport {
  RdPoint point;
  std::vector<double> frame_psnr;
  size_t stream_bytes = 0;
  size_t payload_bytes = 0;  // stream minus container header
};

// Compresses the whole sequence to stream_path, reads it back, decompresses,
// verifies the closed loop bitwise, and aggregates PSNR/bpp. Header bytes are
// counted in bpp unless include_header is false.
EvalReport eval_codec(const VideoCodec& codec, const SequenceDataset& data,
                      double lambda, const std::string& stream_path,
                      bool include_header = true);

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

// prefix.csv, prefix.json, prefix.svg; points are grouped into one plot
// series per family, in first-appearance order.
void write_rd_outputs(const std::vector<RdPoint>& points,
                      const std::string& prefix);

std::string digest_hex(const std::array<uint8_t, 16>& d);

}  // namespace ssf
