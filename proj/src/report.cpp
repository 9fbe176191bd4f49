#include "ssf/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ssf/bitstream.hpp"
#include "ssf/checkpoint.hpp"
#include "ssf/metrics.hpp"

namespace ssf {

std::string digest_hex(const std::array<uint8_t, 16>& d) {
  static const char* hexd = "0123456789abcdef";
  std::string s;
  for (uint8_t b : d) {
    s += hexd[b >> 4];
    s += hexd[b & 0xF];
  }
  return s;
}

EvalReport eval_codec(const VideoCodec& codec, const SequenceDataset& data,
                      double lambda, const std::string& stream_path,
                      bool include_header) {
  if (data.frames.empty()) throw std::runtime_error("eval: empty dataset");
  const int n = (int)data.frames.size();

  std::vector<Tensor> enc_recons;
  auto chunks = codec.compress(data.frames, &enc_recons);

  Container c;
  c.header.width = (uint16_t)data.w;
  c.header.height = (uint16_t)data.h;
  c.header.channels = (uint8_t)codec.config().frame_channels;
  c.header.gop_size = (uint8_t)codec.config().gop_size;
  c.header.model_digest = param_digest(codec);
  c.header.frame_count = (uint32_t)n;
  c.chunks = std::move(chunks);
  write_container(stream_path, c);

  Container rc = read_container(stream_path);
  auto dec = codec.decompress(rc.chunks, data.h, data.w);
  if ((int)dec.size() != n)
    throw std::runtime_error("eval: frame count mismatch after decode");

  EvalReport r;
  for (int i = 0; i < n; ++i) {
    if (dec[i].data() != enc_recons[i].data())
      throw std::runtime_error(
          "eval: decoder reconstruction differs from the encoder's closed "
          "loop at frame " +
          std::to_string(i));
    r.frame_psnr.push_back(psnr_db(dec[i], data.frames[i]));
  }
  r.stream_bytes = container_size(rc);
  r.payload_bytes = r.stream_bytes - rc.header.byte_size();
  const size_t counted = include_header ? r.stream_bytes : r.payload_bytes;
  r.point.family = family_to_string(codec.config().family);
  r.point.lambda = lambda;
  r.point.bpp = bits_per_pixel(counted, n, data.h, data.w);
  double s = 0.0;
  for (double p : r.frame_psnr) s += p;
  r.point.psnr_db = s / n;
  r.point.digest_hex = digest_hex(c.header.model_digest);
  return r;
}

nlohmann::json report_to_json(const EvalReport& r) {
  return nlohmann::json{{"family", r.point.family},
                        {"lambda", r.point.lambda},
                        {"bpp", r.point.bpp},
                        {"psnr_db", r.point.psnr_db},
                        {"digest", r.point.digest_hex},
                        {"stream_bytes", r.stream_bytes},
                        {"payload_bytes", r.payload_bytes},
                        {"frame_psnr", r.frame_psnr}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.point.family = j.at("family").get<std::string>();
  r.point.lambda = j.at("lambda").get<double>();
  r.point.bpp = j.at("bpp").get<double>();
  r.point.psnr_db = j.at("psnr_db").get<double>();
  r.point.digest_hex = j.at("digest").get<std::string>();
  r.stream_bytes = j.at("stream_bytes").get<size_t>();
  r.payload_bytes = j.at("payload_bytes").get<size_t>();
  r.frame_psnr = j.at("frame_psnr").get<std::vector<double>>();
  return r;
}

namespace {

void write_svg(const std::vector<RdPoint>& points, const std::string& path) {
  const int W = 640, H = 480, ml = 70, mr = 20, mt = 20, mb = 50;
  double xmax = 0.0, ymin = 1e30, ymax = -1e30;
  for (const auto& p : points) {
    xmax = std::max(xmax, p.bpp);
    ymin = std::min(ymin, p.psnr_db);
    ymax = std::max(ymax, p.psnr_db);
  }
  if (points.empty()) {
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  xmax *= 1.05;
  if (xmax <= 0) xmax = 1.0;
  const double ypad = std::max(0.5, (ymax - ymin) * 0.05);
  ymin -= ypad;
  ymax += ypad;
  const auto px = [&](double bpp) {
    return ml + (W - ml - mr) * bpp / xmax;
  };
  const auto py = [&](double db) {
    return H - mb - (H - mt - mb) * (db - ymin) / (ymax - ymin);
  };

  std::vector<std::string> families;
  for (const auto& p : points)
    if (std::find(families.begin(), families.end(), p.family) == families.end())
      families.push_back(p.family);
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};

  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
    << "\" height=\"" << H << "\">\n";
  f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
    << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
    << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xb = xmax * i / 5, yd = ymin + (ymax - ymin) * i / 5;
    f << "<text x=\"" << px(xb) << "\" y=\"" << H - mb + 18
      << "\" font-size=\"11\" text-anchor=\"middle\">" << std::fixed;
    f.precision(3);
    f << xb << "</text>\n";
    f << "<text x=\"" << ml - 8 << "\" y=\"" << py(yd) + 4
      << "\" font-size=\"11\" text-anchor=\"end\">";
    f.precision(1);
    f << yd << "</text>\n";
  }
  f << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
    << "\" font-size=\"13\" text-anchor=\"middle\">bpp</text>\n";
  f << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
    << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (mt + H - mb) / 2 << ")\">PSNR (dB)</text>\n";

  for (size_t s = 0; s < families.size(); ++s) {
    std::vector<RdPoint> series;
    for (const auto& p : points)
      if (p.family == families[s]) series.push_back(p);
    std::sort(series.begin(), series.end(),
              [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
    const char* col = colors[s % 6];
    f << "<polyline fill=\"none\" stroke=\"" << col
      << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : series) f << px(p.bpp) << "," << py(p.psnr_db) << " ";
    f << "\"/>\n";
    for (const auto& p : series)
      f << "<circle cx=\"" << px(p.bpp) << "\" cy=\"" << py(p.psnr_db)
        << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    f << "<text x=\"" << W - mr - 120 << "\" y=\"" << mt + 16 + 16 * (int)s
      << "\" font-size=\"12\" fill=\"" << col << "\">" << families[s]
      << "</text>\n";
  }
  f << "</svg>\n";
}

}  // namespace

void write_rd_outputs(const std::vector<RdPoint>& points,
                      const std::string& prefix) {
  {
    std::ofstream f(prefix + ".csv");
    if (!f) throw std::runtime_error("cannot open for writing: " + prefix + ".csv");
    f << "family,lambda,bpp,psnr_db,digest\n";
    for (const auto& p : points)
      f << p.family << ',' << p.lambda << ',' << p.bpp << ',' << p.psnr_db
        << ',' << p.digest_hex << '\n';
  }
  {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : points)
      arr.push_back({{"family", p.family},
                     {"lambda", p.lambda},
                     {"bpp", p.bpp},
                     {"psnr_db", p.psnr_db},
                     {"digest", p.digest_hex}});
    std::ofstream f(prefix + ".json");
    if (!f) throw std::runtime_error("cannot open for writing: " + prefix + ".json");
    f << arr.dump(2) << '\n';
  }
  write_svg(points, prefix + ".svg");
}

}  // namespace ssf
