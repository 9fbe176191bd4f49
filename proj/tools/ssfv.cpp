// Command-line front end: synthetic data generation, training and lambda
// sweeps, stream compression/decompression, evaluation, and RD-curve
// emission.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 decode error.
// Set SSF_KERNELS=serial to force the serial reference kernels.

#include <glob.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "ssf/bitstream.hpp"
#include "ssf/checkpoint.hpp"
#include "ssf/codec.hpp"
#include "ssf/dataset.hpp"
#include "ssf/kernels.hpp"
#include "ssf/report.hpp"
#include "ssf/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LoadedModel {
  std::unique_ptr<ssf::VideoCodec> codec;
  double lambda = 0.0;
};

LoadedModel load_model(const std::string& path) {
  const json cfg = ssf::peek_checkpoint_config(path);
  const ssf::CodecConfig cc = ssf::CodecConfig::from_json(cfg.at("codec"));
  ssf::Rng rng(0);
  LoadedModel m;
  m.codec = std::make_unique<ssf::VideoCodec>(cc, rng);
  ssf::load_checkpoint(path, *m.codec);
  if (cfg.contains("train"))
    m.lambda = cfg.at("train").value("lambda", 0.0);
  return m;
}

json train_json(const ssf::TrainConfig& tc) {
  return json{{"lambda", tc.lambda},
              {"epochs", tc.epochs},
              {"batch_size", tc.batch_size},
              {"crop", tc.crop},
              {"lr_initial", tc.lr_initial},
              {"lr_final", tc.lr_final},
              {"seed", tc.seed},
              {"chunk_length", tc.chunk_length},
              {"max_steps", tc.max_steps},
              {"grad_clip", tc.grad_clip}};
}

void run_train(const std::string& config, const std::string& data,
               double lambda, bool lambda_set, const std::string& out,
               std::string log) {
  ssf::CodecConfig cc;
  ssf::TrainConfig tc;
  if (!config.empty()) ssf::apply_config(ssf::parse_kv_file(config), cc, tc);
  if (lambda_set) tc.lambda = lambda;
  if (log.empty()) log = out + ".log.csv";
  const auto ds = ssf::load_dataset(data);
  ssf::Rng rng(tc.seed);
  ssf::VideoCodec codec(cc, rng);
  const auto res = ssf::train_codec(codec, ds.frames, tc, log);
  ssf::save_checkpoint(out, json{{"codec", cc.to_json()}, {"train", train_json(tc)}},
                       codec);
  std::cout << "trained " << res.steps << " steps, loss " << res.first_loss
            << " -> " << res.final_loss << ", checkpoint " << out << "\n";
}

void run_sweep(const std::string& config, const std::string& data,
               const std::string& lambdas, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> toks;
  {
    std::stringstream ss(lambdas);
    std::string t;
    while (std::getline(ss, t, ',')) toks.push_back(t);
  }
  if (toks.empty()) throw std::runtime_error("sweep: empty lambda list");
  const auto ds = ssf::load_dataset(data);
  std::vector<ssf::RdPoint> points;
  for (size_t i = 0; i < toks.size(); ++i) {
    ssf::CodecConfig cc;
    ssf::TrainConfig tc;
    if (!config.empty()) ssf::apply_config(ssf::parse_kv_file(config), cc, tc);
    tc.lambda = std::stod(toks[i]);
    tc.seed += i;
    const std::string ckpt = (fs::path(out_dir) /
                              ("model_" + ssf::family_to_string(cc.family) +
                               "_l" + toks[i] + ".ckpt"))
                                 .string();
    if (fs::exists(ckpt)) {
      std::cout << "lambda " << toks[i] << ": reusing " << ckpt << "\n";
    } else {
      ssf::Rng rng(tc.seed);
      ssf::VideoCodec codec(cc, rng);
      const auto res =
          ssf::train_codec(codec, ds.frames, tc, ckpt + ".log.csv");
      ssf::save_checkpoint(
          ckpt, json{{"codec", cc.to_json()}, {"train", train_json(tc)}},
          codec);
      std::cout << "lambda " << toks[i] << ": " << res.steps << " steps, loss "
                << res.first_loss << " -> " << res.final_loss << "\n";
    }
    auto m = load_model(ckpt);
    const std::string stream =
        (fs::path(out_dir) / ".sweep_stream.ssfv").string();
    const auto rep = ssf::eval_codec(*m.codec, ds, m.lambda, stream);
    points.push_back(rep.point);
    std::cout << "lambda " << toks[i] << ": bpp " << rep.point.bpp << ", psnr "
              << rep.point.psnr_db << " dB\n";
  }
  ssf::write_rd_outputs(points, (fs::path(out_dir) / "sweep_rd").string());
}

void run_compress(const std::string& ckpt, const std::string& data,
                  const std::string& out) {
  auto m = load_model(ckpt);
  const auto ds = ssf::load_dataset(data);
  ssf::Container c;
  c.header.width = (uint16_t)ds.w;
  c.header.height = (uint16_t)ds.h;
  c.header.channels = (uint8_t)m.codec->config().frame_channels;
  c.header.gop_size = (uint8_t)m.codec->config().gop_size;
  c.header.model_digest = ssf::param_digest(*m.codec);
  c.header.frame_count = (uint32_t)ds.frames.size();
  c.chunks = m.codec->compress(ds.frames);
  ssf::write_container(out, c);
  const size_t bytes = ssf::container_size(c);
  std::cout << out << ": " << ds.frames.size() << " frames, " << bytes
            << " bytes, "
            << 8.0 * bytes / ((double)ds.frames.size() * ds.h * ds.w)
            << " bpp\n";
}

void run_decompress(const std::string& ckpt, const std::string& in,
                    const std::string& out_dir) {
  auto m = load_model(ckpt);
  const ssf::Container c = ssf::read_container(in);
  if (c.header.model_digest != ssf::param_digest(*m.codec))
    throw ssf::DecodeError(
        "stream was produced by a different model (digest mismatch)");
  const auto frames =
      m.codec->decompress(c.chunks, c.header.height, c.header.width);
  fs::create_directories(out_dir);
  for (size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "recon_%04zu.pgm", i);
    ssf::save_pgm16((fs::path(out_dir) / name).string(), frames[i]);
  }
  std::cout << "decoded " << frames.size() << " frames into " << out_dir
            << "\n";
}

void run_eval(const std::string& ckpt, const std::string& data,
              const std::string& report, bool payload_only) {
  auto m = load_model(ckpt);
  const auto ds = ssf::load_dataset(data);
  const std::string stream = report + ".ssfv";
  const auto rep =
      ssf::eval_codec(*m.codec, ds, m.lambda, stream, !payload_only);
  std::ofstream f(report);
  if (!f) throw std::runtime_error("cannot open for writing: " + report);
  f << ssf::report_to_json(rep).dump(2) << '\n';
  std::cout << "bpp " << rep.point.bpp << ", psnr " << rep.point.psnr_db
            << " dB over " << rep.frame_psnr.size() << " frames\n";
}

void run_rd_curve(const std::string& pattern, const std::string& prefix) {
  glob_t g{};
  const int rc = glob(pattern.c_str(), 0, nullptr, &g);
  if (rc != 0 && rc != GLOB_NOMATCH) {
    globfree(&g);
    throw std::runtime_error("glob failed for: " + pattern);
  }
  std::vector<ssf::RdPoint> points;
  for (size_t i = 0; i < g.gl_pathc; ++i) {
    std::ifstream f(g.gl_pathv[i]);
    if (!f) {
      globfree(&g);
      throw std::runtime_error(std::string("cannot open report: ") +
                               g.gl_pathv[i]);
    }
    points.push_back(ssf::report_from_json(json::parse(f)).point);
  }
  globfree(&g);
  if (points.empty())
    throw std::runtime_error("no reports matched: " + pattern);
  ssf::write_rd_outputs(points, prefix);
  std::cout << "wrote " << prefix << ".{csv,json,svg} with " << points.size()
            << " points\n";
}

}  // namespace

int main(int argc, char** argv) {
  ssf::kernels::init_from_env();
  CLI::App app{
      "Learned video codec: scale-space motion compensation with "
      "conv/swin/flawin transforms.\nSSF_KERNELS=serial selects the "
      "deterministic serial reference kernels."};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic sequence");
  int gd_frames = 60, gd_size = 64;
  uint64_t gd_seed = 1;
  std::string gd_out;
  gen->add_option("--frames", gd_frames, "frame count");
  gen->add_option("--size", gd_size, "square frame side");
  gen->add_option("--seed", gd_seed, "generator seed");
  gen->add_option("--out", gd_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "train one model");
  std::string tr_config, tr_data, tr_out, tr_log;
  double tr_lambda = 0.0;
  tr->add_option("--config", tr_config, "key=value config file");
  tr->add_option("--data", tr_data, "frame directory")->required();
  auto* tr_lopt = tr->add_option("--lambda", tr_lambda, "rate weight override");
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--log", tr_log, "CSV log path (default: <out>.log.csv)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "train one model per lambda");
  std::string sw_config, sw_data, sw_lambdas, sw_out;
  sw->add_option("--config", sw_config, "key=value config file");
  sw->add_option("--data", sw_data, "frame directory")->required();
  sw->add_option("--lambdas", sw_lambdas, "comma-separated lambda list")
      ->required();
  sw->add_option("--out", sw_out, "output directory")->required();

  // compress
  auto* co = app.add_subcommand("compress", "compress a frame directory");
  std::string co_ckpt, co_data, co_out;
  co->add_option("--ckpt", co_ckpt, "checkpoint")->required();
  co->add_option("--data", co_data, "frame directory")->required();
  co->add_option("--out", co_out, "output stream (.ssfv)")->required();

  // decompress
  auto* de = app.add_subcommand("decompress", "decode a stream to frames");
  std::string de_ckpt, de_in, de_out;
  de->add_option("--ckpt", de_ckpt, "checkpoint")->required();
  de->add_option("--in", de_in, "input stream")->required();
  de->add_option("--out", de_out, "output directory")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "compress+decode and report RD");
  std::string ev_ckpt, ev_data, ev_report;
  bool ev_payload_only = false;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint")->required();
  ev->add_option("--data", ev_data, "frame directory")->required();
  ev->add_option("--report", ev_report, "output JSON report")->required();
  ev->add_flag("--payload-only-bpp", ev_payload_only,
               "exclude the container header from bpp");

  // rd-curve
  auto* rd = app.add_subcommand("rd-curve", "merge eval reports into a curve");
  std::string rd_reports, rd_prefix;
  rd->add_option("--reports", rd_reports, "glob of eval report JSON files")
      ->required();
  rd->add_option("--out", rd_prefix, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) ssf::gen_synthetic(gd_out, gd_frames, gd_size, gd_seed);
    else if (*tr)
      run_train(tr_config, tr_data, tr_lambda, tr_lopt->count() > 0, tr_out,
                tr_log);
    else if (*sw) run_sweep(sw_config, sw_data, sw_lambdas, sw_out);
    else if (*co) run_compress(co_ckpt, co_data, co_out);
    else if (*de) run_decompress(de_ckpt, de_in, de_out);
    else if (*ev) run_eval(ev_ckpt, ev_data, ev_report, ev_payload_only);
    else if (*rd) run_rd_curve(rd_reports, rd_prefix);
  } catch (const ssf::DecodeError& e) {
    std::cerr << "decode error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
