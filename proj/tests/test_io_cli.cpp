#include "doctest.h"

#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stochfet/cli.hpp"
#include "stochfet/embedding_space.hpp"
#include "stochfet/errors.hpp"
#include "stochfet/io.hpp"
#include "stochfet/oracle.hpp"
#include "stochfet/trainer.hpp"

using namespace stochfet;
namespace fs = std::filesystem;

namespace {

// Scratch directory under the test working directory, wiped on first use so
// stale artifacts from an aborted run cannot leak into assertions.
const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d("io_cli_scratch");
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  return path.string();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int count_lines(const fs::path& path) {
  std::ifstream in(path);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

// Small corpus shared by the oracle and CLI tests; big enough to train on,
// small enough to keep the whole file under the e2e time budget.
OracleConfig tiny_oracle() {
  OracleConfig cfg;
  cfg.device_count = 6;
  cfg.cycles = 4;
  cfg.voltages.clear();
  for (int i = 0; i < 21; ++i) cfg.voltages.push_back(1.8 * i / 20.0);
  cfg.seed = 11;
  return cfg;
}

ModelFile tiny_trained_model(bool use_embeddings, double holdout_fraction) {
  OracleData data = generate_synthetic_dataset(tiny_oracle());
  NetworkConfig net;
  net.hidden_sizes = {16, 16};
  net.use_embeddings = use_embeddings;
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 64;
  tc.holdout_fraction = holdout_fraction;
  tc.seed = 5;
  ModelFile mf;
  mf.model = train(net, tc, data.dataset);
  if (use_embeddings) {
    mf.embedding_gaussian = fit_gaussian(mf.model.embeddings);
  }
  return mf;
}

// Runs the CLI in-process, redirecting its stdout to a file so the printed
// contract lines can be asserted on and the test log stays clean.
int run_cli(const std::vector<std::string>& args,
            std::string capture_path = "") {
  if (capture_path.empty()) {
    capture_path = (scratch() / "cli_stdout_sink.txt").string();
  }
  std::vector<std::string> full;
  full.push_back("stochfet");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> argv;
  argv.reserve(full.size());
  for (std::string& arg : full) argv.push_back(arg.data());

  std::cout.flush();
  std::fflush(stdout);
  int saved_fd = dup(fileno(stdout));
  REQUIRE(saved_fd != -1);
  REQUIRE(std::freopen(capture_path.c_str(), "w", stdout) != nullptr);
  int rc = cli_main(static_cast<int>(argv.size()), argv.data());
  std::cout.flush();
  std::fflush(stdout);
  dup2(saved_fd, fileno(stdout));
  close(saved_fd);
  return rc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Synthetic-data oracle

TEST_CASE("default oracle config yields 63 devices x 61 voltages x 20 cycles") {
  OracleConfig cfg;
  OracleData data = generate_synthetic_dataset(cfg);
  CHECK(data.dataset.device_count == 63);
  CHECK(data.dataset.points.size() == 63u * 61u * 20u);
  CHECK(data.latents.size() == 63u);

  // Device-major ordering, then voltage, then cycle.
  CHECK(data.dataset.points.front().device_id == 0);
  CHECK(data.dataset.points.back().device_id == 62);
  const DataPoint& second = data.dataset.points[1];
  CHECK(second.device_id == 0);
  CHECK(second.v_gate == data.dataset.points.front().v_gate);
}

TEST_CASE("oracle is deterministic under a fixed seed") {
  OracleConfig cfg = tiny_oracle();
  OracleData a = generate_synthetic_dataset(cfg);
  OracleData b = generate_synthetic_dataset(cfg);
  REQUIRE(a.dataset.points.size() == b.dataset.points.size());
  for (std::size_t i = 0; i < a.dataset.points.size(); ++i) {
    CHECK(same_bits(a.dataset.points[i].i_drain, b.dataset.points[i].i_drain));
  }
  REQUIRE(a.latents.size() == b.latents.size());
  for (std::size_t d = 0; d < a.latents.size(); ++d) {
    CHECK(same_bits(a.latents[d].delta_vth, b.latents[d].delta_vth));
    CHECK(same_bits(a.latents[d].delta_gain, b.latents[d].delta_gain));
  }

  cfg.seed = 12;
  OracleData c = generate_synthetic_dataset(cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.dataset.points.size(); ++i) {
    any_diff = any_diff ||
               a.dataset.points[i].i_drain != c.dataset.points[i].i_drain;
  }
  CHECK(any_diff);
}

TEST_CASE("zero noise and zero bimodality put every draw on the mean curve") {
  OracleConfig cfg = tiny_oracle();
  cfg.noise_scale = 0.0;
  cfg.bimodality_weight = 0.0;
  OracleData data = generate_synthetic_dataset(cfg);
  for (const DataPoint& p : data.dataset.points) {
    OracleMixture mix =
        oracle_mixture(cfg, data.latents[static_cast<std::size_t>(p.device_id)],
                       p.v_gate);
    CHECK(same_bits(p.i_drain, mix.means[0]));
  }
}

TEST_CASE("oracle mixture weights form a distribution and widen with voltage") {
  OracleConfig cfg;
  DeviceLatent latent{0.02, -0.1};
  OracleMixture low = oracle_mixture(cfg, latent, 0.9);
  OracleMixture high = oracle_mixture(cfg, latent, 1.7);
  CHECK(low.weights.size() == 2u);
  CHECK(low.weights[0] + low.weights[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(high.weights[0] + high.weights[1] ==
        doctest::Approx(1.0).epsilon(1e-12));
  for (double w : low.weights) CHECK(w >= 0.0);
  for (double s : low.sigmas) CHECK(s >= 0.0);
  // The lower branch carries far more weight above the bimodality knee.
  CHECK(high.weights[1] > 4.0 * low.weights[1]);
  CHECK(high.means[1] < high.means[0]);
}

TEST_CASE("oracle config validation") {
  OracleConfig cfg;
  cfg.device_count = 0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = OracleConfig{};
  cfg.cycles = 0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = OracleConfig{};
  cfg.vth_spread = -0.1;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = OracleConfig{};
  cfg.bimodality_weight = 1.0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = OracleConfig{};
  cfg.voltages.clear();
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = OracleConfig{};
  cfg.voltages = {0.0, 0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), config_error);
}

// ---------------------------------------------------------------------------
// Measurement and waveform CSV

TEST_CASE("well-formed measurement file loads all rows") {
  std::string path = write_text(scratch() / "ok.csv",
                                "device_id,v_gate,i_drain\n"
                                "0,0.5,1e-6\n"
                                "0,1.0,2.5e-5\n"
                                "1,0.5,1.2e-6\n");
  LoadedMeasurements lm = load_measurements(path);
  CHECK(lm.dataset.points.size() == 3u);
  CHECK(lm.dataset.device_count == 2);
  CHECK(lm.device_ids == std::vector<long long>{0, 1});
  CHECK(lm.dataset.points[1].v_gate == 1.0);
  CHECK(lm.dataset.points[1].i_drain == 2.5e-5);
}

TEST_CASE("sparse device ids densify in ascending order") {
  std::string path = write_text(scratch() / "sparse.csv",
                                "device_id,v_gate,i_drain\n"
                                "9,0.5,1e-6\n"
                                "5,0.6,2e-6\n"
                                "9,0.7,3e-6\n");
  LoadedMeasurements lm = load_measurements(path);
  CHECK(lm.dataset.device_count == 2);
  CHECK(lm.device_ids == std::vector<long long>{5, 9});
  CHECK(lm.dataset.points[0].device_id == 1);  // file id 9
  CHECK(lm.dataset.points[1].device_id == 0);  // file id 5
  CHECK(lm.dataset.points[2].device_id == 1);
}

TEST_CASE("negative current is rejected with its line number") {
  std::string path = write_text(scratch() / "neg.csv",
                                "device_id,v_gate,i_drain\n"
                                "0,0.5,1e-6\n"
                                "0,0.6,-1e-6\n");
  try {
    load_measurements(path);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    CHECK(std::string(e.what()).find("negative") != std::string::npos);
  }
}

TEST_CASE("measurement parse errors carry the offending line") {
  CHECK_THROWS_AS(load_measurements((scratch() / "missing.csv").string()),
                  io_error);

  std::string bad_header = write_text(scratch() / "hdr.csv",
                                      "device,v_gate,i_drain\n0,0.5,1e-6\n");
  try {
    load_measurements(bad_header);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }

  std::string two_fields =
      write_text(scratch() / "two.csv", "device_id,v_gate,i_drain\n0,0.5\n");
  CHECK_THROWS_AS(load_measurements(two_fields), parse_error);

  std::string bad_cell = write_text(scratch() / "cell.csv",
                                    "device_id,v_gate,i_drain\n0,0.5,abc\n");
  try {
    load_measurements(bad_cell);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  std::string bad_id = write_text(scratch() / "id.csv",
                                  "device_id,v_gate,i_drain\n1.5,0.5,1e-6\n");
  CHECK_THROWS_AS(load_measurements(bad_id), parse_error);

  std::string inf_v = write_text(scratch() / "inf.csv",
                                 "device_id,v_gate,i_drain\n0,inf,1e-6\n");
  CHECK_THROWS_AS(load_measurements(inf_v), parse_error);

  std::string empty = write_text(scratch() / "empty.csv", "");
  CHECK_THROWS_AS(load_measurements(empty), parse_error);

  std::string header_only =
      write_text(scratch() / "hdr_only.csv", "device_id,v_gate,i_drain\n");
  try {
    load_measurements(header_only);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find("no data rows") != std::string::npos);
  }
}

TEST_CASE("carriage returns before the newline are tolerated") {
  std::string path = write_text(scratch() / "crlf.csv",
                                "device_id,v_gate,i_drain\r\n0,0.5,1e-6\r\n");
  LoadedMeasurements lm = load_measurements(path);
  CHECK(lm.dataset.points.size() == 1u);
  CHECK(lm.dataset.points[0].i_drain == 1e-6);
}

TEST_CASE("measurement writer and reader roundtrip bit-exactly") {
  OracleData data = generate_synthetic_dataset(tiny_oracle());
  std::vector<long long> ids = {3, 7, 10, 20, 21, 40};
  std::string path = (scratch() / "roundtrip.csv").string();
  write_measurements_csv(path, data.dataset, ids);
  LoadedMeasurements lm = load_measurements(path);
  CHECK(lm.device_ids == ids);  // already ascending, so dense order is kept
  REQUIRE(lm.dataset.points.size() == data.dataset.points.size());
  for (std::size_t i = 0; i < lm.dataset.points.size(); ++i) {
    CHECK(lm.dataset.points[i].device_id == data.dataset.points[i].device_id);
    CHECK(same_bits(lm.dataset.points[i].v_gate, data.dataset.points[i].v_gate));
    CHECK(
        same_bits(lm.dataset.points[i].i_drain, data.dataset.points[i].i_drain));
  }
}

TEST_CASE("measurement writer rejects a wrong-sized id map") {
  OracleData data = generate_synthetic_dataset(tiny_oracle());
  std::vector<long long> ids = {0, 1};  // dataset has 6 devices
  CHECK_THROWS_AS(
      write_measurements_csv((scratch() / "bad_ids.csv").string(),
                             data.dataset, ids),
      shape_error);
}

TEST_CASE("waveform loading") {
  std::string good = write_text(scratch() / "wave.csv",
                                "time,v_gate\n0,0\n0.1,0.9\n0.2,1.8\n0.3,0.9\n");
  Waveform w = load_waveform(good);
  CHECK(w.samples.size() == 4u);
  CHECK(w.samples[2].v_gate == 1.8);

  std::string bad_header =
      write_text(scratch() / "wave_hdr.csv", "t,v\n0,0\n0.1,0.9\n");
  CHECK_THROWS_AS(load_waveform(bad_header), parse_error);

  std::string bad_cell =
      write_text(scratch() / "wave_cell.csv", "time,v_gate\n0,x\n0.1,0.9\n");
  CHECK_THROWS_AS(load_waveform(bad_cell), parse_error);

  std::string one_row = write_text(scratch() / "wave_one.csv", "time,v_gate\n0,0\n");
  CHECK_THROWS_AS(load_waveform(one_row), shape_error);

  std::string unsorted = write_text(scratch() / "wave_sort.csv",
                                    "time,v_gate\n0.2,0\n0.1,0.9\n");
  CHECK_THROWS_AS(load_waveform(unsorted), domain_error);
}

// ---------------------------------------------------------------------------
// Model serialization

TEST_CASE("model save/load roundtrip reproduces every parameter bit-exactly") {
  ModelFile mf = tiny_trained_model(true, 0.2);
  REQUIRE(mf.embedding_gaussian.has_value());
  std::string path = (scratch() / "model.json").string();
  save_model(mf, path);
  ModelFile back = load_model(path);

  CHECK(back.model.network.mixture_components ==
        mf.model.network.mixture_components);
  CHECK(back.model.network.hidden_sizes == mf.model.network.hidden_sizes);
  CHECK(back.model.network.embedding_dim == mf.model.network.embedding_dim);
  CHECK(back.model.network.use_embeddings == mf.model.network.use_embeddings);
  CHECK(same_bits(back.model.network.sigma_floor, mf.model.network.sigma_floor));

  CHECK(same_bits(back.model.scaling.v_mean, mf.model.scaling.v_mean));
  CHECK(same_bits(back.model.scaling.v_std, mf.model.scaling.v_std));
  CHECK(same_bits(back.model.scaling.i_scale, mf.model.scaling.i_scale));

  REQUIRE(back.model.params.layers.size() == mf.model.params.layers.size());
  for (std::size_t l = 0; l < mf.model.params.layers.size(); ++l) {
    const Layer& a = mf.model.params.layers[l];
    const Layer& b = back.model.params.layers[l];
    CHECK(b.in == a.in);
    CHECK(b.out == a.out);
    REQUIRE(b.w.size() == a.w.size());
    for (std::size_t i = 0; i < a.w.size(); ++i) CHECK(same_bits(b.w[i], a.w[i]));
    REQUIRE(b.b.size() == a.b.size());
    for (std::size_t i = 0; i < a.b.size(); ++i) CHECK(same_bits(b.b[i], a.b[i]));
  }

  CHECK(back.model.embeddings.device_count == mf.model.embeddings.device_count);
  CHECK(back.model.embeddings.dim == mf.model.embeddings.dim);
  REQUIRE(back.model.embeddings.values.size() ==
          mf.model.embeddings.values.size());
  for (std::size_t i = 0; i < mf.model.embeddings.values.size(); ++i) {
    CHECK(same_bits(back.model.embeddings.values[i],
                    mf.model.embeddings.values[i]));
  }

  REQUIRE(back.model.log.size() == mf.model.log.size());
  for (std::size_t i = 0; i < mf.model.log.size(); ++i) {
    CHECK(back.model.log[i].epoch == mf.model.log[i].epoch);
    CHECK(same_bits(back.model.log[i].train_loss, mf.model.log[i].train_loss));
    CHECK(
        same_bits(back.model.log[i].holdout_loss, mf.model.log[i].holdout_loss));
  }

  REQUIRE(back.embedding_gaussian.has_value());
  CHECK(back.embedding_gaussian->dim == mf.embedding_gaussian->dim);
  for (std::size_t i = 0; i < mf.embedding_gaussian->mean.size(); ++i) {
    CHECK(same_bits(back.embedding_gaussian->mean[i],
                    mf.embedding_gaussian->mean[i]));
  }
  for (std::size_t i = 0; i < mf.embedding_gaussian->covariance.size(); ++i) {
    CHECK(same_bits(back.embedding_gaussian->covariance[i],
                    mf.embedding_gaussian->covariance[i]));
  }
}

TEST_CASE("a missing holdout split serializes its NaN losses as null") {
  ModelFile mf = tiny_trained_model(true, 0.0);
  REQUIRE(!mf.model.log.empty());
  REQUIRE(std::isnan(mf.model.log[0].holdout_loss));
  std::string path = (scratch() / "model_nan.json").string();
  save_model(mf, path);
  CHECK(read_text(path).find("nan") == std::string::npos);
  ModelFile back = load_model(path);
  CHECK(std::isnan(back.model.log[0].holdout_loss));
  CHECK(same_bits(back.model.log[0].train_loss, mf.model.log[0].train_loss));
}

TEST_CASE("an embedding-free model roundtrips and evaluates standalone") {
  ModelFile mf = tiny_trained_model(false, 0.2);
  CHECK(!mf.embedding_gaussian.has_value());
  CHECK(mf.model.embeddings.device_count == 0);
  std::string path = (scratch() / "model_noemb.json").string();
  save_model(mf, path);
  ModelFile back = load_model(path);
  CHECK(!back.embedding_gaussian.has_value());
  CHECK(back.model.network.use_embeddings == false);

  // Self-describing: evaluation needs nothing beyond the file contents.
  OracleData data = generate_synthetic_dataset(tiny_oracle());
  double r2 = r_squared(back.model, data.dataset);
  CHECK(std::isfinite(r2));
}

TEST_CASE("truncated model file gives a structured parse error") {
  ModelFile mf = tiny_trained_model(true, 0.2);
  std::string path = (scratch() / "model_trunc.json").string();
  save_model(mf, path);
  std::string text = read_text(path);
  write_text(scratch() / "model_trunc.json", text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_model(path), parse_error);
}

TEST_CASE("model files with inconsistent dimensions are rejected") {
  ModelFile mf = tiny_trained_model(true, 0.2);
  std::string path = (scratch() / "model_good.json").string();
  save_model(mf, path);
  nlohmann::json j = nlohmann::json::parse(read_text(path));

  // Head declares K=3 but the component count says 4: 3K arrays no longer
  // match, so the load must fail rather than misread the heads.
  nlohmann::json bad = j;
  bad["network"]["mixture_components"] = 4;
  std::string p1 = write_text(scratch() / "model_k.json", bad.dump());
  CHECK_THROWS_AS(load_model(p1), parse_error);

  bad = j;
  bad["version"] = 99;
  std::string p2 = write_text(scratch() / "model_v.json", bad.dump());
  try {
    load_model(p2);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  bad = j;
  bad["format"] = "something-else";
  std::string p3 = write_text(scratch() / "model_f.json", bad.dump());
  CHECK_THROWS_AS(load_model(p3), parse_error);

  bad = j;
  bad["embeddings"]["values"].erase(0);
  std::string p4 = write_text(scratch() / "model_e.json", bad.dump());
  CHECK_THROWS_AS(load_model(p4), parse_error);

  bad = j;
  bad["layers"][0]["weights"].erase(0);
  std::string p5 = write_text(scratch() / "model_w.json", bad.dump());
  CHECK_THROWS_AS(load_model(p5), parse_error);

  bad = j;
  bad.erase("scaling");
  std::string p6 = write_text(scratch() / "model_s.json", bad.dump());
  CHECK_THROWS_AS(load_model(p6), parse_error);
}

// ---------------------------------------------------------------------------
// CLI end to end. Every subcommand runs in-process on a reduced-size corpus.

TEST_CASE("cli pipeline: synth, train, eval, plot emitters") {
  const fs::path dir = scratch();
  const std::string data = (dir / "cli_data.csv").string();
  const std::string model = (dir / "cli_model.json").string();

  // synth: deterministic under a fixed seed, distinct across seeds.
  REQUIRE(run_cli({"synth", "-o", data, "--devices", "6", "--cycles", "4",
                   "--points", "21", "--seed", "3"}) == 0);
  CHECK(count_lines(data) == 1 + 6 * 21 * 4);
  const std::string data2 = (dir / "cli_data2.csv").string();
  REQUIRE(run_cli({"synth", "-o", data2, "--devices", "6", "--cycles", "4",
                   "--points", "21", "--seed", "3"}) == 0);
  CHECK(read_text(data) == read_text(data2));
  REQUIRE(run_cli({"synth", "-o", data2, "--devices", "6", "--cycles", "4",
                   "--points", "21", "--seed", "4"}) == 0);
  CHECK(read_text(data) != read_text(data2));

  // train: model file plus per-epoch log.
  REQUIRE(run_cli({"train", data, "-o", model, "--epochs", "4", "--batch",
                   "64", "--seed", "5"}) == 0);
  CHECK(fs::exists(model));
  CHECK(count_lines(model + ".log.csv") == 1 + 4);

  // eval: pinned stdout format, metrics mirrored to the CSV.
  const std::string eval_out = (dir / "cli_eval.txt").string();
  const std::string metrics = (dir / "cli_metrics.csv").string();
  REQUIRE(run_cli({"eval", model, data, "-o", metrics}, eval_out) == 0);
  {
    std::string line = read_text(eval_out);
    double r2 = 0.0;
    double crps = 0.0;
    REQUIRE(std::sscanf(line.c_str(), "r2=%lf crps=%lf", &r2, &crps) == 2);
    CHECK(std::isfinite(r2));
    CHECK(crps > 0.0);
    CHECK(count_lines(metrics) == 2);
  }

  // quantiles: one row per grid voltage, ordered bands.
  const std::string quant = (dir / "cli_quant.csv").string();
  REQUIRE(run_cli({"quantiles", model, "-o", quant, "--device", "2", "--points",
                   "21"}) == 0);
  CHECK(count_lines(quant) == 1 + 21);
  {
    std::ifstream in(quant);
    std::string line;
    std::getline(in, line);
    CHECK(line == "v_gate,i_q05,i_q50,i_q95");
    while (std::getline(in, line)) {
      double v = 0.0, lo = 0.0, mid = 0.0, hi = 0.0;
      REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &v, &lo, &mid,
                          &hi) == 4);
      CHECK(lo <= mid);
      CHECK(mid <= hi);
      CHECK(lo >= 0.0);
    }
  }

  // devices: structured set is mean + 2 per axis + randoms.
  const std::string devices = (dir / "cli_devices.csv").string();
  REQUIRE(run_cli({"devices", model, "-o", devices, "--structured", "--random",
                   "3", "--points", "21", "--seed", "7"}) == 0);
  CHECK(count_lines(devices) == 1 + (1 + 2 * 4 + 3) * 21);
  {
    std::string text = read_text(devices);
    CHECK(text.find("mean,") != std::string::npos);
    CHECK(text.find("plus2sd_axis_1,") != std::string::npos);
    CHECK(text.find("minus2sd_axis_4,") != std::string::npos);
    CHECK(text.find("random_3,") != std::string::npos);
  }
  REQUIRE(run_cli({"devices", model, "-o", devices, "--random", "2", "--points",
                   "21", "--seed", "7"}) == 0);
  CHECK(count_lines(devices) == 1 + 2 * 21);

  // sweep: one output row per waveform sample, reproducible per seed.
  const std::string wave = write_text(dir / "cli_wave.csv", [] {
    std::string text = "time,v_gate\n";
    for (int i = 0; i <= 40; ++i) {
      double v = i <= 20 ? 1.8 * i / 20.0 : 1.8 * (40 - i) / 20.0;
      text += format_double(0.01 * i) + "," + format_double(v) + "\n";
    }
    return text;
  }());
  const std::string sweep1 = (dir / "cli_sweep1.csv").string();
  const std::string sweep2 = (dir / "cli_sweep2.csv").string();
  REQUIRE(run_cli({"sweep", model, wave, "-o", sweep1, "--seed", "9"}) == 0);
  REQUIRE(run_cli({"sweep", model, wave, "-o", sweep2, "--seed", "9"}) == 0);
  CHECK(count_lines(sweep1) == 1 + 41);
  CHECK(read_text(sweep1) == read_text(sweep2));
  REQUIRE(run_cli({"sweep", model, wave, "-o", sweep2, "--seed", "10"}) == 0);
  CHECK(read_text(sweep1) != read_text(sweep2));

  // pdf: one CSV per requested voltage, nonnegative densities.
  const std::string prefix = (dir / "cli_dens").string();
  REQUIRE(run_cli({"pdf", model, "--vg", "0.9,1.7", "--n", "40", "--points",
                   "80", "-o", prefix, "--seed", "2"}) == 0);
  for (const char* vg : {"0.9", "1.7"}) {
    const std::string path = prefix + "_vg" + vg + ".csv";
    CHECK(count_lines(path) == 1 + 80);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,density");
    while (std::getline(in, line)) {
      double x = 0.0, density = 0.0;
      REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &x, &density) == 2);
      CHECK(x >= 0.0);
      CHECK(density >= 0.0);
    }
  }

  // pca: one projection row per trained device.
  const std::string pca = (dir / "cli_pca.csv").string();
  REQUIRE(run_cli({"pca", model, "-o", pca}) == 0);
  CHECK(count_lines(pca) == 1 + 6);
  {
    std::ifstream in(pca);
    std::string line;
    std::getline(in, line);
    CHECK(line == "device_id,pc1,pc2");
  }
}

TEST_CASE("cli trains and evaluates without embeddings") {
  const fs::path dir = scratch();
  const std::string data = (dir / "cli_ne_data.csv").string();
  const std::string model = (dir / "cli_ne_model.json").string();
  REQUIRE(run_cli({"synth", "-o", data, "--devices", "4", "--cycles", "3",
                   "--points", "15", "--seed", "21"}) == 0);
  REQUIRE(run_cli({"train", data, "-o", model, "--epochs", "3", "--batch",
                   "64", "--no-embeddings", "--hidden", "12,12", "--seed",
                   "5"}) == 0);
  const std::string eval_out = (dir / "cli_ne_eval.txt").string();
  REQUIRE(run_cli({"eval", model, data}, eval_out) == 0);
  CHECK(read_text(eval_out).rfind("r2=", 0) == 0);

  // No embedding distribution in the file, so device synthesis must refuse.
  CHECK(run_cli({"devices", model, "-o", (dir / "cli_ne_dev.csv").string()}) ==
        1);
}

TEST_CASE("cli exit codes separate usage errors from domain errors") {
  const fs::path dir = scratch();
  const std::string sink = (dir / "cli_sink.txt").string();
  CHECK(run_cli({"--help"}, sink) == 0);
  CHECK(run_cli({"no-such-command"}, sink) == 2);
  CHECK(run_cli({"train", "--frobnicate"}, sink) == 2);
  CHECK(run_cli({}, sink) == 2);
  CHECK(run_cli({"eval", (dir / "absent.json").string(),
                 (dir / "absent.csv").string()},
                sink) == 1);
  const std::string bad = write_text(dir / "cli_bad.csv", "wrong,header\n");
  CHECK(run_cli({"train", bad}, sink) == 1);
}

TEST_CASE("cli seed precedence: flag beats config beats environment") {
  const fs::path dir = scratch();
  const std::string data = (dir / "cli_seed_data.csv").string();
  const std::string model = (dir / "cli_seed_model.json").string();
  REQUIRE(run_cli({"synth", "-o", data, "--devices", "4", "--cycles", "3",
                   "--points", "15", "--seed", "21"}) == 0);
  REQUIRE(run_cli({"train", data, "-o", model, "--epochs", "2", "--batch",
                   "64", "--seed", "5"}) == 0);
  const std::string wave = write_text(
      dir / "cli_seed_wave.csv", "time,v_gate\n0,0\n0.1,0.9\n0.2,1.8\n");

  const std::string by_flag = (dir / "cli_seed_flag.csv").string();
  const std::string by_env = (dir / "cli_seed_env.csv").string();
  const std::string by_cfg = (dir / "cli_seed_cfg.csv").string();
  REQUIRE(run_cli({"sweep", model, wave, "-o", by_flag, "--seed", "33"}) == 0);

  setenv("STOCHFET_SEED", "33", 1);
  REQUIRE(run_cli({"sweep", model, wave, "-o", by_env}) == 0);
  CHECK(read_text(by_flag) == read_text(by_env));

  // Config seed overrides the environment; an explicit flag overrides both.
  const std::string cfg =
      write_text(dir / "cli_seed_cfg.json", "{\"seed\": 44}");
  REQUIRE(run_cli({"--config", cfg, "sweep", model, wave, "-o", by_cfg}) == 0);
  const std::string by_44 = (dir / "cli_seed_44.csv").string();
  REQUIRE(run_cli({"sweep", model, wave, "-o", by_44, "--seed", "44"}) == 0);
  CHECK(read_text(by_cfg) == read_text(by_44));
  REQUIRE(run_cli({"--config", cfg, "sweep", model, wave, "-o", by_cfg,
                   "--seed", "33"}) == 0);
  CHECK(read_text(by_cfg) == read_text(by_flag));

  setenv("STOCHFET_SEED", "not-a-number", 1);
  CHECK(run_cli({"sweep", model, wave, "-o", by_env}) == 1);
  unsetenv("STOCHFET_SEED");

  // Unknown config keys are typos, not silent defaults.
  const std::string bad_cfg =
      write_text(dir / "cli_seed_bad.json", "{\"train\": {\"epoch\": 2}}");
  CHECK(run_cli({"--config", bad_cfg, "train", data, "-o", model}) == 1);
}
