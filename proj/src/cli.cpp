#include "stochfet/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stochfet/embedding_space.hpp"
#include "stochfet/errors.hpp"
#include "stochfet/io.hpp"
#include "stochfet/oracle.hpp"
#include "stochfet/rng.hpp"
#include "stochfet/sweep_sim.hpp"
#include "stochfet/trainer.hpp"

namespace stochfet {

namespace {

// Defaults loaded from --config. Flags set on the command line win over
// these; these win over the built-in defaults.
struct CliDefaults {
  std::optional<std::uint64_t> seed;
  nlohmann::json train = nlohmann::json::object();
  nlohmann::json oracle = nlohmann::json::object();
};

// A typoed key silently falling back to a default is worse than an error.
void check_keys(const nlohmann::json& section,
                const std::set<std::string>& allowed,
                const std::string& prefix) {
  for (const auto& item : section.items()) {
    if (allowed.count(item.key()) == 0) {
      throw config_error("unknown config key \"" + prefix + item.key() + "\"");
    }
  }
}

CliDefaults load_defaults(const std::string& path) {
  CliDefaults d;
  if (path.empty()) return d;
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
  try {
    check_keys(j, {"seed", "train", "oracle"}, "");
    if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("train")) {
      d.train = j.at("train");
      check_keys(d.train,
                 {"loss", "epochs", "batch_size", "learning_rate",
                  "holdout_fraction", "mixture_components", "hidden_sizes",
                  "embedding_dim", "use_embeddings", "sigma_floor"},
                 "train.");
    }
    if (j.contains("oracle")) {
      d.oracle = j.at("oracle");
      check_keys(d.oracle,
                 {"device_count", "cycles", "vth_spread", "gain_spread",
                  "noise_scale", "bimodality_weight", "v_min", "v_max",
                  "v_points"},
                 "oracle.");
    }
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
  return d;
}

template <typename T>
T resolve(const CLI::Option* opt, const T& flag_value,
          const nlohmann::json& section, const char* key) {
  if (opt->count() == 0 && section.contains(key)) {
    return section.at(key).get<T>();
  }
  return flag_value;
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t flag,
                           const CliDefaults& d) {
  if (seed_opt->count() > 0) return flag;
  if (d.seed) return *d.seed;
  if (const char* env = std::getenv("STOCHFET_SEED")) {
    std::string_view sv(env);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc() || ptr != sv.data() + sv.size()) {
      throw config_error("STOCHFET_SEED is not an unsigned integer: \"" +
                         std::string(env) + "\"");
    }
    return v;
  }
  return 1;
}

std::vector<std::string> split_on_comma(const std::string& list) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = list.find(',', start);
    if (comma == std::string::npos) {
      tokens.push_back(list.substr(start));
      return tokens;
    }
    tokens.push_back(list.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double_token(const std::string& token, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      !std::isfinite(v)) {
    throw config_error(std::string("bad ") + what + " value \"" + token + "\"");
  }
  return v;
}

std::vector<int> parse_int_list(const std::string& list, const char* what) {
  std::vector<int> out;
  for (const std::string& token : split_on_comma(list)) {
    int v = 0;
    auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw config_error(std::string("bad ") + what + " value \"" + token +
                         "\"");
    }
    out.push_back(v);
  }
  return out;
}

LossKind loss_from_string(const std::string& name) {
  if (name == "crps") return LossKind::kCrps;
  if (name == "gnll") return LossKind::kGnll;
  throw config_error("unknown loss \"" + name + "\", expected crps or gnll");
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw config_error("grid needs at least 2 points");
  if (!(std::isfinite(lo) && std::isfinite(hi) && hi > lo)) {
    throw config_error("grid maximum must exceed the minimum");
  }
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  }
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw io_error("write failed for " + path);
}

// Copies the trained row for a device; empty for embedding-free models, so
// those evaluate without any table at all.
std::vector<double> device_embedding(const ModelFile& mf, int device) {
  if (!mf.model.network.use_embeddings) return {};
  std::span<const double> row = mf.model.embeddings.row(device);
  return std::vector<double>(row.begin(), row.end());
}

const EmbeddingGaussian& require_gaussian(const ModelFile& mf) {
  if (!mf.embedding_gaussian) {
    throw config_error(
        "model file has no embedding distribution; train with embeddings "
        "enabled on at least two devices");
  }
  return *mf.embedding_gaussian;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{
      "Stochastic transistor current model: synthesize measurement data, "
      "train a mixture density network, and emit evaluation and plot CSVs."};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON file with a default seed and train/oracle settings");
  std::uint64_t seed_flag = 1;
  CLI::Option* seed_opt =
      app.add_option("--seed", seed_flag,
                     "Random seed; wins over the config file and the "
                     "STOCHFET_SEED environment variable");

  // synth ------------------------------------------------------------------
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic measurement CSV (device ids 0..n-1)");
  synth->fallthrough();
  std::string synth_out;
  synth->add_option("-o,--output", synth_out, "Output CSV path")->required();
  OracleConfig oracle_defaults;
  int synth_devices = oracle_defaults.device_count;
  int synth_cycles = oracle_defaults.cycles;
  double synth_vth = oracle_defaults.vth_spread;
  double synth_gain = oracle_defaults.gain_spread;
  double synth_noise = oracle_defaults.noise_scale;
  double synth_bimod = oracle_defaults.bimodality_weight;
  double synth_vmin = 0.0;
  double synth_vmax = 1.8;
  int synth_points = 61;
  CLI::Option* o_devices =
      synth->add_option("--devices", synth_devices, "Device count");
  CLI::Option* o_cycles =
      synth->add_option("--cycles", synth_cycles, "Cycles per grid voltage");
  CLI::Option* o_vth = synth->add_option("--vth-spread", synth_vth,
                                         "Threshold-voltage spread in volts");
  CLI::Option* o_gain =
      synth->add_option("--gain-spread", synth_gain, "Log on-current spread");
  CLI::Option* o_noise = synth->add_option("--noise-scale", synth_noise,
                                           "Mixture width multiplier");
  CLI::Option* o_bimod = synth->add_option(
      "--bimodality", synth_bimod, "High-voltage weight of the lower branch");
  CLI::Option* o_svmin =
      synth->add_option("--vmin", synth_vmin, "Grid start in volts");
  CLI::Option* o_svmax =
      synth->add_option("--vmax", synth_vmax, "Grid end in volts");
  CLI::Option* o_spoints =
      synth->add_option("--points", synth_points, "Grid point count");
  synth->callback([&]() {
    CliDefaults d = load_defaults(config_path);
    OracleConfig oc;
    oc.device_count = resolve(o_devices, synth_devices, d.oracle, "device_count");
    oc.cycles = resolve(o_cycles, synth_cycles, d.oracle, "cycles");
    oc.vth_spread = resolve(o_vth, synth_vth, d.oracle, "vth_spread");
    oc.gain_spread = resolve(o_gain, synth_gain, d.oracle, "gain_spread");
    oc.noise_scale = resolve(o_noise, synth_noise, d.oracle, "noise_scale");
    oc.bimodality_weight =
        resolve(o_bimod, synth_bimod, d.oracle, "bimodality_weight");
    bool grid_given = o_svmin->count() > 0 || o_svmax->count() > 0 ||
                      o_spoints->count() > 0 || d.oracle.contains("v_min") ||
                      d.oracle.contains("v_max") || d.oracle.contains("v_points");
    if (grid_given) {
      oc.voltages = linspace(resolve(o_svmin, synth_vmin, d.oracle, "v_min"),
                             resolve(o_svmax, synth_vmax, d.oracle, "v_max"),
                             resolve(o_spoints, synth_points, d.oracle, "v_points"));
    }
    oc.seed = resolve_seed(seed_opt, seed_flag, d);
    OracleData data = generate_synthetic_dataset(oc);
    std::vector<long long> ids(static_cast<std::size_t>(oc.device_count));
    std::iota(ids.begin(), ids.end(), 0LL);
    write_measurements_csv(synth_out, data.dataset, ids);
    std::cout << "wrote " << synth_out << " (" << data.dataset.points.size()
              << " points, " << oc.device_count << " devices)\n";
  });

  // train ------------------------------------------------------------------
  CLI::App* train_cmd = app.add_subcommand(
      "train", "Train a mixture density network on a measurement CSV");
  train_cmd->fallthrough();
  std::string train_data;
  train_cmd->add_option("data", train_data, "Measurement CSV")->required();
  std::string train_out = "model.json";
  train_cmd->add_option("-o,--output", train_out, "Model JSON path");
  std::string train_log_path;
  train_cmd->add_option("--log", train_log_path,
                        "Training-log CSV path (default <output>.log.csv)");
  TrainConfig train_defaults;
  NetworkConfig net_defaults;
  int t_epochs = train_defaults.epochs;
  int t_batch = train_defaults.batch_size;
  double t_lr = train_defaults.learning_rate;
  double t_holdout = train_defaults.holdout_fraction;
  std::string t_loss = "crps";
  int t_components = net_defaults.mixture_components;
  std::string t_hidden;
  int t_emb_dim = net_defaults.embedding_dim;
  bool t_no_emb = false;
  double t_floor = net_defaults.sigma_floor;
  CLI::Option* o_epochs =
      train_cmd->add_option("--epochs", t_epochs, "Training epochs");
  CLI::Option* o_batch =
      train_cmd->add_option("--batch", t_batch, "Minibatch size");
  CLI::Option* o_lr = train_cmd->add_option("--lr", t_lr, "Adam learning rate");
  CLI::Option* o_loss =
      train_cmd->add_option("--loss", t_loss, "Training loss: crps or gnll");
  CLI::Option* o_holdout = train_cmd->add_option(
      "--holdout", t_holdout, "Holdout fraction for the per-epoch loss log");
  CLI::Option* o_components = train_cmd->add_option(
      "--components", t_components, "Mixture component count");
  CLI::Option* o_hidden = train_cmd->add_option(
      "--hidden", t_hidden, "Hidden layer sizes, comma separated");
  CLI::Option* o_emb_dim = train_cmd->add_option(
      "--embedding-dim", t_emb_dim, "Per-device embedding dimension");
  CLI::Option* o_no_emb = train_cmd->add_flag(
      "--no-embeddings", t_no_emb, "Train without per-device embeddings");
  CLI::Option* o_floor = train_cmd->add_option(
      "--sigma-floor", t_floor, "Additive mixture width floor");
  train_cmd->callback([&]() {
    CliDefaults d = load_defaults(config_path);
    NetworkConfig net;
    net.mixture_components =
        resolve(o_components, t_components, d.train, "mixture_components");
    net.hidden_sizes = net_defaults.hidden_sizes;
    if (o_hidden->count() > 0) {
      net.hidden_sizes = parse_int_list(t_hidden, "--hidden");
    } else if (d.train.contains("hidden_sizes")) {
      net.hidden_sizes = d.train.at("hidden_sizes").get<std::vector<int>>();
    }
    net.embedding_dim = resolve(o_emb_dim, t_emb_dim, d.train, "embedding_dim");
    net.use_embeddings = !t_no_emb;
    if (o_no_emb->count() == 0 && d.train.contains("use_embeddings")) {
      net.use_embeddings = d.train.at("use_embeddings").get<bool>();
    }
    net.sigma_floor = resolve(o_floor, t_floor, d.train, "sigma_floor");

    TrainConfig tc;
    tc.loss = loss_from_string(resolve(o_loss, t_loss, d.train, "loss"));
    tc.epochs = resolve(o_epochs, t_epochs, d.train, "epochs");
    tc.batch_size = resolve(o_batch, t_batch, d.train, "batch_size");
    tc.learning_rate = resolve(o_lr, t_lr, d.train, "learning_rate");
    tc.holdout_fraction =
        resolve(o_holdout, t_holdout, d.train, "holdout_fraction");
    tc.seed = resolve_seed(seed_opt, seed_flag, d);

    LoadedMeasurements lm = load_measurements(train_data);
    ModelFile mf;
    mf.model = train(net, tc, lm.dataset);
    if (net.use_embeddings && mf.model.embeddings.device_count >= 2) {
      mf.embedding_gaussian = fit_gaussian(mf.model.embeddings);
    }
    save_model(mf, train_out);

    std::string log_path =
        train_log_path.empty() ? train_out + ".log.csv" : train_log_path;
    std::ofstream log = open_out(log_path);
    log << "epoch,train_loss,holdout_loss\n";
    for (const EpochLog& entry : mf.model.log) {
      log << entry.epoch << ',' << format_double(entry.train_loss) << ','
          << format_double(entry.holdout_loss) << '\n';
    }
    finish_out(log, log_path);

    std::cout << "wrote " << train_out << " and " << log_path << "\n";
    if (!mf.model.log.empty()) {
      const EpochLog& last = mf.model.log.back();
      std::cout << "final train loss " << format_double(last.train_loss)
                << ", holdout loss " << format_double(last.holdout_loss)
                << "\n";
    }
  });

  // eval -------------------------------------------------------------------
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Evaluate a model on a measurement CSV (R^2 and mean CRPS)");
  eval_cmd->fallthrough();
  std::string eval_model;
  eval_cmd->add_option("model", eval_model, "Model JSON")->required();
  std::string eval_data;
  eval_cmd->add_option("data", eval_data, "Measurement CSV")->required();
  std::string eval_out = "metrics.csv";
  eval_cmd->add_option("-o,--output", eval_out, "Metrics CSV path");
  eval_cmd->callback([&]() {
    ModelFile mf = load_model(eval_model);
    LoadedMeasurements lm = load_measurements(eval_data);
    double r2 = r_squared(mf.model, lm.dataset);
    double crps = evaluate_crps(mf.model, lm.dataset);
    std::cout << "r2=" << format_double(r2) << " crps=" << format_double(crps)
              << "\n";
    std::ofstream out = open_out(eval_out);
    out << "r2,crps\n" << format_double(r2) << ',' << format_double(crps)
        << '\n';
    finish_out(out, eval_out);
  });

  // quantiles --------------------------------------------------------------
  CLI::App* quant = app.add_subcommand(
      "quantiles", "5/50/95 percent current quantile traces for one device");
  quant->fallthrough();
  std::string q_model;
  quant->add_option("model", q_model, "Model JSON")->required();
  std::string q_out = "quantiles.csv";
  quant->add_option("-o,--output", q_out, "Output CSV path");
  int q_device = 0;
  quant->add_option("--device", q_device, "Dense device index");
  double q_vmin = 0.0;
  double q_vmax = 1.8;
  int q_points = 61;
  quant->add_option("--vmin", q_vmin, "Grid start in volts");
  quant->add_option("--vmax", q_vmax, "Grid end in volts");
  quant->add_option("--points", q_points, "Grid point count");
  quant->callback([&]() {
    ModelFile mf = load_model(q_model);
    std::vector<double> grid = linspace(q_vmin, q_vmax, q_points);
    std::vector<double> emb = device_embedding(mf, q_device);
    std::vector<double> lo = quantile_trace(mf.model, emb, grid, 0.05);
    std::vector<double> mid = quantile_trace(mf.model, emb, grid, 0.5);
    std::vector<double> hi = quantile_trace(mf.model, emb, grid, 0.95);
    std::ofstream out = open_out(q_out);
    out << "v_gate,i_q05,i_q50,i_q95\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out << format_double(grid[i]) << ',' << format_double(lo[i]) << ','
          << format_double(mid[i]) << ',' << format_double(hi[i]) << '\n';
    }
    finish_out(out, q_out);
    std::cout << "wrote " << q_out << "\n";
  });

  // devices ----------------------------------------------------------------
  CLI::App* dev = app.add_subcommand(
      "devices",
      "Median traces for synthetic devices sampled from the stored "
      "embedding distribution");
  dev->fallthrough();
  std::string dev_model;
  dev->add_option("model", dev_model, "Model JSON")->required();
  std::string dev_out = "devices.csv";
  dev->add_option("-o,--output", dev_out, "Output CSV path");
  int dev_random = 5;
  dev->add_option("--random", dev_random, "Number of random synthetic devices");
  bool dev_structured = false;
  dev->add_flag("--structured", dev_structured,
                "Also emit the mean and +/-2 sd devices along each principal "
                "axis before the random ones");
  double dev_vmin = 0.0;
  double dev_vmax = 1.8;
  int dev_points = 61;
  dev->add_option("--vmin", dev_vmin, "Grid start in volts");
  dev->add_option("--vmax", dev_vmax, "Grid end in volts");
  dev->add_option("--points", dev_points, "Grid point count");
  dev->callback([&]() {
    CliDefaults d = load_defaults(config_path);
    ModelFile mf = load_model(dev_model);
    const EmbeddingGaussian& g = require_gaussian(mf);
    Rng rng(resolve_seed(seed_opt, seed_flag, d));
    std::vector<SyntheticDevice> synth_devices;
    if (dev_structured) {
      synth_devices = structured_embeddings(g, dev_random, rng);
    } else {
      if (dev_random < 0) throw config_error("--random must be >= 0");
      synth_devices.reserve(static_cast<std::size_t>(dev_random));
      for (int j = 0; j < dev_random; ++j) {
        synth_devices.push_back(
            {"random_" + std::to_string(j + 1), sample_embedding(g, rng)});
      }
    }
    std::vector<double> grid = linspace(dev_vmin, dev_vmax, dev_points);
    std::ofstream out = open_out(dev_out);
    out << "label,v_gate,i_drain\n";
    for (const SyntheticDevice& sd : synth_devices) {
      std::vector<double> trace =
          quantile_trace(mf.model, sd.embedding, grid, 0.5);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        out << sd.label << ',' << format_double(grid[i]) << ','
            << format_double(trace[i]) << '\n';
      }
    }
    finish_out(out, dev_out);
    std::cout << "wrote " << dev_out << " (" << synth_devices.size()
              << " devices)\n";
  });

  // sweep ------------------------------------------------------------------
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Simulate a quantile-coherent sweep over a waveform CSV");
  sweep->fallthrough();
  std::string sweep_model;
  sweep->add_option("model", sweep_model, "Model JSON")->required();
  std::string sweep_wave;
  sweep->add_option("waveform", sweep_wave, "Waveform CSV (time,v_gate)")
      ->required();
  std::string sweep_out = "sweep.csv";
  sweep->add_option("-o,--output", sweep_out, "Output CSV path");
  int sweep_device = 0;
  sweep->add_option("--device", sweep_device, "Dense device index");
  sweep->callback([&]() {
    CliDefaults d = load_defaults(config_path);
    ModelFile mf = load_model(sweep_model);
    Waveform w = load_waveform(sweep_wave);
    std::vector<double> emb = device_embedding(mf, sweep_device);
    Rng rng(resolve_seed(seed_opt, seed_flag, d));
    SweepTrace trace = simulate_sweep(mf.model, emb, w, rng);
    std::ofstream out = open_out(sweep_out);
    out << "time,v_gate,i_drain,q_used\n";
    for (const TracePoint& p : trace.points) {
      out << format_double(p.time) << ',' << format_double(p.v_gate) << ','
          << format_double(p.i_drain) << ',' << format_double(p.q_used)
          << '\n';
    }
    finish_out(out, sweep_out);
    std::cout << "wrote " << sweep_out << " (" << trace.points.size()
              << " samples)\n";
  });

  // pdf --------------------------------------------------------------------
  CLI::App* pdf = app.add_subcommand(
      "pdf",
      "Average predicted current density over sampled synthetic devices, one "
      "CSV per gate voltage");
  pdf->fallthrough();
  std::string pdf_model;
  pdf->add_option("model", pdf_model, "Model JSON")->required();
  std::string pdf_vg;
  pdf->add_option("--vg", pdf_vg, "Gate voltages, comma separated")->required();
  int pdf_n = 500;
  pdf->add_option("--n", pdf_n, "Synthetic devices to average over");
  int pdf_points = 400;
  pdf->add_option("--points", pdf_points, "Current-grid point count");
  std::string pdf_prefix = "pdf";
  pdf->add_option("-o,--output-prefix", pdf_prefix,
                  "Output prefix; files are <prefix>_vg<V>.csv");
  pdf->callback([&]() {
    CliDefaults d = load_defaults(config_path);
    ModelFile mf = load_model(pdf_model);
    const EmbeddingGaussian& g = require_gaussian(mf);
    if (pdf_n < 1) throw config_error("--n must be >= 1");
    Rng rng(resolve_seed(seed_opt, seed_flag, d));
    std::vector<std::vector<double>> embeddings;
    embeddings.reserve(static_cast<std::size_t>(pdf_n));
    for (int i = 0; i < pdf_n; ++i) {
      embeddings.push_back(sample_embedding(g, rng));
    }
    // The training currents span [0, i_scale]; the grid adds headroom so a
    // distribution shifted slightly past the observed maximum stays visible.
    std::vector<double> grid =
        linspace(0.0, 1.15 * mf.model.scaling.i_scale, pdf_points);
    for (const std::string& token : split_on_comma(pdf_vg)) {
      double vg = parse_double_token(token, "--vg");
      std::vector<double> density =
          predicted_pdf_average(mf.model, embeddings, vg, grid);
      std::string path = pdf_prefix + "_vg" + token + ".csv";
      std::ofstream out = open_out(path);
      out << "x,density\n";
      for (std::size_t i = 0; i < grid.size(); ++i) {
        out << format_double(grid[i]) << ',' << format_double(density[i])
            << '\n';
      }
      finish_out(out, path);
      std::cout << "wrote " << path << "\n";
    }
  });

  // pca --------------------------------------------------------------------
  CLI::App* pca_cmd = app.add_subcommand(
      "pca", "Project learned device embeddings onto their top principal axes");
  pca_cmd->fallthrough();
  std::string pca_model;
  pca_cmd->add_option("model", pca_model, "Model JSON")->required();
  std::string pca_out = "pca.csv";
  pca_cmd->add_option("-o,--output", pca_out, "Output CSV path");
  pca_cmd->callback([&]() {
    ModelFile mf = load_model(pca_model);
    const EmbeddingTable& table = mf.model.embeddings;
    if (!mf.model.network.use_embeddings || table.device_count == 0) {
      throw config_error("model has no embedding table");
    }
    int n_components = std::min(2, table.dim);
    PcaModel pm = pca_fit(table, n_components);
    std::ofstream out = open_out(pca_out);
    out << (n_components == 2 ? "device_id,pc1,pc2" : "device_id,pc1") << '\n';
    for (int id = 0; id < table.device_count; ++id) {
      std::vector<double> proj = pca_project(pm, table.row(id));
      out << id;
      for (double x : proj) out << ',' << format_double(x);
      out << '\n';
    }
    finish_out(out, pca_out);
    std::cout << "wrote " << pca_out << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace stochfet
