#include "stochfet/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string_view>
#include <system_error>
#include <utility>

#include "json.hpp"

#include "stochfet/errors.hpp"

namespace stochfet {

namespace {

constexpr const char* kMeasurementHeader = "device_id,v_gate,i_drain";
constexpr const char* kWaveformHeader = "time,v_gate";
constexpr const char* kModelFormat = "stochfet-model";
constexpr int kModelVersion = 1;

std::string at_line(const std::string& path, int line) {
  return path + ":" + std::to_string(line) + ": ";
}

// Editors on other platforms leave a carriage return before the newline.
void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// The whole field must be consumed; partial parses hide corrupt rows.
bool parse_double_field(std::string_view field, double& out) {
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_id_field(std::string_view field, long long& out) {
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

void expect_header(std::ifstream& in, const std::string& path,
                   const char* expected) {
  std::string line;
  if (!std::getline(in, line)) {
    throw parse_error(at_line(path, 1) + "missing header, expected \"" +
                      expected + "\"");
  }
  strip_cr(line);
  if (line != expected) {
    throw parse_error(at_line(path, 1) + "bad header \"" + line +
                      "\", expected \"" + expected + "\"");
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw parse_error(msg);
}

nlohmann::json layer_to_json(const Layer& layer) {
  return nlohmann::json{{"inputs", layer.in},
                        {"outputs", layer.out},
                        {"weights", layer.w},
                        {"biases", layer.b}};
}

// Shape checks shared by save and load; a file we write must be a file we
// can read back.
void check_model(const ModelFile& file) {
  const NetworkConfig& cfg = file.model.network;
  cfg.validate();

  const Scaling& s = file.model.scaling;
  require(std::isfinite(s.v_mean) && std::isfinite(s.v_std) && s.v_std > 0.0 &&
              std::isfinite(s.i_scale) && s.i_scale > 0.0,
          "invalid scaling block");

  const std::vector<Layer>& layers = file.model.params.layers;
  require(layers.size() == cfg.hidden_sizes.size() + 1,
          "layer count does not match the hidden sizes");
  int expected_in = cfg.input_dim();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    require(layer.in == expected_in,
            "layer " + std::to_string(i) + " input width mismatch");
    int expected_out = i + 1 < layers.size()
                           ? cfg.hidden_sizes[i]
                           : cfg.output_dim();
    require(layer.out == expected_out,
            "layer " + std::to_string(i) + " output width mismatch");
    require(layer.w.size() ==
                static_cast<std::size_t>(layer.in) * layer.out,
            "layer " + std::to_string(i) + " weight count mismatch");
    require(layer.b.size() == static_cast<std::size_t>(layer.out),
            "layer " + std::to_string(i) + " bias count mismatch");
    for (double v : layer.w) require(std::isfinite(v), "non-finite weight");
    for (double v : layer.b) require(std::isfinite(v), "non-finite bias");
    expected_in = layer.out;
  }

  const EmbeddingTable& emb = file.model.embeddings;
  require(emb.device_count >= 0 && emb.dim >= 0, "negative embedding shape");
  require(emb.values.size() ==
              static_cast<std::size_t>(emb.device_count) * emb.dim,
          "embedding value count mismatch");
  if (cfg.use_embeddings && emb.device_count > 0) {
    require(emb.dim == cfg.embedding_dim,
            "embedding dim does not match the network config");
  }
  for (double v : emb.values) require(std::isfinite(v), "non-finite embedding");

  if (file.embedding_gaussian) {
    const EmbeddingGaussian& g = *file.embedding_gaussian;
    require(g.dim >= 1, "embedding gaussian dim must be >= 1");
    require(g.mean.size() == static_cast<std::size_t>(g.dim),
            "embedding gaussian mean size mismatch");
    require(g.covariance.size() == static_cast<std::size_t>(g.dim) * g.dim,
            "embedding gaussian covariance size mismatch");
    for (double v : g.mean) require(std::isfinite(v), "non-finite gaussian mean");
    for (double v : g.covariance) {
      require(std::isfinite(v), "non-finite gaussian covariance");
    }
  }
}

ModelFile model_from_json(const nlohmann::json& j) {
  require(j.at("format").get<std::string>() == kModelFormat,
          "unknown format field");
  require(j.at("version").get<int>() == kModelVersion,
          "unsupported model version " + j.at("version").dump());

  ModelFile file;
  const nlohmann::json& net = j.at("network");
  NetworkConfig& cfg = file.model.network;
  cfg.mixture_components = net.at("mixture_components").get<int>();
  cfg.hidden_sizes = net.at("hidden_sizes").get<std::vector<int>>();
  cfg.embedding_dim = net.at("embedding_dim").get<int>();
  cfg.use_embeddings = net.at("use_embeddings").get<bool>();
  cfg.sigma_floor = net.at("sigma_floor").get<double>();

  const nlohmann::json& sc = j.at("scaling");
  file.model.scaling.v_mean = sc.at("v_mean").get<double>();
  file.model.scaling.v_std = sc.at("v_std").get<double>();
  file.model.scaling.i_scale = sc.at("i_scale").get<double>();

  for (const nlohmann::json& jl : j.at("layers")) {
    Layer layer;
    layer.in = jl.at("inputs").get<int>();
    layer.out = jl.at("outputs").get<int>();
    layer.w = jl.at("weights").get<std::vector<double>>();
    layer.b = jl.at("biases").get<std::vector<double>>();
    file.model.params.layers.push_back(std::move(layer));
  }

  const nlohmann::json& emb = j.at("embeddings");
  file.model.embeddings.device_count = emb.at("device_count").get<int>();
  file.model.embeddings.dim = emb.at("dim").get<int>();
  file.model.embeddings.values = emb.at("values").get<std::vector<double>>();

  for (const nlohmann::json& je : j.at("training_log")) {
    EpochLog entry;
    entry.epoch = je.at("epoch").get<int>();
    entry.train_loss = je.at("train_loss").get<double>();
    const nlohmann::json& hl = je.at("holdout_loss");
    entry.holdout_loss =
        hl.is_null() ? std::nan("") : hl.get<double>();
    file.model.log.push_back(entry);
  }

  if (j.contains("embedding_gaussian") && !j["embedding_gaussian"].is_null()) {
    const nlohmann::json& jg = j["embedding_gaussian"];
    EmbeddingGaussian g;
    g.dim = jg.at("dim").get<int>();
    g.mean = jg.at("mean").get<std::vector<double>>();
    g.covariance = jg.at("covariance").get<std::vector<double>>();
    file.embedding_gaussian = std::move(g);
  }

  check_model(file);
  return file;
}

}  // namespace

LoadedMeasurements load_measurements(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  expect_header(in, path, kMeasurementHeader);

  struct RawRow {
    long long id;
    double v;
    double i;
  };
  std::vector<RawRow> rows;
  std::map<long long, int> dense;  // sorted, so dense ids ascend with file ids

  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    std::vector<std::string_view> fields = split_fields(line);
    if (fields.size() != 3) {
      throw parse_error(at_line(path, line_no) + "expected 3 fields, got " +
                        std::to_string(fields.size()));
    }
    RawRow row{};
    if (!parse_id_field(fields[0], row.id)) {
      throw parse_error(at_line(path, line_no) + "bad device id \"" +
                        std::string(fields[0]) + "\"");
    }
    if (!parse_double_field(fields[1], row.v) || !std::isfinite(row.v)) {
      throw parse_error(at_line(path, line_no) + "bad gate voltage \"" +
                        std::string(fields[1]) + "\"");
    }
    if (!parse_double_field(fields[2], row.i) || !std::isfinite(row.i)) {
      throw parse_error(at_line(path, line_no) + "bad drain current \"" +
                        std::string(fields[2]) + "\"");
    }
    if (row.i < 0.0) {
      throw parse_error(at_line(path, line_no) +
                        "negative drain current " + std::string(fields[2]));
    }
    dense.emplace(row.id, 0);
    rows.push_back(row);
  }
  if (rows.empty()) throw parse_error(path + ": no data rows");

  LoadedMeasurements out;
  out.device_ids.reserve(dense.size());
  for (auto& [id, index] : dense) {
    index = static_cast<int>(out.device_ids.size());
    out.device_ids.push_back(id);
  }
  out.dataset.device_count = static_cast<int>(out.device_ids.size());
  out.dataset.points.reserve(rows.size());
  for (const RawRow& row : rows) {
    out.dataset.points.push_back({dense.at(row.id), row.v, row.i});
  }
  out.dataset.validate();
  return out;
}

Waveform load_waveform(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  expect_header(in, path, kWaveformHeader);

  Waveform w;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    std::vector<std::string_view> fields = split_fields(line);
    if (fields.size() != 2) {
      throw parse_error(at_line(path, line_no) + "expected 2 fields, got " +
                        std::to_string(fields.size()));
    }
    WaveSample sample{};
    if (!parse_double_field(fields[0], sample.time)) {
      throw parse_error(at_line(path, line_no) + "bad time \"" +
                        std::string(fields[0]) + "\"");
    }
    if (!parse_double_field(fields[1], sample.v_gate)) {
      throw parse_error(at_line(path, line_no) + "bad gate voltage \"" +
                        std::string(fields[1]) + "\"");
    }
    w.samples.push_back(sample);
  }
  w.validate();
  return w;
}

void write_measurements_csv(const std::string& path, const Dataset& data,
                            const std::vector<long long>& device_ids) {
  data.validate();
  if (device_ids.size() != static_cast<std::size_t>(data.device_count)) {
    throw shape_error("device id map has " + std::to_string(device_ids.size()) +
                      " entries for " + std::to_string(data.device_count) +
                      " devices");
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << kMeasurementHeader << '\n';
  for (const DataPoint& p : data.points) {
    out << device_ids[p.device_id] << ',' << format_double(p.v_gate) << ','
        << format_double(p.i_drain) << '\n';
  }
  if (!out) throw io_error("write failed for " + path);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw domain_error("unformattable double");
  return std::string(buf, ptr);
}

void save_model(const ModelFile& file, const std::string& path) {
  check_model(file);

  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["network"] = {{"mixture_components", file.model.network.mixture_components},
                  {"hidden_sizes", file.model.network.hidden_sizes},
                  {"embedding_dim", file.model.network.embedding_dim},
                  {"use_embeddings", file.model.network.use_embeddings},
                  {"sigma_floor", file.model.network.sigma_floor}};
  j["scaling"] = {{"v_mean", file.model.scaling.v_mean},
                  {"v_std", file.model.scaling.v_std},
                  {"i_scale", file.model.scaling.i_scale}};
  j["layers"] = nlohmann::json::array();
  for (const Layer& layer : file.model.params.layers) {
    j["layers"].push_back(layer_to_json(layer));
  }
  j["embeddings"] = {{"device_count", file.model.embeddings.device_count},
                     {"dim", file.model.embeddings.dim},
                     {"values", file.model.embeddings.values}};
  j["training_log"] = nlohmann::json::array();
  for (const EpochLog& entry : file.model.log) {
    nlohmann::json je = {{"epoch", entry.epoch},
                         {"train_loss", entry.train_loss}};
    // A run without a holdout split logs NaN; JSON has no NaN literal.
    je["holdout_loss"] = std::isnan(entry.holdout_loss)
                             ? nlohmann::json()
                             : nlohmann::json(entry.holdout_loss);
    j["training_log"].push_back(std::move(je));
  }
  if (file.embedding_gaussian) {
    j["embedding_gaussian"] = {{"dim", file.embedding_gaussian->dim},
                               {"mean", file.embedding_gaussian->mean},
                               {"covariance", file.embedding_gaussian->covariance}};
  }

  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw io_error("write failed for " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what());
  } catch (const error& e) {
    throw parse_error(path + ": " + e.what());
  }
}

}  // namespace stochfet
