#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stochfet/embedding_space.hpp"
#include "stochfet/sweep_sim.hpp"
#include "stochfet/trainer.hpp"

namespace stochfet {

// Measurement CSV with the original device ids preserved. Ids are densified
// to 0..n-1 in ascending order of the file id; device_ids maps the dense
// index back to the id that appeared in the file.
struct LoadedMeasurements {
  Dataset dataset;
  std::vector<long long> device_ids;
};

// Reads a measurement CSV. The header must be exactly
// "device_id,v_gate,i_drain"; rows need an integer id, a finite voltage and
// a finite nonnegative current. parse_error messages carry path:line.
LoadedMeasurements load_measurements(const std::string& path);

// Reads a waveform CSV with header "time,v_gate" and validates it (at least
// two samples, strictly increasing time).
Waveform load_waveform(const std::string& path);

// Writes a measurement CSV readable by load_measurements. device_ids maps
// dense ids to the ids to write; its length must equal device_count.
void write_measurements_csv(const std::string& path, const Dataset& data,
                            const std::vector<long long>& device_ids);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double x);

// A trained model plus the optional device distribution fit over its
// embedding rows (needed to sample synthetic devices from the file alone).
struct ModelFile {
  TrainedModel model;
  std::optional<EmbeddingGaussian> embedding_gaussian;
};

// Versioned JSON serialization. Doubles are written in shortest round-trip
// form, so load_model(save_model(m)) reproduces every parameter bit-exactly.
void save_model(const ModelFile& file, const std::string& path);

// parse_error on malformed JSON, unknown format/version, or any dimension
// inconsistency between the header fields and the stored arrays.
ModelFile load_model(const std::string& path);

}  // namespace stochfet
