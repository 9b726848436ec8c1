#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "rte/dataset_store.hpp"
#include "rte/neural/train.hpp"

namespace rte::nn {

// Per-sample network input shape for the surrogate kind: the flat vector for
// the MLP, the three-channel framed image for the CNN.
Shape input_shape_for(NetworkKind kind, const FurnaceMesh& mesh);

template <class T>
std::vector<T> encode_sample(NetworkKind kind, std::span<const double> normalized_flat, const FurnaceMesh& mesh);

// Packs dataset rows [begin, end) with outputs sliced to `target`.
template <class T>
Samples<T> make_samples(const NormalizedDataset& ds, std::size_t begin, std::size_t end, NetworkKind kind,
                        IndexRange target);
template <class T>
Samples<T> make_samples(const NormalizedDataset& ds, std::span<const std::size_t> rows, NetworkKind kind,
                        IndexRange target);

struct TrainedModel {
    NetworkSpec spec;
    Network<float> net;
    // Free-form: training metadata, target, scalers, mesh, config hash.
    nlohmann::json metadata;
};

// "RTEMODEL" magic, u64 little-endian header length, JSON header (spec,
// metadata, parameter table with shapes, offsets and sha256), then one RTEN
// section per parameter tensor.
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

struct InferenceTiming {
    double mean_seconds = 0.0;
    double std_seconds = 0.0;
    std::size_t samples = 0;
};

// Sends every sample through the network one at a time.
InferenceTiming predict_timed(const Network<float>& net, const Samples<float>& set);

}  // namespace rte::nn
