#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "echorec/room.hpp"

namespace echorec {

/// One generated example: file references, labels, and reflection energy
/// sums. Paths are relative to the manifest directory; "-" means absent.
struct LabeledExample {
    int id = 0;
    std::string feat_path;
    std::string image_path = "-";
    std::string wav_path = "-";
    std::string state;     // open | closed
    double depth = 0.0;    // meters
    std::string material;
    std::string source;    // source kind label
    std::string scene;
    uint64_t seed = 0;
    std::string split;     // train | test
    double e_direct = 0.0, e_early = 0.0, e_late = 0.0;
};

/// Line-delimited, schema-versioned example index.
struct DatasetManifest {
    int schema = 1;
    uint64_t config_hash = 0;
    uint64_t seed = 0;
    std::map<std::string, std::vector<std::string>> class_maps;  // task -> labels
    std::vector<LabeledExample> examples;
    std::string dir;  // directory of the manifest file (for resolving paths)

    int label_of(const LabeledExample& ex, const std::string& task) const;
    int num_classes(const std::string& task) const;
    std::string resolve(const std::string& rel) const;
};

void save_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);

/// Scene sweep: the Cartesian product of depths, target materials, states,
/// sources, and repetition seeds over one base room.
struct SweepConfig {
    ShoeboxRoom base_room;
    std::string scene_name = "scene";
    std::string target_panel;
    std::vector<double> depths{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    std::vector<std::string> materials{"glass", "mirror"};
    std::vector<std::string> states{"closed", "open"};
    std::vector<std::string> train_sources;
    std::vector<std::string> test_sources{"chirp", "white"};
    int seeds_per_cell = 2;
    int reflection_order = 3;
    bool rt60_tail = true;
    bool keep_wavs = false;
    double source_height = 0.0;  // 0 -> panel center height

    std::vector<std::string> all_sources() const;
    void validate() const;
    uint64_t content_hash() const;

    /// Nine pure tones, clap, pink, and brownian: the default training
    /// palette; chirp and white stay held out.
    static std::vector<std::string> default_train_sources();
};

SweepConfig load_sweep_config(const std::string& scene_path);

struct GenerationResult {
    DatasetManifest manifest;
    std::vector<std::string> failures;  // per-cell error records
};

/// Generates the sweep into out_dir (features/, images/, wavs/opt +
/// manifest.txt). Cells run in parallel; the manifest is written in
/// configuration order, so regeneration from the same (config, seed) is
/// byte-identical. Per-cell failures are recorded and generation continues.
GenerationResult generate_dataset(const SweepConfig& cfg, const std::string& out_dir,
                                  uint64_t seed);

/// Procedural stand-in for a camera frame: per-material base luminance and
/// stripe frequency plus seeded noise, 64 x 25, values in [0, 1].
std::vector<double> synth_image(const std::string& material, const std::string& state,
                                uint64_t seed);
constexpr size_t kImageRows = 64;
constexpr size_t kImageCols = 25;

struct SplitSpec {
    std::vector<std::string> held_out_sources{"chirp", "white"};
    double held_out_fraction = 0.1;  // validation carved from seen sources
    uint64_t seed = 0;
};

struct SplitResult {
    std::vector<size_t> train, val, test;  // indices into manifest.examples
};

/// Held-out-source examples go to test; the remainder splits train/val by a
/// seeded shuffle. Throws EmptyPartition when either side is empty.
SplitResult split_dataset(const DatasetManifest& manifest, const SplitSpec& spec);

struct ReflectionRecord {
    int example_id = 0;
    double direct = 0.0, early = 0.0, late = 0.0;
};

/// Direct/early/late band-energy sums per example. Requires manifests
/// generated with IR energy retention.
std::vector<ReflectionRecord> export_reflection_labels(const DatasetManifest& manifest);
void write_reflection_labels(const std::string& path, const std::vector<ReflectionRecord>& recs);

}  // namespace echorec
