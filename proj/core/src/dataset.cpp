#include "echorec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "echorec/acoustics.hpp"
#include "echorec/config_text.hpp"
#include "echorec/errors.hpp"
#include "echorec/mel.hpp"
#include "echorec/rng.hpp"
#include "echorec/sources.hpp"
#include "echorec/threading.hpp"

namespace echorec {

namespace fs = std::filesystem;

int DatasetManifest::num_classes(const std::string& task) const {
    auto it = class_maps.find(task);
    if (it == class_maps.end())
        raise(ErrorCode::InvalidConfig, "manifest has no class map for task: " + task);
    return static_cast<int>(it->second.size());
}

int DatasetManifest::label_of(const LabeledExample& ex, const std::string& task) const {
    auto it = class_maps.find(task);
    if (it == class_maps.end())
        raise(ErrorCode::InvalidConfig, "manifest has no class map for task: " + task);
    std::string value;
    if (task == "depth") {
        std::ostringstream os;
        os << ex.depth;
        value = os.str();
    } else if (task == "open_closed") {
        value = ex.state;
    } else if (task == "material") {
        value = ex.material;
    } else if (task == "source") {
        value = ex.source;
    } else {
        raise(ErrorCode::InvalidConfig, "unknown task: " + task);
    }
    const auto& labels = it->second;
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == value) return static_cast<int>(i);
    raise(ErrorCode::LabelOutOfRange, "value '" + value + "' not in class map for " + task);
}

std::string DatasetManifest::resolve(const std::string& rel) const {
    if (rel.empty() || rel == "-") return {};
    if (!dir.empty() && rel.front() != '/') return dir + "/" + rel;
    return rel;
}

namespace {

std::string join_strings(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

std::vector<std::string> split_string(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open for write: " + path);
    f << "manifest schema=" << manifest.schema << " seed=" << manifest.seed << " config_hash="
      << std::hex << manifest.config_hash << std::dec << "\n";
    for (const auto& [task, labels] : manifest.class_maps)
        f << "classmap task=" << task << " values=" << join_strings(labels, ',') << "\n";
    for (const auto& ex : manifest.examples) {
        f << "example id=" << ex.id << " feat=" << ex.feat_path << " image=" << ex.image_path
          << " wav=" << ex.wav_path << " state=" << ex.state << " depth=" << format_double(ex.depth)
          << " material=" << ex.material << " source=" << ex.source << " scene=" << ex.scene
          << " seed=" << ex.seed << " split=" << ex.split << " e_direct="
          << format_double(ex.e_direct) << " e_early=" << format_double(ex.e_early)
          << " e_late=" << format_double(ex.e_late) << "\n";
    }
    if (!f) raise(ErrorCode::IoError, "short write: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open: " + path);
    DatasetManifest m;
    m.dir = fs::path(path).parent_path().string();

    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        std::map<std::string, std::string> kv;
        std::string token;
        while (ls >> token) {
            const size_t eq = token.find('=');
            if (eq == std::string::npos)
                raise(ErrorCode::ParseError,
                      path + ":" + std::to_string(line_no) + ": expected key=value");
            kv[token.substr(0, eq)] = token.substr(eq + 1);
        }
        if (tag == "manifest") {
            m.schema = std::atoi(kv["schema"].c_str());
            if (m.schema != 1)
                raise(ErrorCode::UnsupportedVersion, path + ": unsupported manifest schema");
            m.seed = std::strtoull(kv["seed"].c_str(), nullptr, 10);
            m.config_hash = std::strtoull(kv["config_hash"].c_str(), nullptr, 16);
            have_header = true;
        } else if (tag == "classmap") {
            m.class_maps[kv["task"]] = split_string(kv["values"], ',');
        } else if (tag == "example") {
            LabeledExample ex;
            ex.id = std::atoi(kv["id"].c_str());
            ex.feat_path = kv["feat"];
            ex.image_path = kv.count("image") ? kv["image"] : "-";
            ex.wav_path = kv.count("wav") ? kv["wav"] : "-";
            ex.state = kv["state"];
            ex.depth = std::atof(kv["depth"].c_str());
            ex.material = kv["material"];
            ex.source = kv["source"];
            ex.scene = kv["scene"];
            ex.seed = std::strtoull(kv["seed"].c_str(), nullptr, 10);
            ex.split = kv["split"];
            ex.e_direct = kv.count("e_direct") ? std::atof(kv["e_direct"].c_str()) : -1.0;
            ex.e_early = kv.count("e_early") ? std::atof(kv["e_early"].c_str()) : -1.0;
            ex.e_late = kv.count("e_late") ? std::atof(kv["e_late"].c_str()) : -1.0;
            m.examples.push_back(std::move(ex));
        } else {
            raise(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": unknown record '" + tag + "'");
        }
    }
    if (!have_header) raise(ErrorCode::ParseError, path + ": missing manifest header");
    return m;
}

std::vector<std::string> SweepConfig::default_train_sources() {
    std::vector<std::string> out;
    for (double f : kBandCenters) out.push_back("tone" + std::to_string(static_cast<int>(f)));
    out.push_back("clap");
    out.push_back("pink");
    out.push_back("brownian");
    return out;
}

std::vector<std::string> SweepConfig::all_sources() const {
    std::vector<std::string> out = train_sources;
    out.insert(out.end(), test_sources.begin(), test_sources.end());
    return out;
}

void SweepConfig::validate() const {
    base_room.validate_for_simulation();
    if (base_room.panel_index(target_panel) < 0)
        raise(ErrorCode::InvalidConfig, "sweep target panel not found: " + target_panel);
    if (depths.size() < 1) raise(ErrorCode::InvalidConfig, "sweep needs at least one depth");
    if (materials.empty() || states.empty())
        raise(ErrorCode::InvalidConfig, "sweep needs materials and states");
    if (train_sources.empty())
        raise(ErrorCode::InvalidConfig, "sweep needs training sources");
    for (const auto& t : test_sources)
        for (const auto& s : train_sources)
            if (s == t)
                raise(ErrorCode::InvalidConfig, "held-out source also in training set: " + t);
    if (seeds_per_cell < 1) raise(ErrorCode::InvalidConfig, "seeds_per_cell must be >= 1");
    if (reflection_order < 1) raise(ErrorCode::InvalidConfig, "reflection order must be >= 1");
    for (const auto& m : materials)
        if (base_room.material_index(m) < 0)
            raise(ErrorCode::InvalidConfig, "sweep material not defined in scene: " + m);
}

uint64_t SweepConfig::content_hash() const {
    std::ostringstream os;
    os << scene_name << "|" << target_panel << "|" << base_room.dims.x << ","
       << base_room.dims.y << "," << base_room.dims.z << "|"
       << base_room.exterior_noise_level_db << "|" << base_room.speed_of_sound << "|";
    for (double d : depths) os << d << ",";
    os << "|" << join_strings(materials, ',') << "|" << join_strings(states, ',') << "|"
       << join_strings(train_sources, ',') << "|" << join_strings(test_sources, ',') << "|"
       << seeds_per_cell << "|" << reflection_order << "|" << rt60_tail;
    for (const auto& p : base_room.panels) {
        os << "|" << p.name << "," << p.wall << "," << p.u0 << "," << p.v0 << "," << p.u1 << ","
           << p.v1 << "," << base_room.materials[static_cast<size_t>(p.material)].name;
    }
    const std::string s = os.str();
    uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

SweepConfig load_sweep_config(const std::string& scene_path) {
    const Scene scene = load_scene(scene_path);
    const ConfigFile cfg = load_config_file(scene_path);

    SweepConfig sweep;
    sweep.base_room = scene.room;
    const ConfigSection& s = cfg.require("sweep");
    sweep.scene_name = s.get_string("name", fs::path(scene_path).stem().string());
    sweep.target_panel = s.get_string("target_panel");
    if (s.has("depths")) sweep.depths = s.get_doubles("depths");
    if (s.has("materials")) sweep.materials = s.get_words("materials");
    if (s.has("states")) sweep.states = s.get_words("states");
    sweep.train_sources =
        s.has("train_sources") ? s.get_words("train_sources") : SweepConfig::default_train_sources();
    if (s.has("test_sources")) sweep.test_sources = s.get_words("test_sources");
    sweep.seeds_per_cell = static_cast<int>(s.get_int("seeds_per_cell", 2));
    sweep.reflection_order = static_cast<int>(s.get_int("order", 3));
    sweep.rt60_tail = s.get_bool("rt60_tail", true);
    sweep.keep_wavs = s.get_bool("keep_wavs", false);
    sweep.source_height = s.get_double("source_height", 0.0);
    sweep.validate();
    return sweep;
}

namespace {

struct Cell {
    size_t index;
    double depth;
    std::string material;
    std::string state;
    std::string source;
    int rep;
};

struct CellOutput {
    bool ok = false;
    std::string error;
    LabeledExample example;
    std::vector<double> feat;
    std::vector<double> image;
    Waveform wav;
};

SourceReceiver place_source(const SweepConfig& cfg, const ShoeboxRoom& room, double depth) {
    const SurfacePanel& target = room.panels[static_cast<size_t>(room.panel_index(cfg.target_panel))];
    // panel center and inward normal
    Vec3 center{0, 0, 0};
    for (const auto& c : target.corners) center += c;
    center = center / 4.0;
    Vec3 inward{0, 0, 0};
    switch (target.wall) {
        case WallX0: inward = {1, 0, 0}; break;
        case WallX1: inward = {-1, 0, 0}; break;
        case WallY0: inward = {0, 1, 0}; break;
        case WallY1: inward = {0, -1, 0}; break;
        case WallZ0: inward = {0, 0, 1}; break;
        default: inward = {0, 0, -1}; break;
    }
    SourceReceiver sr;
    sr.source_pos = center + inward * depth;
    if (cfg.source_height > 0.0) sr.source_pos.z = cfg.source_height;
    sr.vertical_offset = 0.07;
    sr.receiver_pos = sr.source_pos + Vec3{0.0, 0.0, sr.vertical_offset};
    if (!room.inside(sr.source_pos, 1e-3) || !room.inside(sr.receiver_pos, 1e-3))
        raise(ErrorCode::InvalidConfig,
              "sweep depth " + std::to_string(depth) + " places the source outside the room");
    return sr;
}

/// First reflection off the target panel, via the order-1 image.
double target_reflection_delay(const SweepConfig& cfg, double depth) {
    const double d = std::sqrt(4.0 * depth * depth + 0.07 * 0.07);
    return d / cfg.base_room.speed_of_sound;
}

void check_depth_separability(const SweepConfig& cfg) {
    std::vector<double> depths = cfg.depths;
    std::sort(depths.begin(), depths.end());
    for (size_t i = 0; i + 1 < depths.size(); ++i) {
        const double dt = target_reflection_delay(cfg, depths[i + 1]) -
                          target_reflection_delay(cfg, depths[i]);
        const double required =
            0.95 * 2.0 * (depths[i + 1] - depths[i]) / cfg.base_room.speed_of_sound;
        if (dt < required)
            raise(ErrorCode::InvalidConfig,
                  "adjacent depth classes are not separable in echo delay: " +
                      std::to_string(dt * 1e3) + " ms between " + std::to_string(depths[i]) +
                      " and " + std::to_string(depths[i + 1]) + " m");
    }
}

std::string cell_file(const char* kind, size_t index, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s/ex%06zu.%s", kind, index, ext);
    return buf;
}

}  // namespace

std::vector<double> synth_image(const std::string& material, const std::string& state,
                                uint64_t seed) {
    double base = 0.0, stripe_freq = 0.0, stripe_amp = 0.06;
    if (material == "glass") {
        base = 0.30;
        stripe_freq = 0.9;
    } else if (material == "mirror") {
        base = 0.78;
        stripe_freq = 0.18;
    } else if (material == "other") {
        base = 0.55;
        stripe_freq = 0.45;
    } else {
        raise(ErrorCode::UnknownMaterial, "no image model for material: " + material);
    }
    const double state_shift = state == "open" ? -0.05 : 0.0;

    Rng rng(Rng::mix(seed, 0x1a93e));
    std::vector<double> img(kImageRows * kImageCols);
    for (size_t r = 0; r < kImageRows; ++r) {
        for (size_t c = 0; c < kImageCols; ++c) {
            const double stripes =
                stripe_amp * std::sin(stripe_freq * static_cast<double>(r) +
                                      0.5 * stripe_freq * static_cast<double>(c));
            const double noise = 0.03 * rng.gaussian();
            double v = base + state_shift + stripes + noise;
            img[r * kImageCols + c] = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

GenerationResult generate_dataset(const SweepConfig& cfg, const std::string& out_dir,
                                  uint64_t seed) {
    cfg.validate();
    if (cfg.depths.size() >= 2) check_depth_separability(cfg);

    fs::create_directories(fs::path(out_dir) / "features");
    fs::create_directories(fs::path(out_dir) / "images");
    if (cfg.keep_wavs) fs::create_directories(fs::path(out_dir) / "wavs");

    // fixed nested order: depth, material, state, source, rep
    std::vector<Cell> cells;
    const std::vector<std::string> sources = cfg.all_sources();
    size_t index = 0;
    for (double depth : cfg.depths)
        for (const auto& material : cfg.materials)
            for (const auto& state : cfg.states)
                for (const auto& source : sources)
                    for (int rep = 0; rep < cfg.seeds_per_cell; ++rep)
                        cells.push_back({index++, depth, material, state, source, rep});

    const StftConfig stft_cfg;
    const MelFilterbank fb = MelFilterbank::make(kMelRows, stft_cfg);
    const std::set<std::string> held_out(cfg.test_sources.begin(), cfg.test_sources.end());

    std::vector<CellOutput> outputs(cells.size());
    parallel_for(cells.size(), [&](size_t i) {
        const Cell& cell = cells[i];
        CellOutput& out = outputs[i];
        const uint64_t cell_seed = Rng::mix(Rng::mix(seed, 0xce11), cell.index + 1);
        try {
            ShoeboxRoom room = cfg.base_room;
            SurfacePanel& target =
                room.panels[static_cast<size_t>(room.panel_index(cfg.target_panel))];
            target.material = room.material_index(cell.material);
            if (target.material < 0)
                raise(ErrorCode::UnknownMaterial, "material not in scene: " + cell.material);
            target.state = cell.state == "open" ? PanelState::Open : PanelState::Closed;

            const SourceReceiver sr = place_source(cfg, room, cell.depth);
            const IrSynthesisResult synth =
                synthesize_ir(room, sr, cfg.reflection_order, cfg.rt60_tail, cell_seed);

            const PulseSpec pulse = PulseSpec::from_label(cell.source);
            const Waveform excitation = generate_source(pulse, Rng::mix(cell_seed, 2));
            const Waveform echo = render_echo(synth.ir, excitation, room, target.state,
                                              Rng::mix(cell_seed, 3));
            const Waveform recording = quantize16(echo);  // 16-bit capture chain

            const std::vector<Waveform> frames = frame_split(recording);
            if (frames.empty()) raise(ErrorCode::TooShort, "recording shorter than one frame");
            const Spectrogram spec = mel_spectrogram(frames[0], stft_cfg, fb);

            out.feat = spec.grid;
            out.image = synth_image(cell.material, cell.state, Rng::mix(cell_seed, 4));
            if (cfg.keep_wavs) out.wav = recording;

            LabeledExample& ex = out.example;
            ex.id = static_cast<int>(cell.index);
            ex.feat_path = cell_file("features", cell.index, "grid");
            ex.image_path = cell_file("images", cell.index, "grid");
            ex.wav_path = cfg.keep_wavs ? cell_file("wavs", cell.index, "wav") : "-";
            ex.state = cell.state;
            ex.depth = cell.depth;
            ex.material = cell.material;
            ex.source = cell.source;
            ex.scene = cfg.scene_name;
            ex.seed = cell_seed;
            ex.split = held_out.count(cell.source) ? "test" : "train";
            const auto energies = synth.ir.energy_by_kind();
            ex.e_direct = energies[0];
            ex.e_early = energies[1];
            ex.e_late = energies[2];
            out.ok = true;
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "cell " << cell.index << " depth=" << cell.depth << " material="
               << cell.material << " state=" << cell.state << " source=" << cell.source
               << " rep=" << cell.rep << ": " << e.what();
            out.error = os.str();
        }
    });

    GenerationResult result;
    result.manifest.seed = seed;
    result.manifest.config_hash = cfg.content_hash();
    result.manifest.dir = out_dir;

    // class maps in sweep order
    std::vector<std::string> depth_labels;
    for (double d : cfg.depths) {
        std::ostringstream os;
        os << d;
        depth_labels.push_back(os.str());
    }
    result.manifest.class_maps["depth"] = depth_labels;
    result.manifest.class_maps["material"] = cfg.materials;
    result.manifest.class_maps["open_closed"] = cfg.states;
    result.manifest.class_maps["source"] = sources;

    for (size_t i = 0; i < outputs.size(); ++i) {
        CellOutput& out = outputs[i];
        if (!out.ok) {
            result.failures.push_back(out.error);
            continue;
        }
        write_grid_file(result.manifest.resolve(out.example.feat_path), kMelRows, kMelCols,
                        out.feat);
        write_grid_file(result.manifest.resolve(out.example.image_path), kImageRows, kImageCols,
                        out.image);
        if (cfg.keep_wavs) write_wav(result.manifest.resolve(out.example.wav_path), out.wav);
        result.manifest.examples.push_back(out.example);
    }

    save_manifest((fs::path(out_dir) / "manifest.txt").string(), result.manifest);
    return result;
}

SplitResult split_dataset(const DatasetManifest& manifest, const SplitSpec& spec) {
    if (spec.held_out_sources.empty())
        raise(ErrorCode::InvalidConfig, "held-out source set must be non-empty");
    const std::set<std::string> held(spec.held_out_sources.begin(), spec.held_out_sources.end());

    SplitResult result;
    std::vector<size_t> seen;
    for (size_t i = 0; i < manifest.examples.size(); ++i) {
        if (held.count(manifest.examples[i].source)) result.test.push_back(i);
        else seen.push_back(i);
    }
    if (result.test.empty()) raise(ErrorCode::EmptyPartition, "no held-out examples");
    if (seen.empty()) raise(ErrorCode::EmptyPartition, "no training examples");

    Rng rng(Rng::mix(spec.seed, 0x591117));
    for (size_t i = seen.size(); i > 1; --i) {
        const size_t j = rng.next_u64() % i;
        std::swap(seen[i - 1], seen[j]);
    }
    const size_t n_val =
        static_cast<size_t>(std::floor(spec.held_out_fraction * static_cast<double>(seen.size())));
    result.val.assign(seen.begin(), seen.begin() + static_cast<long>(n_val));
    result.train.assign(seen.begin() + static_cast<long>(n_val), seen.end());
    if (result.train.empty()) raise(ErrorCode::EmptyPartition, "validation fraction ate the train set");
    std::sort(result.val.begin(), result.val.end());
    std::sort(result.train.begin(), result.train.end());
    return result;
}

std::vector<ReflectionRecord> export_reflection_labels(const DatasetManifest& manifest) {
    std::vector<ReflectionRecord> out;
    out.reserve(manifest.examples.size());
    for (const auto& ex : manifest.examples) {
        if (ex.e_direct < 0.0 || ex.e_early < 0.0 || ex.e_late < 0.0)
            raise(ErrorCode::MissingIR,
                  "example " + std::to_string(ex.id) + " lacks reflection energies");
        out.push_back({ex.id, ex.e_direct, ex.e_early, ex.e_late});
    }
    return out;
}

void write_reflection_labels(const std::string& path,
                             const std::vector<ReflectionRecord>& recs) {
    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open for write: " + path);
    for (const auto& r : recs)
        f << "reflection id=" << r.example_id << " direct=" << format_double(r.direct)
          << " early=" << format_double(r.early) << " late=" << format_double(r.late) << "\n";
    if (!f) raise(ErrorCode::IoError, "short write: " + path);
}

}  // namespace echorec
