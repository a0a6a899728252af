// echorec: batch front end for the echo simulation / classification /
// mesh-enhancement pipeline.
//
// Exit codes: 0 success, 1 usage or parse failure, 2 partial data failure,
// 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "echorec/acoustics.hpp"
#include "echorec/actmax.hpp"
#include "echorec/baselines.hpp"
#include "echorec/checkpoint.hpp"
#include "echorec/dataset.hpp"
#include "echorec/errors.hpp"
#include "echorec/mel.hpp"
#include "echorec/mesh.hpp"
#include "echorec/mesh_enhance.hpp"
#include "echorec/metrics.hpp"
#include "echorec/room.hpp"
#include "echorec/sources.hpp"
#include "echorec/train.hpp"

namespace fs = std::filesystem;
using namespace echorec;

namespace {

bool g_error_records = false;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ZeroAbsorption:
        case ErrorCode::DivisionByZero:
        case ErrorCode::NonPositiveFrequency:
        case ErrorCode::Degenerate:
        case ErrorCode::PreconditionViolated:
            return 3;
        default:
            return 1;
    }
}

void report_error(const Error& e) {
    if (g_error_records)
        std::cerr << "error code=" << error_code_name(e.code()) << " msg=\"" << e.what()
                  << "\"\n";
    else
        std::cerr << "echorec: " << error_code_name(e.code()) << ": " << e.what() << "\n";
}

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open: " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
        const std::streamsize n = f.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!f) break;
    }
    return h;
}

Tensor load_grid_tensor(const std::string& path, size_t rows, size_t cols) {
    const GridFile g = read_grid_file(path);
    if (g.rows != rows || g.cols != cols)
        raise(ErrorCode::ShapeMismatch, path + ": unexpected grid shape");
    return grid_to_tensor(g.grid, g.rows, g.cols);
}

struct LoadedSplit {
    std::vector<TrainExample> examples;
    std::vector<int> labels;
    std::vector<int> ids;
};

LoadedSplit load_examples(const DatasetManifest& manifest, const std::vector<size_t>& idx,
                          const std::string& task, bool with_images) {
    LoadedSplit out;
    out.examples.reserve(idx.size());
    for (size_t i : idx) {
        const LabeledExample& ex = manifest.examples[i];
        TrainExample t;
        t.audio = load_grid_tensor(manifest.resolve(ex.feat_path), kMelRows, kMelCols);
        if (with_images) {
            if (ex.image_path == "-")
                raise(ErrorCode::MissingModality,
                      "example " + std::to_string(ex.id) + " has no image");
            t.image = load_grid_tensor(manifest.resolve(ex.image_path), kImageRows, kImageCols);
        }
        t.label = manifest.label_of(ex, task);
        out.labels.push_back(t.label);
        out.ids.push_back(ex.id);
        out.examples.push_back(std::move(t));
    }
    return out;
}

std::vector<size_t> indices_for_split(const DatasetManifest& manifest, const std::string& split,
                                      double val_fraction, uint64_t seed) {
    if (split == "val") {
        SplitSpec spec;
        spec.held_out_sources.clear();
        for (const auto& ex : manifest.examples)
            if (ex.split == "test") spec.held_out_sources.push_back(ex.source);
        std::sort(spec.held_out_sources.begin(), spec.held_out_sources.end());
        spec.held_out_sources.erase(
            std::unique(spec.held_out_sources.begin(), spec.held_out_sources.end()),
            spec.held_out_sources.end());
        spec.held_out_fraction = val_fraction;
        spec.seed = seed;
        return split_dataset(manifest, spec).val;
    }
    std::vector<size_t> out;
    for (size_t i = 0; i < manifest.examples.size(); ++i)
        if (manifest.examples[i].split == split) out.push_back(i);
    if (out.empty()) raise(ErrorCode::EmptyPartition, "no examples in split: " + split);
    return out;
}

ModelConfig model_config_from_flags(const std::string& model_flag, const std::string& merge_flag,
                                    int classes) {
    MergeKind merge = MergeKind::None;
    MergeSpec merge_spec;
    if (merge_flag == "none") merge = MergeKind::None;
    else if (merge_flag == "concat") merge = MergeKind::Concat;
    else if (merge_flag.rfind("mfb", 0) == 0) {
        merge = MergeKind::Mfb;
        const size_t p1 = merge_flag.find(':');
        if (p1 != std::string::npos) {
            const size_t p2 = merge_flag.find(':', p1 + 1);
            merge_spec.factor_k = std::stoi(merge_flag.substr(p1 + 1, p2 - p1 - 1));
            if (p2 != std::string::npos) merge_spec.output_dim = std::stoi(merge_flag.substr(p2 + 1));
        }
    } else {
        raise(ErrorCode::InvalidConfig, "unknown merge kind: " + merge_flag);
    }

    ModelConfig cfg;
    if (model_flag == "default") {
        cfg = merge == MergeKind::None ? ModelConfig::default_audio(classes)
                                       : ModelConfig::audio_visual(classes, merge, false);
    } else if (model_flag == "compact") {
        cfg = merge == MergeKind::None ? ModelConfig::compact_audio(classes)
                                       : ModelConfig::audio_visual(classes, merge, true);
    } else {
        cfg = ModelConfig::parse(model_flag);
        cfg.num_classes = classes;
    }
    if (merge == MergeKind::Mfb) {
        cfg.merge.factor_k = merge_spec.factor_k;
        cfg.merge.output_dim = merge_spec.output_dim;
    }
    return cfg;
}

int run_simulate(const std::string& scene, const std::string& out_dir, uint64_t seed) {
    const SweepConfig cfg = load_sweep_config(scene);
    const GenerationResult result = generate_dataset(cfg, out_dir, seed);
    const std::string manifest_path = (fs::path(out_dir) / "manifest.txt").string();
    std::cout << "examples=" << result.manifest.examples.size()
              << " failures=" << result.failures.size() << " manifest=" << manifest_path
              << " manifest_hash=" << std::hex << fnv1a_file(manifest_path) << std::dec << "\n";
    for (const auto& f : result.failures) std::cerr << "cell-failure " << f << "\n";
    return result.failures.empty() ? 0 : 2;
}

int run_train(const std::string& manifest_path, const std::string& task,
              const std::string& out_path, const std::string& model_flag,
              const std::string& merge_flag, TrainConfig tcfg) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    const bool with_images = merge_flag != "none";
    const std::vector<size_t> train_idx = indices_for_split(manifest, "train", 0.0, tcfg.seed);
    const LoadedSplit data = load_examples(manifest, train_idx, task, with_images);

    const ModelConfig mcfg =
        model_config_from_flags(model_flag, merge_flag, manifest.num_classes(task));
    TrainResult result = train(mcfg, data.examples, tcfg);
    result.checkpoint.metadata["task"] = task;
    result.checkpoint.metadata["manifest_hash"] = std::to_string(manifest.config_hash);
    std::string names;
    for (const auto& n : manifest.class_maps.at(task)) {
        if (!names.empty()) names += ",";
        names += n;
    }
    result.checkpoint.metadata["class_names"] = names;
    save_checkpoint(out_path, result.checkpoint);

    std::cout << "trained task=" << task << " examples=" << data.examples.size()
              << " epochs=" << tcfg.epochs << " final_train_loss="
              << (result.train_loss.empty() ? 0.0 : result.train_loss.back());
    if (!result.val_loss.empty()) std::cout << " final_val_loss=" << result.val_loss.back();
    std::cout << " checkpoint=" << out_path << "\n";
    return 0;
}

int run_eval(const std::string& manifest_path, const std::string& task,
             const std::string& checkpoint_path, const std::string& baseline,
             const std::string& split, const std::string& report_dir, double val_fraction,
             uint64_t seed) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    const int classes = manifest.num_classes(task);
    const std::vector<std::string>& names = manifest.class_maps.at(task);

    const bool use_model = !checkpoint_path.empty();
    std::optional<EchoModel> model;
    bool with_images = false;
    if (use_model) {
        const Checkpoint ckpt = load_checkpoint(checkpoint_path);
        model.emplace(model_from_checkpoint(ckpt));
        with_images = ckpt.config.merge.kind != MergeKind::None;
    }

    const std::vector<size_t> idx = indices_for_split(manifest, split, val_fraction, seed);
    const LoadedSplit data = load_examples(manifest, idx, task, with_images);

    std::vector<int> preds;
    preds.reserve(data.examples.size());
    if (use_model) {
        for (const auto& ex : data.examples) {
            const std::vector<double> p = model->forward(ex.audio, ex.image ? &*ex.image : nullptr);
            preds.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
        }
    } else if (baseline.rfind("knn", 0) == 0) {
        int k = 5;
        const size_t colon = baseline.find(':');
        if (colon != std::string::npos) k = std::stoi(baseline.substr(colon + 1));
        const std::vector<size_t> train_idx = indices_for_split(manifest, "train", 0.0, seed);
        const LoadedSplit train_data = load_examples(manifest, train_idx, task, false);
        std::vector<FlatExample> train_flat(train_data.examples.size());
        for (size_t i = 0; i < train_data.examples.size(); ++i)
            train_flat[i] = {train_data.examples[i].audio.data, train_data.examples[i].label};
        for (const auto& ex : data.examples)
            preds.push_back(knn_classify(train_flat, ex.audio.data, k));
    } else if (baseline == "svm") {
        const std::vector<size_t> train_idx = indices_for_split(manifest, "train", 0.0, seed);
        const LoadedSplit train_data = load_examples(manifest, train_idx, task, false);
        std::vector<FlatExample> train_flat(train_data.examples.size());
        for (size_t i = 0; i < train_data.examples.size(); ++i)
            train_flat[i] = {train_data.examples[i].audio.data, train_data.examples[i].label};
        SvmConfig scfg;
        scfg.seed = seed;
        const SvmModel svm = svm_train(train_flat, classes, scfg);
        if (!svm.converged) std::cerr << "warning: SVM did not converge\n";
        for (const auto& ex : data.examples) preds.push_back(svm.predict(ex.audio.data));
    } else {
        raise(ErrorCode::InvalidConfig, "need --checkpoint or --baseline knn[:k]|svm");
    }

    const Metrics metrics = evaluate_predictions(data.labels, preds, classes);
    const std::string predictor = use_model ? "model" : baseline;
    std::cout << metrics_table(metrics, names, "task=" + task + " split=" + split +
                                                  " predictor=" + predictor);

    if (!report_dir.empty()) {
        fs::create_directories(report_dir);
        const std::string stem = (fs::path(report_dir) / (task + "_" + split)).string();
        std::ofstream(stem + "_metrics.txt")
            << metrics_table(metrics, names, "task=" + task + " split=" + split);
        std::ofstream(stem + "_records.txt") << metrics_records(metrics, task, names);
        std::ofstream(stem + "_confusion.csv") << confusion_csv(metrics, names);
        std::ofstream pf(stem + "_predictions.txt");
        for (size_t i = 0; i < preds.size(); ++i)
            pf << "prediction id=" << data.ids[i] << " true=" << names[static_cast<size_t>(data.labels[i])]
               << " pred=" << names[static_cast<size_t>(preds[i])] << "\n";
    }
    return 0;
}

int run_infer(const std::string& wav_path, const std::string& image_path,
              const std::string& state_ckpt, const std::string& depth_ckpt,
              const std::string& material_ckpt) {
    if (state_ckpt.empty() && depth_ckpt.empty() && material_ckpt.empty())
        raise(ErrorCode::InvalidConfig, "infer needs at least one checkpoint");

    struct TaskModel {
        std::string task;
        Checkpoint ckpt;
        std::optional<EchoModel> model;
        std::vector<std::string> names;
    };
    std::vector<TaskModel> models;
    auto add = [&](const std::string& task, const std::string& path) {
        if (path.empty()) return;
        TaskModel tm;
        tm.task = task;
        tm.ckpt = load_checkpoint(path);
        tm.model.emplace(model_from_checkpoint(tm.ckpt));
        auto it = tm.ckpt.metadata.find("classes_" + task);
        if (it == tm.ckpt.metadata.end()) it = tm.ckpt.metadata.find("class_names");
        if (it != tm.ckpt.metadata.end()) {
            std::string cur;
            for (char c : it->second) {
                if (c == ',') {
                    tm.names.push_back(cur);
                    cur.clear();
                } else cur += c;
            }
            if (!cur.empty()) tm.names.push_back(cur);
        }
        models.push_back(std::move(tm));
    };
    add("state", state_ckpt);
    add("depth", depth_ckpt);
    add("material", material_ckpt);

    const Waveform recording = read_wav(wav_path);
    const std::vector<Waveform> frames = frame_split(recording);
    if (frames.empty()) raise(ErrorCode::TooShort, "recording shorter than one 1 s frame");

    const StftConfig cfg;
    const MelFilterbank fb = MelFilterbank::make(kMelRows, cfg);
    std::optional<Tensor> image;
    if (!image_path.empty())
        image = load_grid_tensor(image_path, kImageRows, kImageCols);

    for (size_t f = 0; f < frames.size(); ++f) {
        const Spectrogram spec = mel_spectrogram(frames[f], cfg, fb);
        const Tensor audio = grid_to_tensor(spec.grid, spec.rows, spec.cols);
        std::cout << "frame=" << f;
        for (auto& tm : models) {
            const bool needs_image = tm.ckpt.config.merge.kind != MergeKind::None;
            if (needs_image && !image)
                raise(ErrorCode::MissingModality, tm.task + " model needs --image");
            const std::vector<double> p =
                tm.model->forward(audio, needs_image ? &*image : nullptr);
            const size_t arg =
                static_cast<size_t>(std::max_element(p.begin(), p.end()) - p.begin());
            std::cout << " " << tm.task << "=";
            if (arg < tm.names.size()) std::cout << tm.names[arg];
            else std::cout << arg;
            std::cout << " p_" << tm.task << "=" << p[arg];
        }
        std::cout << "\n";
    }
    return 0;
}

int run_enhance(const std::string& obj_in, const std::string& cls_path,
                const std::string& obj_out, const EnhanceConfig& cfg) {
    ObjWarnings warnings;
    const TriMesh mesh = load_obj(obj_in, &warnings);
    for (const auto& w : warnings.messages) std::cerr << "warning: " << w << "\n";
    std::vector<EchoClassification> classifications;
    if (!cls_path.empty()) classifications = load_classifications(cls_path);

    EnhanceReport report;
    const TriMesh out = enhance(mesh, classifications, cfg, &report);
    save_obj(obj_out, out);
    std::cout << "enhanced filled=" << report.filled << " skipped_open=" << report.skipped_open
              << " skipped_material=" << report.skipped_material
              << " skipped_overlap=" << report.skipped_overlap
              << " skipped_no_match=" << report.skipped_no_match
              << " errors=" << report.errors.size() << " out=" << obj_out << "\n";
    for (const auto& e : report.errors) std::cerr << "enhance-error " << e << "\n";
    return report.errors.empty() ? 0 : 2;
}

int run_actmax(const std::string& ckpt_path, int cls, int iters, double step,
               const std::string& out_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    EchoModel model = model_from_checkpoint(ckpt);
    const ActMaxResult result = activation_maximization(model, cls, iters, step);
    write_grid_file(out_path, result.input.shape[0], result.input.shape[1], result.input.data);
    std::cout << "actmax class=" << cls << " steps=" << result.logit_trace.size() - 1
              << " logit=" << result.logit_trace.back() << " out=" << out_path << "\n";
    return 0;
}

int run_rt60(const std::string& scene_path, int band, const std::string& units) {
    const Scene scene = load_scene(scene_path);
    const UnitSystem us = units == "imperial" ? UnitSystem::Imperial : UnitSystem::Metric;
    const double a = total_absorption(scene.room, band, us);
    const double t = sabine_rt60(scene.room, band, us);
    const char* a_unit = us == UnitSystem::Imperial ? "sabins" : "metric sabins";
    std::printf("band %d (%.0f Hz): a = %.2f %s\n", band,
                kBandCenters[static_cast<size_t>(band)], a, a_unit);
    std::printf("T60 = %.2f s\n", t);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"echo simulation, classification, and mesh enhancement pipeline"};
    app.require_subcommand(1);
    app.add_flag("--error-records", g_error_records,
                 "emit machine-readable error records on stderr");

    uint64_t seed = 0;

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a labeled synthetic dataset");
    std::string sim_scene, sim_out;
    sim->add_option("--scene", sim_scene, "scene sweep config file")->required();
    sim->add_option("--out", sim_out, "output dataset directory")->required();
    sim->add_option("--seed", seed, "master seed");

    // train
    auto* tr = app.add_subcommand("train", "train a classifier on a generated dataset");
    std::string tr_manifest, tr_task, tr_out, tr_model = "compact", tr_merge = "none";
    TrainConfig tr_cfg;
    tr->add_option("--manifest", tr_manifest, "dataset manifest")->required();
    tr->add_option("--task", tr_task, "open_closed | depth | material")->required();
    tr->add_option("--out", tr_out, "output checkpoint path")->required();
    tr->add_option("--model", tr_model, "default | compact | explicit layer spec");
    tr->add_option("--merge", tr_merge, "none | concat | mfb[:k[:dim]]");
    tr->add_option("--epochs", tr_cfg.epochs, "training epochs");
    tr->add_option("--batch-size", tr_cfg.batch_size, "mini-batch size");
    tr->add_option("--lr", tr_cfg.lr, "ADAM learning rate");
    tr->add_option("--val-fraction", tr_cfg.val_fraction, "validation fraction");
    tr->add_option("--seed", seed, "training seed");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint or baseline");
    std::string ev_manifest, ev_task, ev_ckpt, ev_baseline, ev_split = "test", ev_report;
    double ev_val_fraction = 0.1;
    ev->add_option("--manifest", ev_manifest, "dataset manifest")->required();
    ev->add_option("--task", ev_task, "open_closed | depth | material")->required();
    ev->add_option("--checkpoint", ev_ckpt, "trained checkpoint");
    ev->add_option("--baseline", ev_baseline, "knn[:k] | svm");
    ev->add_option("--split", ev_split, "test | train | val");
    ev->add_option("--report", ev_report, "report output directory");
    ev->add_option("--val-fraction", ev_val_fraction, "validation fraction for --split val");
    ev->add_option("--seed", seed, "split seed");

    // infer
    auto* in = app.add_subcommand("infer", "classify a recording frame by frame");
    std::string in_wav, in_image, in_state, in_depth, in_material;
    in->add_option("--wav", in_wav, "input WAV (mono 44100 Hz 16-bit)")->required();
    in->add_option("--image", in_image, "companion image grid file");
    in->add_option("--state-ckpt", in_state, "open/closed checkpoint");
    in->add_option("--depth-ckpt", in_depth, "depth checkpoint");
    in->add_option("--material-ckpt", in_material, "material checkpoint");

    // enhance
    auto* en = app.add_subcommand("enhance", "repair planar discontinuities in an OBJ mesh");
    std::string en_obj, en_cls, en_out;
    EnhanceConfig en_cfg;
    en->add_option("--obj", en_obj, "input OBJ")->required();
    en->add_option("--classifications", en_cls, "classification records file");
    en->add_option("--out", en_out, "output OBJ")->required();
    en->add_option("--eps", en_cfg.overlap_epsilon, "overlap IoU guard");
    en->add_option("--depth-band", en_cfg.depth_band, "depth agreement half-width (m)");
    en->add_option("--simplify", en_cfg.simplify_geometry, "fill the convex hull only");
    en->add_option("--background-offset", en_cfg.background_offset, "background offset (m)");
    en->add_option("--min-component-faces", en_cfg.min_component_faces,
                   "drop components smaller than this");
    en->add_option("--planarity-tol", en_cfg.planarity_tol, "loop planarity tolerance (m)");

    // actmax
    auto* am = app.add_subcommand("actmax", "synthesize the input maximizing a class logit");
    std::string am_ckpt, am_out;
    int am_class = 0, am_iters = 200;
    double am_step = 0.05;
    am->add_option("--checkpoint", am_ckpt, "trained checkpoint")->required();
    am->add_option("--class-index", am_class, "target class index")->required();
    am->add_option("--iters", am_iters, "ascent iterations");
    am->add_option("--step", am_step, "initial step size");
    am->add_option("--out", am_out, "output grid file")->required();

    // rt60
    auto* rt = app.add_subcommand("rt60", "Sabine reverberation time of a scene");
    std::string rt_scene, rt_units = "metric";
    int rt_band = 2;
    rt->add_option("--scene", rt_scene, "scene file")->required();
    rt->add_option("--band", rt_band, "octave band index 0..8 (2 = 250 Hz)");
    rt->add_option("--units", rt_units, "metric | imperial");

    // analytics helpers
    auto* wl = app.add_subcommand("wavelength", "wavelength of a frequency");
    double wl_freq = 0.0, wl_speed = 343.0;
    wl->add_option("--freq", wl_freq, "frequency in Hz")->required();
    wl->add_option("--speed", wl_speed, "speed of sound");

    auto* dp = app.add_subcommand("doppler", "frequency shift for a moving source");
    DopplerParams dp_params;
    dp->add_option("--f0", dp_params.f0, "transmitted frequency (Hz)")->required();
    dp->add_option("--cs", dp_params.c_s, "source speed")->required();
    dp->add_option("--co", dp_params.c_o, "observer speed")->required();
    dp->add_option("--theta", dp_params.theta, "angle (radians)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_simulate(sim_scene, sim_out, seed);
        if (tr->parsed()) {
            tr_cfg.seed = seed;
            return run_train(tr_manifest, tr_task, tr_out, tr_model, tr_merge, tr_cfg);
        }
        if (ev->parsed())
            return run_eval(ev_manifest, ev_task, ev_ckpt, ev_baseline, ev_split, ev_report,
                            ev_val_fraction, seed);
        if (in->parsed()) return run_infer(in_wav, in_image, in_state, in_depth, in_material);
        if (en->parsed()) return run_enhance(en_obj, en_cls, en_out, en_cfg);
        if (am->parsed()) return run_actmax(am_ckpt, am_class, am_iters, am_step, am_out);
        if (rt->parsed()) return run_rt60(rt_scene, rt_band, rt_units);
        if (wl->parsed()) {
            std::printf("lambda = %.4f\n", wavelength(wl_freq, wl_speed));
            return 0;
        }
        if (dp->parsed()) {
            std::printf("delta_f = %.4f Hz\n", doppler_shift(dp_params));
            return 0;
        }
    } catch (const Error& e) {
        report_error(e);
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "echorec: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
