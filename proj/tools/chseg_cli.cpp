// Command-line front-end: scene simulation, feature extraction, training,
// and evaluation over multichannel WAV + RTTM corpora.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "chseg/chseg.hpp"
#include "chseg/io/checkpoint.hpp"
#include "chseg/io/config.hpp"
#include "chseg/io/feature_file.hpp"
#include "chseg/io/rttm.hpp"
#include "chseg/io/scenario_json.hpp"
#include "chseg/io/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

chseg::Task parse_task(const std::string& name) {
  if (name == "vad") return chseg::Task::vad;
  if (name == "osd") return chseg::Task::osd;
  if (name == "scd") return chseg::Task::scd;
  throw CLI::ValidationError("--task", "must be vad, osd, or scd");
}

chseg::ArrayGeometry geometry_from_manifest_or(const fs::path& dir, int mics, double radius,
                                               double speed) {
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    json j;
    in >> j;
    if (j.contains("geometry")) {
      const auto& g = j["geometry"];
      return chseg::uniform_circular_array(g.value("mic_count", mics),
                                           g.value("radius", radius),
                                           g.value("speed_of_sound", speed));
    }
  }
  return chseg::uniform_circular_array(mics, radius, speed);
}

chseg::MultichannelWaveform load_wave(const std::string& path,
                                      const chseg::ArrayGeometry& geometry) {
  const chseg::io::WavData wav = chseg::io::read_wav(path);
  if (wav.sample_rate != chseg::kSampleRate)
    throw chseg::DataError(path + ": sample rate is " + std::to_string(wav.sample_rate) +
                           " Hz, need 16000 (no implicit resampling)");
  chseg::MultichannelWaveform wave;
  wave.samples = wav.samples;
  wave.sample_rate = wav.sample_rate;
  wave.geometry = geometry;
  if (wave.channels() != geometry.active_count())
    throw chseg::DataError(path + ": channel count " + std::to_string(wave.channels()) +
                           " does not match array geometry");
  return wave;
}

std::vector<chseg::SceneData> load_scenes(const fs::path& dir,
                                          const chseg::ArrayGeometry& geometry) {
  std::vector<chseg::SceneData> scenes;
  std::vector<fs::path> wavs;
  if (!fs::is_directory(dir)) throw chseg::DataError("not a directory: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".wav") wavs.push_back(e.path());
  std::sort(wavs.begin(), wavs.end());
  for (const auto& wav : wavs) {
    fs::path rttm = wav;
    rttm.replace_extension(".rttm");
    if (!fs::exists(rttm))
      throw chseg::DataError("missing annotation file: " + rttm.string());
    chseg::SceneData scene;
    scene.wave = load_wave(wav.string(), geometry);
    scene.annotations = chseg::io::read_rttm(rttm.string(), scene.wave.duration());
    scene.id = wav.stem().string();
    scenes.push_back(std::move(scene));
  }
  if (scenes.empty()) throw chseg::DataError("no .wav files in " + dir.string());
  return scenes;
}

int run_simulate(const std::string& spec_path, const std::string& out_dir,
                 const std::string& name, bool pcm16) {
  const chseg::ScenarioSpec spec = chseg::io::read_scenario(spec_path);
  auto [wave, annotations] = chseg::gen_scenario(spec);
  const std::string stem = name.empty() ? fs::path(spec_path).stem().string() : name;
  annotations.recording_id = stem;

  fs::create_directories(out_dir);
  const fs::path wav_path = fs::path(out_dir) / (stem + ".wav");
  const fs::path rttm_path = fs::path(out_dir) / (stem + ".rttm");
  chseg::io::write_wav(wav_path.string(), wave.samples, wave.sample_rate,
                       pcm16 ? chseg::io::WavEncoding::pcm16 : chseg::io::WavEncoding::float32);
  chseg::io::write_rttm(rttm_path.string(), annotations);

  // Manifest: array geometry plus the scene list, merged across invocations.
  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  json manifest;
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    in >> manifest;
  }
  manifest["geometry"] = {{"mic_count", spec.geometry.mic_count},
                          {"radius", spec.geometry.radius},
                          {"speed_of_sound", spec.geometry.speed_of_sound}};
  json entry = {{"name", stem},
                {"wav", wav_path.filename().string()},
                {"rttm", rttm_path.filename().string()},
                {"duration", spec.duration},
                {"seed", spec.seed}};
  auto& list = manifest["scenes"];
  bool replaced = false;
  for (auto& e : list)
    if (e.value("name", "") == stem) { e = entry; replaced = true; }
  if (!replaced) list.push_back(entry);
  std::ofstream(manifest_path) << manifest.dump(2) << "\n";

  std::cout << "wrote " << wav_path.string() << " (" << wave.channels() << " ch, "
            << wave.duration() << " s) and " << rttm_path.string() << "\n";
  return 0;
}

int run_extract(const std::string& wav_path, const std::string& recipe_str,
                const std::string& out_path, const std::string& drop_channels, int mics,
                double radius, double speed) {
  const auto recipe = chseg::parse_recipe(recipe_str);
  const chseg::ArrayGeometry geometry =
      geometry_from_manifest_or(fs::path(wav_path).parent_path(), mics, radius, speed);
  chseg::MultichannelWaveform wave = load_wave(wav_path, geometry);

  if (!drop_channels.empty()) {
    std::vector<bool> drop(geometry.mic_count, false);
    std::stringstream ss(drop_channels);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const int mic = std::stoi(item);  // 1-based physical index
      if (mic < 1 || mic > geometry.mic_count)
        throw chseg::DataError("--drop-channels: microphone index out of range: " + item);
      drop[mic - 1] = true;
    }
    std::vector<int> keep;
    for (int m = 0; m < geometry.mic_count; ++m)
      if (!drop[m]) keep.push_back(m);
    bool needs_ch = false;
    for (auto k : recipe) needs_ch = needs_ch || k == chseg::FeatureKind::ch_doa;
    wave = chseg::deactivate_channels(wave, keep, needs_ch);
  }

  const chseg::FeatureSequence features = chseg::extract_features(wave, recipe);
  chseg::io::write_features(out_path, features.values);
  std::cout << "wrote " << out_path << " (F=" << features.dim() << ", T=" << features.frames()
            << ")\n";
  return 0;
}

int run_train(const std::string& task_str, const std::string& config_path) {
  const chseg::Task task = parse_task(task_str);
  const auto cfg = chseg::io::KeyValueConfig::load(config_path);

  const fs::path train_dir = cfg.require_string("train_dir");
  const auto geometry = geometry_from_manifest_or(train_dir, static_cast<int>(cfg.get_int("mics", 8)),
                                                  cfg.get_double("radius", 0.1),
                                                  cfg.get_double("speed_of_sound", 343.0));
  const auto scenes = load_scenes(train_dir, geometry);
  std::vector<chseg::SceneData> dev_scenes;
  if (cfg.has("dev_dir")) dev_scenes = load_scenes(cfg.require_string("dev_dir"), geometry);

  const auto recipe = chseg::parse_recipe(cfg.get_string("recipe", "mfcc+ch_doa"));

  chseg::TrainOptions options;
  options.epochs = static_cast<int>(cfg.get_int("epochs", options.epochs));
  options.batch_size = static_cast<int>(cfg.get_int("batch_size", options.batch_size));
  options.crops_per_epoch = static_cast<int>(cfg.get_int("crops_per_epoch", options.crops_per_epoch));
  options.learning_rate = cfg.get_double("learning_rate", options.learning_rate);
  options.augment_prob = cfg.get_double("augment_prob", options.augment_prob);
  options.masking = cfg.get_bool("masking", options.masking);
  options.patience = static_cast<int>(cfg.get_int("patience", options.patience));
  options.seed = static_cast<uint64_t>(cfg.get_int("seed", 0));

  chseg::TCNConfig model;
  model.bottleneck_dim = static_cast<int>(cfg.get_int("bottleneck_dim", model.bottleneck_dim));
  model.hidden_dim = static_cast<int>(cfg.get_int("hidden_dim", model.hidden_dim));
  model.kernel_size = static_cast<int>(cfg.get_int("kernel_size", model.kernel_size));
  model.num_blocks = static_cast<int>(cfg.get_int("num_blocks", model.num_blocks));
  model.layers_per_block = static_cast<int>(cfg.get_int("layers_per_block", model.layers_per_block));

  const chseg::TrainResult result = chseg::train(scenes, dev_scenes, recipe, task, options, model);

  const std::string model_out = cfg.get_string("model_out", "model.ckpt");
  chseg::io::write_checkpoint(model_out,
                              chseg::io::make_checkpoint(result.config, result.weights, &result.norm));

  const std::string log_out = cfg.get_string("log_out", "");
  std::ostringstream log;
  log << "epoch\ttrain_loss\tdev_loss\n";
  for (const auto& e : result.log)
    log << e.epoch << "\t" << e.train_loss << "\t" << e.dev_loss << "\n";
  if (!log_out.empty()) std::ofstream(log_out) << log.str();
  std::cout << log.str();
  std::cout << "wrote " << model_out << " (" << result.weights.param_count() << " parameters)\n";
  return 0;
}

struct EvalScene {
  std::string id;
  chseg::VectorF scores;  // positive-class posterior or regression curve
  std::vector<int> ref_binary;
  const chseg::AnnotationSet* annotations = nullptr;
  int frames = 0;
};

std::vector<EvalScene> score_scenes(const std::vector<chseg::SceneData>& scenes,
                                    const chseg::TcnWeights<float>& weights,
                                    const chseg::TCNConfig& model, const chseg::MeanVarNorm& norm,
                                    const std::vector<chseg::FeatureKind>& recipe,
                                    chseg::Task task) {
  std::vector<EvalScene> out;
  for (const auto& scene : scenes) {
    chseg::FeatureSequence features = chseg::extract_features(scene.wave, recipe);
    norm.apply(features.values);
    const chseg::PredictionSequence pred =
        chseg::sliding_inference(weights, model, features);
    EvalScene es;
    es.id = scene.id;
    es.frames = features.frames();
    es.annotations = &scene.annotations;
    es.scores = task == chseg::Task::scd ? pred.values.row(0).transpose()
                                         : pred.values.row(1).transpose();
    const chseg::FrameTargets ref = task == chseg::Task::osd
                                        ? chseg::osd_targets(scene.annotations, es.frames)
                                        : chseg::vad_targets(scene.annotations, es.frames);
    es.ref_binary.resize(static_cast<size_t>(es.frames));
    for (int t = 0; t < es.frames; ++t)
      es.ref_binary[static_cast<size_t>(t)] = ref.values[t] >= 0.5f ? 1 : 0;
    out.push_back(std::move(es));
  }
  return out;
}

int run_evaluate(const std::string& task_str, const std::string& model_path,
                 const std::string& data_dir, const std::string& dev_dir,
                 const std::string& recipe_str, const std::string& report_prefix) {
  const chseg::Task task = parse_task(task_str);
  const auto recipe = chseg::parse_recipe(recipe_str);

  chseg::MeanVarNorm norm;
  const chseg::io::Checkpoint ckpt = chseg::io::read_checkpoint(model_path);
  const chseg::TcnWeights<float> weights = chseg::io::restore_weights(ckpt, &norm);
  if (chseg::recipe_dim(recipe) != ckpt.config.input_dim)
    throw chseg::DataError("feature recipe dim " + std::to_string(chseg::recipe_dim(recipe)) +
                           " does not match checkpoint input dim " +
                           std::to_string(ckpt.config.input_dim));
  if (norm.mean.size() == 0)
    throw chseg::DataError("checkpoint carries no normalization stats: " + model_path);

  const auto geometry = geometry_from_manifest_or(data_dir, 8, 0.1, 343.0);
  const auto scenes = load_scenes(data_dir, geometry);
  std::vector<chseg::SceneData> dev_scenes;
  if (!dev_dir.empty()) {
    dev_scenes = load_scenes(dev_dir, geometry_from_manifest_or(dev_dir, 8, 0.1, 343.0));
  } else {
    std::cerr << "warning: no --dev directory given; tuning threshold on the evaluation data\n";
  }
  const auto& tuning_scenes = dev_scenes.empty() ? scenes : dev_scenes;

  const auto eval_scored = score_scenes(scenes, weights, ckpt.config, norm, recipe, task);
  const auto dev_scored = score_scenes(tuning_scenes, weights, ckpt.config, norm, recipe, task);

  chseg::MetricsReport report;
  report.task = task;
  if (task == chseg::Task::scd) {
    std::vector<chseg::VectorF> curves;
    std::vector<const chseg::AnnotationSet*> refs;
    for (const auto& s : dev_scored) {
      curves.push_back(s.scores);
      refs.push_back(s.annotations);
    }
    const auto search = chseg::tune_scd_threshold(curves, refs);
    report.threshold = search.threshold;
    report.metric_names = {"purity", "coverage", "ser"};
    for (const auto& s : eval_scored) {
      const auto points = chseg::peak_pick(s.scores, search.threshold);
      const auto score = chseg::purity_coverage(points, *s.annotations, s.frames);
      report.file_ids.push_back(s.id);
      report.per_file["purity"].push_back(score.purity_pct);
      report.per_file["coverage"].push_back(score.coverage_pct);
      report.per_file["ser"].push_back(score.ser_pct);
    }
  } else {
    std::vector<chseg::VectorF> dev_scores;
    std::vector<std::vector<int>> dev_refs;
    for (const auto& s : dev_scored) {
      dev_scores.push_back(s.scores);
      dev_refs.push_back(s.ref_binary);
    }
    const auto search = chseg::tune_detection_threshold(dev_scores, dev_refs, task);
    if (search.degenerate)
      std::cerr << "warning: degenerate dev references; using threshold 0.5\n";
    report.threshold = search.threshold;
    report.metric_names = task == chseg::Task::vad
                              ? std::vector<std::string>{"fa", "miss", "f1"}
                              : std::vector<std::string>{"f1", "ap"};
    for (const auto& s : eval_scored) {
      std::vector<int> pred(static_cast<size_t>(s.frames));
      for (int t = 0; t < s.frames; ++t)
        pred[static_cast<size_t>(t)] = s.scores[t] >= search.threshold ? 1 : 0;
      const auto m = chseg::detection_metrics(pred, s.ref_binary);
      report.file_ids.push_back(s.id);
      if (task == chseg::Task::vad) {
        report.per_file["fa"].push_back(m.fa_pct);
        report.per_file["miss"].push_back(m.miss_pct);
        report.per_file["f1"].push_back(100.0 * m.f1);
      } else {
        report.per_file["f1"].push_back(100.0 * m.f1);
        std::vector<double> scores(s.scores.data(), s.scores.data() + s.scores.size());
        const bool has_pos =
            std::any_of(s.ref_binary.begin(), s.ref_binary.end(), [](int v) { return v != 0; });
        report.per_file["ap"].push_back(
            has_pos ? 100.0 * chseg::average_precision(scores, s.ref_binary) : 0.0);
      }
    }
  }

  // TSV: one line per file plus the aggregate with its CI half-width.
  std::ostringstream tsv;
  tsv << "file";
  for (const auto& m : report.metric_names) tsv << "\t" << m;
  tsv << "\n";
  for (size_t i = 0; i < report.file_ids.size(); ++i) {
    tsv << report.file_ids[i];
    for (const auto& m : report.metric_names) tsv << "\t" << report.per_file[m][i];
    tsv << "\n";
  }
  tsv << "AGGREGATE";
  for (const auto& m : report.metric_names)
    tsv << "\t" << report.aggregate(m) << "±" << report.ci95(m);
  tsv << "\n";
  std::cout << "threshold=" << report.threshold << "\n" << tsv.str();

  if (!report_prefix.empty()) {
    std::ofstream(report_prefix + ".tsv") << tsv.str();
    json j;
    j["task"] = task_str;
    j["threshold"] = report.threshold;
    j["files"] = report.file_ids;
    for (const auto& m : report.metric_names) {
      j["per_file"][m] = report.per_file[m];
      j["aggregate"][m] = report.aggregate(m);
      j["ci95"][m] = report.ci95(m);
    }
    std::ofstream(report_prefix + ".json") << j.dump(2) << "\n";
    std::cout << "wrote " << report_prefix << ".tsv and " << report_prefix << ".json\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chseg: multichannel speech segmentation toolkit"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, scene_name;
  bool pcm16 = false;
  auto* simulate = app.add_subcommand("simulate", "synthesize a scene from a scenario spec");
  simulate->add_option("--spec", spec_path, "scenario spec (JSON)")->required();
  simulate->add_option("--out", out_dir, "output directory")->required();
  simulate->add_option("--name", scene_name, "scene name (default: spec file stem)");
  simulate->add_flag("--pcm16", pcm16, "write 16-bit PCM instead of float32");

  std::string wav_path, recipe_str = "mfcc+ch_doa", feat_out, drop_channels;
  int mics = 8;
  double radius = 0.1, speed = 343.0;
  auto* extract = app.add_subcommand("extract", "extract features from a multichannel WAV");
  extract->add_option("--wav", wav_path, "input WAV (16 kHz)")->required();
  extract->add_option("--features", recipe_str, "feature recipe, e.g. mfcc+ch_doa");
  extract->add_option("--out", feat_out, "output feature file")->required();
  extract->add_option("--drop-channels", drop_channels,
                      "comma-separated 1-based microphone indices to deactivate");
  extract->add_option("--mics", mics, "microphone count when no manifest is present");
  extract->add_option("--radius", radius, "array radius in meters");
  extract->add_option("--speed-of-sound", speed, "speed of sound in m/s");

  std::string task_str, config_path;
  auto* train = app.add_subcommand("train", "train a segmentation model");
  train->add_option("--task", task_str, "vad|osd|scd")->required();
  train->add_option("--config", config_path, "key = value config file")->required();

  std::string model_path, data_dir, dev_dir, report_prefix, eval_task, eval_recipe = "mfcc+ch_doa";
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained model");
  evaluate->add_option("--task", eval_task, "vad|osd|scd")->required();
  evaluate->add_option("--model", model_path, "checkpoint file")->required();
  evaluate->add_option("--data", data_dir, "evaluation scene directory")->required();
  evaluate->add_option("--dev", dev_dir, "development scene directory for threshold tuning");
  evaluate->add_option("--features", eval_recipe, "feature recipe used at training time");
  evaluate->add_option("--report", report_prefix, "report path prefix (.tsv/.json)");

  try {
    app.parse(argc, argv);
    if (*simulate) return run_simulate(spec_path, out_dir, scene_name, pcm16);
    if (*extract) return run_extract(wav_path, recipe_str, feat_out, drop_channels, mics, radius, speed);
    if (*train) return run_train(task_str, config_path);
    if (*evaluate) return run_evaluate(eval_task, model_path, data_dir, dev_dir, eval_recipe, report_prefix);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  } catch (const chseg::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
