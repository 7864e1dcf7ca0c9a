// Command line front end: simulate scenes, track them, train the matcher,
// score predictions against truth and sweep the ablation grid.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vps/association.hpp"
#include "vps/errors.hpp"
#include "vps/flow.hpp"
#include "vps/instance_tracker.hpp"
#include "vps/mask.hpp"
#include "vps/simulator.hpp"
#include "vps/vpq.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string indexed(int i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d%s", i, ext);
  return buf;
}

int count_indexed(const fs::path& dir, const char* ext) {
  if (!fs::is_directory(dir)) {
    throw vps::IoError("not a directory: " + dir.string());
  }
  int n = 0;
  while (fs::exists(dir / indexed(n, ext))) {
    ++n;
  }
  if (n == 0) {
    throw vps::IoError("no " + std::string(ext) + " files under " +
                       dir.string());
  }
  return n;
}

std::vector<vps::SegmentationMap> read_map_dir(const fs::path& dir) {
  int n = count_indexed(dir, ".vpsg");
  std::vector<vps::SegmentationMap> maps;
  maps.reserve(n);
  for (int i = 0; i < n; ++i) {
    maps.push_back(vps::read_segmap((dir / indexed(i, ".vpsg")).string()));
  }
  return maps;
}

std::vector<vps::FlowField> read_flow_dir(const fs::path& dir) {
  int n = count_indexed(dir, ".flo");
  std::vector<vps::FlowField> flows;
  flows.reserve(n);
  for (int i = 0; i < n; ++i) {
    flows.push_back(vps::read_flo((dir / indexed(i, ".flo")).string()));
  }
  return flows;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) {
    throw vps::IoError("cannot create directory: " + dir.string());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw vps::IoError("cannot open " + path.string() + " for writing");
  }
  f << text;
  f.flush();
  if (!f) {
    throw vps::IoError("write to " + path.string() + " failed");
  }
}

const char* source_name(vps::IdSource source) {
  switch (source) {
    case vps::IdSource::match:
      return "match";
    case vps::IdSource::rescue:
      return "rescue";
    case vps::IdSource::fresh:
      break;
  }
  return "new";
}

vps::TrackerMode parse_mode(const std::string& name) {
  if (name == "pixel") {
    return vps::TrackerMode::pixel;
  }
  if (name == "instance") {
    return vps::TrackerMode::instance;
  }
  return vps::TrackerMode::hybrid;
}

struct SimulateArgs {
  std::string preset_name;
  std::string out;
  std::uint64_t seed = 1;
  double flow_noise = 0.0;
  std::uint64_t noise_seed = 0;
  bool noise_seed_given = false;
};

void run_simulate(const SimulateArgs& a) {
  vps::SceneSpec spec = vps::preset(a.preset_name, a.seed);
  vps::SceneOutput scene = vps::generate(spec);
  std::uint64_t noise_seed = a.noise_seed_given ? a.noise_seed : a.seed;
  if (a.flow_noise > 0.0) {
    for (std::size_t f = 0; f < scene.flows.size(); ++f) {
      vps::add_flow_noise(scene.flows[f], a.flow_noise, noise_seed + f);
    }
  }

  fs::path out(a.out);
  ensure_dir(out / "frames");
  ensure_dir(out / "flows");
  ensure_dir(out / "gt");
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    vps::write_segmap(scene.frames[f],
                      (out / "frames" / indexed(f, ".vpsg")).string());
    vps::write_segmap(scene.gt_frames[f],
                      (out / "gt" / indexed(f, ".vpsg")).string());
  }
  for (std::size_t f = 0; f < scene.flows.size(); ++f) {
    vps::write_flo(scene.flows[f], (out / "flows" / indexed(f, ".flo")).string());
  }

  ordered_json ids = ordered_json::array();
  for (const auto& frame_map : scene.gt_ids) {
    ordered_json per_frame = ordered_json::array();
    for (auto [scrambled, persistent] : frame_map) {
      per_frame.push_back(ordered_json::array({scrambled, persistent}));
    }
    ids.push_back(std::move(per_frame));
  }
  ordered_json doc;
  doc["frames"] = std::move(ids);
  write_text(out / "gt_ids.json", doc.dump(2) + "\n");

  std::cout << "preset " << a.preset_name << ": wrote " << scene.frames.size()
            << " frames (" << spec.width << "x" << spec.height << ") to "
            << a.out << "\n";
}

struct TrackArgs {
  std::string in;
  std::string out;
  std::string mode = "hybrid";
  std::string head;
  double tau = 0.3;
  double theta = 0.01;
  int memory_window = 2;
  int roi_height = 32;
  int roi_width = 64;
  double w_instance = 0.5;
  double w_pixel = 0.5;
  double w_bias = 0.0;
  bool no_mutual = false;
  bool no_temporal = false;
  bool mutual_first = false;
  bool literal_row_order = false;
  bool cosine = false;
  bool center_anchor = false;
  bool no_class_gate = false;
};

ordered_json config_echo(const TrackArgs& a) {
  ordered_json cfg;
  cfg["mode"] = a.mode;
  cfg["tau"] = a.tau;
  cfg["theta"] = a.theta;
  cfg["mutual_check"] = !a.no_mutual;
  cfg["mutual_before_threshold"] = a.mutual_first;
  cfg["temporal_rescue"] = !a.no_temporal;
  cfg["memory_window"] = a.memory_window;
  cfg["roi_height"] = a.roi_height;
  cfg["roi_width"] = a.roi_width;
  cfg["class_gated"] = !a.no_class_gate;
  cfg["cosine"] = a.cosine;
  cfg["center_anchor"] = a.center_anchor;
  cfg["literal_row_order"] = a.literal_row_order;
  cfg["fusion"] = {{"instance", a.w_instance},
                   {"pixel", a.w_pixel},
                   {"bias", a.w_bias}};
  cfg["head"] = a.head;
  return cfg;
}

void run_track(const TrackArgs& a) {
  std::vector<vps::SegmentationMap> frames =
      read_map_dir(fs::path(a.in) / "frames");
  std::vector<vps::FlowField> flows = read_flow_dir(fs::path(a.in) / "flows");

  vps::TrackConfig cfg;
  cfg.mode = parse_mode(a.mode);
  cfg.tau_match = a.tau;
  cfg.theta = a.theta;
  cfg.use_mutual_check = !a.no_mutual;
  cfg.use_temporal = !a.no_temporal;
  cfg.mutual_before_threshold = a.mutual_first;
  cfg.memory_window = a.memory_window;
  cfg.fusion = {a.w_instance, a.w_pixel, a.w_bias};
  cfg.roi_height = a.roi_height;
  cfg.roi_width = a.roi_width;
  cfg.class_gated = !a.no_class_gate;
  cfg.cosine = a.cosine;
  cfg.center_anchor = a.center_anchor;
  cfg.literal_row_order = a.literal_row_order;

  vps::EmbeddingHeadParams head;
  if (cfg.mode != vps::TrackerMode::pixel) {
    if (a.head.empty()) {
      throw vps::Error("mode " + a.mode + " needs --head");
    }
    head = vps::read_head(a.head);
    cfg.head = &head;
  }

  vps::TrackedVideo video = vps::track_sequence(frames, flows, cfg);

  fs::path out(a.out);
  ensure_dir(out / "frames");
  for (std::size_t f = 0; f < video.frames.size(); ++f) {
    vps::write_segmap(video.frames[f],
                      (out / "frames" / indexed(f, ".vpsg")).string());
  }

  std::string provenance;
  std::size_t instances = 0;
  std::size_t matches = 0;
  std::size_t rescues = 0;
  std::size_t fresh = 0;
  std::set<std::uint16_t> tracks;
  for (std::size_t f = 0; f < video.records.size(); ++f) {
    for (const vps::InstanceRecord& rec : video.records[f]) {
      ordered_json line;
      line["frame"] = f;
      line["instance_id"] = rec.input_id.instance_id;
      line["class_id"] = rec.input_id.class_id;
      line["track_id"] = rec.track_id;
      line["source"] = source_name(rec.source);
      line["score"] = rec.score;
      provenance += line.dump() + "\n";
      ++instances;
      matches += rec.source == vps::IdSource::match ? 1 : 0;
      rescues += rec.source == vps::IdSource::rescue ? 1 : 0;
      fresh += rec.source == vps::IdSource::fresh ? 1 : 0;
      tracks.insert(rec.track_id);
    }
  }
  write_text(out / "provenance.jsonl", provenance);

  ordered_json report;
  report["config"] = config_echo(a);
  report["frames"] = video.frames.size();
  report["instances"] = instances;
  report["sources"] = {{"match", matches}, {"rescue", rescues}, {"new", fresh}};
  report["tracks"] = tracks.size();
  write_text(out / "report.json", report.dump(2) + "\n");

  std::cout << "tracked " << video.frames.size() << " frames: " << instances
            << " instances, " << matches << " matched, " << rescues
            << " rescued, " << fresh << " new\n";
}

struct EvaluateArgs {
  std::string pred;
  std::string gt;
  std::string out;
  std::vector<int> windows = {1, 2, 3, 4};
};

ordered_json report_json(const vps::VpqReport& report) {
  ordered_json doc;
  doc["windows"] = ordered_json::array();
  for (const vps::WindowScores& w : report.windows) {
    ordered_json row;
    row["window_length"] = w.window_length;
    row["k"] = 5 * (w.window_length - 1);
    row["vpq"] = w.vpq;
    row["vpq_things"] = w.vpq_things;
    row["vpq_stuff"] = w.vpq_stuff;
    doc["windows"].push_back(std::move(row));
  }
  doc["mean"] = {{"vpq", report.vpq},
                 {"vpq_things", report.vpq_things},
                 {"vpq_stuff", report.vpq_stuff}};
  return doc;
}

void run_evaluate(const EvaluateArgs& a) {
  std::vector<vps::SegmentationMap> pred = read_map_dir(a.pred);
  std::vector<vps::SegmentationMap> gt = read_map_dir(a.gt);
  vps::VpqReport report = vps::vpq_report(pred, gt, a.windows);
  std::cout << vps::format_report_table(report);
  if (!a.out.empty()) {
    write_text(a.out, report_json(report).dump(2) + "\n");
  }
}

struct TrainArgs {
  std::string out;
  std::uint64_t seed = 1;
  int scenes = 8;
  int holdout = 0;
  int objects = 3;
  int frames = 9;
  int roi_height = 32;
  int roi_width = 64;
  int d_hidden = 128;
  int d_embed = 32;
  int epochs = 300;
  int batch = 0;
  double lr = 0.01;
  std::string loss = "categorical";
};

void run_train(const TrainArgs& a) {
  std::vector<vps::TrainExample> dataset;
  std::vector<vps::TrainExample> holdout;
  for (int s = 0; s < a.scenes + a.holdout; ++s) {
    vps::SceneSpec spec =
        vps::distinct_shapes_spec(a.seed + s, a.objects, a.frames);
    std::vector<vps::TrainExample> examples = vps::matching_examples(
        vps::generate(spec), a.roi_height, a.roi_width);
    auto& sink = s < a.scenes ? dataset : holdout;
    sink.insert(sink.end(), std::make_move_iterator(examples.begin()),
                std::make_move_iterator(examples.end()));
  }

  vps::TrainConfig config;
  config.learning_rate = a.lr;
  config.epochs = a.epochs;
  config.batch_size = a.batch;
  config.seed = a.seed;
  config.loss = a.loss == "binary" ? vps::MatchLossKind::binary
                                   : vps::MatchLossKind::categorical;

  vps::TrainResult result = vps::train(dataset, a.roi_height * a.roi_width,
                                       a.d_hidden, a.d_embed, config);
  vps::write_head(result.params, a.out);

  char line[128];
  std::printf("examples: %zu\n", dataset.size());
  std::snprintf(line, sizeof(line), "final loss: %.6f\n",
                result.epoch_loss.back());
  std::fputs(line, stdout);
  std::snprintf(line, sizeof(line), "train accuracy: %.6f\n",
                vps::pair_argmax_accuracy(result.params, dataset));
  std::fputs(line, stdout);
  if (!holdout.empty()) {
    std::snprintf(line, sizeof(line), "holdout accuracy: %.6f\n",
                  vps::pair_argmax_accuracy(result.params, holdout));
    std::fputs(line, stdout);
  }
  std::cout << "wrote " << a.out << "\n";
}

struct AblateArgs {
  std::string out;
  std::string head;
  std::uint64_t seed = 1;
  std::vector<std::string> presets;
  std::vector<std::string> modes = {"pixel", "instance", "hybrid"};
  int roi_height = 32;
  int roi_width = 64;
};

vps::EmbeddingHeadParams ablate_head(const AblateArgs& a) {
  if (!a.head.empty()) {
    return vps::read_head(a.head);
  }
  std::vector<vps::TrainExample> dataset;
  for (int s = 0; s < 6; ++s) {
    vps::SceneSpec spec = vps::distinct_shapes_spec(a.seed + s, 3, 9);
    std::vector<vps::TrainExample> examples = vps::matching_examples(
        vps::generate(spec), a.roi_height, a.roi_width);
    dataset.insert(dataset.end(), std::make_move_iterator(examples.begin()),
                   std::make_move_iterator(examples.end()));
  }
  vps::TrainConfig config;
  config.learning_rate = 0.01;
  config.epochs = 300;
  config.seed = a.seed;
  vps::TrainResult result =
      vps::train(dataset, a.roi_height * a.roi_width, 128, 32, config);
  char line[96];
  std::snprintf(line, sizeof(line),
                "trained matcher head on %zu examples, final loss %.6f\n",
                dataset.size(), result.epoch_loss.back());
  std::fputs(line, stdout);
  return std::move(result.params);
}

void run_ablate(const AblateArgs& a) {
  std::vector<std::string> presets =
      a.presets.empty() ? vps::preset_names() : a.presets;

  bool needs_head = false;
  for (const std::string& mode : a.modes) {
    needs_head |= mode != "pixel";
  }
  vps::EmbeddingHeadParams head;
  if (needs_head) {
    head = ablate_head(a);
  }

  auto make_config = [&](const std::string& mode, bool mutual, bool temporal) {
    vps::TrackConfig cfg;
    cfg.mode = parse_mode(mode);
    cfg.use_mutual_check = mutual;
    cfg.use_temporal = temporal;
    cfg.roi_height = a.roi_height;
    cfg.roi_width = a.roi_width;
    if (cfg.mode != vps::TrackerMode::pixel) {
      cfg.head = &head;
    }
    return cfg;
  };

  std::string table =
      "preset              mode      mutual temporal switches vpq\n";
  ordered_json runs = ordered_json::array();
  char line[160];
  for (const std::string& preset_name : presets) {
    vps::SceneOutput scene = vps::generate(vps::preset(preset_name, a.seed));
    for (const std::string& mode : a.modes) {
      for (bool mutual : {true, false}) {
        for (bool temporal : {true, false}) {
          vps::TrackConfig cfg = make_config(mode, mutual, temporal);
          vps::TrackedVideo video =
              vps::track_sequence(scene.frames, scene.flows, cfg);
          int switches = vps::count_id_switches(video, scene.gt_ids);
          vps::VpqReport report =
              vps::vpq_report(video.frames, scene.gt_frames);
          std::snprintf(line, sizeof(line),
                        "%-19s %-9s %-6s %-8s %-8d %.4f\n",
                        preset_name.c_str(), mode.c_str(),
                        mutual ? "yes" : "no", temporal ? "yes" : "no",
                        switches, report.vpq);
          table += line;
          ordered_json row;
          row["preset"] = preset_name;
          row["mode"] = mode;
          row["mutual_check"] = mutual;
          row["temporal_rescue"] = temporal;
          row["switches"] = switches;
          row["vpq"] = report.vpq;
          runs.push_back(std::move(row));
        }
      }
    }
  }

  // Rescue floor sweep on the reappearance scenario.
  table += "\ntheta sweep (occlusion_reappear, pixel mode)\n";
  table += "theta    switches vpq\n";
  ordered_json sweep = ordered_json::array();
  vps::SceneOutput occ =
      vps::generate(vps::preset("occlusion_reappear", a.seed));
  for (double theta : {0.001, 0.005, 0.01, 0.015, 0.02}) {
    vps::TrackConfig cfg = make_config("pixel", true, true);
    cfg.theta = theta;
    vps::TrackedVideo video =
        vps::track_sequence(occ.frames, occ.flows, cfg);
    int switches = vps::count_id_switches(video, occ.gt_ids);
    vps::VpqReport report = vps::vpq_report(video.frames, occ.gt_frames);
    std::snprintf(line, sizeof(line), "%-8.3f %-8d %.4f\n", theta, switches,
                  report.vpq);
    table += line;
    ordered_json row;
    row["theta"] = theta;
    row["switches"] = switches;
    row["vpq"] = report.vpq;
    sweep.push_back(std::move(row));
  }

  fs::path out(a.out);
  ensure_dir(out);
  write_text(out / "table.txt", table);
  ordered_json doc;
  doc["runs"] = std::move(runs);
  doc["theta_sweep"] = std::move(sweep);
  write_text(out / "results.json", doc.dump(2) + "\n");
  std::cout << table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video panoptic segment tracking toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Options file, ini style, one [section] per subcommand");

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Generate a synthetic scene (frames, flows, truth)");
  sim->fallthrough();
  sim->add_option("--preset", sim_args.preset_name,
                  "Scenario: occlusion_reappear, lookalike_pair, small_fast, "
                  "deformation, crowd")
      ->required();
  sim->add_option("--seed", sim_args.seed, "Id scrambling seed")
      ->capture_default_str();
  sim->add_option("--out", sim_args.out, "Output directory")->required();
  sim->add_option("--flow-noise", sim_args.flow_noise,
                  "Gaussian sigma added to every flow component")
      ->capture_default_str();
  CLI::Option* noise_seed_opt =
      sim->add_option("--noise-seed", sim_args.noise_seed,
                      "Separate seed for the flow noise (default: --seed)");

  TrackArgs track_args;
  CLI::App* track =
      app.add_subcommand("track", "Assign persistent ids over a sequence");
  track->fallthrough();
  track->add_option("--in", track_args.in,
                    "Input directory holding frames/ and flows/")
      ->required();
  track->add_option("--out", track_args.out, "Output directory")->required();
  track->add_option("--mode", track_args.mode, "Cue combination")
      ->check(CLI::IsMember({"pixel", "instance", "hybrid"}))
      ->capture_default_str();
  track->add_option("--head", track_args.head,
                    "Embedding head checkpoint (instance and hybrid modes)");
  track->add_option("--tau", track_args.tau, "Match acceptance floor")
      ->capture_default_str();
  track->add_option("--theta", track_args.theta, "Rescue similarity floor")
      ->capture_default_str();
  track->add_option("--window", track_args.memory_window,
                    "Remembered frames, predecessor included")
      ->capture_default_str();
  track->add_option("--roi-height", track_args.roi_height, "Crop rows")
      ->capture_default_str();
  track->add_option("--roi-width", track_args.roi_width, "Crop columns")
      ->capture_default_str();
  track->add_option("--w-instance", track_args.w_instance,
                    "Fusion weight of the embedding cue")
      ->capture_default_str();
  track->add_option("--w-pixel", track_args.w_pixel,
                    "Fusion weight of the warped overlap cue")
      ->capture_default_str();
  track->add_option("--w-bias", track_args.w_bias, "Fusion bias")
      ->capture_default_str();
  track->add_flag("--no-mutual", track_args.no_mutual,
                  "Skip the mutual best check");
  track->add_flag("--no-temporal", track_args.no_temporal,
                  "Skip the vanished id rescue");
  track->add_flag("--mutual-first", track_args.mutual_first,
                  "Mutual agreement before thresholding");
  track->add_flag("--literal-row-order", track_args.literal_row_order,
                  "Serve rows top to bottom instead of best score first");
  track->add_flag("--cosine", track_args.cosine,
                  "Normalize embedding correlations");
  track->add_flag("--center-anchor", track_args.center_anchor,
                  "Center crops instead of corner anchoring");
  track->add_flag("--no-class-gate", track_args.no_class_gate,
                  "Allow overlap scores across classes");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score predicted segmentations against the truth");
  evaluate->fallthrough();
  evaluate->add_option("--pred", eval_args.pred,
                       "Directory of predicted frames")
      ->required();
  evaluate->add_option("--gt", eval_args.gt, "Directory of truth frames")
      ->required();
  evaluate->add_option("--out", eval_args.out, "Also write the report here");
  evaluate->add_option("--windows", eval_args.windows, "Window lengths")
      ->check(CLI::PositiveNumber);

  TrainArgs train_args;
  CLI::App* train =
      app.add_subcommand("train", "Fit the embedding head on synthetic pairs");
  train->fallthrough();
  train->add_option("--out", train_args.out, "Checkpoint path")->required();
  train->add_option("--seed", train_args.seed, "Scene and shuffle seed")
      ->capture_default_str();
  train->add_option("--scenes", train_args.scenes, "Training scenes")
      ->capture_default_str();
  train->add_option("--holdout", train_args.holdout,
                    "Extra scenes scored but not trained on")
      ->capture_default_str();
  train->add_option("--objects", train_args.objects, "Objects per scene")
      ->capture_default_str();
  train->add_option("--frames", train_args.frames, "Frames per scene")
      ->capture_default_str();
  train->add_option("--roi-height", train_args.roi_height, "Crop rows")
      ->capture_default_str();
  train->add_option("--roi-width", train_args.roi_width, "Crop columns")
      ->capture_default_str();
  train->add_option("--d-hidden", train_args.d_hidden, "Hidden width")
      ->capture_default_str();
  train->add_option("--d-embed", train_args.d_embed, "Embedding width")
      ->capture_default_str();
  train->add_option("--epochs", train_args.epochs, "Training passes")
      ->capture_default_str();
  train->add_option("--batch", train_args.batch,
                    "Examples per step (0 = full batch)")
      ->capture_default_str();
  train->add_option("--lr", train_args.lr, "Learning rate")
      ->capture_default_str();
  train->add_option("--loss", train_args.loss, "Loss form")
      ->check(CLI::IsMember({"categorical", "binary"}))
      ->capture_default_str();

  AblateArgs ablate_args;
  CLI::App* ablate = app.add_subcommand(
      "ablate", "Sweep cue modes, the mutual check, the rescue and its floor");
  ablate->fallthrough();
  ablate->add_option("--out", ablate_args.out, "Output directory")->required();
  ablate->add_option("--seed", ablate_args.seed, "Scene seed")
      ->capture_default_str();
  ablate->add_option("--head", ablate_args.head,
                     "Embedding head checkpoint (trained fresh when absent)");
  ablate->add_option("--presets", ablate_args.presets,
                     "Scenarios to sweep (default: all)")
      ->delimiter(',');
  ablate->add_option("--modes", ablate_args.modes, "Cue modes to sweep")
      ->delimiter(',')
      ->check(CLI::IsMember({"pixel", "instance", "hybrid"}));
  ablate->add_option("--roi-height", ablate_args.roi_height, "Crop rows")
      ->capture_default_str();
  ablate->add_option("--roi-width", ablate_args.roi_width, "Crop columns")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  sim_args.noise_seed_given = noise_seed_opt->count() > 0;

  try {
    if (*sim) {
      run_simulate(sim_args);
    } else if (*track) {
      run_track(track_args);
    } else if (*evaluate) {
      run_evaluate(eval_args);
    } else if (*train) {
      run_train(train_args);
    } else if (*ablate) {
      run_ablate(ablate_args);
    }
  } catch (const vps::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
