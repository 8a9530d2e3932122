// tinymyo — signal-to-logits inference engine CLI.
//
// Exit codes: 0 ok, 2 I/O, 3 validation, 4 shape/config mismatch,
// 5 numeric failure. File formats are documented in FORMATS.md.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tinymyo/container.hpp"
#include "tinymyo/encoder.hpp"
#include "tinymyo/heads.hpp"
#include "tinymyo/metrics.hpp"
#include "tinymyo/model_io.hpp"
#include "tinymyo/planner.hpp"
#include "tinymyo/quant.hpp"
#include "tinymyo/sched.hpp"
#include "tinymyo/signal.hpp"
#include "tinymyo/tokenizer.hpp"

namespace {

using nlohmann::json;
using namespace tinymyo;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    write_file_text(out_path, text);
  }
}

AttentionMaskMode parse_mask_mode(const std::string& s) {
  if (s == "bidirectional") return AttentionMaskMode::bidirectional;
  if (s == "causal") return AttentionMaskMode::causal;
  throw ValidationError("--mask-mode must be bidirectional or causal");
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const std::string& input, const std::string& output,
                   const std::string& config_path, double fs) {
  const RunConfig cfg = parse_run_config(read_file_text(config_path));
  signal::WaveformRecord wave = load_waveform(input, fs);
  wave = apply_filter_chain(wave, cfg.filters);

  const bool whole_recording =
      cfg.normalize_mode == signal::NormalizeMode::minmax_pm1 || cfg.normalize_per_recording;
  if (whole_recording) wave = normalize(wave, cfg.normalize_mode);
  std::vector<signal::WaveformRecord> windows = segment_windows(wave, cfg.window);
  if (!whole_recording)
    for (auto& w : windows) w = normalize(w, cfg.normalize_mode);
  for (auto& w : windows) w = pad_channels(w, cfg.model.channels);
  if (windows.empty())
    throw ValidationError("preprocess: recording shorter than one window");

  windows_to_container(windows).save(output);
  std::cout << "windows: " << windows.size() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

json run_classify(const std::vector<signal::WaveformRecord>& windows,
                  const ModelBundle& bundle, AttentionMaskMode mode) {
  if (!bundle.classifier) throw ShapeError("run: weights carry no classifier head");
  json out;
  out["head"] = "classify";
  out["windows"] = json::array();
  std::vector<double> agg(bundle.classifier->classes, 0.0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    TokenSequence seq = embed(patchify(windows[i], bundle.encoder.cfg), bundle.encoder.tokenizer);
    std::vector<float> h = encoder_forward(seq, bundle.encoder, mode);
    std::vector<float> logits = classify(fuse_and_pool(h, seq), *bundle.classifier);
    int arg = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
      if (logits[k] > logits[arg]) arg = static_cast<int>(k);
    out["windows"].push_back({{"index", i}, {"logits", logits}, {"argmax", arg}});
    for (std::size_t k = 0; k < logits.size(); ++k) agg[k] += logits[k];
  }
  for (double& v : agg) v /= static_cast<double>(windows.size());
  int arg = 0;
  for (std::size_t k = 1; k < agg.size(); ++k)
    if (agg[k] > agg[arg]) arg = static_cast<int>(k);
  out["aggregate"] = {{"logits", agg}, {"argmax", arg}};
  return out;
}

json run_classify_quantized(const std::vector<signal::WaveformRecord>& windows,
                            const EncoderWeights& tokenizer_host,
                            const quant::QuantizedModel& qm, AttentionMaskMode mode) {
  json out;
  out["head"] = "classify";
  out["quantized"] = true;
  out["windows"] = json::array();
  std::vector<double> agg(qm.classes, 0.0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    TokenSequence seq = embed(patchify(windows[i], qm.cfg), tokenizer_host.tokenizer);
    std::vector<float> logits = quant::quantized_forward(seq, qm, mode);
    int arg = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
      if (logits[k] > logits[arg]) arg = static_cast<int>(k);
    out["windows"].push_back({{"index", i}, {"logits", logits}, {"argmax", arg}});
    for (std::size_t k = 0; k < logits.size(); ++k) agg[k] += logits[k];
  }
  for (double& v : agg) v /= static_cast<double>(windows.size());
  int arg = 0;
  for (std::size_t k = 1; k < agg.size(); ++k)
    if (agg[k] > agg[arg]) arg = static_cast<int>(k);
  out["aggregate"] = {{"logits", agg}, {"argmax", arg}};
  return out;
}

json run_reconstruction(const std::vector<signal::WaveformRecord>& windows,
                        const ModelBundle& bundle, AttentionMaskMode mode, double mask_ratio,
                        std::uint64_t seed) {
  if (!bundle.decoder) throw ShapeError("run: weights carry no reconstruction decoder");
  json out;
  out["head"] = "reconstruction";
  out["windows"] = json::array();
  double lm = 0.0, lv = 0.0, lt = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    PatchGrid grid = patchify(windows[i], bundle.encoder.cfg);
    TokenSequence seq = embed(grid, bundle.encoder.tokenizer);
    TokenSequence masked = apply_mask(seq, mask_ratio, seed + i, bundle.encoder.tokenizer);
    std::vector<float> h = encoder_forward(masked, bundle.encoder, mode);
    PatchGrid recon = decode_patches(h, masked, *bundle.decoder);
    LossReport rep = masked_loss(grid, recon, masked.mask_flags);
    out["windows"].push_back({{"index", i},
                              {"l_masked", rep.l_masked},
                              {"l_visible", rep.l_visible},
                              {"l_total", rep.l_total}});
    lm += rep.l_masked;
    lv += rep.l_visible;
    lt += rep.l_total;
  }
  const double n = static_cast<double>(windows.size());
  out["aggregate"] = {{"l_masked", lm / n}, {"l_visible", lv / n}, {"l_total", lt / n}};
  return out;
}

json run_regress(const std::vector<signal::WaveformRecord>& windows, const ModelBundle& bundle,
                 AttentionMaskMode mode) {
  if (!bundle.regression) throw ShapeError("run: weights carry no regression head");
  json out;
  out["head"] = "regress";
  out["windows"] = json::array();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    TokenSequence seq = embed(patchify(windows[i], bundle.encoder.cfg), bundle.encoder.tokenizer);
    std::vector<float> h = encoder_forward(seq, bundle.encoder, mode);
    std::vector<float> traj = regress(h, seq, *bundle.regression);
    json rows = json::array();
    const int dofs = bundle.regression->dofs;
    for (int t = 0; t < bundle.regression->out_len; ++t) {
      json row = json::array();
      for (int k = 0; k < dofs; ++k) row.push_back(traj[static_cast<std::size_t>(t) * dofs + k]);
      rows.push_back(row);
    }
    out["windows"].push_back({{"index", i}, {"trajectories", rows}});
  }
  return out;
}

int cmd_run(const std::string& weights_path, const std::string& input_path, bool quantized,
            const std::string& mask_mode, const std::string& head, double mask_ratio,
            std::uint64_t seed, const std::string& out_path) {
  const AttentionMaskMode mode = parse_mask_mode(mask_mode);
  const std::vector<signal::WaveformRecord> windows =
      windows_from_container(WeightContainer::load(input_path));
  json result;
  if (quantized) {
    if (head != "classify")
      throw ValidationError("run: the quantized path serves the classify head");
    const WeightContainer c = WeightContainer::load(weights_path);
    if (!c.meta.value("quantized", false))
      throw ShapeError("run: --quantized given but the container holds FP32 weights");
    const quant::QuantizedModel qm =
        quantized_from_container(c, read_file_text(weights_path + ".quant.json"));
    // tokenizer stays FP32 and ships in the same container
    ModelBundle host;
    host.encoder.cfg = qm.cfg;
    host.encoder.tokenizer.w_proj = c.get_f32("tokenizer.w_proj");
    host.encoder.tokenizer.b_proj = c.get_f32("tokenizer.b_proj");
    host.encoder.tokenizer.mask_token = c.get_f32("tokenizer.mask_token");
    result = run_classify_quantized(windows, host.encoder, qm, mode);
  } else {
    const ModelBundle bundle = bundle_from_container(WeightContainer::load(weights_path));
    if (head == "classify") {
      result = run_classify(windows, bundle, mode);
    } else if (head == "reconstruction") {
      result = run_reconstruction(windows, bundle, mode, mask_ratio, seed);
    } else if (head == "regress") {
      result = run_regress(windows, bundle, mode);
    } else {
      throw ValidationError("--head must be classify, reconstruction or regress");
    }
  }
  emit(result.dump(2), out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_quantize(const std::string& weights_path, const std::string& calib_path,
                 const std::string& out_path, const std::string& mask_mode) {
  const AttentionMaskMode mode = parse_mask_mode(mask_mode);
  const ModelBundle bundle = bundle_from_container(WeightContainer::load(weights_path));
  const std::vector<signal::WaveformRecord> windows =
      windows_from_container(WeightContainer::load(calib_path));
  std::vector<TokenSequence> seqs;
  seqs.reserve(windows.size());
  for (const auto& w : windows)
    seqs.push_back(embed(patchify(w, bundle.encoder.cfg), bundle.encoder.tokenizer));
  const quant::CalibrationResult calib = quant::calibrate(bundle.encoder, seqs, mode);
  ClassifierHead head = bundle.classifier.value_or(ClassifierHead{});
  const quant::QuantizedModel qm = quant::quantize_model(bundle.encoder, head, calib);

  WeightContainer c = quantized_to_container(qm);
  // the FP32 tokenizer travels with the quantized encoder
  c.put_f32("tokenizer.w_proj", {qm.cfg.embed_dim, qm.cfg.patch_len},
            bundle.encoder.tokenizer.w_proj);
  c.put_f32("tokenizer.b_proj", {qm.cfg.embed_dim}, bundle.encoder.tokenizer.b_proj);
  c.put_f32("tokenizer.mask_token", {qm.cfg.embed_dim}, bundle.encoder.tokenizer.mask_token);
  c.save(out_path);
  write_file_text(out_path + ".quant.json", quant_params_sidecar(qm));
  std::cout << "calibrated sites: " << calib.sites.size() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_plan(const std::string& graph_path, const std::string& config_path, int classes,
             std::int64_t alignment, bool merge_inplace, const std::string& out_path) {
  planner::OpGraph graph;
  if (!graph_path.empty()) {
    graph = planner::graph_from_json(read_file_text(graph_path));
  } else if (!config_path.empty()) {
    const RunConfig cfg = parse_run_config(read_file_text(config_path));
    graph = planner::build_inference_graph(cfg.model, classes);
  } else {
    throw ValidationError("plan: give either --graph or --config");
  }
  std::vector<planner::TensorLifetime> lifetimes;
  std::vector<int> root_of;
  if (merge_inplace) {
    lifetimes = planner::compute_liveness_inplace(graph, root_of);
  } else {
    lifetimes = planner::compute_liveness(graph);
  }
  const planner::ArenaPlan plan = planner::plan_arena(lifetimes, alignment);
  const std::vector<planner::PlanViolation> violations = planner::verify_plan(lifetimes, plan);

  json j = json::parse(planner::plan_to_json(plan, lifetimes));
  std::int64_t total = 0;
  for (const auto& t : lifetimes) total += t.size_bytes;
  j["baseline_sum_bytes"] = total;
  j["lower_bound_bytes"] = planner::liveness_lower_bound(lifetimes);
  if (merge_inplace) j["alias_root"] = root_of;
  j["violations"] = json::array();
  for (const auto& v : violations)
    j["violations"].push_back({{"tensor_a", v.tensor_a}, {"tensor_b", v.tensor_b}, {"reason", v.reason}});
  emit(j.dump(2), out_path);
  return violations.empty() ? kExitOk : kExitNumeric;
}

// ---------------------------------------------------------------------------

int cmd_schedule(const std::string& config_path, const std::string& out_path,
                 const std::string& trace_path) {
  const RunConfig cfg = parse_run_config(read_file_text(config_path));
  const sched::TilePlan plan = sched::plan_tiles(cfg.model, cfg.hierarchy);
  const sched::TileSchedule s = sched::simulate(plan, cfg.hierarchy);
  emit(sched::schedule_to_json(s), out_path);
  if (!trace_path.empty()) write_file_text(trace_path, sched::schedule_to_chrome_trace(s));
  std::fprintf(stderr, "total cycles %lld, %.6f s, %.6f J\n",
               static_cast<long long>(s.total_cycles), s.seconds, s.estimated_energy_j);
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_count(const std::string& config_path, bool as_json) {
  const RunConfig cfg = parse_run_config(read_file_text(config_path));
  const sched::MacBreakdown b = sched::count_macs(cfg.model);
  const ParamReport params = count_parameters(cfg.model);
  const std::int64_t total = b.block_total();

  struct Row {
    const char* name;
    std::int64_t macs;
  };
  const Row rows[] = {{"MHSA Q/K/V projections", b.qkv}, {"MHSA QK scores", b.qk_scores},
                      {"MHSA AV context", b.av_context}, {"MHSA output projection", b.out_proj},
                      {"MLP FC1", b.fc1},                {"MLP FC2", b.fc2}};

  if (as_json) {
    json j;
    for (const Row& r : rows)
      j["block"][r.name] = {{"macs", r.macs},
                            {"macs_millions", sched::round_to_millions(r.macs)},
                            {"share_percent", sched::percent_share(r.macs, total)}};
    j["block_total_macs"] = total;
    j["model_total_macs"] = b.model_total();
    j["model_total_flops_2x"] = 2 * b.model_total();
    j["parameters"] = {{"tokenizer", params.tokenizer}, {"mask_token", params.mask_token},
                       {"per_block", params.per_block}, {"blocks_total", params.blocks_total},
                       {"final_ln", params.final_ln},   {"decoder", params.decoder},
                       {"total", params.total}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }

  std::printf("Computational cost per transformer block\n");
  std::printf("%-24s %12s %6s %8s\n", "Component", "MACs", "~M", "share");
  for (const Row& r : rows)
    std::printf("%-24s %12lld %5lldM %7d%%\n", r.name, static_cast<long long>(r.macs),
                static_cast<long long>(sched::round_to_millions(r.macs)),
                sched::percent_share(r.macs, total));
  std::printf("%-24s %12lld\n", "Block total", static_cast<long long>(total));
  std::printf("%-24s %12lld (FLOPs at 2/MAC: %lld)\n", "Model total",
              static_cast<long long>(b.model_total()),
              static_cast<long long>(2 * b.model_total()));
  std::printf("\nParameters\n");
  std::printf("  tokenizer   %9lld\n", static_cast<long long>(params.tokenizer));
  std::printf("  mask token  %9lld\n", static_cast<long long>(params.mask_token));
  std::printf("  per block   %9lld\n", static_cast<long long>(params.per_block));
  std::printf("  blocks      %9lld\n", static_cast<long long>(params.blocks_total));
  std::printf("  final LN    %9lld\n", static_cast<long long>(params.final_ln));
  std::printf("  decoder     %9lld\n", static_cast<long long>(params.decoder));
  std::printf("  total       %9lld\n", static_cast<long long>(params.total));
  return kExitOk;
}

// ---------------------------------------------------------------------------

metrics::PredictionSet predictions_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("eval: empty csv");
  std::istringstream hs(line);
  std::vector<std::string> head;
  std::string cell;
  while (std::getline(hs, cell, ',')) head.push_back(cell);
  if (head.empty() || head[0] != "label")
    throw ValidationError("eval csv: header must start with 'label'");
  metrics::PredictionSet p;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != head.size()) throw ValidationError("eval csv: ragged row");
    p.labels.push_back(static_cast<int>(row[0]));
    p.scores.emplace_back(row.begin() + 1, row.end());
  }
  return p;
}

int cmd_eval(const std::string& input_path, const std::string& out_path) {
  const std::string text = read_file_text(input_path);
  metrics::PredictionSet p;
  bool classification = false, regression = false;
  if (!text.empty() && (text[0] == '{' || text[0] == '[')) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("eval: bad JSON: ") + e.what());
    }
    if (j.contains("labels")) {
      p.labels = j.at("labels").get<std::vector<int>>();
      if (j.contains("scores")) p.scores = j.at("scores").get<std::vector<std::vector<double>>>();
      classification = true;
    }
    if (j.contains("targets")) {
      p.values = j.at("values").get<std::vector<std::vector<double>>>();
      p.targets = j.at("targets").get<std::vector<std::vector<double>>>();
      regression = true;
    }
    if (!classification && !regression)
      throw ValidationError("eval: JSON needs labels/scores or values/targets");
  } else {
    p = predictions_from_csv(text);
    classification = true;
  }

  json out;
  if (classification) {
    if (p.scores.empty()) throw ValidationError("eval: classification needs scores");
    out["accuracy_micro"] = metrics::accuracy(p, metrics::AccuracyMode::micro);
    out["accuracy_macro"] = metrics::accuracy(p, metrics::AccuracyMode::macro);
    out["f1_macro"] = metrics::f1_macro(p);
    try {
      out["auroc_macro"] = metrics::auroc_macro(p);
    } catch (const metrics::UndefinedMetricError& e) {
      out["auroc_macro"] = std::string("undefined: ") + e.what();
    }
    try {
      out["cler"] = metrics::cler(p);
    } catch (const metrics::UndefinedMetricError& e) {
      out["cler"] = std::string("undefined: ") + e.what();
    }
  }
  if (regression) {
    const metrics::RegressionReport rep = metrics::regression_metrics(p);
    out["mae"] = rep.mae;
    out["rmse"] = rep.rmse;
    if (rep.r2_defined) {
      out["r2"] = rep.r2;
    } else {
      out["r2"] = "undefined: zero-variance targets";
    }
    out["mae_per_dof"] = rep.mae_per_dof;
    out["rmse_per_dof"] = rep.rmse_per_dof;
  }
  emit(out.dump(2), out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_init_weights(const std::string& config_path, const std::string& out_path,
                     std::uint64_t seed, int classes, bool with_decoder, bool with_regression) {
  const RunConfig cfg = parse_run_config(read_file_text(config_path));
  ModelBundle bundle;
  bundle.encoder = random_encoder_weights(cfg.model, seed);
  if (with_decoder) bundle.decoder = random_decoder_weights(cfg.model, seed + 1);
  if (classes > 0) bundle.classifier = random_classifier_head(cfg.model, classes, seed + 2);
  if (with_regression)
    bundle.regression = make_regression_head(cfg.model, cfg.model.timesteps, seed + 3);
  bundle_to_container(bundle).save(out_path);
  const ParamReport rep = count_parameters(bundle.encoder);
  std::cout << "total parameters (encoder+decoder): " << rep.total << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TinyMyo EMG inference engine"};
  app.require_subcommand(1);
  int rc = kExitOk;

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "filter, normalize and window a recording");
  std::string pre_in, pre_out, pre_cfg;
  double pre_fs = 0.0;
  pre->add_option("input", pre_in, "waveform CSV or container")->required();
  pre->add_option("output", pre_out, "windows container to write")->required();
  pre->add_option("--config", pre_cfg, "run configuration JSON")->required();
  pre->add_option("--fs", pre_fs, "sampling rate for CSV input");
  pre->callback([&] { rc = cmd_preprocess(pre_in, pre_out, pre_cfg, pre_fs); });

  // run
  auto* run = app.add_subcommand("run", "run the model over preprocessed windows");
  std::string run_w, run_in, run_mode = "bidirectional", run_head = "classify", run_out;
  bool run_quant = false;
  double run_ratio = 0.5;
  std::uint64_t run_seed = 0;
  run->add_option("--weights", run_w)->required();
  run->add_option("--input", run_in)->required();
  run->add_flag("--quantized", run_quant, "use the INT8 path");
  run->add_option("--mask-mode", run_mode, "bidirectional|causal");
  run->add_option("--head", run_head, "classify|reconstruction|regress");
  run->add_option("--mask-ratio", run_ratio, "mask ratio for reconstruction");
  run->add_option("--seed", run_seed, "mask RNG seed");
  run->add_option("--out", run_out, "output file (stdout when omitted)");
  run->callback([&] {
    rc = cmd_run(run_w, run_in, run_quant, run_mode, run_head, run_ratio, run_seed, run_out);
  });

  // quantize
  auto* qz = app.add_subcommand("quantize", "post-training INT8 quantization");
  std::string qz_w, qz_calib, qz_out, qz_mode = "bidirectional";
  qz->add_option("--weights", qz_w)->required();
  qz->add_option("--calib", qz_calib, "windows container for calibration")->required();
  qz->add_option("--out", qz_out)->required();
  qz->add_option("--mask-mode", qz_mode, "bidirectional|causal");
  qz->callback([&] { rc = cmd_quantize(qz_w, qz_calib, qz_out, qz_mode); });

  // plan
  auto* pl = app.add_subcommand("plan", "liveness analysis and arena planning");
  std::string pl_graph, pl_cfg, pl_out;
  int pl_classes = 0;
  std::int64_t pl_align = 4;
  bool pl_inplace = false;
  pl->add_option("--graph", pl_graph, "op graph JSON");
  pl->add_option("--config", pl_cfg, "build the model inference graph");
  pl->add_option("--classes", pl_classes, "classifier output count for --config");
  pl->add_option("--alignment", pl_align, "offset alignment in bytes");
  pl->add_flag("--merge-inplace", pl_inplace, "let in-place ops reuse their input buffer");
  pl->add_option("--out", pl_out);
  pl->callback(
      [&] { rc = cmd_plan(pl_graph, pl_cfg, pl_classes, pl_align, pl_inplace, pl_out); });

  // schedule
  auto* sc = app.add_subcommand("schedule", "tiling plan and pipeline simulation");
  std::string sc_cfg, sc_out, sc_trace;
  sc->add_option("--config", sc_cfg)->required();
  sc->add_option("--out", sc_out);
  sc->add_option("--trace", sc_trace, "Chrome trace JSON");
  sc->callback([&] { rc = cmd_schedule(sc_cfg, sc_out, sc_trace); });

  // count
  auto* ct = app.add_subcommand("count", "MAC table and parameter report");
  std::string ct_cfg;
  bool ct_json = false;
  ct->add_option("--config", ct_cfg)->required();
  ct->add_flag("--json", ct_json);
  ct->callback([&] { rc = cmd_count(ct_cfg, ct_json); });

  // eval
  auto* ev = app.add_subcommand("eval", "compute metrics from predictions");
  std::string ev_in, ev_out;
  ev->add_option("input", ev_in, "predictions JSON or CSV")->required();
  ev->add_option("--out", ev_out);
  ev->callback([&] { rc = cmd_eval(ev_in, ev_out); });

  // init-weights
  auto* iw = app.add_subcommand("init-weights", "write a random weight container");
  std::string iw_cfg, iw_out;
  std::uint64_t iw_seed = 0;
  int iw_classes = 0;
  bool iw_dec = false, iw_reg = false;
  iw->add_option("--config", iw_cfg)->required();
  iw->add_option("--out", iw_out)->required();
  iw->add_option("--seed", iw_seed);
  iw->add_option("--classes", iw_classes, "add a classifier head");
  iw->add_flag("--decoder", iw_dec, "add the reconstruction decoder");
  iw->add_flag("--regression", iw_reg, "add the regression head");
  iw->callback([&] { rc = cmd_init_weights(iw_cfg, iw_out, iw_seed, iw_classes, iw_dec, iw_reg); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitShape;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return rc;
}
