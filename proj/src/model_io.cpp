#include "tinymyo/model_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <set>
#include <sstream>

namespace tinymyo {

using nlohmann::json;

namespace {

// Strict object reader: every key must be consumed, unknown keys are
// reported by name.
class StrictObj {
 public:
  StrictObj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ValidationError("config: '" + path_ + "' must be a JSON object");
  }

  const json& require(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    if (it == j_.end())
      throw ValidationError("config: missing required field '" + path_ + k + "'");
    return *it;
  }

  const json* find(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  T get(const std::string& k, T fallback) {
    const json* v = find(k);
    return v ? v->get<T>() : fallback;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ValidationError("config: unknown field '" + path_ + it.key() + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ModelConfig model_from_json(const json& j, const std::string& path) {
  StrictObj o(j, path);
  ModelConfig m;
  m.timesteps = o.require("timesteps").get<int>();
  m.channels = o.require("channels").get<int>();
  m.patch_len = o.require("patch_len").get<int>();
  m.patch_stride = o.require("patch_stride").get<int>();
  m.embed_dim = o.require("embed_dim").get<int>();
  m.layers = o.require("layers").get<int>();
  m.heads = o.require("heads").get<int>();
  m.mlp_ratio = o.get("mlp_ratio", m.mlp_ratio);
  m.rope_base = o.get("rope_base", m.rope_base);
  m.rope_temporal_positions = o.get("rope_temporal_positions", m.rope_temporal_positions);
  o.finish();
  m.validate();
  return m;
}

json model_to_json(const ModelConfig& m) {
  return {{"timesteps", m.timesteps},
          {"channels", m.channels},
          {"patch_len", m.patch_len},
          {"patch_stride", m.patch_stride},
          {"embed_dim", m.embed_dim},
          {"layers", m.layers},
          {"heads", m.heads},
          {"mlp_ratio", m.mlp_ratio},
          {"rope_base", m.rope_base},
          {"rope_temporal_positions", m.rope_temporal_positions}};
}

signal::FilterSpec filter_from_json(const json& j, const std::string& path) {
  StrictObj o(j, path);
  signal::FilterSpec f;
  const std::string kind = o.require("kind").get<std::string>();
  if (kind == "bandpass") {
    f.kind = signal::FilterKind::bandpass;
    f.cutoff_lo_hz = o.require("cutoff_lo_hz").get<double>();
    f.cutoff_hi_hz = o.require("cutoff_hi_hz").get<double>();
    f.order = o.get("order", 4);
  } else if (kind == "highpass") {
    f.kind = signal::FilterKind::highpass;
    f.cutoff_lo_hz = o.require("cutoff_lo_hz").get<double>();
    f.order = o.get("order", 4);
  } else if (kind == "notch") {
    f.kind = signal::FilterKind::notch;
    f.cutoff_lo_hz = o.require("cutoff_lo_hz").get<double>();
    f.notch_q = o.get("notch_q", 30.0);
  } else {
    throw ValidationError("config: '" + path + "kind' must be bandpass, highpass or notch");
  }
  o.finish();
  return f;
}

json filter_to_json(const signal::FilterSpec& f) {
  switch (f.kind) {
    case signal::FilterKind::bandpass:
      return {{"kind", "bandpass"},
              {"order", f.order},
              {"cutoff_lo_hz", f.cutoff_lo_hz},
              {"cutoff_hi_hz", f.cutoff_hi_hz}};
    case signal::FilterKind::highpass:
      return {{"kind", "highpass"}, {"order", f.order}, {"cutoff_lo_hz", f.cutoff_lo_hz}};
    case signal::FilterKind::notch:
      return {{"kind", "notch"}, {"cutoff_lo_hz", f.cutoff_lo_hz}, {"notch_q", f.notch_q}};
  }
  throw ValidationError("config: bad filter kind");
}

std::string format_scale(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_scale(const json& j) {
  if (j.is_string()) return std::stod(j.get<std::string>());
  return j.get<double>();
}

json qp_to_json(const quant::QuantParams& qp) {
  return {{"scale", format_scale(qp.scale)},
          {"zero_point", qp.zero_point},
          {"scheme", qp.scheme == quant::QuantScheme::symmetric_weight ? "symmetric_weight"
                                                                       : "affine_activation"}};
}

quant::QuantParams qp_from_json(const json& j) {
  quant::QuantParams qp;
  qp.scale = parse_scale(j.at("scale"));
  qp.zero_point = j.at("zero_point").get<int>();
  qp.scheme = j.at("scheme").get<std::string>() == "symmetric_weight"
                  ? quant::QuantScheme::symmetric_weight
                  : quant::QuantScheme::affine_activation;
  return qp;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: not valid JSON: ") + e.what());
  }
  StrictObj root(j, "");
  RunConfig cfg;
  cfg.model = model_from_json(root.require("model"), "model.");

  if (const json* pre = root.find("preprocess")) {
    StrictObj o(*pre, "preprocess.");
    if (const json* filters = o.find("filters")) {
      if (!filters->is_array())
        throw ValidationError("config: 'preprocess.filters' must be an array");
      for (std::size_t i = 0; i < filters->size(); ++i)
        cfg.filters.push_back(filter_from_json(
            (*filters)[i], "preprocess.filters[" + std::to_string(i) + "]."));
    }
    const std::string norm = o.get<std::string>("normalize", "minmax_pm1");
    if (norm == "minmax_pm1") {
      cfg.normalize_mode = signal::NormalizeMode::minmax_pm1;
    } else if (norm == "zscore") {
      cfg.normalize_mode = signal::NormalizeMode::zscore;
    } else {
      throw ValidationError("config: 'preprocess.normalize' must be minmax_pm1 or zscore");
    }
    const std::string scope = o.get<std::string>("zscore_scope", "per_window");
    if (scope == "per_window") {
      cfg.normalize_per_recording = false;
    } else if (scope == "per_recording") {
      cfg.normalize_per_recording = true;
    } else {
      throw ValidationError("config: 'preprocess.zscore_scope' must be per_window or per_recording");
    }
    o.finish();
  }

  {
    StrictObj o(root.require("window"), "window.");
    cfg.window.length_samples = o.require("length_samples").get<int>();
    cfg.window.overlap_fraction = o.get("overlap_fraction", 0.5);
    o.finish();
    cfg.window.validate();
  }

  if (const json* mask = root.find("mask")) {
    StrictObj o(*mask, "mask.");
    cfg.mask_ratio = o.get("ratio", 0.5);
    const std::string mode = o.get<std::string>("mode", "bidirectional");
    if (mode == "bidirectional") {
      cfg.mask_mode = AttentionMaskMode::bidirectional;
    } else if (mode == "causal") {
      cfg.mask_mode = AttentionMaskMode::causal;
    } else {
      throw ValidationError("config: 'mask.mode' must be bidirectional or causal");
    }
    o.finish();
    if (cfg.mask_ratio < 0.0 || cfg.mask_ratio >= 1.0)
      throw ValidationError("config: 'mask.ratio' must lie in [0, 1)");
  }

  cfg.quantized = root.get("quantized", false);

  if (const json* h = root.find("hierarchy")) {
    StrictObj o(*h, "hierarchy.");
    cfg.hierarchy.l2_bytes = o.get("l2_bytes", cfg.hierarchy.l2_bytes);
    cfg.hierarchy.l1_bytes = o.get("l1_bytes", cfg.hierarchy.l1_bytes);
    cfg.hierarchy.bw_l3_l2 = o.get("bw_l3_l2", cfg.hierarchy.bw_l3_l2);
    cfg.hierarchy.bw_l2_l1 = o.get("bw_l2_l1", cfg.hierarchy.bw_l2_l1);
    cfg.hierarchy.worker_cores = o.get("worker_cores", cfg.hierarchy.worker_cores);
    cfg.hierarchy.macs_per_core_cycle =
        o.get("macs_per_core_cycle", cfg.hierarchy.macs_per_core_cycle);
    cfg.hierarchy.clock_hz = o.get("clock_hz", cfg.hierarchy.clock_hz);
    cfg.hierarchy.avg_power_w = o.get("avg_power_w", cfg.hierarchy.avg_power_w);
    o.finish();
    cfg.hierarchy.validate();
  }

  cfg.seed = root.get<std::uint64_t>("seed", 0);
  root.finish();
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["model"] = model_to_json(cfg.model);
  json filters = json::array();
  for (const auto& f : cfg.filters) filters.push_back(filter_to_json(f));
  j["preprocess"] = {
      {"filters", filters},
      {"normalize",
       cfg.normalize_mode == signal::NormalizeMode::minmax_pm1 ? "minmax_pm1" : "zscore"},
      {"zscore_scope", cfg.normalize_per_recording ? "per_recording" : "per_window"}};
  j["window"] = {{"length_samples", cfg.window.length_samples},
                 {"overlap_fraction", cfg.window.overlap_fraction}};
  j["mask"] = {{"ratio", cfg.mask_ratio},
               {"mode", cfg.mask_mode == AttentionMaskMode::causal ? "causal" : "bidirectional"}};
  j["quantized"] = cfg.quantized;
  j["hierarchy"] = {{"l2_bytes", cfg.hierarchy.l2_bytes},
                    {"l1_bytes", cfg.hierarchy.l1_bytes},
                    {"bw_l3_l2", cfg.hierarchy.bw_l3_l2},
                    {"bw_l2_l1", cfg.hierarchy.bw_l2_l1},
                    {"worker_cores", cfg.hierarchy.worker_cores},
                    {"macs_per_core_cycle", cfg.hierarchy.macs_per_core_cycle},
                    {"clock_hz", cfg.hierarchy.clock_hz},
                    {"avg_power_w", cfg.hierarchy.avg_power_w}};
  j["seed"] = cfg.seed;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// FP32 model bundle
// ---------------------------------------------------------------------------

WeightContainer bundle_to_container(const ModelBundle& bundle) {
  const EncoderWeights& w = bundle.encoder;
  w.validate();
  const ModelConfig& cfg = w.cfg;
  const int d = cfg.embed_dim;
  const int m = cfg.mlp_dim();
  WeightContainer c;
  c.meta["model"] = model_to_json(cfg);
  c.meta["quantized"] = false;
  c.put_f32("tokenizer.w_proj", {d, cfg.patch_len}, w.tokenizer.w_proj);
  c.put_f32("tokenizer.b_proj", {d}, w.tokenizer.b_proj);
  c.put_f32("tokenizer.mask_token", {d}, w.tokenizer.mask_token);
  for (int b = 0; b < cfg.layers; ++b) {
    const BlockWeights& bw = w.blocks[b];
    const std::string p = "blk" + std::to_string(b) + ".";
    c.put_f32(p + "ln1.gamma", {d}, bw.ln1_gamma);
    c.put_f32(p + "ln1.beta", {d}, bw.ln1_beta);
    c.put_f32(p + "qkv.w", {3 * d, d}, bw.w_qkv);
    c.put_f32(p + "qkv.b", {3 * d}, bw.b_qkv);
    c.put_f32(p + "out.w", {d, d}, bw.w_out);
    c.put_f32(p + "out.b", {d}, bw.b_out);
    c.put_f32(p + "ln2.gamma", {d}, bw.ln2_gamma);
    c.put_f32(p + "ln2.beta", {d}, bw.ln2_beta);
    c.put_f32(p + "fc1.w", {m, d}, bw.w_fc1);
    c.put_f32(p + "fc1.b", {m}, bw.b_fc1);
    c.put_f32(p + "fc2.w", {d, m}, bw.w_fc2);
    c.put_f32(p + "fc2.b", {d}, bw.b_fc2);
  }
  c.put_f32("final_ln.gamma", {d}, w.final_ln_gamma);
  c.put_f32("final_ln.beta", {d}, w.final_ln_beta);
  if (bundle.decoder) {
    c.put_f32("decoder.w", {cfg.patch_len, d}, bundle.decoder->w_dec);
    c.put_f32("decoder.b", {cfg.patch_len}, bundle.decoder->b_dec);
  }
  if (bundle.classifier) {
    c.meta["classes"] = bundle.classifier->classes;
    c.put_f32("classifier.w", {bundle.classifier->classes, cfg.channels * d},
              bundle.classifier->w);
    c.put_f32("classifier.b", {bundle.classifier->classes}, bundle.classifier->b);
  }
  if (bundle.regression) {
    const RegressionHead& r = *bundle.regression;
    c.meta["regression"] = {{"hidden", r.hidden},
                            {"kernel", r.kernel},
                            {"dofs", r.dofs},
                            {"out_len", r.out_len}};
    c.put_f32("regression.pw_in.w", {r.hidden, r.in_channels}, r.pw_in_w);
    c.put_f32("regression.pw_in.b", {r.hidden}, r.pw_in_b);
    c.put_f32("regression.dw1.w", {r.hidden, r.kernel}, r.dw1_w);
    c.put_f32("regression.dw1.b", {r.hidden}, r.dw1_b);
    c.put_f32("regression.dw2.w", {r.hidden, r.kernel}, r.dw2_w);
    c.put_f32("regression.dw2.b", {r.hidden}, r.dw2_b);
    c.put_f32("regression.pw_out.w", {r.dofs, r.hidden}, r.pw_out_w);
    c.put_f32("regression.pw_out.b", {r.dofs}, r.pw_out_b);
  }
  return c;
}

ModelBundle bundle_from_container(const WeightContainer& c) {
  if (!c.meta.contains("model")) throw ShapeError("container: missing model config in meta");
  if (c.meta.value("quantized", false))
    throw ShapeError("container: quantized container given where FP32 weights expected");
  ModelBundle bundle;
  EncoderWeights& w = bundle.encoder;
  w.cfg = model_from_json(c.meta["model"], "meta.model.");
  w.tokenizer.w_proj = c.get_f32("tokenizer.w_proj");
  w.tokenizer.b_proj = c.get_f32("tokenizer.b_proj");
  w.tokenizer.mask_token = c.get_f32("tokenizer.mask_token");
  w.blocks.resize(w.cfg.layers);
  for (int b = 0; b < w.cfg.layers; ++b) {
    BlockWeights& bw = w.blocks[b];
    const std::string p = "blk" + std::to_string(b) + ".";
    bw.ln1_gamma = c.get_f32(p + "ln1.gamma");
    bw.ln1_beta = c.get_f32(p + "ln1.beta");
    bw.w_qkv = c.get_f32(p + "qkv.w");
    bw.b_qkv = c.get_f32(p + "qkv.b");
    bw.w_out = c.get_f32(p + "out.w");
    bw.b_out = c.get_f32(p + "out.b");
    bw.ln2_gamma = c.get_f32(p + "ln2.gamma");
    bw.ln2_beta = c.get_f32(p + "ln2.beta");
    bw.w_fc1 = c.get_f32(p + "fc1.w");
    bw.b_fc1 = c.get_f32(p + "fc1.b");
    bw.w_fc2 = c.get_f32(p + "fc2.w");
    bw.b_fc2 = c.get_f32(p + "fc2.b");
  }
  w.final_ln_gamma = c.get_f32("final_ln.gamma");
  w.final_ln_beta = c.get_f32("final_ln.beta");
  w.validate();
  if (c.has("decoder.w")) {
    DecoderWeights dec;
    dec.w_dec = c.get_f32("decoder.w");
    dec.b_dec = c.get_f32("decoder.b");
    bundle.decoder = std::move(dec);
  }
  if (c.has("classifier.w")) {
    ClassifierHead head;
    head.w = c.get_f32("classifier.w");
    head.b = c.get_f32("classifier.b");
    head.classes = static_cast<int>(head.b.size());
    bundle.classifier = std::move(head);
  }
  if (c.has("regression.pw_in.w")) {
    RegressionHead r;
    const json& meta = c.meta.at("regression");
    r.hidden = meta.at("hidden").get<int>();
    r.kernel = meta.at("kernel").get<int>();
    r.dofs = meta.at("dofs").get<int>();
    r.out_len = meta.at("out_len").get<int>();
    r.in_channels = w.cfg.channels * w.cfg.embed_dim;
    r.pw_in_w = c.get_f32("regression.pw_in.w");
    r.pw_in_b = c.get_f32("regression.pw_in.b");
    r.dw1_w = c.get_f32("regression.dw1.w");
    r.dw1_b = c.get_f32("regression.dw1.b");
    r.dw2_w = c.get_f32("regression.dw2.w");
    r.dw2_b = c.get_f32("regression.dw2.b");
    r.pw_out_w = c.get_f32("regression.pw_out.w");
    r.pw_out_b = c.get_f32("regression.pw_out.b");
    bundle.regression = std::move(r);
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// quantized model
// ---------------------------------------------------------------------------

WeightContainer quantized_to_container(const quant::QuantizedModel& qm) {
  const ModelConfig& cfg = qm.cfg;
  const int d = cfg.embed_dim;
  const int m = cfg.mlp_dim();
  WeightContainer c;
  c.meta["model"] = model_to_json(cfg);
  c.meta["quantized"] = true;
  c.meta["classes"] = qm.classes;
  for (int b = 0; b < cfg.layers; ++b) {
    const quant::QuantizedBlock& qb = qm.blocks[b];
    const std::string p = "blk" + std::to_string(b) + ".";
    c.put_f32(p + "ln1.gamma", {d}, qb.ln1_gamma);
    c.put_f32(p + "ln1.beta", {d}, qb.ln1_beta);
    c.put_f32(p + "ln2.gamma", {d}, qb.ln2_gamma);
    c.put_f32(p + "ln2.beta", {d}, qb.ln2_beta);
    c.put_i8(p + "qkv.w", {3 * d, d}, qb.w_qkv.data);
    c.put_i8(p + "out.w", {d, d}, qb.w_out.data);
    c.put_i8(p + "fc1.w", {m, d}, qb.w_fc1.data);
    c.put_i8(p + "fc2.w", {d, m}, qb.w_fc2.data);
    c.put_i32(p + "qkv.b", {3 * d}, qb.b_qkv);
    c.put_i32(p + "out.b", {d}, qb.b_out);
    c.put_i32(p + "fc1.b", {m}, qb.b_fc1);
    c.put_i32(p + "fc2.b", {d}, qb.b_fc2);
  }
  c.put_f32("final_ln.gamma", {d}, qm.final_ln_gamma);
  c.put_f32("final_ln.beta", {d}, qm.final_ln_beta);
  if (qm.classes > 0) {
    c.put_i8("classifier.w", {qm.classes, cfg.channels * d}, qm.clf_w.data);
    c.put_f32("classifier.b", {qm.classes}, qm.clf_b);
  }
  return c;
}

std::string quant_params_sidecar(const quant::QuantizedModel& qm) {
  json j;
  j["classes"] = qm.classes;
  json sites = json::object();
  sites["input"] = qp_to_json(qm.input);
  sites["final_ln"] = qp_to_json(qm.final_ln_out);
  sites["fused"] = qp_to_json(qm.fused);
  json weights = json::object();
  for (std::size_t b = 0; b < qm.blocks.size(); ++b) {
    const quant::QuantizedBlock& qb = qm.blocks[b];
    const std::string p = "blk" + std::to_string(b) + ".";
    sites[p + "ln1"] = qp_to_json(qb.ln1_out);
    sites[p + "qkv"] = qp_to_json(qb.qkv_out);
    sites[p + "q_rot"] = qp_to_json(qb.q_rot);
    sites[p + "k_rot"] = qp_to_json(qb.k_rot);
    sites[p + "scores"] = qp_to_json(qb.scores);
    sites[p + "ctx"] = qp_to_json(qb.ctx);
    sites[p + "attn_out"] = qp_to_json(qb.attn_out);
    sites[p + "ln2"] = qp_to_json(qb.ln2_out);
    sites[p + "fc1"] = qp_to_json(qb.fc1_out);
    sites[p + "gelu"] = qp_to_json(qb.gelu_out);
    sites[p + "fc2"] = qp_to_json(qb.fc2_out);
    sites[p + "resid1"] = qp_to_json(qb.resid1);
    sites[p + "resid2"] = qp_to_json(qb.resid2);
    weights[p + "qkv.w"] = qp_to_json(qb.w_qkv.qp);
    weights[p + "out.w"] = qp_to_json(qb.w_out.qp);
    weights[p + "fc1.w"] = qp_to_json(qb.w_fc1.qp);
    weights[p + "fc2.w"] = qp_to_json(qb.w_fc2.qp);
  }
  if (qm.classes > 0) weights["classifier.w"] = qp_to_json(qm.clf_w.qp);
  j["sites"] = sites;
  j["weights"] = weights;
  return j.dump(2);
}

quant::QuantizedModel quantized_from_container(const WeightContainer& c,
                                               const std::string& sidecar_json) {
  if (!c.meta.value("quantized", false))
    throw ShapeError("container: FP32 container given where quantized weights expected");
  json side;
  try {
    side = json::parse(sidecar_json);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("quant sidecar: not valid JSON: ") + e.what());
  }
  const json& sites = side.at("sites");
  const json& weights = side.at("weights");

  quant::QuantizedModel qm;
  qm.cfg = model_from_json(c.meta.at("model"), "meta.model.");
  const int d = qm.cfg.embed_dim;
  const int m = qm.cfg.mlp_dim();
  qm.classes = side.at("classes").get<int>();
  qm.input = qp_from_json(sites.at("input"));
  qm.final_ln_out = qp_from_json(sites.at("final_ln"));
  qm.fused = qp_from_json(sites.at("fused"));
  qm.final_ln_gamma = c.get_f32("final_ln.gamma");
  qm.final_ln_beta = c.get_f32("final_ln.beta");
  qm.blocks.resize(qm.cfg.layers);
  for (int b = 0; b < qm.cfg.layers; ++b) {
    quant::QuantizedBlock& qb = qm.blocks[b];
    const std::string p = "blk" + std::to_string(b) + ".";
    qb.ln1_gamma = c.get_f32(p + "ln1.gamma");
    qb.ln1_beta = c.get_f32(p + "ln1.beta");
    qb.ln2_gamma = c.get_f32(p + "ln2.gamma");
    qb.ln2_beta = c.get_f32(p + "ln2.beta");
    qb.ln1_out = qp_from_json(sites.at(p + "ln1"));
    qb.qkv_out = qp_from_json(sites.at(p + "qkv"));
    qb.q_rot = qp_from_json(sites.at(p + "q_rot"));
    qb.k_rot = qp_from_json(sites.at(p + "k_rot"));
    qb.scores = qp_from_json(sites.at(p + "scores"));
    qb.ctx = qp_from_json(sites.at(p + "ctx"));
    qb.attn_out = qp_from_json(sites.at(p + "attn_out"));
    qb.ln2_out = qp_from_json(sites.at(p + "ln2"));
    qb.fc1_out = qp_from_json(sites.at(p + "fc1"));
    qb.gelu_out = qp_from_json(sites.at(p + "gelu"));
    qb.fc2_out = qp_from_json(sites.at(p + "fc2"));
    qb.resid1 = qp_from_json(sites.at(p + "resid1"));
    qb.resid2 = qp_from_json(sites.at(p + "resid2"));
    qb.w_qkv = {c.get_i8(p + "qkv.w"), {3 * d, d}, qp_from_json(weights.at(p + "qkv.w"))};
    qb.w_out = {c.get_i8(p + "out.w"), {d, d}, qp_from_json(weights.at(p + "out.w"))};
    qb.w_fc1 = {c.get_i8(p + "fc1.w"), {m, d}, qp_from_json(weights.at(p + "fc1.w"))};
    qb.w_fc2 = {c.get_i8(p + "fc2.w"), {d, m}, qp_from_json(weights.at(p + "fc2.w"))};
    qb.b_qkv = c.get_i32(p + "qkv.b");
    qb.b_out = c.get_i32(p + "out.b");
    qb.b_fc1 = c.get_i32(p + "fc1.b");
    qb.b_fc2 = c.get_i32(p + "fc2.b");
    qb.gelu_lut = quant::build_gelu_table(qb.fc1_out, qb.gelu_out);
  }
  if (qm.classes > 0) {
    qm.clf_w = {c.get_i8("classifier.w"), {qm.classes, qm.cfg.channels * d},
                qp_from_json(weights.at("classifier.w"))};
    qm.clf_b = c.get_f32("classifier.b");
  }
  return qm;
}

// ---------------------------------------------------------------------------
// windows and waveforms
// ---------------------------------------------------------------------------

WeightContainer windows_to_container(const std::vector<signal::WaveformRecord>& windows) {
  if (windows.empty()) throw ValidationError("windows: nothing to store");
  const int t = windows.front().frames;
  const int ch = windows.front().channels;
  std::vector<float> data;
  data.reserve(windows.size() * static_cast<std::size_t>(t) * ch);
  for (const auto& w : windows) {
    if (w.frames != t || w.channels != ch)
      throw ShapeError("windows: inconsistent window shapes");
    for (double v : w.samples) data.push_back(static_cast<float>(v));
  }
  WeightContainer c;
  c.meta["fs"] = windows.front().fs;
  c.meta["kind"] = "windows";
  c.put_f32("windows", {static_cast<int>(windows.size()), t, ch}, data);
  return c;
}

std::vector<signal::WaveformRecord> windows_from_container(const WeightContainer& c) {
  const TensorEntry& e = c.entry("windows");
  if (e.shape.size() != 3) throw ShapeError("windows: tensor must be [n x T x C]");
  const std::vector<float> data = c.get_f32("windows");
  const int n = e.shape[0], t = e.shape[1], ch = e.shape[2];
  const double fs = c.meta.value("fs", 0.0);
  std::vector<signal::WaveformRecord> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].frames = t;
    out[i].channels = ch;
    out[i].fs = fs;
    out[i].samples.assign(data.begin() + static_cast<std::size_t>(i) * t * ch,
                          data.begin() + static_cast<std::size_t>(i + 1) * t * ch);
  }
  return out;
}

namespace {

signal::WaveformRecord waveform_from_csv(const std::string& text, double fs) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv: empty file");
  std::vector<std::string> head;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) head.push_back(cell);
  }
  for (std::size_t c = 0; c < head.size(); ++c)
    if (head[c] != "ch" + std::to_string(c))
      throw ValidationError("csv: header must be ch0..ch{C-1}, got '" + head[c] + "'");
  if (head.empty()) throw ValidationError("csv: no channels in header");

  signal::WaveformRecord w;
  w.channels = static_cast<int>(head.size());
  w.fs = fs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    int c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= w.channels) throw ValidationError("csv: row wider than header");
      try {
        w.samples.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("csv: cannot parse value '" + cell + "'");
      }
      ++c;
    }
    if (c != w.channels) throw ValidationError("csv: row narrower than header");
    ++w.frames;
  }
  w.validate();
  return w;
}

}  // namespace

signal::WaveformRecord load_waveform(const std::string& path, double fs_hint) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "TMYO", 4) == 0) {
    const WeightContainer c = WeightContainer::deserialize(bytes);
    const TensorEntry& e = c.entry("waveform");
    if (e.shape.size() != 2) throw ShapeError("waveform tensor must be [T x C]");
    const std::vector<float> data = c.get_f32("waveform");
    signal::WaveformRecord w;
    w.frames = e.shape[0];
    w.channels = e.shape[1];
    w.fs = c.meta.value("fs", fs_hint);
    w.samples.assign(data.begin(), data.end());
    w.validate();
    return w;
  }
  if (fs_hint <= 0.0)
    throw ValidationError("csv input requires a positive --fs sampling rate");
  return waveform_from_csv(std::string(bytes.begin(), bytes.end()), fs_hint);
}

void save_waveform_container(const std::string& path, const signal::WaveformRecord& w) {
  w.validate();
  WeightContainer c;
  c.meta["fs"] = w.fs;
  c.meta["kind"] = "waveform";
  std::vector<float> data(w.samples.begin(), w.samples.end());
  c.put_f32("waveform", {w.frames, w.channels}, data);
  c.save(path);
}

}  // namespace tinymyo
