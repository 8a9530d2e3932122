#include "tinymyo/planner.hpp"

#include <algorithm>
#include <json.hpp>

namespace tinymyo::planner {

using nlohmann::json;

void OpGraph::validate() const {
  std::vector<int> defined_at(tensor_bytes.size(), -1);
  for (std::size_t i = 0; i < tensor_bytes.size(); ++i)
    if (tensor_bytes[i] <= 0) throw ValidationError("graph: tensor sizes must be positive");
  for (std::size_t step = 0; step < ops.size(); ++step) {
    for (int t : ops[step].inputs) {
      if (t < 0 || t >= static_cast<int>(tensor_bytes.size()))
        throw ValidationError("graph: op '" + ops[step].name + "' reads unknown tensor");
      if (defined_at[t] < 0)
        throw ValidationError("graph: tensor " + std::to_string(t) +
                              " consumed before it is defined");
    }
    for (int t : ops[step].outputs) {
      if (t < 0 || t >= static_cast<int>(tensor_bytes.size()))
        throw ValidationError("graph: op '" + ops[step].name + "' writes unknown tensor");
      if (defined_at[t] >= 0)
        throw ValidationError("graph: tensor " + std::to_string(t) + " defined twice");
      defined_at[t] = static_cast<int>(step);
    }
  }
}

std::vector<TensorLifetime> compute_liveness(const OpGraph& g) {
  g.validate();
  std::vector<TensorLifetime> lt(g.tensor_bytes.size());
  for (std::size_t t = 0; t < lt.size(); ++t) {
    lt[t].tensor_id = static_cast<int>(t);
    lt[t].size_bytes = g.tensor_bytes[t];
    lt[t].def_step = -1;
    lt[t].last_use_step = -1;
  }
  for (std::size_t step = 0; step < g.ops.size(); ++step) {
    for (int t : g.ops[step].outputs) lt[t].def_step = static_cast<int>(step);
    for (int t : g.ops[step].inputs)
      lt[t].last_use_step = std::max(lt[t].last_use_step, static_cast<int>(step));
  }
  const int last = static_cast<int>(g.ops.size()) - 1;
  for (TensorLifetime& t : lt) {
    if (t.def_step < 0) throw ValidationError("graph: tensor never defined");
    if (t.last_use_step < 0) t.last_use_step = last;  // graph output
    t.last_use_step = std::max(t.last_use_step, t.def_step);
  }
  return lt;
}

std::vector<TensorLifetime> compute_liveness_inplace(const OpGraph& g,
                                                     std::vector<int>& root_of) {
  const std::vector<TensorLifetime> raw = compute_liveness(g);
  root_of.resize(g.tensor_bytes.size());
  for (std::size_t t = 0; t < root_of.size(); ++t) root_of[t] = static_cast<int>(t);
  auto find = [&](int t) {
    while (root_of[t] != t) t = root_of[t] = root_of[root_of[t]];
    return t;
  };
  for (std::size_t step = 0; step < g.ops.size(); ++step) {
    const OpNode& op = g.ops[step];
    if (op.inplace_input < 0 || op.outputs.empty()) continue;
    // reuse is legal only when this op is the final consumer of the input
    if (raw[op.inplace_input].last_use_step != static_cast<int>(step)) continue;
    root_of[find(op.outputs.front())] = find(op.inplace_input);
  }
  std::vector<TensorLifetime> merged;
  std::vector<int> slot(g.tensor_bytes.size(), -1);
  for (const TensorLifetime& t : raw) {
    const int root = find(t.tensor_id);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(merged.size());
      TensorLifetime entry = t;
      entry.tensor_id = root;
      merged.push_back(entry);
    }
    TensorLifetime& entry = merged[slot[root]];
    entry.size_bytes = std::max(entry.size_bytes, t.size_bytes);
    entry.def_step = std::min(entry.def_step, t.def_step);
    entry.last_use_step = std::max(entry.last_use_step, t.last_use_step);
  }
  for (std::size_t t = 0; t < root_of.size(); ++t) root_of[t] = find(static_cast<int>(t));
  return merged;
}

namespace {

bool lifetimes_overlap(const TensorLifetime& a, const TensorLifetime& b) {
  return a.def_step <= b.last_use_step && b.def_step <= a.last_use_step;
}

std::int64_t align_up(std::int64_t v, std::int64_t a) { return (v + a - 1) / a * a; }

}  // namespace

ArenaPlan plan_arena(const std::vector<TensorLifetime>& lifetimes, std::int64_t alignment) {
  if (alignment < 1 || (alignment & (alignment - 1)) != 0)
    throw ValidationError("plan_arena: alignment must be a power of two");
  std::vector<const TensorLifetime*> order;
  order.reserve(lifetimes.size());
  for (const TensorLifetime& t : lifetimes) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const TensorLifetime* a, const TensorLifetime* b) {
    if (a->size_bytes != b->size_bytes) return a->size_bytes > b->size_bytes;
    return a->tensor_id < b->tensor_id;
  });

  ArenaPlan plan;
  int max_id = -1;
  for (const TensorLifetime& t : lifetimes) max_id = std::max(max_id, t.tensor_id);
  plan.offsets.assign(max_id + 1, 0);
  std::vector<const TensorLifetime*> placed;
  for (const TensorLifetime* t : order) {
    // occupied intervals among lifetime-overlapping tensors, sorted by offset
    std::vector<std::pair<std::int64_t, std::int64_t>> busy;
    for (const TensorLifetime* p : placed)
      if (lifetimes_overlap(*t, *p))
        busy.emplace_back(plan.offsets[p->tensor_id], plan.offsets[p->tensor_id] + p->size_bytes);
    std::sort(busy.begin(), busy.end());
    std::int64_t candidate = 0;
    for (const auto& [lo, hi] : busy) {
      if (candidate + t->size_bytes <= lo) break;
      candidate = std::max(candidate, align_up(hi, alignment));
    }
    plan.offsets[t->tensor_id] = candidate;
    plan.arena_bytes = std::max(plan.arena_bytes, candidate + t->size_bytes);
    placed.push_back(t);
  }
  return plan;
}

std::vector<PlanViolation> verify_plan(const std::vector<TensorLifetime>& lifetimes,
                                       const ArenaPlan& plan) {
  std::vector<PlanViolation> violations;
  for (std::size_t i = 0; i < lifetimes.size(); ++i) {
    const TensorLifetime& a = lifetimes[i];
    if (plan.offsets[a.tensor_id] + a.size_bytes > plan.arena_bytes)
      violations.push_back({a.tensor_id, a.tensor_id, "tensor exceeds arena size"});
    for (std::size_t j = i + 1; j < lifetimes.size(); ++j) {
      const TensorLifetime& b = lifetimes[j];
      if (!lifetimes_overlap(a, b)) continue;
      const std::int64_t ao = plan.offsets[a.tensor_id], bo = plan.offsets[b.tensor_id];
      if (ao < bo + b.size_bytes && bo < ao + a.size_bytes)
        violations.push_back({a.tensor_id, b.tensor_id, "live ranges share bytes"});
    }
  }
  return violations;
}

std::int64_t liveness_lower_bound(const std::vector<TensorLifetime>& lifetimes) {
  int last = 0;
  for (const TensorLifetime& t : lifetimes) last = std::max(last, t.last_use_step);
  std::int64_t best = 0;
  for (int step = 0; step <= last; ++step) {
    std::int64_t live = 0;
    for (const TensorLifetime& t : lifetimes)
      if (t.def_step <= step && step <= t.last_use_step) live += t.size_bytes;
    best = std::max(best, live);
  }
  return best;
}

OpGraph build_inference_graph(const ModelConfig& cfg, int classes) {
  cfg.validate();
  OpGraph g;
  const std::int64_t act = static_cast<std::int64_t>(cfg.num_tokens()) * cfg.embed_dim;
  const std::int64_t qkv = act * 3;
  const std::int64_t rot = static_cast<std::int64_t>(cfg.num_tokens()) * cfg.embed_dim;
  const std::int64_t scores =
      static_cast<std::int64_t>(cfg.heads) * cfg.num_tokens() * cfg.num_tokens() * 4;
  const std::int64_t probs =
      static_cast<std::int64_t>(cfg.heads) * cfg.num_tokens() * cfg.num_tokens();
  const std::int64_t mlp = static_cast<std::int64_t>(cfg.num_tokens()) * cfg.mlp_dim();

  auto tensor = [&](std::int64_t bytes) {
    g.tensor_bytes.push_back(bytes);
    return static_cast<int>(g.tensor_bytes.size()) - 1;
  };
  auto op = [&](std::string name, std::vector<int> in, std::vector<int> out,
                int inplace = -1) {
    g.ops.push_back({std::move(name), std::move(in), std::move(out), inplace});
  };

  int x = tensor(act);
  op("embed", {}, {x});
  for (int b = 0; b < cfg.layers; ++b) {
    const std::string p = "blk" + std::to_string(b) + ".";
    int t_ln1 = tensor(act);
    op(p + "ln1", {x}, {t_ln1});
    int t_qkv = tensor(qkv);
    op(p + "qkv", {t_ln1}, {t_qkv});
    int t_q = tensor(rot), t_k = tensor(rot);
    op(p + "rope", {t_qkv}, {t_q, t_k});
    int t_s = tensor(scores);
    op(p + "scores", {t_q, t_k}, {t_s});
    int t_p = tensor(probs);
    op(p + "softmax", {t_s}, {t_p});
    int t_c = tensor(act);
    op(p + "av", {t_p, t_qkv}, {t_c});
    int t_o = tensor(act);
    op(p + "out_proj", {t_c}, {t_o});
    int t_r1 = tensor(act);
    op(p + "resid1", {x, t_o}, {t_r1}, x);
    int t_ln2 = tensor(act);
    op(p + "ln2", {t_r1}, {t_ln2});
    int t_h = tensor(mlp);
    op(p + "fc1", {t_ln2}, {t_h});
    int t_g = tensor(mlp);
    op(p + "gelu", {t_h}, {t_g});
    int t_f2 = tensor(act);
    op(p + "fc2", {t_g}, {t_f2});
    int t_r2 = tensor(act);
    op(p + "resid2", {t_r1, t_f2}, {t_r2}, t_r1);
    x = t_r2;
  }
  int t_fin = tensor(act);
  op("final_ln", {x}, {t_fin});
  int t_fused = tensor(static_cast<std::int64_t>(cfg.channels) * cfg.embed_dim);
  op("fuse_pool", {t_fin}, {t_fused});
  if (classes > 0) {
    int t_logits = tensor(static_cast<std::int64_t>(classes) * 4);  // FP32 logits
    op("classifier", {t_fused}, {t_logits});
  }
  return g;
}

std::string graph_to_json(const OpGraph& g) {
  json j;
  j["tensors"] = json::array();
  for (std::size_t t = 0; t < g.tensor_bytes.size(); ++t)
    j["tensors"].push_back({{"id", t}, {"bytes", g.tensor_bytes[t]}});
  j["ops"] = json::array();
  for (const OpNode& op : g.ops)
    j["ops"].push_back({{"name", op.name},
                        {"inputs", op.inputs},
                        {"outputs", op.outputs},
                        {"inplace_of", op.inplace_input}});
  return j.dump(2);
}

OpGraph graph_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("graph json: ") + e.what());
  }
  if (!j.contains("tensors") || !j.contains("ops"))
    throw ValidationError("graph json: missing 'tensors' or 'ops'");
  OpGraph g;
  g.tensor_bytes.assign(j["tensors"].size(), 0);
  for (const json& t : j["tensors"]) {
    const int id = t.at("id").get<int>();
    if (id < 0 || id >= static_cast<int>(g.tensor_bytes.size()))
      throw ValidationError("graph json: tensor id out of range");
    g.tensor_bytes[id] = t.at("bytes").get<std::int64_t>();
  }
  for (const json& o : j["ops"]) {
    OpNode node;
    node.name = o.at("name").get<std::string>();
    node.inputs = o.at("inputs").get<std::vector<int>>();
    node.outputs = o.at("outputs").get<std::vector<int>>();
    node.inplace_input = o.value("inplace_of", -1);
    g.ops.push_back(std::move(node));
  }
  g.validate();
  return g;
}

std::string plan_to_json(const ArenaPlan& plan, const std::vector<TensorLifetime>& lifetimes) {
  json j;
  j["arena_bytes"] = plan.arena_bytes;
  j["offsets"] = json::array();
  for (const TensorLifetime& t : lifetimes)
    j["offsets"].push_back({{"id", t.tensor_id},
                            {"offset", plan.offsets[t.tensor_id]},
                            {"bytes", t.size_bytes},
                            {"def", t.def_step},
                            {"last_use", t.last_use_step}});
  return j.dump(2);
}

}  // namespace tinymyo::planner
