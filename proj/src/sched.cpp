#include "tinymyo/sched.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

namespace tinymyo::sched {

using nlohmann::json;

void MemoryHierarchy::validate() const {
  if (l1_bytes <= 0 || l2_bytes <= 0 || l1_bytes >= l2_bytes)
    throw ValidationError("hierarchy: need 0 < l1 < l2");
  if (bw_l3_l2 <= 0 || bw_l2_l1 <= 0) throw ValidationError("hierarchy: bandwidths must be positive");
  if (worker_cores < 1 || macs_per_core_cycle <= 0)
    throw ValidationError("hierarchy: compute throughput must be positive");
  if (clock_hz <= 0 || avg_power_w <= 0)
    throw ValidationError("hierarchy: clock and power must be positive");
}

std::int64_t round_to_millions(std::int64_t v) {
  return div_round(v, 1000000);
}

int percent_share(std::int64_t part, std::int64_t total) {
  return static_cast<int>(div_round(part * 100, total));
}

MacBreakdown count_macs(const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t n = cfg.num_tokens();
  const std::int64_t d = cfg.embed_dim;
  const std::int64_t m = cfg.mlp_dim();
  MacBreakdown b;
  b.qkv = n * d * d * 3;
  b.qk_scores = n * n * d;
  b.av_context = n * n * d;
  b.out_proj = n * d * d;
  b.fc1 = n * d * m;
  b.fc2 = n * d * m;
  b.layers = cfg.layers;
  return b;
}

std::vector<LayerShape> model_layers(const ModelConfig& cfg) {
  cfg.validate();
  const int n = cfg.num_tokens();
  const int d = cfg.embed_dim;
  const int dh = cfg.head_dim();
  const int h = cfg.heads;
  const int m = cfg.mlp_dim();
  std::vector<LayerShape> layers;
  for (int b = 0; b < cfg.layers; ++b) {
    const std::string p = "blk" + std::to_string(b) + ".";
    layers.push_back({p + "qkv", n, d, 3 * d, static_cast<std::int64_t>(3) * d * d, 0, 1,
                      static_cast<std::int64_t>(n) * d * 3 * d});
    layers.push_back({p + "qk_scores", h * n, dh, n, 0,
                      static_cast<std::int64_t>(n) * d, 4,
                      static_cast<std::int64_t>(h) * n * dh * n});
    layers.push_back({p + "av_context", h * n, n, dh, 0,
                      static_cast<std::int64_t>(n) * d, 1,
                      static_cast<std::int64_t>(h) * n * n * dh});
    layers.push_back({p + "out_proj", n, d, d, static_cast<std::int64_t>(d) * d, 0, 1,
                      static_cast<std::int64_t>(n) * d * d});
    layers.push_back({p + "fc1", n, d, m, static_cast<std::int64_t>(m) * d, 0, 1,
                      static_cast<std::int64_t>(n) * d * m});
    layers.push_back({p + "fc2", n, m, d, static_cast<std::int64_t>(d) * m, 0, 1,
                      static_cast<std::int64_t>(n) * m * d});
  }
  return layers;
}

namespace {

std::int64_t ceil_div_f(std::int64_t bytes, double rate) {
  if (bytes == 0) return 0;
  return static_cast<std::int64_t>(std::ceil(static_cast<double>(bytes) / rate));
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// L2 slab working set for a weighted layer: doubled weight slab plus the
// resident input and the slab's output stripe.
std::int64_t weighted_slab_ws(const LayerShape& s, int cols) {
  return static_cast<std::int64_t>(s.in_dim) * cols +
         static_cast<std::int64_t>(s.rows) * s.in_dim +
         static_cast<std::int64_t>(s.rows) * cols * s.out_elem_bytes;
}

// Row-block slab for activation-only layers (attention score/context).
std::int64_t rowblock_slab_ws(const LayerShape& s, int rows) {
  return static_cast<std::int64_t>(rows) * s.in_dim + s.stationary_bytes +
         static_cast<std::int64_t>(rows) * s.out_dim * s.out_elem_bytes;
}

std::int64_t tile_ws(const LayerShape& s, int tr, int tc) {
  return static_cast<std::int64_t>(tr) * s.in_dim +
         static_cast<std::int64_t>(s.in_dim) * tc +
         static_cast<std::int64_t>(tr) * tc * s.out_elem_bytes;
}

}  // namespace

TilePlan plan_tiles(const ModelConfig& cfg, const MemoryHierarchy& hier) {
  hier.validate();
  TilePlan plan;
  for (const LayerShape& shape : model_layers(cfg)) {
    LayerTilePlan lp;
    lp.shape = shape;

    int slab_rows = shape.rows;
    if (shape.weight_bytes > 0) {
      // stream weight columns from external memory
      int cols = shape.out_dim;
      while (cols >= 1 && 2 * weighted_slab_ws(shape, cols) > hier.l2_bytes) --cols;
      if (cols < 1)
        throw ValidationError("plan_tiles: layer '" + shape.name +
                              "' does not fit the shared memory budget");
      lp.slab_cols = cols;
      lp.slab_count = ceil_div(shape.out_dim, cols);
      lp.slab_transfer_bytes = static_cast<std::int64_t>(shape.in_dim) * cols;
      lp.slab_working_set = weighted_slab_ws(shape, cols);
    } else {
      // everything already on-chip: split output rows instead
      int rows = shape.rows;
      while (rows >= 1 && 2 * rowblock_slab_ws(shape, rows) > hier.l2_bytes) --rows;
      if (rows < 1)
        throw ValidationError("plan_tiles: layer '" + shape.name +
                              "' does not fit the shared memory budget");
      slab_rows = rows;
      lp.slab_cols = shape.out_dim;
      lp.slab_count = ceil_div(shape.rows, rows);
      lp.slab_transfer_bytes = 0;
      lp.slab_working_set = rowblock_slab_ws(shape, rows);
    }

    // largest tile block that double-buffers within local memory; tile_ws is
    // linear in tr for fixed tc, so each tc gives its best tr directly
    std::int64_t best = 0;
    for (int tc = 1; tc <= lp.slab_cols; ++tc) {
      const std::int64_t budget = hier.l1_bytes / 2 - static_cast<std::int64_t>(shape.in_dim) * tc;
      if (budget <= 0) break;
      const std::int64_t per_row = shape.in_dim + static_cast<std::int64_t>(tc) * shape.out_elem_bytes;
      int tr = static_cast<int>(std::min<std::int64_t>(budget / per_row, slab_rows));
      if (tr < 1) continue;
      const std::int64_t product = static_cast<std::int64_t>(tr) * tc;
      if (product > best || (product == best && tr > lp.tile_rows)) {
        best = product;
        lp.tile_rows = tr;
        lp.tile_cols = tc;
      }
    }
    if (best == 0)
      throw ValidationError("plan_tiles: layer '" + shape.name +
                            "' has no tile fitting the local memory budget");
    lp.tiles_per_slab = ceil_div(slab_rows, lp.tile_rows) * ceil_div(lp.slab_cols, lp.tile_cols);
    lp.tile_working_set = tile_ws(shape, lp.tile_rows, lp.tile_cols);
    lp.tile_transfer_bytes = lp.tile_working_set;  // operands in, output back
    plan.layers.push_back(lp);
  }
  return plan;
}

std::int64_t pipeline_span(int units, std::int64_t transfer, std::int64_t compute) {
  if (units <= 0) return 0;
  return transfer + (units - 1) * std::max(transfer, compute) + compute;
}

TileSchedule simulate(const TilePlan& plan, const MemoryHierarchy& hier) {
  hier.validate();
  TileSchedule sched;
  const double mac_rate = hier.worker_cores * hier.macs_per_core_cycle;
  std::int64_t now = 0;

  for (const LayerTilePlan& lp : plan.layers) {
    const int k_s = lp.slab_count;
    const std::int64_t t_slab = ceil_div_f(lp.slab_transfer_bytes, hier.bw_l3_l2);
    const std::int64_t t_tile = ceil_div_f(lp.tile_transfer_bytes, hier.bw_l2_l1);
    const std::int64_t macs_per_slab = div_round(lp.shape.macs, k_s);
    const std::int64_t macs_per_tile = div_round(macs_per_slab, lp.tiles_per_slab);
    const std::int64_t c_tile = ceil_div_f(macs_per_tile, mac_rate);
    const std::int64_t c_slab = pipeline_span(lp.tiles_per_slab, t_tile, c_tile);

    // slab-level double buffer
    std::vector<std::int64_t> tr_end(k_s), comp_start(k_s), comp_end(k_s);
    std::int64_t prev_tr_end = now;
    for (int i = 0; i < k_s; ++i) {
      std::int64_t tr_start;
      if (i == 0) {
        tr_start = now;
      } else {
        tr_start = std::max(comp_start[i - 1], prev_tr_end);
      }
      tr_end[i] = tr_start + t_slab;
      comp_start[i] = std::max(tr_end[i], i > 0 ? comp_end[i - 1] : now);
      comp_end[i] = comp_start[i] + c_slab;
      if (t_slab > 0)
        sched.events.push_back({EventKind::transfer_l3_l2, lp.shape.name, i, -1,
                                lp.slab_transfer_bytes, 0, tr_start, tr_end[i]});
      prev_tr_end = tr_end[i];
    }

    // tile-level double buffer inside each slab's compute window
    for (int i = 0; i < k_s; ++i) {
      const int k_t = lp.tiles_per_slab;
      std::int64_t tile_tr_prev_end = comp_start[i];
      std::int64_t tile_comp_prev_end = comp_start[i];
      std::int64_t tile_comp_prev_start = comp_start[i];
      for (int t = 0; t < k_t; ++t) {
        std::int64_t tr_start =
            t == 0 ? comp_start[i] : std::max(tile_comp_prev_start, tile_tr_prev_end);
        std::int64_t tr_fin = tr_start + t_tile;
        std::int64_t cs = std::max(tr_fin, tile_comp_prev_end);
        std::int64_t ce = cs + c_tile;
        if (t_tile > 0)
          sched.events.push_back({EventKind::transfer_l2_l1, lp.shape.name, i, t,
                                  lp.tile_transfer_bytes, 0, tr_start, tr_fin});
        sched.events.push_back(
            {EventKind::compute, lp.shape.name, i, t, 0, macs_per_tile, cs, ce});
        tile_tr_prev_end = tr_fin;
        tile_comp_prev_end = ce;
        tile_comp_prev_start = cs;
      }
    }
    now = comp_end.empty() ? now : comp_end.back();
  }

  sched.total_cycles = now;
  sched.seconds = now / hier.clock_hz;
  sched.estimated_energy_j = sched.seconds * hier.avg_power_w;
  return sched;
}

std::vector<std::string> audit_resource_exclusivity(const TileSchedule& s) {
  std::vector<std::string> problems;
  for (EventKind kind :
       {EventKind::transfer_l3_l2, EventKind::transfer_l2_l1, EventKind::compute}) {
    std::vector<const ScheduleEvent*> evs;
    for (const ScheduleEvent& e : s.events)
      if (e.kind == kind) evs.push_back(&e);
    std::sort(evs.begin(), evs.end(),
              [](const ScheduleEvent* a, const ScheduleEvent* b) { return a->start < b->start; });
    for (std::size_t i = 1; i < evs.size(); ++i)
      if (evs[i]->start < evs[i - 1]->end)
        problems.push_back("resource overlap: " + evs[i - 1]->layer + " and " + evs[i]->layer);
  }
  return problems;
}

std::vector<std::string> audit_dependencies(const TileSchedule& s) {
  std::vector<std::string> problems;
  // compute on a unit must start at or after the matching transfer ends
  for (const ScheduleEvent& c : s.events) {
    if (c.kind != EventKind::compute) continue;
    for (const ScheduleEvent& t : s.events) {
      if (t.kind == EventKind::transfer_l3_l2 && t.layer == c.layer && t.slab == c.slab &&
          c.start < t.end)
        problems.push_back("compute before slab transfer: " + c.layer + " slab " +
                           std::to_string(c.slab));
      if (t.kind == EventKind::transfer_l2_l1 && t.layer == c.layer && t.slab == c.slab &&
          t.tile == c.tile && c.start < t.end)
        problems.push_back("compute before tile transfer: " + c.layer + " tile " +
                           std::to_string(c.tile));
    }
  }
  return problems;
}

std::vector<std::string> audit_capacity(const TilePlan& plan, const MemoryHierarchy& hier) {
  std::vector<std::string> problems;
  for (const LayerTilePlan& lp : plan.layers) {
    if (2 * lp.slab_working_set > hier.l2_bytes)
      problems.push_back("slab working set exceeds L2: " + lp.shape.name);
    if (2 * lp.tile_working_set > hier.l1_bytes)
      problems.push_back("tile working set exceeds L1: " + lp.shape.name);
  }
  return problems;
}

DeploymentReport report_deployment(const ModelConfig& cfg, const MemoryHierarchy& hier) {
  DeploymentReport rep;
  rep.macs = count_macs(cfg);
  const TileSchedule s = simulate(plan_tiles(cfg, hier), hier);
  rep.total_cycles = s.total_cycles;
  rep.seconds = s.seconds;
  rep.energy_j = s.estimated_energy_j;
  rep.avg_power_w = hier.avg_power_w;
  return rep;
}

std::string schedule_to_json(const TileSchedule& s) {
  json j;
  j["total_cycles"] = s.total_cycles;
  j["seconds"] = s.seconds;
  j["estimated_energy_j"] = s.estimated_energy_j;
  j["events"] = json::array();
  for (const ScheduleEvent& e : s.events) {
    const char* kind = e.kind == EventKind::compute
                           ? "compute"
                           : (e.kind == EventKind::transfer_l3_l2 ? "transfer_l3_l2"
                                                                  : "transfer_l2_l1");
    j["events"].push_back({{"kind", kind},
                           {"layer", e.layer},
                           {"slab", e.slab},
                           {"tile", e.tile},
                           {"bytes", e.bytes},
                           {"macs", e.macs},
                           {"start", e.start},
                           {"end", e.end}});
  }
  return j.dump(2);
}

std::string schedule_to_chrome_trace(const TileSchedule& s) {
  json events = json::array();
  for (const ScheduleEvent& e : s.events) {
    int tid = e.kind == EventKind::transfer_l3_l2 ? 0 : (e.kind == EventKind::transfer_l2_l1 ? 1 : 2);
    const char* tname = tid == 0 ? "dma_l3_l2" : (tid == 1 ? "dma_l2_l1" : "cluster");
    events.push_back({{"name", e.layer + (e.kind == EventKind::compute ? ".compute" : ".dma")},
                      {"cat", tname},
                      {"ph", "X"},
                      {"ts", e.start},
                      {"dur", e.end - e.start},
                      {"pid", 0},
                      {"tid", tid}});
  }
  json j;
  j["traceEvents"] = events;
  j["displayTimeUnit"] = "ms";
  return j.dump(2);
}

}  // namespace tinymyo::sched
