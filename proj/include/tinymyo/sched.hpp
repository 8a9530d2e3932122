#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tinymyo/config.hpp"

namespace tinymyo::sched {

// Cost-model constants, not measured hardware facts. Defaults describe the
// target device family: 1.5 MB shared L2, 128 kB local L1, 8 worker cores.
struct MemoryHierarchy {
  std::int64_t l2_bytes = 1572864;
  std::int64_t l1_bytes = 131072;
  double bw_l3_l2 = 8.0;    // bytes per cycle
  double bw_l2_l1 = 32.0;   // bytes per cycle
  int worker_cores = 8;
  double macs_per_core_cycle = 8.0;  // int8 SIMD assumption, model parameter
  double clock_hz = 370e6;
  double avg_power_w = 0.03645;

  void validate() const;
};

struct MacBreakdown {
  std::int64_t qkv = 0;
  std::int64_t qk_scores = 0;
  std::int64_t av_context = 0;
  std::int64_t out_proj = 0;
  std::int64_t fc1 = 0;
  std::int64_t fc2 = 0;
  int layers = 0;

  std::int64_t block_total() const {
    return qkv + qk_scores + av_context + out_proj + fc1 + fc2;
  }
  std::int64_t model_total() const { return block_total() * layers; }
};

std::int64_t round_to_millions(std::int64_t v);
int percent_share(std::int64_t part, std::int64_t total);

MacBreakdown count_macs(const ModelConfig& cfg);

// One matmul-shaped stage of a block: rows x in -> out, weights streamed
// from external memory when weight_bytes > 0.
struct LayerShape {
  std::string name;
  int rows = 0;
  int in_dim = 0;
  int out_dim = 0;
  std::int64_t weight_bytes = 0;  // 0 for activation-only stages
  std::int64_t stationary_bytes = 0;  // second operand resident in L2
  int out_elem_bytes = 1;             // 4 for the int32 score tensor
  std::int64_t macs = 0;
};

struct LayerTilePlan {
  LayerShape shape;
  int slab_cols = 0;      // output columns per L3->L2 slab
  int slab_count = 0;
  std::int64_t slab_transfer_bytes = 0;  // streamed per slab (0 if resident)
  std::int64_t slab_working_set = 0;     // bytes that must fit doubled in L2
  int tile_rows = 0;      // L2->L1 tile block
  int tile_cols = 0;
  int tiles_per_slab = 0;
  std::int64_t tile_transfer_bytes = 0;
  std::int64_t tile_working_set = 0;     // bytes that must fit doubled in L1
};

struct TilePlan {
  std::vector<LayerTilePlan> layers;
};

TilePlan plan_tiles(const ModelConfig& cfg, const MemoryHierarchy& hier);

std::vector<LayerShape> model_layers(const ModelConfig& cfg);

enum class EventKind { transfer_l3_l2, transfer_l2_l1, compute };

struct ScheduleEvent {
  EventKind kind;
  std::string layer;
  int slab = 0;
  int tile = -1;            // -1 for slab-level transfers
  std::int64_t bytes = 0;   // transfers
  std::int64_t macs = 0;    // compute
  std::int64_t start = 0;   // cycles
  std::int64_t end = 0;
};

struct TileSchedule {
  std::vector<ScheduleEvent> events;
  std::int64_t total_cycles = 0;
  double seconds = 0.0;
  double estimated_energy_j = 0.0;
};

// Span of a double-buffered pipeline of `units` equal stages: the transfer
// of stage N+1 starts together with compute of stage N.
//   units*T pure-transfer, units*C pure-compute, (units+1)*T when T == C.
std::int64_t pipeline_span(int units, std::int64_t transfer, std::int64_t compute);

// Double-buffered pipeline at both levels: transfer of unit N+1 starts with
// compute of unit N; compute never starts before its own transfer ends.
TileSchedule simulate(const TilePlan& plan, const MemoryHierarchy& hier);

// Audits used by tests: empty result means the schedule is sound.
std::vector<std::string> audit_resource_exclusivity(const TileSchedule& s);
std::vector<std::string> audit_dependencies(const TileSchedule& s);
std::vector<std::string> audit_capacity(const TilePlan& plan, const MemoryHierarchy& hier);

struct DeploymentReport {
  MacBreakdown macs;
  std::int64_t total_cycles = 0;
  double seconds = 0.0;
  double energy_j = 0.0;
  double avg_power_w = 0.0;
  // measured figures from the reference hardware run, echoed for context
  double paper_seconds = 12.2;
  double paper_energy_j = 0.44;
  double paper_power_w = 0.03645;
};

DeploymentReport report_deployment(const ModelConfig& cfg, const MemoryHierarchy& hier);

std::string schedule_to_json(const TileSchedule& s);
std::string schedule_to_chrome_trace(const TileSchedule& s);

}  // namespace tinymyo::sched
