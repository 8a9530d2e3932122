#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tinymyo/config.hpp"

namespace tinymyo::planner {

struct OpNode {
  std::string name;
  std::vector<int> inputs;   // tensor ids consumed
  std::vector<int> outputs;  // tensor ids defined
  int inplace_input = -1;    // input the op may overwrite, -1 if none
};

struct OpGraph {
  std::vector<OpNode> ops;                  // topological execution order
  std::vector<std::int64_t> tensor_bytes;   // indexed by tensor id

  void validate() const;  // single definition, defined-before-use, sizes > 0
};

struct TensorLifetime {
  int tensor_id = 0;
  std::int64_t size_bytes = 0;
  int def_step = 0;
  int last_use_step = 0;
};

struct ArenaPlan {
  std::vector<std::int64_t> offsets;  // indexed by tensor id
  std::int64_t arena_bytes = 0;
};

struct PlanViolation {
  int tensor_a = 0;
  int tensor_b = 0;
  std::string reason;
};

// def = producer step; last use = max consumer step; graph outputs (tensors
// nobody consumes) live to the final op.
std::vector<TensorLifetime> compute_liveness(const OpGraph& g);

// Optional in-place modeling (off by default): when an op is the last
// consumer of its declared in-place input, the output shares that buffer.
// Merged tensors collapse onto one lifetime entry under the root id;
// root_of maps every tensor to its representative.
std::vector<TensorLifetime> compute_liveness_inplace(const OpGraph& g,
                                                     std::vector<int>& root_of);

// Greedy first fit, sizes descending, ties by tensor id; offsets aligned.
ArenaPlan plan_arena(const std::vector<TensorLifetime>& lifetimes, std::int64_t alignment = 4);

// Brute-force pairwise disjointness check; the planner's independent oracle.
std::vector<PlanViolation> verify_plan(const std::vector<TensorLifetime>& lifetimes,
                                       const ArenaPlan& plan);

// Largest sum of simultaneously live tensor sizes over all steps.
std::int64_t liveness_lower_bound(const std::vector<TensorLifetime>& lifetimes);

// Whole-tensor inference graph of the encoder + fusion + classifier, int8
// activations, int32 attention scores.
OpGraph build_inference_graph(const ModelConfig& cfg, int classes);

std::string graph_to_json(const OpGraph& g);
OpGraph graph_from_json(const std::string& text);
std::string plan_to_json(const ArenaPlan& plan, const std::vector<TensorLifetime>& lifetimes);

}  // namespace tinymyo::planner
