#pragma once

// The complete recommender: graph-derived POI embeddings, context fusion,
// sequence encoder, heads and transition adjustment, with ablation switches.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "getnext/core/params.hpp"
#include "getnext/core/tensor.hpp"
#include "getnext/data/dataset.hpp"
#include "getnext/graph/flow_map.hpp"
#include "getnext/graph/gcn.hpp"
#include "getnext/model/embeddings.hpp"
#include "getnext/model/seq_model.hpp"

namespace getnext::model {

struct Ablation {
  bool no_graph = false;                 // POI table, no transition map
  bool no_gcn_use_table = false;         // POI table, transition map kept
  bool no_transformer_use_mean = false;  // causal running mean instead of the encoder
  bool no_time_cat = false;              // time-category half replaced by zeros
  bool no_fusion_concat_only = false;    // fusion layers replaced by concatenation
  bool single_decoder = false;           // time and category losses dropped

  bool any() const {
    return no_graph || no_gcn_use_table || no_transformer_use_mean || no_time_cat ||
           no_fusion_concat_only || single_decoder;
  }
  friend bool operator==(const Ablation&, const Ablation&) = default;
};

// Accepts the flag names above. Throws InputError otherwise.
void set_ablation(Ablation& a, const std::string& name);
std::vector<std::string> ablation_names(const Ablation& a);

struct ModelConfig {
  std::size_t poi_dim = 128;
  std::size_t time_dim = 32;
  std::vector<std::size_t> gcn_hidden = {32, 64, 128};
  std::size_t tam_hidden = 128;
  std::size_t encoder_layers = 2;
  std::size_t heads = 2;
  std::size_t ff_dim = 1024;
  std::size_t max_len = 512;
  double dropout = 0.3;
  double time_loss_weight = 10.0;
  bool causal_mask = true;
  bool scaled_attention = false;
  bool phi_in_loss = true;  // add transition rows to the POI logits during training
  Ablation ablation;

  std::size_t embedding_dim() const { return 2 * (poi_dim + time_dim); }
};

// One trajectory in index space. Inputs are positions 0..k-2, targets 1..k-1.
struct Sample {
  std::string trajectory_id;
  std::size_t user = 0;
  std::vector<std::size_t> poi;
  std::vector<std::size_t> cat;
  std::vector<double> slot;      // time2vec input
  std::vector<double> day_time;  // time target

  std::size_t length() const { return poi.size(); }
};

// Drops check-ins at POIs outside the train index. Returns nothing when the
// user is unknown or fewer than two check-ins remain.
std::optional<Sample> make_sample(const data::Dataset& d, const data::Trajectory& t);
std::vector<Sample> make_samples(const data::Dataset& d,
                                 const std::vector<data::Trajectory>& split);

// Forward state shared by every sequence on one tape.
struct GraphState {
  core::Tensor poi_emb;             // N x poi_dim
  graph::TransitionParts parts;     // undefined when the map is ablated
  bool has_transition() const { return parts.source.defined(); }
};

// Graph outputs evaluated once for inference.
struct FrozenGraph {
  core::Matrix poi_emb;
  std::vector<double> source, target;  // empty when the map is ablated

  // Row `poi` of the transition map, or empty.
  std::vector<double> transition_row(const core::SparseMatrix& laplacian, std::size_t poi) const;
};

class Model {
 public:
  Model(const ModelConfig& config, const graph::FlowMap& map, std::size_t n_users,
        std::size_t n_categories, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  core::ParameterStore& params() noexcept { return store_; }
  const core::ParameterStore& params() const noexcept { return store_; }
  const graph::FlowMap& map() const noexcept { return map_; }
  std::size_t n_pois() const noexcept { return map_.n_nodes(); }
  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_categories() const noexcept { return n_categories_; }

  GraphState graph_forward(core::Tape& tape, core::Rng& rng, bool train) const;

  // Head outputs for the first `len` check-ins of the sample.
  HeadOutputs forward(core::Tape& tape, const GraphState& g, const Sample& s, std::size_t len,
                      core::Rng& rng, bool train) const;

  // Composite loss over every position of the sample.
  core::Tensor sample_loss(core::Tape& tape, const GraphState& g, const Sample& s,
                           core::Rng& rng, bool train) const;

  // Zero time-head weights and a bias at the mean time target, so the
  // initial time prediction is the target mean.
  void center_time_head(double mean_target);

  FrozenGraph freeze() const;

  // (k-1) x N adjusted scores; row i ranks candidates for check-in i + 1
  // given check-ins 0..i.
  core::Matrix score_positions(const FrozenGraph& g, const Sample& s) const;

  // Adjusted scores for the check-in after the whole sample.
  std::vector<double> score_next(const FrozenGraph& g, const Sample& s) const;

 private:
  GraphState wrap(core::Tape& tape, const FrozenGraph& g) const;

  ModelConfig config_;
  graph::FlowMap map_;
  std::size_t n_users_;
  std::size_t n_categories_;
  core::ParameterStore store_;

  EmbeddingTable poi_table_;
  graph::GcnParams gcn_;
  graph::TransitionParams tam_;
  ContextEmbedder context_;
  Encoder encoder_;
  HeadParams heads_;
};

}  // namespace getnext::model
