#include "getnext/model/model.hpp"

#include "getnext/core/error.hpp"

namespace getnext::model {

using core::Matrix;
using core::Tape;
using core::Tensor;

void set_ablation(Ablation& a, const std::string& name) {
  if (name == "no_graph") a.no_graph = true;
  else if (name == "no_gcn_use_table") a.no_gcn_use_table = true;
  else if (name == "no_transformer_use_mean") a.no_transformer_use_mean = true;
  else if (name == "no_time_cat") a.no_time_cat = true;
  else if (name == "no_fusion_concat_only") a.no_fusion_concat_only = true;
  else if (name == "single_decoder") a.single_decoder = true;
  else if (name != "none" && !name.empty()) throw InputError("unknown ablation '" + name + "'");
}

std::vector<std::string> ablation_names(const Ablation& a) {
  std::vector<std::string> out;
  if (a.no_graph) out.push_back("no_graph");
  if (a.no_gcn_use_table) out.push_back("no_gcn_use_table");
  if (a.no_transformer_use_mean) out.push_back("no_transformer_use_mean");
  if (a.no_time_cat) out.push_back("no_time_cat");
  if (a.no_fusion_concat_only) out.push_back("no_fusion_concat_only");
  if (a.single_decoder) out.push_back("single_decoder");
  return out;
}

std::optional<Sample> make_sample(const data::Dataset& d, const data::Trajectory& t) {
  const auto user = d.users.find(t.user_id);
  if (!user) return std::nullopt;
  Sample s;
  s.trajectory_id = t.id;
  s.user = *user;
  for (const data::CheckIn& q : t.checkins) {
    const auto p = d.pois.find(q.poi_id);
    if (!p) continue;
    s.poi.push_back(*p);
    s.cat.push_back(d.poi_meta[*p].category);
    s.slot.push_back(slot_time(q));
    s.day_time.push_back(day_fraction(q));
  }
  if (s.length() < 2) return std::nullopt;
  return s;
}

std::vector<Sample> make_samples(const data::Dataset& d,
                                 const std::vector<data::Trajectory>& split) {
  std::vector<Sample> out;
  for (const auto& t : split)
    if (auto s = make_sample(d, t)) out.push_back(std::move(*s));
  return out;
}

std::vector<double> FrozenGraph::transition_row(const core::SparseMatrix& laplacian,
                                                std::size_t poi) const {
  if (source.empty()) return {};
  if (poi >= source.size()) throw InputError("transition row " + std::to_string(poi) + " out of range");
  std::vector<double> row(target.size());
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = source[poi] + target[j];
  const auto& ptr = laplacian.row_ptr();
  const auto& col = laplacian.col_idx();
  const auto& val = laplacian.values();
  // (s_i + t_j)(L_ij + 1): the +1 part is already in row[j].
  for (std::size_t e = ptr[poi]; e < ptr[poi + 1]; ++e)
    row[col[e]] += (source[poi] + target[col[e]]) * val[e];
  return row;
}

Model::Model(const ModelConfig& config, const graph::FlowMap& map, std::size_t n_users,
             std::size_t n_categories, std::uint64_t seed)
    : config_(config), map_(map), n_users_(n_users), n_categories_(n_categories) {
  if (map.n_nodes() == 0) throw InputError("model needs a non-empty flow map");
  const Ablation& ab = config.ablation;
  core::Rng root(seed);
  core::Rng r_graph = root.fork(1), r_ctx = root.fork(2), r_enc = root.fork(3),
            r_head = root.fork(4);

  if (ab.no_graph || ab.no_gcn_use_table) {
    poi_table_ = EmbeddingTable(store_, "poi_emb", map.n_nodes(), config.poi_dim, r_graph);
  } else {
    graph::GcnOptions go;
    go.hidden = config.gcn_hidden;
    go.out_dim = config.poi_dim;
    go.dropout = config.dropout;
    gcn_ = graph::GcnParams(store_, map.feature_dim(), go, r_graph);
  }
  if (!ab.no_graph)
    tam_ = graph::TransitionParams(store_, map.feature_dim(), config.tam_hidden, r_graph);

  ContextOptions co;
  co.poi_dim = config.poi_dim;
  co.time_dim = config.time_dim;
  co.use_fusion = !ab.no_fusion_concat_only;
  co.use_time_category = !ab.no_time_cat;
  context_ = ContextEmbedder(store_, co, n_users, n_categories, r_ctx);

  if (!ab.no_transformer_use_mean) {
    EncoderOptions eo;
    eo.dim = config.embedding_dim();
    eo.layers = config.encoder_layers;
    eo.heads = config.heads;
    eo.ff_dim = config.ff_dim;
    eo.dropout = config.dropout;
    eo.max_len = config.max_len;
    eo.causal_mask = config.causal_mask;
    eo.scaled_attention = config.scaled_attention;
    encoder_ = Encoder(store_, eo, r_enc);
  }
  heads_ = HeadParams(store_, config.embedding_dim(), map.n_nodes(), n_categories, r_head);
}

GraphState Model::graph_forward(Tape& tape, core::Rng& rng, bool train) const {
  GraphState g;
  const Ablation& ab = config_.ablation;
  Tensor features;
  if (!ab.no_graph) features = tape.constant(map_.node_features);
  if (ab.no_graph || ab.no_gcn_use_table)
    g.poi_emb = poi_table_.weights();
  else
    g.poi_emb = graph::gcn_forward(tape, map_.laplacian, features, gcn_, rng, train);
  if (!ab.no_graph) g.parts = graph::transition_parts(tape, features, tam_);
  return g;
}

HeadOutputs Model::forward(Tape& tape, const GraphState& g, const Sample& s, std::size_t len,
                           core::Rng& rng, bool train) const {
  if (len == 0 || len > s.length()) throw ShapeError("forward: bad prefix length");
  if (s.user >= n_users_) throw InputError("forward: unknown user index");
  const std::span<const std::size_t> pois(s.poi.data(), len);
  for (std::size_t p : pois)
    if (p >= n_pois()) throw InputError("forward: POI index out of range");
  Tensor rows = tape.gather_rows(g.poi_emb, pois);
  Tensor x = context_.embed(tape, rows, s.user, std::span(s.cat.data(), len),
                            std::span(s.slot.data(), len));
  Tensor enc = config_.ablation.no_transformer_use_mean ? causal_running_mean(tape, x)
                                                        : encoder_.encode(tape, x, rng, train);
  return heads(tape, enc, heads_);
}

Tensor Model::sample_loss(Tape& tape, const GraphState& g, const Sample& s, core::Rng& rng,
                          bool train) const {
  const std::size_t k = s.length();
  if (k < 2) throw InputError("sample " + s.trajectory_id + " has no supervised position");
  HeadOutputs out = forward(tape, g, s, k - 1, rng, train);
  Targets t;
  t.poi.assign(s.poi.begin() + 1, s.poi.end());
  t.cat.assign(s.cat.begin() + 1, s.cat.end());
  t.time.assign(s.day_time.begin() + 1, s.day_time.end());
  Tensor phi;
  if (g.has_transition() && config_.phi_in_loss)
    phi = graph::transition_rows(tape, map_.laplacian, g.parts,
                                 std::span(s.poi.data(), k - 1));
  LossOptions lo;
  lo.time_weight = config_.time_loss_weight;
  lo.time_and_category = !config_.ablation.single_decoder;
  return loss(tape, out, phi, t, lo);
}

void Model::center_time_head(double mean_target) {
  heads_.time_w.mutable_value().fill(0.0);
  heads_.time_b.mutable_value().fill(mean_target);
}

FrozenGraph Model::freeze() const {
  Tape tape;
  core::Rng unused(0);
  GraphState g = graph_forward(tape, unused, false);
  FrozenGraph f;
  f.poi_emb = g.poi_emb.value();
  if (g.has_transition()) {
    const auto s = g.parts.source.value().values();
    const auto t = g.parts.target.value().values();
    f.source.assign(s.begin(), s.end());
    f.target.assign(t.begin(), t.end());
  }
  return f;
}

GraphState Model::wrap(Tape& tape, const FrozenGraph& g) const {
  GraphState s;
  s.poi_emb = tape.constant(g.poi_emb);
  return s;
}

Matrix Model::score_positions(const FrozenGraph& g, const Sample& s) const {
  const std::size_t k = s.length();
  if (k < 2) throw InputError("sample " + s.trajectory_id + " has no position to score");
  core::Rng unused(0);
  Matrix scores(k - 1, n_pois());
  const bool prefix_safe = config_.causal_mask || config_.ablation.no_transformer_use_mean;
  if (prefix_safe) {
    Tape tape;
    const Matrix out = forward(tape, wrap(tape, g), s, k - 1, unused, false).poi.value();
    scores = out;
  } else {
    // Without the mask later inputs would leak into earlier rows.
    for (std::size_t len = 1; len < k; ++len) {
      Tape tape;
      const Matrix out = forward(tape, wrap(tape, g), s, len, unused, false).poi.value();
      const auto last = out.row(len - 1);
      std::copy(last.begin(), last.end(), scores.row(len - 1).begin());
    }
  }
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const auto phi = g.transition_row(map_.laplacian, s.poi[i]);
    auto row = scores.row(i);
    for (std::size_t j = 0; j < phi.size(); ++j) row[j] += phi[j];
  }
  return scores;
}

std::vector<double> Model::score_next(const FrozenGraph& g, const Sample& s) const {
  const std::size_t k = s.length();
  if (k == 0) throw InputError("score_next: empty prefix");
  core::Rng unused(0);
  Tape tape;
  const Matrix out = forward(tape, wrap(tape, g), s, k, unused, false).poi.value();
  const auto last = out.row(k - 1);
  std::vector<double> score(last.begin(), last.end());
  const auto phi = g.transition_row(map_.laplacian, s.poi[k - 1]);
  for (std::size_t j = 0; j < phi.size(); ++j) score[j] += phi[j];
  return score;
}

}  // namespace getnext::model
