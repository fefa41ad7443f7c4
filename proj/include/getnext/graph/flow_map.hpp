#pragma once

// Trajectory flow map: a weighted directed graph over train-split POIs whose
// edge (i, j) counts how often POI j directly follows POI i in a train
// trajectory, with per-node attribute features.

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "getnext/core/matrix.hpp"
#include "getnext/core/sparse.hpp"
#include "getnext/data/dataset.hpp"

namespace getnext::graph {

struct FlowMap {
  std::vector<std::string> node_ids;  // dense index -> poi_id
  core::SparseMatrix adjacency;       // N x N consecutive-visit counts
  core::Matrix node_features;         // N x (3 + n_categories)
  core::SparseMatrix laplacian;       // (D + I)^-1 (A + I)

  std::size_t n_nodes() const noexcept { return node_ids.size(); }
  std::size_t feature_dim() const noexcept { return node_features.cols(); }
};

// Nodes are the POIs of `pois` (the train-split index); every train check-in
// must refer to one of them.
FlowMap build(const std::vector<data::Trajectory>& train, const data::IdIndex& pois,
              const std::vector<data::PoiMeta>& meta, std::size_t n_categories);
FlowMap build(const data::Dataset& d);

// Row-normalized propagation operator (D + I)^-1 (A + I) with D the out-degree
// (row-sum) matrix.
core::SparseMatrix normalized_laplacian(const core::SparseMatrix& adjacency);

// [log(1 + freq), min-max lat, min-max lon, one-hot category]
core::Matrix node_features(const std::vector<data::PoiMeta>& meta, std::size_t n_categories);

struct FlowMapStats {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  double mean_in_degree = 0.0;
  double mean_out_degree = 0.0;
  double mean_edge_weight = 0.0;
  double avg_clustering_coefficient = 0.0;
};

// Degrees count distinct edges. Clustering is the mean local coefficient of
// the undirected simple graph (self-loops dropped, directions merged); nodes
// of degree < 2 contribute 0.
FlowMapStats stats(const FlowMap& m);

// key=value lines
void write_stats(std::ostream& out, const FlowMapStats& s);
// src,dst,weight with POI ids, ordered by (src index, dst index)
void write_edge_list(std::ostream& out, const FlowMap& m);

// Check-ins of the category per local hour, divided by the number of local
// days the trajectories span. Throws InputError for a category not in
// `categories`.
std::array<double, 24> category_hour_histogram(const std::vector<data::Trajectory>& train,
                                               const data::IdIndex& categories,
                                               const std::string& category_id);

}  // namespace getnext::graph
