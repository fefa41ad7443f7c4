#include "getnext/graph/flow_map.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "getnext/core/error.hpp"
#include "getnext/data/io.hpp"

namespace getnext::graph {

core::SparseMatrix normalized_laplacian(const core::SparseMatrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("normalized_laplacian: adjacency must be square");
  const auto& ptr = a.row_ptr();
  const auto& idx = a.col_idx();
  const auto& val = a.values();
  std::vector<std::size_t> out_ptr{0};
  std::vector<std::size_t> out_idx;
  std::vector<double> out_val;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double degree = 0.0;
    for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) degree += val[p];
    const double inv = 1.0 / (degree + 1.0);
    bool diagonal_done = false;
    for (std::size_t p = ptr[i]; p <= ptr[i + 1]; ++p) {
      const bool at_end = p == ptr[i + 1];
      if (!diagonal_done && (at_end || idx[p] >= i)) {
        const bool self = !at_end && idx[p] == i;
        out_idx.push_back(i);
        out_val.push_back(((self ? val[p] : 0.0) + 1.0) * inv);
        diagonal_done = true;
        if (self) continue;
      }
      if (at_end) break;
      out_idx.push_back(idx[p]);
      out_val.push_back(val[p] * inv);
    }
    out_ptr.push_back(out_val.size());
  }
  return core::SparseMatrix(a.rows(), a.cols(), std::move(out_ptr), std::move(out_idx),
                            std::move(out_val));
}

core::Matrix node_features(const std::vector<data::PoiMeta>& meta, std::size_t n_categories) {
  core::Matrix x(meta.size(), 3 + n_categories);
  if (meta.empty()) return x;
  auto [lat_lo, lat_hi] = std::minmax_element(meta.begin(), meta.end(),
                                              [](auto& a, auto& b) { return a.lat < b.lat; });
  auto [lon_lo, lon_hi] = std::minmax_element(meta.begin(), meta.end(),
                                              [](auto& a, auto& b) { return a.lon < b.lon; });
  const double lat0 = lat_lo->lat, lat_span = lat_hi->lat - lat_lo->lat;
  const double lon0 = lon_lo->lon, lon_span = lon_hi->lon - lon_lo->lon;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const auto& m = meta[i];
    if (m.category >= n_categories) throw InputError("node_features: category out of range");
    x(i, 0) = std::log1p(static_cast<double>(m.train_frequency));
    x(i, 1) = lat_span > 0.0 ? (m.lat - lat0) / lat_span : 0.0;
    x(i, 2) = lon_span > 0.0 ? (m.lon - lon0) / lon_span : 0.0;
    x(i, 3 + m.category) = 1.0;
  }
  return x;
}

FlowMap build(const std::vector<data::Trajectory>& train, const data::IdIndex& pois,
              const std::vector<data::PoiMeta>& meta, std::size_t n_categories) {
  if (train.empty()) throw InputError("flow map: train split is empty");
  if (meta.size() != pois.size()) throw InputError("flow map: POI metadata does not match index");
  std::map<std::pair<std::size_t, std::size_t>, double> weights;
  for (const auto& t : train) {
    for (std::size_t k = 0; k + 1 < t.checkins.size(); ++k) {
      const auto from = pois.find(t.checkins[k].poi_id);
      const auto to = pois.find(t.checkins[k + 1].poi_id);
      if (!from || !to) {
        throw InputError("flow map: trajectory " + t.id + " visits a POI outside the index");
      }
      weights[{*from, *to}] += 1.0;
    }
  }
  const std::size_t n = pois.size();
  std::vector<std::size_t> ptr(n + 1, 0);
  std::vector<std::size_t> idx;
  std::vector<double> val;
  for (const auto& [edge, w] : weights) {
    ++ptr[edge.first + 1];
    idx.push_back(edge.second);
    val.push_back(w);
  }
  for (std::size_t i = 0; i < n; ++i) ptr[i + 1] += ptr[i];

  FlowMap m;
  m.node_ids = pois.ids();
  m.adjacency = core::SparseMatrix(n, n, std::move(ptr), std::move(idx), std::move(val));
  m.node_features = node_features(meta, n_categories);
  m.laplacian = normalized_laplacian(m.adjacency);
  return m;
}

FlowMap build(const data::Dataset& d) {
  return build(d.train, d.pois, d.poi_meta, d.categories.size());
}

FlowMapStats stats(const FlowMap& m) {
  FlowMapStats s;
  s.n_nodes = m.n_nodes();
  s.n_edges = m.adjacency.nonzeros();
  double total_weight = 0.0;
  for (double w : m.adjacency.values()) total_weight += w;
  if (s.n_nodes > 0) {
    s.mean_in_degree = static_cast<double>(s.n_edges) / static_cast<double>(s.n_nodes);
    s.mean_out_degree = s.mean_in_degree;
  }
  if (s.n_edges > 0) s.mean_edge_weight = total_weight / static_cast<double>(s.n_edges);

  std::vector<std::set<std::size_t>> nbrs(s.n_nodes);
  const auto& ptr = m.adjacency.row_ptr();
  const auto& idx = m.adjacency.col_idx();
  for (std::size_t i = 0; i < s.n_nodes; ++i) {
    for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) {
      if (idx[p] == i) continue;
      nbrs[i].insert(idx[p]);
      nbrs[idx[p]].insert(i);
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < s.n_nodes; ++i) {
    const std::size_t k = nbrs[i].size();
    if (k < 2) continue;
    std::size_t links = 0;
    for (auto a = nbrs[i].begin(); a != nbrs[i].end(); ++a)
      for (auto b = std::next(a); b != nbrs[i].end(); ++b)
        if (nbrs[*a].contains(*b)) ++links;
    total += 2.0 * static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  if (s.n_nodes > 0) s.avg_clustering_coefficient = total / static_cast<double>(s.n_nodes);
  return s;
}

void write_stats(std::ostream& out, const FlowMapStats& s) {
  out << "n_nodes=" << s.n_nodes << '\n'
      << "n_edges=" << s.n_edges << '\n'
      << "mean_in_degree=" << data::format_double(s.mean_in_degree) << '\n'
      << "mean_out_degree=" << data::format_double(s.mean_out_degree) << '\n'
      << "mean_edge_weight=" << data::format_double(s.mean_edge_weight) << '\n'
      << "avg_clustering_coefficient=" << data::format_double(s.avg_clustering_coefficient)
      << '\n';
}

void write_edge_list(std::ostream& out, const FlowMap& m) {
  out << "src,dst,weight\n";
  const auto& ptr = m.adjacency.row_ptr();
  const auto& idx = m.adjacency.col_idx();
  const auto& val = m.adjacency.values();
  for (std::size_t i = 0; i < m.n_nodes(); ++i)
    for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p)
      out << m.node_ids[i] << ',' << m.node_ids[idx[p]] << ',' << data::format_double(val[p])
          << '\n';
}

std::array<double, 24> category_hour_histogram(const std::vector<data::Trajectory>& train,
                                               const data::IdIndex& categories,
                                               const std::string& category_id) {
  if (!categories.contains(category_id)) {
    throw InputError("unknown category '" + category_id + "'");
  }
  std::array<double, 24> bins{};
  std::int64_t first_day = INT64_MAX, last_day = INT64_MIN;
  for (const auto& t : train) {
    for (const auto& q : t.checkins) {
      first_day = std::min(first_day, data::local_day(q));
      last_day = std::max(last_day, data::local_day(q));
      if (q.category_id == category_id) bins[static_cast<std::size_t>(data::local_hour(q))] += 1.0;
    }
  }
  if (first_day == INT64_MAX) return bins;
  const double days = static_cast<double>(last_day - first_day + 1);
  for (double& b : bins) b /= days;
  return bins;
}

}  // namespace getnext::graph
