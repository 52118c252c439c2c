#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace agcnet {

struct WeightedEdge {
  int src = 0;
  int dst = 0;
  double weight = 0.0;
};

/// How to treat repeated (i,j) / (j,i) entries in an edge list.
enum class DuplicateEdgePolicy {
  Error,  ///< duplicates must carry the same weight, otherwise reject
  Sum,    ///< duplicates are accumulated
};

/// Static undirected road graph with a dense symmetric adjacency.
/// Immutable after construction; safe for concurrent reads.
struct RoadGraph {
  int node_count = 0;
  std::vector<WeightedEdge> edges;
  Eigen::MatrixXd adjacency;  // N x N, symmetric, zero diagonal, entries >= 0

  Eigen::VectorXd degrees() const { return adjacency.rowwise().sum(); }
};

/// Assembles a symmetric adjacency from weighted edge records.
/// Rejects out-of-range indices, negative weights, nonzero self-loops and
/// (under DuplicateEdgePolicy::Error) conflicting duplicate weights.
RoadGraph build_from_edge_list(const std::vector<WeightedEdge>& edges, int node_count,
                               DuplicateEdgePolicy policy = DuplicateEdgePolicy::Error);

/// I_N - D^{-1/2} A D^{-1/2}. Zero-degree nodes get D^{-1/2} entry 0, which
/// leaves their row/column equal to the identity row.
Eigen::MatrixXd normalized_laplacian(const RoadGraph& g);

/// D - A. Not consumed by the model; provided alongside the normalized form.
Eigen::MatrixXd combinatorial_laplacian(const RoadGraph& g);

/// D^{-1/2} A D^{-1/2} (the diffusion part of the normalized Laplacian).
Eigen::MatrixXd normalized_adjacency(const RoadGraph& g);

/// Eigensystem of a normalized Laplacian: ascending eigenvalues in [0, 2]
/// and orthonormal eigenvectors with a deterministic sign convention
/// (first component of magnitude > 1e-12 is positive).
struct LaplacianSpectrum {
  Eigen::MatrixXd eigenvectors;  // U, one eigenvector per column
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd laplacian;     // the decomposed matrix

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

/// Dense symmetric eigendecomposition at 64-bit precision. The input must be
/// symmetric within 1e-10 max-abs. Eigenvalue noise within 1e-10 outside
/// [0, 2] is clamped onto the interval; anything further out is kept as-is.
LaplacianSpectrum eigendecompose(const Eigen::MatrixXd& laplacian);

bool is_connected(const RoadGraph& g);

/// Edge-list text file: `src,dst,weight` per line, optional `src,dst,weight`
/// header, zero-based indices, UTF-8, LF endings.
std::vector<WeightedEdge> load_edge_list(const std::string& path);
void save_edge_list(const std::string& path, const std::vector<WeightedEdge>& edges);

RoadGraph load_graph(const std::string& path, int node_count,
                     DuplicateEdgePolicy policy = DuplicateEdgePolicy::Error);

}  // namespace agcnet
