#include "core/graph.hpp"

#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "core/errors.hpp"

namespace agcnet {

namespace {

std::string edge_str(const WeightedEdge& e) {
  std::ostringstream os;
  os << "(" << e.src << "," << e.dst << "," << e.weight << ")";
  return os.str();
}

}  // namespace

RoadGraph build_from_edge_list(const std::vector<WeightedEdge>& edges, int node_count,
                               DuplicateEdgePolicy policy) {
  if (node_count <= 0) {
    throw std::invalid_argument("node_count must be positive, got " + std::to_string(node_count));
  }
  RoadGraph g;
  g.node_count = node_count;
  g.edges = edges;
  g.adjacency = Eigen::MatrixXd::Zero(node_count, node_count);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(node_count, node_count, false);

  for (const auto& e : edges) {
    if (e.src < 0 || e.src >= node_count || e.dst < 0 || e.dst >= node_count) {
      throw std::invalid_argument("edge index out of range: " + edge_str(e));
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw std::invalid_argument("edge weight must be finite and >= 0: " + edge_str(e));
    }
    if (e.src == e.dst) {
      if (e.weight != 0.0) {
        throw std::invalid_argument("self-loop with nonzero weight: " + edge_str(e));
      }
      continue;  // weight-0 self-loop contributes nothing
    }
    if (seen(e.src, e.dst)) {
      if (policy == DuplicateEdgePolicy::Error) {
        if (g.adjacency(e.src, e.dst) != e.weight) {
          throw std::invalid_argument("conflicting duplicate weight for edge " + edge_str(e) +
                                      ", already " + std::to_string(g.adjacency(e.src, e.dst)));
        }
      } else {
        g.adjacency(e.src, e.dst) += e.weight;
        g.adjacency(e.dst, e.src) = g.adjacency(e.src, e.dst);
      }
    } else {
      g.adjacency(e.src, e.dst) = e.weight;
      g.adjacency(e.dst, e.src) = e.weight;
      seen(e.src, e.dst) = true;
      seen(e.dst, e.src) = true;
    }
  }
  return g;
}

Eigen::MatrixXd normalized_adjacency(const RoadGraph& g) {
  const int n = g.node_count;
  Eigen::VectorXd deg = g.degrees();
  Eigen::VectorXd dinv_sqrt(n);
  for (int i = 0; i < n; ++i) {
    dinv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  }
  return dinv_sqrt.asDiagonal() * g.adjacency * dinv_sqrt.asDiagonal();
}

Eigen::MatrixXd normalized_laplacian(const RoadGraph& g) {
  const int n = g.node_count;
  return Eigen::MatrixXd::Identity(n, n) - normalized_adjacency(g);
}

Eigen::MatrixXd combinatorial_laplacian(const RoadGraph& g) {
  Eigen::MatrixXd l = -g.adjacency;
  l.diagonal() = g.degrees();
  return l;
}

LaplacianSpectrum eigendecompose(const Eigen::MatrixXd& laplacian) {
  if (laplacian.rows() != laplacian.cols()) {
    throw std::invalid_argument("eigendecompose: matrix must be square");
  }
  const double asym = (laplacian - laplacian.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw std::invalid_argument("eigendecompose: input not symmetric, max |L - L^T| = " +
                                std::to_string(asym));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eigendecompose: eigensolver did not converge");
  }

  LaplacianSpectrum spec;
  spec.laplacian = laplacian;
  spec.eigenvalues = solver.eigenvalues();  // ascending
  spec.eigenvectors = solver.eigenvectors();

  // Clamp numerical noise onto the normalized-Laplacian interval.
  for (int i = 0; i < spec.eigenvalues.size(); ++i) {
    double& v = spec.eigenvalues(i);
    if (v < 0.0 && v > -1e-10) v = 0.0;
    if (v > 2.0 && v < 2.0 + 1e-10) v = 2.0;
  }

  // Deterministic sign: first component with |u_i| > 1e-12 made positive.
  for (int c = 0; c < spec.eigenvectors.cols(); ++c) {
    for (int r = 0; r < spec.eigenvectors.rows(); ++r) {
      const double v = spec.eigenvectors(r, c);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) spec.eigenvectors.col(c) *= -1.0;
        break;
      }
    }
  }
  return spec;
}

bool is_connected(const RoadGraph& g) {
  const int n = g.node_count;
  if (n == 0) return false;
  std::vector<bool> visited(n, false);
  std::queue<int> frontier;
  frontier.push(0);
  visited[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v = 0; v < n; ++v) {
      if (!visited[v] && g.adjacency(u, v) != 0.0) {
        visited[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

std::vector<WeightedEdge> load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open edge list: " + path);
  }
  std::vector<WeightedEdge> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("src", 0) == 0) continue;  // optional header
    std::istringstream ls(line);
    std::string src_s, dst_s, w_s;
    if (!std::getline(ls, src_s, ',') || !std::getline(ls, dst_s, ',') ||
        !std::getline(ls, w_s)) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected src,dst,weight");
    }
    WeightedEdge e;
    try {
      std::size_t pos = 0;
      e.src = std::stoi(src_s, &pos);
      if (pos != src_s.size()) throw std::invalid_argument(src_s);
      e.dst = std::stoi(dst_s, &pos);
      if (pos != dst_s.size()) throw std::invalid_argument(dst_s);
      e.weight = std::stod(w_s, &pos);
      if (pos != w_s.size()) throw std::invalid_argument(w_s);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed edge record '" + line +
                       "'");
    }
    edges.push_back(e);
  }
  return edges;
}

void save_edge_list(const std::string& path, const std::vector<WeightedEdge>& edges) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write edge list: " + path);
  }
  out << "src,dst,weight\n";
  out.precision(17);
  for (const auto& e : edges) {
    out << e.src << "," << e.dst << "," << e.weight << "\n";
  }
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

RoadGraph load_graph(const std::string& path, int node_count, DuplicateEdgePolicy policy) {
  return build_from_edge_list(load_edge_list(path), node_count, policy);
}

}  // namespace agcnet
