#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tutorqa/kb.hpp"

namespace tutorqa {

struct WalkConfig {
  int walks_per_node = 80;
  int walk_length = 40;  // nodes per walk, including the start
  int window = 10;
  int dim = 300;
  int negatives = 5;
  int epochs = 1;
  double initial_lr = 0.025;
  uint64_t seed = 1;
  // Lock-free multi-threaded training. Off by default: it forfeits
  // bitwise determinism.
  bool parallel = false;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

using Walk = std::vector<int>;

// Truncated uniform random walks: walks_per_node per start node, each walk
// derived from its own (seed, node, round) stream so the result does not
// depend on scheduling.
std::vector<Walk> generate_walks(const Graph& graph, const WalkConfig& cfg);

struct NodeEmbeddings {
  std::vector<std::string> ids;
  std::unordered_map<std::string, int> index;
  Eigen::MatrixXd vectors;  // dim x count, one column per node

  int dim() const { return static_cast<int>(vectors.rows()); }
  int count() const { return static_cast<int>(vectors.cols()); }
  const Eigen::VectorXd vector_of(const std::string& id) const;
  bool contains(const std::string& id) const { return index.count(id) > 0; }
};

// Skip-gram with negative sampling over the walk corpus. Sequential mode is
// bitwise deterministic for a fixed seed.
NodeEmbeddings train_skipgram(const Graph& graph, const std::vector<Walk>& walks,
                              const WalkConfig& cfg);

// Convenience: walks + skip-gram in one call.
NodeEmbeddings deepwalk(const Graph& graph, const WalkConfig& cfg);

// Plain text: "<count> <dim>" header, then "<id> <f1> ... <fdim>" rows.
void save_embeddings(const NodeEmbeddings& emb, const std::string& path);
NodeEmbeddings load_embeddings(const std::string& path);

}  // namespace tutorqa
