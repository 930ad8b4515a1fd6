#include "tutorqa/deepwalk.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "tutorqa/error.hpp"
#include "tutorqa/rng.hpp"

namespace tutorqa {

void WalkConfig::validate() const {
  if (walks_per_node <= 0 || walk_length <= 0 || window <= 0 || dim <= 0 || negatives < 0 ||
      epochs < 0 || initial_lr <= 0.0) {
    throw validation_error("walk config values must be positive");
  }
}

std::vector<Walk> generate_walks(const Graph& graph, const WalkConfig& cfg) {
  cfg.validate();
  if (graph.node_count() == 0) throw validation_error("cannot walk an empty graph");

  std::vector<Walk> walks;
  walks.reserve(static_cast<size_t>(graph.node_count()) * cfg.walks_per_node);
  for (int round = 0; round < cfg.walks_per_node; ++round) {
    // Visit order shuffled per round; walk contents depend only on
    // (seed, start, round).
    std::vector<int> order(graph.node_count());
    for (int i = 0; i < graph.node_count(); ++i) order[i] = i;
    Rng order_rng(Rng::mix(cfg.seed, 0x9a6b, round));
    order_rng.shuffle(order);

    for (int start : order) {
      Rng rng(Rng::mix(cfg.seed, static_cast<uint64_t>(start), static_cast<uint64_t>(round)));
      Walk walk;
      walk.reserve(cfg.walk_length);
      int cur = start;
      walk.push_back(cur);
      while (static_cast<int>(walk.size()) < cfg.walk_length) {
        const auto& nbrs = graph.adjacency[cur];
        if (nbrs.empty()) break;  // truncate at dead ends
        cur = nbrs[rng.uniform_int(static_cast<int>(nbrs.size()))];
        walk.push_back(cur);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

namespace {

inline double stable_sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// One center/context position: positive pair plus uniform negatives.
// Accumulates the center update and applies it once, word2vec style.
void train_position(Eigen::MatrixXd& in, Eigen::MatrixXd& out, int center, int context,
                    int negatives, int n_nodes, double lr, Rng& rng, Eigen::VectorXd& center_accum) {
  center_accum.setZero();
  auto update_pair = [&](int target, double label) {
    double score = stable_sigmoid(in.col(center).dot(out.col(target)));
    double g = (label - score) * lr;
    center_accum += g * out.col(target);
    out.col(target) += g * in.col(center);
  };
  update_pair(context, 1.0);
  for (int k = 0; k < negatives; ++k) {
    int neg = rng.uniform_int(n_nodes);
    if (neg == context) continue;
    update_pair(neg, 0.0);
  }
  in.col(center) += center_accum;
}

struct SkipgramState {
  Eigen::MatrixXd in;
  Eigen::MatrixXd out;
  uint64_t total_tokens = 0;
};

void run_walk_range(SkipgramState& st, const std::vector<Walk>& walks, size_t begin, size_t end,
                    const WalkConfig& cfg, int epoch, std::atomic<uint64_t>& processed) {
  const int n = static_cast<int>(st.in.cols());
  Eigen::VectorXd accum(cfg.dim);
  Rng rng(Rng::mix(cfg.seed, 0x5167 ^ static_cast<uint64_t>(begin), static_cast<uint64_t>(epoch)));
  for (size_t wi = begin; wi < end; ++wi) {
    const Walk& walk = walks[wi];
    for (int i = 0; i < static_cast<int>(walk.size()); ++i) {
      uint64_t done = processed.fetch_add(1, std::memory_order_relaxed);
      double frac = static_cast<double>(done) /
                    static_cast<double>(std::max<uint64_t>(1, st.total_tokens * cfg.epochs));
      double lr = cfg.initial_lr * std::max(1.0 - frac, 1e-4);
      int lo = std::max(0, i - cfg.window);
      int hi = std::min(static_cast<int>(walk.size()) - 1, i + cfg.window);
      for (int j = lo; j <= hi; ++j) {
        if (j == i) continue;
        train_position(st.in, st.out, walk[i], walk[j], cfg.negatives, n, lr, rng, accum);
      }
    }
  }
}

}  // namespace

NodeEmbeddings train_skipgram(const Graph& graph, const std::vector<Walk>& walks,
                              const WalkConfig& cfg) {
  cfg.validate();
  if (graph.node_count() == 0) throw validation_error("empty graph");
  if (walks.empty()) throw validation_error("empty walk corpus");
  for (const Walk& w : walks) {
    for (int v : w) {
      if (v < 0 || v >= graph.node_count()) throw validation_error("walk references unknown node");
    }
  }

  const int n = graph.node_count();
  SkipgramState st;
  st.in.resize(cfg.dim, n);
  st.out = Eigen::MatrixXd::Zero(cfg.dim, n);
  Rng init_rng(Rng::mix(cfg.seed, 0x11d7));
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < cfg.dim; ++r) {
      st.in(r, c) = init_rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim);
    }
  }
  for (const Walk& w : walks) st.total_tokens += w.size();

  std::atomic<uint64_t> processed{0};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!cfg.parallel) {
      run_walk_range(st, walks, 0, walks.size(), cfg, epoch, processed);
      continue;
    }
    int threads = cfg.threads > 0 ? cfg.threads
                                  : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<int>(threads, static_cast<int>(walks.size()));
    std::vector<std::thread> pool;
    size_t chunk = (walks.size() + threads - 1) / threads;
    for (int ti = 0; ti < threads; ++ti) {
      size_t b = ti * chunk;
      size_t e = std::min(walks.size(), b + chunk);
      if (b >= e) break;
      pool.emplace_back([&, b, e] { run_walk_range(st, walks, b, e, cfg, epoch, processed); });
    }
    for (auto& t : pool) t.join();
  }

  NodeEmbeddings emb;
  emb.ids = graph.nodes;
  emb.index = graph.index;
  emb.vectors = std::move(st.in);
  for (int c = 0; c < emb.vectors.cols(); ++c) {
    if (!emb.vectors.col(c).allFinite()) {
      throw runtime_error("non-finite embedding for node '" + emb.ids[c] + "'");
    }
  }
  return emb;
}

NodeEmbeddings deepwalk(const Graph& graph, const WalkConfig& cfg) {
  return train_skipgram(graph, generate_walks(graph, cfg), cfg);
}

const Eigen::VectorXd NodeEmbeddings::vector_of(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) throw validation_error("no embedding for node '" + id + "'");
  return vectors.col(it->second);
}

void save_embeddings(const NodeEmbeddings& emb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw runtime_error("cannot write embedding file: " + path);
  out << emb.count() << " " << emb.dim() << "\n";
  char buf[40];
  for (int c = 0; c < emb.count(); ++c) {
    out << emb.ids[c];
    for (int r = 0; r < emb.dim(); ++r) {
      std::snprintf(buf, sizeof(buf), " %.9g", emb.vectors(r, c));
      out << buf;
    }
    out << "\n";
  }
}

NodeEmbeddings load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open embedding file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw validation_error("empty embedding file: " + path);
  std::istringstream hs(header);
  long long count = 0;
  int dim = 0;
  if (!(hs >> count >> dim) || count < 0 || dim <= 0) {
    throw validation_error(path + ": malformed header '" + header + "'");
  }
  NodeEmbeddings emb;
  emb.vectors.resize(dim, count);
  std::string line;
  long long seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (seen >= count) throw validation_error(path + ": more rows than header declares");
    std::istringstream ls(line);
    std::string id;
    if (!(ls >> id)) throw validation_error(path + ": malformed row " + std::to_string(seen));
    for (int r = 0; r < dim; ++r) {
      if (!(ls >> emb.vectors(r, seen))) {
        throw validation_error(path + ": row for '" + id + "' has fewer than " +
                               std::to_string(dim) + " values");
      }
    }
    if (!emb.index.emplace(id, static_cast<int>(seen)).second) {
      throw validation_error(path + ": duplicate node id '" + id + "'");
    }
    emb.ids.push_back(std::move(id));
    ++seen;
  }
  if (seen != count) {
    throw validation_error(path + ": header declares " + std::to_string(count) + " rows, found " +
                           std::to_string(seen));
  }
  return emb;
}

}  // namespace tutorqa
