#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <set>

#include "doctest.h"
#include "tutorqa/deepwalk.hpp"
#include "tutorqa/error.hpp"

using namespace tutorqa;

namespace {

Graph make_graph(int n, const std::vector<std::pair<int, int>>& edges) {
  Graph g;
  for (int i = 0; i < n; ++i) {
    g.nodes.push_back("n" + std::to_string(i));
    g.index["n" + std::to_string(i)] = i;
  }
  g.adjacency.assign(n, {});
  for (auto [u, v] : edges) {
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  return g;
}

}  // namespace

TEST_CASE("isolated nodes walk alone") {
  Graph g = make_graph(3, {{0, 1}});
  WalkConfig cfg;
  cfg.walks_per_node = 5;
  cfg.walk_length = 10;
  std::vector<Walk> walks = generate_walks(g, cfg);
  CHECK(walks.size() == 15);
  for (const Walk& w : walks) {
    if (w[0] == 2) {
      CHECK(w.size() == 1);  // no neighbors: truncated immediately
    } else {
      CHECK(w.size() == 10);
    }
  }
}

TEST_CASE("every consecutive walk pair is an edge") {
  Graph g = make_graph(3, {{0, 1}, {1, 2}});  // path A-B-C
  WalkConfig cfg;
  cfg.walks_per_node = 20;
  cfg.walk_length = 15;
  for (const Walk& w : generate_walks(g, cfg)) {
    for (size_t i = 0; i + 1 < w.size(); ++i) {
      bool is_edge = false;
      for (int nb : g.adjacency[w[i]]) is_edge |= nb == w[i + 1];
      CHECK(is_edge);
    }
  }
}

TEST_CASE("walk count is walks_per_node per node") {
  Graph g = make_graph(10, {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}});
  WalkConfig cfg;
  cfg.walks_per_node = 80;
  cfg.walk_length = 40;
  CHECK(generate_walks(g, cfg).size() == 800);
}

TEST_CASE("walks are deterministic per seed") {
  Graph g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}});
  WalkConfig cfg;
  cfg.seed = 99;
  std::vector<Walk> a = generate_walks(g, cfg);
  std::vector<Walk> b = generate_walks(g, cfg);
  CHECK(a == b);
  cfg.seed = 100;
  CHECK(a != generate_walks(g, cfg));
}

TEST_CASE("zero epochs returns the initialization regardless of walks") {
  Graph g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  WalkConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 0;
  cfg.walks_per_node = 2;
  cfg.walk_length = 5;
  NodeEmbeddings a = train_skipgram(g, generate_walks(g, cfg), cfg);
  WalkConfig cfg2 = cfg;
  cfg2.walk_length = 9;  // different corpus, same init seed
  NodeEmbeddings b = train_skipgram(g, generate_walks(g, cfg2), cfg2);
  CHECK(a.vectors == b.vectors);
}

TEST_CASE("single node graph trains without error") {
  Graph g = make_graph(1, {});
  WalkConfig cfg;
  cfg.dim = 4;
  cfg.walks_per_node = 3;
  cfg.walk_length = 5;
  NodeEmbeddings emb = deepwalk(g, cfg);
  CHECK(emb.count() == 1);
  CHECK(emb.vectors.allFinite());
}

TEST_CASE("training is bitwise deterministic in sequential mode") {
  Graph g = make_graph(8, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}, {6, 7}});
  WalkConfig cfg;
  cfg.dim = 12;
  cfg.walks_per_node = 10;
  cfg.walk_length = 10;
  cfg.epochs = 2;
  cfg.seed = 1234;
  NodeEmbeddings a = deepwalk(g, cfg);
  NodeEmbeddings b = deepwalk(g, cfg);
  CHECK(a.vectors == b.vectors);
}

TEST_CASE("disjoint cliques separate in embedding space") {
  // Holds for any two disjoint cliques of size >= 4.
  for (auto [size_a, size_b] : {std::pair{5, 5}, std::pair{4, 6}}) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < size_a; ++i) {
      for (int j = i + 1; j < size_a; ++j) edges.push_back({i, j});
    }
    for (int i = 0; i < size_b; ++i) {
      for (int j = i + 1; j < size_b; ++j) edges.push_back({size_a + i, size_a + j});
    }
    const int n = size_a + size_b;
    Graph g = make_graph(n, edges);
    WalkConfig cfg;
    cfg.dim = 16;
    cfg.walks_per_node = 40;
    cfg.walk_length = 20;
    cfg.window = 5;
    cfg.epochs = 3;
    cfg.seed = 7;
    NodeEmbeddings emb = deepwalk(g, cfg);

    auto cosine = [&](int a, int b) {
      return emb.vectors.col(a).dot(emb.vectors.col(b)) /
             (emb.vectors.col(a).norm() * emb.vectors.col(b).norm());
    };
    double min_intra = 1.0, max_inter = -1.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double c = cosine(i, j);
        if ((i < size_a) == (j < size_a)) {
          min_intra = std::min(min_intra, c);
        } else {
          max_inter = std::max(max_inter, c);
        }
      }
    }
    INFO("cliques ", size_a, "+", size_b);
    CHECK(min_intra > max_inter);
  }
}

TEST_CASE("embedding file round trip") {
  Graph g = make_graph(5, {{0, 1}, {1, 2}, {3, 4}});
  WalkConfig cfg;
  cfg.dim = 7;
  cfg.walks_per_node = 4;
  cfg.walk_length = 6;
  NodeEmbeddings emb = deepwalk(g, cfg);

  const std::string path = "/tmp/tutorqa_emb_test.txt";
  save_embeddings(emb, path);
  NodeEmbeddings back = load_embeddings(path);
  CHECK(back.count() == emb.count());
  CHECK(back.dim() == emb.dim());
  CHECK(back.ids == emb.ids);
  CHECK((back.vectors - emb.vectors).cwiseAbs().maxCoeff() <= 1e-6);

  // Header/body mismatch is rejected.
  {
    std::ofstream out(path);
    out << "3 2\nn0 0.5 0.5\nn1 1 0\n";
  }
  CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains("header declares"), Error);
  {
    std::ofstream out(path);
    out << "1 3\nn0 0.5 0.5\n";
  }
  CHECK_THROWS_AS(load_embeddings(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("parallel mode runs and stays finite") {
  Graph g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
  WalkConfig cfg;
  cfg.dim = 8;
  cfg.walks_per_node = 6;
  cfg.walk_length = 8;
  cfg.parallel = true;
  cfg.threads = 2;
  NodeEmbeddings emb = deepwalk(g, cfg);
  CHECK(emb.vectors.allFinite());
  CHECK(emb.count() == 6);
}
