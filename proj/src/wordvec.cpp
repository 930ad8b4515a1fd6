#include "tutorqa/wordvec.hpp"

#include <fstream>
#include <sstream>

#include "tutorqa/error.hpp"
#include "tutorqa/hash.hpp"
#include "tutorqa/rng.hpp"

namespace tutorqa {

WordVectors::WordVectors(int dim) : dim_(dim) {
  if (dim <= 0) throw validation_error("word vector dimension must be positive");
}

void WordVectors::set(const std::string& token, Eigen::VectorXd vec) {
  if (vec.size() != dim_) {
    throw validation_error("word vector for '" + token + "' has dimension " +
                           std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
  }
  table_[token] = std::move(vec);
}

Eigen::VectorXd WordVectors::get(const std::string& token) const {
  auto it = table_.find(token);
  if (it != table_.end()) return it->second;
  // OOV: deterministic unit vector seeded by the token hash.
  Rng rng(Rng::mix(fnv1a(token), static_cast<uint64_t>(dim_)));
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = rng.normal();
  double norm = v.norm();
  if (norm < 1e-12) {
    v.setZero();
    v[0] = 1.0;
  } else {
    v /= norm;
  }
  return v;
}

WordVectors WordVectors::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open word vector file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw validation_error("empty word vector file: " + path);
  std::istringstream hs(header);
  long long count = 0;
  int dim = 0;
  if (!(hs >> count >> dim) || count < 0 || dim <= 0) {
    throw validation_error(path + ": malformed header '" + header + "'");
  }
  WordVectors wv(dim);
  std::string line;
  long long seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) throw validation_error(path + ": malformed row");
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
      if (!(ls >> v[i])) {
        throw validation_error(path + ": row for '" + token + "' has fewer than " +
                               std::to_string(dim) + " values");
      }
    }
    double extra;
    if (ls >> extra) throw validation_error(path + ": row for '" + token + "' has extra values");
    wv.set(token, std::move(v));
    ++seen;
  }
  if (seen != count) {
    throw validation_error(path + ": header declares " + std::to_string(count) + " rows, found " +
                           std::to_string(seen));
  }
  return wv;
}

}  // namespace tutorqa
