#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>

namespace tutorqa {

// Fixed-dimension word vectors with a deterministic out-of-vocabulary
// policy: unknown tokens get a hash-seeded pseudo-random unit vector, so
// UI strings never fall out of the similarity computation.
class WordVectors {
 public:
  explicit WordVectors(int dim);
  static WordVectors load(const std::string& path);

  void set(const std::string& token, Eigen::VectorXd vec);
  Eigen::VectorXd get(const std::string& token) const;
  bool contains(const std::string& token) const { return table_.count(token) > 0; }
  int dim() const { return dim_; }

 private:
  int dim_;
  std::unordered_map<std::string, Eigen::VectorXd> table_;
};

}  // namespace tutorqa
