#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lmkit/model.hpp"
#include "lmkit/recursions.hpp"
#include "lmkit/sample.hpp"

namespace lmkit {

// 0-based states; ties go to the smallest index.
struct DecodedPath {
  std::vector<int> path;        // global MAP sequence
  double log_joint = 0.0;       // log p(path, y)
  std::vector<int> local;       // per-occasion posterior mode
  std::vector<double> local_mass;
};

// Viterbi in log space, with the per-occasion posterior modes. Throws DecodeError when y has zero probability.
DecodedPath viterbi(const ChainProbs& chain, const Eigen::MatrixXd& emissions);

// Posterior mode per occasion from a lattice.
std::vector<int> local_decode(const Lattice& lattice);

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SubjectDecoding {
  int unit = 0;
  int cluster_class = 0;  // MAP class (0 when m = 1)
  DecodedPath decoded;
  Eigen::MatrixXd posterior;  // T x k, mixed over cluster classes
};

// Per-unit decoding. With cluster classes the path is the joint MAP over
// (w, members' paths), which splits into the class maximizing
// log rho_w + sum_i max_u log p(u, y_i | w) and each member's Viterbi path
// under that class.
std::vector<SubjectDecoding> decode_sample(const Model& model, const Sample& sample,
                                           int threads = 1);

}  // namespace lmkit
