#pragma once

#include <cstddef>
#include <vector>

#include "signxfer/matrix.hpp"

namespace signxfer::ad {

class Graph;

enum class OpTag {
  kInput,
  kParam,
  kMatmul,
  kTranspose,
  kAdd,
  kAddRowBias,
  kScale,
  kTanh,
  kSigmoid,
  kRowSoftmax,
  kTemporalMaxpool,
  kMeanRows,
  kPoolMeanRows,
  kSum,
  kSigmoidBce,
};

// Handle to a node owned by a Graph. Cheap to copy; valid as long as the
// graph lives.
class Value {
 public:
  Value() = default;
  const Matrix& value() const;
  const Matrix& grad() const;
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Value(Graph* g, std::size_t idx) : graph_(g), index_(idx) {}
  Graph* graph_ = nullptr;
  std::size_t index_ = 0;
};

// Tape-style computation graph with reverse-mode differentiation. Nodes are
// appended in evaluation order, so the tape itself is a topological order and
// backward is a single reverse sweep. Single-threaded per graph; node values
// are immutable once created.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Value input(Matrix value);  // constant leaf
  Value param(Matrix value);  // trainable leaf; gradient read after backward

  Value matmul(Value a, Value b);
  Value transpose(Value a);
  Value add(Value a, Value b);
  Value add_row_bias(Value a, Value bias);
  Value scale(Value a, double s);
  Value tanh(Value a);
  Value sigmoid(Value a);
  Value row_softmax(Value a);
  Value temporal_maxpool(Value a);
  Value mean_rows(Value a);
  Value pool_mean_rows(Value a, std::size_t factor);
  Value sum(Value a);

  // Fused sigmoid + binary cross-entropy against constant 0/1 targets.
  // Takes logits; yields a 1x1 loss node.
  Value sigmoid_bce(Value logits, Matrix targets);

  // Populates gradients of every node reachable from `loss` (others stay
  // zero). `loss` must be 1x1.
  void backward(Value loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  friend class Value;

  struct Node {
    OpTag op;
    Matrix value;
    Matrix grad;
    std::size_t parents[2] = {0, 0};
    int parent_count = 0;
    double scalar = 0.0;                  // scale factor / pool factor
    std::vector<std::size_t> argmax;      // maxpool routing
    Matrix aux;                           // sigmoid_bce: cached probabilities
    Matrix targets;                       // sigmoid_bce: 0/1 labels
  };

  Value emit(Node node);
  Node& node(Value v) { return nodes_[v.index_]; }
  const Node& node(Value v) const { return nodes_[v.index_]; }
  void check_owned(Value v) const;

  std::vector<Node> nodes_;
};

}  // namespace signxfer::ad
