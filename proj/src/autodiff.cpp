#include "signxfer/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "signxfer/errors.hpp"

namespace signxfer::ad {

const Matrix& Value::value() const { return graph_->node(*this).value; }
const Matrix& Value::grad() const { return graph_->node(*this).grad; }

void Graph::check_owned(Value v) const {
  if (v.graph_ != this) {
    throw ShapeError("autodiff: value belongs to a different graph");
  }
}

Value Graph::emit(Node n) {
  n.grad = Matrix(n.value.rows(), n.value.cols());
  nodes_.push_back(std::move(n));
  return Value(this, nodes_.size() - 1);
}

Value Graph::input(Matrix value) {
  Node n;
  n.op = OpTag::kInput;
  n.value = std::move(value);
  return emit(std::move(n));
}

Value Graph::param(Matrix value) {
  Node n;
  n.op = OpTag::kParam;
  n.value = std::move(value);
  return emit(std::move(n));
}

Value Graph::matmul(Value a, Value b) {
  check_owned(a);
  check_owned(b);
  Node n;
  n.op = OpTag::kMatmul;
  n.value = signxfer::matmul(node(a).value, node(b).value);
  n.parents[0] = a.index_;
  n.parents[1] = b.index_;
  n.parent_count = 2;
  return emit(std::move(n));
}

Value Graph::transpose(Value a) {
  check_owned(a);
  Node n;
  n.op = OpTag::kTranspose;
  n.value = signxfer::transpose(node(a).value);
  n.parents[0] = a.index_;
  n.parent_count = 1;
  return emit(std::move(n));
}

Value Graph::add(Value a, Value b) {
  check_owned(a);
  check_owned(b);
  Node n;
  n.op = OpTag::kAdd;
  n.value = signxfer::add(node(a).value, node(b).value);
  n.parents[0] = a.index_;
  n.parents[1] = b.index_;
  n.parent_count = 2;
  return emit(std::move(n));
}

Value Graph::add_row_bias(Value a, Value bias) {
  check_owned(a);
  check_owned(bias);
  Node n;
  n.op = OpTag::kAddRowBias;
  n.value = signxfer::add_row_bias(node(a).value, node(bias).value);
  n.parents[0] = a.index_;
  n.parents[1] = bias.index_;
  n.parent_count = 2;
  return emit(std::move(n));
}

Value Graph::scale(Value a, double s) {
  check_owned(a);
  Node n;
  n.op = OpTag::kScale;
  n.value = signxfer::scale(node(a).value, s);
  n.parents[0] = a.index_;
  n.parent_count = 1;
  n.scalar = s;
  return emit(std::move(n));
}

Value Graph::tanh(Value a) {
  check_owned(a);
  Node n;
  n.op = OpTag::kTanh;
  n.value = tanh_map(node(a).value);
  n.parents[0] = a.index_;
  n.parent_count = 1;
  return emit(std::move(n));
}

Value Graph::sigmoid(Value a) {
  check_owned(a);
  Node n;
  n.op = OpTag::kSigmoid;
  n.value = sigmoid_map(node(a).value);
  n.parents[0] = a.index_;
  n.parent_count = 1;
  return emit(std::move(n));
}

Value Graph::row_softmax(Value a) {
  check_owned(a);
  Node n;
  n.op = OpTag::kRowSoftmax;
  n.value = signxfer::row_softmax(node(a).value);
  n.parents[0] = a.index_;
  n.parent_count = 1;
  return emit(std::move(n));
}

Value Graph::temporal_maxpool(Value a) {
  check_owned(a);
  Node n;
  n.op = OpTag::kTemporalMaxpool;
  n.value = signxfer::temporal_maxpool(node(a).value, &n.argmax);
  n.parents[0] = a.index_;
  n.parent_count = 1;
  return emit(std::move(n));
}

Value Graph::mean_rows(Value a) {
  check_owned(a);
  Node n;
  n.op = OpTag::kMeanRows;
  n.value = signxfer::mean_rows(node(a).value);
  n.parents[0] = a.index_;
  n.parent_count = 1;
  return emit(std::move(n));
}

Value Graph::pool_mean_rows(Value a, std::size_t factor) {
  check_owned(a);
  Node n;
  n.op = OpTag::kPoolMeanRows;
  n.value = signxfer::pool_mean_rows(node(a).value, factor);
  n.parents[0] = a.index_;
  n.parent_count = 1;
  n.scalar = static_cast<double>(factor);
  return emit(std::move(n));
}

Value Graph::sum(Value a) {
  check_owned(a);
  Node n;
  n.op = OpTag::kSum;
  n.value = Matrix(1, 1, signxfer::sum(node(a).value));
  n.parents[0] = a.index_;
  n.parent_count = 1;
  return emit(std::move(n));
}

Value Graph::sigmoid_bce(Value logits, Matrix targets) {
  check_owned(logits);
  const Matrix& z = node(logits).value;
  if (!z.same_shape(targets)) {
    throw ShapeError("sigmoid_bce: logits " + z.shape_str() + " vs targets " +
                     targets.shape_str());
  }
  Node n;
  n.op = OpTag::kSigmoidBce;
  Matrix p = sigmoid_map(z);
  n.value = Matrix(1, 1, bce_loss(p, targets));
  n.parents[0] = logits.index_;
  n.parent_count = 1;
  n.aux = std::move(p);
  n.targets = std::move(targets);
  return emit(std::move(n));
}

void Graph::backward(Value loss) {
  check_owned(loss);
  const Node& top = node(loss);
  if (top.value.rows() != 1 || top.value.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + top.value.shape_str());
  }
  for (Node& n : nodes_) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  nodes_[loss.index_].grad.at(0, 0) = 1.0;

  for (std::size_t idx = loss.index_ + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    const Matrix& g = n.grad;
    switch (n.op) {
      case OpTag::kInput:
      case OpTag::kParam:
        break;
      case OpTag::kMatmul: {
        Node& a = nodes_[n.parents[0]];
        Node& b = nodes_[n.parents[1]];
        a.grad = signxfer::add(a.grad, signxfer::matmul(g, signxfer::transpose(b.value)));
        b.grad = signxfer::add(b.grad, signxfer::matmul(signxfer::transpose(a.value), g));
        break;
      }
      case OpTag::kTranspose: {
        Node& a = nodes_[n.parents[0]];
        a.grad = signxfer::add(a.grad, signxfer::transpose(g));
        break;
      }
      case OpTag::kAdd: {
        nodes_[n.parents[0]].grad = signxfer::add(nodes_[n.parents[0]].grad, g);
        nodes_[n.parents[1]].grad = signxfer::add(nodes_[n.parents[1]].grad, g);
        break;
      }
      case OpTag::kAddRowBias: {
        Node& a = nodes_[n.parents[0]];
        Node& bias = nodes_[n.parents[1]];
        a.grad = signxfer::add(a.grad, g);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c)
            bias.grad.at(0, c) += g.at(r, c);
        break;
      }
      case OpTag::kScale: {
        Node& a = nodes_[n.parents[0]];
        a.grad = signxfer::add(a.grad, signxfer::scale(g, n.scalar));
        break;
      }
      case OpTag::kTanh: {
        Node& a = nodes_[n.parents[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double y = n.value.values()[i];
          a.grad.values()[i] += g.values()[i] * (1.0 - y * y);
        }
        break;
      }
      case OpTag::kSigmoid: {
        Node& a = nodes_[n.parents[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double y = n.value.values()[i];
          a.grad.values()[i] += g.values()[i] * y * (1.0 - y);
        }
        break;
      }
      case OpTag::kRowSoftmax: {
        Node& a = nodes_[n.parents[0]];
        for (std::size_t r = 0; r < g.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < g.cols(); ++c)
            dot += g.at(r, c) * n.value.at(r, c);
          for (std::size_t c = 0; c < g.cols(); ++c)
            a.grad.at(r, c) += n.value.at(r, c) * (g.at(r, c) - dot);
        }
        break;
      }
      case OpTag::kTemporalMaxpool: {
        Node& a = nodes_[n.parents[0]];
        for (std::size_t c = 0; c < g.cols(); ++c)
          a.grad.at(n.argmax[c], c) += g.at(0, c);
        break;
      }
      case OpTag::kMeanRows: {
        Node& a = nodes_[n.parents[0]];
        const double inv = 1.0 / static_cast<double>(a.value.rows());
        for (std::size_t r = 0; r < a.value.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c)
            a.grad.at(r, c) += g.at(0, c) * inv;
        break;
      }
      case OpTag::kPoolMeanRows: {
        Node& a = nodes_[n.parents[0]];
        const std::size_t factor = static_cast<std::size_t>(n.scalar);
        for (std::size_t w = 0; w < n.value.rows(); ++w) {
          const std::size_t begin = w * factor;
          const std::size_t end = std::min(a.value.rows(), begin + factor);
          const double inv = 1.0 / static_cast<double>(end - begin);
          for (std::size_t r = begin; r < end; ++r)
            for (std::size_t c = 0; c < g.cols(); ++c)
              a.grad.at(r, c) += g.at(w, c) * inv;
        }
        break;
      }
      case OpTag::kSum: {
        Node& a = nodes_[n.parents[0]];
        for (double& v : a.grad.values()) v += g.at(0, 0);
        break;
      }
      case OpTag::kSigmoidBce: {
        Node& a = nodes_[n.parents[0]];
        const double inv = g.at(0, 0) / static_cast<double>(n.aux.size());
        for (std::size_t i = 0; i < n.aux.size(); ++i) {
          a.grad.values()[i] += inv * (n.aux.values()[i] - n.targets.values()[i]);
        }
        break;
      }
    }
  }
}

}  // namespace signxfer::ad
