#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "persel/rng.hpp"
#include "persel/tensor.hpp"

namespace persel::nd {

/// Named trainable tensor with a gradient slot of identical shape.
/// `frozen_values` marks a prefix of flat values pinned as constants
/// (the padding row of an embedding table); they receive no gradient and
/// finite-difference checks skip them.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Index frozen_values = 0;

  Param() = default;
  Param(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape())) {}
};

/// Ordered (name-sorted) collection of parameters. Iteration order is
/// deterministic, which keeps optimizer updates and checkpoints
/// bit-reproducible.
class ParamStore {
 public:
  Param& add(const std::string& name, Tensor init);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  void zero_grads();
  std::size_t size() const { return params_.size(); }
  Index total_values() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Param> params_;
};

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode differentiation tape. Operations append nodes in topological
/// order (inputs always precede their consumers); one backward() pass fills
/// the gradient of every node that contributed to the loss, accumulating
/// over repeated uses, and adds parameter gradients into the bound Params.
///
/// A tape and its tensors belong to one thread; parameters may be shared
/// read-only across tapes as long as nobody calls backward() concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ---- leaves
  Var input(Tensor value);                   // constant, never receives gradient
  Var param(Param& p);                       // gradient accumulates into p.grad
  Var zeros(std::vector<Index> shape) { return input(Tensor::zeros(std::move(shape))); }

  // ---- access
  const Tensor& value(Var v) const;
  /// Gradient of a node after backward(); zeros if the node was not reached.
  const Tensor& grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // ---- elementwise / linear algebra
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_rowvec(Var m, Var v);              // [r,c] + [c] broadcast over rows
  Var matmul(Var a, Var b);                  // [m,k] x [k,n]
  Var matmul_nt(Var a, Var b);               // [m,k] x [n,k]^T -> [m,n]
  Var transpose(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var gelu(Var a);

  // ---- shape plumbing
  Var reshape(Var a, std::vector<Index> shape);
  Var concat(std::span<const Var> parts);    // rank-1 concatenation
  Var vstack(std::span<const Var> rows);     // rank-1 vectors -> [n, d]
  Var concat_rows(std::span<const Var> mats);// rank-2 blocks stacked by rows
  Var hcat(std::span<const Var> mats);       // rank-2 blocks joined by columns
  Var slice_rows(Var a, Index begin, Index count);
  Var slice_cols(Var a, Index begin, Index count);
  Var row(Var a, Index r);                   // [r,c] -> [c]

  // ---- reductions and attention
  Var sum(Var a);                            // -> scalar
  Var max_rows(Var a, Index length);         // componentwise max over first `length` rows
  /// Softmax over the valid entries of a score vector; exactly zero at
  /// invalid positions, gradient flows only through valid ones.
  Var masked_softmax(Var scores, const std::vector<std::uint8_t>& valid);
  /// Row-wise masked softmax of a score matrix; `key_valid` masks columns.
  Var masked_softmax_rows(Var scores, const std::vector<std::uint8_t>& key_valid);

  // ---- layers
  Var dropout(Var a, double rate, Rng& rng, bool training);
  /// Gather rows of a trainable table. Rows covered by the table's
  /// frozen prefix (the padding row, when set) never receive gradient.
  Var embedding(Param& table, const std::vector<Index>& ids);
  /// Gather rows of a frozen table (no gradient path).
  Var embedding_fixed(const Tensor& table, const std::vector<Index>& ids);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-6);

  // ---- losses
  Var softmax_cross_entropy(Var logits, Index label);
  Var sigmoid_bce(Var logit, double target); // logit: scalar

  /// Backpropagate from a scalar loss. May be called once per tape.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;                 // allocated lazily during backward
    std::vector<int> inputs;
    std::function<void(Tape&, int)> back;  // nullptr for leaves
    Param* bound = nullptr;      // set for param leaves
    bool needs_grad = false;
  };

  Var push(Tensor value, std::vector<int> inputs, std::function<void(Tape&, int)> back);
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
  Tensor& grad_buf(int id);      // lazily allocated accumulator
  void check(Var v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace persel::nd
