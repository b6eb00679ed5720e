#include "persel/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace persel::nd {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------- ParamStore

Param& ParamStore::add(const std::string& name, Tensor init) {
  auto [it, fresh] = params_.try_emplace(name, name, std::move(init));
  if (!fresh) throw std::invalid_argument("param already registered: " + name);
  return it->second;
}

Param& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no such param: " + name);
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no such param: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, p] : params_)
    std::fill(p.grad.values().begin(), p.grad.values().end(), 0.0);
}

Index ParamStore::total_values() const {
  Index n = 0;
  for (const auto& [name, p] : params_) n += p.value.numel();
  return n;
}

// ---------------------------------------------------------------------- Tape

void Tape::check(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: variable does not belong to this tape");
}

Var Tape::push(Tensor value, std::vector<int> inputs, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  n.back = std::move(back);
  for (int in : n.inputs)
    if (nodes_[static_cast<std::size_t>(in)].needs_grad) n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Tensor value) { return push(std::move(value), {}, nullptr); }

Var Tape::param(Param& p) {
  Node n;
  n.value = p.value;
  n.bound = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return node(v).value;
}

const Tensor& Tape::grad(Var v) const {
  check(v);
  const Node& n = node(v);
  if (n.grad.empty()) {
    static thread_local Tensor zero;
    zero = Tensor::zeros(n.value.shape());
    return zero;
  }
  return n.grad;
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  check(loss);
  if (backward_done_) throw std::logic_error("tape: backward already ran");
  backward_done_ = true;
  Node& ln = node(loss);
  if (ln.value.numel() != 1) throw std::invalid_argument("tape: loss must be scalar");
  grad_buf(loss.id).at(0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.back) n.back(*this, id);
    if (n.bound) {
      auto& g = n.bound->grad.values();
      const auto& src = n.grad.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
    }
  }
}

// ------------------------------------------------------------- elementwise

Var Tape::add(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("add: shape mismatch");
  Tensor out = ta;
  for (Index i = 0; i < out.numel(); ++i) out.at(i) += tb.at(i);
  return push(std::move(out), {a.id, b.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    for (int in : n.inputs) {
      if (!t.nodes_[static_cast<std::size_t>(in)].needs_grad) continue;
      Tensor& g = t.grad_buf(in);
      for (Index i = 0; i < g.numel(); ++i) g.at(i) += n.grad.at(i);
    }
  });
}

Var Tape::sub(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("sub: shape mismatch");
  Tensor out = ta;
  for (Index i = 0; i < out.numel(); ++i) out.at(i) -= tb.at(i);
  return push(std::move(out), {a.id, b.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    if (t.nodes_[static_cast<std::size_t>(n.inputs[0])].needs_grad) {
      Tensor& g = t.grad_buf(n.inputs[0]);
      for (Index i = 0; i < g.numel(); ++i) g.at(i) += n.grad.at(i);
    }
    if (t.nodes_[static_cast<std::size_t>(n.inputs[1])].needs_grad) {
      Tensor& g = t.grad_buf(n.inputs[1]);
      for (Index i = 0; i < g.numel(); ++i) g.at(i) -= n.grad.at(i);
    }
  });
}

Var Tape::mul(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("mul: shape mismatch");
  Tensor out = ta;
  for (Index i = 0; i < out.numel(); ++i) out.at(i) *= tb.at(i);
  return push(std::move(out), {a.id, b.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    const Tensor& va = t.nodes_[static_cast<std::size_t>(n.inputs[0])].value;
    const Tensor& vb = t.nodes_[static_cast<std::size_t>(n.inputs[1])].value;
    if (t.nodes_[static_cast<std::size_t>(n.inputs[0])].needs_grad) {
      Tensor& g = t.grad_buf(n.inputs[0]);
      for (Index i = 0; i < g.numel(); ++i) g.at(i) += n.grad.at(i) * vb.at(i);
    }
    if (t.nodes_[static_cast<std::size_t>(n.inputs[1])].needs_grad) {
      Tensor& g = t.grad_buf(n.inputs[1]);
      for (Index i = 0; i < g.numel(); ++i) g.at(i) += n.grad.at(i) * va.at(i);
    }
  });
}

Var Tape::scale(Var a, double s) {
  check(a);
  Tensor out = value(a);
  for (Index i = 0; i < out.numel(); ++i) out.at(i) *= s;
  return push(std::move(out), {a.id}, [s](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index i = 0; i < g.numel(); ++i) g.at(i) += s * n.grad.at(i);
  });
}

Var Tape::add_rowvec(Var m, Var v) {
  check(m); check(v);
  const Tensor& tm = value(m);
  const Tensor& tv = value(v);
  if (tm.rank() != 2 || tv.rank() != 1 || tm.dim(1) != tv.dim(0))
    throw std::invalid_argument("add_rowvec: shape mismatch");
  Tensor out = tm;
  const Index r = tm.dim(0), c = tm.dim(1);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) out.at(i, j) += tv.at(j);
  return push(std::move(out), {m.id, v.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    const Index r = n.value.dim(0), c = n.value.dim(1);
    if (t.nodes_[static_cast<std::size_t>(n.inputs[0])].needs_grad) {
      Tensor& g = t.grad_buf(n.inputs[0]);
      for (Index i = 0; i < g.numel(); ++i) g.at(i) += n.grad.at(i);
    }
    if (t.nodes_[static_cast<std::size_t>(n.inputs[1])].needs_grad) {
      Tensor& g = t.grad_buf(n.inputs[1]);
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) g.at(j) += n.grad.at(i, j);
    }
  });
}

// ------------------------------------------------------------ linear algebra

Var Tape::matmul(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(1) != tb.dim(0))
    throw std::invalid_argument("matmul: shape mismatch " + ta.shape_str() + " x " + tb.shape_str());
  const Index m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
  Tensor out({m, n});
  for (Index i = 0; i < m; ++i)
    for (Index kk = 0; kk < k; ++kk) {
      const double aik = ta.at(i, kk);
      if (aik == 0.0) continue;
      for (Index j = 0; j < n; ++j) out.at(i, j) += aik * tb.at(kk, j);
    }
  return push(std::move(out), {a.id, b.id}, [m, k, n](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Tensor& va = t.nodes_[static_cast<std::size_t>(nd.inputs[0])].value;
    const Tensor& vb = t.nodes_[static_cast<std::size_t>(nd.inputs[1])].value;
    if (t.nodes_[static_cast<std::size_t>(nd.inputs[0])].needs_grad) {
      Tensor& ga = t.grad_buf(nd.inputs[0]);  // G * B^T
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
          const double gij = nd.grad.at(i, j);
          if (gij == 0.0) continue;
          for (Index kk = 0; kk < k; ++kk) ga.at(i, kk) += gij * vb.at(kk, j);
        }
    }
    if (t.nodes_[static_cast<std::size_t>(nd.inputs[1])].needs_grad) {
      Tensor& gb = t.grad_buf(nd.inputs[1]);  // A^T * G
      for (Index i = 0; i < m; ++i)
        for (Index kk = 0; kk < k; ++kk) {
          const double aik = va.at(i, kk);
          if (aik == 0.0) continue;
          for (Index j = 0; j < n; ++j) gb.at(kk, j) += aik * nd.grad.at(i, j);
        }
    }
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(1) != tb.dim(1))
    throw std::invalid_argument("matmul_nt: shape mismatch");
  const Index m = ta.dim(0), k = ta.dim(1), n = tb.dim(0);
  Tensor out({m, n});
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Index kk = 0; kk < k; ++kk) acc += ta.at(i, kk) * tb.at(j, kk);
      out.at(i, j) = acc;
    }
  return push(std::move(out), {a.id, b.id}, [m, k, n](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Tensor& va = t.nodes_[static_cast<std::size_t>(nd.inputs[0])].value;
    const Tensor& vb = t.nodes_[static_cast<std::size_t>(nd.inputs[1])].value;
    if (t.nodes_[static_cast<std::size_t>(nd.inputs[0])].needs_grad) {
      Tensor& ga = t.grad_buf(nd.inputs[0]);  // G * B
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
          const double gij = nd.grad.at(i, j);
          if (gij == 0.0) continue;
          for (Index kk = 0; kk < k; ++kk) ga.at(i, kk) += gij * vb.at(j, kk);
        }
    }
    if (t.nodes_[static_cast<std::size_t>(nd.inputs[1])].needs_grad) {
      Tensor& gb = t.grad_buf(nd.inputs[1]);  // G^T * A
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
          const double gij = nd.grad.at(i, j);
          if (gij == 0.0) continue;
          for (Index kk = 0; kk < k; ++kk) gb.at(j, kk) += gij * va.at(i, kk);
        }
    }
  });
}

Var Tape::transpose(Var a) {
  check(a);
  const Tensor& ta = value(a);
  if (ta.rank() != 2) throw std::invalid_argument("transpose: rank-2 only");
  const Index r = ta.dim(0), c = ta.dim(1);
  Tensor out({c, r});
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) out.at(j, i) = ta.at(i, j);
  return push(std::move(out), {a.id}, [r, c](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) g.at(i, j) += n.grad.at(j, i);
  });
}

// ------------------------------------------------------------- nonlinearity

Var Tape::sigmoid(Var a) {
  check(a);
  Tensor out = value(a);
  for (Index i = 0; i < out.numel(); ++i) out.at(i) = 1.0 / (1.0 + std::exp(-out.at(i)));
  return push(std::move(out), {a.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index i = 0; i < g.numel(); ++i) {
      const double y = n.value.at(i);
      g.at(i) += n.grad.at(i) * y * (1.0 - y);
    }
  });
}

Var Tape::tanh(Var a) {
  check(a);
  Tensor out = value(a);
  for (Index i = 0; i < out.numel(); ++i) out.at(i) = std::tanh(out.at(i));
  return push(std::move(out), {a.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index i = 0; i < g.numel(); ++i) {
      const double y = n.value.at(i);
      g.at(i) += n.grad.at(i) * (1.0 - y * y);
    }
  });
}

Var Tape::relu(Var a) {
  check(a);
  Tensor out = value(a);
  for (Index i = 0; i < out.numel(); ++i) out.at(i) = std::max(0.0, out.at(i));
  return push(std::move(out), {a.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    const Tensor& x = t.nodes_[static_cast<std::size_t>(n.inputs[0])].value;
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index i = 0; i < g.numel(); ++i)
      if (x.at(i) > 0.0) g.at(i) += n.grad.at(i);
  });
}

Var Tape::gelu(Var a) {
  check(a);
  Tensor out = value(a);
  for (Index i = 0; i < out.numel(); ++i) {
    const double x = out.at(i);
    out.at(i) = 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
  }
  return push(std::move(out), {a.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    const Tensor& xv = t.nodes_[static_cast<std::size_t>(n.inputs[0])].value;
    Tensor& g = t.grad_buf(n.inputs[0]);
    constexpr double inv_sqrt_2pi = 0.3989422804014326779;
    for (Index i = 0; i < g.numel(); ++i) {
      const double x = xv.at(i);
      const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      g.at(i) += n.grad.at(i) * (cdf + x * pdf);
    }
  });
}

// ------------------------------------------------------------ shape plumbing

Var Tape::reshape(Var a, std::vector<Index> shape) {
  check(a);
  Tensor out(std::move(shape), value(a).values());
  if (out.numel() != value(a).numel()) throw std::invalid_argument("reshape: numel mismatch");
  return push(std::move(out), {a.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index i = 0; i < g.numel(); ++i) g.at(i) += n.grad.at(i);
  });
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  std::vector<int> ids;
  std::vector<double> vals;
  std::vector<Index> offsets;
  for (Var p : parts) {
    check(p);
    const Tensor& tp = value(p);
    if (tp.rank() != 1) throw std::invalid_argument("concat: rank-1 only");
    offsets.push_back(static_cast<Index>(vals.size()));
    vals.insert(vals.end(), tp.values().begin(), tp.values().end());
    ids.push_back(p.id);
  }
  const Index total = static_cast<Index>(vals.size());
  Tensor out({total}, std::move(vals));
  return push(std::move(out), std::move(ids), [offsets](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    for (std::size_t p = 0; p < n.inputs.size(); ++p) {
      Node& in = t.nodes_[static_cast<std::size_t>(n.inputs[p])];
      if (!in.needs_grad) continue;
      Tensor& g = t.grad_buf(n.inputs[p]);
      for (Index i = 0; i < g.numel(); ++i) g.at(i) += n.grad.at(offsets[p] + i);
    }
  });
}

Var Tape::vstack(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("vstack: no rows");
  const Index d = value(rows[0]).numel();
  std::vector<int> ids;
  std::vector<double> vals;
  for (Var r : rows) {
    check(r);
    const Tensor& tr = value(r);
    if (tr.rank() != 1 || tr.dim(0) != d) throw std::invalid_argument("vstack: row shape mismatch");
    vals.insert(vals.end(), tr.values().begin(), tr.values().end());
    ids.push_back(r.id);
  }
  Tensor out({static_cast<Index>(rows.size()), d}, std::move(vals));
  return push(std::move(out), std::move(ids), [d](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    for (std::size_t r = 0; r < n.inputs.size(); ++r) {
      Node& in = t.nodes_[static_cast<std::size_t>(n.inputs[r])];
      if (!in.needs_grad) continue;
      Tensor& g = t.grad_buf(n.inputs[r]);
      for (Index j = 0; j < d; ++j) g.at(j) += n.grad.at(static_cast<Index>(r), j);
    }
  });
}

Var Tape::concat_rows(std::span<const Var> mats) {
  if (mats.empty()) throw std::invalid_argument("concat_rows: no blocks");
  const Index c = value(mats[0]).dim(1);
  std::vector<int> ids;
  std::vector<double> vals;
  std::vector<Index> row_offsets;
  Index rows = 0;
  for (Var m : mats) {
    check(m);
    const Tensor& tm = value(m);
    if (tm.rank() != 2 || tm.dim(1) != c) throw std::invalid_argument("concat_rows: width mismatch");
    row_offsets.push_back(rows);
    rows += tm.dim(0);
    vals.insert(vals.end(), tm.values().begin(), tm.values().end());
    ids.push_back(m.id);
  }
  Tensor out({rows, c}, std::move(vals));
  return push(std::move(out), std::move(ids), [row_offsets, c](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    for (std::size_t p = 0; p < n.inputs.size(); ++p) {
      Node& in = t.nodes_[static_cast<std::size_t>(n.inputs[p])];
      if (!in.needs_grad) continue;
      Tensor& g = t.grad_buf(n.inputs[p]);
      const Index r0 = row_offsets[p];
      for (Index i = 0; i < g.dim(0); ++i)
        for (Index j = 0; j < c; ++j) g.at(i, j) += n.grad.at(r0 + i, j);
    }
  });
}

Var Tape::hcat(std::span<const Var> mats) {
  if (mats.empty()) throw std::invalid_argument("hcat: no blocks");
  const Index r = value(mats[0]).dim(0);
  std::vector<int> ids;
  std::vector<Index> col_offsets;
  Index cols = 0;
  for (Var m : mats) {
    check(m);
    const Tensor& tm = value(m);
    if (tm.rank() != 2 || tm.dim(0) != r) throw std::invalid_argument("hcat: height mismatch");
    col_offsets.push_back(cols);
    cols += tm.dim(1);
    ids.push_back(m.id);
  }
  Tensor out({r, cols});
  for (std::size_t p = 0; p < mats.size(); ++p) {
    const Tensor& tm = value(mats[p]);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < tm.dim(1); ++j) out.at(i, col_offsets[p] + j) = tm.at(i, j);
  }
  return push(std::move(out), std::move(ids), [col_offsets, r](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    for (std::size_t p = 0; p < n.inputs.size(); ++p) {
      Node& in = t.nodes_[static_cast<std::size_t>(n.inputs[p])];
      if (!in.needs_grad) continue;
      Tensor& g = t.grad_buf(n.inputs[p]);
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < g.dim(1); ++j) g.at(i, j) += n.grad.at(i, col_offsets[p] + j);
    }
  });
}

Var Tape::slice_rows(Var a, Index begin, Index count) {
  check(a);
  const Tensor& ta = value(a);
  if (ta.rank() != 2 || begin < 0 || count < 0 || begin + count > ta.dim(0))
    throw std::invalid_argument("slice_rows: out of range");
  const Index c = ta.dim(1);
  Tensor out({count, c});
  for (Index i = 0; i < count; ++i)
    for (Index j = 0; j < c; ++j) out.at(i, j) = ta.at(begin + i, j);
  return push(std::move(out), {a.id}, [begin, count, c](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index i = 0; i < count; ++i)
      for (Index j = 0; j < c; ++j) g.at(begin + i, j) += n.grad.at(i, j);
  });
}

Var Tape::slice_cols(Var a, Index begin, Index count) {
  check(a);
  const Tensor& ta = value(a);
  if (ta.rank() == 1) {
    if (begin < 0 || count < 0 || begin + count > ta.dim(0))
      throw std::invalid_argument("slice_cols: out of range");
    Tensor out({count});
    for (Index i = 0; i < count; ++i) out.at(i) = ta.at(begin + i);
    return push(std::move(out), {a.id}, [begin, count](Tape& t, int self) {
      const Node& n = t.nodes_[static_cast<std::size_t>(self)];
      Tensor& g = t.grad_buf(n.inputs[0]);
      for (Index i = 0; i < count; ++i) g.at(begin + i) += n.grad.at(i);
    });
  }
  if (ta.rank() != 2 || begin < 0 || count < 0 || begin + count > ta.dim(1))
    throw std::invalid_argument("slice_cols: out of range");
  const Index r = ta.dim(0);
  Tensor out({r, count});
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < count; ++j) out.at(i, j) = ta.at(i, begin + j);
  return push(std::move(out), {a.id}, [begin, count, r](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < count; ++j) g.at(i, begin + j) += n.grad.at(i, j);
  });
}

Var Tape::row(Var a, Index r) {
  check(a);
  const Tensor& ta = value(a);
  if (ta.rank() != 2 || r < 0 || r >= ta.dim(0)) throw std::invalid_argument("row: out of range");
  const Index c = ta.dim(1);
  Tensor out({c});
  for (Index j = 0; j < c; ++j) out.at(j) = ta.at(r, j);
  return push(std::move(out), {a.id}, [r, c](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index j = 0; j < c; ++j) g.at(r, j) += n.grad.at(j);
  });
}

// ---------------------------------------------------------------- reductions

Var Tape::sum(Var a) {
  check(a);
  double acc = 0.0;
  for (double v : value(a).values()) acc += v;
  return push(Tensor::scalar(acc), {a.id}, [](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    const double up = n.grad.at(0);
    for (Index i = 0; i < g.numel(); ++i) g.at(i) += up;
  });
}

Var Tape::max_rows(Var a, Index length) {
  check(a);
  const Tensor& ta = value(a);
  if (ta.rank() != 2) throw std::invalid_argument("max_rows: rank-2 only");
  if (length < 1 || length > ta.dim(0)) throw std::invalid_argument("max_rows: bad length");
  const Index c = ta.dim(1);
  Tensor out({c});
  std::vector<Index> arg(static_cast<std::size_t>(c), 0);
  for (Index j = 0; j < c; ++j) {
    double best = ta.at(0, j);
    Index bi = 0;
    for (Index i = 1; i < length; ++i)
      if (ta.at(i, j) > best) { best = ta.at(i, j); bi = i; }
    out.at(j) = best;
    arg[static_cast<std::size_t>(j)] = bi;
  }
  return push(std::move(out), {a.id}, [arg, c](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index j = 0; j < c; ++j) g.at(arg[static_cast<std::size_t>(j)], j) += n.grad.at(j);
  });
}

Var Tape::masked_softmax(Var scores, const std::vector<std::uint8_t>& valid) {
  check(scores);
  const Tensor& ts = value(scores);
  if (ts.rank() != 1) throw std::invalid_argument("masked_softmax: rank-1 only");
  const Index n = ts.dim(0);
  if (static_cast<Index>(valid.size()) != n)
    throw std::invalid_argument("masked_softmax: mask length mismatch");
  double mx = kNegInf;
  for (Index i = 0; i < n; ++i)
    if (valid[static_cast<std::size_t>(i)]) mx = std::max(mx, ts.at(i));
  if (mx == kNegInf) throw std::invalid_argument("empty attention support");
  Tensor out({n});
  double z = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    out.at(i) = std::exp(ts.at(i) - mx);
    z += out.at(i);
  }
  for (Index i = 0; i < n; ++i) out.at(i) /= z;
  return push(std::move(out), {scores.id}, [valid, n](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(nd.inputs[0]);
    double dot = 0.0;
    for (Index i = 0; i < n; ++i) dot += nd.grad.at(i) * nd.value.at(i);
    for (Index i = 0; i < n; ++i) {
      if (!valid[static_cast<std::size_t>(i)]) continue;
      g.at(i) += nd.value.at(i) * (nd.grad.at(i) - dot);
    }
  });
}

Var Tape::masked_softmax_rows(Var scores, const std::vector<std::uint8_t>& key_valid) {
  check(scores);
  const Tensor& ts = value(scores);
  if (ts.rank() != 2) throw std::invalid_argument("masked_softmax_rows: rank-2 only");
  const Index r = ts.dim(0), c = ts.dim(1);
  if (static_cast<Index>(key_valid.size()) != c)
    throw std::invalid_argument("masked_softmax_rows: mask length mismatch");
  bool any = false;
  for (auto v : key_valid) any = any || v;
  if (!any) throw std::invalid_argument("empty attention support");
  Tensor out({r, c});
  for (Index i = 0; i < r; ++i) {
    double mx = kNegInf;
    for (Index j = 0; j < c; ++j)
      if (key_valid[static_cast<std::size_t>(j)]) mx = std::max(mx, ts.at(i, j));
    double z = 0.0;
    for (Index j = 0; j < c; ++j) {
      if (!key_valid[static_cast<std::size_t>(j)]) continue;
      out.at(i, j) = std::exp(ts.at(i, j) - mx);
      z += out.at(i, j);
    }
    for (Index j = 0; j < c; ++j) out.at(i, j) /= z;
  }
  return push(std::move(out), {scores.id}, [key_valid, r, c](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(nd.inputs[0]);
    for (Index i = 0; i < r; ++i) {
      double dot = 0.0;
      for (Index j = 0; j < c; ++j) dot += nd.grad.at(i, j) * nd.value.at(i, j);
      for (Index j = 0; j < c; ++j) {
        if (!key_valid[static_cast<std::size_t>(j)]) continue;
        g.at(i, j) += nd.value.at(i, j) * (nd.grad.at(i, j) - dot);
      }
    }
  });
}

// -------------------------------------------------------------------- layers

Var Tape::dropout(Var a, double rate, Rng& rng, bool training) {
  check(a);
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  if (!training || rate == 0.0) return a;  // evaluation mode is the identity
  const Tensor& ta = value(a);
  const double keep = 1.0 - rate;
  std::vector<double> mask(static_cast<std::size_t>(ta.numel()));
  Tensor out = ta;
  for (Index i = 0; i < ta.numel(); ++i) {
    const bool keep_it = rng.uniform() >= rate;
    mask[static_cast<std::size_t>(i)] = keep_it ? 1.0 / keep : 0.0;
    out.at(i) *= mask[static_cast<std::size_t>(i)];
  }
  return push(std::move(out), {a.id}, [mask = std::move(mask)](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    for (Index i = 0; i < g.numel(); ++i) g.at(i) += n.grad.at(i) * mask[static_cast<std::size_t>(i)];
  });
}

Var Tape::embedding(Param& table, const std::vector<Index>& ids) {
  if (table.value.rank() != 2) throw std::invalid_argument("embedding: table must be rank-2");
  const Index rows = table.value.dim(0), d = table.value.dim(1);
  Tensor out({static_cast<Index>(ids.size()), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Index id = ids[i];
    if (id < 0 || id >= rows) throw std::out_of_range("embedding: id out of range");
    for (Index j = 0; j < d; ++j) out.at(static_cast<Index>(i), j) = table.value.at(id, j);
  }
  Node n;
  n.value = std::move(out);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  const Var v{static_cast<int>(nodes_.size()) - 1};
  // gather is a leaf bound to the table through a custom scatter
  Node& nn = nodes_.back();
  Param* tp = &table;
  nn.back = [tp, ids, d](Tape& t, int self) {
    const Node& n2 = t.nodes_[static_cast<std::size_t>(self)];
    for (std::size_t i = 0; i < ids.size(); ++i) {
      // rows inside the frozen prefix (the padding row) receive no gradient
      if ((ids[i] + 1) * d <= tp->frozen_values) continue;
      for (Index j = 0; j < d; ++j)
        tp->grad.at(ids[i], j) += n2.grad.at(static_cast<Index>(i), j);
    }
  };
  return v;
}

Var Tape::embedding_fixed(const Tensor& table, const std::vector<Index>& ids) {
  if (table.rank() != 2) throw std::invalid_argument("embedding_fixed: table must be rank-2");
  const Index rows = table.dim(0), d = table.dim(1);
  Tensor out({static_cast<Index>(ids.size()), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Index id = ids[i];
    if (id < 0 || id >= rows) throw std::out_of_range("embedding_fixed: id out of range");
    for (Index j = 0; j < d; ++j) out.at(static_cast<Index>(i), j) = table.at(id, j);
  }
  return input(std::move(out));
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  check(x); check(gain); check(bias);
  const Tensor& tx = value(x);
  const Index d = tx.rank() == 2 ? tx.dim(1) : tx.dim(0);
  const Index rows = tx.rank() == 2 ? tx.dim(0) : 1;
  if (value(gain).numel() != d || value(bias).numel() != d)
    throw std::invalid_argument("layer_norm: gain/bias dim mismatch");
  Tensor out = tx;
  std::vector<double> inv_std(static_cast<std::size_t>(rows));
  std::vector<double> xhat(static_cast<std::size_t>(rows * d));
  const Tensor& g = value(gain);
  const Tensor& b = value(bias);
  for (Index i = 0; i < rows; ++i) {
    double mean = 0.0;
    for (Index j = 0; j < d; ++j) mean += tx.at(i * d + j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double dv = tx.at(i * d + j) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(i)] = is;
    for (Index j = 0; j < d; ++j) {
      const double xh = (tx.at(i * d + j) - mean) * is;
      xhat[static_cast<std::size_t>(i * d + j)] = xh;
      out.at(i * d + j) = g.at(j) * xh + b.at(j);
    }
  }
  return push(std::move(out), {x.id, gain.id, bias.id},
              [rows, d, inv_std = std::move(inv_std), xhat = std::move(xhat)](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    const Tensor& gv = t.nodes_[static_cast<std::size_t>(n.inputs[1])].value;
    const bool need_x = t.nodes_[static_cast<std::size_t>(n.inputs[0])].needs_grad;
    const bool need_g = t.nodes_[static_cast<std::size_t>(n.inputs[1])].needs_grad;
    const bool need_b = t.nodes_[static_cast<std::size_t>(n.inputs[2])].needs_grad;
    for (Index i = 0; i < rows; ++i) {
      double mean_gy = 0.0, mean_gyx = 0.0;
      for (Index j = 0; j < d; ++j) {
        const double gy = n.grad.at(i * d + j) * gv.at(j);
        mean_gy += gy;
        mean_gyx += gy * xhat[static_cast<std::size_t>(i * d + j)];
      }
      mean_gy /= static_cast<double>(d);
      mean_gyx /= static_cast<double>(d);
      if (need_x) {
        Tensor& gx = t.grad_buf(n.inputs[0]);
        for (Index j = 0; j < d; ++j) {
          const double gy = n.grad.at(i * d + j) * gv.at(j);
          gx.at(i * d + j) += (gy - mean_gy - xhat[static_cast<std::size_t>(i * d + j)] * mean_gyx) *
                              inv_std[static_cast<std::size_t>(i)];
        }
      }
      if (need_g) {
        Tensor& gg = t.grad_buf(n.inputs[1]);
        for (Index j = 0; j < d; ++j)
          gg.at(j) += n.grad.at(i * d + j) * xhat[static_cast<std::size_t>(i * d + j)];
      }
      if (need_b) {
        Tensor& gb = t.grad_buf(n.inputs[2]);
        for (Index j = 0; j < d; ++j) gb.at(j) += n.grad.at(i * d + j);
      }
    }
  });
}

// -------------------------------------------------------------------- losses

Var Tape::softmax_cross_entropy(Var logits, Index label) {
  check(logits);
  const Tensor& tl = value(logits);
  if (tl.rank() != 1) throw std::invalid_argument("softmax_cross_entropy: rank-1 logits");
  const Index n = tl.dim(0);
  if (label < 0 || label >= n) throw std::invalid_argument("softmax_cross_entropy: label out of range");
  double mx = kNegInf;
  for (Index i = 0; i < n; ++i) mx = std::max(mx, tl.at(i));
  double z = 0.0;
  for (Index i = 0; i < n; ++i) z += std::exp(tl.at(i) - mx);
  const double logz = std::log(z) + mx;
  std::vector<double> probs(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) probs[static_cast<std::size_t>(i)] = std::exp(tl.at(i) - logz);
  const double loss = logz - tl.at(label);
  return push(Tensor::scalar(loss), {logits.id},
              [probs = std::move(probs), label, n](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(nd.inputs[0]);
    const double up = nd.grad.at(0);
    for (Index i = 0; i < n; ++i) {
      double p = probs[static_cast<std::size_t>(i)];
      if (i == label) p -= 1.0;
      g.at(i) += up * p;
    }
  });
}

Var Tape::sigmoid_bce(Var logit, double target) {
  check(logit);
  const Tensor& tl = value(logit);
  if (tl.numel() != 1) throw std::invalid_argument("sigmoid_bce: scalar logit");
  const double z = tl.at(0);
  // stable: max(z,0) - y*z + log(1 + exp(-|z|))
  const double loss = std::max(z, 0.0) - target * z + std::log1p(std::exp(-std::abs(z)));
  return push(Tensor::scalar(loss), {logit.id}, [z, target](Tape& t, int self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& g = t.grad_buf(n.inputs[0]);
    const double sz = 1.0 / (1.0 + std::exp(-z));
    g.at(0) += n.grad.at(0) * (sz - target);
  });
}

}  // namespace persel::nd
