#include "persel/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace persel::nd {

Tensor glorot(Index rows, Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t({rows, cols});
  for (Index i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform(-limit, limit);
  return t;
}

LstmParams make_lstm(ParamStore& store, const std::string& prefix, Index input_dim,
                     Index hidden_dim, Rng& rng) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.w = &store.add(prefix + ".w", glorot(input_dim + hidden_dim, 4 * hidden_dim, rng));
  Tensor bias({4 * hidden_dim});
  for (Index j = hidden_dim; j < 2 * hidden_dim; ++j) bias.at(j) = 1.0;  // forget gate
  p.b = &store.add(prefix + ".b", std::move(bias));
  return p;
}

BiLstmParams make_bilstm(ParamStore& store, const std::string& prefix, Index input_dim,
                         Index hidden_dim, Rng& rng) {
  BiLstmParams p;
  p.fwd = make_lstm(store, prefix + ".fwd", input_dim, hidden_dim, rng);
  p.bwd = make_lstm(store, prefix + ".bwd", input_dim, hidden_dim, rng);
  return p;
}

Var lstm_run(Tape& tape, Var inputs, Index length, const LstmParams& p, bool reversed) {
  const Tensor& tin = tape.value(inputs);
  if (tin.rank() != 2 || tin.dim(1) != p.input_dim)
    throw std::invalid_argument("lstm: input width mismatch");
  if (length < 1) throw std::invalid_argument("empty sequence");
  if (length > tin.dim(0)) throw std::invalid_argument("lstm: length exceeds capacity");

  const Index h = p.hidden_dim;
  Var wv = tape.param(*p.w);
  Var bv = tape.param(*p.b);
  Var hprev = tape.zeros({h});
  Var cprev = tape.zeros({h});

  std::vector<Var> outs(static_cast<std::size_t>(length));
  for (Index step = 0; step < length; ++step) {
    const Index t = reversed ? length - 1 - step : step;
    Var xt = tape.row(inputs, t);
    std::vector<Var> xh{xt, hprev};
    Var cat = tape.reshape(tape.concat(xh), {1, p.input_dim + h});
    Var gates = tape.add_rowvec(tape.matmul(cat, wv), bv);  // [1, 4h]
    Var flat = tape.reshape(gates, {4 * h});
    Var ig = tape.sigmoid(tape.slice_cols(flat, 0, h));
    Var fg = tape.sigmoid(tape.slice_cols(flat, h, h));
    Var gg = tape.tanh(tape.slice_cols(flat, 2 * h, h));
    Var og = tape.sigmoid(tape.slice_cols(flat, 3 * h, h));
    Var c = tape.add(tape.mul(fg, cprev), tape.mul(ig, gg));
    Var hh = tape.mul(og, tape.tanh(c));
    outs[static_cast<std::size_t>(t)] = hh;
    hprev = hh;
    cprev = c;
  }
  return tape.vstack(outs);
}

Var bilstm_encode(Tape& tape, Var inputs, Index length, const BiLstmParams& p) {
  // note: node storage reallocates as ops are appended, so cache extents
  // instead of holding references into the tape
  const Index capacity = tape.value(inputs).dim(0);
  if (length < 1) throw std::invalid_argument("empty sequence");
  Var fwd = lstm_run(tape, inputs, length, p.fwd, false);
  Var bwd = lstm_run(tape, inputs, length, p.bwd, true);
  std::vector<Var> rows(static_cast<std::size_t>(capacity));
  Var zero_row;
  for (Index t = 0; t < capacity; ++t) {
    if (t < length) {
      std::vector<Var> parts{tape.row(fwd, t), tape.row(bwd, t)};
      rows[static_cast<std::size_t>(t)] = tape.concat(parts);
    } else {
      if (!zero_row.valid()) zero_row = tape.zeros({2 * p.fwd.hidden_dim});
      rows[static_cast<std::size_t>(t)] = zero_row;
    }
  }
  return tape.vstack(rows);
}

Var pool_max_last(Tape& tape, Var hiddens, Index length) {
  const Tensor& th = tape.value(hiddens);
  if (th.rank() != 2) throw std::invalid_argument("pool_max_last: rank-2 input");
  if (length < 1 || length > th.dim(0)) throw std::invalid_argument("pool_max_last: bad length");
  std::vector<Var> parts{tape.max_rows(hiddens, length), tape.row(hiddens, length - 1)};
  return tape.concat(parts);
}

CharConvParams make_char_conv(ParamStore& store, const std::string& prefix, Index char_vocab,
                              Index char_dim, std::vector<Index> widths, Index filters_per_width,
                              Rng& rng) {
  CharConvParams p;
  p.char_dim = char_dim;
  p.widths = std::move(widths);
  p.filters_per_width = filters_per_width;
  Tensor table = glorot(char_vocab, char_dim, rng);
  for (Index j = 0; j < char_dim; ++j) table.at(0, j) = 0.0;  // padding row
  p.char_table = &store.add(prefix + ".chars", std::move(table));
  p.char_table->frozen_values = char_dim;
  for (Index w : p.widths) {
    const std::string tag = prefix + ".w" + std::to_string(w);
    p.filters.push_back(&store.add(tag + ".filt", glorot(w * char_dim, filters_per_width, rng)));
    p.biases.push_back(&store.add(tag + ".bias", Tensor({filters_per_width})));
  }
  return p;
}

Var char_conv_embed(Tape& tape, const CharConvParams& p, const std::vector<Index>& char_ids,
                    Index length) {
  if (length < 0 || length > static_cast<Index>(char_ids.size()))
    throw std::invalid_argument("char_conv_embed: bad length");
  Var emb = tape.embedding(*p.char_table, char_ids);  // [n_chars, char_dim]
  std::vector<Var> pooled;
  for (std::size_t wi = 0; wi < p.widths.size(); ++wi) {
    const Index w = p.widths[wi];
    // windows over the true characters only; a too-short (or empty) word
    // gets a single window that runs into the padding
    const Index n_windows = std::max<Index>(1, length - w + 1);
    std::vector<Var> window_rows(static_cast<std::size_t>(n_windows));
    for (Index t = 0; t < n_windows; ++t) {
      Var win = tape.slice_rows(emb, t, w);
      window_rows[static_cast<std::size_t>(t)] = tape.reshape(win, {w * p.char_dim});
    }
    Var stacked = tape.vstack(window_rows);                        // [n_windows, w*char_dim]
    Var conv = tape.add_rowvec(tape.matmul(stacked, tape.param(*p.filters[wi])),
                               tape.param(*p.biases[wi]));         // [n_windows, filters]
    pooled.push_back(tape.max_rows(conv, n_windows));
  }
  return tape.concat(pooled);
}

LinearParams make_linear(ParamStore& store, const std::string& prefix, Index in, Index out,
                         Rng& rng) {
  LinearParams p;
  p.w = &store.add(prefix + ".w", glorot(in, out, rng));
  p.b = &store.add(prefix + ".b", Tensor({out}));
  return p;
}

Var linear(Tape& tape, Var x, const LinearParams& p) {
  const int in_rank = tape.value(x).rank();
  const Index in_dim = tape.value(x).dim(in_rank == 1 ? 0 : 1);
  Var xm = in_rank == 1 ? tape.reshape(x, {1, in_dim}) : x;
  Var out = tape.add_rowvec(tape.matmul(xm, tape.param(*p.w)), tape.param(*p.b));
  if (in_rank == 1) return tape.reshape(out, {p.b->value.dim(0)});
  return out;
}

}  // namespace persel::nd
