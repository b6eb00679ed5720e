#pragma once

#include <string>
#include <vector>

#include "persel/tape.hpp"

namespace persel::nd {

/// Glorot-uniform matrix in +-sqrt(6/(fan_in+fan_out)).
Tensor glorot(Index rows, Index cols, Rng& rng);

/// One LSTM direction. Gates are packed i|f|g|o along the columns of a
/// single [(input_dim + hidden_dim) x 4*hidden_dim] weight matrix; the
/// forget-gate bias starts at +1.
struct LstmParams {
  Index input_dim = 0;
  Index hidden_dim = 0;
  Param* w = nullptr;
  Param* b = nullptr;
};

struct BiLstmParams {
  LstmParams fwd;
  LstmParams bwd;
};

LstmParams make_lstm(ParamStore& store, const std::string& prefix, Index input_dim,
                     Index hidden_dim, Rng& rng);
BiLstmParams make_bilstm(ParamStore& store, const std::string& prefix, Index input_dim,
                         Index hidden_dim, Rng& rng);

/// Unidirectional pass over the first `length` rows of `inputs`; returns
/// [length, hidden]. With reversed=true the rows are visited back to front
/// and the outputs are returned in original (chronological) position.
Var lstm_run(Tape& tape, Var inputs, Index length, const LstmParams& p, bool reversed);

/// Bidirectional encoding: [capacity, 2*hidden], forward||backward per
/// position; rows at and beyond `length` are zero. The backward direction
/// sees only the first `length` positions, so padding never leaks in.
Var bilstm_encode(Tape& tape, Var inputs, Index length, const BiLstmParams& p);

/// [max over first `length` rows ; row length-1] -> rank-1 of width 2*cols.
Var pool_max_last(Tape& tape, Var hiddens, Index length);

/// Character convolution block: per window width, a bank of filters over
/// the character embeddings of one word, max-pooled over time.
struct CharConvParams {
  Index char_dim = 0;
  std::vector<Index> widths;       // e.g. {3,4,5}
  Index filters_per_width = 0;
  Param* char_table = nullptr;     // [char_vocab, char_dim], row 0 frozen zero
  std::vector<Param*> filters;     // per width: [width*char_dim, filters]
  std::vector<Param*> biases;      // per width: [filters]
  Index out_dim() const { return static_cast<Index>(widths.size()) * filters_per_width; }
};

CharConvParams make_char_conv(ParamStore& store, const std::string& prefix, Index char_vocab,
                              Index char_dim, std::vector<Index> widths, Index filters_per_width,
                              Rng& rng);

/// Embed one word's characters. `char_ids` holds the word's characters
/// (id 0 = padding); `length` is the true character count, which may be 0
/// for an empty word — the all-padding window then yields the bias vector.
Var char_conv_embed(Tape& tape, const CharConvParams& p, const std::vector<Index>& char_ids,
                    Index length);

struct LinearParams {
  Param* w = nullptr;  // [in, out]
  Param* b = nullptr;  // [out]
};

LinearParams make_linear(ParamStore& store, const std::string& prefix, Index in, Index out,
                         Rng& rng);

/// x [n, in] -> x*W + b broadcast; rank-1 input treated as a single row.
Var linear(Tape& tape, Var x, const LinearParams& p);

}  // namespace persel::nd
