#include <doctest.h>

#include <cmath>
#include <vector>

#include "persel/gradcheck.hpp"
#include "persel/layers.hpp"
#include "persel/tape.hpp"

using namespace persel::nd;

namespace {

CharConvParams tiny_conv(ParamStore& store, Rng& rng) {
  return make_char_conv(store, "cc", /*char_vocab=*/8, /*char_dim=*/3, {3, 4, 5},
                        /*filters_per_width=*/2, rng);
}

}  // namespace

TEST_CASE("zero filter weights reduce the embedding to the bias vector") {
  ParamStore store;
  Rng rng(3);
  CharConvParams p = tiny_conv(store, rng);
  for (std::size_t wi = 0; wi < p.widths.size(); ++wi) {
    for (Index i = 0; i < p.filters[wi]->value.numel(); ++i) p.filters[wi]->value.at(i) = 0.0;
    p.biases[wi]->value.at(0) = 0.25 * static_cast<double>(wi + 1);
    p.biases[wi]->value.at(1) = -0.5;
  }
  std::vector<Index> word{5, 5, 5, 5, 0, 0};  // one repeated character, padded
  Tape tape;
  const Tensor& v = tape.value(char_conv_embed(tape, p, word, 4));
  REQUIRE(v.numel() == 6);
  for (std::size_t wi = 0; wi < 3; ++wi) {
    CHECK(v.at(static_cast<Index>(2 * wi)) == 0.25 * static_cast<double>(wi + 1));
    CHECK(v.at(static_cast<Index>(2 * wi + 1)) == -0.5);
  }
}

TEST_CASE("empty word yields the all-padding bias-driven vector") {
  ParamStore store;
  Rng rng(5);
  CharConvParams p = tiny_conv(store, rng);
  std::vector<Index> empty(6, 0);
  Tape tape;
  const Tensor& v = tape.value(char_conv_embed(tape, p, empty, 0));
  // padding embeds to zero, so conv output = bias for every filter
  Index k = 0;
  for (std::size_t wi = 0; wi < 3; ++wi)
    for (Index f = 0; f < 2; ++f) CHECK(v.at(k++) == p.biases[wi]->value.at(f));
}

TEST_CASE("identical words embed identically") {
  ParamStore store;
  Rng rng(6);
  CharConvParams p = tiny_conv(store, rng);
  std::vector<Index> word{2, 4, 3, 7, 1, 0};
  Tape t1, t2;
  const Tensor& a = t1.value(char_conv_embed(t1, p, word, 5));
  const Tensor& b = t2.value(char_conv_embed(t2, p, word, 5));
  for (Index i = 0; i < a.numel(); ++i) CHECK(a.at(i) == b.at(i));
}

TEST_CASE("width-3 single filter matches a hand convolution on a 4-char word") {
  ParamStore store;
  Rng rng(8);
  CharConvParams p = make_char_conv(store, "cc", 8, 2, {3}, 1, rng);
  const std::vector<Index> word{2, 3, 4, 5, 0, 0};

  // independent recompute: windows [c0 c1 c2], [c1 c2 c3], dot + bias, max
  double best = -1e300;
  for (int t = 0; t < 2; ++t) {
    double acc = p.biases[0]->value.at(0);
    for (int k = 0; k < 3; ++k)
      for (Index j = 0; j < 2; ++j)
        acc += p.char_table->value.at(word[static_cast<std::size_t>(t + k)], j) *
               p.filters[0]->value.at(static_cast<Index>(k) * 2 + j, 0);
    best = std::max(best, acc);
  }

  Tape tape;
  const Tensor& v = tape.value(char_conv_embed(tape, p, word, 4));
  REQUIRE(v.numel() == 1);
  CHECK(std::abs(v.at(0) - best) < 1e-12);
}

TEST_CASE("char conv gradients pass finite differences") {
  ParamStore store;
  Rng rng(13);
  CharConvParams p = make_char_conv(store, "cc", 6, 2, {2, 3}, 2, rng);
  std::vector<Index> word{1, 2, 3, 0, 0};
  auto build = [&](Tape& tape) {
    Var e = char_conv_embed(tape, p, word, 3);
    Var w = tape.input(Tensor::vec({1.0, -0.5, 0.25, 2.0}));
    return tape.sum(tape.mul(e, w));
  };
  auto rep = gradient_check(store, build, 1e-5);
  CHECK(rep.max_rel_error < 1e-6);
  // padding row of the character table stays untouched
  store.zero_grads();
  Tape tape;
  Var loss = build(tape);
  tape.backward(loss);
  for (Index j = 0; j < 2; ++j) CHECK(p.char_table->grad.at(0, j) == 0.0);
}
