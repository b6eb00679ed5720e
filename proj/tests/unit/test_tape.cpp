#include <doctest.h>

#include <cmath>

#include "persel/tape.hpp"

using namespace persel::nd;

TEST_CASE("sum backward gives all-ones gradient") {
  ParamStore store;
  Param& x = store.add("x", Tensor::vec({1.0, -2.0, 3.5, 0.0}));
  Tape tape;
  Var loss = tape.sum(tape.param(x));
  tape.backward(loss);
  for (Index i = 0; i < 4; ++i) CHECK(x.grad.at(i) == 1.0);
}

TEST_CASE("sigmoid at zero has gradient 0.25") {
  ParamStore store;
  Param& x = store.add("x", Tensor::vec({0.0}));
  Tape tape;
  Var loss = tape.sum(tape.sigmoid(tape.param(x)));
  tape.backward(loss);
  CHECK(std::abs(x.grad.at(0) - 0.25) < 1e-15);
}

TEST_CASE("a parameter used twice accumulates both contributions") {
  ParamStore store;
  Param& x = store.add("x", Tensor::vec({2.0}));
  Tape tape;
  Var a = tape.param(x);
  Var b = tape.param(x);          // second mount of the same parameter
  Var loss = tape.sum(tape.mul(a, b));  // x*x -> d/dx = 2x = 4
  tape.backward(loss);
  CHECK(std::abs(x.grad.at(0) - 4.0) < 1e-15);
}

TEST_CASE("inputs are detached and never receive gradient") {
  ParamStore store;
  Param& w = store.add("w", Tensor::vec({3.0}));
  Tape tape;
  Var c = tape.input(Tensor::vec({5.0}));
  Var loss = tape.sum(tape.mul(c, tape.param(w)));
  tape.backward(loss);
  CHECK(std::abs(w.grad.at(0) - 5.0) < 1e-15);
  CHECK(tape.grad(c).at(0) == 0.0);  // reported as zeros, nothing flowed
}

TEST_CASE("non-contributing parameters hold zero after backward") {
  ParamStore store;
  Param& used = store.add("used", Tensor::vec({1.0}));
  Param& unused = store.add("unused", Tensor::vec({1.0}));
  Tape tape;
  Var u = tape.param(used);
  tape.param(unused);  // on tape, but not reachable from the loss
  Var loss = tape.sum(u);
  tape.backward(loss);
  CHECK(used.grad.at(0) == 1.0);
  CHECK(unused.grad.at(0) == 0.0);
}

TEST_CASE("backward requires a scalar loss and runs once") {
  ParamStore store;
  Param& x = store.add("x", Tensor::vec({1.0, 2.0}));
  Tape tape;
  Var v = tape.param(x);
  CHECK_THROWS(tape.backward(v));  // not scalar
  Tape tape2;
  Var loss = tape2.sum(tape2.param(x));
  tape2.backward(loss);
  CHECK_THROWS(tape2.backward(loss));
}

TEST_CASE("foreign variables are rejected") {
  Tape a;
  Tape b;
  Var va = a.input(Tensor::vec({1.0}));
  CHECK_NOTHROW(a.value(va));
  Var bogus{7};
  CHECK_THROWS(b.value(bogus));
}

TEST_CASE("matmul and transpose forward values") {
  Tape tape;
  Var a = tape.input(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Var b = tape.input(Tensor({3, 2}, {7, 8, 9, 10, 11, 12}));
  Var c = tape.matmul(a, b);
  CHECK(tape.value(c).at(0, 0) == 58.0);
  CHECK(tape.value(c).at(0, 1) == 64.0);
  CHECK(tape.value(c).at(1, 0) == 139.0);
  CHECK(tape.value(c).at(1, 1) == 154.0);
  Var bt = tape.transpose(b);
  Var c2 = tape.matmul_nt(a, bt);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) CHECK(tape.value(c2).at(i, j) == tape.value(c).at(i, j));
}
