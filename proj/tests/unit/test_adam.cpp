#include <doctest.h>

#include <cmath>
#include <limits>

#include "persel/adam.hpp"

using namespace persel::nd;

TEST_CASE("zero gradient leaves parameters unchanged") {
  ParamStore store;
  store.add("p", Tensor::vec({1.0, -2.0}));
  Adam opt({});
  opt.step(store);
  CHECK(store.at("p").value.at(0) == 1.0);
  CHECK(store.at("p").value.at(1) == -2.0);
}

TEST_CASE("first step magnitude matches the closed form") {
  // m_hat = g, v_hat = g^2 at t=1, so the update is lr * g/(|g| + eps)
  ParamStore store;
  Param& p = store.add("p", Tensor::vec({0.0}));
  p.grad.at(0) = 1.0;
  Adam opt({.lr = 0.001});
  opt.step(store);
  CHECK(std::abs(p.value.at(0) - (-0.001 / (1.0 + 1e-8))) < 1e-18);
}

TEST_CASE("two consecutive steps match an independent recurrence") {
  // frozen from a 40-digit evaluation of the Adam recurrences:
  // theta0=0.3, lr=0.001, g1=1, g2=0.5
  ParamStore store;
  Param& p = store.add("p", Tensor::vec({0.3}));
  Adam opt({.lr = 0.001});
  p.grad.at(0) = 1.0;
  opt.step(store);
  CHECK(std::abs(p.value.at(0) - 0.2990000000099999999) < 1e-12);
  p.grad.at(0) = 0.5;
  opt.step(store);
  CHECK(std::abs(p.value.at(0) - 0.29806782038298160408) < 1e-12);
}

TEST_CASE("non-finite gradients abort the update") {
  ParamStore store;
  Param& p = store.add("p", Tensor::vec({1.0}));
  p.grad.at(0) = std::numeric_limits<double>::quiet_NaN();
  Adam opt({});
  CHECK_THROWS_WITH(opt.step(store), "non-finite gradient");
  CHECK(p.value.at(0) == 1.0);
  CHECK(opt.steps_taken() == 0);
}

TEST_CASE("stepwise exponential decay kicks in every interval") {
  ParamStore store;
  Param& p = store.add("p", Tensor::vec({0.0}));
  Adam opt({.lr = 0.01, .decay_rate = 0.96, .decay_every = 2});
  CHECK(opt.effective_lr() == 0.01);
  p.grad.at(0) = 1.0;
  opt.step(store);
  CHECK(opt.effective_lr() == 0.01);  // one step taken, still below interval
  opt.step(store);
  CHECK(std::abs(opt.effective_lr() - 0.01 * 0.96) < 1e-15);
  opt.step(store);
  opt.step(store);
  CHECK(std::abs(opt.effective_lr() - 0.01 * 0.96 * 0.96) < 1e-15);
}

TEST_CASE("updates are bit-reproducible") {
  auto run = [] {
    ParamStore store;
    Param& p = store.add("p", Tensor::vec({0.7, -0.1, 0.0}));
    Adam opt({.lr = 0.003});
    for (int s = 0; s < 25; ++s) {
      for (Index i = 0; i < 3; ++i) p.grad.at(i) = 0.01 * static_cast<double>(s + 1) * (i == 1 ? -1 : 1);
      opt.step(store);
    }
    return p.value;
  };
  Tensor a = run();
  Tensor b = run();
  for (Index i = 0; i < 3; ++i) CHECK(a.at(i) == b.at(i));
}

TEST_CASE("step counter increases by one per update") {
  ParamStore store;
  store.add("p", Tensor::vec({0.0}));
  Adam opt({});
  for (int i = 1; i <= 5; ++i) {
    opt.step(store);
    CHECK(opt.steps_taken() == i);
  }
}
