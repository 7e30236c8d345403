#include <doctest.h>

#include <cmath>

#include "umre/checkpoint.hpp"
#include "umre/nn.hpp"
#include "umre/rng.hpp"

using namespace umre;

TEST_SUITE("numcore") {

TEST_CASE("linear_forward basics") {
  Parameter w("w", 2, 2), b("b", 1, 2);
  Tensor2 x(1, 2);

  SUBCASE("identity weights") {
    w.value(0, 0) = 1.0;
    w.value(1, 1) = 1.0;
    x(0, 0) = 1.0;
    x(0, 1) = 2.0;
    const Tensor2 y = linear_forward(x, w, b);
    CHECK(y(0, 0) == 1.0);
    CHECK(y(0, 1) == 2.0);
  }
  SUBCASE("hand matrix multiply") {
    w.value(0, 0) = 2.0;
    w.value(1, 1) = 3.0;
    b.value(0, 0) = 1.0;
    b.value(0, 1) = 1.0;
    x(0, 0) = 1.0;
    x(0, 1) = 1.0;
    const Tensor2 y = linear_forward(x, w, b);
    CHECK(y(0, 0) == doctest::Approx(3.0));
    CHECK(y(0, 1) == doctest::Approx(4.0));
  }
  SUBCASE("zero input passes bias") {
    Rng rng(7);
    glorot_init(rng, w.value, 2, 2);
    b.value(0, 0) = 5.0;
    b.value(0, 1) = 7.0;
    const Tensor2 y = linear_forward(x, w, b);
    CHECK(y(0, 0) == 5.0);
    CHECK(y(0, 1) == 7.0);
  }
  SUBCASE("dimension mismatch throws") {
    Tensor2 bad(1, 3);
    CHECK_THROWS_AS(linear_forward(bad, w, b), std::invalid_argument);
  }
}

TEST_CASE("elu values") {
  Tensor2 x(1, 3);
  x(0, 0) = 0.0;
  x(0, 1) = 1.0;
  x(0, 2) = -1.0;
  const Tensor2 y = elu(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 1.0);
  CHECK(y(0, 2) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
  CHECK(y(0, 2) > -1.0);
}

TEST_CASE("softmax rows") {
  SUBCASE("symmetry and large-logit stability") {
    Tensor2 x(2, 2);
    x(1, 0) = 1000.0;
    x(1, 1) = 1000.0;
    const Tensor2 y = softmax_rows(x);
    for (int r = 0; r < 2; ++r) {
      CHECK(y(r, 0) == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(y(r, 1) == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
  SUBCASE("exponentiate and normalize") {
    Tensor2 x(1, 2);
    x(0, 0) = std::log(1.0);
    x(0, 1) = std::log(3.0);
    const Tensor2 y = softmax_rows(x);
    CHECK(y(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("rows sum to one and shift invariance") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      Tensor2 x(3, 5);
      for (double& v : x.data) v = rng.uniform(-10.0, 10.0);
      const Tensor2 y = softmax_rows(x);
      for (int r = 0; r < 3; ++r) {
        double sum = 0.0;
        for (int c = 0; c < 5; ++c) {
          CHECK(y(r, c) >= 0.0);
          sum += y(r, c);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
      Tensor2 shifted = x;
      const double shift = rng.uniform(-5.0, 5.0);
      for (int c = 0; c < 5; ++c) shifted(1, c) += shift;
      const Tensor2 y2 = softmax_rows(shifted);
      for (int c = 0; c < 5; ++c)
        CHECK(y2(1, c) == doctest::Approx(y(1, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("mse loss") {
  SUBCASE("zero at equality") {
    const std::vector<double> v{0.3, -1.2};
    const MseResult r = mse_loss(v, v);
    CHECK(r.loss == 0.0);
    CHECK(r.grad[0] == 0.0);
    CHECK(r.grad[1] == 0.0);
  }
  SUBCASE("single element") {
    const MseResult r = mse_loss(std::vector<double>{1.0}, std::vector<double>{0.0});
    CHECK(r.loss == doctest::Approx(1.0));
    CHECK(r.grad[0] == doctest::Approx(2.0));
  }
  SUBCASE("two elements") {
    const MseResult r = mse_loss(std::vector<double>{1.0, 3.0}, std::vector<double>{0.0, 1.0});
    CHECK(r.loss == doctest::Approx(2.5));
    CHECK(r.grad[0] == doctest::Approx(1.0));
    CHECK(r.grad[1] == doctest::Approx(2.0));
  }
  SUBCASE("empty input errors") {
    CHECK_THROWS_AS(mse_loss(std::vector<double>{}, std::vector<double>{}),
                    std::invalid_argument);
  }
}

TEST_CASE("optimizer step behavior") {
  SUBCASE("zero gradient, zero decay is identity") {
    Parameter p("p", 2, 2);
    p.value(0, 0) = 1.5;
    p.value(1, 1) = -0.25;
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW opt({&p}, cfg);
    const Tensor2 before = p.value;
    for (int i = 0; i < 5; ++i) opt.step();
    for (size_t i = 0; i < before.data.size(); ++i) CHECK(p.value.data[i] == before.data[i]);
  }
  SUBCASE("decay-only step shrinks by 1 - lr*lambda") {
    Parameter p("p", 1, 1);
    p.value(0, 0) = 2.0;
    AdamConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.5;
    AdamW opt({&p}, cfg);
    opt.step();
    CHECK(p.value(0, 0) == doctest::Approx(2.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-14));
  }
  SUBCASE("descends on f(w) = w^2") {
    Parameter p("p", 1, 1);
    p.value(0, 0) = 1.0;
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW opt({&p}, cfg);
    const double before = p.value(0, 0) * p.value(0, 0);
    p.grad(0, 0) = 2.0 * p.value(0, 0);
    opt.step();
    const double after = p.value(0, 0) * p.value(0, 0);
    CHECK(after < before);
    CHECK(p.grad(0, 0) == 0.0);  // step zeroes gradients
  }
}

TEST_CASE("finite_diff_check") {
  SUBCASE("quadratic") {
    Parameter p("w", 1, 1);
    p.value(0, 0) = 3.0;
    p.grad(0, 0) = 6.0;  // d/dw w^2
    auto f = [&]() { return p.value(0, 0) * p.value(0, 0); };
    CHECK(finite_diff_check(f, {&p}, 1e-5) < 1e-8);
  }
  SUBCASE("linear is near machine precision") {
    Parameter p("w", 1, 2);
    p.value(0, 0) = 0.5;
    p.value(0, 1) = -2.0;
    p.grad(0, 0) = 3.0;
    p.grad(0, 1) = -1.0;
    auto f = [&]() { return 3.0 * p.value(0, 0) - p.value(0, 1); };
    CHECK(finite_diff_check(f, {&p}, 1e-5) < 1e-9);
  }
  SUBCASE("eps outside range errors") {
    Parameter p("w", 1, 1);
    auto f = [&]() { return 0.0; };
    CHECK_THROWS_AS(finite_diff_check(f, {&p}, 1e-2), std::invalid_argument);
    CHECK_THROWS_AS(finite_diff_check(f, {&p}, 1e-9), std::invalid_argument);
  }
}

TEST_CASE("mlp forward/backward gradient check") {
  Rng rng(42);
  Mlp mlp = Mlp::make(rng, "m", 3, {8, 8}, 2, Act::kRelu);
  Tensor2 x(4, 3);
  for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
  Tensor2 target(4, 2);
  for (double& v : target.data) v = rng.uniform(-1.0, 1.0);

  auto loss_fn = [&]() {
    const Tensor2 y = mlp.forward(x);
    double loss = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) {
      const double d = y.data[i] - target.data[i];
      loss += d * d;
    }
    return loss;
  };
  MlpCache cache;
  const Tensor2 y = mlp.forward(x, &cache);
  Tensor2 d(4, 2);
  for (size_t i = 0; i < y.data.size(); ++i) d.data[i] = 2.0 * (y.data[i] - target.data[i]);
  mlp.backward(cache, d);
  CHECK(finite_diff_check(loss_fn, mlp.params(), 1e-5) < 1e-6);
}

TEST_CASE("ops stay finite on random inputs in [-10, 10]") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor2 x(2, 4);
    for (double& v : x.data) v = rng.uniform(-10.0, 10.0);
    CHECK(all_finite(elu(x)));
    CHECK(all_finite(softmax_rows(x)));
    Parameter w("w", 4, 3), b("b", 1, 3);
    for (double& v : w.value.data) v = rng.uniform(-10.0, 10.0);
    for (double& v : b.value.data) v = rng.uniform(-10.0, 10.0);
    CHECK(all_finite(linear_forward(x, w, b)));
  }
}

TEST_CASE("checkpoint json round trip is bit-stable") {
  Rng rng(5);
  Parameter a("block.w", 3, 4), c("block.b", 1, 4);
  for (double& v : a.value.data) v = rng.normal() * 1e3;
  for (double& v : c.value.data) v = rng.uniform(-1e-7, 1e-7);
  a.value(0, 0) = 0.1;  // not exactly representable
  const nlohmann::ordered_json j = params_to_json({&a, &c});
  const std::string text = j.dump();

  Parameter a2("block.w", 3, 4), c2("block.b", 1, 4);
  params_from_json(nlohmann::json::parse(text), {&a2, &c2});
  for (size_t i = 0; i < a.value.data.size(); ++i) CHECK(a.value.data[i] == a2.value.data[i]);
  for (size_t i = 0; i < c.value.data.size(); ++i) CHECK(c.value.data[i] == c2.value.data[i]);
  // a second serialization is byte-identical
  CHECK(params_to_json({&a2, &c2}).dump() == text);

  SUBCASE("shape mismatch rejected") {
    Parameter wrong("block.w", 4, 3), c3("block.b", 1, 4);
    CHECK_THROWS(params_from_json(nlohmann::json::parse(text), {&wrong, &c3}));
  }
}

}  // TEST_SUITE
