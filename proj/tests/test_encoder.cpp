#include <doctest.h>

#include <cmath>

#include "umre/encoder.hpp"
#include "umre/nn.hpp"
#include "umre/rng.hpp"

using namespace umre;

namespace {
EmbeddingTables make_tables(uint64_t seed, int vocab = 10, int dim = 3) {
  Rng rng(seed);
  EmbeddingTables t;
  t.item = EmbeddingTable::make(rng, "item", vocab, dim);
  t.category = EmbeddingTable::make(rng, "category", vocab, dim);
  t.action = EmbeddingTable::make(rng, "action", vocab, dim);
  return t;
}
}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("embed_sequence") {
  EmbeddingTables tables = make_tables(1);

  SUBCASE("empty history gives zero rows") {
    const Tensor2 rows = embed_sequence({}, tables);
    CHECK(rows.rows == 0);
    CHECK(rows.cols == 9);
  }
  SUBCASE("padding ids give an all-zero row") {
    const std::vector<BehaviorEvent> ev{{0, 0, 0}};
    const Tensor2 rows = embed_sequence(ev, tables);
    CHECK(rows.rows == 1);
    for (int c = 0; c < rows.cols; ++c) CHECK(rows(0, c) == 0.0);
  }
  SUBCASE("rows follow event order") {
    const std::vector<BehaviorEvent> ev{{1, 2, 3}, {4, 5, 6}};
    const Tensor2 rows = embed_sequence(ev, tables);
    CHECK(rows(0, 0) == tables.item.row(1)[0]);
    CHECK(rows(1, 0) == tables.item.row(4)[0]);
    CHECK(rows(0, 3) == tables.category.row(2)[0]);
    CHECK(rows(1, 6) == tables.action.row(6)[0]);
  }
  SUBCASE("out-of-vocab id errors") {
    const std::vector<BehaviorEvent> ev{{10, 0, 0}};
    CHECK_THROWS_AS(embed_sequence(ev, tables), std::invalid_argument);
  }
  SUBCASE("histories beyond 30 events are rejected") {
    std::vector<BehaviorEvent> ev(31, BehaviorEvent{1, 1, 1});
    CHECK_THROWS_AS(embed_sequence(ev, tables), std::invalid_argument);
  }
}

TEST_CASE("embedding gradient accumulation skips the padding row") {
  EmbeddingTables tables = make_tables(2);
  const std::vector<BehaviorEvent> ev{{0, 1, 2}, {3, 0, 1}};
  Tensor2 d(2, 9);
  for (double& v : d.data) v = 1.0;
  embed_sequence_backward(ev, tables, d);
  for (int c = 0; c < 3; ++c) {
    CHECK(tables.item.table.grad(0, c) == 0.0);      // padding row untouched
    CHECK(tables.category.table.grad(0, c) == 0.0);
    CHECK(tables.item.table.grad(3, c) == 1.0);
    CHECK(tables.category.table.grad(1, c) == 1.0);
    CHECK(tables.action.table.grad(2, c) == 1.0);
    CHECK(tables.action.table.grad(1, c) == 1.0);
  }
}

TEST_CASE("gru scalar hand computation") {
  // z = sig(0.5x - 0.3h + 0.1), r = sig(-0.4x + 0.2h),
  // n = tanh(0.8x + r*(0.6h) - 0.2), h' = (1-z)n + zh
  GruCell cell;
  cell.in_dim = 1;
  cell.hidden = 1;
  auto scalar = [](const char* name, double v) {
    Parameter p(name, 1, 1);
    p.value(0, 0) = v;
    return p;
  };
  cell.wz = scalar("wz", 0.5);
  cell.uz = scalar("uz", -0.3);
  cell.bz = scalar("bz", 0.1);
  cell.wr = scalar("wr", -0.4);
  cell.ur = scalar("ur", 0.2);
  cell.br = scalar("br", 0.0);
  cell.wn = scalar("wn", 0.8);
  cell.un = scalar("un", 0.6);
  cell.bn = scalar("bn", -0.2);

  Tensor2 xs(2, 1);
  xs(0, 0) = 1.0;
  xs(1, 0) = -0.5;

  Tensor2 one_step(1, 1);
  one_step(0, 0) = 1.0;
  const std::vector<double> h1 = gru_forward(cell, one_step);
  CHECK(h1[0] == doctest::Approx(0.190300127309921).epsilon(1e-12));

  const std::vector<double> h2 = gru_forward(cell, xs);
  CHECK(h2[0] == doctest::Approx(-0.18498153574955556).epsilon(1e-12));
}

TEST_CASE("empty sequence returns the zero initial state") {
  Rng rng(3);
  GruCell cell = GruCell::make(rng, "gru", 4, 3);
  const std::vector<double> h = gru_forward(cell, Tensor2(0, 4));
  for (double v : h) CHECK(v == 0.0);
}

TEST_CASE("hidden state components stay inside (-1, 1)") {
  Rng rng(5);
  GruCell cell = GruCell::make(rng, "gru", 4, 6);
  for (int trial = 0; trial < 30; ++trial) {
    Tensor2 xs(10, 4);
    for (double& v : xs.data) v = rng.uniform(-10.0, 10.0);
    for (double v : gru_forward(cell, xs)) CHECK(std::abs(v) < 1.0);
  }
}

TEST_CASE("appending padding rows changes the output (padding is not skipped)") {
  Rng rng(7);
  GruCell cell = GruCell::make(rng, "gru", 3, 4);
  EmbeddingTables tables = make_tables(8, 6, 1);
  const std::vector<BehaviorEvent> real{{1, 2, 3}, {2, 3, 4}};
  std::vector<BehaviorEvent> padded = real;
  padded.push_back({0, 0, 0});
  const std::vector<double> h_real = gru_forward(cell, embed_sequence(real, tables));
  const std::vector<double> h_padded = gru_forward(cell, embed_sequence(padded, tables));
  bool differs = false;
  for (size_t i = 0; i < h_real.size(); ++i)
    if (h_real[i] != h_padded[i]) differs = true;
  CHECK(differs);
}

TEST_CASE("gru gradients match finite differences") {
  Rng rng(11);
  GruCell cell = GruCell::make(rng, "gru", 3, 4);
  Tensor2 xs(5, 3);
  for (double& v : xs.data) v = rng.uniform(-1.0, 1.0);
  std::vector<double> probe(4);
  for (double& v : probe) v = rng.uniform(-1.0, 1.0);

  auto loss_fn = [&]() {
    const std::vector<double> h = gru_forward(cell, xs);
    double acc = 0.0;
    for (size_t i = 0; i < h.size(); ++i) acc += h[i] * probe[i];
    return acc;
  };
  GruCache cache;
  gru_forward(cell, xs, &cache);
  const Tensor2 d_rows = gru_backward(cell, cache, probe);
  CHECK(finite_diff_check(loss_fn, cell.params(), 1e-6) < 1e-4);

  // input gradient against finite differences
  const double eps = 1e-6;
  for (size_t i = 0; i < xs.data.size(); ++i) {
    const double saved = xs.data[i];
    xs.data[i] = saved + eps;
    const double fp = loss_fn();
    xs.data[i] = saved - eps;
    const double fm = loss_fn();
    xs.data[i] = saved;
    CHECK(d_rows.data[i] == doctest::Approx((fp - fm) / (2.0 * eps)).epsilon(1e-5));
  }
}

}  // TEST_SUITE
