#include <doctest.h>

#include <cmath>

#include "interact/gradcheck.hpp"
#include "interact/nn.hpp"
#include "interact/rng.hpp"
#include "interact/tensor.hpp"

using namespace interact;

namespace {

using Matrixd = Tensor<double>::Matrix;

Matrixd randm(Rng& rng, int r, int c) {
  Matrixd m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

}  // namespace

TEST_CASE("linear computes xW + b") {
  Tape<double> tape;
  Matrixd x(1, 2);
  x << 1.0, 2.0;
  auto y = tape.linear(tape.constant(x), tape.constant(Matrixd::Identity(2, 2)),
                       tape.constant(Matrixd::Zero(1, 2)));
  CHECK(y->value(0, 0) == 1.0);
  CHECK(y->value(0, 1) == 2.0);

  Matrixd w(2, 2);
  w << 1.0, 2.0, 3.0, 4.0;
  Matrixd b(1, 2);
  b << 0.5, 0.5;
  Matrixd ones(1, 2);
  ones << 1.0, 1.0;
  auto y2 = tape.linear(tape.constant(ones), tape.constant(w), tape.constant(b));
  CHECK(y2->value(0, 0) == doctest::Approx(4.5));
  CHECK(y2->value(0, 1) == doctest::Approx(6.5));
}

TEST_CASE("shape mismatches name both shapes") {
  Tape<double> tape;
  auto a = tape.constant(Matrixd::Zero(2, 3));
  auto b = tape.constant(Matrixd::Zero(4, 5));
  try {
    (void)tape.matmul(a, b);
    FAIL("expected shape error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2 x 3]") != std::string::npos);
    CHECK(msg.find("[4 x 5]") != std::string::npos);
  }
  CHECK_THROWS_AS((void)tape.add(a, b), std::invalid_argument);
}

TEST_CASE("seeded linear gradient check stays under 1e-6") {
  Rng rng(2211);
  auto x = make_tensor<double>(randm(rng, 3, 4), true, "x");
  auto w = make_tensor<double>(randm(rng, 4, 2), true, "w");
  auto b = make_tensor<double>(randm(rng, 1, 2), true, "b");
  const auto report = grad_check(
      "linear", [&](Tape<double>& t) { return t.sum_all(t.linear(x, w, b)); }, {x, w, b});
  CHECK(report.max_rel_error <= 1e-6);
}

TEST_CASE("softmax rows are stochastic to 1e-12") {
  Rng rng(5);
  Tape<double> tape;
  auto y = tape.softmax_rows(tape.constant(randm(rng, 20, 9) * 10.0));
  for (int i = 0; i < y->rows(); ++i) {
    CHECK(std::abs(y->value.row(i).sum() - 1.0) < 1e-12);
    CHECK(y->value.row(i).minCoeff() >= 0.0);
  }
}

TEST_CASE("multi_head_attention honors its contracts") {
  Rng rng(9);
  const int dim = 8, heads = 2;

  SUBCASE("identical keys mean uniform attention: rows average V") {
    Tape<double> tape;
    auto q = tape.constant(randm(rng, 3, dim));
    auto k = tape.constant(Matrixd::Ones(5, 1) * randm(rng, 1, dim));  // equal rows
    Matrixd v_data = randm(rng, 5, dim);
    auto v = tape.constant(v_data);
    auto wo = tape.constant(Matrixd::Identity(dim, dim));
    auto bo = tape.constant(Matrixd::Zero(1, dim));
    auto out = multi_head_attention(tape, q, k, v, wo, bo, heads);
    const Matrixd expected_row = v_data.colwise().mean();
    for (int i = 0; i < out->rows(); ++i) {
      CHECK((out->value.row(i) - expected_row).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  SUBCASE("a single key/value row passes through the output projection") {
    Tape<double> tape;
    auto q = tape.constant(randm(rng, 4, dim));
    auto k = tape.constant(randm(rng, 1, dim));
    Matrixd v_data = randm(rng, 1, dim);
    auto v = tape.constant(v_data);
    Matrixd wo_data = randm(rng, dim, dim);
    Matrixd bo_data = randm(rng, 1, dim);
    auto out = multi_head_attention(tape, q, k, v, tape.constant(wo_data),
                                    tape.constant(bo_data), heads);
    const Matrixd expected = v_data * wo_data + bo_data;
    for (int i = 0; i < out->rows(); ++i) {
      CHECK((out->value.row(i) - expected.row(0)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  SUBCASE("head divisibility is enforced") {
    Tape<double> tape;
    auto q = tape.constant(randm(rng, 2, 6));
    CHECK_THROWS_AS(
        (void)multi_head_attention(tape, q, q, q, tape.constant(Matrixd::Identity(6, 6)),
                                   tape.constant(Matrixd::Zero(1, 6)), 4),
        std::invalid_argument);
  }

  SUBCASE("seeded gradient check under 1e-5") {
    auto q = make_tensor<double>(randm(rng, 3, dim), true, "q");
    auto k = make_tensor<double>(randm(rng, 5, dim), true, "k");
    auto v = make_tensor<double>(randm(rng, 5, dim), true, "v");
    auto wo = make_tensor<double>(randm(rng, dim, dim), true, "wo");
    auto bo = make_tensor<double>(randm(rng, 1, dim), true, "bo");
    const auto report = grad_check(
        "mha",
        [&](Tape<double>& t) {
          return t.sum_all(multi_head_attention(t, q, k, v, wo, bo, heads));
        },
        {q, k, v, wo, bo});
    CHECK(report.max_rel_error <= 1e-5);
  }
}

TEST_CASE("encoder and decoder layers") {
  SUBCASE("zeroed sublayer weights pass the input straight through") {
    Rng init(3);
    ParameterStore<double> store;
    EncoderLayer<double> layer(store, "enc", 8, 2, init);
    for (const auto& p : store.all()) {
      if (p->name.find(".gain") == std::string::npos) p->value.setZero();
    }
    Rng rng(4);
    const Matrixd x = randm(rng, 5, 8);
    Tape<double> tape;
    auto out = layer.forward(tape, tape.constant(x));
    CHECK((out->value - x).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("decoder with a single query keeps a 1 x D shape for any memory length") {
    Rng init(5);
    ParameterStore<double> store;
    DecoderLayer<double> layer(store, "dec", 8, 2, init);
    Rng rng(6);
    for (int mem_len : {1, 3, 17}) {
      Tape<double> tape;
      auto out = layer.forward(tape, tape.constant(randm(rng, 1, 8)),
                               tape.constant(randm(rng, mem_len, 8)));
      CHECK(out->rows() == 1);
      CHECK(out->cols() == 8);
    }
  }

  SUBCASE("full-layer gradient check on a seeded 4x8 input stays under 1e-4") {
    Rng init(7);
    ParameterStore<double> store;
    EncoderLayer<double> layer(store, "enc", 8, 2, init);
    Rng rng(8);
    auto x = make_tensor<double>(randm(rng, 4, 8), true, "x");
    auto leaves = store.all();
    leaves.push_back(x);
    const auto report = grad_check(
        "encoder",
        [&](Tape<double>& t) {
          auto y = layer.forward(t, x);
          return t.sum_all(t.mul(y, y));
        },
        leaves);
    CHECK(report.max_rel_error <= 1e-4);
  }
}

TEST_CASE("grad_check reports sane oracles") {
  Rng rng(10);
  auto x = make_tensor<double>(randm(rng, 3, 3), true, "x");

  SUBCASE("sum has an all-ones gradient") {
    const auto report =
        grad_check("sum", [&](Tape<double>& t) { return t.sum_all(x); }, {x});
    CHECK(report.max_rel_error <= 1e-10);
    for (int i = 0; i < x->size(); ++i) CHECK(x->grad.data()[i] == 1.0);
  }

  SUBCASE("a constant function has zero gradients everywhere") {
    const auto report = grad_check(
        "constant", [&](Tape<double>& t) { return t.constant(Matrixd::Ones(1, 1)); }, {x});
    CHECK(report.max_rel_error == 0.0);
  }
}

TEST_CASE("backward accumulation and determinism") {
  Rng rng(12);
  auto w = make_tensor<double>(randm(rng, 4, 4), true, "w");
  const Matrixd x = randm(rng, 2, 4);

  SUBCASE("two backward passes double the leaf gradients exactly") {
    Tape<double> tape;
    auto y = tape.matmul(tape.constant(x), w);
    auto loss = tape.sum_all(tape.mul(y, y));
    w->zero_grad();
    tape.backward(loss);
    const Matrixd once = w->grad;
    tape.backward(loss);
    CHECK((w->grad - 2.0 * once).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("forward is bit-deterministic across repeated calls") {
    Tape<double> t1, t2;
    auto y1 = t1.softmax_rows(t1.matmul(t1.constant(x), w));
    auto y2 = t2.softmax_rows(t2.matmul(t2.constant(x), w));
    CHECK(y1->value == y2->value);
  }

  SUBCASE("inference tapes refuse backward") {
    Tape<double> tape(/*grad_enabled=*/false);
    auto y = tape.sum_all(tape.matmul(tape.constant(x), w));
    CHECK_THROWS_AS(tape.backward(y), std::logic_error);
  }
}

TEST_CASE("debug mode flags non-finite op results") {
  set_debug_finite_checks(true);
  Tape<double> tape;
  Matrixd exploding(1, 1);
  exploding << 1e308;
  auto big = tape.constant(exploding);
  CHECK_THROWS_AS((void)tape.mul(big, big), std::runtime_error);
  set_debug_finite_checks(false);
  CHECK_NOTHROW((void)tape.mul(big, big));
}

TEST_CASE("row_cosine rejects zero-norm rows") {
  Tape<double> tape;
  auto a = tape.constant(Matrixd::Zero(2, 3));
  auto b = tape.constant(Matrixd::Ones(2, 3));
  CHECK_THROWS_AS((void)tape.row_cosine(a, b), std::domain_error);
}

TEST_CASE("parameter stores reject duplicates and count scalars") {
  Rng rng(1);
  ParameterStore<double> store;
  store.create_fan_in("a", 3, 4, 3, rng);
  store.create_constant("b", 1, 4, 0.0);
  CHECK(store.parameter_count() == 16);
  CHECK_THROWS_AS((void)store.create_constant("a", 1, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)store.get("missing"), std::invalid_argument);
  CHECK(store.all()[0]->name == "a");
}
