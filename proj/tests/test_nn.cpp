#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"
#include "langlab/nn/attention.hpp"
#include "langlab/nn/lstm.hpp"
#include "langlab/nn/ops.hpp"
#include "langlab/nn/parameters.hpp"
#include "langlab/nn/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace langlab;
using namespace langlab::nn;
using langlab::testsupport::gradcheck;

namespace {

Vec rand_vec(Index n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

Tensor rand_tensor(std::vector<Index> shape, std::mt19937_64& rng, bool requires_grad = true) {
  Index n = numel_of(shape);
  return Tensor::from_values(std::move(shape), rand_vec(n, rng), requires_grad);
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("tensor factories validate shapes") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.ndim() == 2);
  CHECK_THROWS_AS(Tensor::zeros({0, 2}), std::invalid_argument);
  Vec v(3);
  v << 1, 2, 3;
  CHECK_THROWS_AS(Tensor::from_values({2, 2}, v), std::invalid_argument);
  CHECK(Tensor::scalar(5.0).value_at(0) == 5.0);
  CHECK(Tensor::vector(v).dim(0) == 3);
}

TEST_CASE("backward of x.x gives 2x and accumulates") {
  Tensor x = Tensor::vector((Vec(1) << 3.0).finished(), true);
  Tensor loss = dot(x, x);
  CHECK(loss.value_at(0) == 9.0);
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(6.0));
  backward(loss);  // second sweep accumulates into the leaf
  CHECK(x.grad()[0] == doctest::Approx(12.0));
}

TEST_CASE("backward rejects non-scalar roots") {
  Tensor x = Tensor::vector((Vec(2) << 1.0, 2.0).finished(), true);
  Tensor y = add(x, x);
  CHECK_THROWS_AS(backward(y), std::invalid_argument);
}

TEST_CASE("diamond graphs propagate once per edge") {
  // loss = dot(x, x) + dot(x, x) through shared subexpression
  Tensor x = Tensor::vector((Vec(1) << 2.0).finished(), true);
  Tensor d = dot(x, x);
  Tensor loss = add(d, d);
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(8.0));  // 2 * (2x)
}

TEST_CASE("embed_lookup selects rows and routes sparse gradients") {
  Vec flat(4);
  flat << 1, 2, 3, 4;
  Tensor table = Tensor::from_values({2, 2}, flat, true);
  Tensor row1 = embed_lookup(table, 1);
  CHECK(row1.values()[0] == 3.0);
  CHECK(row1.values()[1] == 4.0);

  Tensor row0 = embed_lookup(table, 0);
  Tensor loss = dot(row0, Tensor::vector((Vec(2) << 1.0, 1.0).finished()));
  backward(loss);
  const Vec& g = table.grad();
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 1.0);
  CHECK(g[2] == 0.0);
  CHECK(g[3] == 0.0);

  CHECK_THROWS_AS(embed_lookup(table, 2), std::out_of_range);
  CHECK_THROWS_AS(embed_lookup(table, -1), std::out_of_range);
}

TEST_CASE("embed_lookup on a big table returns the exact row") {
  const Index rows = 975, cols = 64;
  Vec flat(rows * cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) flat[i * cols + j] = static_cast<double>(i) + 0.001 * static_cast<double>(j);
  Tensor table = Tensor::from_values({rows, cols}, std::move(flat));
  Tensor last = embed_lookup(table, rows - 1);
  REQUIRE(last.dim(0) == cols);
  for (Index j = 0; j < cols; ++j)
    CHECK(last.values()[j] == static_cast<double>(rows - 1) + 0.001 * static_cast<double>(j));
}

TEST_CASE("elementwise op values") {
  Tensor a = Tensor::vector((Vec(2) << 1.0, -2.0).finished());
  Tensor b = Tensor::vector((Vec(2) << 3.0, 5.0).finished());
  CHECK(add(a, b).values()[1] == 3.0);
  CHECK(mul(a, b).values()[1] == -10.0);
  CHECK(sigmoid(Tensor::vector(Vec::Zero(3))).values()[0] == 0.5);
  CHECK(nn::tanh(Tensor::vector(Vec::Zero(3))).values()[2] == 0.0);
  CHECK_THROWS_AS(add(a, Tensor::vector(Vec::Zero(3))), std::invalid_argument);
  CHECK_THROWS_AS(mul(a, Tensor::vector(Vec::Zero(3))), std::invalid_argument);
}

TEST_CASE("matvec multiplies and validates shapes") {
  Vec w(4);
  w << 1, 2, 3, 4;  // [[1,2],[3,4]] row-major
  Tensor m = Tensor::from_values({2, 2}, w);
  Tensor x = Tensor::vector((Vec(2) << 1.0, 1.0).finished());
  Vec y = matvec(m, x).values();
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 7.0);
  CHECK_THROWS_AS(matvec(m, Tensor::vector(Vec::Zero(3))), std::invalid_argument);
  CHECK_THROWS_AS(matvec(x, x), std::invalid_argument);
}

TEST_CASE("concat and slice route segments") {
  Tensor a = Tensor::vector((Vec(2) << 1.0, 2.0).finished());
  Tensor b = Tensor::vector((Vec(1) << 3.0).finished());
  Tensor c = concat({a, b});
  REQUIRE(c.dim(0) == 3);
  CHECK(c.values()[2] == 3.0);
  Tensor s = slice(c, 1, 2);
  CHECK(s.values()[0] == 2.0);
  CHECK(s.values()[1] == 3.0);
  CHECK_THROWS_AS(slice(c, 2, 2), std::out_of_range);
  CHECK_THROWS_AS(slice(c, -1, 1), std::out_of_range);
  CHECK_THROWS_AS(concat(std::span<const Tensor>{}), std::invalid_argument);
}

TEST_CASE("softmax is stable and normalized") {
  Vec big(2);
  big << 1000.0, 0.0;
  Vec p = softmax(Tensor::vector(big)).values();
  CHECK(p.allFinite());
  CHECK(p[0] == doctest::Approx(1.0));
  Vec uniform = softmax(Tensor::vector(Vec::Zero(4))).values();
  CHECK(uniform[3] == doctest::Approx(0.25));
  CHECK(uniform.sum() == doctest::Approx(1.0));
}

TEST_CASE("softmax_xent matches hand-computed losses") {
  Tensor two_zeros = Tensor::vector(Vec::Zero(2));
  CHECK(softmax_xent(two_zeros, 0).value_at(0) == doctest::Approx(0.6931471805599453).epsilon(1e-12));

  Vec l(3);
  l << 1, 2, 3;
  double loss = softmax_xent(Tensor::vector(l), 2).value_at(0);
  CHECK(loss == doctest::Approx(0.407606).epsilon(1e-5));
  CHECK(loss == doctest::Approx(std::log(std::exp(-2.0) + std::exp(-1.0) + 1.0)).epsilon(1e-12));

  Vec huge(2);
  huge << 1000.0, 0.0;
  double stable = softmax_xent(Tensor::vector(huge), 0).value_at(0);
  CHECK(std::isfinite(stable));
  CHECK(stable == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(stable >= 0.0);

  Vec extreme(3);
  extreme << 1e6, -1e6, 0.0;
  CHECK(std::isfinite(softmax_xent(Tensor::vector(extreme), 1).value_at(0)));

  CHECK_THROWS_AS(softmax_xent(two_zeros, 2), std::out_of_range);
  CHECK_THROWS_AS(softmax_xent(two_zeros, -1), std::out_of_range);
}

TEST_CASE("gradcheck: every primitive op over randomized shapes") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<Index> dim(1, 5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = dim(rng);
    Tensor r = rand_tensor({n}, rng, false);

    {
      Tensor a = rand_tensor({n}, rng), b = rand_tensor({n}, rng);
      CHECK(gradcheck([&] { return dot(add(a, b), r); }, {a, b}) < 1e-4);
      CHECK(gradcheck([&] { return dot(mul(a, b), r); }, {a, b}) < 1e-4);
      CHECK(gradcheck([&] { return dot(sigmoid(a), r); }, {a}) < 1e-4);
      CHECK(gradcheck([&] { return dot(nn::tanh(a), r); }, {a}) < 1e-4);
      CHECK(gradcheck([&] { return dot(softmax(a), r); }, {a}) < 1e-4);
      CHECK(gradcheck([&] { return dot(a, b); }, {a, b}) < 1e-4);
    }
    {
      const Index m = dim(rng);
      Tensor w = rand_tensor({m, n}, rng);
      Tensor x = rand_tensor({n}, rng);
      Tensor rm = rand_tensor({m}, rng, false);
      CHECK(gradcheck([&] { return dot(matvec(w, x), rm); }, {w, x}) < 1e-4);
    }
    {
      Tensor table = rand_tensor({3, n}, rng);
      CHECK(gradcheck([&] { return dot(embed_lookup(table, 1), r); }, {table}) < 1e-4);
    }
    {
      Tensor a = rand_tensor({n}, rng), b = rand_tensor({2}, rng);
      Tensor rc = rand_tensor({n + 2}, rng, false);
      CHECK(gradcheck([&] { return dot(concat({a, b}), rc); }, {a, b}) < 1e-4);
      Tensor big = rand_tensor({n + 2}, rng);
      CHECK(gradcheck([&] { return dot(slice(big, 1, n), r); }, {big}) < 1e-4);
    }
    {
      Tensor x = rand_tensor({n}, rng);
      Tensor s = rand_tensor({1}, rng);
      CHECK(gradcheck([&] { return dot(scale(x, s), r); }, {x, s}) < 1e-4);
      Tensor logits = rand_tensor({n}, rng);
      CHECK(gradcheck([&] { return softmax_xent(logits, n - 1); }, {logits}) < 1e-4);
    }
  }
}

TEST_CASE("lstm zero-parameter recurrences") {
  const Index d = 3, h = 4;
  LstmParams p;
  p.w = Tensor::zeros({4 * h, d + h});
  p.b = Tensor::zeros({4 * h});
  p.input_dim = d;
  p.hidden = h;

  std::mt19937_64 rng(5);
  Tensor x = rand_tensor({d}, rng, false);

  LstmState from_zero = lstm_step(p, x, lstm_initial_state(h));
  CHECK(from_zero.hidden.values().isZero(0.0));
  CHECK(from_zero.cell.values().isZero(0.0));

  Vec c0 = rand_vec(h, rng);
  LstmState state{rand_tensor({h}, rng, false), Tensor::vector(c0)};
  LstmState next = lstm_step(p, x, state);
  for (Index i = 0; i < h; ++i) {
    CHECK(next.cell.values()[i] == doctest::Approx(0.5 * c0[i]).epsilon(1e-12));
    CHECK(next.hidden.values()[i] == doctest::Approx(0.5 * std::tanh(0.5 * c0[i])).epsilon(1e-12));
  }
}

TEST_CASE("lstm_params initializes forget bias high") {
  ParameterSet ps(7);
  LstmParams p = lstm_params(ps, "enc", 3, 4);
  CHECK(p.w.dim(0) == 16);
  CHECK(p.w.dim(1) == 7);
  CHECK(p.w.values().minCoeff() >= -0.1);
  CHECK(p.w.values().maxCoeff() <= 0.1);
  const Vec& b = p.b.values();
  for (Index i = 0; i < 16; ++i) CHECK(b[i] == (i >= 4 && i < 8 ? 1.0 : 0.0));

  ParameterSet ps2(7);
  LstmParams p2 = lstm_params(ps2, "enc", 3, 4);
  CHECK(p.w.values() == p2.w.values());  // same seed, same init

  // fetch-or-create path returns the registered tensors
  LstmParams again = lstm_params(ps, "enc", 3, 4);
  CHECK(again.w.impl() == p.w.impl());
  CHECK_THROWS_AS(lstm_params(ps, "enc", 5, 4), std::invalid_argument);
}

TEST_CASE("lstm_step validates widths") {
  ParameterSet ps(1);
  LstmParams p = lstm_params(ps, "l", 3, 2);
  std::mt19937_64 rng(2);
  CHECK_THROWS_AS(lstm_step(p, rand_tensor({4}, rng, false), lstm_initial_state(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(lstm_step(p, rand_tensor({3}, rng, false), lstm_initial_state(5)),
                  std::invalid_argument);
}

TEST_CASE("gradcheck: two chained lstm steps") {
  std::mt19937_64 rng(99);
  ParameterSet ps(3);
  const Index d = 3, h = 2;
  LstmParams p = lstm_params(ps, "l", d, h);
  Tensor x1 = rand_tensor({d}, rng);
  Tensor x2 = rand_tensor({d}, rng);
  Tensor h0 = rand_tensor({h}, rng);
  Tensor c0 = rand_tensor({h}, rng);
  Tensor r = rand_tensor({h}, rng, false);
  auto forward = [&] {
    LstmState s = lstm_step(p, x2, lstm_step(p, x1, LstmState{h0, c0}));
    return dot(s.hidden, r);
  };
  CHECK(gradcheck(forward, {p.w, p.b, x1, x2, h0, c0}) < 1e-4);
}

TEST_CASE("bilstm_encode shapes and zero propagation") {
  const Index d = 2, h = 3;
  LstmParams zero_f, zero_b;
  zero_f.w = zero_b.w = Tensor::zeros({4 * h, d + h});
  zero_f.b = zero_b.b = Tensor::zeros({4 * h});
  zero_f.input_dim = zero_b.input_dim = d;
  zero_f.hidden = zero_b.hidden = h;

  std::mt19937_64 rng(10);
  std::vector<Tensor> one{rand_tensor({d}, rng, false)};
  auto encoded = bilstm_encode(zero_f, zero_b, one);
  REQUIRE(encoded.size() == 1);
  CHECK(encoded[0].dim(0) == 2 * h);
  CHECK(encoded[0].values().isZero(0.0));

  CHECK_THROWS_AS(bilstm_encode(zero_f, zero_b, std::span<const Tensor>{}),
                  std::invalid_argument);
}

TEST_CASE("bilstm reversal symmetry") {
  std::mt19937_64 rng(77);
  ParameterSet ps(8);
  const Index d = 2, h = 3;
  LstmParams fwd = lstm_params(ps, "f", d, h);
  LstmParams bwd = lstm_params(ps, "b", d, h);

  std::vector<Tensor> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(rand_tensor({d}, rng, false));
  std::vector<Tensor> rev(xs.rbegin(), xs.rend());

  auto out = bilstm_encode(fwd, bwd, xs);
  auto swapped = bilstm_encode(bwd, fwd, rev);
  const std::size_t n = xs.size();
  for (std::size_t t = 0; t < n; ++t) {
    Vec expect(2 * h);
    expect << out[n - 1 - t].values().tail(h), out[n - 1 - t].values().head(h);
    CHECK((swapped[t].values() - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
}

TEST_CASE("gradcheck: bilstm encoder") {
  std::mt19937_64 rng(13);
  ParameterSet ps(21);
  const Index d = 2, h = 2;
  LstmParams fwd = lstm_params(ps, "f", d, h);
  LstmParams bwd = lstm_params(ps, "b", d, h);
  std::vector<Tensor> xs{rand_tensor({d}, rng), rand_tensor({d}, rng), rand_tensor({d}, rng)};
  Tensor r = rand_tensor({2 * h}, rng, false);
  auto forward = [&] {
    auto enc = bilstm_encode(fwd, bwd, xs);
    Tensor loss = dot(enc[0], r);
    for (std::size_t t = 1; t < enc.size(); ++t) loss = add(loss, dot(enc[t], r));
    return loss;
  };
  CHECK(gradcheck(forward, {fwd.w, fwd.b, bwd.w, bwd.b, xs[0], xs[1], xs[2]}) < 1e-4);
}

TEST_CASE("attend: degenerate and hand-computed cases") {
  const Index q = 2, e = 3, a = 2;
  AttentionParams zero;
  zero.w = Tensor::zeros({a, q + e});
  zero.b = Tensor::zeros({a});
  zero.v = Tensor::zeros({a});
  zero.query_dim = q;
  zero.enc_dim = e;

  std::mt19937_64 rng(31);
  Tensor query = rand_tensor({q}, rng, false);

  // single encoding comes back exactly, with weight exactly 1
  Tensor only = rand_tensor({e}, rng, false);
  std::vector<Tensor> single{only};
  AttendResult res = attend(zero, query, single);
  CHECK(res.weights.value_at(0) == 1.0);
  CHECK(res.context.values() == only.values());

  // zero parameters force uniform scores: context is the plain average
  Tensor u = rand_tensor({e}, rng, false);
  Tensor w = rand_tensor({e}, rng, false);
  std::vector<Tensor> pair{u, w};
  res = attend(zero, query, pair);
  CHECK(res.weights.value_at(0) == doctest::Approx(0.5).epsilon(1e-15));
  for (Index i = 0; i < e; ++i)
    CHECK(res.context.values()[i] ==
          doctest::Approx(0.5 * u.values()[i] + 0.5 * w.values()[i]).epsilon(1e-12));

  // identical encodings return that encoding for any parameters
  ParameterSet ps(17);
  AttentionParams learned = attention_params(ps, "att", q, e, a);
  std::vector<Tensor> same{u, u, u};
  res = attend(learned, query, same);
  for (Index i = 0; i < e; ++i)
    CHECK(res.context.values()[i] == doctest::Approx(u.values()[i]).epsilon(1e-12));

  CHECK_THROWS_AS(attend(zero, query, std::span<const Tensor>{}), std::invalid_argument);
  CHECK_THROWS_AS(attend(zero, rand_tensor({q + 1}, rng, false), pair), std::invalid_argument);
}

TEST_CASE("attention weights form a probability simplex") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    ParameterSet ps(100 + static_cast<std::uint64_t>(trial));
    const Index q = 3, e = 2, a = 4;
    AttentionParams p = attention_params(ps, "att", q, e, a);
    std::uniform_int_distribution<int> len(1, 6);
    std::vector<Tensor> encs;
    for (int j = len(rng); j > 0; --j) encs.push_back(rand_tensor({e}, rng, false));
    AttendResult res = attend(p, rand_tensor({q}, rng, false), encs);
    CHECK(res.weights.values().minCoeff() >= 0.0);
    CHECK(std::abs(res.weights.values().sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("gradcheck: attention") {
  std::mt19937_64 rng(41);
  ParameterSet ps(55);
  const Index q = 2, e = 2, a = 3;
  AttentionParams p = attention_params(ps, "att", q, e, a);
  Tensor query = rand_tensor({q}, rng);
  std::vector<Tensor> encs{rand_tensor({e}, rng), rand_tensor({e}, rng)};
  Tensor r = rand_tensor({e}, rng, false);
  auto forward = [&] { return dot(attend(p, query, encs).context, r); };
  CHECK(gradcheck(forward, {p.w, p.b, p.v, query, encs[0], encs[1]}) < 1e-4);
}

TEST_CASE("gradcheck: composite lookup -> lstm -> loss") {
  std::mt19937_64 rng(47);
  ParameterSet ps(9);
  const Index d = 3, h = 2;
  Tensor table = ps.add_uniform("table", {4, d});
  LstmParams p = lstm_params(ps, "l", d, h);
  Tensor proj = ps.add_uniform("proj", {3, h});
  auto forward = [&] {
    LstmState s = lstm_initial_state(h);
    for (Index sym : {1, 3, 0}) s = lstm_step(p, embed_lookup(table, sym), s);
    return softmax_xent(matvec(proj, s.hidden), 2);
  };
  CHECK(gradcheck(forward, {table, p.w, p.b, proj}) < 1e-4);
}

TEST_CASE("no-grad guard suppresses recording") {
  Tensor x = Tensor::vector((Vec(2) << 0.3, -0.7).finished(), true);
  {
    NoGradGuard guard;
    Tensor y = sigmoid(x);
    CHECK_FALSE(y.requires_grad());
    CHECK(y.impl()->is_leaf());
  }
  Tensor z = sigmoid(x);
  CHECK(z.requires_grad());
}

TEST_CASE("adam first step matches the hand-computed update") {
  ParameterSet ps;
  Tensor p = ps.add_values("p", {1}, (Vec(1) << 3.0).finished());
  ps.zero_grad();
  p.ensure_grad()[0] = 1.0;
  adam_step(ps);
  CHECK(ps.step_count() == 1);

  const double m = (1.0 - 0.9) * 1.0;
  const double v = (1.0 - 0.999) * 1.0;
  const double bc1 = 1.0 - std::pow(0.9, 1.0);
  const double bc2 = 1.0 - std::pow(0.999, 1.0);
  const double expected = 3.0 - 0.001 * ((m / bc1) / (std::sqrt(v / bc2) + 1e-8));
  CHECK(p.value_at(0) == expected);
  CHECK(p.value_at(0) - 3.0 == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-9));
  CHECK((!p.has_grad() || p.grad().isZero(0.0)));  // gradients cleared
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
  ParameterSet ps(3);
  Tensor p = ps.add_uniform("w", {2, 2});
  Vec before = p.values();
  ps.zero_grad();
  adam_step(ps);
  CHECK(p.values() == before);
  CHECK(ps.step_count() == 1);
}

TEST_CASE("adam rejects missing gradients") {
  ParameterSet ps(3);
  ps.add_uniform("w", {2});
  CHECK_THROWS_AS(adam_step(ps), std::logic_error);
  CHECK(ps.step_count() == 0);
}

TEST_CASE("identical gradients produce identical updates") {
  ParameterSet ps;
  Tensor a = ps.add_values("a", {3}, (Vec(3) << 1.0, 2.0, 3.0).finished());
  Tensor b = ps.add_values("b", {3}, (Vec(3) << 1.0, 2.0, 3.0).finished());
  ps.zero_grad();
  a.ensure_grad() << 0.5, -1.0, 2.0;
  b.ensure_grad() << 0.5, -1.0, 2.0;
  adam_step(ps);
  CHECK(a.values() == b.values());
}

TEST_CASE("adam is deterministic across runs") {
  auto run = [] {
    ParameterSet ps(2024);
    Tensor w = ps.add_uniform("w", {3, 2});
    Tensor b = ps.add_zeros("b", {2});
    for (int step = 0; step < 5; ++step) {
      ps.zero_grad();
      w.ensure_grad() = w.values() * 0.25;
      b.ensure_grad() = Vec::Constant(2, 0.1);
      adam_step(ps);
    }
    Vec all(w.numel() + b.numel());
    all << w.values(), b.values();
    return all;
  };
  CHECK(run() == run());
}

TEST_CASE("row-sparse adam freezes untouched rows") {
  ParameterSet ps;
  Vec init(6);
  init << 1, 2, 3, 4, 5, 6;
  Tensor table = ps.add_values("langs", {3, 2}, init);
  ps.mark_row_sparse("langs");
  CHECK(ps.is_row_sparse("langs"));

  ps.zero_grad();
  table.ensure_grad().segment(0, 2) << 1.0, 1.0;  // touch row 0 only
  adam_step(ps);
  CHECK(table.values()[0] != 1.0);
  CHECK(table.values().segment(2, 4) == init.segment(2, 4));

  // an all-zero-gradient step moves nothing, despite row 0's live moments
  Vec after_first = table.values();
  ps.zero_grad();
  adam_step(ps);
  CHECK(table.values() == after_first);

  // a dense parameter with the same history keeps moving on momentum
  ParameterSet dense;
  Tensor d = dense.add_values("d", {1}, (Vec(1) << 1.0).finished());
  dense.zero_grad();
  d.ensure_grad()[0] = 1.0;
  adam_step(dense);
  Vec mid = d.values();
  dense.zero_grad();
  adam_step(dense);
  CHECK(d.values()[0] != mid[0]);

  CHECK_THROWS_AS(ps.mark_row_sparse("missing"), std::out_of_range);
  ParameterSet other;
  other.add_values("vec", {2}, Vec::Zero(2));
  CHECK_THROWS_AS(other.mark_row_sparse("vec"), std::invalid_argument);
}

TEST_CASE("sgd applies plain descent") {
  ParameterSet ps;
  Tensor p = ps.add_values("p", {2}, (Vec(2) << 1.0, 2.0).finished());
  ps.zero_grad();
  p.ensure_grad() << 10.0, -10.0;
  sgd_step(ps, 0.1);
  CHECK(p.values()[0] == doctest::Approx(0.0));
  CHECK(p.values()[1] == doctest::Approx(3.0));
  CHECK(ps.step_count() == 1);
  CHECK(p.grad().isZero(0.0));
}

TEST_CASE("scale_gradients rescales in place") {
  ParameterSet ps;
  Tensor p = ps.add_values("p", {2}, Vec::Zero(2));
  ps.zero_grad();
  p.ensure_grad() << 4.0, 8.0;
  ps.scale_gradients(0.25);
  CHECK(p.grad()[0] == 1.0);
  CHECK(p.grad()[1] == 2.0);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  namespace fs = std::filesystem;
  fs::create_directories("scratch");
  ParameterSet ps(123);
  Tensor w = ps.add_uniform("model.W", {2, 3});
  Tensor b = ps.add_zeros("model.b", {3});
  Tensor langs = ps.add_gaussian("langs", {4, 2}, 0.0, 0.1);
  ps.mark_row_sparse("langs");
  ps.zero_grad();
  w.ensure_grad().setConstant(0.3);
  b.ensure_grad().setConstant(-0.2);
  langs.ensure_grad().segment(0, 2).setConstant(1.0);
  adam_step(ps);

  const std::string path = "scratch/ckpt.txt";
  ps.save(path);
  ParameterSet loaded = ParameterSet::load_file(path);
  CHECK(loaded.names() == ps.names());
  CHECK(loaded.step_count() == 1);
  CHECK(loaded.is_row_sparse("langs"));
  CHECK_FALSE(loaded.is_row_sparse("model.W"));
  for (const auto& name : ps.names()) {
    CHECK(loaded.get(name).shape() == ps.get(name).shape());
    CHECK(loaded.get(name).values() == ps.get(name).values());
  }

  // saving the loaded set reproduces the file byte for byte
  const std::string path2 = "scratch/ckpt2.txt";
  loaded.save(path2);
  auto bytes = [](const std::string& p) {
    auto lines = read_lines(p);
    return join(lines, "\n");
  };
  CHECK(bytes(path) == bytes(path2));

  // moments survive: one more identical step on both sets stays in lockstep
  auto step_all = [](ParameterSet& s) {
    s.zero_grad();
    s.get("model.W").ensure_grad().setConstant(0.3);
    s.get("model.b").ensure_grad().setConstant(-0.2);
    s.get("langs").ensure_grad().segment(0, 2).setConstant(1.0);
    adam_step(s);
  };
  step_all(ps);
  step_all(loaded);
  for (const auto& name : ps.names())
    CHECK(loaded.get(name).values() == ps.get(name).values());
}

TEST_CASE("checkpoint loader rejects malformed files") {
  namespace fs = std::filesystem;
  fs::create_directories("scratch");
  write_file_atomic("scratch/bad1.txt", "not a checkpoint\n");
  CHECK_THROWS_AS(ParameterSet::load_file("scratch/bad1.txt"), DataError);

  ParameterSet ps(1);
  ps.add_uniform("w", {2, 2});
  ps.save("scratch/good.txt");
  auto lines = read_lines("scratch/good.txt");
  lines.pop_back();
  write_file_atomic("scratch/truncated.txt", join(lines, "\n") + "\n");
  CHECK_THROWS_AS(ParameterSet::load_file("scratch/truncated.txt"), DataError);
}

TEST_CASE("parameter registry basics") {
  ParameterSet ps(4);
  Tensor w = ps.add_uniform("b_name", {2});
  ps.add_uniform("a_name", {2});
  CHECK(ps.names() == std::vector<std::string>{"a_name", "b_name"});
  CHECK(ps.total_values() == 4);
  CHECK(ps.contains("a_name"));
  CHECK_FALSE(ps.contains("zzz"));
  CHECK_THROWS_AS(ps.add_uniform("a_name", {2}), std::invalid_argument);
  CHECK_THROWS_AS(ps.add_uniform("bad name", {2}), std::invalid_argument);
  CHECK_THROWS_AS(ps.get("zzz"), std::out_of_range);
  CHECK_THROWS_AS(ps.adopt("plain", Tensor::zeros({2})), std::invalid_argument);

  auto snap = ps.export_values();
  Vec before = w.values();
  w.values().setConstant(99.0);
  ps.import_values(snap);
  CHECK(w.values() == before);
}

}  // TEST_SUITE
