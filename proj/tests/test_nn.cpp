#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sefun/errors.hpp"
#include "sefun/nn.hpp"
#include "sefun/rng.hpp"

using namespace sefun;
using nn::Vec;

namespace {

Vec rand_vec(std::size_t d, Rng& rng) {
  Vec v(d);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

std::vector<Vec> rand_seq(std::size_t len, std::size_t d, Rng& rng) {
  std::vector<Vec> xs(len);
  for (Vec& x : xs) x = rand_vec(d, rng);
  return xs;
}

// Accumulates analytic grads once, then compares against central differences.
void fd_check(const std::function<double(bool)>& loss, const std::vector<nn::Param*>& params,
              double tol = 1e-4, const std::function<bool()>& tie = nullptr) {
  nn::zero_grads(params);
  loss(true);
  nn::FdResult fd = nn::finite_difference_check([&] { return loss(false); }, params, 1e-5, tie);
  CHECK(fd.checked > 0);
  CHECK(fd.max_rel_err < tol);
}

}  // namespace

TEST_CASE("uniform init fills the requested range deterministically") {
  Tensor a = nn::init_uniform({4, 4}, 7);
  Tensor b = nn::init_uniform({4, 4}, 7);
  CHECK(a == b);
  for (double x : a.data) {
    CHECK(x >= -0.1);
    CHECK(x <= 0.1);
  }
  Tensor c = nn::init_uniform({4, 4}, 8);
  CHECK_FALSE(a == c);
}

TEST_CASE("matvec and outer_acc match hand results") {
  Tensor W(std::vector<std::size_t>{2, 3});
  // [[1,2,3],[4,5,6]]
  for (std::size_t i = 0; i < 6; ++i) W.data[i] = double(i + 1);
  Vec x = {1.0, 0.5, -1.0};
  Vec y = nn::matvec(W, x);
  CHECK(y[0] == doctest::Approx(1.0 + 1.0 - 3.0));
  CHECK(y[1] == doctest::Approx(4.0 + 2.5 - 6.0));

  Vec dx(3, 0.0);
  Vec dy = {1.0, -1.0};
  nn::matvec_t_acc(W, dy, dx);
  CHECK(dx[0] == doctest::Approx(1.0 - 4.0));
  CHECK(dx[2] == doctest::Approx(3.0 - 6.0));

  Tensor dW(std::vector<std::size_t>{2, 3});
  nn::outer_acc(dW, dy, x);
  CHECK(dW.at(0, 0) == doctest::Approx(1.0));
  CHECK(dW.at(1, 2) == doctest::Approx(1.0));
}

TEST_CASE("softmax is stable under large shifts and rejects non-finite input") {
  Vec p = nn::softmax({1000.0, 1000.0, 1000.0});
  CHECK(p[0] == doctest::Approx(1.0 / 3.0));
  double sum = p[0] + p[1] + p[2];
  CHECK(sum == doctest::Approx(1.0));
  CHECK_THROWS_AS(nn::softmax({std::nan(""), 0.0}), NonFiniteInputError);
}

TEST_CASE("softmax_xent returns -log p and softmax-minus-onehot") {
  Vec logits = {0.2, -0.4, 1.1};
  Vec probs, dlogits;
  double loss = nn::softmax_xent(logits, 2, &dlogits, &probs);
  CHECK(loss == doctest::Approx(-std::log(probs[2])));
  CHECK(dlogits[0] == doctest::Approx(probs[0]));
  CHECK(dlogits[2] == doctest::Approx(probs[2] - 1.0));
}

TEST_CASE("clip_gradients rescales only above the threshold and reports the raw norm") {
  nn::Param p;
  p.init("p", {2});
  p.grad.data = {3.0, 4.0};  // norm 5
  double norm = nn::clip_gradients({&p}, 10.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(p.grad.data[0] == doctest::Approx(3.0));  // untouched below the threshold

  double norm2 = nn::clip_gradients({&p}, 1.0);
  CHECK(norm2 == doctest::Approx(5.0));
  CHECK(std::sqrt(p.grad.data[0] * p.grad.data[0] + p.grad.data[1] * p.grad.data[1]) ==
        doctest::Approx(1.0));
  CHECK(p.grad.data[0] == doctest::Approx(0.6));
}

TEST_CASE("adam matches a hand-stepped scalar reference") {
  // One scalar parameter, constant gradient 1. With bias correction the first
  // update is exactly -lr; later steps follow the m/v recursions.
  nn::Param p;
  p.init("w", {1});
  p.value.data = {0.5};
  nn::AdamState state;
  const double lr = 0.1;

  double m = 0.0, v = 0.0, x = 0.5;
  for (int t = 1; t <= 5; ++t) {
    p.grad.data = {1.0};
    nn::adam_step({&p}, state, lr);

    m = 0.9 * m + 0.1 * 1.0;
    v = 0.999 * v + 0.001 * 1.0;
    double mhat = m / (1.0 - std::pow(0.9, t));
    double vhat = v / (1.0 - std::pow(0.999, t));
    x -= lr * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(p.value.data[0] == doctest::Approx(x).epsilon(1e-12));
  }
  // First step specifically: x0 - lr within the epsilon damping.
  CHECK(0.5 - 0.1 * (1.0 / (1.0 + 1e-8)) == doctest::Approx(0.5 - lr).epsilon(1e-7));
}

TEST_CASE("adam rejects a shape-mismatched gradient") {
  nn::Param p;
  p.init("w", {2});
  p.grad = Tensor(std::vector<std::size_t>{3});
  nn::AdamState state;
  CHECK_THROWS_AS(nn::adam_step({&p}, state, 0.1), ShapeMismatchError);
}

TEST_CASE("linear gradients pass finite differences") {
  Rng rng(11);
  nn::Linear lin;
  lin.init("fc", 6, 5, rng, -0.5, 0.5);
  Vec x = rand_vec(5, rng), w = rand_vec(6, rng);
  fd_check(
      [&](bool grads) {
        Vec y = lin.forward(x);
        if (grads) lin.backward(x, w);
        return nn::vdot(w, y);
      },
      lin.params());
}

TEST_CASE("linear backward returns dx") {
  Rng rng(12);
  nn::Linear lin;
  lin.init("fc", 3, 4, rng, -0.5, 0.5);
  Vec x = rand_vec(4, rng), dy = rand_vec(3, rng);
  Vec dx = lin.backward(x, dy);
  Vec expect(4, 0.0);
  nn::matvec_t_acc(lin.W.value, dy, expect);
  for (std::size_t i = 0; i < 4; ++i) CHECK(dx[i] == doctest::Approx(expect[i]));
}

TEST_CASE("embedding accumulate sums repeated ids") {
  Rng rng(13);
  nn::Embedding emb;
  emb.init("e", 5, 3, rng, -0.5, 0.5);
  emb.accumulate(2, {1.0, 2.0, 3.0});
  emb.accumulate(2, {1.0, 2.0, 3.0});
  CHECK(emb.table.grad.at(2, 1) == doctest::Approx(4.0));
  CHECK(emb.table.grad.at(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("gru cell gradients pass finite differences over two steps") {
  Rng rng(14);
  nn::GruCell cell;
  cell.init("g", 3, 4, rng, -0.5, 0.5);
  Vec x0 = rand_vec(3, rng), x1 = rand_vec(3, rng), h0 = rand_vec(4, rng);
  Vec w = rand_vec(4, rng);
  fd_check(
      [&](bool grads) {
        nn::GruCell::Cache c0, c1;
        Vec h1 = cell.forward(x0, h0, &c0);
        Vec h2 = cell.forward(x1, h1, &c1);
        if (grads) {
          Vec dx1(3, 0.0), dx0(3, 0.0);
          Vec dh1 = cell.backward(c1, w, &dx1);
          cell.backward(c0, dh1, &dx0);
        }
        return nn::vdot(w, h2);
      },
      cell.params());
}

TEST_CASE("bigru sentence-vector gradients pass finite differences") {
  Rng rng(15);
  nn::BiGru gru;
  gru.init("b", 3, 4, rng, -0.5, 0.5);
  std::vector<Vec> xs = rand_seq(5, 3, rng);
  Vec w = rand_vec(4, rng);
  fd_check(
      [&](bool grads) {
        nn::BiGru::Cache cache;
        Vec v = gru.encode(xs, &cache);
        if (grads) gru.backward(cache, w);
        return nn::vdot(w, v);
      },
      gru.params());
}

TEST_CASE("bigru per-step state gradients pass finite differences") {
  Rng rng(16);
  nn::BiGru gru;
  gru.init("b", 3, 4, rng, -0.5, 0.5);
  std::vector<Vec> xs = rand_seq(4, 3, rng);
  std::vector<Vec> ws = rand_seq(4, 8, rng);
  fd_check(
      [&](bool grads) {
        nn::BiGru::Cache cache;
        std::vector<Vec> states = gru.encode_states(xs, &cache);
        double loss = 0.0;
        for (std::size_t t = 0; t < states.size(); ++t) loss += nn::vdot(ws[t], states[t]);
        if (grads) gru.backward_full(cache, ws, {});
        return loss;
      },
      gru.params());
}

TEST_CASE("bigru backward returns input gradients that pass finite differences") {
  // Check d loss / d x by treating one input coordinate as the parameter.
  Rng rng(17);
  nn::BiGru gru;
  gru.init("b", 2, 3, rng, -0.5, 0.5);
  std::vector<Vec> xs = rand_seq(3, 2, rng);
  Vec w = rand_vec(3, rng);

  nn::BiGru::Cache cache;
  gru.encode(xs, &cache);
  std::vector<Vec> dxs = gru.backward(cache, w);

  const double h = 1e-6;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    for (std::size_t i = 0; i < xs[t].size(); ++i) {
      double keep = xs[t][i];
      xs[t][i] = keep + h;
      double up = nn::vdot(w, gru.encode(xs, nullptr));
      xs[t][i] = keep - h;
      double down = nn::vdot(w, gru.encode(xs, nullptr));
      xs[t][i] = keep;
      CHECK(dxs[t][i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4));
    }
  }
}

TEST_CASE("bigru rejects an empty sequence") {
  Rng rng(18);
  nn::BiGru gru;
  gru.init("b", 2, 3, rng, -0.5, 0.5);
  CHECK_THROWS_AS(gru.encode({}, nullptr), EmptySequenceError);
}

TEST_CASE("cnn encoder gradients pass finite differences away from pool ties") {
  Rng rng(19);
  nn::CnnEncoder cnn;
  cnn.init("c", 3, 6, {1, 2, 3}, rng, -0.5, 0.5);
  std::vector<Vec> xs = rand_seq(5, 3, rng);
  Vec w = rand_vec(6, rng);
  bool tie = false;
  fd_check(
      [&](bool grads) {
        nn::CnnEncoder::Cache cache;
        Vec y = cnn.encode(xs, &cache);
        tie = cache.pool_tie;
        if (grads) cnn.backward(cache, w);
        return nn::vdot(w, y);
      },
      cnn.params(), 1e-4, [&] { return tie; });
}

TEST_CASE("cnn output dim splits hidden across widths") {
  Rng rng(20);
  nn::CnnEncoder cnn;
  cnn.init("c", 4, 7, {1, 2}, rng, -0.5, 0.5);
  Vec y = cnn.encode(rand_seq(3, 4, rng), nullptr);
  CHECK(y.size() == 7);
}

TEST_CASE("attention gradients pass finite differences") {
  Rng rng(21);
  nn::Attention att;
  att.init("a", 4, 6, 3, rng, -0.5, 0.5);
  Vec s = rand_vec(4, rng), w = rand_vec(6, rng);
  std::vector<Vec> hs = rand_seq(4, 6, rng);
  fd_check(
      [&](bool grads) {
        nn::Attention::Cache cache;
        Vec ctx = att.forward(s, hs, &cache);
        if (grads) {
          std::vector<Vec> dhs;
          att.backward(cache, w, &dhs);
        }
        return nn::vdot(w, ctx);
      },
      att.params());
}

TEST_CASE("attention weights are a distribution and ctx is their average") {
  Rng rng(22);
  nn::Attention att;
  att.init("a", 3, 4, 3, rng, -0.5, 0.5);
  Vec s = rand_vec(3, rng);
  std::vector<Vec> hs = rand_seq(5, 4, rng);
  nn::Attention::Cache cache;
  Vec ctx = att.forward(s, hs, &cache);
  double sum = 0.0;
  for (double a : cache.alpha) {
    CHECK(a >= 0.0);
    sum += a;
  }
  CHECK(sum == doctest::Approx(1.0));
  for (std::size_t d = 0; d < 4; ++d) {
    double expect = 0.0;
    for (std::size_t j = 0; j < hs.size(); ++j) expect += cache.alpha[j] * hs[j][d];
    CHECK(ctx[d] == doctest::Approx(expect));
  }
}

TEST_CASE("finite_difference_check flags a wrong gradient") {
  nn::Param p;
  p.init("w", {1});
  p.value.data = {0.7};
  p.grad.data = {10.0};  // wrong on purpose: true gradient of x^2 at 0.7 is 1.4
  nn::FdResult fd = nn::finite_difference_check(
      [&] { return p.value.data[0] * p.value.data[0]; }, {&p});
  CHECK(fd.max_rel_err > 0.1);
}
