#include "sefun/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "sefun/errors.hpp"

namespace sefun::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec tanh_vec(const Vec& a) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::tanh(a[i]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- parameters

void init_uniform(Tensor& t, Rng& rng, double lo, double hi) {
  for (double& x : t.data) x = rng.uniform(lo, hi);
}

Tensor init_uniform(const std::vector<std::size_t>& shape, std::uint64_t seed) {
  Tensor t(shape);
  Rng rng(seed);
  init_uniform(t, rng);
  return t;
}

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->grad.fill(0.0);
}

double global_grad_norm(const std::vector<Param*>& params) {
  double sq = 0.0;
  for (const Param* p : params) {
    for (double g : p->grad.data) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_gradients(const std::vector<Param*>& params, double clip) {
  const double norm = global_grad_norm(params);
  if (norm > clip && norm > 0.0) {
    const double scale = clip / norm;
    for (Param* p : params) {
      for (double& g : p->grad.data) g *= scale;
    }
  }
  return norm;
}

void adam_step(const std::vector<Param*>& params, AdamState& state, double lr) {
  state.step++;
  const double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (Param* p : params) {
    if (!p->grad.same_shape(p->value)) {
      throw ShapeMismatchError("gradient shape mismatch for parameter \"" + p->name + "\"");
    }
    if (p->m.data.empty()) {
      p->m = Tensor(p->value.shape);
      p->v = Tensor(p->value.shape);
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      p->m[i] = state.beta1 * p->m[i] + (1.0 - state.beta1) * g;
      p->v[i] = state.beta2 * p->v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = p->m[i] / b1t;
      const double vhat = p->v[i] / b2t;
      p->value[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

TrainConfig TrainConfig::desk_scale() {
  TrainConfig c;
  c.hidden_dim = 64;
  c.embed_dim = 32;
  c.batch_size = 16;
  c.learning_rate = 0.005;
  c.clip = 5.0;
  c.seed = 1;
  c.max_epochs = 40;
  c.patience = 3;
  return c;
}

void TrainConfig::validate() const {
  if (hidden_dim == 0 || embed_dim == 0 || batch_size == 0 || max_epochs == 0) {
    throw Error("train config dims, batch size and epochs must be positive");
  }
  if (learning_rate <= 0.0 || clip <= 0.0) {
    throw Error("train config learning rate and clip must be positive");
  }
  if (init_lo >= init_hi) {
    throw Error("train config init range is empty");
  }
}

// ------------------------------------------------------------- vector helpers

double vdot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void vaxpy(Vec& y, double a, const Vec& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Vec vconcat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Vec vadd(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec matvec(const Tensor& W, const Vec& x) {
  const std::size_t out = W.rows(), in = W.cols();
  Vec y(out, 0.0);
  for (std::size_t r = 0; r < out; ++r) {
    const double* row = W.row_ptr(r);
    double s = 0.0;
    for (std::size_t c = 0; c < in; ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

void matvec_t_acc(const Tensor& W, const Vec& dy, Vec& dx) {
  const std::size_t out = W.rows(), in = W.cols();
  for (std::size_t r = 0; r < out; ++r) {
    const double* row = W.row_ptr(r);
    const double d = dy[r];
    for (std::size_t c = 0; c < in; ++c) dx[c] += row[c] * d;
  }
}

void outer_acc(Tensor& dW, const Vec& dy, const Vec& x) {
  const std::size_t out = dW.rows(), in = dW.cols();
  for (std::size_t r = 0; r < out; ++r) {
    double* row = dW.row_ptr(r);
    const double d = dy[r];
    for (std::size_t c = 0; c < in; ++c) row[c] += d * x[c];
  }
}

// ------------------------------------------------------- softmax and loss

Vec softmax(const Vec& logits) {
  if (logits.empty()) throw EmptyInputError("softmax of empty logits");
  double mx = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw NonFiniteInputError("non-finite logit");
    mx = std::max(mx, v);
  }
  Vec p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double cross_entropy(const Vec& probs, std::size_t gold) {
  return -std::log(std::max(probs[gold], 1e-300));
}

double softmax_xent(const Vec& logits, std::size_t gold, Vec* dlogits, Vec* probs_out) {
  Vec p = softmax(logits);
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double loss = std::log(sum) - (logits[gold] - mx);
  if (dlogits != nullptr) {
    *dlogits = p;
    (*dlogits)[gold] -= 1.0;
  }
  if (probs_out != nullptr) *probs_out = std::move(p);
  return loss;
}

// -------------------------------------------------------------------- layers

void Embedding::init(const std::string& name, std::size_t vocab, std::size_t dim,
                     Rng& rng, double lo, double hi) {
  table.init(name, {vocab, dim});
  init_uniform(table.value, rng, lo, hi);
}

Vec Embedding::lookup(std::size_t id) const {
  const double* row = table.value.row_ptr(id);
  return Vec(row, row + dim());
}

void Embedding::accumulate(std::size_t id, const Vec& g) {
  double* row = table.grad.row_ptr(id);
  for (std::size_t i = 0; i < g.size(); ++i) row[i] += g[i];
}

void Linear::init(const std::string& prefix, std::size_t out, std::size_t in, Rng& rng,
                  double lo, double hi) {
  W.init(prefix + ".W", {out, in});
  b.init(prefix + ".b", {out});
  init_uniform(W.value, rng, lo, hi);
  init_uniform(b.value, rng, lo, hi);
}

Vec Linear::forward(const Vec& x) const {
  Vec y = matvec(W.value, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value[i];
  return y;
}

Vec Linear::backward(const Vec& x, const Vec& dy) {
  outer_acc(W.grad, dy, x);
  for (std::size_t i = 0; i < dy.size(); ++i) b.grad[i] += dy[i];
  Vec dx(x.size(), 0.0);
  matvec_t_acc(W.value, dy, dx);
  return dx;
}

void GruCell::init(const std::string& prefix, std::size_t in, std::size_t hid, Rng& rng,
                   double lo, double hi) {
  Wz.init(prefix + ".Wz", {hid, in});
  Uz.init(prefix + ".Uz", {hid, hid});
  bz.init(prefix + ".bz", {hid});
  Wr.init(prefix + ".Wr", {hid, in});
  Ur.init(prefix + ".Ur", {hid, hid});
  br.init(prefix + ".br", {hid});
  Wn.init(prefix + ".Wn", {hid, in});
  Un.init(prefix + ".Un", {hid, hid});
  bn.init(prefix + ".bn", {hid});
  for (Param* p : params()) init_uniform(p->value, rng, lo, hi);
}

Vec GruCell::forward(const Vec& x, const Vec& hprev, Cache* cache) const {
  const std::size_t H = hidden_dim();
  Vec az = matvec(Wz.value, x);
  Vec ar = matvec(Wr.value, x);
  Vec an = matvec(Wn.value, x);
  Vec uz = matvec(Uz.value, hprev);
  Vec ur = matvec(Ur.value, hprev);
  Vec uh = matvec(Un.value, hprev);
  Vec z(H), r(H), n(H), h(H);
  for (std::size_t i = 0; i < H; ++i) {
    z[i] = sigmoid(az[i] + uz[i] + bz.value[i]);
    r[i] = sigmoid(ar[i] + ur[i] + br.value[i]);
    n[i] = std::tanh(an[i] + r[i] * uh[i] + bn.value[i]);
    h[i] = (1.0 - z[i]) * n[i] + z[i] * hprev[i];
  }
  if (cache != nullptr) {
    cache->x = x;
    cache->hprev = hprev;
    cache->z = z;
    cache->r = r;
    cache->n = n;
    cache->uh = std::move(uh);
  }
  return h;
}

Vec GruCell::backward(const Cache& c, const Vec& dh, Vec* dx) {
  const std::size_t H = hidden_dim();
  Vec dhprev(H, 0.0);
  Vec dan(H), daz(H), dar(H), duh(H);
  for (std::size_t i = 0; i < H; ++i) {
    const double dz = dh[i] * (c.hprev[i] - c.n[i]);
    const double dn = dh[i] * (1.0 - c.z[i]);
    dhprev[i] += dh[i] * c.z[i];
    dan[i] = dn * (1.0 - c.n[i] * c.n[i]);
    const double dr = dan[i] * c.uh[i];
    duh[i] = dan[i] * c.r[i];
    daz[i] = dz * c.z[i] * (1.0 - c.z[i]);
    dar[i] = dr * c.r[i] * (1.0 - c.r[i]);
  }
  outer_acc(Wn.grad, dan, c.x);
  outer_acc(Un.grad, duh, c.hprev);
  outer_acc(Wz.grad, daz, c.x);
  outer_acc(Uz.grad, daz, c.hprev);
  outer_acc(Wr.grad, dar, c.x);
  outer_acc(Ur.grad, dar, c.hprev);
  for (std::size_t i = 0; i < H; ++i) {
    bn.grad[i] += dan[i];
    bz.grad[i] += daz[i];
    br.grad[i] += dar[i];
  }
  matvec_t_acc(Un.value, duh, dhprev);
  matvec_t_acc(Uz.value, daz, dhprev);
  matvec_t_acc(Ur.value, dar, dhprev);
  if (dx != nullptr) {
    matvec_t_acc(Wn.value, dan, *dx);
    matvec_t_acc(Wz.value, daz, *dx);
    matvec_t_acc(Wr.value, dar, *dx);
  }
  return dhprev;
}

void BiGru::init(const std::string& prefix, std::size_t in, std::size_t hid, Rng& rng,
                 double lo, double hi) {
  fwd.init(prefix + ".fwd", in, hid, rng, lo, hi);
  bwd.init(prefix + ".bwd", in, hid, rng, lo, hi);
  proj.init(prefix + ".proj", hid, 2 * hid, rng, lo, hi);
}

std::vector<Vec> BiGru::encode_states(const std::vector<Vec>& xs, Cache* cache) const {
  if (xs.empty()) throw EmptySequenceError("bi-GRU input sequence is empty");
  const std::size_t T = xs.size();
  const std::size_t H = fwd.hidden_dim();
  cache->fsteps.resize(T);
  cache->bsteps.resize(T);
  cache->fh.resize(T);
  cache->bh.resize(T);
  Vec h(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    h = fwd.forward(xs[t], h, &cache->fsteps[t]);
    cache->fh[t] = h;
  }
  h.assign(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    h = bwd.forward(xs[t], h, &cache->bsteps[t]);
    cache->bh[t] = h;
  }
  cache->concat = vconcat(cache->fh[T - 1], cache->bh[0]);
  std::vector<Vec> states(T);
  for (std::size_t t = 0; t < T; ++t) states[t] = vconcat(cache->fh[t], cache->bh[t]);
  return states;
}

Vec BiGru::encode(const std::vector<Vec>& xs, Cache* cache) const {
  Cache local;
  Cache* c = cache != nullptr ? cache : &local;
  encode_states(xs, c);
  return proj.forward(c->concat);
}

std::vector<Vec> BiGru::backward(const Cache& c, const Vec& dv) {
  const Vec dconcat = proj.backward(c.concat, dv);
  return backward_full(c, {}, dconcat);
}

std::vector<Vec> BiGru::backward_full(const Cache& c, const std::vector<Vec>& dstates,
                                      const Vec& dconcat) {
  const std::size_t T = c.fh.size();
  const std::size_t H = fwd.hidden_dim();
  std::vector<Vec> dxs(T);
  for (std::size_t t = 0; t < T; ++t) dxs[t].assign(c.fsteps[t].x.size(), 0.0);
  std::vector<Vec> dfh(T, Vec(H, 0.0)), dbh(T, Vec(H, 0.0));
  for (std::size_t t = 0; t < dstates.size(); ++t) {
    if (dstates[t].empty()) continue;
    for (std::size_t i = 0; i < H; ++i) {
      dfh[t][i] += dstates[t][i];
      dbh[t][i] += dstates[t][H + i];
    }
  }
  if (!dconcat.empty()) {
    for (std::size_t i = 0; i < H; ++i) {
      dfh[T - 1][i] += dconcat[i];
      dbh[0][i] += dconcat[H + i];
    }
  }
  Vec carry(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    Vec dh = dfh[t];
    for (std::size_t i = 0; i < H; ++i) dh[i] += carry[i];
    carry = fwd.backward(c.fsteps[t], dh, &dxs[t]);
  }
  carry.assign(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    Vec dh = dbh[t];
    for (std::size_t i = 0; i < H; ++i) dh[i] += carry[i];
    carry = bwd.backward(c.bsteps[t], dh, &dxs[t]);
  }
  return dxs;
}

std::vector<Param*> BiGru::params() {
  std::vector<Param*> out = fwd.params();
  for (Param* p : bwd.params()) out.push_back(p);
  for (Param* p : proj.params()) out.push_back(p);
  return out;
}

void CnnEncoder::init(const std::string& prefix, std::size_t in, std::size_t hidden,
                      std::vector<std::size_t> ws, Rng& rng, double lo, double hi) {
  widths = std::move(ws);
  in_dim = in;
  out_dim = hidden;
  const std::size_t nw = widths.size();
  const std::size_t base = hidden / nw;
  const std::size_t rem = hidden % nw;
  W.resize(nw);
  b.resize(nw);
  for (std::size_t i = 0; i < nw; ++i) {
    const std::size_t filters = base + (i < rem ? 1 : 0);
    W[i].init(prefix + ".conv" + std::to_string(widths[i]) + ".W",
              {filters, widths[i] * in});
    b[i].init(prefix + ".conv" + std::to_string(widths[i]) + ".b", {filters});
    init_uniform(W[i].value, rng, lo, hi);
    init_uniform(b[i].value, rng, lo, hi);
  }
}

Vec CnnEncoder::encode(const std::vector<Vec>& xs, Cache* cache) const {
  if (xs.empty()) throw EmptySequenceError("CNN input sequence is empty");
  std::size_t max_w = 0;
  for (std::size_t w : widths) max_w = std::max(max_w, w);
  std::vector<Vec> padded = xs;
  while (padded.size() < max_w) padded.emplace_back(in_dim, 0.0);
  const std::size_t T = padded.size();

  Cache local;
  Cache* c = cache != nullptr ? cache : &local;
  c->xs = padded;
  c->argmax.assign(widths.size(), {});
  c->pooled_pre.assign(widths.size(), {});
  c->pool_tie = false;

  Vec out;
  out.reserve(out_dim);
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    const std::size_t w = widths[wi];
    const std::size_t filters = b[wi].value.size();
    c->argmax[wi].assign(filters, 0);
    c->pooled_pre[wi].assign(filters, 0.0);
    for (std::size_t f = 0; f < filters; ++f) {
      const double* wrow = W[wi].value.row_ptr(f);
      double best = 0.0, best_pre = 0.0;
      std::size_t best_p = 0;
      bool first = true;
      for (std::size_t p = 0; p + w <= T; ++p) {
        double pre = b[wi].value[f];
        for (std::size_t k = 0; k < w; ++k) {
          const Vec& x = padded[p + k];
          const double* wk = wrow + k * in_dim;
          for (std::size_t d = 0; d < in_dim; ++d) pre += wk[d] * x[d];
        }
        const double act = std::tanh(pre);
        if (first || act > best) {
          if (!first && act - best < 1e-4) c->pool_tie = true;
          best = act;
          best_pre = pre;
          best_p = p;
          first = false;
        } else if (best - act < 1e-4) {
          c->pool_tie = true;
        }
      }
      c->argmax[wi][f] = best_p;
      c->pooled_pre[wi][f] = best_pre;
      out.push_back(best);
    }
  }
  return out;
}

std::vector<Vec> CnnEncoder::backward(const Cache& c, const Vec& dv) {
  const std::size_t T = c.xs.size();
  std::vector<Vec> dxs(T, Vec(in_dim, 0.0));
  std::size_t off = 0;
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    const std::size_t w = widths[wi];
    const std::size_t filters = b[wi].value.size();
    for (std::size_t f = 0; f < filters; ++f) {
      const double act = std::tanh(c.pooled_pre[wi][f]);
      const double dpre = dv[off + f] * (1.0 - act * act);
      const std::size_t p = c.argmax[wi][f];
      double* wgrad = W[wi].grad.row_ptr(f);
      const double* wrow = W[wi].value.row_ptr(f);
      b[wi].grad[f] += dpre;
      for (std::size_t k = 0; k < w; ++k) {
        const Vec& x = c.xs[p + k];
        for (std::size_t d = 0; d < in_dim; ++d) {
          wgrad[k * in_dim + d] += dpre * x[d];
          dxs[p + k][d] += dpre * wrow[k * in_dim + d];
        }
      }
    }
    off += filters;
  }
  return dxs;
}

std::vector<Param*> CnnEncoder::params() {
  std::vector<Param*> out;
  for (std::size_t i = 0; i < W.size(); ++i) {
    out.push_back(&W[i]);
    out.push_back(&b[i]);
  }
  return out;
}

void Attention::init(const std::string& prefix, std::size_t state_dim,
                     std::size_t enc_dim, std::size_t att_dim, Rng& rng, double lo,
                     double hi) {
  Ws.init(prefix + ".Ws", {att_dim, state_dim});
  Wh.init(prefix + ".Wh", {att_dim, enc_dim});
  ba.init(prefix + ".ba", {att_dim});
  v.init(prefix + ".v", {att_dim});
  for (Param* p : params()) init_uniform(p->value, rng, lo, hi);
}

Vec Attention::forward(const Vec& s, const std::vector<Vec>& hs, Cache* cache) const {
  if (hs.empty()) throw EmptySequenceError("attention over empty encoder states");
  const std::size_t att = v.value.size();
  const Vec ws_s = matvec(Ws.value, s);
  std::vector<Vec> pre(hs.size());
  Vec scores(hs.size());
  for (std::size_t j = 0; j < hs.size(); ++j) {
    Vec a = matvec(Wh.value, hs[j]);
    for (std::size_t i = 0; i < att; ++i) a[i] += ws_s[i] + ba.value[i];
    double sc = 0.0;
    for (std::size_t i = 0; i < att; ++i) sc += v.value[i] * std::tanh(a[i]);
    pre[j] = std::move(a);
    scores[j] = sc;
  }
  Vec alpha = softmax(scores);
  Vec ctx(hs[0].size(), 0.0);
  for (std::size_t j = 0; j < hs.size(); ++j) vaxpy(ctx, alpha[j], hs[j]);
  if (cache != nullptr) {
    cache->s = s;
    cache->hs = hs;
    cache->pre = std::move(pre);
    cache->alpha = std::move(alpha);
    cache->ctx = ctx;
  }
  return ctx;
}

Vec Attention::backward(const Cache& c, const Vec& dctx, std::vector<Vec>* dhs) {
  const std::size_t J = c.hs.size();
  const std::size_t att = v.value.size();
  dhs->assign(J, Vec(c.hs[0].size(), 0.0));
  Vec dalpha(J);
  for (std::size_t j = 0; j < J; ++j) {
    dalpha[j] = vdot(dctx, c.hs[j]);
    vaxpy((*dhs)[j], c.alpha[j], dctx);
  }
  double mean = 0.0;
  for (std::size_t j = 0; j < J; ++j) mean += c.alpha[j] * dalpha[j];
  Vec ds(c.s.size(), 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const double dscore = c.alpha[j] * (dalpha[j] - mean);
    Vec dpre(att);
    for (std::size_t i = 0; i < att; ++i) {
      const double t = std::tanh(c.pre[j][i]);
      v.grad[i] += dscore * t;
      dpre[i] = dscore * v.value[i] * (1.0 - t * t);
    }
    outer_acc(Ws.grad, dpre, c.s);
    outer_acc(Wh.grad, dpre, c.hs[j]);
    for (std::size_t i = 0; i < att; ++i) ba.grad[i] += dpre[i];
    matvec_t_acc(Ws.value, dpre, ds);
    matvec_t_acc(Wh.value, dpre, (*dhs)[j]);
  }
  return ds;
}

// ------------------------------------------------------ finite differences

FdResult finite_difference_check(const std::function<double()>& loss_fn,
                                 const std::vector<Param*>& params, double h,
                                 const std::function<bool()>& tie_detector) {
  FdResult res;
  for (Param* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double lp = loss_fn();
      const bool tie_p = tie_detector && tie_detector();
      p->value[i] = orig - h;
      const double lm = loss_fn();
      const bool tie_m = tie_detector && tie_detector();
      p->value[i] = orig;
      if (tie_p || tie_m) {
        res.skipped++;
        continue;
      }
      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = p->grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-4, std::abs(analytic) + std::abs(numeric));
      res.max_rel_err = std::max(res.max_rel_err, rel);
      res.checked++;
    }
  }
  return res;
}

}  // namespace sefun::nn
