#ifndef SEFUN_NN_HPP
#define SEFUN_NN_HPP

// Minimal NN toolkit: embeddings, FC, multi-width CNN, GRU / bi-GRU, additive
// attention, stabilized softmax + cross-entropy, Adam with global-norm
// clipping, and a central finite-difference checker. Everything is double
// precision, single threaded, and deterministic given an Rng.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sefun/rng.hpp"
#include "sefun/tensor.hpp"

namespace sefun::nn {

using Vec = std::vector<double>;

// ---------------------------------------------------------------- parameters

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m, v;  // Adam moments, sized on first adam_step

  void init(std::string n, std::vector<std::size_t> shape) {
    name = std::move(n);
    value = Tensor(shape);
    grad = Tensor(std::move(shape));
  }
};

void init_uniform(Tensor& t, Rng& rng, double lo = -0.1, double hi = 0.1);
Tensor init_uniform(const std::vector<std::size_t>& shape, std::uint64_t seed);

void zero_grads(const std::vector<Param*>& params);
double global_grad_norm(const std::vector<Param*>& params);
// Rescales so the global L2 norm is at most `clip`; returns the pre-clip norm.
double clip_gradients(const std::vector<Param*>& params, double clip);

struct AdamState {
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(const std::vector<Param*>& params, AdamState& state, double lr);

struct TrainConfig {
  std::size_t hidden_dim = 1024;
  std::size_t embed_dim = 1024;
  std::size_t batch_size = 128;
  double learning_rate = 0.0001;
  double clip = 5.0;
  std::uint64_t seed = 1;
  std::size_t max_epochs = 50;
  std::size_t patience = 3;  // early stop: epochs without validation improvement
  double init_lo = -0.1;
  double init_hi = 0.1;

  // Small dims and a hotter learning rate so toy corpora train in seconds.
  static TrainConfig desk_scale();
  void validate() const;
};

// ------------------------------------------------------------- vector helpers

double vdot(const Vec& a, const Vec& b);
void vaxpy(Vec& y, double a, const Vec& x);  // y += a*x
Vec vconcat(const Vec& a, const Vec& b);
Vec vadd(const Vec& a, const Vec& b);

// y = W x (W: out x in)
Vec matvec(const Tensor& W, const Vec& x);
// dx += W^T dy
void matvec_t_acc(const Tensor& W, const Vec& dy, Vec& dx);
// dW += dy x^T
void outer_acc(Tensor& dW, const Vec& dy, const Vec& x);

// ------------------------------------------------------- softmax and loss

// Stabilized by max subtraction. Throws NonFiniteInputError on NaN/inf logits.
Vec softmax(const Vec& logits);
// -log(probs[gold]).
double cross_entropy(const Vec& probs, std::size_t gold);
// Fused: returns loss; *dlogits = softmax(logits) - onehot(gold) if non-null;
// *probs_out = softmax(logits) if non-null.
double softmax_xent(const Vec& logits, std::size_t gold, Vec* dlogits,
                    Vec* probs_out = nullptr);

// -------------------------------------------------------------------- layers

struct Embedding {
  Param table;  // (vocab, dim)

  void init(const std::string& name, std::size_t vocab, std::size_t dim, Rng& rng,
            double lo, double hi);
  std::size_t dim() const { return table.value.cols(); }
  std::size_t vocab() const { return table.value.rows(); }
  Vec lookup(std::size_t id) const;
  void accumulate(std::size_t id, const Vec& g);
  std::vector<Param*> params() { return {&table}; }
};

struct Linear {
  Param W;  // (out, in)
  Param b;  // (out)

  void init(const std::string& prefix, std::size_t out, std::size_t in, Rng& rng,
            double lo, double hi);
  std::size_t out_dim() const { return W.value.rows(); }
  std::size_t in_dim() const { return W.value.cols(); }
  Vec forward(const Vec& x) const;
  // Accumulates grads; returns dx.
  Vec backward(const Vec& x, const Vec& dy);
  std::vector<Param*> params() { return {&W, &b}; }
};

// GRU cell:
//   z = sigma(Wz x + Uz h + bz)
//   r = sigma(Wr x + Ur h + br)
//   n = tanh(Wn x + r .* (Un h) + bn)
//   h' = (1 - z) .* n + z .* h
struct GruCell {
  Param Wz, Uz, bz, Wr, Ur, br, Wn, Un, bn;

  struct Cache {
    Vec x, hprev, z, r, n, uh;  // uh = Un hprev
  };

  void init(const std::string& prefix, std::size_t in, std::size_t hid, Rng& rng,
            double lo, double hi);
  std::size_t hidden_dim() const { return bz.value.size(); }
  std::size_t input_dim() const { return Wz.value.cols(); }
  Vec forward(const Vec& x, const Vec& hprev, Cache* cache = nullptr) const;
  // Accumulates param grads; adds input grad into *dx if non-null; returns dhprev.
  Vec backward(const Cache& c, const Vec& dh, Vec* dx);
  std::vector<Param*> params() {
    return {&Wz, &Uz, &bz, &Wr, &Ur, &br, &Wn, &Un, &bn};
  }
};

// Bidirectional single-layer GRU. Per-step states are [fwd_t; bwd_t] (2H);
// the sentence vector is a linear projection of [fwd_last; bwd_first] to H.
struct BiGru {
  GruCell fwd, bwd;
  Linear proj;  // 2H -> H

  struct Cache {
    std::vector<GruCell::Cache> fsteps, bsteps;  // bsteps indexed by original t
    std::vector<Vec> fh, bh;                     // per-step hidden states
    Vec concat;                                  // [fh[T-1]; bh[0]]
  };

  void init(const std::string& prefix, std::size_t in, std::size_t hid, Rng& rng,
            double lo, double hi);
  std::size_t hidden_dim() const { return proj.out_dim(); }
  std::size_t state_dim() const { return 2 * fwd.hidden_dim(); }

  // Sentence vector (H). Throws EmptySequenceError on empty input.
  Vec encode(const std::vector<Vec>& xs, Cache* cache) const;
  // Per-step 2H states for attention. Same cache layout.
  std::vector<Vec> encode_states(const std::vector<Vec>& xs, Cache* cache) const;

  // Backward for encode(); returns dxs.
  std::vector<Vec> backward(const Cache& c, const Vec& dv);
  // General form: dstates are grads on per-step 2H states (empty vec = none),
  // dconcat is the grad on [fh[T-1]; bh[0]] (empty = none). Returns dxs.
  std::vector<Vec> backward_full(const Cache& c, const std::vector<Vec>& dstates,
                                 const Vec& dconcat);
  std::vector<Param*> params();
};

// Multi-width convolution + tanh + max-over-time, concatenated to hidden_dim.
// hidden_dim is split across widths; earlier widths take the remainder.
struct CnnEncoder {
  std::vector<std::size_t> widths;
  std::vector<Param> W;  // per width: (filters, width*in)
  std::vector<Param> b;  // per width: (filters)
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;

  struct Cache {
    std::vector<Vec> xs;                          // zero-padded input
    std::vector<std::vector<std::size_t>> argmax;  // [width][filter] -> position
    std::vector<Vec> pooled_pre;                   // [width][filter] pre-tanh at argmax
    bool pool_tie = false;                         // max attained at >= 2 positions
  };

  void init(const std::string& prefix, std::size_t in, std::size_t hidden,
            std::vector<std::size_t> widths, Rng& rng, double lo, double hi);
  Vec encode(const std::vector<Vec>& xs, Cache* cache) const;
  std::vector<Vec> backward(const Cache& c, const Vec& dv);
  std::vector<Param*> params();
};

// Additive attention: score_j = v . tanh(Ws s + Wh h_j + b), alpha = softmax,
// ctx = sum_j alpha_j h_j.
struct Attention {
  Param Ws;  // (att, state_dim)
  Param Wh;  // (att, enc_dim)
  Param ba;  // (att)
  Param v;   // (att)

  struct Cache {
    Vec s;
    std::vector<Vec> hs;
    std::vector<Vec> pre;  // tanh args per j
    Vec alpha;
    Vec ctx;
  };

  void init(const std::string& prefix, std::size_t state_dim, std::size_t enc_dim,
            std::size_t att_dim, Rng& rng, double lo, double hi);
  // Returns ctx (enc_dim); weights left in cache->alpha.
  Vec forward(const Vec& s, const std::vector<Vec>& hs, Cache* cache) const;
  // Accumulates grads; fills *dhs (resized/zeroed here); returns ds.
  Vec backward(const Cache& c, const Vec& dctx, std::vector<Vec>* dhs);
  std::vector<Param*> params() { return {&Ws, &Wh, &ba, &v}; }
};

// ------------------------------------------------------ finite differences

struct FdResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

// Central differences against the analytic grads already stored in params'
// grad tensors. loss_fn must be a pure recomputation of the scalar loss.
// tie_detector (optional) is consulted after each loss evaluation; if it
// reports true for either side, the coordinate is skipped (max-pool kinks).
FdResult finite_difference_check(const std::function<double()>& loss_fn,
                                 const std::vector<Param*>& params, double h = 1e-5,
                                 const std::function<bool()>& tie_detector = nullptr);

}  // namespace sefun::nn

#endif  // SEFUN_NN_HPP
