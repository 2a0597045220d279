#include "kgan/graph.hpp"
#include "kgan/ops.hpp"

#include <Eigen/Core>

#include <cstring>
#include <stdexcept>
#include <utility>

namespace kgan {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

struct InRef {
  const Array* a = nullptr;
  const Shape* s = nullptr;
};

int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Scatter x patches into col [C*kh*kw, OH*OW], zero-padding out of bounds.
void im2col(const double* x, const ConvDims& d, int H, int W, int OH, int OW,
            int C, double* col) {
  const int patch = OH * OW;
  for (int c = 0; c < C; ++c) {
    const double* xc = x + static_cast<long>(c) * H * W;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        double* row = col + (static_cast<long>(c) * d.kh * d.kw + ki * d.kw + kj) * patch;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * d.stride - d.pad + ki;
          if (ih < 0 || ih >= H) {
            std::memset(row + static_cast<long>(oh) * OW, 0, sizeof(double) * OW);
            continue;
          }
          const double* xr = xc + static_cast<long>(ih) * W;
          double* out = row + static_cast<long>(oh) * OW;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * d.stride - d.pad + kj;
            out[ow] = (iw >= 0 && iw < W) ? xr[iw] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulate col entries back into the image.
void col2im_add(const double* col, const ConvDims& d, int H, int W, int OH, int OW,
                int C, double* x) {
  const int patch = OH * OW;
  for (int c = 0; c < C; ++c) {
    double* xc = x + static_cast<long>(c) * H * W;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        const double* row = col + (static_cast<long>(c) * d.kh * d.kw + ki * d.kw + kj) * patch;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * d.stride - d.pad + ki;
          if (ih < 0 || ih >= H) continue;
          double* xr = xc + static_cast<long>(ih) * W;
          const double* in = row + static_cast<long>(oh) * OW;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * d.stride - d.pad + kj;
            if (iw >= 0 && iw < W) xr[iw] += in[ow];
          }
        }
      }
    }
  }
}

Array conv2d_forward(const Array& x, const Array& w, const Array& b,
                     const ConvDims& d, Array* saved) {
  const long ksz = static_cast<long>(d.cin) * d.kh * d.kw;
  const long patch = static_cast<long>(d.oh) * d.ow;
  Array col_store(static_cast<long>(d.n) * ksz * patch);
  Array y(static_cast<long>(d.n) * d.cout * patch);
  CMapRM wm(w.data(), d.cout, ksz);
  CMapVec bv(b.data(), d.cout);
  for (int i = 0; i < d.n; ++i) {
    double* col = col_store.data() + static_cast<long>(i) * ksz * patch;
    im2col(x.data() + static_cast<long>(i) * d.cin * d.h * d.w, d, d.h, d.w, d.oh,
           d.ow, d.cin, col);
    MapRM ym(y.data() + static_cast<long>(i) * d.cout * patch, d.cout, patch);
    ym.noalias() = wm * CMapRM(col, ksz, patch);
    ym.colwise() += bv;
  }
  if (saved) *saved = std::move(col_store);
  return y;
}

Array deconv2d_forward(const Array& x, const Array& w, const Array& b,
                       const ConvDims& d) {
  // Adjoint view: the output [cout, oh, ow] plays the image role of a conv
  // whose result is the input [cin, h, w].
  const long ksz = static_cast<long>(d.cout) * d.kh * d.kw;
  const long patch = static_cast<long>(d.h) * d.w;
  Array y = Array::Zero(static_cast<long>(d.n) * d.cout * d.oh * d.ow);
  MatRM col(ksz, patch);
  CMapRM wm(w.data(), d.cin, ksz);
  for (int i = 0; i < d.n; ++i) {
    CMapRM xm(x.data() + static_cast<long>(i) * d.cin * patch, d.cin, patch);
    col.noalias() = wm.transpose() * xm;
    col2im_add(col.data(), d, d.oh, d.ow, d.h, d.w, d.cout,
               y.data() + static_cast<long>(i) * d.cout * d.oh * d.ow);
  }
  for (int i = 0; i < d.n; ++i)
    for (int c = 0; c < d.cout; ++c)
      y.segment(static_cast<long>((i * d.cout + c)) * d.oh * d.ow,
                static_cast<long>(d.oh) * d.ow) += b[c];
  return y;
}

Array softmax_rows(const Array& z, long rows, long k, double t) {
  Array q(z.size());
  for (long r = 0; r < rows; ++r) {
    auto seg = z.segment(r * k, k);
    const double m = seg.maxCoeff();
    Array e = ((seg - m) / t).exp();
    q.segment(r * k, k) = e / e.sum();
  }
  return q;
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kConst: return "const";
    case Op::kParam: return "param";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kNeg: return "neg";
    case Op::kLog: return "log";
    case Op::kExp: return "exp";
    case Op::kRelu: return "relu";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kClamp: return "clamp";
    case Op::kAddScalar: return "add_scalar";
    case Op::kMulScalar: return "mul_scalar";
    case Op::kRsubScalar: return "rsub_scalar";
    case Op::kMatmul: return "matmul";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kReshape: return "reshape";
    case Op::kSoftmaxT: return "softmax_t";
    case Op::kConv2d: return "conv2d";
    case Op::kDeconv2d: return "deconv2d";
  }
  return "?";
}

namespace {

Array eval_core(const Node& n, const InRef in[3], Array* saved) {
  const Array* a = in[0].a;
  const Array* b = in[1].a;
  switch (n.op) {
    case Op::kConst:
    case Op::kParam:
      throw std::logic_error("leaf nodes are not evaluated");
    case Op::kAdd: return *a + *b;
    case Op::kSub: return *a - *b;
    case Op::kMul: return *a * *b;
    case Op::kNeg: return -*a;
    case Op::kLog: return a->max(kLogFloor).log();
    case Op::kExp: return a->exp();
    case Op::kRelu: return a->max(0.0);
    case Op::kLeakyRelu: return (*a > 0.0).select(*a, n.s0 * *a);
    case Op::kSigmoid: return 1.0 / (1.0 + (-*a).exp());
    case Op::kTanh: return a->tanh();
    case Op::kClamp: return a->min(n.s1).max(n.s0);
    case Op::kAddScalar: return *a + n.s0;
    case Op::kMulScalar: return *a * n.s0;
    case Op::kRsubScalar: return n.s0 - *a;
    case Op::kMatmul: {
      const Shape& sa = *in[0].s;
      const Shape& sb = *in[1].s;
      Array y(static_cast<long>(sa[0]) * sb[1]);
      MapRM(y.data(), sa[0], sb[1]).noalias() =
          CMapRM(a->data(), sa[0], sa[1]) * CMapRM(b->data(), sb[0], sb[1]);
      return y;
    }
    case Op::kSum: {
      Array y(1);
      y[0] = a->sum();
      return y;
    }
    case Op::kMean: {
      Array y(1);
      y[0] = a->mean();
      return y;
    }
    case Op::kReshape: return *a;
    case Op::kSoftmaxT: {
      const Shape& s = *in[0].s;
      const long k = s.back();
      return softmax_rows(*a, a->size() / k, k, n.s0);
    }
    case Op::kConv2d: return conv2d_forward(*a, *b, *in[2].a, n.conv, saved);
    case Op::kDeconv2d: return deconv2d_forward(*a, *b, *in[2].a, n.conv);
  }
  throw std::logic_error("unhandled op");
}

// Record the op when any operand is tracked, otherwise evaluate in place.
Tensor apply_op(Node&& meta, std::initializer_list<const Tensor*> operands) {
  Graph* g = nullptr;
  for (const Tensor* t : operands) {
    if (!t->tracked()) continue;
    if (g && g != t->graph)
      throw std::invalid_argument("operands belong to different graphs");
    g = t->graph;
  }
  if (g) {
    int slot = 0;
    for (const Tensor* t : operands) meta.in[slot++] = g->input_id(*t);
    return g->emit(std::move(meta));
  }
  InRef in[3];
  int slot = 0;
  for (const Tensor* t : operands) {
    in[slot].a = &t->data;
    in[slot].s = &t->shape;
    ++slot;
  }
  Tensor out;
  out.shape = meta.shape;
  out.data = eval_core(meta, in, nullptr);
  return out;
}

void check_same_shape(const char* what, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                shape_str(a.shape) + " vs " + shape_str(b.shape));
}

Node elementwise_node(Op op, const Tensor& a) {
  Node n;
  n.op = op;
  n.shape = a.shape;
  return n;
}

}  // namespace

Array eval_node(const Graph& g, const Node& n, Array* saved) {
  InRef in[3];
  for (int i = 0; i < 3; ++i) {
    if (n.in[i] < 0) break;
    const Node& src = g.at(n.in[i]);
    in[i].a = &src.value;
    in[i].s = &src.shape;
  }
  return eval_core(n, in, saved);
}

Tensor Graph::emit(Node&& n) {
  for (int i = 0; i < 3; ++i)
    if (n.in[i] >= 0 && nodes_[n.in[i]].needs_grad) n.needs_grad = true;
  n.value = eval_node(*this, n, &n.saved);
  const int id = static_cast<int>(nodes_.size());
  Tensor out;
  out.shape = n.shape;
  out.data = n.value;
  out.graph = this;
  out.node = id;
  nodes_.push_back(std::move(n));
  return out;
}

int Graph::input_id(const Tensor& t) {
  if (t.tracked()) {
    if (t.graph != this)
      throw std::invalid_argument("operand recorded on a different graph");
    return t.node;
  }
  Node n;
  n.op = Op::kConst;
  n.shape = t.shape;
  n.value = t.data;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Graph::param(const Tensor& t) {
  if (t.tracked()) throw std::invalid_argument("param() expects an untracked tensor");
  validate_shape(t.shape);
  Node n;
  n.op = Op::kParam;
  n.shape = t.shape;
  n.value = t.data;
  n.needs_grad = true;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(n));
  Tensor out;
  out.shape = t.shape;
  out.data = t.data;
  out.graph = this;
  out.node = id;
  return out;
}

Tensor Graph::constant(const Tensor& t) {
  Tensor plain;
  plain.shape = t.shape;
  plain.data = t.data;
  const int id = input_id(plain);
  plain.graph = this;
  plain.node = id;
  return plain;
}

const Node& Graph::at(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("graph node id out of range");
  return nodes_[static_cast<std::size_t>(id)];
}

bool Graph::replay_bitexact() const {
  for (const Node& n : nodes_) {
    if (n.op == Op::kConst || n.op == Op::kParam) continue;
    Array redo = eval_node(*this, n, nullptr);
    if (redo.size() != n.value.size()) return false;
    if (std::memcmp(redo.data(), n.value.data(),
                    sizeof(double) * static_cast<std::size_t>(redo.size())) != 0)
      return false;
  }
  return true;
}

GradientMap Graph::backward(const Tensor& loss) const {
  if (!loss.tracked() || loss.graph != this || loss.node < 0 || loss.node >= size())
    throw std::invalid_argument("backward: loss is not a node of this graph");
  if (loss.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_str(loss.shape));

  std::vector<Array> grad(nodes_.size());
  auto acc = [&](int id) -> Array& {
    Array& g = grad[static_cast<std::size_t>(id)];
    if (g.size() == 0) g = Array::Zero(nodes_[static_cast<std::size_t>(id)].value.size());
    return g;
  };
  auto wants = [&](const Node& n, int slot) {
    return n.in[slot] >= 0 && nodes_[static_cast<std::size_t>(n.in[slot])].needs_grad;
  };

  acc(loss.node)[0] = 1.0;

  for (int id = loss.node; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.op == Op::kConst || n.op == Op::kParam) continue;
    if (grad[static_cast<std::size_t>(id)].size() == 0) continue;
    const Array& g = grad[static_cast<std::size_t>(id)];
    const Array* av = n.in[0] >= 0 ? &nodes_[n.in[0]].value : nullptr;
    const Array* bv = n.in[1] >= 0 ? &nodes_[n.in[1]].value : nullptr;

    switch (n.op) {
      case Op::kAdd:
        if (wants(n, 0)) acc(n.in[0]) += g;
        if (wants(n, 1)) acc(n.in[1]) += g;
        break;
      case Op::kSub:
        if (wants(n, 0)) acc(n.in[0]) += g;
        if (wants(n, 1)) acc(n.in[1]) -= g;
        break;
      case Op::kMul:
        if (wants(n, 0)) acc(n.in[0]) += g * *bv;
        if (wants(n, 1)) acc(n.in[1]) += g * *av;
        break;
      case Op::kNeg:
        if (wants(n, 0)) acc(n.in[0]) -= g;
        break;
      case Op::kLog:
        if (wants(n, 0))
          acc(n.in[0]) += (*av >= kLogFloor).cast<double>() * g / av->max(kLogFloor);
        break;
      case Op::kExp:
        if (wants(n, 0)) acc(n.in[0]) += g * n.value;
        break;
      case Op::kRelu:
        if (wants(n, 0)) acc(n.in[0]) += (*av > 0.0).cast<double>() * g;
        break;
      case Op::kLeakyRelu:
        if (wants(n, 0)) acc(n.in[0]) += (*av > 0.0).select(g, n.s0 * g);
        break;
      case Op::kSigmoid:
        if (wants(n, 0)) acc(n.in[0]) += g * n.value * (1.0 - n.value);
        break;
      case Op::kTanh:
        if (wants(n, 0)) acc(n.in[0]) += g * (1.0 - n.value * n.value);
        break;
      case Op::kClamp:
        if (wants(n, 0))
          acc(n.in[0]) += ((*av >= n.s0) && (*av <= n.s1)).select(g, 0.0);
        break;
      case Op::kAddScalar:
        if (wants(n, 0)) acc(n.in[0]) += g;
        break;
      case Op::kMulScalar:
        if (wants(n, 0)) acc(n.in[0]) += n.s0 * g;
        break;
      case Op::kRsubScalar:
        if (wants(n, 0)) acc(n.in[0]) -= g;
        break;
      case Op::kMatmul: {
        const Shape& sa = nodes_[n.in[0]].shape;
        const Shape& sb = nodes_[n.in[1]].shape;
        CMapRM gm(g.data(), sa[0], sb[1]);
        if (wants(n, 0)) {
          MapRM da(acc(n.in[0]).data(), sa[0], sa[1]);
          da.noalias() += gm * CMapRM(bv->data(), sb[0], sb[1]).transpose();
        }
        if (wants(n, 1)) {
          MapRM db(acc(n.in[1]).data(), sb[0], sb[1]);
          db.noalias() += CMapRM(av->data(), sa[0], sa[1]).transpose() * gm;
        }
        break;
      }
      case Op::kSum:
        if (wants(n, 0)) acc(n.in[0]) += g[0];
        break;
      case Op::kMean:
        if (wants(n, 0)) acc(n.in[0]) += g[0] / static_cast<double>(av->size());
        break;
      case Op::kReshape:
        if (wants(n, 0)) acc(n.in[0]) += g;
        break;
      case Op::kSoftmaxT: {
        if (!wants(n, 0)) break;
        const long k = n.shape.back();
        const long rows = n.value.size() / k;
        Array& da = acc(n.in[0]);
        for (long r = 0; r < rows; ++r) {
          auto q = n.value.segment(r * k, k);
          auto gr = g.segment(r * k, k);
          const double dot = (gr * q).sum();
          da.segment(r * k, k) += q * (gr - dot) / n.s0;
        }
        break;
      }
      case Op::kConv2d: {
        const ConvDims& d = n.conv;
        const long ksz = static_cast<long>(d.cin) * d.kh * d.kw;
        const long patch = static_cast<long>(d.oh) * d.ow;
        const Array* col_store = &n.saved;
        Array recomputed;
        if (col_store->size() == 0) {
          conv2d_forward(*av, *bv, nodes_[n.in[2]].value, d, &recomputed);
          col_store = &recomputed;
        }
        CMapRM wm(bv->data(), d.cout, ksz);
        for (int i = 0; i < d.n; ++i) {
          CMapRM gm(g.data() + static_cast<long>(i) * d.cout * patch, d.cout, patch);
          const double* col = col_store->data() + static_cast<long>(i) * ksz * patch;
          if (wants(n, 1)) {
            MapRM dw(acc(n.in[1]).data(), d.cout, ksz);
            dw.noalias() += gm * CMapRM(col, ksz, patch).transpose();
          }
          if (wants(n, 2)) {
            MapVec db(acc(n.in[2]).data(), d.cout);
            db.noalias() += gm.rowwise().sum();
          }
          if (wants(n, 0)) {
            MatRM dcol(ksz, patch);
            dcol.noalias() = wm.transpose() * gm;
            col2im_add(dcol.data(), d, d.h, d.w, d.oh, d.ow, d.cin,
                       acc(n.in[0]).data() + static_cast<long>(i) * d.cin * d.h * d.w);
          }
        }
        break;
      }
      case Op::kDeconv2d: {
        const ConvDims& d = n.conv;
        const long ksz = static_cast<long>(d.cout) * d.kh * d.kw;
        const long patch = static_cast<long>(d.h) * d.w;
        CMapRM wm(bv->data(), d.cin, ksz);
        MatRM gcol(ksz, patch);
        for (int i = 0; i < d.n; ++i) {
          const double* gy = g.data() + static_cast<long>(i) * d.cout * d.oh * d.ow;
          im2col(gy, d, d.oh, d.ow, d.h, d.w, d.cout, gcol.data());
          if (wants(n, 0)) {
            MapRM dx(acc(n.in[0]).data() + static_cast<long>(i) * d.cin * patch,
                     d.cin, patch);
            dx.noalias() += wm * gcol;
          }
          if (wants(n, 1)) {
            CMapRM xm(av->data() + static_cast<long>(i) * d.cin * patch, d.cin, patch);
            MapRM dw(acc(n.in[1]).data(), d.cin, ksz);
            dw.noalias() += xm * gcol.transpose();
          }
          if (wants(n, 2)) {
            Array& db = acc(n.in[2]);
            for (int c = 0; c < d.cout; ++c)
              db[c] += Eigen::Map<const Array>(
                           gy + static_cast<long>(c) * d.oh * d.ow,
                           static_cast<long>(d.oh) * d.ow)
                           .sum();
          }
        }
        break;
      }
      case Op::kConst:
      case Op::kParam:
        break;
    }
  }

  GradientMap out;
  for (int id = 0; id < size(); ++id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.op != Op::kParam) continue;
    Tensor t;
    t.shape = n.shape;
    t.data = grad[static_cast<std::size_t>(id)].size()
                 ? std::move(grad[static_cast<std::size_t>(id)])
                 : Array::Zero(n.value.size());
    out.emplace(id, std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Op construction

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Node n = elementwise_node(Op::kAdd, a);
  return apply_op(std::move(n), {&a, &b});
}

Tensor add(const Tensor& a, Scalar c) {
  Node n = elementwise_node(Op::kAddScalar, a);
  n.s0 = c;
  return apply_op(std::move(n), {&a});
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  Node n = elementwise_node(Op::kSub, a);
  return apply_op(std::move(n), {&a, &b});
}

Tensor sub(Scalar c, const Tensor& a) {
  Node n = elementwise_node(Op::kRsubScalar, a);
  n.s0 = c;
  return apply_op(std::move(n), {&a});
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Node n = elementwise_node(Op::kMul, a);
  return apply_op(std::move(n), {&a, &b});
}

Tensor mul(const Tensor& a, Scalar c) {
  Node n = elementwise_node(Op::kMulScalar, a);
  n.s0 = c;
  return apply_op(std::move(n), {&a});
}

Tensor neg(const Tensor& a) { return apply_op(elementwise_node(Op::kNeg, a), {&a}); }

Tensor log_safe(const Tensor& a) {
  return apply_op(elementwise_node(Op::kLog, a), {&a});
}

Tensor exp_(const Tensor& a) { return apply_op(elementwise_node(Op::kExp, a), {&a}); }

Tensor relu(const Tensor& a) { return apply_op(elementwise_node(Op::kRelu, a), {&a}); }

Tensor leaky_relu(const Tensor& a, Scalar slope) {
  Node n = elementwise_node(Op::kLeakyRelu, a);
  n.s0 = slope;
  return apply_op(std::move(n), {&a});
}

Tensor sigmoid(const Tensor& a) {
  return apply_op(elementwise_node(Op::kSigmoid, a), {&a});
}

Tensor tanh_(const Tensor& a) {
  return apply_op(elementwise_node(Op::kTanh, a), {&a});
}

Tensor clamp(const Tensor& a, Scalar lo, Scalar hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must be <= hi");
  Node n = elementwise_node(Op::kClamp, a);
  n.s0 = lo;
  n.s1 = hi;
  return apply_op(std::move(n), {&a});
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw std::invalid_argument("matmul requires rank-2 tensors, got " +
                                shape_str(a.shape) + " x " + shape_str(b.shape));
  if (a.shape[1] != b.shape[0])
    throw std::invalid_argument("matmul: inner dimensions disagree, " +
                                shape_str(a.shape) + " x " + shape_str(b.shape));
  Node n;
  n.op = Op::kMatmul;
  n.shape = {a.shape[0], b.shape[1]};
  return apply_op(std::move(n), {&a, &b});
}

Tensor sum(const Tensor& a) {
  Node n;
  n.op = Op::kSum;
  n.shape = {1};
  return apply_op(std::move(n), {&a});
}

Tensor mean(const Tensor& a) {
  Node n;
  n.op = Op::kMean;
  n.shape = {1};
  return apply_op(std::move(n), {&a});
}

Tensor reshape(const Tensor& a, Shape shape) {
  validate_shape(shape);
  if (shape_numel(shape) != a.size())
    throw std::invalid_argument("reshape: element count mismatch, " +
                                shape_str(a.shape) + " -> " + shape_str(shape));
  Node n;
  n.op = Op::kReshape;
  n.shape = std::move(shape);
  return apply_op(std::move(n), {&a});
}

Tensor softmax_t(const Tensor& logits, Scalar temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("softmax_t: temperature must be positive");
  if (logits.rank() > 2)
    throw std::invalid_argument("softmax_t expects rank-1 or rank-2 logits");
  Node n;
  n.op = Op::kSoftmaxT;
  n.s0 = temperature;
  n.shape = logits.shape;
  return apply_op(std::move(n), {&logits});
}

namespace {

ConvDims make_conv_dims(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int pad, bool transposed) {
  if (x.rank() != 4 || w.rank() != 4)
    throw std::invalid_argument("conv: input and weights must be rank 4");
  if (b.rank() != 1) throw std::invalid_argument("conv: bias must be rank 1");
  if (stride < 1 || pad < 0)
    throw std::invalid_argument("conv: stride must be >= 1 and padding >= 0");
  ConvDims d;
  d.n = x.shape[0];
  d.h = x.shape[2];
  d.w = x.shape[3];
  d.kh = w.shape[2];
  d.kw = w.shape[3];
  d.stride = stride;
  d.pad = pad;
  if (!transposed) {
    d.cin = w.shape[1];
    d.cout = w.shape[0];
    if (x.shape[1] != d.cin)
      throw std::invalid_argument("conv2d: input channels " +
                                  std::to_string(x.shape[1]) + " do not match weights");
    if (d.h + 2 * pad < d.kh || d.w + 2 * pad < d.kw)
      throw std::invalid_argument("conv2d: kernel larger than padded input");
    d.oh = conv_out_dim(d.h, d.kh, stride, pad);
    d.ow = conv_out_dim(d.w, d.kw, stride, pad);
  } else {
    d.cin = w.shape[0];
    d.cout = w.shape[1];
    if (x.shape[1] != d.cin)
      throw std::invalid_argument("deconv2d: input channels " +
                                  std::to_string(x.shape[1]) + " do not match weights");
    d.oh = (d.h - 1) * stride - 2 * pad + d.kh;
    d.ow = (d.w - 1) * stride - 2 * pad + d.kw;
    if (d.oh < 1 || d.ow < 1)
      throw std::invalid_argument("deconv2d: computed output size is not positive");
  }
  if (b.size() != d.cout)
    throw std::invalid_argument("conv: bias length " + std::to_string(b.size()) +
                                " does not match output channels " +
                                std::to_string(d.cout));
  return d;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  Node n;
  n.op = Op::kConv2d;
  n.conv = make_conv_dims(x, w, b, stride, pad, false);
  n.shape = {n.conv.n, n.conv.cout, n.conv.oh, n.conv.ow};
  return apply_op(std::move(n), {&x, &w, &b});
}

Tensor deconv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  Node n;
  n.op = Op::kDeconv2d;
  n.conv = make_conv_dims(x, w, b, stride, pad, true);
  n.shape = {n.conv.n, n.conv.cout, n.conv.oh, n.conv.ow};
  return apply_op(std::move(n), {&x, &w, &b});
}

Tensor mean_abs_diff(const Tensor& a, const Tensor& b) {
  Tensor d = sub(a, b);
  return mean(add(relu(d), relu(neg(d))));
}

}  // namespace kgan
