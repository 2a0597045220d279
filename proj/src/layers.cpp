#include "kgan/layers.hpp"

#include "kgan/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kgan {

LayerSpec conv_layer(std::string name, int in_ch, int out_ch, int kernel, int stride,
                     int pad) {
  LayerSpec s;
  s.kind = LayerKind::kConv2d;
  s.name = std::move(name);
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  return s;
}

LayerSpec deconv_layer(std::string name, int in_ch, int out_ch, int kernel, int stride,
                       int pad) {
  LayerSpec s = conv_layer(std::move(name), in_ch, out_ch, kernel, stride, pad);
  s.kind = LayerKind::kDeconv2d;
  return s;
}

LayerSpec dense_layer(std::string name, int in_features, int out_features) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.name = std::move(name);
  s.in_features = in_features;
  s.out_features = out_features;
  return s;
}

LayerSpec relu_layer() {
  LayerSpec s;
  s.kind = LayerKind::kRelu;
  return s;
}

LayerSpec leaky_relu_layer(double slope) {
  LayerSpec s;
  s.kind = LayerKind::kLeakyRelu;
  s.slope = slope;
  return s;
}

LayerSpec sigmoid_layer() {
  LayerSpec s;
  s.kind = LayerKind::kSigmoid;
  return s;
}

LayerSpec tanh_layer() {
  LayerSpec s;
  s.kind = LayerKind::kTanh;
  return s;
}

LayerSpec softmax_layer(double temperature) {
  LayerSpec s;
  s.kind = LayerKind::kSoftmaxT;
  s.temperature = temperature;
  return s;
}

namespace {

bool has_weights(const LayerSpec& s) {
  return s.kind == LayerKind::kConv2d || s.kind == LayerKind::kDeconv2d ||
         s.kind == LayerKind::kDense;
}

}  // namespace

void validate_specs(const std::vector<LayerSpec>& specs) {
  for (const LayerSpec& s : specs) {
    switch (s.kind) {
      case LayerKind::kConv2d:
      case LayerKind::kDeconv2d:
        if (s.in_ch < 1 || s.out_ch < 1)
          throw std::invalid_argument("layer " + s.name + ": channel counts must be >= 1");
        if (s.kernel < 1 || s.stride < 1 || s.pad < 0)
          throw std::invalid_argument("layer " + s.name + ": invalid kernel geometry");
        if (s.name.empty()) throw std::invalid_argument("parametric layer needs a name");
        break;
      case LayerKind::kDense:
        if (s.in_features < 1 || s.out_features < 1)
          throw std::invalid_argument("layer " + s.name + ": feature counts must be >= 1");
        if (s.name.empty()) throw std::invalid_argument("parametric layer needs a name");
        break;
      case LayerKind::kLeakyRelu:
        if (!(s.slope >= 0.0))
          throw std::invalid_argument("leaky_relu slope must be >= 0");
        break;
      case LayerKind::kSoftmaxT:
        if (!(s.temperature > 0.0))
          throw std::invalid_argument("softmax_t temperature must be positive");
        break;
      default:
        break;
    }
  }
}

long param_count(const std::vector<LayerSpec>& specs) {
  long n = 0;
  for (const LayerSpec& s : specs) {
    if (s.kind == LayerKind::kConv2d || s.kind == LayerKind::kDeconv2d)
      n += long(s.out_ch) * s.in_ch * s.kernel * s.kernel + s.out_ch;
    else if (s.kind == LayerKind::kDense)
      n += long(s.in_features) * s.out_features + s.out_features;
  }
  return n;
}

void ParameterSet::add(std::string name, Tensor t) {
  if (has(name)) throw std::invalid_argument("duplicate parameter name " + name);
  items.emplace_back(std::move(name), std::move(t));
}

bool ParameterSet::has(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return true;
  return false;
}

const Tensor& ParameterSet::at(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw std::out_of_range("no parameter named " + name);
}

Tensor& ParameterSet::at(const std::string& name) {
  for (auto& [n, t] : items)
    if (n == name) return t;
  throw std::out_of_range("no parameter named " + name);
}

long ParameterSet::count() const {
  long n = 0;
  for (const auto& [name, t] : items) n += t.size();
  return n;
}

ParameterSet ParameterSet::bind(Graph& g) const {
  ParameterSet out;
  out.items.reserve(items.size());
  for (const auto& [name, t] : items) out.items.emplace_back(name, g.param(t));
  return out;
}

ParameterSet init_params(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  validate_specs(specs);
  ParameterSet ps;
  Rng rng(seed);
  for (const LayerSpec& s : specs) {
    if (!has_weights(s)) continue;
    Shape wshape;
    long fan_in = 0;
    Shape bshape;
    if (s.kind == LayerKind::kDense) {
      wshape = {s.in_features, s.out_features};
      fan_in = s.in_features;
      bshape = {s.out_features};
    } else {
      // Conv and deconv share the [out,in,k,k] / [in,out,k,k] weight layout
      // of the underlying ops: conv weights are [F,C,k,k] with C = in_ch,
      // deconv weights are [F,C,k,k] with F = in_ch.
      if (s.kind == LayerKind::kConv2d)
        wshape = {s.out_ch, s.in_ch, s.kernel, s.kernel};
      else
        wshape = {s.in_ch, s.out_ch, s.kernel, s.kernel};
      fan_in = long(s.in_ch) * s.kernel * s.kernel;
      bshape = {s.out_ch};
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Array w(shape_numel(wshape));
    for (long i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    ps.add(s.name + ".w", Tensor(wshape, std::move(w)));
    ps.add(s.name + ".b", zeros(bshape));
  }
  return ps;
}

Tensor forward_stack(const std::vector<LayerSpec>& specs, const ParameterSet& params,
                     Tensor x) {
  for (const LayerSpec& s : specs) {
    switch (s.kind) {
      case LayerKind::kConv2d:
        x = conv2d(x, params.at(s.name + ".w"), params.at(s.name + ".b"), s.stride,
                   s.pad);
        break;
      case LayerKind::kDeconv2d:
        x = deconv2d(x, params.at(s.name + ".w"), params.at(s.name + ".b"), s.stride,
                     s.pad);
        break;
      case LayerKind::kDense: {
        if (x.rank() == 4)
          x = reshape(x, {x.shape[0], x.shape[1] * x.shape[2] * x.shape[3]});
        if (x.rank() != 2)
          throw std::invalid_argument("dense layer expects rank-2 input");
        if (x.shape[1] != s.in_features)
          throw std::invalid_argument("dense layer " + s.name + " expects " +
                                      std::to_string(s.in_features) + " features, got " +
                                      std::to_string(x.shape[1]));
        const Tensor& w = params.at(s.name + ".w");
        const Tensor& b = params.at(s.name + ".b");
        // Row-broadcast bias via ones [N,1] x b [1,out]; keeps the op set small.
        Tensor ones_col = full({x.shape[0], 1}, 1.0);
        x = add(matmul(x, w), matmul(ones_col, reshape(b, {1, s.out_features})));
        break;
      }
      case LayerKind::kRelu:
        x = relu(x);
        break;
      case LayerKind::kLeakyRelu:
        x = leaky_relu(x, s.slope);
        break;
      case LayerKind::kSigmoid:
        x = sigmoid(x);
        break;
      case LayerKind::kTanh:
        x = tanh_(x);
        break;
      case LayerKind::kSoftmaxT:
        x = softmax_t(x, s.temperature);
        break;
    }
  }
  return x;
}

Tensor cross_entropy(const Tensor& pred, const Tensor& target) {
  if (pred.shape != target.shape)
    throw std::invalid_argument("cross_entropy: shape mismatch");
  const double sp = pred.data.sum();
  const double st = target.data.sum();
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(st - 1.0) > 1e-6)
    throw std::invalid_argument("cross_entropy: inputs must each sum to 1");
  return neg(sum(mul(target, log_safe(clamp(pred, kLogFloor, 1.0)))));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[6] = {'K', 'G', 'A', 'N', 'P', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (s.size() - pos < n)
      throw std::runtime_error("parameter file truncated at byte " +
                               std::to_string(pos));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos + i]))
              << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string v = s.substr(pos, n);
    pos += n;
    return v;
  }
};

}  // namespace

std::string serialize_params(const ParameterSet& ps) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(ps.items.size()));
  for (const auto& [name, t] : ps.items) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (long i = 0; i < t.size(); ++i) put_f64(out, t.data[i]);
  }
  return out;
}

ParameterSet deserialize_params(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("parameter file: bad magic (expected KGANP1)");
  Reader r{bytes, sizeof(kMagic)};
  const std::uint32_t count = r.u32();
  ParameterSet ps;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8)
      throw std::runtime_error("parameter " + name + ": bad rank");
    Shape shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d)
      shape[d] = static_cast<int>(r.u32());
    validate_shape(shape);
    Array data(shape_numel(shape));
    for (long k = 0; k < data.size(); ++k) data[k] = r.f64();
    ps.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return ps;
}

void save_params(const ParameterSet& ps, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string bytes = serialize_params(ps);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

ParameterSet load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_params(buf.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace kgan
