#include "kgan/gradcheck.hpp"
#include "kgan/graph.hpp"
#include "kgan/ops.hpp"
#include "kgan/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace kgan;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi) {
  Array a(shape_numel(shape));
  for (long i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(a));
}

bool bitwise_equal(const Array& a, const Array& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("tensor construction is row-major and checked") {
  Tensor t = tensor_of({2, 2}, std::vector<Scalar>{1, 2, 3, 4});
  CHECK(t.data[0] == 1.0);
  CHECK(t.data[1] == 2.0);
  CHECK(t.data[2] == 3.0);
  CHECK(t.data[3] == 4.0);

  CHECK_THROWS_AS(tensor_of({0}, std::vector<Scalar>{}), std::invalid_argument);
  CHECK_THROWS_AS(tensor_of({3}, std::vector<Scalar>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(tensor_of({2}, std::vector<Scalar>{1.0, NAN}), std::domain_error);
  CHECK_THROWS_AS(tensor_of({1}, std::vector<Scalar>{INFINITY}), std::domain_error);
}

TEST_CASE("elementwise forward identities") {
  Tensor z = tensor_of({1}, std::vector<Scalar>{0.0});
  CHECK(sigmoid(z).scalar() == 0.5);

  Tensor a = tensor_of({2}, std::vector<Scalar>{1, 2});
  Tensor b = tensor_of({2}, std::vector<Scalar>{3, 4});
  Tensor s = add(a, b);
  CHECK(s.data[0] == 4.0);
  CHECK(s.data[1] == 6.0);

  // High-precision scalar oracle for the log example.
  const double e = std::exp(1.0);
  Tensor le = log_safe(tensor_of({1}, std::vector<Scalar>{e}));
  CHECK(std::abs(le.scalar() - 1.0) <= 1e-12);

  CHECK_THROWS_AS(add(a, tensor_of({3}, std::vector<Scalar>{1, 2, 3})),
                  std::invalid_argument);
}

TEST_CASE("matmul matches hand-evaluated products") {
  Tensor id = tensor_of({2, 2}, std::vector<Scalar>{1, 0, 0, 1});
  Tensor m = tensor_of({2, 2}, std::vector<Scalar>{1, 2, 3, 4});
  CHECK(bitwise_equal(matmul(id, m).data, m.data));

  Tensor row = tensor_of({1, 2}, std::vector<Scalar>{1, 2});
  Tensor col = tensor_of({2, 1}, std::vector<Scalar>{3, 4});
  CHECK(matmul(row, col).scalar() == doctest::Approx(11.0).epsilon(1e-15));

  CHECK_THROWS_AS(matmul(row, row), std::invalid_argument);
}

TEST_CASE("reductions") {
  CHECK(mean(tensor_of({3}, std::vector<Scalar>{1, 2, 3})).scalar() == 2.0);
  CHECK(sum(tensor_of({3}, std::vector<Scalar>{1, 2, 3})).scalar() == 6.0);
  CHECK(mean(full({4, 4}, 0.25)).scalar() == 0.25);
}

TEST_CASE("backward of sum(x*x) is 2x") {
  Graph g;
  Tensor x = g.param(tensor_of({2}, std::vector<Scalar>{1, 2}));
  Tensor loss = sum(mul(x, x));
  GradientMap grads = g.backward(loss);
  const Tensor& gx = grads.at(x.node);
  CHECK(gx.data[0] == 2.0);
  CHECK(gx.data[1] == 4.0);
}

TEST_CASE("backward of sigmoid at 0 equals the analytic derivative") {
  Graph g;
  Tensor x = g.param(tensor_of({1}, std::vector<Scalar>{0.0}));
  Tensor loss = sigmoid(x);
  GradientMap grads = g.backward(loss);
  // sigma(1 - sigma) at 0.
  CHECK(grads.at(x.node).scalar() == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("backward rejects non-scalar losses and foreign graphs") {
  Graph g;
  Tensor x = g.param(tensor_of({2}, std::vector<Scalar>{1, 2}));
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(g.backward(y), std::invalid_argument);

  Graph g2;
  Tensor x2 = g2.param(tensor_of({2}, std::vector<Scalar>{1, 2}));
  CHECK_THROWS_AS(add(x, x2), std::invalid_argument);
}

TEST_CASE("leaves unreachable from the loss get zero gradients") {
  Graph g;
  Tensor used = g.param(tensor_of({2}, std::vector<Scalar>{1, 2}));
  Tensor unused = g.param(tensor_of({3}, std::vector<Scalar>{5, 6, 7}));
  GradientMap grads = g.backward(sum(used));
  CHECK(grads.at(unused.node).data.abs().maxCoeff() == 0.0);
  CHECK(grads.at(used.node).data.minCoeff() == 1.0);
}

TEST_CASE("grad_check: exact for sum, tight for smooth composites") {
  Rng rng(5);
  CHECK(grad_check([](const Tensor& x) { return sum(x); },
                   random_tensor(rng, {6}, -1, 1)) <= 1e-10);
  CHECK(grad_check([](const Tensor& x) { return mean(sigmoid(x)); },
                   random_tensor(rng, {6}, -2, 2)) <= 1e-4);
  CHECK_THROWS_AS(grad_check([](const Tensor& x) { return sum(x); },
                             random_tensor(rng, {2}, -1, 1), -1.0),
                  std::invalid_argument);
}

TEST_CASE("every differentiable op passes finite differences on 100 seeded inputs") {
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    const Shape shape{4};
    TensorFn f;
    Tensor x;
    switch (seed % 10) {
      case 0:
        f = [](const Tensor& t) { return mean(sigmoid(t)); };
        x = random_tensor(rng, shape, -2, 2);
        break;
      case 1:
        f = [](const Tensor& t) { return mean(tanh_(t)); };
        x = random_tensor(rng, shape, -2, 2);
        break;
      case 2:
        f = [](const Tensor& t) { return mean(exp_(t)); };
        x = random_tensor(rng, shape, -1, 1);
        break;
      case 3:
        f = [](const Tensor& t) { return mean(log_safe(t)); };
        x = random_tensor(rng, shape, 0.2, 1.5);
        break;
      case 4:
        f = [](const Tensor& t) { return mean(mul(t, t)); };
        x = random_tensor(rng, shape, -2, 2);
        break;
      case 5:
        f = [](const Tensor& t) { return sum(relu(t)); };
        x = random_tensor(rng, shape, 0.1, 1.0);
        break;
      case 6:
        f = [](const Tensor& t) { return sum(leaky_relu(t, 0.2)); };
        x = random_tensor(rng, shape, 0.1, 1.0);
        break;
      case 7:
        f = [](const Tensor& t) { return mean(softmax_t(t, 2.0)); };
        x = random_tensor(rng, shape, -2, 2);
        break;
      case 8:
        f = [](const Tensor& t) { return mean(sub(1.5, neg(t))); };
        x = random_tensor(rng, shape, -2, 2);
        break;
      default:
        f = [](const Tensor& t) {
          return sum(mul(reshape(t, {2, 2}), reshape(t, {2, 2})));
        };
        x = random_tensor(rng, shape, -2, 2);
        break;
    }
    CAPTURE(seed);
    CHECK(grad_check(f, x, 1e-5) <= 1e-4);
  }
}

TEST_CASE("backward is linear in the loss") {
  Rng rng(17);
  Graph g;
  Tensor x = g.param(random_tensor(rng, {5}, -1.5, 1.5));
  Tensor f = mean(sigmoid(x));
  Tensor h = mean(mul(x, x));
  const double a = 1.7, b = -0.6;
  Tensor combo = add(mul(f, a), mul(h, b));

  Array gf = g.backward(f).at(x.node).data;
  Array gh = g.backward(h).at(x.node).data;
  Array gc = g.backward(combo).at(x.node).data;
  CHECK((gc - (a * gf + b * gh)).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("identical op sequences produce bit-identical outputs and gradients") {
  auto episode = [](Array& out_value, Array& out_grad) {
    Rng rng(99);
    Graph g;
    Tensor x = g.param(random_tensor(rng, {3, 3}, -1, 1));
    Tensor y = mean(mul(sigmoid(matmul(x, x)), exp_(neg(x))));
    out_value = y.data;
    out_grad = g.backward(y).at(x.node).data;
  };
  Array v1, g1, v2, g2;
  episode(v1, g1);
  episode(v2, g2);
  CHECK(bitwise_equal(v1, v2));
  CHECK(bitwise_equal(g1, g2));
}

TEST_CASE("recorded graphs replay bit-exactly") {
  Rng rng(123);
  Graph g;
  Tensor x = g.param(random_tensor(rng, {2, 1, 6, 6}, 0, 1));
  Tensor w = g.param(random_tensor(rng, {3, 1, 3, 3}, -0.5, 0.5));
  Tensor b = g.param(random_tensor(rng, {3}, -0.1, 0.1));
  Tensor y = mean(relu(conv2d(x, w, b, 2, 1)));
  (void)y;
  CHECK(g.replay_bitexact());
}

TEST_CASE("scalar() requires one element") {
  CHECK_THROWS_AS(tensor_of({2}, std::vector<Scalar>{1, 2}).scalar(),
                  std::invalid_argument);
}
