#include "kgan/distill.hpp"
#include "kgan/gradcheck.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <cmath>

using namespace kgan;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi) {
  Array a(shape_numel(shape));
  for (long i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(a));
}

std::vector<ImagePair> phantom_set(int n, int size, std::uint64_t master) {
  std::vector<ImagePair> out;
  for (int i = 0; i < n; ++i) {
    ImagePair p = generate_phantom_pair(derive_seed(master, i), size);
    p.pair_id = i;
    out.push_back(std::move(p));
  }
  return out;
}

std::string model_bytes(const GanModel& m) {
  return serialize_params(m.gen_params) + serialize_params(m.disc_params);
}

}  // namespace

TEST_CASE("soft_label_loss at equal logits equals the soft-distribution entropy") {
  Rng rng(1);
  for (double t : {0.5, 1.0, 4.0}) {
    Tensor logits = random_tensor(rng, {5, 2}, -2, 2);
    const double loss = soft_label_loss(logits, logits, t).scalar();
    double want = 0.0;
    for (int r = 0; r < 5; ++r)
      want += oracle::entropy(
                  oracle::softmax({logits.data[2 * r], logits.data[2 * r + 1]}, t)) /
              5.0;
    CHECK(loss == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("soft_label_loss symmetric cases give ln 2") {
  Tensor z = tensor_of({1, 2}, std::vector<Scalar>{0, 0});
  for (double t : {0.5, 1.0, 4.0, 100.0})
    CHECK(soft_label_loss(z, z, t).scalar() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // T -> infinity flattens any finite logits to uniform.
  Tensor zs = tensor_of({1, 2}, std::vector<Scalar>{3.0, -1.5});
  Tensor zt = tensor_of({1, 2}, std::vector<Scalar>{-2.0, 0.5});
  CHECK(std::abs(soft_label_loss(zs, zt, 1e8).scalar() - std::log(2.0)) <= 1e-9);

  CHECK_THROWS_AS(soft_label_loss(z, z, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(
      soft_label_loss(z, tensor_of({2, 2}, std::vector<Scalar>{0, 0, 0, 0}), 1.0),
      std::invalid_argument);
}

TEST_CASE("soft_label_loss gradient vanishes at equality") {
  Rng rng(2);
  const Tensor teacher = random_tensor(rng, {3, 2}, -1.5, 1.5);
  auto f = [&](const Tensor& s) { return soft_label_loss(s, teacher, 4.0); };

  CHECK(grad_check(f, teacher, 1e-5) <= 1e-4);

  Graph g;
  Tensor s = g.param(teacher);
  GradientMap grads = g.backward(f(s));
  CHECK(grads.at(s.node).data.abs().maxCoeff() <= 1e-12);
}

TEST_CASE("T=1 soft distribution equals plain softmax elementwise") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor z = random_tensor(rng, {4}, -5, 5);
    Tensor q = softmax_t(z, 1.0);
    auto plain = oracle::softmax(
        std::vector<double>(z.data.data(), z.data.data() + z.size()), 1.0);
    for (long i = 0; i < z.size(); ++i)
      CHECK(std::abs(q.data[i] - plain[static_cast<std::size_t>(i)]) <= 1e-12);
  }
}

TEST_CASE("hard_label_loss closed forms and label validation") {
  CHECK(std::abs(hard_label_loss(full({1}, 1.0),
                                 tensor_of({1}, std::vector<Scalar>{1}))
                     .scalar()) <= 1.2e-6);
  CHECK(hard_label_loss(full({2}, 0.5), tensor_of({2}, std::vector<Scalar>{0, 1}))
            .scalar() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(hard_label_loss(full({1}, 0.9), tensor_of({1}, std::vector<Scalar>{0}))
            .scalar() == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
  CHECK_THROWS_AS(
      hard_label_loss(full({1}, 0.9), tensor_of({1}, std::vector<Scalar>{0.5})),
      std::invalid_argument);
}

TEST_CASE("distill_loss weights combine linearly") {
  DistillConfig cfg;
  cfg.alpha = 1.0;
  cfg.beta = 0.0;
  CHECK(distill_loss(0.37, 99.0, cfg) == 0.37);
  cfg.alpha = 0.0;
  cfg.beta = 1.0;
  CHECK(distill_loss(99.0, 0.71, cfg) == 0.71);
  cfg.alpha = 0.5;
  cfg.beta = 0.5;
  CHECK(distill_loss(0.4, 0.8, cfg) == doctest::Approx(0.6).epsilon(1e-15));

  // Exact linearity on random triples.
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    DistillConfig c;
    c.alpha = rng.uniform(0, 2);
    c.beta = rng.uniform(0, 2) + 1e-3;
    const double s1 = rng.uniform(-3, 3), h1 = rng.uniform(-3, 3);
    const double s2 = rng.uniform(-3, 3), h2 = rng.uniform(-3, 3);
    CHECK(std::abs(distill_loss(s1 + s2, h1 + h2, c) -
                   (distill_loss(s1, h1, c) + distill_loss(s2, h2, c))) <= 1e-12);
    const double k = rng.uniform(-2, 2);
    CHECK(std::abs(distill_loss(k * s1, k * h1, c) - k * distill_loss(s1, h1, c)) <=
          1e-12);
  }

  DistillConfig bad;
  bad.alpha = 0.0;
  bad.beta = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  DistillConfig bad_t;
  bad_t.temperature = 0.0;
  CHECK_THROWS_AS(bad_t.validate(), std::invalid_argument);
}

TEST_CASE("alpha=0, gamma=0, scale=1 reduces train_student to train_gan exactly") {
  const std::vector<ImagePair> data = phantom_set(6, 8, 11);
  TrainingConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 3;
  cfg.seed = 21;

  GanModel plain = build_student(8, 5, 1.0);
  auto [plain_model, plain_hist] = train_gan(std::move(plain), data, cfg);

  GanModel teacher = build_teacher(8, 77);
  GanModel student = build_student(8, 5, 1.0);
  DistillConfig dcfg;
  dcfg.alpha = 0.0;
  dcfg.beta = 1.0;
  dcfg.gamma = 0.0;
  dcfg.scale = 1.0;
  auto [student_model, student_hist] =
      train_student(teacher, std::move(student), data, cfg, dcfg);

  CHECK(history_csv(plain_hist) == history_csv(student_hist));
  CHECK(model_bytes(plain_model) == model_bytes(student_model));
}

TEST_CASE("teacher parameters are untouched by train_student") {
  const std::vector<ImagePair> data = phantom_set(6, 8, 12);
  GanModel teacher = build_teacher(8, 31);
  const std::string before = model_bytes(teacher);

  TrainingConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 3;
  cfg.seed = 5;
  DistillConfig dcfg;  // alpha, beta, gamma all active
  auto [student, hist] =
      train_student(teacher, build_student(8, 6, 0.5), data, cfg, dcfg);
  CHECK(model_bytes(teacher) == before);
  CHECK(hist.size() == 1);
  CHECK(student.param_count() < teacher.param_count());
}

TEST_CASE("identical student starts with zero imitation loss") {
  GanModel teacher = build_teacher(8, 41);
  GanModel student = build_student(8, 41, 1.0);  // same seed, same topology
  CHECK(model_bytes(teacher) == model_bytes(student));

  const std::vector<ImagePair> data = phantom_set(2, 8, 13);
  std::vector<const ImageGray*> cond{&data[0].a, &data[1].a};
  Tensor input = batch_to_tensor(cond);
  Tensor out_t = generator_forward(teacher, teacher.gen_params, input);
  Tensor out_s = generator_forward(student, student.gen_params, input);
  CHECK(mean_abs_diff(out_s, out_t).scalar() == 0.0);
}

TEST_CASE("train_student validates modes and shapes") {
  const std::vector<ImagePair> data = phantom_set(4, 8, 14);
  GanModel teacher = build_teacher(8, 1);
  TrainingConfig cfg;
  cfg.epochs = 1;
  DistillConfig dcfg;

  GanModel wstudent = build_student(8, 2, 0.5);
  wstudent.mode = GanMode::kWasserstein;
  CHECK_THROWS_AS(train_student(teacher, std::move(wstudent), data, cfg, dcfg),
                  std::invalid_argument);

  GanModel mismatched = build_student(16, 2, 0.5);
  CHECK_THROWS_AS(train_student(teacher, std::move(mismatched), data, cfg, dcfg),
                  std::invalid_argument);
}
