#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "samo/error.hpp"
#include "samo/objective.hpp"

using samo::AttractorSet;
using samo::Mat;
using samo::MarginConfig;
using samo::OcCenter;
using samo::Rng;
using samo::Vec;

namespace {

struct Batch {
  Mat embeddings;
  std::vector<int> labels;
  std::vector<std::string> speakers;
};

Batch random_batch(Rng& rng, const AttractorSet& attractors, int n) {
  Batch b;
  b.embeddings.resize(n, attractors.dim());
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < attractors.dim(); ++j) b.embeddings(i, j) = rng.normal();
    b.embeddings.row(i) *= 0.5 + rng.uniform();  // keep norms away from zero
    b.labels.push_back(static_cast<int>(rng.below(2)));
    const auto& ids = attractors.speakers();
    b.speakers.push_back(ids[rng.below(ids.size())]);
  }
  return b;
}

// Smallest spoof argmax margin in the batch; finite-difference checks skip
// batches where the nearest attractor could flip under the probe step.
double min_argmax_gap(const Batch& b, const AttractorSet& attractors) {
  double gap = 1e9;
  for (int i = 0; i < b.embeddings.rows(); ++i) {
    if (b.labels[static_cast<std::size_t>(i)] == 0) continue;
    const Vec unit = samo::l2_unit(b.embeddings.row(i).transpose());
    Vec sims = attractors.rows() * unit;
    double top = -2.0, second = -2.0;
    for (Eigen::Index k = 0; k < sims.size(); ++k) {
      if (sims[k] > top) {
        second = top;
        top = sims[k];
      } else if (sims[k] > second) {
        second = sims[k];
      }
    }
    if (sims.size() > 1) gap = std::min(gap, top - second);
  }
  return gap;
}

AttractorSet two_basis_attractors() {
  Mat rows(2, 2);
  rows << 1.0, 0.0, 0.0, 1.0;
  return AttractorSet({"spkA", "spkB"}, rows);
}

}  // namespace

TEST_CASE("margin configs are validated") {
  CHECK_NOTHROW(MarginConfig{}.validate());
  CHECK_NOTHROW(MarginConfig{20.0, 0.5, -0.2}.validate());
  CHECK_THROWS_AS((MarginConfig{0.0, 0.7, 0.0}.validate()), samo::ConfigError);
  CHECK_THROWS_AS((MarginConfig{20.0, 0.0, 0.5}.validate()), samo::ConfigError);  // m0 <= m1
  CHECK_THROWS_AS((MarginConfig{20.0, 1.5, 0.0}.validate()), samo::ConfigError);
}

TEST_CASE("one_hot attractors take sorted basis rows") {
  const auto set = AttractorSet::one_hot({"spkB", "spkA"}, 3);
  CHECK(set.speakers() == std::vector<std::string>{"spkA", "spkB"});
  CHECK(set.rows()(0, 0) == 1.0);
  CHECK(set.rows()(1, 1) == 1.0);
  CHECK(set.rows().row(0).norm() == 1.0);
  CHECK(set.index_of("spkB") == 1);
  CHECK(!set.index_of("spkZ").has_value());

  CHECK_THROWS_AS(AttractorSet::one_hot({"a", "b", "c", "d", "e"}, 4), samo::TooManySpeakers);

  const auto big = AttractorSet::one_hot(
      {"s00", "s01", "s02", "s03", "s04", "s05", "s06", "s07", "s08", "s09",
       "s10", "s11", "s12", "s13", "s14", "s15", "s16", "s17", "s18", "s19"},
      160);
  CHECK((big.rows() * big.rows().transpose() - Mat::Identity(20, 20)).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("random_orthonormal covers more speakers than dimensions") {
  Rng rng(61);
  const auto set =
      AttractorSet::random_orthonormal({"s1", "s2", "s3", "s4", "s5"}, 3, rng);
  CHECK(set.size() == 5);
  for (Eigen::Index r = 0; r < set.size(); ++r)
    CHECK(std::abs(set.rows().row(r).norm() - 1.0) < 1e-12);
  // The first dim rows form an orthonormal family.
  for (Eigen::Index a = 0; a < 3; ++a)
    for (Eigen::Index b = a + 1; b < 3; ++b)
      CHECK(std::abs(set.rows().row(a).dot(set.rows().row(b))) < 1e-12);

  Rng rng2(61);
  const auto again = AttractorSet::random_orthonormal({"s1", "s2", "s3", "s4", "s5"}, 3, rng2);
  CHECK((set.rows() - again.rows()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("attractor sets enforce unit sorted unique rows") {
  Mat rows(2, 2);
  rows << 1.0, 0.0, 0.0, 2.0;
  CHECK_THROWS_AS(AttractorSet({"a", "b"}, rows), samo::ZeroNorm);
  rows << 1.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(AttractorSet({"b", "a"}, rows), samo::ConfigError);
  CHECK_THROWS_AS(AttractorSet({"a", "a"}, rows), samo::ConfigError);

  auto set = AttractorSet({"a", "b"}, rows);
  Vec bad(2);
  bad << 0.5, 0.5;
  CHECK_THROWS_AS(set.set_row(0, bad), samo::ZeroNorm);
}

TEST_CASE("similarity selects the own speaker for bona fide inputs") {
  const auto attractors = two_basis_attractors();
  Vec unit(2);
  unit << 1.0, 0.0;
  const auto r = samo::similarity_d(unit, 0, "spkA", attractors);
  CHECK(r.d == 1.0);
  CHECK(!r.argmax.has_value());

  Vec tilted(2);
  tilted << 0.6, 0.8;
  CHECK(samo::similarity_d(tilted, 0, "spkB", attractors).d == 0.8);
  CHECK_THROWS_AS(samo::similarity_d(unit, 0, "spkZ", attractors), samo::UnknownSpeaker);
}

TEST_CASE("similarity selects the nearest attractor for spoof inputs") {
  const auto attractors = two_basis_attractors();
  Vec unit(2);
  unit << 0.6, 0.8;
  const auto r = samo::similarity_d(unit, 1, "spkA", attractors);
  CHECK(r.d == 0.8);
  REQUIRE(r.argmax.has_value());
  CHECK(*r.argmax == 1);

  // Exact ties break to the lowest sorted speaker index.
  Vec diag(2);
  const double a = std::sqrt(0.5);
  diag << a, a;
  const auto tie = samo::similarity_d(diag, 1, "spkA", attractors);
  CHECK(*tie.argmax == 0);
  CHECK(tie.d == a);

  CHECK_THROWS_AS(samo::similarity_d(unit, 1, "spkA", AttractorSet()), samo::EmptyAttractors);
}

TEST_CASE("samo loss reproduces closed-form values") {
  const MarginConfig cfg{20.0, 0.7, 0.0};
  const auto attractors = two_basis_attractors();

  // Bona fide utterance sitting exactly on its attractor: d = 1.
  Mat emb(1, 2);
  emb << 2.0, 0.0;
  auto r = samo::samo_loss(emb, {0}, {"spkA"}, attractors, cfg);
  CHECK(r.loss == doctest::Approx(0.0024756851377304495).epsilon(1e-12));

  // Spoof orthogonal to every attractor: d = 0 and the loss is ln 2. No 2-D
  // direction is orthogonal to both basis attractors, so use 3-D.
  Mat rows(2, 3);
  rows << 1, 0, 0, 0, 1, 0;
  const AttractorSet attr3({"spkA", "spkB"}, rows);
  Mat emb3(1, 3);
  emb3 << 0.0, 0.0, 4.0;
  r = samo::samo_loss(emb3, {1}, {"spkA"}, attr3, MarginConfig{20.0, 0.7, 0.0});
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("samo loss averages terms and stays positive") {
  Rng rng(71);
  const MarginConfig cfg{20.0, 0.7, 0.0};
  const auto attractors = AttractorSet::one_hot({"s1", "s2", "s3"}, 5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto batch = random_batch(rng, attractors, 1 + static_cast<int>(rng.below(6)));
    const auto r = samo::samo_loss(batch.embeddings, batch.labels, batch.speakers, attractors, cfg);
    CHECK(r.loss > 0.0);
    CHECK(std::isfinite(r.loss));
  }
}

TEST_CASE("samo loss reduction: mean of singleton losses equals the batch loss") {
  Rng rng(72);
  const MarginConfig cfg{20.0, 0.7, 0.0};
  const auto attractors = AttractorSet::one_hot({"s1", "s2", "s3"}, 4);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const auto batch = random_batch(rng, attractors, n);
    const auto whole =
        samo::samo_loss(batch.embeddings, batch.labels, batch.speakers, attractors, cfg);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto one = samo::samo_loss(batch.embeddings.row(i), {batch.labels[i]},
                                       {batch.speakers[i]}, attractors, cfg);
      acc += one.loss;
    }
    CHECK(std::abs(whole.loss - acc / n) <= 1e-12 * std::max(1.0, std::abs(whole.loss)));
  }
}

TEST_CASE("samo loss is invariant to positive rescaling of embeddings") {
  Rng rng(73);
  const MarginConfig cfg{20.0, 0.7, 0.0};
  const auto attractors = AttractorSet::one_hot({"s1", "s2"}, 3);
  for (int rep = 0; rep < 30; ++rep) {
    const auto batch = random_batch(rng, attractors, 4);
    Mat scaled = batch.embeddings;
    for (int i = 0; i < 4; ++i) scaled.row(i) *= 0.1 + 10.0 * rng.uniform();
    const auto a = samo::samo_loss(batch.embeddings, batch.labels, batch.speakers, attractors, cfg);
    const auto b = samo::samo_loss(scaled, batch.labels, batch.speakers, attractors, cfg);
    CHECK(std::abs(a.loss - b.loss) <= 1e-12 * std::max(1.0, std::abs(a.loss)));
  }
}

TEST_CASE("samo bona fide loss falls and spoof loss rises with similarity") {
  const MarginConfig cfg{20.0, 0.7, 0.0};
  const auto attractors = two_basis_attractors();
  double prev_bona = 1e300, prev_spoof = -1.0;
  for (const double theta : {1.2, 0.9, 0.6, 0.3, 0.0}) {
    Mat emb(1, 2);
    emb << std::cos(theta), std::sin(theta);  // d(. , e0) = cos(theta), rising
    const double bona =
        samo::samo_loss(emb, {0}, {"spkA"}, attractors, cfg).loss;
    CHECK(bona < prev_bona);
    prev_bona = bona;
  }
  // One attractor, so the nearest-attractor similarity is cos(theta) with no
  // dip between centers.
  Mat solo_row(1, 2);
  solo_row << 1.0, 0.0;
  const AttractorSet solo({"spkA"}, solo_row);
  for (const double theta : {1.2, 0.9, 0.6, 0.3, 0.0}) {
    Mat emb(1, 2);
    emb << std::cos(theta), std::sin(theta);
    const double spoof = samo::samo_loss(emb, {1}, {"spkA"}, solo, cfg).loss;
    CHECK(spoof > prev_spoof);
    prev_spoof = spoof;
  }
}

TEST_CASE("spoof gradients route through the argmax attractor only") {
  const MarginConfig cfg{20.0, 0.7, 0.0};
  Mat rows(2, 2);
  rows << 1.0, 0.0, 0.0, 1.0;
  const AttractorSet attractors({"spkA", "spkB"}, rows);
  Mat emb(1, 2);
  emb << 0.9, 0.2;  // argmax is spkA by a wide margin

  const double base = samo::samo_loss(emb, {1}, {"spkA"}, attractors, cfg).loss;

  // Move the non-argmax attractor to a different unit direction that still
  // loses the argmax race; the loss must not change at all.
  Mat moved = rows;
  moved.row(1) = Vec::Unit(2, 1).transpose() * 0.6 - Vec::Unit(2, 0).transpose() * 0.8;
  const AttractorSet perturbed({"spkA", "spkB"}, moved);
  const double after = samo::samo_loss(emb, {1}, {"spkA"}, perturbed, cfg).loss;
  CHECK(after == base);
}

TEST_CASE("samo gradients match finite differences") {
  Rng rng(74);
  const MarginConfig cfg{20.0, 0.7, 0.0};
  const auto attractors = AttractorSet::one_hot({"s1", "s2", "s3"}, 4);
  const double h = 1e-6;
  int done = 0;
  while (done < 20) {
    auto batch = random_batch(rng, attractors, 3);
    if (min_argmax_gap(batch, attractors) < 1e-3) continue;
    ++done;
    const auto r = samo::samo_loss(batch.embeddings, batch.labels, batch.speakers, attractors, cfg);
    for (Eigen::Index i = 0; i < batch.embeddings.size(); ++i) {
      const double saved = batch.embeddings(i);
      batch.embeddings(i) = saved + h;
      const double fp =
          samo::samo_loss(batch.embeddings, batch.labels, batch.speakers, attractors, cfg).loss;
      batch.embeddings(i) = saved - h;
      const double fm =
          samo::samo_loss(batch.embeddings, batch.labels, batch.speakers, attractors, cfg).loss;
      batch.embeddings(i) = saved;
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(std::abs(r.grad_embeddings(i) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("oc-softmax loss reproduces closed-form values") {
  // Orthogonal bona fide embedding with zero margins: ln 2.
  OcCenter center{Vec::Unit(2, 0)};
  Mat emb(1, 2);
  emb << 0.0, 3.0;
  auto r = samo::oc_softmax_loss(emb, {0}, center, MarginConfig{1.0, 0.0, -0.5});
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Spoof at the antipode of the center: z = alpha*(m1 - d)*(-1) = -16, a
  // nearly perfect spoof rejection.
  emb << -2.0, 0.0;
  r = samo::oc_softmax_loss(emb, {1}, center, MarginConfig{20.0, 0.5, -0.2});
  CHECK(r.loss == doctest::Approx(1.1253516838717682e-07).epsilon(1e-9));

  // Bona fide at the antipode: z = 30, exercising the large-z softplus branch.
  r = samo::oc_softmax_loss(emb, {0}, center, MarginConfig{20.0, 0.5, -0.2});
  CHECK(r.loss == doctest::Approx(30.000000000000092).epsilon(1e-14));
  CHECK(std::isfinite(r.loss));
}

TEST_CASE("oc-softmax gradients match finite differences") {
  Rng rng(75);
  const MarginConfig cfg{20.0, 0.5, -0.2};
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const Eigen::Index dim = 3;
    Mat emb(n, dim);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb(i) = rng.normal();
    for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.below(2)));
    Vec w(dim);
    for (Eigen::Index i = 0; i < dim; ++i) w(i) = rng.normal();
    OcCenter center{w};

    const auto r = samo::oc_softmax_loss(emb, labels, center, cfg);
    for (Eigen::Index i = 0; i < emb.size(); ++i) {
      const double saved = emb(i);
      emb(i) = saved + h;
      const double fp = samo::oc_softmax_loss(emb, labels, center, cfg).loss;
      emb(i) = saved - h;
      const double fm = samo::oc_softmax_loss(emb, labels, center, cfg).loss;
      emb(i) = saved;
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(std::abs(r.grad_embeddings(i) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double saved = center.w(i);
      center.w(i) = saved + h;
      const double fp = samo::oc_softmax_loss(emb, labels, center, cfg).loss;
      center.w(i) = saved - h;
      const double fm = samo::oc_softmax_loss(emb, labels, center, cfg).loss;
      center.w(i) = saved;
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(std::abs(r.grad_center(i) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("single-speaker samo collapses to oc-softmax with a frozen center") {
  Rng rng(76);
  const MarginConfig cfg{20.0, 0.7, 0.0};
  for (int rep = 0; rep < 100; ++rep) {
    Vec dir(4);
    for (Eigen::Index i = 0; i < 4; ++i) dir(i) = rng.normal();
    const Vec unit = samo::l2_unit(dir);
    Mat rows(1, 4);
    rows.row(0) = unit.transpose();
    const AttractorSet attractors({"solo"}, rows);
    const OcCenter center{unit};

    const int n = 1 + static_cast<int>(rng.below(8));
    Mat emb(n, 4);
    std::vector<int> labels;
    std::vector<std::string> speakers(n, "solo");
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb(i) = rng.normal();
    for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.below(2)));

    const auto a = samo::samo_loss(emb, labels, speakers, attractors, cfg);
    const auto b = samo::oc_softmax_loss(emb, labels, center, cfg);
    CHECK(std::abs(a.loss - b.loss) <= 1e-12 * std::max(1.0, std::abs(a.loss)));
    CHECK((a.grad_embeddings - b.grad_embeddings).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("softmax cross-entropy reproduces closed-form values") {
  samo::SoftmaxHead head{Mat::Zero(2, 3), Vec::Zero(2)};
  Mat emb(1, 3);
  emb << 1.0, 2.0, -1.0;
  auto r = samo::softmax_ce_loss(emb, {0}, head);
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  head.b2 = Vec(2);
  head.b2 << 10.0, -10.0;
  r = samo::softmax_ce_loss(emb, {0}, head);
  CHECK(r.loss == doctest::Approx(2.061153620314381e-09).epsilon(1e-9));
  r = samo::softmax_ce_loss(emb, {1}, head);
  CHECK(r.loss == doctest::Approx(20.0 + 2.061153620314381e-09).epsilon(1e-12));
  CHECK(samo::softmax_score(head, samo::l2_unit(emb.row(0).transpose())) ==
        doctest::Approx(20.0).epsilon(1e-15));
}

TEST_CASE("softmax gradients match finite differences") {
  Rng rng(77);
  const double h = 1e-6;
  for (int rep = 0; rep < 15; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(5));
    Mat emb(n, 3);
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb(i) = rng.normal();
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.below(2)));
    samo::SoftmaxHead head;
    head.W2 = Mat(2, 3);
    head.b2 = Vec(2);
    for (Eigen::Index i = 0; i < head.W2.size(); ++i) head.W2(i) = rng.normal();
    for (Eigen::Index i = 0; i < 2; ++i) head.b2(i) = rng.normal();

    const auto r = samo::softmax_ce_loss(emb, labels, head);
    auto fd_check = [&](double analytic, double* slot) {
      const double saved = *slot;
      *slot = saved + h;
      const double fp = samo::softmax_ce_loss(emb, labels, head).loss;
      *slot = saved - h;
      const double fm = samo::softmax_ce_loss(emb, labels, head).loss;
      *slot = saved;
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(std::abs(analytic - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    };
    for (Eigen::Index i = 0; i < emb.size(); ++i) fd_check(r.grad_embeddings(i), &emb(i));
    for (Eigen::Index i = 0; i < head.W2.size(); ++i) fd_check(r.grad_W2(i), &head.W2(i));
    for (Eigen::Index i = 0; i < 2; ++i) fd_check(r.grad_b2(i), &head.b2(i));
  }
}

TEST_CASE("enrollment centers average normalized embeddings") {
  Vec v(2);
  v << 3.0, 4.0;
  const Vec single = samo::enrollment_center({v});
  CHECK(single(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(single(1) == doctest::Approx(0.8).epsilon(1e-15));

  Vec a(2), b(2);
  a << 2.0, 0.0;
  b << 0.0, 5.0;
  const Vec pair = samo::enrollment_center({a, b});
  CHECK(pair(0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(pair(1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

  Vec na(2);
  na << -2.0, 0.0;
  CHECK_THROWS_AS(samo::enrollment_center({a, na}), samo::ZeroNorm);
  CHECK_THROWS_AS(samo::enrollment_center({}), samo::MissingEnrollment);
}

TEST_CASE("scores prefer the enrollment center over attractors") {
  const auto attractors = two_basis_attractors();
  std::map<std::string, Vec> centers;
  centers["spkA"] = Vec::Unit(2, 0);

  Vec unit(2);
  unit << 0.6, 0.8;
  CHECK(samo::score(unit, "spkA", centers, attractors) == 0.6);
  CHECK(samo::score(unit, "spkB", centers, attractors) == 0.8);  // falls back to max
  CHECK(samo::score(Vec::Unit(2, 1), "spkB", {{"spkB", Vec::Unit(2, 1)}}, attractors) == 1.0);
  CHECK_THROWS_AS(samo::score(unit, "spkB", centers, AttractorSet()), samo::EmptyAttractors);
}

TEST_CASE("update_attractors recomputes centers from bona fide embeddings") {
  // Identity encoder: embeddings equal features.
  samo::EncoderParams identity;
  identity.weights.push_back(Mat::Identity(2, 2));
  identity.biases.push_back(Vec::Zero(2));

  auto utt = [](const std::string& id, const std::string& spk, int label, double x, double y) {
    samo::Utterance u;
    u.utt_id = id;
    u.speaker = spk;
    u.label = label;
    u.attack_tag = label == 0 ? "-" : "A01";
    u.features = Vec(2);
    u.features << x, y;
    return u;
  };

  const auto previous = two_basis_attractors();

  SUBCASE("single utterance lands on its normalized embedding") {
    const auto updated = samo::update_attractors(
        identity, {utt("u1", "spkA", 0, 3.0, 4.0), utt("u2", "spkB", 0, 0.0, 2.0)}, previous);
    CHECK(updated.rows()(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(updated.rows()(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(updated.rows()(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("symmetric pair averages to the diagonal") {
    const auto updated = samo::update_attractors(
        identity,
        {utt("u1", "spkA", 0, 2.0, 0.0), utt("u2", "spkA", 0, 0.0, 1.0),
         utt("u3", "spkB", 0, 0.0, 1.0)},
        previous);
    CHECK(updated.rows()(0, 0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(updated.rows()(0, 1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(std::abs(updated.rows().row(0).norm() - 1.0) < 1e-10);
  }

  SUBCASE("raw averaging weights magnitudes") {
    const auto norm_mode = samo::update_attractors(
        identity, {utt("u1", "spkA", 0, 4.0, 0.0), utt("u2", "spkA", 0, 0.0, 1.0),
                   utt("u3", "spkB", 0, 0.0, 1.0)},
        previous, samo::AttractorMean::kNormalized);
    const auto raw_mode = samo::update_attractors(
        identity, {utt("u1", "spkA", 0, 4.0, 0.0), utt("u2", "spkA", 0, 0.0, 1.0),
                   utt("u3", "spkB", 0, 0.0, 1.0)},
        previous, samo::AttractorMean::kRaw);
    CHECK(norm_mode.rows()(0, 0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(raw_mode.rows()(0, 0) == doctest::Approx(4.0 / std::sqrt(17.0)).epsilon(1e-14));
  }

  SUBCASE("speakers without bona fide utterances keep their attractor") {
    const auto updated = samo::update_attractors(
        identity, {utt("u1", "spkA", 0, 3.0, 4.0), utt("u2", "spkB", 1, 5.0, 5.0)}, previous);
    CHECK((updated.rows().row(1) - previous.rows().row(1)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("antipodal embeddings cancel") {
    CHECK_THROWS_AS(
        samo::update_attractors(
            identity, {utt("u1", "spkA", 0, 1.0, 0.0), utt("u2", "spkA", 0, -1.0, 0.0)}, previous),
        samo::ZeroNorm);
  }

  SUBCASE("bona fide speakers outside the set are rejected") {
    CHECK_THROWS_AS(
        samo::update_attractors(identity, {utt("u1", "spkZ", 0, 1.0, 0.0)}, previous),
        samo::UnknownSpeaker);
  }
}
