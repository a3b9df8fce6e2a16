#include "labelmtl/transfer.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace labelmtl;
using ad::Tensor;

namespace {

// Type frequencies by sorting and counting runs.
DiversityFeatures brute_force(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  std::vector<double> counts;
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t j = i;
    while (j < tokens.size() && tokens[j] == tokens[i]) ++j;
    counts.push_back(static_cast<double>(j - i));
    i = j;
  }
  const double n = static_cast<double>(tokens.size());
  DiversityFeatures f;
  f.num_types = static_cast<double>(counts.size());
  f.type_token_ratio = f.num_types / n;
  for (double c : counts) {
    const double p = c / n;
    f.shannon_entropy -= p * std::log(p);
    f.simpson_index += p * p;
  }
  f.renyi_entropy = -std::log(f.simpson_index);
  return f;
}

}  // namespace

TEST_CASE("output label embedding examples") {
  const Tensor rows = Tensor::constant(3, 2, {1, 2, -3, 0.5, 4, -1});
  for (std::size_t j = 0; j < 3; ++j) {
    const auto o = output_label_embedding(Tensor::row(ad::one_hot(j, 3)), rows);
    CHECK(o.at(0, 0) == rows.at(j, 0));
    CHECK(o.at(0, 1) == rows.at(j, 1));
  }
  const Tensor e = Tensor::constant(2, 3, {1, 0, 0, 0, 1, 0});
  const auto mid = output_label_embedding(Tensor::row({0.5, 0.5}), e);
  CHECK(std::vector<double>(mid.values().begin(), mid.values().end()) == std::vector<double>{0.5, 0.5, 0});
  const auto q = output_label_embedding(Tensor::row({0.25, 0.75}), Tensor::constant(2, 2, {1, 0, 0, 1}));
  CHECK(q.at(0, 0) == 0.25);
  CHECK(q.at(0, 1) == 0.75);
  CHECK_THROWS_AS(output_label_embedding(Tensor::row({0.5, 0.5}), rows), ad::DimensionError);
}

TEST_CASE("output label embeddings stay in the coordinatewise hull") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t L = 2 + trial % 5, l = 1 + trial % 7;
    const Tensor rows = testutil::random_param(rng, L, l, -3, 3);
    const auto p = testutil::random_distribution(rng, L);
    const auto o = output_label_embedding(Tensor::row(p), rows);
    for (std::size_t k = 0; k < l; ++k) {
      double lo = rows.at(0, k), hi = rows.at(0, k);
      for (std::size_t j = 1; j < L; ++j) {
        lo = std::min(lo, rows.at(j, k));
        hi = std::max(hi, rows.at(j, k));
      }
      CHECK(o.at(0, k) >= lo - 1e-12);
      CHECK(o.at(0, k) <= hi + 1e-12);
    }
  }
}

TEST_CASE("diversity feature examples") {
  const std::vector<std::string> one = {"a"};
  const auto f1 = diversity_features(one);
  CHECK(f1.num_types == 1.0);
  CHECK(f1.type_token_ratio == 1.0);
  CHECK(f1.shannon_entropy == 0.0);
  CHECK(f1.simpson_index == 1.0);
  CHECK(f1.renyi_entropy == 0.0);

  const std::vector<std::string> aab = {"a", "a", "b"};
  const auto f = diversity_features(aab);
  CHECK(f.num_types == 2.0);
  CHECK(f.type_token_ratio == doctest::Approx(2.0 / 3).epsilon(1e-15));
  const double h = -(2.0 / 3 * std::log(2.0 / 3) + 1.0 / 3 * std::log(1.0 / 3));
  CHECK(f.shannon_entropy == doctest::Approx(h).epsilon(1e-14));
  CHECK(f.shannon_entropy == doctest::Approx(0.63651).epsilon(1e-5));
  CHECK(f.simpson_index == doctest::Approx(5.0 / 9).epsilon(1e-15));
  CHECK(f.renyi_entropy == doctest::Approx(std::log(9.0 / 5)).epsilon(1e-14));
  CHECK(f.renyi_entropy == doctest::Approx(0.58779).epsilon(1e-5));

  const std::vector<std::string> bab = {"b", "a", "a"};
  CHECK(diversity_features(bab).as_array() == f.as_array());
  CHECK_THROWS(diversity_features(std::vector<std::string>{}));
}

TEST_CASE("diversity features match a brute-force recomputation") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> len(1, 30), vocab(0, 1 + trial % 12);
    std::vector<std::string> toks(static_cast<std::size_t>(len(rng)));
    for (auto& t : toks) t = "t" + std::to_string(vocab(rng));
    const auto got = diversity_features(toks).as_array();
    const auto want = brute_force(toks).as_array();
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got[k] - want[k]) < 1e-9);
    const auto f = diversity_features(toks);
    CHECK(f.renyi_entropy == -std::log(f.simpson_index));
    CHECK(f.type_token_ratio == f.num_types / static_cast<double>(toks.size()));
    std::shuffle(toks.begin(), toks.end(), rng);
    CHECK(diversity_features(toks).as_array() == f.as_array());
  }
}

TEST_CASE("ltn forward examples") {
  std::mt19937_64 rng(4);
  LtnLayout layout;
  layout.num_aux = 2;
  layout.label_dim = 3;
  layout.diversity = true;
  layout.hidden = 5;
  layout.outputs = 3;
  CHECK(layout.input_width() == 2 * 3 + 5);

  LtnParams zero = LtnParams::init(rng, layout);
  for (auto t : zero.parameters()) std::fill(t.mutable_values().begin(), t.mutable_values().end(), 0.0);
  const std::vector<Tensor> aux = {testutil::random_param(rng, 2, 3), testutil::random_param(rng, 2, 3)};
  const Tensor div = testutil::random_param(rng, 2, 5);
  const auto z0 = ltn_forward(aux, nullptr, &div, zero);
  for (double v : z0.values()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  LtnParams p = LtnParams::init(rng, layout, 1.0);
  const auto z = ltn_forward(aux, nullptr, &div, p);
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += z.at(r, c);
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
  const std::vector<Tensor> swapped = {aux[1], aux[0]};
  const auto zs = ltn_forward(swapped, nullptr, &div, p);
  CHECK(testutil::max_abs_diff(z.values(), zs.values()) > 1e-9);

  // Flags and inputs must agree.
  CHECK_THROWS(ltn_forward(aux, nullptr, nullptr, p));
  CHECK_THROWS(ltn_forward(std::vector<Tensor>{aux[0]}, nullptr, &div, p));
  CHECK_THROWS(ltn_forward(aux, &aux[0], &div, p));

  LtnLayout with_main = layout;
  with_main.main_predictions = true;
  with_main.diversity = false;
  CHECK(with_main.input_width() == 3 * 3);
  const LtnParams pm = LtnParams::init(rng, with_main);
  CHECK(ltn_forward(aux, &aux[0], nullptr, pm).cols() == 3);
}

TEST_CASE("ltn forward passes grad_check") {
  std::mt19937_64 rng(8);
  LtnLayout layout{2, 3, true, false, 4, 3};
  LtnParams p = LtnParams::init(rng, layout, 1.0);
  std::vector<Tensor> aux = {testutil::random_param(rng, 3, 3), testutil::random_param(rng, 3, 3)};
  const Tensor div = Tensor::constant(3, 5, testutil::uniform(rng, 15));
  const std::vector<std::size_t> gold = {0, 2, 1};
  auto params = p.parameters();
  params.push_back(aux[0]);
  params.push_back(aux[1]);
  auto loss = [&] { return ltn_supervised_loss(ltn_forward(aux, nullptr, &div, p), gold); };
  CHECK(ad::grad_check(loss, params).max_relative_error < 1e-4);
}

TEST_CASE("ltn supervised loss examples") {
  const std::vector<std::size_t> y0 = {0};
  CHECK(ltn_supervised_loss(Tensor::row({1, 0, 0}), y0).item() == 0.0);
  CHECK(ltn_supervised_loss(Tensor::row({1.0 / 3, 1.0 / 3, 1.0 / 3}), y0).item() ==
        doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(ltn_supervised_loss(Tensor::row({0.5, 0.5}), y0).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("pseudo label loss examples") {
  CHECK(pseudo_label_loss(Tensor::row({0.2, 0.8}), Tensor::row({0.2, 0.8})).item() == 0.0);
  CHECK(pseudo_label_loss(Tensor::row({1, 0}), Tensor::row({0, 1})).item() == 2.0);
  CHECK(pseudo_label_loss(Tensor::row({0.6, 0.4}), Tensor::row({0.8, 0.2})).item() ==
        doctest::Approx(0.08).epsilon(1e-14));
  CHECK_THROWS_AS(pseudo_label_loss(Tensor::row({1, 0}), Tensor::row({1, 0, 0})), ad::DimensionError);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto p = testutil::random_distribution(rng, 4), z = testutil::random_distribution(rng, 4);
    CHECK(pseudo_label_loss(Tensor::row(p), Tensor::row(z)).item() > 0.0);
  }
}

TEST_CASE("diversity matrix reads the text of the selected rows") {
  std::vector<Example> exs(2);
  exs[0].text = {"a", "a", "b"};
  exs[0].condition = {"zzz"};
  exs[1].text = {"a"};
  const std::vector<std::size_t> rows = {1, 0};
  const Tensor m = diversity_matrix(exs, rows);
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 5);
  CHECK(m.at(0, 0) == 1.0);
  CHECK(m.at(1, 0) == 2.0);
  CHECK(m.at(1, 3) == doctest::Approx(5.0 / 9));
}
