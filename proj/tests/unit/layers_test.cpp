#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hrgc/errors.hpp"
#include "hrgc/layers/attention.hpp"
#include "hrgc/layers/encoder.hpp"
#include "hrgc/layers/lstm.hpp"
#include "hrgc/numerics/ops.hpp"
#include "support/fd_check.hpp"
#include "support/oracles.hpp"

namespace hrgc {
namespace {

using T = Tensor<double>;

T random_tensor(Shape shape, Rng& rng, bool grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return T::from_values(std::move(shape), std::move(v), grad);
}

oracle::Mat as_mat(const T& t) {
  return oracle::to_mat({t.values().begin(), t.values().end()}, t.rows(), t.cols());
}

oracle::Vec as_vec(const T& t) { return {t.values().begin(), t.values().end()}; }

double max_abs_diff(const T& t, const oracle::Mat& m) {
  double worst = 0.0;
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[r].size(); ++c) worst = std::max(worst, std::abs(t.at(r, c) - m[r][c]));
  return worst;
}

T permute_rows(const T& t, const std::vector<std::size_t>& perm) {
  std::vector<double> out;
  for (std::size_t r : perm)
    for (std::size_t c = 0; c < t.cols(); ++c) out.push_back(t.at(r, c));
  return T::from_values(t.shape(), out);
}

TEST(LstmTest, ZeroWeightsHalveTheCellState) {
  const auto p = LstmParams<double>::zeros(2, 3);
  const LstmState<double> prev{T::zeros({1, 3}), T::from_values({1, 3}, {0.4, -1.0, 2.0})};
  const auto next = lstm_cell_step(p, prev, T::from_values({1, 2}, {0.3, 0.7}));
  for (std::size_t i = 0; i < 3; ++i) {
    const double c = prev.c.values()[i];
    EXPECT_NEAR(next.c.values()[i], 0.5 * c, 1e-15);
    EXPECT_NEAR(next.h.values()[i], 0.5 * std::tanh(0.5 * c), 1e-15);
  }
}

TEST(LstmTest, ZeroWeightsAndStateAreFixedPoint) {
  const auto p = LstmParams<double>::zeros(2, 3);
  const auto next = lstm_cell_step(p, LstmState<double>::zeros(3), T::from_values({1, 2}, {5, -5}));
  for (double v : next.h.values()) EXPECT_EQ(v, 0.0);
  for (double v : next.c.values()) EXPECT_EQ(v, 0.0);
}

TEST(LstmTest, MatchesScalarOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = LstmParams<double>::init(3, 4, rng);
    const LstmState<double> prev{random_tensor({1, 4}, rng), random_tensor({1, 4}, rng)};
    const T y = random_tensor({1, 3}, rng);
    const auto got = lstm_cell_step(p, prev, y);
    const auto want = oracle::lstm_cell(as_mat(p.w_forget), as_mat(p.w_input), as_mat(p.w_candidate),
                                        as_mat(p.w_output), as_vec(p.b_forget), as_vec(p.b_input),
                                        as_vec(p.b_candidate), as_vec(p.b_output), as_vec(prev.h), as_vec(prev.c),
                                        as_vec(y));
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(got.h.values()[i], want.h[i], 1e-12);
      EXPECT_NEAR(got.c.values()[i], want.c[i], 1e-12);
    }
  }
}

TEST(LstmTest, LayerFirstRowIsOneCellStep) {
  Rng rng(22);
  const auto p = LstmParams<double>::init(3, 4, rng);
  const T seq = random_tensor({1, 3}, rng);
  const T out = lstm_layer(p, seq);
  const auto step = lstm_cell_step(p, LstmState<double>::zeros(4), seq);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(out.values()[i], step.h.values()[i], 1e-14);
}

TEST(LstmTest, LayerUnrollsCellSteps) {
  Rng rng(23);
  const auto p = LstmParams<double>::init(3, 4, rng);
  const T seq = random_tensor({6, 3}, rng);
  const T out = lstm_layer(p, seq);
  auto state = LstmState<double>::zeros(4);
  for (std::size_t x = 0; x < 6; ++x) {
    state = lstm_cell_step(p, state, row(seq, x));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(out.at(x, i), state.h.values()[i], 1e-13);
  }
}

TEST(LstmTest, ZeroParamsGiveZeroOutput) {
  Rng rng(24);
  const T out = lstm_layer(LstmParams<double>::zeros(3, 2), random_tensor({5, 3}, rng));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(LstmTest, ShapeErrors) {
  const auto p = LstmParams<double>::zeros(3, 2);
  EXPECT_THROW(lstm_cell_step(p, LstmState<double>::zeros(2), T::zeros({1, 4})), ShapeError);
  EXPECT_THROW(lstm_layer(p, T::zeros({5, 4})), ShapeError);
}

TEST(LstmTest, GradientsMatchFiniteDifferences) {
  Rng rng(25);
  const auto p = LstmParams<double>::init(3, 2, rng);
  const T seq = random_tensor({4, 3}, rng, true);
  ParameterList<double> named;
  p.collect(named, "lstm");
  std::vector<test::FdParam> params = {{"sequence", seq}};
  for (const auto& n : named) params.push_back({n.name, n.tensor});
  const auto report = test::check_gradients(params, [&] { return test::weighted_sum(lstm_layer(p, seq)); });
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst;
}

TEST(PositionalEncodingTest, PositionZeroAndRange) {
  const T pe = positional_encoding<double>(50, 8);
  for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(pe.at(0, c), c % 2 == 0 ? 0.0 : 1.0);
  for (double v : pe.values()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(PositionalEncodingTest, MatchesOracle) {
  for (std::size_t d : {2u, 4u, 6u, 16u}) EXPECT_LT(max_abs_diff(positional_encoding<double>(40, d),
                                                                 oracle::positional_encoding(40, d)),
                                                    1e-12);
}

TEST(AttentionTest, SingleTokenReturnsValueRow) {
  Rng rng(31);
  const T z = random_tensor({1, 4}, rng);
  const T wq = random_tensor({4, 2}, rng);
  const T wk = random_tensor({4, 2}, rng);
  const T wv = random_tensor({4, 2}, rng);
  const T out = attention_head(z, wq, wk, wv);
  const T v = matmul(z, wv);
  for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(out.at(0, c), v.at(0, c), 1e-14);
}

TEST(AttentionTest, IdenticalTokensGiveIdenticalRows) {
  Rng rng(32);
  const T one = random_tensor({1, 4}, rng);
  const T z = stack_rows<double>({one, one, one});
  const T out = attention_head(z, random_tensor({4, 2}, rng), random_tensor({4, 2}, rng), random_tensor({4, 2}, rng));
  for (std::size_t r = 1; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(out.at(r, c), out.at(0, c), 1e-14);
}

TEST(AttentionTest, WeightRowsAreStochastic) {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto res = attention_head_detailed(random_tensor({6, 4}, rng), random_tensor({4, 3}, rng),
                                             random_tensor({4, 3}, rng), random_tensor({4, 3}, rng));
    for (std::size_t r = 0; r < 6; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 6; ++c) total += res.weights.at(r, c);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(AttentionTest, MatchesOracle) {
  Rng rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const T z = random_tensor({5, 4}, rng);
    const T wq = random_tensor({4, 2}, rng);
    const T wk = random_tensor({4, 2}, rng);
    const T wv = random_tensor({4, 3}, rng);
    EXPECT_LT(max_abs_diff(attention_head(z, wq, wk, wv),
                           oracle::attention_head(as_mat(z), as_mat(wq), as_mat(wk), as_mat(wv))),
              1e-12);
  }
}

TEST(AttentionTest, PermutationEquivarianceOnlyWithoutPositions) {
  Rng rng(35);
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  bool broken_with_pe = false;
  for (int trial = 0; trial < 10; ++trial) {
    const T z = random_tensor({5, 4}, rng);
    const T wq = random_tensor({4, 2}, rng);
    const T wk = random_tensor({4, 2}, rng);
    const T wv = random_tensor({4, 2}, rng);
    const T permuted_out = attention_head(permute_rows(z, perm), wq, wk, wv);
    const T out_permuted = permute_rows(attention_head(z, wq, wk, wv), perm);
    for (std::size_t i = 0; i < permuted_out.numel(); ++i)
      EXPECT_NEAR(permuted_out.values()[i], out_permuted.values()[i], 1e-10);

    const T pe = positional_encoding<double>(5, 4);
    const T with_pe = attention_head(add(permute_rows(z, perm), pe), wq, wk, wv);
    const T reference = permute_rows(attention_head(add(z, pe), wq, wk, wv), perm);
    for (std::size_t i = 0; i < with_pe.numel(); ++i)
      broken_with_pe = broken_with_pe || std::abs(with_pe.values()[i] - reference.values()[i]) > 1e-6;
  }
  EXPECT_TRUE(broken_with_pe);
}

TEST(AttentionTest, ProjectionMismatchIsShapeError) {
  EXPECT_THROW(attention_head(T::zeros({3, 4}), T::zeros({4, 2}), T::zeros({4, 3}), T::zeros({4, 2})), ShapeError);
}

EncoderParams<double> random_encoder(std::size_t width, std::size_t heads, std::size_t d_head, std::size_t d_ff,
                                     Rng& rng) {
  auto p = EncoderParams<double>::init(width, heads, d_head, d_ff, rng);
  // Non-trivial norms and biases so the gradient check exercises them.
  for (T* t : {&p.b_ff1, &p.b_ff2, &p.ln1_gain, &p.ln1_bias, &p.ln2_gain, &p.ln2_bias})
    for (double& v : t->mutable_values()) v = rng.uniform(-1.0, 1.0);
  return p;
}

TEST(MultiHeadTest, SingleHeadWithIdentityOutputEqualsHead) {
  Rng rng(41);
  auto p = EncoderParams<double>::init(4, 1, 4, 8, rng);
  std::vector<double> eye(16, 0.0);
  for (std::size_t i = 0; i < 4; ++i) eye[i * 5] = 1.0;
  p.w_out = T::from_values({4, 4}, eye, true);
  const T z = random_tensor({5, 4}, rng);
  const T a = multi_head_attention(z, p);
  const T b = attention_head(z, p.heads[0].w_query, p.heads[0].w_key, p.heads[0].w_value);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-14);
}

TEST(MultiHeadTest, ZeroOutputProjectionGivesZero) {
  Rng rng(42);
  auto p = EncoderParams<double>::init(4, 2, 2, 8, rng);
  p.w_out = T::zeros({4, 4}, true);
  const T out = multi_head_attention(random_tensor({5, 4}, rng), p);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(MultiHeadTest, HeadCountMismatchIsContractError) {
  Rng rng(43);
  auto p = EncoderParams<double>::init(4, 2, 2, 8, rng);
  p.heads.pop_back();
  EXPECT_THROW(multi_head_attention(random_tensor({3, 4}, rng), p), ContractError);
}

TEST(FeedForwardTest, MatchesOracle) {
  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_encoder(4, 2, 2, 6, rng);
    const T z = random_tensor({5, 4}, rng);
    EXPECT_LT(max_abs_diff(feed_forward(z, p), oracle::feed_forward(as_mat(z), as_mat(p.w_ff1), as_vec(p.b_ff1),
                                                                    as_mat(p.w_ff2), as_vec(p.b_ff2))),
              1e-12);
  }
}

TEST(FeedForwardTest, RowPermutationCommutes) {
  Rng rng(52);
  const auto p = random_encoder(4, 2, 2, 6, rng);
  const T z = random_tensor({5, 4}, rng);
  const std::vector<std::size_t> perm = {4, 2, 0, 3, 1};
  const T a = feed_forward(permute_rows(z, perm), p);
  const T b = permute_rows(feed_forward(z, p), perm);
  EXPECT_EQ(as_vec(a), as_vec(b));
}

TEST(FeedForwardTest, ZeroWeightsGiveBias) {
  Rng rng(53);
  auto p = random_encoder(4, 2, 2, 6, rng);
  p.w_ff1 = T::zeros({4, 6}, true);
  p.w_ff2 = T::zeros({6, 4}, true);
  const T out = feed_forward(random_tensor({3, 4}, rng), p);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out.at(r, c), p.b_ff2.values()[c]);
}

TEST(LayerNormTest, ConstantRowBecomesZero) {
  const T out = layer_norm(T::from_values({1, 4}, {3, 3, 3, 3}), T::full({4}, 1.0), T::zeros({4}));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNormTest, RowsHaveZeroMeanUnitVariance) {
  Rng rng(61);
  const T out = layer_norm(random_tensor({6, 8}, rng), T::full({8}, 1.0), T::zeros({8}));
  for (std::size_t r = 0; r < 6; ++r) {
    double m = 0.0;
    double v = 0.0;
    for (std::size_t c = 0; c < 8; ++c) m += out.at(r, c) / 8.0;
    for (std::size_t c = 0; c < 8; ++c) v += (out.at(r, c) - m) * (out.at(r, c) - m) / 8.0;
    EXPECT_NEAR(m, 0.0, 1e-6);
    EXPECT_NEAR(v, 1.0, 1e-4);  // eps = 1e-5 shrinks the variance slightly
  }
}

TEST(LayerNormTest, MatchesOracle) {
  Rng rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    const T z = random_tensor({4, 5}, rng);
    const T g = random_tensor({5}, rng);
    const T b = random_tensor({5}, rng);
    EXPECT_LT(max_abs_diff(layer_norm(z, g, b), oracle::layer_norm(as_mat(z), as_vec(g), as_vec(b), 1e-5)), 1e-12);
  }
}

TEST(EncoderBlockTest, ZeroSublayersReduceToDoubleNorm) {
  Rng rng(71);
  auto p = EncoderParams<double>::init(4, 2, 2, 8, rng);
  p.w_out = T::zeros({4, 4}, true);
  p.w_ff1 = T::zeros({4, 8}, true);
  p.w_ff2 = T::zeros({8, 4}, true);
  const T z = random_tensor({5, 4}, rng);
  const T want = layer_norm(layer_norm(z, p.ln1_gain, p.ln1_bias), p.ln2_gain, p.ln2_bias);
  EXPECT_EQ(as_vec(encoder_block(z, p)), as_vec(want));
}

TEST(EncoderBlockTest, PreservesShape) {
  Rng rng(72);
  const auto p = EncoderParams<double>::init(6, 2, 3, 8, rng);
  for (std::size_t len : {1u, 7u, 33u}) EXPECT_EQ(encoder_block(random_tensor({len, 6}, rng), p).shape(), Shape({len, 6}));
  EXPECT_THROW(encoder_block(random_tensor({3, 5}, rng), p), ShapeError);
}

TEST(EncoderBlockTest, GradientsMatchFiniteDifferences) {
  Rng rng(73);
  const auto p = random_encoder(4, 2, 2, 6, rng);
  const T z = random_tensor({4, 4}, rng, true);
  ParameterList<double> named;
  p.collect(named, "encoder");
  std::vector<test::FdParam> params = {{"z", z}};
  for (const auto& n : named) params.push_back({n.name, n.tensor});
  const auto report = test::check_gradients(params, [&] { return test::weighted_sum(encoder_block(z, p)); });
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst;
}

}  // namespace
}  // namespace hrgc
