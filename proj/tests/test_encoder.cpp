#include <doctest.h>

#include <cmath>
#include <random>

#include "egcn/encoder.hpp"
#include "support/gradcheck.hpp"

using namespace egcn;
using egcn::testing::random_tensor;
using egcn::testing::randomize;

namespace {

using Vec = std::vector<double>;

EncoderDims small_dims() { return {5, 4, 3, 6, 7, 5}; }

EncoderParams random_params(const EncoderDims& dims, std::uint64_t seed, double scale = 0.5) {
  EncoderParams p(dims);
  ParameterList list;
  p.register_parameters(list);
  std::mt19937_64 rng(seed);
  randomize(list, rng, scale);
  return p;
}

Vec row(const Tensor& t, std::size_t r) { return Vec(t.row_span(r).begin(), t.row_span(r).end()); }

Vec dense_affine(const AffineBlock& b, const Vec& x) {
  const Tensor& w = b.weight.value();
  Vec y(w.rows());
  for (std::size_t o = 0; o < w.rows(); ++o) {
    double s = b.bias.value()[o];
    for (std::size_t i = 0; i < w.cols(); ++i) s += w(o, i) * x[i];
    y[o] = s;
  }
  return y;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One LSTM step from a zero state.
Vec dense_first_step(const LstmCell& cell, const Vec& x) {
  const Vec z = dense_affine(cell.input, x);
  const std::size_t h = cell.hidden();
  Vec out(h);
  for (std::size_t k = 0; k < h; ++k) {
    const double c = sig(z[k]) * std::tanh(z[2 * h + k]);
    out[k] = sig(z[3 * h + k]) * std::tanh(c);
  }
  return out;
}

Vec cat(Vec a, const Vec& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Vec query_of(const Tensor& tokens, const EncoderParams& p) {
  Tape t;
  return row(encode_query(t.constant(tokens), p).value(), 0);
}

/// Forward/backward cells swapped; the second layer's input halves swapped to match.
EncoderParams mirrored(const EncoderParams& p) {
  EncoderParams m = p;
  std::swap(m.query1.forward, m.query1.backward);
  std::swap(m.query2.forward, m.query2.backward);
  for (LstmCell* cell : {&m.query2.forward, &m.query2.backward}) {
    Tensor& w = cell->input.weight.value();
    const std::size_t half = w.cols() / 2;
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < half; ++c) std::swap(w(r, c), w(r, c + half));
    }
  }
  return m;
}

Tensor reversed_rows(const Tensor& t) {
  Tensor out(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) out(r, c) = t(t.rows() - 1 - r, c);
  }
  return out;
}

Mention span(std::size_t doc, std::size_t start, std::size_t end) {
  Mention m;
  m.doc = doc;
  m.start = start;
  m.end = end;
  return m;
}

}  // namespace

TEST_CASE("query encoding has twice the second hidden size") {
  for (const EncoderDims& dims : {small_dims(), EncoderDims{8, 6, 4, 5, 5, 5}}) {
    const EncoderParams p = random_params(dims, 1);
    std::mt19937_64 rng(2);
    for (std::size_t len : {1, 2, 9}) {
      const Vec q = query_of(random_tensor(len, dims.raw, rng), p);
      CHECK(q.size() == dims.query_dim());
    }
  }
  EncoderDims defaults;
  CHECK(defaults.query_dim() == 256);
  EncoderParams p(small_dims());
  Tape t;
  CHECK_THROWS_AS(encode_query(t.constant(Tensor(0, 5)), p), ShapeError);
}

TEST_CASE("single-token query: each direction takes exactly one step") {
  const EncoderDims dims = small_dims();
  const EncoderParams p = random_params(dims, 3);
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor(1, dims.raw, rng);
  const Vec layer1 = cat(dense_first_step(p.query1.forward, row(x, 0)), dense_first_step(p.query1.backward, row(x, 0)));
  const Vec expected = cat(dense_first_step(p.query2.forward, layer1), dense_first_step(p.query2.backward, layer1));
  const Vec q = query_of(x, p);
  REQUIRE(q.size() == expected.size());
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("reversing the query under mirrored parameters swaps the final states") {
  const EncoderDims dims = small_dims();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const EncoderParams p = random_params(dims, 100 + trial);
    const Tensor x = random_tensor(2 + trial % 5, dims.raw, rng);
    const Vec q = query_of(x, p);
    const Vec qm = query_of(reversed_rows(x), mirrored(p));
    const std::size_t h = dims.query_hidden2;
    for (std::size_t k = 0; k < h; ++k) {
      CHECK(std::abs(qm[k] - q[h + k]) < 1e-12);
      CHECK(std::abs(qm[h + k] - q[k]) < 1e-12);
    }
  }
}

TEST_CASE("mention pooling") {
  Tensor doc(4, 3, {1, 2, 3, 4, 5, 6, 1, 2, 3, 0, 0, 9});
  Tensor other(2, 3, {7, 7, 7, 8, 8, 8});
  const std::vector<Tensor> docs = {doc, other};
  const Tensor mean = pool_mentions({span(0, 0, 1), span(0, 0, 3), span(1, 0, 2), span(0, 0, 1)}, docs,
                                    SpanPooling::mean);
  CHECK(row(mean, 0) == Vec{1, 2, 3});
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(mean(1, k) - static_cast<double>(k + 2)) < 1e-15);
  CHECK(row(mean, 2) == Vec{7.5, 7.5, 7.5});
  CHECK(row(mean, 3) == row(mean, 0));  // identical spans, identical rows

  const Tensor equal = pool_mentions({span(0, 0, 2)}, {Tensor(2, 3, 0.25)}, SpanPooling::mean);
  CHECK(row(equal, 0) == Vec{0.25, 0.25, 0.25});
  CHECK(row(pool_mentions({span(0, 1, 4)}, docs, SpanPooling::first), 0) == Vec{4, 5, 6});
  CHECK(row(pool_mentions({span(0, 1, 4)}, docs, SpanPooling::last), 0) == Vec{0, 0, 9});

  try {
    pool_mentions({span(1, 1, 3)}, docs, SpanPooling::mean);
    FAIL("expected CoverageError");
  } catch (const CoverageError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("document 1") != std::string::npos);
    CHECK(msg.find("index 2") != std::string::npos);
  }
  CHECK_THROWS_AS(pool_mentions({span(2, 0, 1)}, docs, SpanPooling::mean), CoverageError);

  for (SpanPooling sp : {SpanPooling::mean, SpanPooling::first, SpanPooling::last}) {
    CHECK(parse_pooling(pooling_name(sp)) == sp);
  }
  CHECK_FALSE(parse_pooling("max").has_value());
}

TEST_CASE("three-token span: mean then affine, by hand") {
  EncoderParams p(EncoderDims{2, 1, 1, 2, 1, 1});
  p.projection.weight.value() = Tensor(2, 2, {1, 2, -1, 0.5});
  p.projection.bias.value() = Tensor(1, 2, {0.5, -1});
  const Tensor doc(3, 2, {1, 0, 2, 3, 3, 3});
  Tape t;
  const Tensor y = encode_mentions(t.constant(pool_mentions({span(0, 0, 3)}, {doc}, SpanPooling::mean)), p).value();
  // mean = (2, 2); W·mean + b = (2 + 4 + 0.5, −2 + 1 − 1)
  CHECK(row(y, 0) == Vec{6.5, -2.0});
}

TEST_CASE("query-dependent encoding") {
  SUBCASE("output sizes") {
    const EncoderDims dims = small_dims();
    const EncoderParams p = random_params(dims, 6);
    std::mt19937_64 rng(7);
    Tape t;
    const Var q = encode_query(t.constant(random_tensor(3, dims.raw, rng)), p);
    const Var x = encode_mentions(t.constant(random_tensor(4, dims.raw, rng)), p);
    CHECK(x.cols() == dims.projection);
    const Var xh = query_dependent_encoding(q, x, p);
    CHECK(xh.rows() == 4);
    CHECK(xh.cols() == dims.node);
    EncoderDims defaults;
    CHECK(EncoderParams(defaults).fx2.out_dim() == 512);
    CHECK(EncoderParams(defaults).fx1.in_dim() == 512);
    CHECK(EncoderParams(defaults).fx1.out_dim() == 1024);
  }
  SUBCASE("zero weights give zero") {
    const EncoderDims dims = small_dims();
    EncoderParams p(dims);
    std::mt19937_64 rng(8);
    Tape t;
    const Var xh = query_dependent_encoding(t.constant(random_tensor(1, dims.query_dim(), rng)),
                                            t.constant(random_tensor(3, dims.projection, rng)), p);
    for (double v : xh.value().values()) CHECK(v == 0.0);
  }
  SUBCASE("matches a dense oracle") {
    const EncoderDims dims = small_dims();
    const EncoderParams p = random_params(dims, 9);
    std::mt19937_64 rng(10);
    const Tensor q = random_tensor(1, dims.query_dim(), rng);
    const Tensor x = random_tensor(3, dims.projection, rng);
    Tape t;
    const Tensor got = query_dependent_encoding(t.constant(q), t.constant(x), p).value();
    for (std::size_t i = 0; i < 3; ++i) {
      Vec h = dense_affine(p.fx1, cat(row(x, i), row(q, 0)));
      for (double& v : h) v = std::tanh(v);
      Vec y = dense_affine(p.fx2, h);
      for (std::size_t k = 0; k < y.size(); ++k) CHECK(std::abs(got(i, k) - std::tanh(y[k])) < 1e-12);
    }
  }
  SUBCASE("depends on the query") {
    const EncoderDims dims = small_dims();
    const EncoderParams p = random_params(dims, 11);
    std::mt19937_64 rng(12);
    const Tensor x = random_tensor(2, dims.projection, rng);
    Tape t;
    const Tensor a = query_dependent_encoding(t.constant(random_tensor(1, dims.query_dim(), rng)), t.constant(x), p).value();
    const Tensor b = query_dependent_encoding(t.constant(random_tensor(1, dims.query_dim(), rng)), t.constant(x), p).value();
    CHECK(a != b);
  }
  SUBCASE("dimension mismatch is an error") {
    const EncoderParams p = random_params(small_dims(), 13);
    Tape t;
    CHECK_THROWS(query_dependent_encoding(t.constant(Tensor(1, 2)), t.constant(Tensor(3, 6)), p));
  }
}

TEST_CASE("encoder gradients match central differences") {
  const EncoderDims dims{3, 2, 2, 3, 4, 3};
  EncoderParams p = random_params(dims, 14);
  ParameterList list;
  p.register_parameters(list);
  std::mt19937_64 rng(15);
  const Tensor query = random_tensor(3, dims.raw, rng);
  const Tensor pooled = random_tensor(2, dims.raw, rng);
  const Tensor readout = random_tensor(2, dims.node, rng);
  const auto errors = egcn::testing::check_parameter_gradients(list, [&](Tape& t) {
    const Var q = encode_query(t.constant(query), p);
    const Var xh = query_dependent_encoding(q, encode_mentions(t.constant(pooled), p), p);
    return sum(mul(xh, t.constant(readout)));
  });
  CHECK(errors.size() == list.size());
  for (const auto& e : errors) {
    INFO(e.name);
    CHECK(e.relative < 1e-6);
  }
}
