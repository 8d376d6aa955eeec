#include <cmath>
#include <cstring>

#include "doctest.h"
#include "gdial/gradcheck.hpp"
#include "gdial/nn.hpp"
#include "gdial/optim.hpp"
#include "gdial/rng.hpp"
#include "gdial/tape.hpp"

using namespace gdial;

namespace {

Array random_array(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0, double hi = 1.0) {
  Array a(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
  return a;
}

Array random_off_zero(Rng& rng, std::vector<std::size_t> shape) {
  Array a(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double mag = 0.05 + rng.uniform();
    a[i] = rng.uniform() < 0.5 ? -mag : mag;
  }
  return a;
}

}  // namespace

TEST_CASE("matmul matches hand arithmetic") {
  Tape t;
  Value eye = t.constant(Array::matrix(2, 2, {1, 0, 0, 1}));
  Value b = t.constant(Array::matrix(2, 2, {3, 4, 5, 6}));
  const Array& id = t.matmul(eye, b).array();
  CHECK(id[0] == 3);
  CHECK(id[1] == 4);
  CHECK(id[2] == 5);
  CHECK(id[3] == 6);

  Value row = t.constant(Array::matrix(1, 2, {1, 2}));
  Value zeros = t.constant(Array::matrix(2, 1, {0, 0}));
  CHECK(t.matmul(row, zeros).array()[0] == 0.0);

  Value a = t.constant(Array::matrix(2, 2, {1, 2, 3, 4}));
  Value c = t.constant(Array::matrix(2, 2, {5, 6, 7, 8}));
  const Array& prod = t.matmul(a, c).array();
  CHECK(prod[0] == 19);
  CHECK(prod[1] == 22);
  CHECK(prod[2] == 43);
  CHECK(prod[3] == 50);
}

TEST_CASE("matmul dimension error names both shapes") {
  Tape t;
  Value a = t.constant(Array::zeros({2, 3}));
  Value b = t.constant(Array::zeros({2, 2}));
  try {
    t.matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[2x2]") != std::string::npos);
  }
}

TEST_CASE("elementwise definitions") {
  Tape t;
  const Array& r = t.relu(t.constant(Array::vec({-1, 0, 2}))).array();
  CHECK(r[0] == 0);
  CHECK(r[1] == 0);
  CHECK(r[2] == 2);
  CHECK(t.tanh(t.constant(Array::vec({0}))).array()[0] == 0.0);
  CHECK(t.sigmoid(t.constant(Array::vec({0}))).array()[0] == 0.5);

  // scalar broadcasting, both sides
  const Array& s1 = t.add(t.constant(Array::scalar(2)), t.constant(Array::vec({1, 2}))).array();
  CHECK(s1[0] == 3);
  CHECK(s1[1] == 4);
  const Array& s2 = t.mul(t.constant(Array::vec({1, 2})), t.constant(Array::scalar(3))).array();
  CHECK(s2[0] == 3);
  CHECK(s2[1] == 6);
  CHECK_THROWS_AS(t.add(t.constant(Array::vec({1, 2})), t.constant(Array::vec({1, 2, 3}))),
                  DimensionError);
}

TEST_CASE("softmax examples and invariants") {
  Tape t;
  const Array& u = t.softmax(t.constant(Array::vec({0, 0}))).array();
  CHECK(u[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(u[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.softmax(t.constant(Array::vec({5}))).array()[0] == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<std::uint8_t> mask = {1, 0, 1};
  const Array& m = t.softmax(t.constant(Array::vec({1, 1, 1})), &mask).array();
  CHECK(m[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m[1] == 0.0);  // exactly zero
  CHECK(m[2] == doctest::Approx(0.5).epsilon(1e-15));

  std::vector<std::uint8_t> none = {0, 0};
  CHECK_THROWS_AS(t.softmax(t.constant(Array::vec({1, 2})), &none), ContractError);

  // sums to one and is shift invariant, under random scores and masks
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.index(8);
    Array scores = random_array(rng, {n}, -4, 4);
    std::vector<std::uint8_t> mk(n, 0);
    mk[rng.index(n)] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < 0.6) mk[i] = 1;
    }
    Tape t2;
    const Array& y = t2.softmax(t2.constant(scores), &mk).array();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += y[i];
    CHECK(std::fabs(sum - 1.0) <= 1e-12);

    Array shifted = scores;
    for (std::size_t i = 0; i < n; ++i) shifted[i] += 17.25;
    const Array& y2 = t2.softmax(t2.constant(shifted), &mk).array();
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(y[i] - y2[i]) <= 1e-12);
  }
}

namespace {

// Independent scalar recurrence for the gated cell, plain double loops.
void lstm_oracle_step(const Array& w, const Array& b, const std::vector<double>& x,
                      std::vector<double>& h, std::vector<double>& c) {
  const std::size_t d = h.size();
  const std::size_t e = x.size();
  std::vector<double> z(4 * d, 0.0);
  for (std::size_t i = 0; i < 4 * d; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < e; ++j) s += w.at(i, j) * x[j];
    for (std::size_t j = 0; j < d; ++j) s += w.at(i, e + j) * h[j];
    z[i] = s;
  }
  auto sigm = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> h_new(d);
  std::vector<double> c_new(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double gi = sigm(z[j]);
    const double gf = sigm(z[d + j]);
    const double go = sigm(z[2 * d + j]);
    const double gc = std::tanh(z[3 * d + j]);
    c_new[j] = gf * c[j] + gi * gc;
    h_new[j] = go * std::tanh(c_new[j]);
  }
  h = h_new;
  c = c_new;
}

}  // namespace

TEST_CASE("lstm_step zero weights give zero state") {
  const std::size_t d = 3, e = 2;
  Parameter w("w", Array::zeros({4 * d, e + d}));
  Parameter b("b", Array::zeros({4 * d}));
  Tape t;
  LstmParams lp{&w, &b};
  LstmState s = lstm_zero_state(t, d, 1);
  s = lstm_step(t, t.constant(Array::matrix(e, 1, {0.7, -1.3})), s, lp);
  for (std::size_t i = 0; i < d; ++i) {
    CHECK(s.h.array()[i] == 0.0);
    CHECK(s.c.array()[i] == 0.0);
  }
}

TEST_CASE("lstm_step matches the scalar unroll oracle over two steps") {
  Rng rng(21);
  const std::size_t d = 4, e = 3;
  Parameter w("w", random_array(rng, {4 * d, e + d}, -0.6, 0.6));
  Parameter b("b", random_array(rng, {4 * d}, -0.3, 0.3));
  Array x1 = random_array(rng, {e, 1});
  Array x2 = random_array(rng, {e, 1});

  Tape t;
  LstmParams lp{&w, &b};
  LstmState s = lstm_zero_state(t, d, 1);
  s = lstm_step(t, t.constant(x1), s, lp);
  s = lstm_step(t, t.constant(x2), s, lp);

  std::vector<double> h(d, 0.0), c(d, 0.0);
  lstm_oracle_step(w.value, b.value, {x1[0], x1[1], x1[2]}, h, c);
  lstm_oracle_step(w.value, b.value, {x2[0], x2[1], x2[2]}, h, c);
  for (std::size_t i = 0; i < d; ++i) {
    CHECK(s.h.array()[i] == doctest::Approx(h[i]).epsilon(1e-12));
    CHECK(s.c.array()[i] == doctest::Approx(c[i]).epsilon(1e-12));
  }
}

TEST_CASE("lstm_step gradients match finite differences at 1e-6") {
  Rng rng(22);
  const std::size_t d = 3, e = 2;
  Parameter w("lstm.w", random_array(rng, {4 * d, e + d}, -0.5, 0.5));
  Parameter b("lstm.b", random_array(rng, {4 * d}, -0.2, 0.2));
  Array x = random_array(rng, {e, 1});
  Array mix = random_array(rng, {d, 1});
  Parameter* ps[] = {&w, &b};
  GradCheckReport r = grad_check(ps, [&](Tape& t) {
    LstmParams lp{&w, &b};
    LstmState s = lstm_zero_state(t, d, 1);
    s = lstm_step(t, t.constant(x), s, lp);
    return t.sum(t.mul(s.h, t.constant(mix)));
  });
  CHECK(r.max_rel_err <= 1e-6);
}

TEST_CASE("masked lstm_step freezes padded columns") {
  Rng rng(23);
  const std::size_t d = 3, e = 2;
  Parameter w("w", random_array(rng, {4 * d, e + d}));
  Parameter b("b", random_array(rng, {4 * d}));
  Tape t;
  LstmParams lp{&w, &b};
  LstmState s = lstm_zero_state(t, d, 2);
  s = lstm_step(t, t.constant(random_array(rng, {e, 2})), s, lp);
  std::vector<std::uint8_t> mask = {1, 0};
  LstmState before = s;
  s = lstm_step(t, t.constant(random_array(rng, {e, 2})), s, lp, &mask);
  for (std::size_t i = 0; i < d; ++i) {
    CHECK(s.h.array().at(i, 1) == before.h.array().at(i, 1));
    CHECK(s.c.array().at(i, 1) == before.c.array().at(i, 1));
  }
}

TEST_CASE("backward linear and tanh base cases") {
  Parameter p("p", Array::matrix(2, 3, {0, 0, 0, 0, 0, 0}));
  {
    Tape t;
    Value loss = t.sum(t.param(p));
    t.backward(loss);
    for (std::size_t i = 0; i < p.grad.size(); ++i) CHECK(p.grad[i] == 1.0);
  }
  p.zero_grad();
  {
    Tape t;
    Value loss = t.sum(t.tanh(t.param(p)));
    t.backward(loss);
    for (std::size_t i = 0; i < p.grad.size(); ++i) CHECK(p.grad[i] == 1.0);
  }
}

TEST_CASE("backward rejects non-scalar loss") {
  Parameter p("p", Array::vec({1, 2}));
  Tape t;
  Value v = t.param(p);
  CHECK_THROWS_AS(t.backward(v), ContractError);
}

TEST_CASE("unreachable parameters keep zero gradient") {
  Parameter used("used", Array::vec({1, 2}));
  Parameter unused("unused", Array::vec({3}));
  Tape t;
  Value a = t.param(used);
  t.param(unused);
  t.backward(t.sum(a));
  CHECK(unused.grad[0] == 0.0);
}

TEST_CASE("backward of a random three-layer composition matches finite differences") {
  Rng rng(31);
  Parameter w1("w1", random_array(rng, {4, 3}, -0.7, 0.7));
  Parameter w2("w2", random_array(rng, {3, 4}, -0.7, 0.7));
  Parameter b2("b2", random_array(rng, {3, 1}, -0.3, 0.3));
  Array x = random_array(rng, {3, 1});
  Parameter* ps[] = {&w1, &w2, &b2};
  GradCheckReport r = grad_check(ps, [&](Tape& t) {
    Value h1 = t.tanh(t.matmul(t.param(w1), t.constant(x)));
    Value h2 = t.sigmoid(t.add(t.matmul(t.param(w2), h1), t.param(b2)));
    return t.sum(t.mul(h2, h2));
  });
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("adjoint accumulation is linear across losses") {
  Rng rng(33);
  Parameter p("p", random_array(rng, {3, 3}, -0.5, 0.5));
  Array c = random_array(rng, {3, 3});

  Tape t1;
  t1.backward(t1.sum(t1.tanh(t1.param(p))));
  Array g1 = p.grad;
  p.zero_grad();

  Tape t2;
  {
    Value v = t2.param(p);
    t2.backward(t2.sum(t2.mul(v, t2.constant(c))));
  }
  Array g2 = p.grad;
  p.zero_grad();

  Tape t3;
  {
    Value v = t3.param(p);
    Value loss = t3.add(t3.sum(t3.tanh(v)), t3.sum(t3.mul(v, t3.constant(c))));
    t3.backward(loss);
  }
  for (std::size_t i = 0; i < p.grad.size(); ++i) {
    CHECK(std::fabs(p.grad[i] - (g1[i] + g2[i])) <= 1e-12);
  }
}

TEST_CASE("adam first step, zero gradients and two-step recurrence") {
  const AdamConfig cfg;  // lr 4e-4, betas 0.9/0.999, eps 1e-8
  {
    Parameter p("p", Array::vec({1.0}));
    Parameter* ps[] = {&p};
    AdamState adam(ps, cfg);
    p.grad[0] = 1.0;
    adam.step(ps);
    const double expected = 1.0 - 4e-4 * (1.0 / (1.0 + 1e-8));
    CHECK(std::fabs(p.value[0] - expected) <= 1e-16);
    CHECK(adam.step_count() == 1);
    CHECK(p.grad[0] == 1.0);  // gradients untouched, caller resets
  }
  {
    Parameter p("p", Array::vec({0.75}));
    Parameter* ps[] = {&p};
    AdamState adam(ps, cfg);
    p.grad[0] = 0.0;
    adam.step(ps);
    CHECK(p.value[0] == 0.75);
  }
  {
    const double g = 0.37;
    Parameter p("p", Array::vec({2.0}));
    Parameter* ps[] = {&p};
    AdamState adam(ps, cfg);
    // independent recurrence
    double theta = 2.0, m = 0.0, v = 0.0;
    for (int step = 1; step <= 2; ++step) {
      p.grad[0] = g;
      adam.step(ps);
      m = cfg.beta1 * m + (1 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
      const double mhat = m / (1 - std::pow(cfg.beta1, step));
      const double vhat = v / (1 - std::pow(cfg.beta2, step));
      theta -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
      CHECK(p.value[0] == doctest::Approx(theta).epsilon(1e-15));
    }
  }
}

TEST_CASE("grad_check on a linear layer is tight; constant fragments report zero") {
  Rng rng(41);
  Parameter w("linear.w", random_array(rng, {3, 4}, -0.8, 0.8));
  Array x = random_array(rng, {4, 1});
  Parameter* ps[] = {&w};
  GradCheckReport r =
      grad_check(ps, [&](Tape& t) { return t.sum(t.matmul(t.param(w), t.constant(x))); });
  CHECK(r.max_rel_err <= 1e-7);

  Parameter unused("unused", random_array(rng, {2, 2}));
  Parameter* ps2[] = {&unused};
  GradCheckReport r2 = grad_check(ps2, [&](Tape& t) {
    t.param(unused);
    return t.constant(Array::scalar(3.25));
  });
  CHECK(r2.max_rel_err == 0.0);
}

TEST_CASE("every primitive matches central finite differences over 100 random shapes") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed * 7919 + 13);
    const std::size_t m = 1 + rng.index(5);
    const std::size_t k = 1 + rng.index(5);
    const std::size_t n = 1 + rng.index(5);
    const double tol = 1e-4;

    {
      Parameter p("matmul", random_array(rng, {m, k}));
      Array b = random_array(rng, {k, n});
      Parameter* ps[] = {&p};
      CHECK(grad_check(ps, [&](Tape& t) {
              return t.sum(t.matmul(t.param(p), t.constant(b)));
            }).max_rel_err <= tol);
    }
    {
      Parameter p("add_mul", random_array(rng, {m, n}));
      Array b = random_array(rng, {m, n});
      Array s = random_array(rng, {1});
      Parameter* ps[] = {&p};
      CHECK(grad_check(ps, [&](Tape& t) {
              Value v = t.add(t.param(p), t.constant(b));
              v = t.mul(v, t.constant(s));  // scalar broadcast
              return t.sum(t.mul(v, v));
            }).max_rel_err <= tol);
    }
    {
      Parameter p("acts", random_off_zero(rng, {m, n}));
      Array b = random_array(rng, {m, n});
      Parameter* ps[] = {&p};
      CHECK(grad_check(ps, [&](Tape& t) {
              Value v = t.param(p);
              Value out = t.add(t.add(t.tanh(v), t.sigmoid(v)), t.relu(v));
              return t.sum(t.mul(out, t.constant(b)));
            }).max_rel_err <= tol);
    }
    {
      const std::size_t len = 2 + rng.index(6);
      Parameter p("softmax", random_array(rng, {len}, -3, 3));
      Array wv = random_array(rng, {len});
      std::vector<std::uint8_t> mask(len, 0);
      mask[rng.index(len)] = 1;
      for (std::size_t i = 0; i < len; ++i) {
        if (rng.uniform() < 0.5) mask[i] = 1;
      }
      Parameter* ps[] = {&p};
      CHECK(grad_check(ps, [&](Tape& t) {
              return t.sum(t.mul(t.softmax(t.param(p), &mask), t.constant(wv)));
            }).max_rel_err <= tol);
    }
    {
      Parameter p("structural", random_array(rng, {m, n}));
      Parameter q("structural2", random_array(rng, {m, n}));
      std::vector<std::size_t> gather = {rng.index(2 * n), rng.index(2 * n)};
      Parameter* ps[] = {&p, &q};
      CHECK(grad_check(ps, [&](Tape& t) {
              Value cat = t.concat_cols({t.param(p), t.param(q)});
              Value g = t.gather_cols(cat, gather);
              Value s = t.slice_rows(cat, 0, m);
              return t.add(t.sum(t.tanh(g)), t.scale(t.sum(s), 0.25));
            }).max_rel_err <= tol);
    }
    {
      const std::size_t len = 2 + rng.index(6);
      Parameter p("nll", random_array(rng, {len}, -2, 2));
      const std::size_t target = rng.index(len);
      Parameter* ps[] = {&p};
      CHECK(grad_check(ps, [&](Tape& t) {
              return t.nll_from_scores(t.param(p), target);
            }).max_rel_err <= tol);
    }
    {
      const std::size_t v = 2 + rng.index(5);
      const std::size_t cols = 1 + rng.index(4);
      Parameter p("nll_cols", random_array(rng, {v, cols}, -2, 2));
      std::vector<std::size_t> targets(cols);
      std::vector<std::uint8_t> mask(cols);
      for (std::size_t j = 0; j < cols; ++j) {
        targets[j] = rng.index(v);
        mask[j] = rng.uniform() < 0.8 ? 1 : 0;
      }
      mask[rng.index(cols)] = 1;
      Parameter* ps[] = {&p};
      CHECK(grad_check(ps, [&](Tape& t) {
              return t.sum(t.masked_nll_cols(t.param(p), targets, mask));
            }).max_rel_err <= tol);
    }
  }
}

TEST_CASE("forward evaluation is bitwise deterministic") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter w("w", random_array(rng, {6, 6}, -0.9, 0.9));
    Array x = random_array(rng, {6, 3});
    Tape t;
    Value out = t.tanh(t.matmul(t.param(w), t.constant(x)));
    out = t.softmax(t.reshape(t.gather_cols(out, {0}), {6}));
    const Array& a = out.array();
    return std::vector<double>(a.data(), a.data() + a.size());
  };
  auto a = run(12345);
  auto b = run(12345);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("non-finite results are rejected") {
  Tape t;
  Value big = t.constant(Array::scalar(1e308));
  CHECK_THROWS_AS(t.mul(t.scale(big, 1e10), t.constant(Array::scalar(1.0))), NumericError);
}
