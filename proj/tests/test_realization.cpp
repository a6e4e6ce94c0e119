#include <gtest/gtest.h>

#include <random>

#include "dspkit/decider.hpp"
#include "dspkit/realization.hpp"
#include "oracles.hpp"

using namespace dspkit;

namespace {

using A = AdditiveScalar;

CMatrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  CMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

oracle::QMatrix exact(const CMatrix& m) {
  oracle::QMatrix q = oracle::zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) q[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = static_cast<int>(m(r, c).real());
  return q;
}

std::vector<NumericClass> strata_classes() {
  return {numeric_class(Jnf::distinct(2), {1.0, 2.0}), numeric_class(Jnf::distinct(2), {3.0, 5.0}),
          numeric_class(Jnf::distinct(2), {-4.0, -7.0})};
}

std::vector<CMatrix> strata(double eps) {
  return {mat({{1, 0}, {0, 2}}), mat({{3, eps}, {0, 5}}), mat({{-4, -eps}, {0, -7}})};
}

CMatrix random_invertible(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-1, 1);
  CMatrix q(n, n);
  for (;;) {
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) q(r, c) = Complex(u(rng), u(rng));
    if (Eigen::JacobiSVD<CMatrix>(q).singularValues().minCoeff() > 0.1) return q;
  }
}

template <class S>
std::span<const ClassSpec<S>> view(const std::vector<ClassSpec<S>>& v) {
  return {v.data(), v.size()};
}

}  // namespace

TEST(Certificates, Burnside) {
  const std::vector<CMatrix> diag{mat({{1, 0}, {0, 2}}), mat({{3, 0}, {0, -1}})};
  EXPECT_EQ(burnside_dim(diag), 2);
  const std::vector<CMatrix> id{CMatrix::Identity(3, 3)};
  EXPECT_EQ(burnside_dim(id), 1);
  const std::vector<CMatrix> full{mat({{0, 1}, {0, 0}}), mat({{0, 0}, {1, 0}})};
  EXPECT_EQ(burnside_dim(full), 4);
  const std::vector<CMatrix> upper{mat({{1, 1}, {0, 2}}), mat({{3, 5}, {0, 1}})};
  EXPECT_EQ(burnside_dim(upper), 3);
}

TEST(Certificates, CentralizerMatchesExactOracle) {
  const std::vector<CMatrix> s1 = strata(1), s0 = strata(0);
  EXPECT_EQ(centralizer_nullity(s1), 1);
  EXPECT_EQ(centralizer_nullity(s0), 2);
  std::vector<oracle::QMatrix> e1, e0;
  for (const auto& m : s1) e1.push_back(exact(m));
  for (const auto& m : s0) e0.push_back(exact(m));
  EXPECT_EQ(oracle::commutant_nullity(e1), 1);
  EXPECT_EQ(oracle::commutant_nullity(e0), 2);
  const std::vector<CMatrix> scalar{CMatrix::Identity(3, 3) * 2.0};
  EXPECT_EQ(centralizer_nullity(scalar), 9);
}

TEST(Certificates, SingleJordanMatrixNullityMatchesZ) {
  for (int n = 1; n <= 5; ++n)
    for (const auto& j : all_jnfs(n)) {
      std::vector<Complex> ev;
      for (std::size_t l = 0; l < j.slot_count(); ++l) ev.emplace_back(1.0 + 2.0 * static_cast<double>(l), 0.5);
      const std::vector<CMatrix> m{jordan_matrix(j, ev)};
      ASSERT_EQ(centralizer_nullity(m), z_of(j)) << j.to_string();
    }
}

TEST(Certificates, ClassMembership) {
  std::mt19937_64 rng(5);
  const Jnf j{Partition{2, 1}, Partition{1}};
  const NumericClass cls = numeric_class(j, {2.0, -1.0});
  const CMatrix q = random_invertible(rng, 4);
  EXPECT_TRUE(class_membership(q * cls.jordan * q.inverse(), cls));

  const NumericClass diag = numeric_class(Jnf::diagonal({3, 1}), {2.0, -1.0});
  EXPECT_FALSE(class_membership(diag.jordan, cls));
  EXPECT_FALSE(class_membership(CMatrix::Identity(3, 3), numeric_class(Jnf::distinct(3), {1.0, 2.0, 3.0})));
  EXPECT_FALSE(class_membership(cls.jordan, numeric_class(j, {2.0, -1.5})));
  const auto basis = jordan_basis(q * cls.jordan * q.inverse(), cls);
  ASSERT_TRUE(basis.has_value());
  EXPECT_LT((*basis * cls.jordan * basis->inverse() - q * cls.jordan * q.inverse()).norm(), 1e-9);
}

TEST(Realize, StrataWarmStarts) {
  const auto classes = strata_classes();
  const std::vector<CMatrix> s1 = strata(1);
  const auto r = realize(std::span<const NumericClass>(classes), Mode::additive, {}, &s1);
  ASSERT_TRUE(r.has_value());
  EXPECT_TRUE(r->certified);
  EXPECT_LT(r->residual, 1e-12);
  EXPECT_EQ(r->centralizer_nullity, 1);
  EXPECT_LT(r->burnside_dim, 4);
  EXPECT_EQ(r->restart, 0);

  const std::vector<CMatrix> s0 = strata(0);
  const auto r0 = realize(std::span<const NumericClass>(classes), Mode::additive, {}, &s0);
  ASSERT_TRUE(r0.has_value());
  EXPECT_EQ(r0->centralizer_nullity, 2);
  EXPECT_EQ(r0->burnside_dim, 2);

  const std::vector<CMatrix> wrong{mat({{1, 0}, {0, 1}}), s1[1], s1[2]};
  EXPECT_THROW(realize(std::span<const NumericClass>(classes), Mode::additive, {}, &wrong), Error);
}

TEST(Realize, HypergeometricCertified) {
  for (int n = 2; n <= 3; ++n) {
    const JnfTuple t{Jnf::diagonal({n - 1, 1}), Jnf::distinct(n), Jnf::distinct(n)};
    const auto specs = sample_generic<A>(t, 17);
    Budget b;
    b.seed = 3;
    const auto r = realize(view(specs), b);
    ASSERT_TRUE(r.has_value()) << n;
    EXPECT_TRUE(r->certified);
    EXPECT_LT(r->residual, 1e-8);
    EXPECT_EQ(r->burnside_dim, n * n);
    EXPECT_EQ(r->centralizer_nullity, 1);
    EXPECT_TRUE(r->certificates_consistent());

    Complex trace = 0;
    for (const auto& m : r->matrices) trace += m.trace();
    EXPECT_LT(std::abs(trace), 1e-10);
  }
}

TEST(Realize, MultiplicativeDeterminants) {
  const JnfTuple t{Jnf::distinct(2), Jnf::distinct(2), Jnf::distinct(2)};
  const auto specs = sample_generic<MultiplicativeScalar>(t, 4);
  Budget b;
  b.seed = 8;
  const auto r = realize(view(specs), b);
  ASSERT_TRUE(r.has_value());
  Complex det = 1;
  for (const auto& m : r->matrices) det *= m.determinant();
  EXPECT_LT(std::abs(det - 1.0), 1e-8);
  CMatrix prod = CMatrix::Identity(2, 2);
  for (const auto& m : r->matrices) prod = prod * m;
  EXPECT_LT((prod - CMatrix::Identity(2, 2)).norm(), 1e-8);
  EXPECT_EQ(r->burnside_dim, 4);
}

TEST(Realize, PairFindsNothing) {
  const JnfTuple t{Jnf::distinct(2), Jnf::distinct(2)};
  const auto specs = sample_generic<A>(t, 2);
  Budget b;
  b.restarts = 5;
  b.iterations = 60;
  EXPECT_FALSE(realize(view(specs), b).has_value());
}

TEST(Realize, DeterministicAcrossJobs) {
  const JnfTuple t{Jnf::diagonal({2, 1}), Jnf::distinct(3), Jnf::distinct(3)};
  const auto specs = sample_generic<A>(t, 9);
  Budget b;
  b.seed = 12;
  const auto r1 = realize(view(specs), b);
  const auto r2 = realize(view(specs), b);
  b.jobs = 3;
  const auto r3 = realize(view(specs), b);
  ASSERT_TRUE(r1 && r2 && r3);
  EXPECT_EQ(r1->restart, r2->restart);
  EXPECT_EQ(r1->restart, r3->restart);
  for (std::size_t j = 0; j < r1->matrices.size(); ++j) {
    EXPECT_EQ(r1->matrices[j], r2->matrices[j]);
    EXPECT_EQ(r1->matrices[j], r3->matrices[j]);
  }
}

TEST(Realize, Limits) {
  const JnfTuple big{Jnf::distinct(9), Jnf::distinct(9), Jnf::distinct(9)};
  std::vector<NumericClass> classes;
  for (const auto& e : big.entries()) {
    std::vector<Complex> ev;
    for (int i = 0; i < 9; ++i) ev.emplace_back(i, 0);
    classes.push_back(numeric_class(e, ev));
  }
  try {
    realize(std::span<const NumericClass>(classes), Mode::additive);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::resource_exceeded);
  }
  const auto two = strata_classes();
  Budget b;
  b.tol.condition_cap = 1.0;
  try {
    realize(std::span<const NumericClass>(two), Mode::additive, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ill_conditioned);
  }
}

TEST(Realize, GenericSolvableInstancesAreIrreducible) {
  std::mt19937_64 rng(31);
  int certified = 0, tried = 0;
  while (tried < 6) {
    const int n = std::uniform_int_distribution<int>(2, 3)(rng);
    const JnfTuple t = oracle::random_tuple(rng, n, 3, 3);
    if (decide_generic(t).verdict != Verdict::solvable) continue;
    std::vector<AdditiveSpec> specs;
    try {
      specs = sample_generic<A>(t, rng());
    } catch (const Error&) {
      continue;
    }
    ++tried;
    const auto r = realize(view(specs));
    if (!r) continue;
    ++certified;
    ASSERT_EQ(r->burnside_dim, n * n) << t.to_string();
    ASSERT_EQ(r->centralizer_nullity, 1);
  }
  EXPECT_GE(certified, 5);
}
