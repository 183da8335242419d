#include <catch2/catch_amalgamated.hpp>

#include "qwold/wold.hpp"

using namespace qwold;

namespace {

const Phase q8 = Phase::rotation(1, 8);

LazyOperator shift1(const SpaceSignature& sig) { return LazyOperator::word(sig, {Atom::shift(0)}); }
LazyOperator rot(const SpaceSignature& sig, const Phase& q) {
  return LazyOperator::word(sig, {Atom::rot(q)});
}

}  // namespace

TEST_CASE("defect of the unilateral shift is the constants") {
  SpaceSignature sig(1, 1, 0);
  TruncatedMatrix v = densify(shift1(sig), 16);
  DefectData d = defect(v);
  REQUIRE(d.rank() == 1);
  CHECK((d.basis.col(0) - Eigen::VectorXcd::Unit(16, 0)).norm() == 0.0);
  CHECK((d.projection.mat * d.projection.mat - d.projection.mat).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((d.projection.mat - d.projection.mat.adjoint().eval()).cwiseAbs().maxCoeff() < 1e-12);
  // V V* + D = I on the window
  CHECK((v.mat * v.mat.adjoint() + d.projection.mat - Eigen::MatrixXcd::Identity(16, 16))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("defect of a unitary is zero") {
  SpaceSignature sig(1, 1, 0);
  DefectData d = defect(densify(rot(sig, q8), 16));
  CHECK(d.rank() == 0);
  CHECK(d.projection.mat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("defect of the bidisk product shift") {
  SpaceSignature sig(2, 1, 0);
  LazyOperator v1 = LazyOperator::word(sig, {Atom::rot(q8), Atom::shift(0)});
  LazyOperator v2 = LazyOperator::word(sig, {Atom::shift(1)});
  TruncatedMatrix v = densify(v1.compose(v2), WindowBasis::make(sig, 16));

  DefectData d = defect(v);
  // the projection carries band 4 (V has band 2), so its safe window is
  // degree < 12: one min(n1,n2) = 0 monomial at degree 0, two for each degree
  // 1..11
  CHECK(d.rank() == 23);
  for (int k = 0; k < d.rank(); ++k) {
    int top = 0;
    d.basis.col(k).cwiseAbs().maxCoeff(&top);
    const GradedIndex& mono = v.basis->key(top).mono;
    CHECK(std::min(mono.exps[0], mono.exps[1]) == 0);
    CHECK(std::abs(d.basis.col(k).cwiseAbs().maxCoeff() - 1.0) < 1e-14);
  }

  CHECK_THROWS_AS(defect(densify(v1.add(v2), WindowBasis::make(sig, 8))), Error);  // not an isometry
}

TEST_CASE("ku projection") {
  SpaceSignature sig(1, 1, 0);

  auto pure = ku_projection(densify(shift1(sig), 16), 16);
  CHECK(pure.converged);
  CHECK(pure.basis.cols() == 0);
  CHECK(pure.projection.cwiseAbs().maxCoeff() == 0.0);

  // block shift (+) W with W a 3x3 unitary: projection onto the W block
  SpaceSignature sigk(1, 1, 3);
  StructuredMap w = StructuredMap::clock(3, Phase::rotation(1, 3)).compose(StructuredMap::cyclic_shift(3));
  LazyOperator v = shift1(sigk).add(LazyOperator::word(sigk, {Atom::ku(make_fiber(w))}));
  TruncatedMatrix vm = densify(v, 16);
  auto blk = ku_projection(vm, 16);
  CHECK(blk.converged);
  CHECK(blk.residual < 1e-12);
  REQUIRE(blk.basis.cols() == 3);
  Eigen::MatrixXcd expect = Eigen::MatrixXcd::Zero(vm.size(), vm.size());
  for (int k = 0; k < 3; ++k) {
    int idx = *vm.basis->index(BasisKey::ku_slot(k));
    expect(idx, idx) = 1.0;
  }
  CHECK((blk.projection - expect).cwiseAbs().maxCoeff() < 1e-12);

  // a unitary input: the projection is the identity on the safe window
  auto uni = ku_projection(densify(rot(sig, q8), 12), 12);
  CHECK(uni.converged);
  CHECK((uni.projection - Eigen::MatrixXcd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lambda split on the section-4 pairs") {
  SpaceSignature sig(1, 1, 0);
  WindowBasisPtr basis = WindowBasis::make(sig, 16);

  SECTION("(R_q, M_z): D1 = 0, Lambda maps the constants onto 0 (+) D2") {
    TruncatedMatrix v1 = densify(rot(sig, q8), basis);
    TruncatedMatrix v2 = densify(shift1(sig), basis);
    LambdaSplit ls = lambda_split(v1, v2, q8);
    CHECK(ls.d1.rank() == 0);
    CHECK(ls.d2.rank() == 1);
    CHECK(ls.dv.rank() == 1);
    CHECK(ls.isometry_residual < 1e-10);
    CHECK(ls.assembly_residual < 1e-10);
    CHECK(ls.key1_residual < 1e-10);
    CHECK(ls.key2_residual < 1e-10);
    CHECK(ls.aux6_residual < 1e-10);
    CHECK(ls.span_residual_left < 1e-10);
    CHECK(ls.span_residual_right < 1e-10);
  }

  SECTION("(R_q M_z, M_z): both defects one-dimensional, Lambda a 2x2 unitary") {
    TruncatedMatrix v1 = densify(LazyOperator::word(sig, {Atom::rot(q8), Atom::shift(0)}), basis);
    TruncatedMatrix v2 = densify(shift1(sig), basis);
    LambdaSplit ls = lambda_split(v1, v2, q8);
    CHECK(ls.d1.rank() == 1);
    CHECK(ls.d2.rank() == 1);
    CHECK(ls.dv.rank() == 2);
    CHECK(ls.lambda.rows() == 2);
    CHECK(ls.lambda.cols() == 2);
    CHECK((ls.lambda * ls.lambda.adjoint() - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(ls.assembly_residual < 1e-10);
    CHECK(ls.aux6_residual < 1e-10);
    CHECK(ls.span_residual_left < 1e-10);
    CHECK(ls.span_residual_right < 1e-10);
  }

  SECTION("identity pair: the trivial map on zero spaces") {
    TruncatedMatrix one = densify(LazyOperator::hardy_identity(sig), basis);
    LambdaSplit ls = lambda_split(one, one, Phase::one());
    CHECK(ls.dv.rank() == 0);
    CHECK(ls.lambda.cols() == 0);
    CHECK(ls.aux6_residual < 1e-12);
  }

  SECTION("a non-q-commutative pair is rejected") {
    TruncatedMatrix s = densify(shift1(sig), basis);
    CHECK_THROWS_AS(lambda_split(s, s, q8), Error);
  }
}

TEST_CASE("wold decomposition") {
  SpaceSignature sig(1, 1, 0);

  SECTION("shift: the wave map is the identity permutation, K_u = 0") {
    TruncatedMatrix v = densify(shift1(sig), 16);
    WoldParts w = wold_decompose(v);
    CHECK(w.converged);
    CHECK(w.ku_basis.cols() == 0);
    REQUIRE(w.shift_multiplicity_basis.cols() == 1);
    for (int n = 0; n < 15; ++n) {
      auto row = w.model_basis->index(BasisKey::hardy(GradedIndex({n}), 0));
      CHECK(std::abs(w.wave_map(*row, n) - 1.0) < 1e-14);
    }
    CHECK(w.isometry_residual < 1e-10);
    CHECK(w.intertwining_residual < 1e-10);
  }

  SECTION("block shift (+) W recovers W on the K_u block") {
    SpaceSignature sigk(1, 1, 3);
    StructuredMap wmat =
        StructuredMap::clock(3, Phase::rotation(2, 3)).compose(StructuredMap::cyclic_shift(3));
    LazyOperator v = shift1(sigk).add(LazyOperator::word(sigk, {Atom::ku(make_fiber(wmat))}));
    WoldParts w = wold_decompose(densify(v, 16));
    CHECK(w.converged);
    REQUIRE(w.ku_basis.cols() == 3);
    CHECK((w.unitary_part * w.unitary_part.adjoint() - Eigen::MatrixXcd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((w.unitary_part - wmat.dense()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(w.isometry_residual < 1e-10);
    CHECK(w.intertwining_residual < 1e-10);
  }

  SECTION("V = R_q M_z^2: backward powers reproduce the example coefficients") {
    LazyOperator v1 = LazyOperator::word(sig, {Atom::rot(q8), Atom::shift(0)});
    LazyOperator v2 = shift1(sig);
    LazyOperator v = v1.compose(v2);
    // V*^n applied to z^{2n} has constant term conj(q)^{2 y_n}, exactly
    for (int n = 1; n <= 6; ++n) {
      auto [x, y] = xy_sequences(n);
      LazyOperator vsn = v.adjoint().pow(n);
      Vec img = vsn.apply(BasisKey::hardy(GradedIndex({2 * n}), 0));
      REQUIRE(img.count(BasisKey::hardy(GradedIndex({0}), 0)) == 1);
      CHECK(img.at(BasisKey::hardy(GradedIndex({0}), 0)).equals_exact(Coef(q8.pow(-2 * y))));
    }
    WoldParts w = wold_decompose(densify(v, 16));
    CHECK(w.converged);
    CHECK(w.shift_multiplicity_basis.cols() == 2);
    CHECK(w.intertwining_residual < 1e-10);
    CHECK(w.isometry_residual < 1e-10);
  }
}
