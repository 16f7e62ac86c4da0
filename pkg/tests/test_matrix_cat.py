import itertools

import numpy as np
import pytest

from bivect.biperm import LvMor, Perm, VMor, lambda_, lv_tensor, s_functor, sgn_functor
from bivect.generate import NONMOI_TRIPLE, random_dims, random_exact_gl, random_exact_scalar, random_weakly_invertible
from bivect.matrix_cat import (
    DimMatrix,
    MorMatrix,
    assoc_sign,
    associator,
    associator_inverse,
    associator_sign_closed_form,
    big_det,
    check_sgn_stability,
    dims_block_sum,
    entrywise_lambda,
    entrywise_s,
    int_det,
    lv_det,
    mor_block_sum,
    mor_compose,
    mor_product,
    obj_product,
    pentagon_composites,
    weak_inv_cert,
)
from bivect.scalars import ONE, DomainError, cpow

A, B, C = NONMOI_TRIPLE
SWAP = DimMatrix([[0, 1], [1, 0]])


def cofactor_oracle(f: MorMatrix) -> LvMor:
    """lv_det via the dual-number picture: LV values (n, a) multiply like
    n + eps*log(a), so det = (det N, prod a_ij ** cofactor_ij(N))."""
    n = f.n
    N = [list(r) for r in f.dims.rows]
    scale = ONE
    for i in range(n):
        for j in range(n):
            minor = [[N[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            cof = (-1) ** (i + j) * int_det(minor)
            scale = scale * cpow(f.entries[i][j].scale, cof)
    return LvMor(int_det(N), scale)


def random_perm(rng, d):
    return Perm.from_zero_based(rng.permutation(d).tolist())


def random_sigma_matrix(rng, dims):
    return MorMatrix(dims, [[random_perm(rng, d) for d in row] for row in dims.rows])


def random_lv_matrix(rng, dims):
    return MorMatrix(dims, [[LvMor(d, random_exact_scalar(rng)) for d in row] for row in dims.rows])


class TestObjects:
    def test_products(self):
        assert obj_product(A, B) == DimMatrix([[1, 2], [1, 1]])
        assert obj_product(obj_product(A, B), C) == DimMatrix([[3, 2], [2, 1]])
        assert A @ DimMatrix.identity(2) == A

    def test_det_multiplicative(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 4))
            X, Y = random_dims(rng, n), random_dims(rng, n)
            assert (X @ Y).det() == X.det() * Y.det()
            assert X.det() == round(np.linalg.det(np.array(X.rows, float)))

    def test_weak_inv_cert(self):
        cert = weak_inv_cert(A @ B @ C)
        assert cert.detdim == -1 and cert.weakly_invertible
        assert not weak_inv_cert(DimMatrix([[2, 0], [0, 1]])).weakly_invertible

    def test_size_mismatch(self):
        with pytest.raises(DomainError):
            obj_product(A, DimMatrix.identity(3))


class TestAssociator:
    def test_golden_entries(self):
        ua = associator(A, B, C, "LV")
        assert ua.dims == DimMatrix([[3, 2], [2, 1]])
        signs = [[ua.entries[i][k].scale for k in range(2)] for i in range(2)]
        assert signs == [[-1, 1], [1, 1]]
        v = associator(A, B, C, "V")
        assert not v.entries[0][0].matrix.tolist() == VMor.identity(3).matrix.tolist()
        assert all(v.entries[i][k] == VMor.identity(v.dims.rows[i][k]) for i, k in [(0, 1), (1, 0), (1, 1)])

    def test_unit_slots(self, rng):
        I = DimMatrix.identity(2)
        for _ in range(20):
            X, Y = random_dims(rng, 2), random_dims(rng, 2)
            assert associator(I, X, Y, "Sigma").is_identity()
            assert associator(X, Y, I, "Sigma").is_identity()

    def test_lv_is_lambda_of_v(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 4))
            X, Y, Z = (random_dims(rng, n, 3) for _ in range(3))
            lv = associator(X, Y, Z, "LV")
            assert entrywise_lambda(associator(X, Y, Z, "V")) == lv
            for i in range(n):
                for k in range(n):
                    assert lv.entries[i][k].scale == associator_sign_closed_form(X, Y, Z, i, k)

    def test_naturality_against_mor_product(self, rng):
        # ua o ((f.g).h) = (f.(g.h)) o ua pins the basis conventions of the product
        for _ in range(8):
            n = int(rng.integers(1, 3))
            dims = [random_dims(rng, n, 2) for _ in range(3)]
            f, g, h = (MorMatrix(d, [[random_exact_gl(rng, s, 1) for s in row] for row in d.rows]) for d in dims)
            ua = associator(*dims, "V")
            lhs = mor_compose(ua, mor_product(mor_product(f, g), h))
            rhs = mor_compose(mor_product(f, mor_product(g, h)), ua)
            assert lhs == rhs

    def test_inverse(self, rng):
        X, Y, Z = (random_dims(rng, 2) for _ in range(3))
        assert mor_compose(associator(X, Y, Z), associator_inverse(X, Y, Z)).is_identity()

    @pytest.mark.slow
    def test_pentagon_exhaustive_binary(self):
        mats = [DimMatrix([[a, b], [c, d]]) for a, b, c, d in itertools.product((0, 1), repeat=4)]
        for W, X, Y, Z in itertools.product(mats, repeat=4):
            top, bottom = pentagon_composites(W, X, Y, Z)
            assert top == bottom, (W, X, Y, Z)

    def test_pentagon_small_entries(self):
        mats = [DimMatrix([[a]]) for a in range(3)]
        for quad in itertools.product(mats, repeat=4):
            top, bottom = pentagon_composites(*quad)
            assert top == bottom

    def test_pentagon_random(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 4))
            quad = [random_dims(rng, n, 2) for _ in range(4)]
            top, bottom = pentagon_composites(*quad)
            assert top == bottom

    def test_pentagon_in_v_matches_sigma(self, rng):
        for _ in range(5):
            quad = [random_dims(rng, 2, 2) for _ in range(4)]
            top, bottom = pentagon_composites(*quad, cat="V")
            assert top == bottom
            assert entrywise_s(pentagon_composites(*quad)[0]) == top


class TestDeterminants:
    def test_golden(self):
        ua = associator(A, B, C, "LV")
        assert lv_det(ua) == LvMor(-1, -1)
        assert big_det(associator(A, B, C, "V")) == LvMor(-1, -1)
        assert assoc_sign(A, B, C) == -1

    def test_identities(self, rng):
        for _ in range(20):
            D = random_dims(rng, int(rng.integers(1, 4)))
            assert lv_det(MorMatrix.identity(D, "LV")) == LvMor(D.det(), 1)
            assert big_det(MorMatrix.identity(D, "V")) == LvMor(D.det(), 1)

    def test_one_by_one(self, rng):
        f = random_exact_gl(rng, 3)
        assert big_det(MorMatrix(DimMatrix([[3]]), [[f]])) == lambda_(f)

    def test_cofactor_oracle(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 4))
            F = random_lv_matrix(rng, random_dims(rng, n))
            assert lv_det(F) == cofactor_oracle(F)

    def test_negative_degrees(self, rng):
        dims = DimMatrix([[-1, 2], [3, -2]])
        F = random_lv_matrix(rng, dims)
        assert lv_det(F) == cofactor_oracle(F)

    def test_composition_functorial(self, rng):
        for _ in range(50):
            D = random_dims(rng, int(rng.integers(1, 4)))
            F, G = random_lv_matrix(rng, D), random_lv_matrix(rng, D)
            d = lv_det(mor_compose(F, G))
            assert d.degree == D.det()
            assert d.scale == lv_det(F).scale * lv_det(G).scale

    def test_product_to_tensor(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 4))
            E, F = random_lv_matrix(rng, random_dims(rng, n)), random_lv_matrix(rng, random_dims(rng, n))
            assert lv_det(mor_product(E, F)) == lv_tensor(lv_det(E), lv_det(F))

    def test_v_realisation(self, rng):
        for _ in range(30):
            dims = random_dims(rng, int(rng.integers(1, 4)))
            S = random_sigma_matrix(rng, dims)
            lv = S.map_entries(sgn_functor)
            assert big_det(entrywise_s(S)) == lv_det(lv) == big_det(S)

    def test_rank_limit(self):
        D = DimMatrix.identity(9)
        with pytest.raises(DomainError):
            lv_det(MorMatrix.identity(D, "LV"))

    def test_assoc_sign_requires_weak_invertibility(self):
        with pytest.raises(DomainError):
            assoc_sign(DimMatrix([[2]]), DimMatrix([[1]]), DimMatrix([[1]]))

    def test_trivial_triple(self):
        I = DimMatrix.identity(2)
        assert assoc_sign(I, I, I) == 1


class TestStability:
    def test_block_sum_variants(self):
        one = DimMatrix([[1]])
        assert assoc_sign(dims_block_sum(A, one), dims_block_sum(B, one), dims_block_sum(C, one)) == -1
        I2 = DimMatrix.identity(2)
        assert assoc_sign(dims_block_sum(A, I2), dims_block_sum(B, SWAP), dims_block_sum(C, I2)) == -1

    def test_tensor_with_identity(self):
        I2 = DimMatrix.identity(2)
        ok, bad = check_sgn_stability([(A, B, C, I2), (A, B, C, SWAP)])
        assert ok, bad

    def test_random(self, rng):
        inst = []
        for _ in range(50):
            n = int(rng.integers(1, 4))
            inst.append(tuple(random_weakly_invertible(rng, n, 2) for _ in range(4)))
        ok, bad = check_sgn_stability(inst)
        assert ok, bad

    def test_block_sum_of_morphisms(self, rng):
        X, Y = random_dims(rng, 2), random_dims(rng, 1)
        f, g = random_lv_matrix(rng, X), random_lv_matrix(rng, Y)
        s = mor_block_sum(f, g)
        assert s.dims == dims_block_sum(X, Y)
        assert lv_det(s) == LvMor(X.det() * Y.det(), lv_det(f).scale ** Y.det() * lv_det(g).scale ** X.det())


@pytest.mark.slow
def test_pentagon_exhaustive_entries_up_to_two():
    # Row i of a product only sees row i of its left factor and column m only
    # column m of its right factor, so entry (i, m) of both composites for
    # (W, X, Y, Z) is entry (0, 0) for W with row i moved up and Z with column
    # m moved left.  Zeroing the other row/column keeps the remaining entries
    # empty; this covers all 81^4 quadruples with 9 * 81 * 81 * 9 checks.
    full = [DimMatrix([[a, b], [c, d]]) for a, b, c, d in itertools.product(range(3), repeat=4)]
    rows = [DimMatrix([[a, b], [0, 0]]) for a, b in itertools.product(range(3), repeat=2)]
    cols = [DimMatrix([[a, 0], [b, 0]]) for a, b in itertools.product(range(3), repeat=2)]
    for W, X, Y, Z in itertools.product(rows, full, full, cols):
        top, bottom = pentagon_composites(W, X, Y, Z)
        assert top.entries[0][0] == bottom.entries[0][0], (W, X, Y, Z)


def test_lifted_pentagon_signs_exhaustive():
    mats = [m for m in (DimMatrix([[a, b], [c, d]]) for a, b, c, d in itertools.product(range(3), repeat=4)) if m.weakly_invertible()]
    assert len(mats) == 14
    cache = {}

    def s(x, y, z):
        key = (x.rows, y.rows, z.rows)
        if key not in cache:
            cache[key] = assoc_sign(x, y, z)
        return cache[key]

    for W, X, Y, Z in itertools.product(mats, repeat=4):
        # sign of top composite times sign of bottom composite
        assert s(X, Y, Z) * s(W, X @ Y, Z) * s(W, X, Y) * s(W, X, Y @ Z) * s(W @ X, Y, Z) == 1
