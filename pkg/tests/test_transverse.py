import pytest

from hypmix import rng
from hypmix.freegroup import invert, multiply, power
from hypmix.stallings import SubgroupAutomaton
from hypmix.transverse import (
    TransversalityError,
    apt_check,
    certificate,
    compute_u0,
    construct_transverse,
    gromov_stabilization,
    is_transverse,
    minimal_power_in,
    overlap_bound,
    overlap_count,
    power_conjugate_into,
)

from conftest import F2

A, B = (1,), (2,)


def sub(*texts):
    return SubgroupAutomaton.from_generators(2, [F2.parse(t) for t in texts])


def brute_power_conjugate(h, f, m_cap, v_ball):
    """Exhaustive search for f^m in v H v^-1 over m <= m_cap, v in the ball."""
    for m in range(1, m_cap + 1):
        fm = power(f, m)
        for v in v_ball:
            if h.contains(multiply(multiply(invert(v), fm), v)):
                return m, v
    return None


class TestPowerConjugateInto:
    def test_generator_itself(self):
        assert power_conjugate_into(sub("a"), A) == (1, ())

    def test_none_for_b(self):
        assert power_conjugate_into(sub("a"), B) is None

    def test_squares(self):
        m, v = power_conjugate_into(sub("aa", "bb"), A)
        assert m == 2
        assert sub("aa", "bb").contains(multiply(multiply(invert(v), power(A, m)), v))

    def test_explicit_conjugate(self):
        got = power_conjugate_into(sub("a"), F2.parse("baB"))
        assert got == (1, B)

    def test_identity_rejected(self):
        with pytest.raises(TransversalityError):
            power_conjugate_into(sub("a"), ())

    def test_soundness_random(self):
        gen = rng.substream(51)
        for _ in range(150):
            h = SubgroupAutomaton.from_generators(
                2, [F2.random_word(gen, int(gen.integers(1, 5))) for _ in range(2)]
            )
            f = F2.random_word(gen, int(gen.integers(1, 5)))
            got = power_conjugate_into(h, f)
            if got is not None:
                m, v = got
                assert h.contains(multiply(multiply(invert(v), power(f, m)), v))

    def test_completeness_sample_vs_brute(self):
        # The acceptance suite runs the full <=4-state enumeration; here a
        # random sample with the same brute-force contract.
        gen = rng.substream(53)
        ball4 = F2.ball(4)
        for _ in range(25):
            h = SubgroupAutomaton.from_generators(
                2, [F2.random_word(gen, int(gen.integers(1, 5))) for _ in range(2)]
            )
            f = F2.random_word(gen, int(gen.integers(1, 5)))
            ours = power_conjugate_into(h, f)
            brute = brute_power_conjugate(h, f, 8, ball4)
            if ours is None:
                assert brute is None
            else:
                assert brute is not None
                assert brute[0] == ours[0]  # minimal power agrees


class TestIsTransverse:
    def test_ab_vs_a(self):
        assert is_transverse(sub("a"), F2.parse("ab"))

    def test_conjugate_not_transverse(self):
        assert not is_transverse(sub("a"), F2.parse("baB"))

    def test_self_not_transverse(self):
        assert not is_transverse(sub("ab"), F2.parse("ab"))

    def test_certificate_shape(self):
        cert = certificate(sub("a"), F2.parse("ab"))
        assert cert.transverse and cert.power is None
        cert = certificate(sub("a"), F2.parse("baB"))
        assert not cert.transverse and cert.power == 1 and cert.conjugator == B


class TestOverlap:
    def test_b_powers_near_a(self):
        assert overlap_count(sub("a"), B, (), 2, range(-10, 11)) == 5

    def test_saturation(self):
        assert overlap_count(sub("a"), A, (), 0, range(-10, 11)) == 21

    def test_transverse_only_origin(self):
        assert overlap_count(sub("a"), F2.parse("ab"), (), 0, range(-10, 11)) == 1

    def test_bound_report(self):
        rep = overlap_bound(sub("a"), F2.parse("ab"), 1, 2, range(-20, 21))
        assert rep.max_count >= 1
        assert rep.per_conjugator[()] == overlap_count(
            sub("a"), F2.parse("ab"), (), 1, range(-20, 21)
        )

    def test_transverse_counts_stable_under_widening(self):
        h = sub("a")
        f = F2.parse("ab")
        narrow = overlap_bound(h, f, 3, 2, range(-50, 51))
        wide = overlap_bound(h, f, 3, 2, range(-100, 101))
        assert narrow.per_conjugator == wide.per_conjugator

    def test_non_transverse_counts_grow_linearly(self):
        h = sub("a")
        f = F2.parse("baB")  # f^m in b H b^-1 for every m
        # Every power stays within |v| = 1 of the coset orbit b*<a>.
        narrow = overlap_count(h, f, B, 1, range(-25, 26))
        wide = overlap_count(h, f, B, 1, range(-50, 51))
        assert narrow == 51 and wide == 101


class TestForbiddenSet:
    def test_cyclic_self(self):
        fs = compute_u0(sub("a"), A)
        assert fs.representatives == ((),)
        assert fs.root_core == A

    def test_disjoint(self):
        fs = compute_u0(sub("a"), B)
        assert fs.representatives == ()

    def test_squares(self):
        fs = compute_u0(sub("aa", "bb"), A)
        assert set(fs.representatives) == {(), A}

    def test_covering_property_exhaustive(self):
        # u^-1 H u meets <g> nontrivially => u in H * U0, checked over a ball.
        gen = rng.substream(59)
        ball = F2.ball(4)
        for _ in range(20):
            h = SubgroupAutomaton.from_generators(
                2, [F2.random_word(gen, int(gen.integers(1, 5))) for _ in range(2)]
            )
            g = F2.random_word(gen, int(gen.integers(1, 4)))
            fs = compute_u0(h, g)
            for u in ball:
                meets = minimal_power_in(h.conjugate(invert(u)), g) is not None
                if meets:
                    assert any(
                        h.contains(multiply(u, invert(r))) for r in fs.representatives
                    ), (u, fs.representatives)

    def test_identity_rejected(self):
        with pytest.raises(TransversalityError):
            compute_u0(sub("a"), ())


class TestAptCheck:
    def test_empty_filter(self):
        report = apt_check(sub("a"), B, 0)
        assert report.verified
        assert report.cosets == ()
        assert report.n_exponent == 1

    def test_self_power(self):
        report = apt_check(sub("a"), A, 0)
        assert report.verified
        assert report.cosets == ((),)

    def test_ab_stable(self):
        report = apt_check(sub("a"), F2.parse("ab"), 1)
        assert report.verified

    def test_inverse_symmetry(self):
        for h, g_text, c in [
            (sub("a"), "ab", 1),
            (sub("ab"), "ba", 1),
            (sub("a"), "b", 2),
        ]:
            fwd = apt_check(h, F2.parse(g_text), c)
            bwd = apt_check(h, invert(F2.parse(g_text)), c)
            assert fwd.verified and bwd.verified
            assert len(fwd.cosets) == len(bwd.cosets)


class TestConstructTransverse:
    def test_single_target_g_a(self):
        got = construct_transverse([sub("a")], A)
        assert got.avoided == B
        assert got.element == multiply(power(A, got.exponent), B)
        assert all(c.transverse for c in got.certificates)

    def test_two_targets(self):
        got = construct_transverse([sub("a"), sub("b")], F2.parse("ab"))
        assert all(c.transverse for c in got.certificates)
        for t in [sub("a"), sub("b")]:
            assert is_transverse(t, got.element)

    def test_finite_index_target_rejected(self):
        with pytest.raises(TransversalityError):
            construct_transverse([sub("aa", "ab", "bb")], A)

    def test_identity_rejected(self):
        with pytest.raises(TransversalityError):
            construct_transverse([sub("a")], ())

    def test_random_targets(self):
        gen = rng.substream(61)
        built = 0
        while built < 10:
            h = SubgroupAutomaton.from_generators(
                2, [F2.random_word(gen, int(gen.integers(1, 5))) for _ in range(2)]
            )
            g = F2.random_word(gen, int(gen.integers(1, 4)))
            if h.index() != float("inf"):
                continue
            built += 1
            got = construct_transverse([h], g)
            assert is_transverse(h, got.element)


class TestGromovStabilization:
    def test_transverse_pair_bounded(self):
        h = sub("a")
        g = F2.parse("ab")
        assert is_transverse(h, g)
        half, full = gromov_stabilization(h, g, 50, 6)
        assert half == full

    def test_non_transverse_grows(self):
        # g in H: the product (g^k | g^k)_1 tracks k, so widening the power
        # window grows the max as long as the orbit ball can keep up.
        h = sub("a")
        half, full = gromov_stabilization(h, A, 8, 12)
        assert half == 4 and full == 8
