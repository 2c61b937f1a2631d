"""Unit tests for closedsets.dyadic_measure."""

import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from closedsets.dyadic_measure import (
    ClopenSet,
    DyadicMeasure,
    build_diluted,
    build_uniform,
    capacity_constant,
    clopen_inner_approx,
    diluted_support,
    dump_measure,
    energy,
    energy_double_sum,
    gamma_weight,
    load_measure,
    measure_of_clopen,
    measure_support,
    point_potential,
    resolve_measure,
)


class TestBuilders:
    """Test the uniform and diluted builders."""

    def test_uniform_masses(self) -> None:
        """Every length-j cylinder has mass 2^-j."""
        mu = build_uniform(4)
        assert mu.mass("0110") == Fraction(1, 16)
        assert mu.mass("") == 1
        assert mu.exact

    def test_diluted_masses(self) -> None:
        """Odd positions are forced to 0."""
        mu = build_diluted(4)
        assert mu.mass("10") == Fraction(1, 2)
        assert mu.mass("11") == 0
        assert mu.mass("1000") == Fraction(1, 4)

    def test_period_one_is_uniform(self) -> None:
        """No forced positions."""
        assert build_diluted(5, period=1).levels == build_uniform(5).levels

    def test_conservation(self, diluted8: DyadicMeasure) -> None:
        """Parent mass equals the sum of its children."""
        for j in range(8):
            parent, child = diluted8.level_array(j), diluted8.level_array(j + 1)
            assert np.allclose(parent, child[0::2] + child[1::2])

    def test_rejects_unconserved(self) -> None:
        """Levels that do not add up are rejected."""
        levels = ((Fraction(1),), (Fraction(1, 2), Fraction(1, 4)))
        with pytest.raises(ValueError):
            DyadicMeasure(1, levels)

    def test_mass_beyond_depth(self) -> None:
        """Cylinders deeper than N are an error."""
        with pytest.raises(ValueError, match="deeper"):
            build_uniform(2).mass("000")


class TestMeasureFiles:
    """Test the JSON measure file format."""

    def test_load(self, measure_file: Path) -> None:
        """Exact and decimal leaves load; internal masses are summed."""
        mu = load_measure(measure_file)
        assert mu.depth == 2
        assert mu.mass("0") == Fraction(1, 2)
        assert mu.mass("1") == 0.5
        assert not mu.exact

    def test_dump_and_load(self, tmp_path: Path, diluted8: DyadicMeasure) -> None:
        """A dumped measure loads back with the same leaves."""
        path = tmp_path / "diluted.json"
        dump_measure(diluted8, path)
        again = load_measure(path)
        assert again.levels == diluted8.levels

    def test_malformed(self, tmp_path: Path) -> None:
        """Missing keys raise ValueError."""
        path = tmp_path / "bad.json"
        path.write_text('{"masses": {}}')
        with pytest.raises(ValueError, match="malformed"):
            load_measure(path)

    @pytest.mark.parametrize(
        "text",
        [
            '{"depth": 1, "masses": {"0": "1/0", "1": "1/2"}}',
            '{"depth": 1, "masses": ["0", "1"]}',
            '{"depth": 1, "masses": {"0": null, "1": "1/2"}}',
            '{"depth": 1, "masses": {"0": "half", "1": "1/2"}}',
            '{"depth": -1, "masses": {}}',
            '[1, 2]',
        ],
    )
    def test_malformed_values(self, tmp_path: Path, text: str) -> None:
        """Bad masses, shapes and depths all surface as ValueError."""
        path = tmp_path / "bad.json"
        path.write_text(text)
        with pytest.raises(ValueError, match="malformed"):
            load_measure(path)

    def test_resolve_names(self) -> None:
        """Built-in names resolve without files."""
        assert resolve_measure("uniform", 3).label == "uniform"
        assert resolve_measure("diluted", 3).label == "diluted"
        with pytest.raises(ValueError, match="unknown measure"):
            resolve_measure("no-such-measure", 3)


class TestCapacity:
    """Test the capacity constant c_R."""

    def test_uniform(self) -> None:
        """Uniform masses are exactly 2^-j, so c_R = 1 at beta = 1."""
        assert capacity_constant(build_uniform(8), 1) == pytest.approx(1.0)

    def test_diluted(self) -> None:
        """The diluted measure is capacitable at beta = 1/2 with c_R = 1."""
        assert capacity_constant(build_diluted(12), Fraction(1, 2)) == pytest.approx(1.0)

    def test_diluted_at_beta_one(self) -> None:
        """At beta = 1 the constant grows like 2^{N/2}."""
        assert capacity_constant(build_diluted(8), 1) == pytest.approx(16.0)


class TestEnergy:
    """Test gamma-energies under the uniform-extension convention."""

    @pytest.mark.parametrize("depth", [0, 1, 5, 12])
    def test_uniform_closed_form(self, depth: int) -> None:
        """energy(uniform, 1/2) = 1 / (2 - sqrt 2) at every depth."""
        total = energy(build_uniform(depth), Fraction(1, 2)).total
        assert abs(total - 1 / (2 - math.sqrt(2))) < 1e-9

    @pytest.mark.parametrize("gamma", [Fraction(1, 4), Fraction(3, 4)])
    def test_uniform_other_gammas(self, gamma: Fraction) -> None:
        """energy(uniform, g) = 1 / (2 - 2^g)."""
        total = energy(build_uniform(6), gamma).total
        assert total == pytest.approx(1 / (2 - 2 ** float(gamma)), abs=1e-9)

    def test_double_sum_oracle(self) -> None:
        """The split-depth recursion equals the brute-force pair sum."""
        for mu in (build_uniform(10), build_diluted(10)):
            assert energy(mu, Fraction(1, 4)).total == pytest.approx(
                energy_double_sum(mu, Fraction(1, 4)), abs=1e-9
            )

    def test_diluted_quarter(self) -> None:
        """energy(diluted, 1/4) stays below 1 / (2^{1/2} - 2^{1/4})."""
        report = energy(build_diluted(8), Fraction(1, 4))
        assert report.finite
        assert report.total <= 4.4445

    def test_certificate_bound(self) -> None:
        """energy <= c_R / (2^beta - 2^gamma)."""
        mu = build_diluted(12)
        beta = Fraction(1, 2)
        report = energy(mu, Fraction(1, 4), certificate=(capacity_constant(mu, beta), beta))
        assert report.bound is not None
        assert report.total <= report.bound + 1e-9

    def test_certificate_needs_beta_above_gamma(self) -> None:
        """beta <= gamma certifies nothing."""
        with pytest.raises(ValueError, match="beta"):
            energy(build_uniform(4), Fraction(1, 2), certificate=(1.0, Fraction(1, 2)))

    def test_gamma_one_is_infinite(self) -> None:
        """The within-leaf term diverges at gamma = 1."""
        assert not energy(build_uniform(4), 1).finite

    def test_point_potential_bounded(self) -> None:
        """The potential of the uniform measure is below c_R / (2^beta - 2^gamma)."""
        mu = build_uniform(10)
        bound = 1 / (2 - 2**0.5)
        assert point_potential(mu, Fraction(1, 2), "0110100111") <= bound


class TestClopenSet:
    """Test clopen sets as canonical antichains."""

    def test_siblings_merge(self) -> None:
        """[0] and [1] make the whole space."""
        assert ClopenSet.of(["0", "1"]) == ClopenSet.whole_space()

    def test_covered_strings_drop(self) -> None:
        """Extensions of a member are redundant."""
        assert ClopenSet.of(["01", "011", "0110"]).cylinders == ("01",)

    def test_hits_and_contains(self) -> None:
        """hits means the cylinders meet; contains means inclusion."""
        target = ClopenSet.of(["011"])
        assert target.hits("0") and not target.contains("0")
        assert target.hits("0110") and target.contains("0110")
        assert not target.hits("1")

    def test_empty(self) -> None:
        """The empty set hits nothing."""
        assert not ClopenSet.empty().hits("")

    def test_measure(self, uniform8: DyadicMeasure, diluted8: DyadicMeasure) -> None:
        """Masses of clopen sets."""
        assert measure_of_clopen(uniform8, ClopenSet.of(["0", "1"])) == 1
        assert measure_of_clopen(uniform8, ClopenSet.of(["11"])) == Fraction(1, 4)
        assert measure_of_clopen(diluted8, ClopenSet.of(["11"])) == 0

    def test_diluted_support(self, diluted8: DyadicMeasure) -> None:
        """The support carries all the mass and matches the positive leaves."""
        support = diluted_support(8)
        assert len(support) == 16
        assert measure_of_clopen(diluted8, support) == 1
        assert measure_support(diluted8) == support


class TestClopenInnerApprox:
    """Test the inner clopen approximation."""

    def test_geometric_tail(self, uniform8: DyadicMeasure) -> None:
        """[1], [01], [001], [0001] with epsilon 1/8 keeps the first three."""
        inner = clopen_inner_approx(["1", "01", "001", "0001"], uniform8, Fraction(1, 8))
        assert measure_of_clopen(uniform8, inner) == Fraction(7, 8)
        assert len(inner) == 3

    def test_overlaps_are_subtracted(self, uniform8: DyadicMeasure) -> None:
        """Later cylinders only contribute what is not yet covered."""
        inner = clopen_inner_approx(["0", "01", "1"], uniform8, Fraction(1, 64))
        assert inner == ClopenSet.whole_space()

    def test_small_epsilon_keeps_everything(self, uniform8: DyadicMeasure) -> None:
        """[0], [1] with a small epsilon is the whole space."""
        inner = clopen_inner_approx(["0", "1"], uniform8, Fraction(1, 8))
        assert measure_of_clopen(uniform8, inner) == 1

    def test_random_lists(self, uniform8: DyadicMeasure) -> None:
        """Always inside U and within epsilon of its mass."""
        rng = np.random.default_rng(4)
        for _ in range(50):
            words = [
                "".join(str(b) for b in rng.integers(0, 2, int(rng.integers(1, 9))))
                for _ in range(int(rng.integers(1, 8)))
            ]
            union = ClopenSet.of(words)
            for eps in (Fraction(1, 8), Fraction(1, 64)):
                inner = clopen_inner_approx(words, uniform8, eps)
                assert all(union.contains(a) for a in inner)
                assert measure_of_clopen(uniform8, union) - measure_of_clopen(uniform8, inner) <= eps

    def test_rejects_nonpositive_epsilon(self, uniform8: DyadicMeasure) -> None:
        """epsilon must be positive."""
        with pytest.raises(ValueError):
            clopen_inner_approx(["0"], uniform8, 0)


class TestGammaWeight:
    """Test wt_gamma."""

    def test_empty_string(self) -> None:
        """wt({empty}) = 1."""
        assert gamma_weight([""], Fraction(1, 2)) == 1

    def test_full_level(self) -> None:
        """All 2^n strings of length n weigh 2^{n(1 - gamma)}."""
        words = [format(v, "04b") for v in range(16)]
        assert gamma_weight(words, Fraction(1, 2)) == 4

    def test_chain(self) -> None:
        """gamma = 1: 1/2 + 1/4 + 1/8."""
        assert gamma_weight(["0", "00", "000"], 1) == Fraction(7, 8)

    @staticmethod
    def random_words(rng: np.random.Generator, count: int) -> set:
        return {
            "".join(str(b) for b in rng.integers(0, 2, int(rng.integers(0, 8))))
            for _ in range(count)
        }

    @pytest.mark.parametrize("gamma", [Fraction(1, 3), Fraction(1, 2), Fraction(1)])
    def test_monotone_under_inclusion(self, gamma: Fraction) -> None:
        """Adding strings never lowers the weight."""
        rng = np.random.default_rng(21)
        for _ in range(100):
            small = self.random_words(rng, int(rng.integers(0, 10)))
            large = small | self.random_words(rng, int(rng.integers(0, 10)))
            assert gamma_weight(small, gamma) <= gamma_weight(large, gamma) + 1e-12

    @pytest.mark.parametrize("gamma", [Fraction(1, 3), Fraction(1, 2), Fraction(1)])
    def test_additive_over_disjoint_sets(self, gamma: Fraction) -> None:
        """wt(A u B) = wt(A) + wt(B) when A and B share no string."""
        rng = np.random.default_rng(22)
        for _ in range(100):
            a = self.random_words(rng, int(rng.integers(0, 10)))
            b = self.random_words(rng, int(rng.integers(0, 10))) - a
            total = gamma_weight(a | b, gamma)
            assert float(total) == pytest.approx(float(gamma_weight(a, gamma) + gamma_weight(b, gamma)))
            if gamma.denominator == 1:
                assert total == gamma_weight(a, gamma) + gamma_weight(b, gamma)
