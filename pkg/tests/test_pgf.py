import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eas_queue import (
    FinitePmf,
    Geometric,
    InvalidPmf,
    NegBinomial,
    PoleAtArgument,
    QueueModel,
    RationalPgf,
    Unstable,
    build_model,
    deterministic,
    pgf_eval,
    pgf_mean,
)

G = FinitePmf.from_mapping({1: 0.4, 2: 0.3, 3: 0.3})
Y = FinitePmf.from_mapping({1: 0.4, 2: 0.6})


@st.composite
def pmfs(draw, max_point=15):
    k = draw(st.integers(1, min(6, max_point)))
    points = draw(st.lists(st.integers(1, max_point), min_size=k, max_size=k, unique=True))
    weights = draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k))
    total = math.fsum(weights)
    masses = [w / total for w in weights]
    masses[-1] = 1.0 - math.fsum(masses[:-1])
    return FinitePmf(tuple(points), tuple(masses))


class TestEvaluation:
    def test_batch_pgf_at_one(self):
        assert pgf_eval(G.pgf, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_geometric_pgf_at_one(self):
        assert pgf_eval(Geometric(0.4).pgf, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_batch_pgf_at_half(self):
        assert pgf_eval(G.pgf, 0.5) == pytest.approx(0.3125, abs=1e-15)

    def test_complex_argument(self):
        z = 0.3 + 0.4j
        assert pgf_eval(G.pgf, z) == pytest.approx(0.4 * z + 0.3 * z**2 + 0.3 * z**3, abs=1e-15)

    def test_pole_raises(self):
        f = RationalPgf((0.0, 0.5), (1.0, -0.5))  # pole at 2
        with pytest.raises(PoleAtArgument):
            pgf_eval(f, 2.0)

    def test_denominator_root_in_disk_rejected(self):
        with pytest.raises(InvalidPmf):
            RationalPgf((0.0, 1.5), (0.5, 1.0))  # pole at -1/2
        with pytest.raises(InvalidPmf):
            RationalPgf((-1.0, 0.0, 2.0), (0.0, 1.0))  # denominator vanishes at 0

    def test_value_at_one_must_be_one(self):
        with pytest.raises(InvalidPmf):
            RationalPgf((0.0, 0.9))


class TestMeans:
    def test_batch_mean(self):
        assert pgf_mean(G.pgf) == pytest.approx(1.9, abs=1e-14)

    def test_capacity_mean(self):
        assert pgf_mean(Y.pgf) == pytest.approx(1.6, abs=1e-14)

    def test_geometric_mean(self):
        assert pgf_mean(Geometric(0.4).pgf) == pytest.approx(2.5, abs=1e-13)

    def test_negative_binomial_mean(self):
        nb = NegBinomial(3, 0.25)
        assert pgf_mean(nb.pgf) == pytest.approx(nb.mean, rel=1e-12)


class TestFinitePmf:
    def test_zero_masses_trimmed(self):
        pmf = FinitePmf((1, 2, 5), (0.5, 0.5, 0.0))
        assert pmf.max_point == 2

    def test_sum_must_be_one(self):
        with pytest.raises(InvalidPmf, match="sum"):
            FinitePmf((1, 2), (0.5, 0.4))

    def test_sum_tolerance(self):
        FinitePmf((1, 2), (0.5, 0.5 + 5e-13))
        with pytest.raises(InvalidPmf):
            FinitePmf((1, 2), (0.5, 0.5 + 5e-12))

    def test_mass_at_zero_rejected(self):
        with pytest.raises(InvalidPmf):
            FinitePmf((0, 1), (0.5, 0.5))

    def test_negative_mass_rejected(self):
        with pytest.raises(InvalidPmf):
            FinitePmf((1, 2, 3), (0.6, 0.6, -0.2))

    def test_duplicate_point_rejected(self):
        with pytest.raises(InvalidPmf):
            FinitePmf((1, 1), (0.5, 0.5))

    def test_points_sorted(self):
        pmf = FinitePmf((3, 1), (0.25, 0.75))
        assert pmf.points == (1, 3) and pmf.masses == (0.75, 0.25)


class TestBuildModel:
    def test_worked_example_parameters(self):
        m = build_model(Geometric(0.2), G, 0.5, Y)
        assert m.rho == pytest.approx(0.475, abs=1e-15)
        assert (m.g_bar, m.y_bar, m.b) == (pytest.approx(1.9), pytest.approx(1.6), 3)

    def test_deterministic_arrivals(self):
        m = build_model(deterministic(10), FinitePmf.from_mapping({1: 0.2, 5: 0.3, 10: 0.5}), 0.9, deterministic(1))
        assert abs(m.rho - 0.7444) < 5e-5
        assert m.g_bar == pytest.approx(6.7) and m.b == 10

    def test_single_customer_batches(self):
        m = build_model(deterministic(5), deterministic(1), 0.5, deterministic(1))
        assert (m.rho, m.g_bar, m.y_bar) == (pytest.approx(0.4), 1.0, 1.0)

    def test_unstable(self):
        with pytest.raises(Unstable) as err:
            build_model(Geometric(0.5), deterministic(3), 0.5, deterministic(1))
        assert err.value.rho == pytest.approx(3.0)
        assert "3" in str(err.value)

    def test_rho_exactly_one_is_unstable(self):
        with pytest.raises(Unstable):
            build_model(Geometric(0.5), deterministic(1), 0.5, deterministic(1))

    @pytest.mark.parametrize("mu", [0.0, 1.0, -0.1, 1.5])
    def test_mu_range(self, mu):
        with pytest.raises(ValueError):
            build_model(Geometric(0.1), G, mu, Y)

    def test_wrong_types(self):
        with pytest.raises(TypeError):
            QueueModel(Geometric(0.1), Geometric(0.5), 0.5, Y)

    def test_trailing_zero_batch_mass(self):
        m = build_model(Geometric(0.1), FinitePmf((1, 2, 3), (0.5, 0.5, 0.0)), 0.5, Y)
        assert m.b == 2


class TestDistributions:
    @pytest.mark.parametrize("dist", [Geometric(0.3), Geometric(2e-6), NegBinomial(3, 0.2), Y])
    def test_at_one_minus_matches_pgf(self, dist):
        for u in (1e-9, 1e-3, 0.2, 0.7 + 0.1j):
            a, da = dist.at_one_minus(u)
            z = 1.0 - u
            assert a == pytest.approx(dist.pgf(z), rel=1e-9, abs=1e-14)
            assert da == pytest.approx(dist.pgf.derivative(z), rel=1e-7, abs=1e-12)

    @pytest.mark.parametrize("dist", [Geometric(0.3), NegBinomial(2, 0.4), Y])
    def test_sampling_mean(self, dist):
        rng = np.random.default_rng(7)
        x = dist.sample(rng, 200_000)
        assert x.min() >= 1
        assert abs(x.mean() - dist.mean) < 5 * x.std() / math.sqrt(len(x))

    def test_geometric_parameter_range(self):
        with pytest.raises(InvalidPmf):
            Geometric(0.0)
        with pytest.raises(InvalidPmf):
            Geometric(1.5)


@settings(max_examples=60, deadline=None)
@given(pmfs())
def test_pgf_normalized(pmf):
    assert abs(pgf_eval(pmf.pgf, 1.0) - 1.0) < 1e-12


@settings(max_examples=60, deadline=None)
@given(pmfs(), st.integers(0, 2**32 - 1))
def test_pgf_matches_direct_sum_in_disk(pmf, seed):
    rng = np.random.default_rng(seed)
    z = np.sqrt(rng.uniform(0, 1, 100)) * np.exp(2j * np.pi * rng.uniform(0, 1, 100))
    direct = sum(m * z**p for p, m in zip(pmf.points, pmf.masses))
    assert np.max(np.abs(pgf_eval(pmf.pgf, z) - direct)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(pmfs(max_point=12))
def test_mean_matches_finite_difference(pmf):
    # one-sided error is about h E[X(X-1)]/2, below 1e-5 while support <= 12
    f = pmf.pgf
    h = 1e-7
    fd = (pgf_eval(f, 1.0) - pgf_eval(f, 1.0 - h)) / h
    assert abs(pgf_mean(f) - fd) < 1e-5


@settings(max_examples=60, deadline=None)
@given(pmfs(max_point=40))
def test_mean_finite_difference_within_truncation_bound(pmf):
    f = pmf.pgf
    h = 1e-7
    fd = (pgf_eval(f, 1.0) - pgf_eval(f, 1.0 - h)) / h
    m2 = sum(k * (k - 1) * m for k, m in zip(pmf.points, pmf.masses))
    # slack covers roundoff of order max_point * eps / h
    assert abs(pgf_mean(f) - fd) <= h * m2 / 2 + 1e-6


@settings(max_examples=60, deadline=None)
@given(pmfs(), pmfs(max_point=4), st.floats(0.05, 0.95), st.floats(0.01, 1.0))
def test_rho_recomputed_from_raw_pmfs(batch, capacity, mu, p):
    g_bar = sum(k * m for k, m in zip(batch.points, batch.masses))
    y_bar = sum(k * m for k, m in zip(capacity.points, capacity.masses))
    rho = p * g_bar / (mu * y_bar)
    try:
        m = build_model(Geometric(p), batch, mu, capacity)
    except Unstable:
        assert rho >= 1.0
        return
    assert m.rho == rho
