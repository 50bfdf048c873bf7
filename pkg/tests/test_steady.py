import warnings

import numpy as np
import pytest

from eas_queue import (
    FinitePmf,
    Geometric,
    IllConditioned,
    NotSpecialCase,
    QueueModel,
    SingularSystem,
    deterministic,
    find_interior_roots,
    mean_queue_length,
    solve,
    solve_constants,
    solve_special,
    tail_decay_rate,
)
from eas_queue.steady import constants_residuals, solve_linear_constants

from oracles import bisect_single_root, markov_chain, mp_constants, mp_interior_roots
from scenarios import TABLE_SCENARIOS, random_model, worked_example

F = FinitePmf.from_mapping

# Stationary laws of the truncated (queue, residual inter-arrival) Markov chain
# solved by sparse LU with the queue capped at 600; frozen to ten decimals.
CHAIN = {
    "worked_example": {
        "pre": [0.5827795644, 0.1376432053, 0.1016415796, 0.0767059751, 0.0387644525,
                0.0245983771, 0.0151954915, 0.0089262541, 0.0054460200],
        "arb": [0.5827795644, 0.1376432053, 0.1016415796, 0.0767059751, 0.0387644525,
                0.0245983771, 0.0151954915, 0.0089262541, 0.0054460200],
        "means": (1.1336497727, 1.1336497727),
    },
    "det_unit_capacity": {
        "pre": [0.5786007355, 0.1465155483, 0.1087179032, 0.0666913047, 0.0397379337,
                0.0238395580, 0.0143304637, 0.0086101496, 0.0051725373],
        "arb": [0.3134156291, 0.0673685107, 0.0756521612, 0.0810293202, 0.0841687067,
                0.0686932114, 0.0635019085, 0.0604326425, 0.0584783840],
        "means": (1.1115772780, 3.7352853070),
    },
    "general_arrivals": {
        "pre": [0.8784713412, 0.0326038450, 0.0262244725, 0.0182827201, 0.0163205383,
                0.0106071042, 0.0049368840, 0.0056688613, 0.0040326084],
        "arb": [0.6440474860, 0.0560087197, 0.0783649400, 0.0580236393, 0.0406425919,
                0.0544917021, 0.0099170637, 0.0173532415, 0.0297779833],
        "means": (0.3901862259, 1.3637134413),
    },
    "geo_long_batches": {
        "pre": [0.3596769020, 0.0229937006, 0.0369945998, 0.0232188949, 0.0355985159,
                0.0332891064, 0.0402707702, 0.0180635307, 0.0337534637],
        "arb": [0.3596769020, 0.0229937006, 0.0369945998, 0.0232188949, 0.0355985159,
                0.0332891064, 0.0402707702, 0.0180635307, 0.0337534637],
        "means": (9.6352015405, 9.6352015405),
    },
    "det_geometric_capacity": {
        "pre": [0.7308132506, 0.0699912961, 0.0598552458, 0.0482358395, 0.0349024971,
                0.0225275657, 0.0133486552, 0.0073571289, 0.0048615421],
        "arb": [0.4800000000, 0.0974417667, 0.0775414095, 0.0827224571, 0.0867596926,
                0.0602513953, 0.0590593190, 0.0185671205, 0.0133518221],
        "means": (0.8432742655, 1.9985026181),
    },
}
SCENARIOS = {"worked_example": worked_example, **TABLE_SCENARIOS}


@pytest.mark.parametrize("name", list(CHAIN))
def test_distributions_match_markov_chain(name):
    sol = solve(SCENARIOS[name]())
    want = CHAIN[name]
    n = np.arange(9)
    assert np.max(np.abs(sol.pre_arrival.probs(n) - want["pre"])) < 1e-9
    assert np.max(np.abs(sol.arbitrary.probs(n) - want["arb"])) < 1e-9
    assert sol.pre_arrival.mean == pytest.approx(want["means"][0], abs=1e-8)
    assert sol.arbitrary.mean == pytest.approx(want["means"][1], abs=1e-8)


def test_random_models_match_markov_chain():
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 12:
        model = random_model(rng, max_b=5)
        sol = solve(model)
        if sol.tail_rate > 0.9 or isinstance(model.capacity, Geometric):
            continue
        pre, arb = markov_chain(model, 400)
        n = np.arange(60)
        assert np.max(np.abs(sol.pre_arrival.probs(n) - pre[:60])) < 1e-10
        assert np.max(np.abs(sol.arbitrary.probs(n) - arb[:60])) < 1e-10
        checked += 1


class TestConstants:
    def test_worked_example_against_high_precision(self):
        model = worked_example()
        sol = solve(model)
        roots = mp_interior_roots(model)
        c_mp = mp_constants(roots, model.lam)
        for r, c in zip(roots, c_mp):
            j = int(np.argmin(np.abs(sol.roots - complex(r))))
            assert abs(sol.constants[j] - complex(c)) < 1e-14

    def test_clustered_roots_against_high_precision(self):
        # small deterministic-arrival roots cluster near zero
        model = TABLE_SCENARIOS["det_unit_capacity"]()
        sol = solve(model)
        roots = mp_interior_roots(model)
        c_mp = mp_constants(roots, model.lam)
        for r, c in zip(roots, c_mp):
            j = int(np.argmin(np.abs(sol.roots - complex(r))))
            assert abs(sol.constants[j] - complex(c)) < 1e-12 * max(1.0, abs(complex(c)))

    def test_single_root_constant(self):
        model = QueueModel(Geometric(0.3), F({1: 1.0}), 0.6, F({1: 0.5, 2: 0.5}))
        sol = solve(model)
        r = sol.roots[0]
        assert abs(sol.constants[0] - model.lam * (1 - r)) < 1e-15

    @pytest.mark.parametrize("name", list(SCENARIOS))
    def test_residuals(self, name):
        sol = solve(SCENARIOS[name]())
        assert sol.residuals.max() < 1e-12
        assert abs((sol.constants / (1 - sol.roots)).sum() - sol.lam) < 1e-12

    def test_lu_agrees_with_product_form(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            model = random_model(rng)
            r = find_interior_roots(model).interior_roots
            c1, _ = solve_linear_constants(r, model.lam)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IllConditioned)
                c2, res2 = solve_linear_constants(r, model.lam, method="lu")
            assert np.max(np.abs(c1 - c2)) <= 1e-7 * np.max(np.abs(c1))

    def test_repeated_roots_singular(self):
        r = np.array([0.5, 0.5, -0.2], dtype=complex)
        with pytest.raises(SingularSystem):
            solve_linear_constants(r, 0.1)
        with pytest.raises(SingularSystem):
            solve_linear_constants(r, 0.1, method="lu")

    def test_ill_conditioned_warning(self):
        r = np.array([0.5, 0.5 + 1e-7, 0.5 - 1e-7, 0.1], dtype=complex)
        with pytest.warns(IllConditioned):
            solve_linear_constants(r, 0.1, method="lu")

    def test_residual_rows(self):
        r = np.array([0.5, -0.25], dtype=complex)
        c, res = solve_linear_constants(r, 0.2)
        assert np.allclose(res, constants_residuals(c, r, 0.2))
        assert abs((c / r).sum()) < 1e-15


class TestDistributionProperties:
    @pytest.mark.parametrize("name", list(SCENARIOS))
    def test_normalization_and_realness(self, name):
        sol = solve(SCENARIOS[name]())
        for dist in (sol.pre_arrival, sol.arbitrary):
            p, mass = dist.truncate(dist.cutoff(1e-15))
            assert abs(mass - 1) < 1e-12
            assert p.min() >= -1e-12
            assert dist.imag_residue(500) < 1e-12

    @pytest.mark.parametrize("name", list(SCENARIOS))
    def test_p0_complement_matches_truncated_sum(self, name):
        arb = solve(SCENARIOS[name]()).arbitrary
        n = np.arange(1, arb.cutoff(1e-16) + 1)
        assert abs(arb.probs(0) - (1 - arb.probs(n).sum())) < 1e-8

    @pytest.mark.parametrize("name", list(SCENARIOS))
    def test_mean_matches_direct_sum(self, name):
        sol = solve(SCENARIOS[name]())
        for dist in (sol.pre_arrival, sol.arbitrary):
            n = np.arange(max(501, dist.cutoff(1e-16)))
            direct = (n * dist.probs(n)).sum()
            assert abs(mean_queue_length(dist) - direct) < 1e-9

    def test_geometric_arrivals_see_time_averages(self):
        sol = solve(TABLE_SCENARIOS["geo_long_batches"]())
        n = np.arange(1000)
        assert np.max(np.abs(sol.pre_arrival.probs(n) - sol.arbitrary.probs(n))) < 1e-9

    def test_head_matches_direct_formula_beyond_b(self):
        # for n >= b the stored law is the plain sum of K_j r_j^n
        sol = solve(worked_example())
        n = np.arange(sol.model.b, 40)
        direct = (sol.coeffs_K[None, :] * sol.roots[None, :] ** n[:, None]).sum(axis=1).real
        assert np.max(np.abs(sol.arbitrary.probs(n) - direct)) < 1e-15

    def test_scalar_and_array_probs(self):
        pre = solve(worked_example()).pre_arrival
        assert isinstance(pre.probs(3), float)
        assert pre.probs(np.array([3]))[0] == pre.probs(3)


class TestTailDecay:
    @pytest.mark.parametrize("name", ["worked_example", "det_unit_capacity", "general_arrivals", "det_geometric_capacity"])
    def test_ratio_converges_to_dominant_root(self, name):
        sol = solve(SCENARIOS[name]())
        tail = tail_decay_rate(sol)
        assert tail.ratio_converges
        p = sol.pre_arrival.probs(np.array([200, 201]))
        assert abs(p[1] / p[0] - tail.rate) < 1e-6

    def test_worked_example_rate(self):
        tail = tail_decay_rate(solve(worked_example()))
        assert tail.rate == pytest.approx(0.60381979868617946, abs=1e-14)
        assert tail.dominant_real and tail.dominant_unique

    def test_oscillating_ratio_with_real_dominant_root(self):
        # a negative root close in modulus makes the ratio oscillate slowly
        sol = solve(TABLE_SCENARIOS["geo_long_batches"]())
        tail = tail_decay_rate(sol)
        assert tail.dominant_real and tail.dominant_unique
        assert tail.rate == pytest.approx(0.926567, abs=1e-6)
        second = sorted(np.abs(sol.roots))[-2]
        assert second > 0.84
        p = sol.pre_arrival.probs(np.arange(124, 129))
        ratios = p[1:] / p[:-1]
        assert np.all(np.diff(np.sign(ratios - tail.rate)) != 0)
        p = sol.pre_arrival.probs(np.array([400, 401]))
        assert abs(p[1] / p[0] - tail.rate) < 1e-6


class TestSpecialCases:
    def test_gi_geo_1_bisection(self):
        model = QueueModel(Geometric(0.2), F({1: 1.0}), 0.5, F({1: 1.0}))
        sp = solve_special(model)
        from eas_queue import char_fn

        r = bisect_single_root(lambda s: float(np.real(char_fn(model, s))), 1e-12, 1 - 1e-9)
        n = np.arange(50)
        assert np.max(np.abs(sp.pre_arrival.probs(n) - (1 - r) * r**n)) < 1e-14
        lam, mu = 0.2, 0.5
        assert sp.p0 == pytest.approx(1 - (lam / mu) * (1 - mu + mu * r), abs=1e-15)
        n = np.arange(1, 50)
        want = (lam / mu) * (1 - r) * (1 - mu + mu * r) * r ** (n - 1)
        assert np.max(np.abs(sp.arbitrary.probs(n) - want)) < 1e-14

    def test_unit_batches_with_random_capacity(self):
        model = QueueModel(Geometric(0.2), F({1: 1.0}), 0.5, F({1: 0.4, 2: 0.6}))
        sp, gen = solve_special(model), solve(model)
        n = np.arange(300)
        assert np.max(np.abs(sp.arbitrary.probs(n) - gen.arbitrary.probs(n))) < 1e-10
        assert np.max(np.abs(sp.pre_arrival.probs(n) - gen.pre_arrival.probs(n))) < 1e-10

    def test_unit_capacity_with_batches(self):
        model = TABLE_SCENARIOS["det_unit_capacity"]()
        sp, gen = solve_special(model), solve(model)
        n = np.arange(300)
        assert np.max(np.abs(sp.arbitrary.probs(n) - gen.arbitrary.probs(n))) < 1e-10

    def test_deterministic_gi_geo_1(self):
        model = QueueModel(deterministic(4), F({1: 1.0}), 0.5, F({1: 1.0}))
        sp, gen = solve_special(model), solve(model)
        n = np.arange(100)
        assert np.max(np.abs(sp.arbitrary.probs(n) - gen.arbitrary.probs(n))) < 1e-10
        assert np.max(np.abs(sp.pre_arrival.probs(n) - gen.pre_arrival.probs(n))) < 1e-10

    def test_not_special(self):
        with pytest.raises(NotSpecialCase):
            solve_special(worked_example())


def test_solve_constants_entry_point():
    model = worked_example()
    sol = solve_constants(find_interior_roots(model), model)
    assert sol.p0 == pytest.approx(0.5827795644, abs=1e-10)
