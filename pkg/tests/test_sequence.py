import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeter.errors import DomainError, UnsupportedError
from qmeter.measurement import conditional_states, kraus_operator
from qmeter.metrics import report_from_channels
from qmeter.states import AncillaInit, MeasurementParams, QubitState
from qmeter.sequence import (
    ScalingModel,
    SequenceSpec,
    build_stat_table,
    cell_seed,
    find_n_star,
    fit_weak_constant,
    monte_carlo_oracle,
    posterior_label,
    scaling_predictions,
    sequence_metrics,
    single_step_work,
    total_work_sequence,
    unconditional_coherence_factor,
)

REF = QubitState.reference()


def vac(ab, eps, **kw):
    return MeasurementParams(alpha_bar=ab, epsilon=eps, **kw)


def enumerate_tuples(params, qubit, n_steps, n_cut):
    """Brute-force sum over outcome tuples, grouped by their total T."""
    ops = [np.diag(kraus_operator(n, params)) for n in range(n_cut + 1)]
    rho = qubit.matrix()
    acc = {}
    for tup in itertools.product(range(n_cut + 1), repeat=n_steps):
        d = np.prod([ops[n] for n in tup], axis=0)
        w = np.outer(d, d.conj()) * rho
        t = sum(tup)
        acc[t] = acc.get(t, 0) + w
    return acc


class TestStatTable:
    def test_single_step_matches_single_shot(self):
        params = vac(0.6 + 0.2j, 0.3, phi=0.7)
        q = QubitState.from_bloch(0.4, 0.1, 0.2)
        table = build_stat_table(SequenceSpec(1, params, qubit=q))
        fine = conditional_states(params, q)
        m = min(len(fine), len(table.t_values))
        assert np.allclose(table.pg[:m], fine.pg[:m], atol=1e-14)
        assert np.allclose(table.coh[:m], fine.coh[:m], atol=1e-14)

    @pytest.mark.parametrize("params", [vac(0.3, 0.3), vac(0.5, 0.2 + 0.1j, phi=0.4)])
    def test_three_steps_against_enumeration(self, params):
        q = QubitState.from_bloch(0.5, -0.3, 0.1)
        acc = enumerate_tuples(params, q, 3, 14)
        table = build_stat_table(SequenceSpec(3, params, qubit=q))
        for t, pg, pe, coh in zip(table.t_values[:8], table.pg, table.pe, table.coh):
            w = acc[int(t)]
            assert pg == pytest.approx(w[0, 0].real, abs=1e-13)
            assert pe == pytest.approx(w[1, 1].real, abs=1e-13)
            assert coh == pytest.approx(w[0, 1], abs=1e-13)

    def test_average_coherence_factor(self):
        params = vac(0.4 + 0.1j, 0.25, phi=0.3)
        table = build_stat_table(SequenceSpec(7, params))
        assert complex(table.coh.sum()) == pytest.approx(REF.rho_ge * unconditional_coherence_factor(params, 7),
                                                         abs=1e-12)

    def test_tie_goes_to_g(self):
        assert list(posterior_label([0.5, 0.2, 0.3], [0.5, 0.3, 0.1])) == ["g", "e", "g"]

    def test_binary_channel_always_has_both_labels(self):
        table = build_stat_table(SequenceSpec(4, vac(0.7, 0.0)))
        binary = table.binary_channel()
        assert binary.labels == ("e", "g")
        assert binary.probs.weights[0] == 0.0
        r = sequence_metrics(SequenceSpec(4, vac(0.7, 0.0)))
        assert r.eta_xr is None and r.product is None

    def test_thermal_pointer_is_unsupported(self):
        spec = SequenceSpec(2, MeasurementParams(alpha_bar=0.3, epsilon=0.3, init=AncillaInit.thermal(1.0)))
        with pytest.raises(UnsupportedError):
            build_stat_table(spec)

    @pytest.mark.parametrize("n", [0, -1, 1.5])
    def test_bad_step_count(self, n):
        with pytest.raises(DomainError):
            SequenceSpec(n, vac(0.1, 0.1))

    def test_large_sequences_stay_normalized(self):
        table = build_stat_table(SequenceSpec(20000, vac(1.0, 0.02)))
        assert table.p_t.total + table.p_t.tail_bound == pytest.approx(1.0, abs=1e-10)


class TestSequenceMetrics:
    def test_enumerated_binary_channel(self):
        params = vac(0.3, 0.3)
        acc = enumerate_tuples(params, REF, 3, 14)
        ws = {"e": np.zeros((2, 2), complex), "g": np.zeros((2, 2), complex)}
        for w in acc.values():
            lab = "g" if w[0, 0].real >= w[1, 1].real else "e"
            ws[lab] += w
        binary = build_stat_table(SequenceSpec(3, params)).binary_channel()
        for i, lab in enumerate(binary.labels):
            assert binary.pg[i] == pytest.approx(ws[lab][0, 0].real, abs=1e-12)
            assert binary.coh[i] == pytest.approx(ws[lab][0, 1], abs=1e-12)

    def test_more_steps_means_stronger_measurement(self):
        xs = [sequence_metrics(SequenceSpec(n, vac(0.2, 0.2))).xi for n in (1, 5, 25, 125)]
        assert all(b > a for a, b in zip(xs, xs[1:]))

    def test_single_step_matches_single_shot_report(self):
        params = vac(0.5, 0.5)
        table = build_stat_table(SequenceSpec(1, params))
        r = sequence_metrics(SequenceSpec(1, params), table)
        ref = report_from_channels(conditional_states(params, REF).average_state(), conditional_states(params, REF),
                                   table.binary_channel())
        assert r.xi == pytest.approx(ref.xi, abs=1e-12)
        assert r.chi == pytest.approx(ref.chi, abs=1e-12)


class TestMonteCarlo:
    def test_same_seed_same_result(self):
        spec = SequenceSpec(6, vac(0.4, 0.3))
        a = monte_carlo_oracle(spec, 2000, seed=cell_seed(7, 1, 2))
        b = monte_carlo_oracle(spec, 2000, seed=cell_seed(7, 1, 2))
        assert np.array_equal(a.channel.pg, b.channel.pg)
        assert np.array_equal(a.channel.coh, b.channel.coh)

    def test_cell_seeds_are_distinct(self):
        a = np.random.default_rng(cell_seed(1, 0, 1)).random()
        b = np.random.default_rng(cell_seed(1, 1, 0)).random()
        assert a != b

    def test_no_coupling_labels_everything_g(self):
        est = monte_carlo_oracle(SequenceSpec(5, vac(0.5, 0.0)), 500, seed=3)
        assert list(est.p_r) == [0.0, 1.0]

    def test_agrees_with_exact_channel(self):
        spec = SequenceSpec(8, vac(0.35, 0.25))
        exact = build_stat_table(spec).binary_channel()
        est = monte_carlo_oracle(spec, 40000, seed=11)
        for i, lab in enumerate(exact.labels):
            for name, ex, mc in (("pg", exact.pg[i], est.channel.pg[i]), ("coh_re", exact.coh[i].real,
                                                                         est.channel.coh[i].real)):
                assert abs(ex - mc) < 5 * est.entries_stderr[(lab, name)] + 1e-12


class TestWork:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 500), st.floats(0, 1.5), st.floats(0, 1.5))
    def test_linear_in_steps(self, n, ab, eps):
        params = vac(ab, eps)
        assert total_work_sequence(SequenceSpec(n, params)) == pytest.approx(n * single_step_work(params), rel=1e-12)

    def test_strong_limit_prediction(self):
        _, w = scaling_predictions(ScalingModel(h0=1.0), 1.5)
        assert w == pytest.approx(2 * (math.log(3 * math.pi) + 0.5))
        _, w0 = scaling_predictions(ScalingModel(h0=1.0, l_exponent=0, k_outcomes=3), 0.5)
        assert w0 == pytest.approx(1.5)

    def test_weak_constant_recovers_synthetic_law(self):
        eps = np.array([0.3, 0.01, 0.02, 0.1])
        work = 0.7 * 2.0 / eps**2
        c = fit_weak_constant(eps, work, 2.0)
        assert c == pytest.approx(0.7)
        w, _ = scaling_predictions(ScalingModel(h0=2.0, weak_constant=c), 0.05)
        assert w == pytest.approx(0.7 * 2.0 / 0.0025)

    def test_weak_prediction_needs_fit(self):
        w, _ = scaling_predictions(ScalingModel.for_pointer(1.0), 0.1)
        assert w is None
        with pytest.raises(DomainError):
            scaling_predictions(ScalingModel(h0=1.0), 0.0)

    def test_fixed_pointer_work_scales_inverse_square(self):
        eps = np.array([0.01, 0.02, 0.04])
        n_star = [find_n_star(vac(1.0, e), threshold=0.9).n_star for e in eps]
        work = [total_work_sequence(SequenceSpec(n, vac(1.0, e))) for n, e in zip(n_star, eps)]
        slope = np.polyfit(np.log(eps), np.log(work), 1)[0]
        assert slope == pytest.approx(-2.0, abs=0.1)


def xi_only_lower_bound(params, threshold):
    """Smallest N whose closed-form strength alone reaches the threshold."""
    f = abs(unconditional_coherence_factor(params, 1))
    n = 1
    while True:
        c = f**n
        lam = (0.5 + 0.5 * c, 0.5 - 0.5 * c)
        xi = -sum(v * math.log2(v) for v in lam if v > 0)
        if xi >= threshold:
            return n
        n += 1


class TestNStar:
    def test_minimal_and_consistent(self):
        params = vac(0.1, 0.1)
        res = find_n_star(params)
        assert res.converged
        assert res.n_star >= xi_only_lower_bound(params, 0.999)
        before = sequence_metrics(SequenceSpec(res.n_star - 1, params))
        assert min(v for v in (before.xi, before.eta, before.eta_xr) if v is not None) < 0.999
        assert min(res.report.xi, res.report.eta, res.report.eta_xr) >= 0.999

    def test_lower_threshold_needs_fewer_steps(self):
        params = vac(0.1, 0.1)
        assert find_n_star(params, 0.5).n_star < find_n_star(params, 0.999).n_star

    def test_strong_coupling_single_step(self):
        assert find_n_star(vac(1.5, 1.5)).n_star == 1

    def test_cap_reports_non_convergence(self):
        res = find_n_star(vac(0.1, 0.1), n_max=4)
        assert not res.converged and res.n_star is None and res.n_max == 4

    def test_zero_coupling_never_converges(self):
        assert not find_n_star(vac(0.3, 0.0)).converged

    def test_cap_default(self):
        res = find_n_star(vac(0.0, 0.5))
        assert res.n_max == 80
        assert not res.converged


def test_phase_enters_per_step():
    params = vac(0.2, 0.2, phi=0.3)
    f = unconditional_coherence_factor(params, 4)
    assert cmath.phase(f) == pytest.approx(-1.2)
