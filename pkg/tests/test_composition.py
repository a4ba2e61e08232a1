"""Gain-operator assembly, small-gain certification, weight construction
and the composed dissipation oracle."""

import numpy as np
import pytest

from simnet import (
    CompositionError,
    InterconnectionGraph,
    LocalGains,
    TemplateGains,
    build_gain_operator,
    build_gain_operator_from_network,
    check_composed_dissipation,
    check_small_gain,
    construct_mu,
    evaluate_V,
    templated_gain_operator,
)
from simnet.swing import (
    SwingParams,
    compose_ring,
    templated_ring_operator,
    topology_graph,
)
from vehicles import (
    certified_network,
    decoupled_tight_node,
    tight_two_node_network,
)


def gains(lam=0.2, rho_int=0.0, rho_ext=0.0, alpha=1.0):
    return LocalGains(alpha=alpha, lam=lam, rho_int=rho_int, rho_ext=rho_ext)


def chain_graph():
    return InterconnectionGraph(
        nodes=(0, 1),
        in_neighbors={0: (1,), 1: (0,)},
        out_neighbors={0: (1,), 1: (0,)},
    )


class TestBuildGainOperator:
    def test_decoupled_network_zero_matrix(self):
        graph = InterconnectionGraph((0, 1), {0: (), 1: ()}, {0: (), 1: ()})
        op = build_gain_operator([gains(), gains()], graph)
        assert np.all(op.gamma == 0.0)
        assert op.gamma_colsum_sup == 0.0

    def test_ring_topology_single_entry_per_row(self, swing_params, swing_gains):
        graph = topology_graph(swing_params, mode=0)
        op = build_gain_operator([swing_gains] * 3, graph)
        for row in op.gamma:
            nz = row[row > 0]
            assert len(nz) == 1
            # one neighbor, unit alpha: gamma equals rho_int exactly
            assert nz[0] == pytest.approx(swing_gains.rho_int, rel=1e-12)

    def test_two_node_chain_symmetric(self):
        op = build_gain_operator(
            [gains(lam=0.5, rho_int=0.1), gains(lam=0.5, rho_int=0.1)], chain_graph()
        )
        np.testing.assert_allclose(op.gamma, [[0.0, 0.1], [0.1, 0.0]])

    def test_missing_gains_rejected(self):
        with pytest.raises(CompositionError):
            build_gain_operator({0: gains()}, chain_graph())

    def test_mode_robust_operator_uses_per_mode_in_degree(self, swing_params, swing_gains):
        from simnet import generate_ring_network

        spec = generate_ring_network(swing_params)
        op = build_gain_operator_from_network(spec, [swing_gains] * 3)
        # union wiring: two potential feeders, each active alone per mode
        for i in range(3):
            row = op.gamma[i]
            assert (row > 0).sum() == 2
            for v in row[row > 0]:
                assert v == pytest.approx(swing_gains.rho_int, rel=1e-12)


class TestCheckSmallGain:
    def test_zero_gamma_radius_zero(self):
        graph = InterconnectionGraph((0,), {0: ()}, {0: ()})
        op = build_gain_operator([gains()], graph)
        res = check_small_gain(op)
        assert res.satisfied and res.radius_or_bound == 0.0

    def test_templated_ring_formula_bound(self, swing_gains):
        op = templated_ring_operator(swing_gains)
        res = check_small_gain(op)
        assert res.satisfied
        assert res.radius_or_bound == pytest.approx(
            swing_gains.rho_int / swing_gains.lam, rel=1e-12
        )
        assert res.radius_or_bound == pytest.approx(0.42792, abs=1e-9)

    def test_templated_ring_reported_gain_level(self):
        # at the reported benchmark input gain the bound is 0.7275
        op = templated_gain_operator(
            [TemplateGains(lam=0.2, alpha=1.0, rho_int=0.1455, n_bar=1, readers=((0, 1),))]
        )
        res = check_small_gain(op)
        assert res.satisfied
        assert res.radius_or_bound == pytest.approx(0.7275, abs=1e-12)

    def test_four_cycle_above_one_not_satisfied(self):
        lam = np.full(4, 0.5)
        gamma = np.zeros((4, 4))
        for i in range(4):
            gamma[i, (i - 1) % 4] = 0.6  # psi = 1.2 per edge
        from simnet.composition import GainOperator

        op = GainOperator(
            kind="finite", node_ids=(0, 1, 2, 3), lam=lam, gamma=gamma,
            alphas=np.ones(4), rho_exts=np.zeros(4),
        )
        res = check_small_gain(op)
        assert not res.satisfied
        assert res.radius_or_bound == pytest.approx(1.2, abs=1e-9)

    def test_unbounded_fan_out_rejected(self):
        op = templated_gain_operator(
            [
                TemplateGains(
                    lam=0.2, alpha=1.0, rho_int=0.01, n_bar=1,
                    readers=((0, float("inf")),),
                )
            ]
        )
        with pytest.raises(CompositionError):
            check_small_gain(op)

    def test_templated_bound_dominates_ring_truncations(self, swing_gains):
        templated = templated_ring_operator(swing_gains)
        bound = check_small_gain(templated).radius_or_bound
        for n in range(3, 65):
            graph = topology_graph(SwingParams(n_nodes=n), mode=0)
            finite = build_gain_operator([swing_gains] * n, graph)
            assert check_small_gain(finite).radius_or_bound <= bound + 1e-9


class TestConstructMu:
    def test_single_node_full_rate(self):
        graph = InterconnectionGraph((0,), {0: ()}, {0: ()})
        op = build_gain_operator([gains(lam=0.2)], graph)
        core = construct_mu(op)
        np.testing.assert_allclose(core.mu, [1.0])
        assert core.lambda_inf >= 0.2 - 1e-4
        assert core.lambda_inf < 0.2

    def test_templated_ring_rate(self, swing_gains):
        core = construct_mu(templated_ring_operator(swing_gains))
        assert core.mu is None  # uniform weights
        assert core.lambda_inf == pytest.approx(0.2 - swing_gains.rho_int, rel=1e-12)
        assert core.lambda_inf == pytest.approx(0.114416, abs=1e-9)

    def test_templated_ring_reported_gain_rate(self):
        op = templated_gain_operator(
            [
                TemplateGains(
                    lam=0.2, alpha=1.0, rho_int=0.1455, n_bar=1,
                    readers=((0, 1),), rho_ext=8.1487e-11,
                )
            ]
        )
        core = construct_mu(op)
        assert core.lambda_inf == pytest.approx(0.0545, abs=1e-12)

    def test_two_node_chain_symmetric_weights(self):
        op = build_gain_operator(
            [gains(lam=0.5, rho_int=0.1), gains(lam=0.5, rho_int=0.1)], chain_graph()
        )
        core = construct_mu(op)
        assert core.lambda_inf == pytest.approx(0.4, abs=1e-4)
        assert core.mu[0] == pytest.approx(core.mu[1], rel=1e-9)
        # direct substitution in the weighted-decay inequality
        lhs = (-op.lam * core.mu + op.gamma.T @ core.mu) / core.mu
        assert np.all(lhs <= -core.lambda_inf + 1e-9)

    def test_small_gain_failure_raises(self):
        op = build_gain_operator(
            [gains(lam=0.2, rho_int=0.5), gains(lam=0.2, rho_int=0.5)], chain_graph()
        )
        with pytest.raises(CompositionError):
            construct_mu(op)

    def test_degenerate_margin_raises(self):
        # radius inside the small-gain region but above the weight
        # construction's feasibility cap: certified, yet no usable rate
        rho = 0.2 * (1.0 - 5e-7)
        op = build_gain_operator(
            [gains(lam=0.2, rho_int=rho), gains(lam=0.2, rho_int=rho)], chain_graph()
        )
        assert check_small_gain(op).satisfied
        with pytest.raises(CompositionError):
            construct_mu(op)

    @pytest.mark.parametrize("seed", range(6))
    def test_weighted_decay_componentwise_on_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 8))
        nodes = tuple(range(n))
        in_n = {}
        for i in nodes:
            others = [j for j in nodes if j != i]
            in_n[i] = tuple(j for j in others if rng.random() < 0.5)
        out_n = {j: tuple(i for i in nodes if j in in_n[i]) for j in nodes}
        graph = InterconnectionGraph(nodes, in_n, out_n)
        lams = rng.uniform(0.2, 0.8, n)
        g = [
            gains(lam=float(lams[i]), rho_int=float(rng.uniform(0.0, 0.02)))
            for i in range(n)
        ]
        op = build_gain_operator(g, graph)
        if not check_small_gain(op).satisfied:
            pytest.skip("instance not composable")
        core = construct_mu(op)
        lhs = (-op.lam * core.mu + op.gamma.T @ core.mu) / core.mu
        assert float(lhs.max()) <= -core.lambda_inf + 1e-9
        assert np.all(core.mu >= 1.0 - 1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_scaling_gamma_down_never_lowers_rate(self, seed):
        rng = np.random.default_rng(100 + seed)
        op = build_gain_operator(
            [
                gains(lam=0.5, rho_int=float(rng.uniform(0.05, 0.2))),
                gains(lam=0.4, rho_int=float(rng.uniform(0.05, 0.2))),
            ],
            chain_graph(),
        )
        if not check_small_gain(op).satisfied:
            pytest.skip("instance not composable")
        base = construct_mu(op).lambda_inf
        from simnet.composition import GainOperator

        for theta in (0.9, 0.5, 0.1):
            scaled = GainOperator(
                kind="finite", node_ids=op.node_ids, lam=op.lam,
                gamma=theta * op.gamma, alphas=op.alphas, rho_exts=op.rho_exts,
            )
            assert construct_mu(scaled).lambda_inf >= base - 1e-9


class TestComposeCertificate:
    def test_uniform_weights_unit_alpha(self, swing_params):
        composed, core, g, certs = compose_ring(swing_params)
        assert composed.alpha_total == 1.0
        assert composed.mu_min == composed.mu_max == 1.0
        assert composed.rho_ext_coeff == pytest.approx(g.rho_ext, rel=1e-12)

    def test_value_is_weighted_sum(self, swing_params):
        composed, _, _, certs = compose_ring(swing_params)
        rng = np.random.default_rng(3)
        states = [rng.uniform(-1, 1, 2) for _ in range(3)]
        hats = [rng.uniform(-1, 1, 1) for _ in range(3)]
        direct = sum(
            evaluate_V(certs[i], states[i], hats[i], 0) for i in range(3)
        )
        assert composed.evaluate_V(states, hats, [0, 0, 0]) == pytest.approx(
            direct, rel=1e-12
        )

    def test_two_node_weighted_sum_oracle(self):
        spec, certs, g, composed = tight_two_node_network()
        rng = np.random.default_rng(5)
        states = [rng.uniform(-1, 1, 2) for _ in range(2)]
        hats = [rng.uniform(-1, 1, 1) for _ in range(2)]
        direct = sum(
            composed.mu[i] * evaluate_V(certs[i], states[i], hats[i], 0)
            for i in range(2)
        )
        assert composed.evaluate_V(states, hats, [0, 0]) == pytest.approx(
            direct, rel=1e-12
        )


class TestComposedDissipation:
    def test_single_decoupled_node_passes(self):
        spec, cert, g, composed = decoupled_tight_node()
        report = check_composed_dissipation(composed, spec, samples=200, seed=0)
        assert report.ok, report.witness

    def test_swing_ring_synchronized_passes(self, swing_params):
        from simnet import generate_ring_network

        spec = generate_ring_network(swing_params)
        composed, _, _, _ = compose_ring(swing_params)
        report = check_composed_dissipation(
            composed, spec, samples=500, seed=0, synchronized=True
        )
        assert report.ok, report.witness
        assert report.violations == 0

    def test_tight_network_asynchronous_passes(self):
        spec, certs, g, composed = tight_two_node_network()
        report = check_composed_dissipation(composed, spec, samples=400, seed=2)
        assert report.ok, report.witness

    def test_inflated_rate_is_falsified(self):
        # decay rate pushed past one makes the allowed right side negative,
        # so any sample with positive value is a witness
        from simnet.composition import ComposedCertificate

        spec, cert, g, composed = decoupled_tight_node(kappa=0.6)
        assert composed.lambda_inf > 0.5
        inflated = ComposedCertificate(
            mu=composed.mu,
            lambda_inf=min(2.0 * composed.lambda_inf, 0.999999),
            alpha_total=composed.alpha_total,
            rho_ext_coeff=composed.rho_ext_coeff,
            certificates=composed.certificates,
        )
        report = check_composed_dissipation(inflated, spec, samples=200, seed=1)
        assert not report.ok
        assert report.witness is not None

    @pytest.mark.parametrize("seed", [0, 3])
    def test_certified_random_networks_pass(self, seed):
        spec, certs, g, composed = certified_network(seed, max_nodes=3, max_modes=2)
        report = check_composed_dissipation(composed, spec, samples=250, seed=seed)
        assert report.ok, report.witness


class TestRadiusCrossCheck:
    @pytest.mark.parametrize("seed", range(5))
    def test_dense_vs_power_on_psi(self, seed):
        from simnet import spectral_radius_dense, spectral_radius_power

        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 64))
        psi = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.3)
        assert abs(spectral_radius_dense(psi) - spectral_radius_power(psi)) <= 1e-8
