"""CHSH assembly, parameter sweeps, and maximum refinement."""

import math

import numpy as np
import pytest

from squeezebell.bell import (
    AXIS_SELECTORS,
    CIRELSON_BOUND,
    BellConfig,
    SweepGrid,
    _resolve_workers,
    bell_operator,
    evaluate_key,
    find_max,
    sweep_map,
)
from squeezebell.errors import SqueezeBellError
from squeezebell.evaluators import EvaluationSettings, correlator_auto
from squeezebell.state import SqueezeParams, TransitionSpec

SETTINGS = EvaluationSettings(ell=2.0)


def _theta_config(r, th_a, th_ap, th_b, th_bp, *, phi=0.0, method="auto", ell=2.0):
    return BellConfig(
        a=SqueezeParams(r, phi, th_a),
        a_prime=SqueezeParams(r, phi, th_ap),
        b=SqueezeParams(r, phi, th_b),
        b_prime=SqueezeParams(r, phi, th_bp),
        settings=EvaluationSettings(ell=ell),
        method=method,
    )


class TestBellConfig:
    def test_valid_construction(self):
        cfg = _theta_config(1.0, 0.4, 0.8, 0.0, 1.2)
        assert cfg.method == "auto"

    def test_closure_guard_trips_on_catastrophic_angles(self):
        # Absolute angles always telescope exactly in real arithmetic; only
        # magnitudes large enough to shred the differences in float can
        # violate closure, and those must be refused.
        with pytest.raises(ValueError, match="closure"):
            BellConfig(
                a=SqueezeParams(1.0, 0.0, 1e9 + 0.3),
                a_prime=SqueezeParams(1.0, 0.0, 0.7),
                b=SqueezeParams(1.0, 0.0, 1e-9),
                b_prime=SqueezeParams(1.0, 0.0, 3e8 + 0.1),
                settings=SETTINGS,
            )


class TestBellOperator:
    def test_degenerate_settings_give_twice_correlator(self):
        a = SqueezeParams(1.0, 0.0, 0.4)
        b = SqueezeParams(1.0, 0.0, 0.0)
        cfg = BellConfig(a=a, a_prime=a, b=b, b_prime=b, settings=SETTINGS)
        value = bell_operator(cfg)
        e = correlator_auto(TransitionSpec(a=a, b=b), SETTINGS).value
        assert value == pytest.approx(2.0 * e, rel=1e-14)

    def test_global_rotation_invariance(self):
        base = _theta_config(1.2, 0.0, math.pi / 2.0, math.pi / 4.0, -math.pi / 4.0)
        shift = 0.7
        moved = _theta_config(
            1.2, shift, math.pi / 2.0 + shift, math.pi / 4.0 + shift, -math.pi / 4.0 + shift
        )
        assert bell_operator(moved) == pytest.approx(bell_operator(base), abs=1e-12)

    @pytest.mark.parametrize(
        "thetas",
        [
            (0.0, math.pi / 2.0, math.pi / 4.0, -math.pi / 4.0),
            (0.3, 1.1, -0.4, 0.9),
            (0.0, 0.8, 0.4, 1.6),
        ],
    )
    def test_quantum_bound_respected(self, thetas):
        cfg = _theta_config(1.5, *thetas, ell=3.0)
        assert abs(bell_operator(cfg)) <= CIRELSON_BOUND + 1e-9

    def test_failed_leg_is_reported(self):
        # Coincident (a, b) leg with the forced band-series method cannot
        # be evaluated; the failure must surface, not silently NaN.
        cfg = _theta_config(1.0, 0.0, 0.8, 0.0, 1.2, method="numeric")
        with pytest.raises(SqueezeBellError, match="correlator leg failed"):
            bell_operator(cfg)


class TestEvaluateKey:
    def test_error_becomes_flagged_nan(self):
        key = (1.0, 0.2, 1.0, 0.2, 0.0, 1.0)
        value, method, flag = evaluate_key(key, "numeric", SETTINGS)
        assert math.isnan(value)
        assert method == "numeric"
        assert "DegenerateKernelError" in flag

    def test_success_has_empty_or_note_flag(self):
        key = (1.0, 0.2, 0.8, -0.1, 0.5, 1.0)
        value, method, flag = evaluate_key(key, "auto", SETTINGS)
        assert math.isfinite(value)
        assert method in ("numeric", "small-ell", "large-ell", "equal-time")


class TestSweepGrid:
    def test_selector_vocabulary(self):
        expected = {
            "r", "phi", "ell", "dtheta",
            "dtheta_ab", "dtheta_apb", "dtheta_abp", "dtheta_apbp",
        }
        for side in ("a", "ap", "b", "bp"):
            expected |= {f"r_{side}", f"phi_{side}", f"theta_{side}"}
        assert set(AXIS_SELECTORS) == expected

    def test_unknown_selector_rejected(self):
        cfg = _theta_config(1.0, 0.4, 0.8, 0.0, 1.2)
        with pytest.raises(ValueError, match="unknown axis selector"):
            SweepGrid(fixed=cfg, axis1=("bogus", 0.0, 1.0, 3), axis2=("ell", 1.0, 2.0, 3))

    def test_degenerate_axis_rejected(self):
        cfg = _theta_config(1.0, 0.4, 0.8, 0.0, 1.2)
        with pytest.raises(ValueError):
            SweepGrid(fixed=cfg, axis1=("dtheta", 0.0, 1.0, 1), axis2=("ell", 1.0, 2.0, 3))
        with pytest.raises(ValueError):
            SweepGrid(fixed=cfg, axis1=("ell", 0.0, 1.0, 3), axis2=("ell", 1.0, 2.0, 3))
        with pytest.raises(ValueError):
            SweepGrid(
                fixed=cfg,
                axis1=("dtheta", 0.0, 1.0, 3),
                axis2=("ell", 1.0, 2.0, 3),
                quantity="banana",
            )


class TestSweepMap:
    def _correlator_grid(self):
        cfg = _theta_config(1.0, 0.4, 0.8, 0.0, 1.2)
        return SweepGrid(
            fixed=cfg,
            axis1=("dtheta", 0.2, 1.0, 3),
            axis2=("ell", 1.0, 3.0, 3),
            quantity="correlator",
        )

    def test_matches_pointwise_evaluation(self):
        grid = self._correlator_grid()
        sweep = sweep_map(grid, workers=1)
        for i, dv in enumerate(sweep.x):
            for j, ev in enumerate(sweep.y):
                spec = TransitionSpec(
                    a=SqueezeParams(1.0, 0.0, float(dv)),
                    b=SqueezeParams(1.0, 0.0, 0.0),
                )
                direct = correlator_auto(spec, EvaluationSettings(ell=float(ev))).value
                assert sweep.values[i, j] == direct

    def test_deterministic_across_runs_and_workers(self):
        grid = self._correlator_grid()
        one = sweep_map(grid, workers=1)
        again = sweep_map(grid, workers=1)
        par = sweep_map(grid, workers=2)
        assert np.array_equal(one.values, again.values)
        assert np.array_equal(one.values, par.values)
        assert np.array_equal(one.methods, par.methods)

    def test_failed_nodes_are_flagged_nan(self):
        cfg = _theta_config(1.0, 0.0, 0.8, 0.0, 1.2, method="numeric")
        grid = SweepGrid(
            fixed=cfg,
            axis1=("dtheta", 0.0, 1.0, 3),  # dtheta = 0 node is degenerate
            axis2=("ell", 1.0, 2.0, 2),
            quantity="correlator",
        )
        sweep = sweep_map(grid, workers=1)
        assert np.isnan(sweep.values[0]).all()
        assert all("DegenerateKernelError" in f for f in sweep.flags[0])
        assert np.isfinite(sweep.values[1:]).all()

    def test_max_node_ignores_nan(self):
        cfg = _theta_config(1.0, 0.0, 0.8, 0.0, 1.2, method="numeric")
        grid = SweepGrid(
            fixed=cfg,
            axis1=("dtheta", 0.0, 1.0, 3),
            axis2=("ell", 1.0, 2.0, 2),
            quantity="correlator",
        )
        sweep = sweep_map(grid, workers=1)
        value, i, j = sweep.max_node()
        assert math.isfinite(value)
        assert value == np.nanmax(sweep.values)


class TestFindMax:
    def test_constant_field_cannot_improve(self):
        vac = SqueezeParams(0.0, 0.0, 0.0)
        grid = SweepGrid(
            fixed=BellConfig(
                a=vac, a_prime=vac, b=vac, b_prime=vac,
                settings=SETTINGS, method="large-ell",
            ),
            axis1=("theta_a", 0.0, 1.0, 3),
            axis2=("theta_b", 0.0, 1.0, 3),
            quantity="correlator",
        )
        res = find_max(grid, workers=1)
        assert res.value == res.grid_value == 0.0

    def test_refinement_never_loses_to_grid(self):
        cfg = _theta_config(3.0, 0.0, math.pi / 2.0, math.pi / 4.0, -math.pi / 4.0,
                            method="large-squeeze")
        grid = SweepGrid(
            fixed=cfg,
            axis1=("phi_a", -0.3, 0.3, 3),
            axis2=("phi_b", -0.3, 0.3, 3),
            quantity="bell",
        )
        sweep = sweep_map(grid, workers=1)
        res = find_max(grid, sweep=sweep, workers=1)
        assert res.value >= res.grid_value
        assert res.grid_value == sweep.max_node()[0]
        assert res.n_evaluations > 0


class TestWorkerResolution:
    def test_explicit_wins(self):
        assert _resolve_workers(2) == 2
        assert _resolve_workers(0) == 1

    def test_environment_default(self, monkeypatch):
        monkeypatch.setenv("SQUEEZEBELL_WORKERS", "3")
        assert _resolve_workers(None) == 3

    def test_fallback_cpu_count(self, monkeypatch):
        monkeypatch.delenv("SQUEEZEBELL_WORKERS", raising=False)
        assert _resolve_workers(None) >= 1
