from __future__ import annotations

import numpy as np
import pytest

from levdyn.params import ModelParams
from levdyn.skew import forcing_response_classification
from levdyn.sweep import SweepSpec, run_sweep, stability_map

from conftest import two_bank

STD1 = ModelParams(omegas=(0.5,), pis=(1.0,))


def omega_sweep(lo=0.2, hi=0.95, resolution=61, record=400, transient=1500):
    return SweepSpec(
        axis="omega",
        bounds=(lo, hi),
        resolution=resolution,
        fixed=STD1,
        transient=transient,
        record=record,
        initials_per_point=3,
        rng_seed=77,
    )


class TestSpecValidation:
    def test_bad_axis(self):
        with pytest.raises(ValueError):
            SweepSpec(axis="zeta", bounds=(0, 1), resolution=10, fixed=STD1)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            SweepSpec(axis="omega", bounds=(0.7, 0.2), resolution=10, fixed=STD1)
        with pytest.raises(ValueError):
            SweepSpec(axis="omega", bounds=(0.0, 1.5), resolution=10, fixed=STD1)

    def test_bad_resolution(self):
        with pytest.raises(ValueError):
            SweepSpec(axis="omega", bounds=(0, 1), resolution=1, fixed=STD1)

    def test_bank_count_must_match_axis(self):
        with pytest.raises(ValueError):
            SweepSpec(axis="pi1", bounds=(0, 1), resolution=10, fixed=STD1)
        with pytest.raises(ValueError):
            SweepSpec(
                axis="omega", bounds=(0, 1), resolution=10,
                fixed=two_bank(0.5, 0.3, 0.5),
            )


@pytest.fixture(scope="module")
def records():
    return run_sweep(omega_sweep())


class TestMemorySweep:
    def test_high_memory_is_fixed_point(self, records):
        for rec in records:
            if rec.param_value >= 0.7:
                assert rec.classification == "fixed-point"

    def test_period_doubling_cascade_present(self, records):
        periods = {
            rec.period.period
            for rec in records
            if rec.period is not None and rec.period.period is not None
        }
        assert {1, 2, 4} <= periods

    def test_low_memory_chaotic_band(self, records):
        chaotic = [
            rec for rec in records
            if rec.param_value < 0.45 and rec.classification == "aperiodic"
        ]
        assert len(chaotic) >= 5
        for rec in chaotic:
            assert rec.lyapunov_top > 1e-3

    def test_below_crisis_everything_escapes(self, records):
        for rec in records:
            if rec.param_value < 0.26:
                assert rec.classification == "infeasible"
                assert rec.survival_fraction == 0.0
                assert rec.samples.shape[0] == 0

    def test_samples_all_from_survivors(self, records):
        for rec in records:
            if rec.samples.shape[0]:
                assert np.all(rec.samples >= 1.0)
                assert rec.survival_fraction > 0

    def test_reproducibility(self, records):
        again = run_sweep(omega_sweep())
        for a, b in zip(records, again):
            assert a.param_value == b.param_value
            assert a.classification == b.classification
            assert np.array_equal(a.samples, b.samples)

    def test_parallel_matches_serial(self):
        spec = omega_sweep(resolution=13, record=210, transient=800)
        serial = run_sweep(spec, workers=1)
        parallel = run_sweep(spec, workers=2)
        for a, b in zip(serial, parallel):
            assert a.param_value == b.param_value
            assert a.classification == b.classification
            assert np.array_equal(a.samples, b.samples)

    def test_refinement_preserves_shared_points(self):
        coarse_spec = omega_sweep(lo=0.3, hi=0.9, resolution=7, record=210)
        fine_spec = omega_sweep(lo=0.3, hi=0.9, resolution=13, record=210)
        coarse = run_sweep(coarse_spec)
        fine = run_sweep(fine_spec)
        for i, rec in enumerate(coarse):
            twin = fine[2 * i]
            assert twin.param_value == rec.param_value
            assert twin.classification == rec.classification


class TestWeightSweep:
    def test_regime_change_matches_skew_endpoints(self):
        spec = SweepSpec(
            axis="pi1",
            bounds=(0.0, 1.0),
            resolution=5,
            fixed=two_bank(0.5, 0.3, 0.5),
            transient=3000,
            record=400,
            initials_per_point=3,
            rng_seed=5,
        )
        records = run_sweep(spec)
        # pi1 = 0: bank 2 (memory 0.3) drives; chaotic
        left = forcing_response_classification(0.5, 0.3, STD1, transient=4000)
        assert records[0].classification == left.forcing_class == "aperiodic"
        # pi1 = 1: bank 1 (memory 0.5) drives; period 4
        right = forcing_response_classification(0.3, 0.5, STD1, transient=4000)
        assert right.forcing_period.period == 4
        assert records[-1].classification == f"period-{right.forcing_period.period}"
        assert records[0].classification != records[-1].classification


class TestMemory1Sweep:
    def test_critical_memory_splits_regimes(self):
        spec = SweepSpec(
            axis="omega1",
            bounds=(0.3, 1.0),
            resolution=15,
            fixed=two_bank(0.5, 0.4, 0.5),
            transient=2500,
            record=400,
            initials_per_point=3,
            rng_seed=11,
        )
        records = run_sweep(spec)
        classes = [r.classification for r in records]
        assert classes[-1] == "fixed-point"
        assert any(c == "aperiodic" for c in classes)
        first_fp = min(i for i, c in enumerate(classes) if c == "fixed-point")
        assert all(c == "fixed-point" for c in classes[first_fp:])


class TestStabilityMap:
    def test_full_memory_corner_and_diagonal(self):
        omegas = np.array([0.4, 0.58, 0.7, 1.0])
        result = stability_map(
            omegas, omegas, pi1=0.5, params=STD1,
            transient=2500, record=400, initials_per_point=2, rng_seed=3,
        )
        assert result.classes[-1, -1] == "fixed-point"
        # equal memories reduce to the single-bank system
        single = {}
        for i, w in enumerate(omegas):
            spec = SweepSpec(
                axis="omega", bounds=(0.2, 0.95), resolution=2,
                fixed=STD1, transient=2500, record=400,
                initials_per_point=2, rng_seed=3,
            )
            from levdyn.sweep import _eval_point

            single[w] = _eval_point(spec, float(w)).classification
        for i, w in enumerate(omegas):
            assert result.classes[i, i] == single[w]

    def test_dominant_bank_rows_constant(self):
        omega1s = np.linspace(0.3, 0.9, 10)
        omega2s = np.linspace(0.3, 0.9, 5)
        result = stability_map(
            omega1s, omega2s, pi1=0.999, params=STD1,
            transient=2500, record=400, initials_per_point=2, rng_seed=3,
        )
        constant_rows = sum(
            1 for i in range(len(omega1s)) if len(set(result.classes[i])) == 1
        )
        assert constant_rows / len(omega1s) >= 0.9

    def test_grid_too_small_rejected(self):
        with pytest.raises(ValueError):
            stability_map(np.array([0.5]), np.array([0.4, 0.6]), 0.5, STD1)

    def test_parallel_matches_serial(self):
        omegas = np.array([0.5, 0.7, 0.9])
        kwargs = dict(
            pi1=0.5, params=STD1, transient=1500, record=300,
            initials_per_point=2, rng_seed=3,
        )
        serial = stability_map(omegas, omegas, **kwargs)
        parallel = stability_map(omegas, omegas, workers=2, **kwargs)
        assert np.array_equal(serial.classes, parallel.classes)
