import numpy as np
import pytest

from clusterlab.circuit import build_ansatz
from clusterlab.enums.analysis import BlockMode
from clusterlab.enums.model import Boundary
from clusterlab.exceptions import FitError
from clusterlab.model import ModelParams, build_hamiltonian
from clusterlab.oracle import low_lying_states
from clusterlab.pauli import expectation
from clusterlab.prep import (
    PrepConfig,
    evaluate_schedule,
    extrapolate_schedule,
    fit_extrapolation,
    optimize_energy_phase,
    optimize_overlap_phase,
    overlap_loss,
    run_prep_study,
    schedule_symmetry_defect,
)
from clusterlab.schedule import ParamSchedule
from clusterlab.sim import DenseState

FAST = PrepConfig(restarts=0, max_iterations=60)


def _energy(p: ModelParams, sched: ParamSchedule) -> float:
    state = DenseState.zero(p.L).evolved(build_ansatz(p, sched))
    return expectation(state, build_hamiltonian(p))


class TestFitExtrapolation:
    def test_constant_input(self) -> None:
        fit = fit_extrapolation([8, 10, 12, 14], [0.7] * 4)
        assert fit.a == 0
        assert fit.c == pytest.approx(0.7)
        assert fit(100) == pytest.approx(0.7)

    def test_recovers_a_power_law(self) -> None:
        sizes = [8, 10, 12, 14, 16]
        values = [0.8 * (L + 2.0) ** -1.5 + 0.3 for L in sizes]
        fit = fit_extrapolation(sizes, values)
        assert fit.residual < 1e-8
        assert fit(40) == pytest.approx(0.8 * 42**-1.5 + 0.3, abs=1e-5)

    def test_needs_four_sizes(self) -> None:
        with pytest.raises(FitError, match="4 sizes"):
            fit_extrapolation([8, 10, 12], [0.1, 0.2, 0.3])


class TestExtrapolateSchedule:
    def test_uniform_offsets(self) -> None:
        def offsets(L: int) -> list[float]:
            return [0.2 * j + 1.0 / L for j in range(5)]

        schedules = {L: ParamSchedule.uniform(offsets(L)) for L in (8, 10, 12, 14, 16)}
        extrapolation = extrapolate_schedule(schedules)
        assert extrapolation.mode is BlockMode.UNIFORM
        np.testing.assert_allclose(extrapolation.schedule(40).offsets, offsets(40), atol=1e-4)

    def test_powerlaw_keeps_exponents(self) -> None:
        exponents = [-0.5, -1.0, -1.5, -2.0, -0.8]
        schedules = {
            L: ParamSchedule.powerlaw([0.1] * 5, exponents, [0.4 - 1.0 / L] * 5).with_epsilons(
                [0.05] * 5
            )
            for L in (8, 10, 12, 14)
        }
        sched = extrapolate_schedule(schedules).schedule(30)
        assert [block.b for block in sched.blocks] == exponents
        assert sched.blocks[0].a == pytest.approx(0.15)

    def test_needs_four_sizes(self) -> None:
        with pytest.raises(FitError):
            extrapolate_schedule({8: ParamSchedule.zero(), 10: ParamSchedule.zero()})


class TestOverlapLoss:
    def test_single_target(self, rng: np.random.Generator) -> None:
        state = DenseState.from_vector(rng.normal(size=16))
        assert overlap_loss(state, [state]) == pytest.approx(0, abs=1e-12)

    def test_two_state_weight(self) -> None:
        t0 = DenseState.from_vector([1, 0, 0, 0])
        t1 = DenseState.from_vector([0, 1, 0, 0])
        psi = DenseState.from_vector([1, 1, 1, 1])
        assert overlap_loss(psi, [t0]) == pytest.approx(0.5)
        assert overlap_loss(psi, [t0, t1]) == pytest.approx(1 - np.sqrt(0.5))


class TestEnergyPhase:
    def test_improves_on_zero_angles(self) -> None:
        p = ModelParams.critical(8)
        result = optimize_energy_phase(p, None, FAST)
        assert result.schedule.is_uniform
        assert result.loss <= _energy(p, ParamSchedule.zero()) + 1e-12
        assert result.loss == pytest.approx(_energy(p, result.schedule))

    def test_trace_never_rises(self) -> None:
        result = optimize_energy_phase(ModelParams.critical(8), None, FAST)
        assert np.all(np.diff(result.trace) <= 1e-10)

    def test_open_chain_is_mirror_symmetric(self) -> None:
        p = ModelParams.critical(8, Boundary.OBC)
        result = optimize_energy_phase(p, None, FAST)
        assert not result.schedule.is_uniform
        assert schedule_symmetry_defect(p, result.schedule) == 0
        assert all(block.b < 0 for block in result.schedule.blocks)

    @pytest.mark.slow
    def test_open_chain_energy_distance(self) -> None:
        p = ModelParams.critical(8, Boundary.OBC)
        result = optimize_energy_phase(p)
        record = evaluate_schedule(p, result.schedule)
        assert record.energy_distance < 0.015

    @pytest.mark.slow
    def test_gradient_vanishes_at_the_optimum(self) -> None:
        p = ModelParams.critical(8)
        result = optimize_energy_phase(p, None, PrepConfig(restarts=1))
        step = 1e-5
        offsets = np.array(result.schedule.offsets)
        grad = []
        for k in range(5):
            shift = np.zeros(5)
            shift[k] = step
            up = _energy(p, ParamSchedule.uniform(offsets + shift))
            down = _energy(p, ParamSchedule.uniform(offsets - shift))
            grad.append((up - down) / (2 * step))
        assert np.linalg.norm(grad) < 1e-4


class TestOverlapPhase:
    def test_only_epsilons_move_on_open_chains(self) -> None:
        p = ModelParams.critical(8, Boundary.OBC)
        base = optimize_energy_phase(p, None, FAST).schedule
        result = optimize_overlap_phase(p, base, None, FAST)
        assert result.schedule.blocks == base.blocks
        assert result.loss <= result.trace[0] + 1e-12

    def test_only_offsets_move_on_rings(self) -> None:
        p = ModelParams.critical(8)
        base = optimize_energy_phase(p, None, FAST).schedule
        result = optimize_overlap_phase(p, base, None, FAST)
        assert result.schedule.is_uniform
        assert result.schedule.epsilons == base.epsilons

    def test_restart_from_optimum_is_a_fixed_point(self) -> None:
        p = ModelParams.critical(8)
        base = optimize_energy_phase(p, None, FAST).schedule
        cfg = PrepConfig(restarts=0)
        first = optimize_overlap_phase(p, base, None, cfg)
        second = optimize_overlap_phase(p, first.schedule, None, cfg)
        assert second.loss == pytest.approx(first.loss, abs=1e-6)

    @pytest.mark.slow
    def test_open_chain_overlap(self) -> None:
        p = ModelParams.critical(8, Boundary.OBC)
        base = optimize_energy_phase(p).schedule
        result = optimize_overlap_phase(p, base)
        assert 1 - result.loss >= 0.9

    @pytest.mark.slow
    def test_ring_two_state_weight(self) -> None:
        base = optimize_energy_phase(ModelParams.critical(8)).schedule
        p = ModelParams.critical(16)
        targets = low_lying_states(p, count=2).states
        result = optimize_overlap_phase(p, base, targets=targets)
        assert 1 - result.loss >= 0.8


class TestStudy:
    def test_too_few_sizes_skip_extrapolation(self) -> None:
        report = run_prep_study([8, 10], Boundary.PBC, FAST, validate=[12])
        assert report.extrapolation is None
        assert sorted(report.schedules) == [8, 10]
        for record in report.records:
            assert len(record.overlaps) == 2
            assert all(0 <= o <= 1 + 1e-9 for o in record.overlaps)
            assert record.energy_distance >= -1e-9

    @pytest.mark.slow
    def test_extrapolated_schedules_hold_up(self) -> None:
        report = run_prep_study([8, 10, 12, 14, 16], Boundary.PBC, validate=[18, 20])
        assert report.extrapolation is not None
        held_out = [r for r in report.records if r.extrapolated]
        assert [r.L for r in held_out] == [18, 20]
        for record in held_out:
            direct = optimize_overlap_phase(
                ModelParams.critical(record.L), record.schedule
            ).loss
            achieved = 1 - np.sqrt(sum(o**2 for o in record.overlaps))
            assert achieved - direct < 0.02
