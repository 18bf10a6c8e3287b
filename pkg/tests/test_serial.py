import numpy as np
import pytest

from serial._compat import DataErrorGroup
from serial.checkpoint import CHECKPOINT_VERSION, MAGIC, dump_mps, to_mps
from serial.circuits import dump_circuit, dump_schedule, to_circuit, to_schedule
from serial.config import (
    LabConfig,
    config_reference,
    key_lines,
    line_of,
    to_lab_config,
)
from serial.exceptions import (
    DataTypeError,
    DataValueError,
    DataVersionError,
    UnknownKeyError,
    iter_leaves,
)
from serial.paulis import dump_pauli_sum, to_pauli_sum
from serial.records import dump_records, to_dataset
from serial.reports import (
    PREP_SCHEMA,
    dump_model,
    dump_prep_report,
    load_document,
    to_model,
    to_prep_report,
)
from serial.utils import assert_type, check_schema

from clusterlab.circuit import build_ansatz
from clusterlab.eht import collect_dataset
from clusterlab.enums.analysis import GMode, ZneModel
from clusterlab.enums.model import Boundary, CutKind
from clusterlab.model import CutConfig, ModelParams, build_hamiltonian
from clusterlab.mps import MPSState
from clusterlab.prep import PrepReport, SizeRecord
from clusterlab.schedule import ParamSchedule
from clusterlab.sim import DenseState


def _leaves(exc: pytest.ExceptionInfo[BaseException]) -> list[str]:
    return [str(error) for error in iter_leaves(exc.value)]  # pyright: ignore[reportArgumentType]


class TestConfig:
    def test_empty_file_gives_defaults(self) -> None:
        config = to_lab_config("")
        assert config.model.params.L == 12
        assert config.eht.window_size == 8
        assert config.zne.factors == (1.0, 1.5, 2.0, 2.5, 3.0)
        assert config.gfunction.mode is GMode.EXACT

    def test_reference_reads_back_as_the_defaults(self) -> None:
        assert to_lab_config(config_reference()) == to_lab_config("")

    def test_sections_are_parsed(self) -> None:
        text = """
[run]
seed = 7

[model]
L = 16
boundary = "obc"
cut_a = "up"

[zne]
model = "exponential"
factors = [1, 2, 3]
"""
        config = to_lab_config(text)
        assert config.run.seed == 7
        assert config.model.params.L == 16
        assert config.model.params.boundary is Boundary.OBC
        assert config.model.cut.cut_a is CutKind.UP
        assert config.zne.model is ZneModel.EXPONENTIAL
        assert config.zne.factors == (1.0, 2.0, 3.0)
        assert config.zne.seed == 7

    def test_overrides_win(self) -> None:
        config = to_lab_config("[model]\nL = 16\n", overrides={"model": {"L": 10}})
        assert config.model.params.L == 10

    def test_errors_are_collected(self) -> None:
        text = '[model]\nL = "twelve"\n\n[eht]\nwindow = 3\n'
        with pytest.raises(DataErrorGroup) as info:
            to_lab_config(text)

        errors = list(iter_leaves(info.value))
        assert {type(e) for e in errors} == {DataTypeError, UnknownKeyError}
        lines = key_lines(text)
        assert sorted(line_of(e, lines) for e in errors) == [2, 5]

    def test_unknown_section(self) -> None:
        with pytest.raises(DataErrorGroup) as info:
            to_lab_config("[plots]\nx = 1\n")
        assert any("plots" in message for message in _leaves(info))

    def test_invalid_values_are_anchored_to_their_section(self) -> None:
        with pytest.raises(DataErrorGroup) as info:
            to_lab_config("[zne]\nfactors = [0.5, 1]\n")
        (error,) = iter_leaves(info.value)
        assert isinstance(error, DataValueError)
        assert error.at == ("zne",)

    def test_bad_toml(self) -> None:
        with pytest.raises(DataErrorGroup):
            to_lab_config("[model\nL = 3")

    def test_default_object(self) -> None:
        assert LabConfig().run.workers == 1


class TestRecords:
    def test_round_trip(self, rng: np.random.Generator) -> None:
        state = DenseState.from_vector(rng.normal(size=8))
        dataset = collect_dataset(state, 5, 40, seed=3)
        text = dump_records(dataset)
        assert text.splitlines()[0] == "setting_id,basis_string,bitstring,count"
        again = to_dataset(text)
        assert again.bases == dataset.bases
        assert again.counts == dataset.counts
        assert again.shots == 40

    def test_wrong_columns(self) -> None:
        with pytest.raises(DataErrorGroup):
            to_dataset("setting,basis,bits,count\n0,Z,0,1\n")

    def test_every_bad_line_is_reported(self) -> None:
        text = (
            "setting_id,basis_string,bitstring,count\n"
            "0,ZX,01,3\n"
            "0,ZX,012,1\n"
            "0,ZX,11,many\n"
        )
        with pytest.raises(DataErrorGroup) as info:
            to_dataset(text, source="m.csv")
        messages = _leaves(info)
        assert len(messages) == 2
        assert any("line 3" in m for m in messages)
        assert any("line 4" in m for m in messages)

    def test_settings_must_be_in_order(self) -> None:
        text = "setting_id,basis_string,bitstring,count\n1,Z,0,3\n"
        with pytest.raises(DataErrorGroup):
            to_dataset(text)


class TestPauliText:
    def test_round_trip(self) -> None:
        H = build_hamiltonian(ModelParams.critical(6))
        again = to_pauli_sum(dump_pauli_sum(H))
        assert again.num_sites == 6
        assert again.hermitian == H.hermitian
        np.testing.assert_allclose(again.to_dense(), H.to_dense())

    def test_malformed_factors(self) -> None:
        text = "# L=3\n1.0,0.0 0:Z 1:Q\n-1.0,0.0 2:X\n0.5 1:X\n"
        with pytest.raises(DataErrorGroup) as info:
            to_pauli_sum(text, source="h.txt")
        messages = _leaves(info)
        assert len(messages) == 2
        assert any("'1:Q'" in m for m in messages)
        assert any("coefficient" in m for m in messages)

    def test_missing_header(self) -> None:
        with pytest.raises(DataErrorGroup) as info:
            to_pauli_sum("1.0,0.0 0:Z\n")
        assert any("header" in m for m in _leaves(info))


class TestCircuits:
    def test_round_trip(self, rng: np.random.Generator) -> None:
        p = ModelParams.critical(6)
        c = build_ansatz(p, ParamSchedule.uniform(rng.uniform(-1, 1, 5)), CutConfig.of_label("u0"))
        assert to_circuit(dump_circuit(c)) == c

    def test_schedule(self) -> None:
        sched = ParamSchedule.powerlaw([0.1] * 5, [-1.0] * 5, [0.2] * 5).with_epsilons([0.3] * 5)
        assert to_schedule(dump_schedule(sched)) == sched

    def test_unknown_layer_kind(self) -> None:
        data = {
            "schema": "circuit/1",
            "num_sites": 2,
            "boundary": "pbc",
            "layers": [{"kind": "swap"}, {"kind": "cz", "pairs": [[0, 1, 2]]}],
        }
        with pytest.raises(DataErrorGroup) as info:
            to_circuit(data)
        assert len(_leaves(info)) == 2

    def test_newer_schema(self) -> None:
        data = {"schema": "circuit/2", "num_sites": 2, "boundary": "pbc", "layers": []}
        with pytest.raises(DataVersionError):
            to_circuit(data)


class TestReports:
    def test_prep_report_round_trip(self) -> None:
        sched = ParamSchedule.uniform([0.1, 0.2, 0.3, 0.4, 0.5])
        report = PrepReport(
            boundary=Boundary.PBC,
            base=sched,
            records=[
                SizeRecord(
                    L=8,
                    boundary=Boundary.PBC,
                    schedule=sched,
                    energy_distance=0.01,
                    overlaps=(0.7, 0.6),
                    trace=(0.5, 0.4),
                )
            ],
        )
        document = dump_prep_report(report)
        load_document(document, PREP_SCHEMA)
        again = to_prep_report(document)
        assert again.schedules == report.schedules
        assert again.records == report.records
        assert again.extrapolation is None

    def test_model_round_trip(self) -> None:
        p = ModelParams.critical(10, Boundary.OBC)
        document = dump_model(p, CutConfig.of_label("ud"))
        assert document["cut_a"] == "up"
        assert to_model(document) == p

    def test_model_rejects_bad_sizes(self) -> None:
        document = dump_model(ModelParams.critical(10)) | {"L": 2}
        with pytest.raises(DataValueError):
            to_model(document)

    def test_wrong_kind(self) -> None:
        with pytest.raises(DataValueError, match="prep-report"):
            load_document({"schema": "zne/1"}, PREP_SCHEMA)


class TestCheckpoint:
    def test_round_trip(self) -> None:
        state = MPSState.random(6, 4, seed=1)
        again, meta = to_mps(dump_mps(state, {"energy": -1.5}))
        assert meta["energy"] == -1.5
        assert abs(again.inner(state)) == pytest.approx(1)

    def test_bad_magic(self) -> None:
        with pytest.raises(DataValueError, match="magic"):
            to_mps(b"NOTMPS" + bytes(10))

    def test_newer_version(self) -> None:
        data = bytearray(dump_mps(MPSState.zero(2)))
        data[len(MAGIC)] = CHECKPOINT_VERSION + 1
        with pytest.raises(DataVersionError):
            to_mps(bytes(data))


class TestAssertions:
    def test_booleans_are_not_numbers(self) -> None:
        with pytest.raises(DataTypeError):
            assert_type(int, True)

    def test_integers_pass_as_floats(self) -> None:
        value = assert_type(float, 3)
        assert value == 3.0
        assert isinstance(value, float)

    def test_enum_names(self) -> None:
        assert assert_type(Boundary, "OBC") is Boundary.OBC
        with pytest.raises(DataTypeError):
            assert_type(Boundary, "open")

    def test_schema(self) -> None:
        check_schema({"schema": "eht/1"}, "eht", 1)
        with pytest.raises(DataVersionError):
            check_schema({"schema": "eht/x"}, "eht", 1)
