from .checkpoint import dump_mps, to_mps
from .circuits import dump_circuit, dump_schedule, to_circuit, to_schedule
from .config import LabConfig, config_reference, to_lab_config
from .paulis import dump_pauli_sum, to_pauli_sum
from .records import dump_records, to_dataset
from .reports import dump_prep_report, load_document, to_prep_report

__all__ = (
    "LabConfig",
    "config_reference",
    "dump_circuit",
    "dump_mps",
    "dump_pauli_sum",
    "dump_prep_report",
    "dump_records",
    "dump_schedule",
    "load_document",
    "to_circuit",
    "to_dataset",
    "to_lab_config",
    "to_mps",
    "to_pauli_sum",
    "to_prep_report",
    "to_schedule",
)
