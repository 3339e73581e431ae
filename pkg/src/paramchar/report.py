"""JSON run reports and the chi heat-map CSV format."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .qcore import NORMALIZATIONS, ProcessMatrix, pauli_labels

REPORT_VERSION = 1
CHI_CSV_HEADER = ("row_label", "col_label", "re", "im")


def matrix_to_json(M):
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def matrix_from_json(data):
    return np.array(data["re"], dtype=float) + 1j * np.array(data["im"], dtype=float)


@dataclass
class ProtocolResult:
    """One protocol's estimate, with its chi normalization recorded alongside."""

    n: int
    normalization: str
    chi: dict
    metrics: dict
    unitary: dict | None = None

    @classmethod
    def build(cls, chi, metrics, unitary=None):
        return cls(chi.n, chi.normalization, matrix_to_json(chi.chi), dict(metrics),
                   None if unitary is None else matrix_to_json(unitary))

    def process_matrix(self):
        return ProcessMatrix(self.n, matrix_from_json(self.chi), self.normalization)


@dataclass
class ProcessReport:
    config: dict
    protocols: dict
    resource_counts: dict
    calibration: dict | None = None
    comparison: dict | None = None
    unitarity_residual: float | None = None
    cycle_inconsistency: float | None = None
    warnings: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    schema_version: int = REPORT_VERSION

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if data.get("schema_version") != REPORT_VERSION:
            raise InvalidArgumentError(f"unsupported report schema_version {data.get('schema_version')!r}")
        data["protocols"] = {k: ProtocolResult(**v) for k, v in data["protocols"].items()}
        for p in data["protocols"].values():
            if p.normalization not in NORMALIZATIONS:
                raise InvalidArgumentError(f"unknown normalization {p.normalization!r}")
        return cls(**data)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.loads(fh.read())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"cannot read report {path}: {exc}") from exc


def chi_rows(M, n):
    labels = pauli_labels(n)
    M = np.asarray(M, dtype=complex)
    for a, ra in enumerate(labels):
        for b, rb in enumerate(labels):
            yield ra, rb, repr(float(M[a, b].real)), repr(float(M[a, b].imag))


def write_chi_csv(path, M, n):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHI_CSV_HEADER)
        w.writerows(chi_rows(M, n))


def read_chi_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    d = int(round(len(rows) ** 0.5))
    if d * d != len(rows):
        raise InvalidArgumentError(f"{path}: {len(rows)} entries is not a square matrix")
    return np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows]).reshape(d, d)
