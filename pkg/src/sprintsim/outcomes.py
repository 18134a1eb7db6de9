"""Joint photon x atom outcome statistics in the layout of the results table."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .branching import CLASSES, BranchingMatrix
from .dynamics import Trajectory, flux_layout
from .generator import build_basis

ATOM = ("toggle", "no_toggle", "lost")
PHOTON = ("R", "T", "L")
ATOM_LABELS = {"toggle": "Toggle", "no_toggle": "No toggle", "lost": "Atom lost"}


class ClassificationError(ValueError):
    pass


@dataclass
class OutcomeTable:
    """``joint[atom, photon]`` with atom in ATOM and photon in PHOTON order."""

    joint: np.ndarray
    residual_norm: float = 0.0
    n: int = 1
    stderr: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def cell(self, photon, atom):
        return float(self.joint[ATOM.index(atom), PHOTON.index(photon)])

    @property
    def photon_totals(self):
        return dict(zip(PHOTON, self.joint.sum(axis=0).tolist()))

    @property
    def atom_totals(self):
        return dict(zip(ATOM, self.joint.sum(axis=1).tolist()))

    @property
    def total(self):
        return float(self.joint.sum())

    @property
    def fidelity(self):
        t = self.photon_totals
        return t["R"] / (t["R"] + t["T"])

    @property
    def toggle_given_R(self):
        return self.cell("R", "toggle") / self.photon_totals["R"]

    def wilson(self, z=1.96):
        """Wilson score interval per cell, treating each cell as a binomial rate over n draws."""
        p = np.clip(self.joint, 0.0, 1.0)
        n = self.n
        den = 1 + z * z / n
        centre = (p + z * z / (2 * n)) / den
        half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
        return centre - half, centre + half

    def to_dict(self):
        lo, hi = self.wilson()
        doc = {
            "joint": {a: dict(zip(PHOTON, row)) for a, row in zip(ATOM, self.joint.tolist())},
            "marginals": {"photon": self.photon_totals, "atom": self.atom_totals},
            "derived": {"fidelity": self.fidelity, "toggle_given_R": self.toggle_given_R},
            "residual_norm": self.residual_norm,
            "n": self.n,
            "wilson95": {
                "low": {a: dict(zip(PHOTON, row)) for a, row in zip(ATOM, lo.tolist())},
                "high": {a: dict(zip(PHOTON, row)) for a, row in zip(ATOM, hi.tolist())},
            },
            "metadata": self.metadata,
        }
        if self.stderr is not None:
            doc["stderr"] = {a: dict(zip(PHOTON, row)) for a, row in zip(ATOM, self.stderr.tolist())}
        return doc

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc):
        joint = np.array([[doc["joint"][a][p] for p in PHOTON] for a in ATOM])
        stderr = None
        if "stderr" in doc:
            stderr = np.array([[doc["stderr"][a][p] for p in PHOTON] for a in ATOM])
        return cls(joint, doc["residual_norm"], doc["n"], stderr, doc.get("metadata", {}))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_csv(self, percent=True):
        """Table layout: atom outcome rows, R/T/L/Total columns, Total row."""
        scale = 100.0 if percent else 1.0
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["", "R", "T", "L", "Total"])
        for a, row in zip(ATOM, self.joint):
            w.writerow([ATOM_LABELS[a]] + [f"{scale * v:.2f}" for v in row] + [f"{scale * row.sum():.2f}"])
        col = self.joint.sum(axis=0)
        w.writerow(["Total"] + [f"{scale * v:.2f}" for v in col] + [f"{scale * col.sum():.2f}"])
        return buf.getvalue()


def _atom_class(ground, initial, scheme):
    if ground == initial:
        return ATOM.index("no_toggle")
    if ground in scheme.sprint_pair:
        return ATOM.index("toggle")
    return ATOM.index("lost")


def classification_matrices(scheme, B: BranchingMatrix):
    """Linear map from the flux vector plus residual populations to the 3x3 table.

    Returns ``(W_flux, W_pop)`` with shapes (nflux, 9) and (dim, 9) so that
    ``joint.ravel() = flux @ W_flux + |psi|^2 @ W_pop``.
    """
    init = scheme.initial_ground
    if init not in scheme.sprint_pair:
        raise ClassificationError(f"initial ground {init!r} is not a SPRINT ground state")
    if tuple(B.rows) != tuple(scheme.excited_labels):
        raise ClassificationError("branching rows do not match the scheme's excited states")
    cols = flux_layout(scheme)
    Wf = np.zeros((len(cols), 9))
    L = PHOTON.index("L")

    def class_of(cls):
        return ATOM.index("lost") if cls == "F2" else _atom_class(cls, init, scheme)

    for i, (chan, lab) in enumerate(cols):
        if chan == "sp":
            for cls, w in zip(CLASSES, B.row(lab)):
                if w:
                    Wf[i, class_of(cls) * 3 + L] += w
        else:
            photon = {"T": "T", "R": "R", "Li": "L"}[chan]
            Wf[i, _atom_class(lab, init, scheme) * 3 + PHOTON.index(photon)] = 1.0

    index = build_basis(scheme)
    Wp = np.zeros((len(index), 9))
    Wp[0, _atom_class(init, init, scheme) * 3 + L] = 1.0
    for k in scheme.grounds:
        for mode in ("a", "b"):
            Wp[index[f"{mode}:{k}"], _atom_class(k, init, scheme) * 3 + L] = 1.0
    for e in scheme.excited_labels:
        for cls, w in zip(CLASSES, B.row(e)):
            if w:
                Wp[index[e], class_of(cls) * 3 + L] += w
    return Wf, Wp


def classify(traj: Trajectory, B: BranchingMatrix, initial_ground=None) -> OutcomeTable:
    """Sort one trajectory's fluxes into the joint outcome table.

    Residual population left at the end of the window counts as photon loss.
    """
    scheme = traj.scheme
    if initial_ground is not None and initial_ground != scheme.initial_ground:
        raise ClassificationError("initial ground does not match the trajectory's generator")
    cols = flux_layout(scheme)
    flux = np.array([
        {"T": traj.flux_T, "R": traj.flux_R, "Li": traj.flux_Li, "sp": traj.flux_sp}[c][lab]
        for c, lab in cols
    ])
    Wf, Wp = classification_matrices(scheme, B)
    if flux.shape[0] != Wf.shape[0]:
        raise ClassificationError("flux / branching dimension mismatch")
    pop = np.abs(traj.final_state.amplitudes) ** 2
    joint = (flux @ Wf + pop @ Wp).reshape(3, 3)
    return OutcomeTable(joint, residual_norm=traj.residual_norm)
