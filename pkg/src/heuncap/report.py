"""
Text emitters: the LaTeX table of a proof run, CSV data files, PGM images and
the run manifest. Every emitter returns or writes a deterministic byte stream
for identical inputs.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import BasinGrid, CascadeScan, CellClass, SinkOrbit
from .engine import ProofResult

__all__ = [
    "RUN1_PREFIX",
    "emit_latex_table",
    "history_csv",
    "basin_csv",
    "points_csv",
    "cobweb_csv",
    "bifurcation_csv",
    "stability_csv",
    "sink_text",
    "RunManifest",
]

RUN1_PREFIX = "Sink Point"

_HEAD = [
    r"\begin{table}[ht]",
    r"  \centering",
    r"  \begin{tabular*}{\textwidth}{@{\extracolsep{\fill}} l r r r r @{}}",
    r"    \toprule",
    r"    \textbf{Initial Set} & \textbf{Step} & \textbf{Active Boxes} & "
    r"\textbf{Absorbed} & \textbf{Snapped} \\",
    r"    \midrule",
]

_TAIL = [
    r"    \bottomrule",
    r"  \end{tabular*}",
    r"  \vspace{0.5em}",
    r"  \caption{Dynamics of the interval cloud during the computer-assisted proof. "
    r"The cloud is fully absorbed by the period-4 sink.}",
    r"  \label{tab:cap_output}",
    r"\end{table}",
]


def _rows(result: ProofResult) -> list[str]:
    out = []
    for st in result.history:
        label = result.label if st.step == 1 else ""
        out.append(f"    {label} & {st.step} & {st.active} & {st.absorbed} & {st.snapped} \\\\")
    if not result.history:
        out.append(f"    {result.label} & -- & -- & -- & -- \\\\")
    return out


def _note(text: str) -> list[str]:
    return [r"    \midrule", rf"    \multicolumn{{5}}{{c}}{{\textit{{{text}}}}} \\"]


def _section(title: str) -> list[str]:
    return [rf"    \multicolumn{{5}}{{c}}{{\textbf{{{title}}}}} \\", r"    \midrule"]


def emit_latex_table(results: Sequence[ProofResult]) -> str:
    """Five-column LaTeX table of proof histories.

    Results labelled ``Sink Point i`` form the first section, everything else
    the second. A section closes with a success line only when all of its
    proofs succeeded; otherwise the failing labels and reasons are listed.
    """
    if not results:
        raise ValueError("at least one proof result is required")
    run1 = [r for r in results if r.label.startswith(RUN1_PREFIX)]
    run2 = [r for r in results if not r.label.startswith(RUN1_PREFIX)]
    lines = list(_HEAD)
    if run1:
        lines += _section("Run 1: Invariance of Sink Neighborhoods")
        for r in run1:
            lines += _rows(r)
        lines += _summary(run1, "All sink neighborhoods fully invariant.")
    if run2:
        if run1:
            lines.append(r"    \midrule")
        lines += _section("Run 2: Trajectory of (1,1)")
        for r in run2:
            lines += _rows(r)
        lines += _summary(run2, "Cloud fully absorbed.")
    lines += _TAIL
    return "\n".join(lines) + "\n"


def _summary(results, ok_text):
    bad = [r for r in results if not r.success]
    if not bad:
        return _note("Success: " + ok_text)
    out = []
    for r in bad:
        out += _note(f"Failure: {_tex_escape(r.label)} -- {_tex_escape(r.reason)}.")
    return out


def _tex_escape(text: str) -> str:
    # labels may already carry math; only escape characters that break a cell
    return text.replace("&", r"\&").replace("%", r"\%").replace("#", r"\#")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x) -> str:
    return repr(float(x))


def history_csv(results: Iterable[ProofResult]) -> str:
    """``run_label,step,active,absorbed,snapped``, one row per proof step."""
    return _csv(
        ["run_label", "step", "active", "absorbed", "snapped"],
        [(r.label, s.step, s.active, s.absorbed, s.snapped) for r in results for s in r.history],
    )


def basin_csv(grid: BasinGrid) -> str:
    c1, c2 = grid.spec.centers()
    rows = []
    for j, y in enumerate(c2):
        for i, x in enumerate(c1):
            rows.append((_f(x), _f(y), CellClass(grid.cells[j, i]).name.lower()))
    return _csv(["x1", "x2", "class"], rows)


def points_csv(points: np.ndarray, escaped: bool = False) -> str:
    rows = [(k, _f(p[0]), _f(p[1])) for k, p in enumerate(points)]
    text = _csv(["n", "x1", "x2"], rows)
    return text + ("# escaped\n" if escaped else "")


def cobweb_csv(segments: np.ndarray) -> str:
    return _csv(["x_start", "y_start", "x_end", "y_end"],
                [tuple(_f(v) for v in s.ravel()) for s in segments])


def bifurcation_csv(scan: CascadeScan) -> str:
    """``lambda,orbit_value``; repeated cycle values are written once per lambda."""
    rows = []
    for lam, samples in zip(scan.lambda_values, scan.attractor_samples):
        if not np.all(np.isfinite(samples)):
            continue
        for v in np.unique(np.round(samples, 9)):
            rows.append((_f(lam), _f(v)))
    return _csv(["lambda", "orbit_value"], rows)


def stability_csv(z: np.ndarray, r: np.ndarray, boundary: np.ndarray) -> str:
    """Real-axis samples ``R(z)`` followed by points on ``|R(z)| = 1``."""
    rows = [("grid", _f(a), "0.0", _f(b)) for a, b in zip(z, r)]
    rows += [("boundary", _f(w.real), _f(w.imag), "1.0") for w in boundary]
    return _csv(["kind", "re_z", "im_z", "R"], rows)


def sink_text(orbit: SinkOrbit) -> str:
    lines = [f"{p!r}" for p in orbit.points]
    lines.append(f"# period {orbit.period}, residual {orbit.residual:.3e}, "
                 f"multiplier {orbit.multiplier:.6f}")
    return "\n".join(lines) + "\n"


@dataclass
class RunManifest:
    command: str
    config_text: str
    outputs: list[tuple[str, str, str]] = field(default_factory=list)
    wall_time: float = 0.0

    def write_output(self, directory: Path, name: str, fmt: str, data: str | bytes) -> Path:
        path = Path(directory) / name
        raw = data.encode("utf-8") if isinstance(data, str) else data
        path.write_bytes(raw)
        self.outputs.append((name, fmt, hashlib.sha256(raw).hexdigest()))
        return path

    def render(self) -> str:
        lines = [f"command: {self.command}", f"wall_time_s: {self.wall_time:.3f}", "outputs:"]
        lines += [f"  {name}\t{fmt}\tsha256:{digest}" for name, fmt, digest in self.outputs]
        lines.append("config:")
        lines += ["  " + ln for ln in self.config_text.splitlines()]
        return "\n".join(lines) + "\n"

    def verify(self, directory: Path) -> bool:
        for name, _, digest in self.outputs:
            path = Path(directory) / name
            if not path.exists() or hashlib.sha256(path.read_bytes()).hexdigest() != digest:
                return False
        return True
