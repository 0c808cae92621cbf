"""Convergence-study orchestration and table/plot-data emission.

A study walks a ladder of resolutions; each entry runs the full pipeline
(mesh, classification, bases, assembly, solve, recovery, norms).  A ladder
entry ``n`` subdivides each domain axis into ``n`` cells and is reported
verbatim in the ``1/h`` column, matching the usual labelling of such tables
on the canonical two-unit-wide square.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    REPORT_COLUMNS,
    ConvergenceReport,
    h1_broken_error,
    hdiv_error,
    l2_error,
)
from .assembly import apply_dirichlet, assemble_load, assemble_stiffness, build_dofmap
from .basis import build_bases
from .fvm import all_fluxes, element_mean_source, recover_velocities
from .geometry import classify_elements
from .mesh import build_uniform_mesh
from .problems import circle_r3_problem
from .solver import cg_solve

SCHEMES = ("galerkin", "mixed_fvm")


class StageError(RuntimeError):
    """A pipeline stage failed; carries the ladder entry and stage name."""

    def __init__(self, inv_h, stage, cause):
        self.inv_h = inv_h
        self.stage = stage
        self.cause = cause
        super().__init__(f"ladder entry {inv_h}, stage {stage}: {cause}")


@dataclass
class StudyConfig:
    """Settings of a convergence study."""

    scheme: str = "mixed_fvm"
    beta_minus: float = 1.0
    beta_plus: float = 1000.0
    radius: float = 0.5
    ladder: tuple = (8, 16, 32, 64)
    rel_tol: float = 1e-12
    max_iter: int | None = None
    preconditioner: str = "none"
    out_csv: str | None = None
    out_plot: str | None = None
    problem: str = "circle_r3"
    custom_problem: object = None
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.beta_minus <= 0 or self.beta_plus <= 0:
            raise ValueError("beta_minus and beta_plus must be positive")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if len(self.ladder) < 1 or any(
            b <= a for a, b in zip(self.ladder, self.ladder[1:])
        ):
            raise ValueError("mesh ladder must be non-empty and strictly increasing")
        if any(n <= 0 for n in self.ladder):
            raise ValueError("ladder entries must be positive")
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.preconditioner not in ("none", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")
        if self.problem not in ("circle_r3", "custom"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.problem == "custom" and self.custom_problem is None:
            raise ValueError("problem 'custom' needs a custom_problem instance")
        return self

    def resolve_problem(self):
        if self.problem == "custom":
            return self.custom_problem
        return circle_r3_problem(
            self.beta_minus, self.beta_plus, self.radius, self.domain
        )


@dataclass
class ResolutionResult:
    """Everything one ladder entry produced (kept for inspection/tests)."""

    inv_h: float
    mesh: object
    cuts: list
    bases: list
    pressure: np.ndarray
    solve_report: object
    fbar: np.ndarray | None = None
    velocities: list | None = None
    fluxes: np.ndarray | None = None
    errors: dict = field(default_factory=dict)


def grid_shape(domain, inv_h):
    """Cells per axis for a ladder entry."""
    n = max(1, int(round(inv_h)))
    return n, n


def run_resolution(problem, inv_h, scheme="mixed_fvm", rel_tol=1e-12, max_iter=None,
                   preconditioner="none"):
    """Run the full pipeline at one resolution and measure errors."""

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            raise StageError(inv_h, name, exc) from exc

    nx, ny = grid_shape(problem.domain, inv_h)
    mesh = stage("mesh", lambda: build_uniform_mesh(nx, ny, problem.domain))
    cuts = stage("classify", lambda: classify_elements(mesh, problem.levelset))
    bases = stage(
        "basis", lambda: build_bases(mesh, cuts, problem.beta_minus, problem.beta_plus)
    )
    stiffness = stage(
        "assemble",
        lambda: assemble_stiffness(
            mesh, cuts, bases, problem.beta_minus, problem.beta_plus
        ),
    )
    mode = "cellmean" if scheme == "mixed_fvm" else "pointwise"
    load = stage(
        "load", lambda: assemble_load(mesh, cuts, bases, problem.source, mode)
    )
    dofmap = build_dofmap(mesh)
    system = stage(
        "dirichlet",
        lambda: apply_dirichlet(stiffness, load, mesh, dofmap, problem.boundary),
    )
    report = stage(
        "solve",
        lambda: cg_solve(
            system.matrix,
            system.rhs,
            rel_tol=rel_tol,
            max_iter=max_iter,
            preconditioner=preconditioner,
        ),
    )
    pressure = system.expand(report.x)

    result = ResolutionResult(
        inv_h=inv_h,
        mesh=mesh,
        cuts=cuts,
        bases=bases,
        pressure=pressure,
        solve_report=report,
    )
    errs = {}
    if problem.exact_p is not None:
        errs["p_l2"] = stage(
            "errors", lambda: l2_error(mesh, cuts, bases, pressure, problem.exact_p)
        )
    if problem.exact_p is not None and problem.exact_grad_p is not None:
        errs["p_h1"] = stage(
            "errors",
            lambda: h1_broken_error(
                mesh, cuts, bases, pressure, problem.exact_p, problem.exact_grad_p
            ),
        )
    if scheme == "mixed_fvm":
        fbar = stage(
            "velocity", lambda: element_mean_source(mesh, cuts, problem.source)
        )
        velocities = stage(
            "velocity", lambda: recover_velocities(mesh, cuts, bases, pressure, fbar)
        )
        result.fbar = fbar
        result.velocities = velocities
        result.fluxes = stage(
            "velocity", lambda: all_fluxes(mesh, cuts, bases, pressure, fbar)
        )
        if problem.exact_u is not None:
            u_l2, div_l2 = stage(
                "errors",
                lambda: hdiv_error(mesh, cuts, velocities, problem.exact_u, problem.source),
            )
            errs["u_l2"] = u_l2
            errs["div_l2"] = div_l2
    result.errors = errs
    return result


def run_study(config, keep_results=False):
    """Run a whole ladder; returns the :class:`ConvergenceReport`.

    Partial results are still written to the configured output files when a
    later ladder entry fails.  With ``keep_results=True`` the return value
    is ``(report, results)``.
    """
    config.validate()
    problem = config.resolve_problem()
    report = ConvergenceReport()
    results = []
    failure = None
    for inv_h in config.ladder:
        try:
            res = run_resolution(
                problem,
                inv_h,
                scheme=config.scheme,
                rel_tol=config.rel_tol,
                max_iter=config.max_iter,
                preconditioner=config.preconditioner,
            )
        except StageError as exc:
            failure = exc
            break
        report.add_row(inv_h, **res.errors)
        if keep_results:
            results.append(res)
    if config.out_csv:
        emit_csv(report, config.out_csv)
    if config.out_plot:
        emit_plotdata(report, config.out_plot)
    if failure is not None:
        raise failure
    if keep_results:
        return report, results
    return report


def _fmt(value):
    return format(value, ".6g")


def emit_csv(report, path):
    """Write the error table as CSV.

    Header row, one row per ladder entry (the per-step order cells are blank
    on the first row and for missing columns), and a final ``fit`` row with
    the least-squares orders in the order cells.
    """
    lines = [
        "inv_h,p_l2,p_l2_order,p_h1,p_h1_order,u_l2,u_l2_order,div_l2,div_l2_order"
    ]
    steps = {
        c: report.step_orders(c) if report.has_column(c) else None
        for c in REPORT_COLUMNS
    }
    for i, inv_h in enumerate(report.inv_h):
        cells = [_fmt(inv_h)]
        for c in REPORT_COLUMNS:
            if report.has_column(c):
                cells.append(_fmt(report.errors[c][i]))
                order = steps[c][i]
                cells.append("" if (i == 0 or order != order) else _fmt(order))
            else:
                cells.extend(["", ""])
        lines.append(",".join(cells))
    fits = report.fitted_orders()
    cells = ["fit"]
    for c in REPORT_COLUMNS:
        cells.append("")
        fit = fits[c]
        cells.append("" if fit != fit else _fmt(fit))
    lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_plotdata(report, path):
    """Write log10(h)-log10(error) blocks per norm for generic plot tools.

    Blocks are blank-line separated and begin with a ``# <column>`` comment;
    an unavailable column is emitted as its comment plus ``# skipped``.
    Values carry full precision so slopes refit from the file match the
    report's fitted orders.
    """
    blocks = []
    for c in REPORT_COLUMNS:
        lines = [f"# {c}"]
        if report.has_column(c) and len(report.inv_h) > 0:
            for inv_h, err in zip(report.inv_h, report.errors[c]):
                lines.append(
                    f"{format(np.log10(1.0 / inv_h), '.17g')} {format(np.log10(err), '.17g')}"
                )
        else:
            lines.append("# skipped")
        blocks.append("\n".join(lines))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n\n".join(blocks) + "\n")


def format_table(report):
    """Human-readable error table, one line per ladder entry."""
    header = f"{'1/h':>6}"
    for c in REPORT_COLUMNS:
        header += f" {c:>12} {'order':>7}"
    lines = [header]
    steps = {
        c: report.step_orders(c) if report.has_column(c) else None
        for c in REPORT_COLUMNS
    }
    for i, inv_h in enumerate(report.inv_h):
        line = f"{inv_h:>6g}"
        for c in REPORT_COLUMNS:
            if report.has_column(c):
                order = steps[c][i]
                order_s = "" if order != order else f"{order:.3f}"
                line += f" {report.errors[c][i]:>12.4e} {order_s:>7}"
            else:
                line += f" {'-':>12} {'':>7}"
        lines.append(line)
    fits = report.fitted_orders()
    line = f"{'fit':>6}"
    for c in REPORT_COLUMNS:
        fit = fits[c]
        fit_s = "-" if fit != fit else f"{fit:.3f}"
        line += f" {'':>12} {fit_s:>7}"
    lines.append(line)
    return "\n".join(lines)
