"""Parameter scans and deterministic CSV output."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import __version__, analytic, bare, darkstate, dressed
from .basis import enumerate_states
from .params import CPTError, InvalidParameterError, SystemParams

QUANTITIES = {
    "upper_population_numeric": ("bare",),
    "upper_population_dressed": ("dressed",),
    "upper_population_analytic": ("analytic",),
    "capacity_ratio": ("analytic",),
    "xi": ("analytic",),
    "dark_residual": ("bare",),
}
ROUTES = ("bare", "dressed", "analytic")
N_CAPS = {"bare": bare.MAX_ATOMS, "dressed": 40, "analytic": 10**6}
DARK_VECTOR_CAP = darkstate.MAX_VECTOR_ATOMS

PARAM_COLUMNS = SystemParams.field_names()
ALIASES = {"N": "n_atoms", "nbar": "nbar"}
COLUMNS = PARAM_COLUMNS + ("quantity", "route", "value", "per_atom", "residual", "tol", "flag", "reason")


class InvalidSpecError(CPTError, ValueError):
    pass


def fmt(value) -> str:
    """12 significant digits; integers verbatim; non-finite as 'nan'."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if not math.isfinite(value):
        return "nan"
    out = format(value, ".12g")
    return "0" if out == "-0" else out


def _canonical_var(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in PARAM_COLUMNS and name != "nbar":
        raise InvalidSpecError(
            f"unknown sweep variable {name!r}; expected one of {', '.join(PARAM_COLUMNS)}, N or nbar")
    return name


@dataclass(frozen=True)
class Sweep:
    """One scan axis. ``nbar`` sets ``nbar2`` and ``nbar3`` together."""
    var: str
    points: tuple[float, ...]
    source: str = ""
    """Grid definition ``var:start:stop:count[:log]`` when built from one."""

    def __post_init__(self):
        object.__setattr__(self, "var", _canonical_var(self.var))
        if len(self.points) < 2:
            raise InvalidSpecError(f"sweep over {self.var} needs at least 2 points")
        if self.var == "n_atoms":
            if any(p != int(p) or p < 1 for p in self.points):
                raise InvalidSpecError("N sweep points must be positive integers")
            object.__setattr__(self, "points", tuple(int(p) for p in self.points))
        else:
            object.__setattr__(self, "points", tuple(float(p) for p in self.points))

    @classmethod
    def grid(cls, var: str, start: float, stop: float, count: int, log: bool = False) -> "Sweep":
        if count < 2:
            raise InvalidSpecError("point count must be >= 2")
        if log:
            if start <= 0 or stop <= 0:
                raise InvalidSpecError("logarithmic sweeps need positive bounds")
            pts = np.geomspace(start, stop, count)
        else:
            pts = np.linspace(start, stop, count)
        if _canonical_var(var) == "n_atoms":
            if start != int(start) or stop != int(stop):
                raise InvalidSpecError("N sweep bounds must be integers")
            pts = np.round(pts)
            if len(set(pts)) != len(pts):
                raise InvalidSpecError(f"N sweep {start}..{stop} has repeated points at {count} steps")
        # round to the CSV precision so rows echo the exact values used
        points = tuple(float(fmt(p)) for p in pts)
        source = f"{var}:{fmt(start)}:{fmt(stop)}:{count}" + (":log" if log else "")
        return cls(var, points, source)

    @classmethod
    def parse(cls, text: str) -> "Sweep":
        """Parse ``var:start:stop:count[:log]``."""
        parts = text.split(":")
        if len(parts) not in (4, 5) or (len(parts) == 5 and parts[4] not in ("log", "lin")):
            raise InvalidSpecError(f"bad sweep {text!r}; expected var:start:stop:count[:log]")
        try:
            start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise InvalidSpecError(f"bad sweep {text!r}: {exc}") from None
        return cls.grid(parts[0], start, stop, count, log=len(parts) == 5 and parts[4] == "log")


@dataclass(frozen=True)
class ScanSpec:
    quantity: str
    sweeps: tuple[Sweep, ...]
    fixed: SystemParams
    route: str | None = None
    tol: float = 1e-10
    name: str = "custom"

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise InvalidSpecError(f"unknown quantity {self.quantity!r}; choose from {', '.join(QUANTITIES)}")
        route = self.route or QUANTITIES[self.quantity][0]
        if route not in ROUTES:
            raise InvalidSpecError(f"unknown route {route!r}")
        if route not in QUANTITIES[self.quantity]:
            raise InvalidSpecError(f"quantity {self.quantity} is not available on the {route} route")
        object.__setattr__(self, "route", route)
        if not 1 <= len(self.sweeps) <= 2:
            raise InvalidSpecError("a scan needs one or two sweep axes")
        if len({s.var for s in self.sweeps}) != len(self.sweeps):
            raise InvalidSpecError("sweep variables must be distinct")
        if not self.tol > 0:
            raise InvalidSpecError("tolerance must be positive")
        # fail fast on every grid point before any work is done
        for params in self.grid():
            self.check_point(params)

    def grid(self) -> Iterable[SystemParams]:
        """Parameter sets in row order (first sweep is the outer loop)."""
        for combo in itertools.product(*(s.points for s in self.sweeps)):
            changes = {}
            for sweep, value in zip(self.sweeps, combo):
                if sweep.var == "nbar":
                    changes.update(nbar2=value, nbar3=value)
                else:
                    changes[sweep.var] = value
            try:
                yield self.fixed.replace(**changes)
            except InvalidParameterError as exc:
                raise InvalidSpecError(str(exc)) from None

    def check_point(self, params: SystemParams) -> None:
        if params.delta != 0 and self.route != "bare":
            raise InvalidSpecError(f"route {self.route} needs delta = 0; detuned points require the bare route")
        cap = N_CAPS[self.route]
        if self.quantity == "dark_residual":
            cap = DARK_VECTOR_CAP
            if params.delta != 0:
                raise InvalidSpecError("dark_residual is defined at delta = 0 only")
        if params.n_atoms > cap:
            raise InvalidSpecError(f"N={params.n_atoms} exceeds the {self.route} route cap of {cap}")

    def echo(self) -> dict:
        return {
            "name": self.name,
            "quantity": self.quantity,
            "route": self.route,
            "tol": self.tol,
            "fixed": asdict(self.fixed),
            "sweeps": [s.source or {"var": s.var, "points": list(s.points)} for s in self.sweeps],
        }


class PointResult(NamedTuple):
    value: float
    residual: float | None
    flag: str
    reason: str


def evaluate_point(quantity: str, route: str, params: SystemParams, tol: float) -> PointResult:
    """Compute one grid point. Numerical failures propagate as exceptions."""
    flag = "beyond_analytic_regime" if route == "bare" and params.n_atoms > 1 and params.delta != 0 else ""
    n = params.n_atoms
    if quantity == "upper_population_numeric":
        basis = enumerate_states(n)
        res = bare.solve_steady_state(bare.build_liouvillian(params, basis), residual_tol=tol)
        return PointResult(bare.upper_population(res.rho, basis), res.residual, flag, "")
    if quantity == "upper_population_dressed":
        basis = enumerate_states(n)
        w = dressed.pauli_generator(params, basis)
        p = dressed.pauli_steady_state(w)
        residual = float(np.linalg.norm(w @ p) / max(np.linalg.norm(w), 1e-300))
        return PointResult(dressed.dressed_upper_population(p, basis), residual, flag, "")
    if quantity == "upper_population_analytic":
        return PointResult(analytic.upper_population_analytic(analytic.xi(params), n), None, flag, "")
    if quantity == "xi":
        x = analytic.xi(params)
        if x == -math.inf:
            return PointResult(math.nan, None, flag, "xi is -inf without thermal photons")
        return PointResult(x, None, flag, "")
    if quantity == "capacity_ratio":
        if dressed.rates(params).gamma2 <= 0:
            return PointResult(math.nan, None, flag, "ratio undefined (0/0) without thermal photons")
        return PointResult(analytic.capacity_ratio(params, n), None, flag, "")
    if quantity == "dark_residual":
        h = darkstate.build_chain_hamiltonian(params)
        d = darkstate.dark_state(params).coefficients
        return PointResult(float(np.linalg.norm(h @ d) / np.linalg.norm(h)), None, flag, "")
    raise InvalidSpecError(f"unknown quantity {quantity!r}")


def _evaluate(args) -> PointResult:
    return evaluate_point(*args)


def run_rows(spec: ScanSpec, jobs: int = 1) -> list[tuple[SystemParams, PointResult]]:
    """Evaluate every grid point, in grid order regardless of ``jobs``."""
    points = list(spec.grid())
    tasks = [(spec.quantity, spec.route, p, spec.tol) for p in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_evaluate(t) for t in tasks]
    return list(zip(points, results))


def run_scan(spec: ScanSpec, jobs: int = 1) -> str:
    """Run ``spec`` and return the CSV document as a string."""
    buf = io.StringIO()
    buf.write(f"# collcpt {__version__}\n")
    buf.write("# spec: " + json.dumps(spec.echo(), sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    per_atom = spec.quantity.startswith("upper_population")
    for params, res in run_rows(spec, jobs):
        row = [fmt(getattr(params, c)) for c in PARAM_COLUMNS]
        row += [spec.quantity, spec.route, fmt(res.value),
                fmt(res.value / params.n_atoms) if per_atom else "",
                fmt(res.residual), fmt(spec.tol), res.flag, res.reason]
        writer.writerow(row)
    return buf.getvalue()


def read_scan(text: str) -> list[dict[str, str]]:
    """Parse a CSV produced by :func:`run_scan` (comment lines skipped)."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def presets() -> dict[str, ScanSpec]:
    """Named reference scans (fig2, fig4, fig5, fig7)."""
    return {
        "fig2": ScanSpec(
            name="fig2",
            quantity="upper_population_numeric",
            route="bare",
            fixed=SystemParams(omega2=5.0, omega3=5.0, n_atoms=1),
            sweeps=(Sweep("nbar", (0.0, 0.5, 2.0)), Sweep.grid("delta", -15.0, 15.0, 301)),
        ),
        "fig4": ScanSpec(
            name="fig4",
            quantity="upper_population_analytic",
            route="analytic",
            fixed=SystemParams(omega2=5.0, omega3=5.0),
            sweeps=(Sweep.grid("N", 1, 50, 50), Sweep.grid("nbar", 0.0, 5.0, 51)),
        ),
        "fig5": ScanSpec(
            name="fig5",
            quantity="upper_population_analytic",
            route="analytic",
            fixed=SystemParams(omega2=5.0, omega3=5.0),
            sweeps=(Sweep("N", (10, 100, 1000)), Sweep.grid("nbar", 1e-2, 1e4, 121, log=True)),
        ),
        "fig7": ScanSpec(
            name="fig7",
            quantity="capacity_ratio",
            route="analytic",
            fixed=SystemParams(omega2=5.0, omega3=5.0),
            sweeps=(Sweep("N", (2, 4, 20)), Sweep.grid("nbar", 1e-2, 1e2, 81, log=True)),
        ),
    }
