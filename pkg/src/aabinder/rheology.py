"""Flow-curve ingestion, shear-protocol checks, yield-stress model fits and
hysteresis-loop area.

Fits use the descending ramp. The Modified Bingham model
``tau = tau0 + mu_p * rate + c * rate**2`` is the primary model; the sign of
``c / mu_p`` separates shear thinning (< 0) from shear thickening (> 0).
"""

from __future__ import annotations

import csv
import enum
import math
import statistics
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (EmptyBranch, NoConvergence, NoOverlap, SingularSystem,
                     ValidationError)

R2_QUALITY = 0.95
PIVOT_TOL = 1e-12
CLASSIFY_TOL = 1e-9
HB_N_BOUNDS = (0.1, 2.0)
HB_N_TOL = 1e-4

FLOW_CSV_HEADER = ("shear_rate_per_s", "shear_stress_pa", "hold_time_s", "branch")


class Branch(str, enum.Enum):
    UP = "up"
    DOWN = "down"


class Model(str, enum.Enum):
    BINGHAM = "bingham"
    MODIFIED_BINGHAM = "modified_bingham"
    HERSCHEL_BULKLEY = "herschel_bulkley"

    @classmethod
    def parse(cls, value: "str | Model") -> "Model":
        if isinstance(value, cls):
            return value
        aliases = {"mb": cls.MODIFIED_BINGHAM, "hb": cls.HERSCHEL_BULKLEY, "b": cls.BINGHAM}
        key = str(value).strip().lower()
        return aliases.get(key) or cls(key)


class Behavior(str, enum.Enum):
    SHEAR_THINNING = "shear_thinning"
    SHEAR_THICKENING = "shear_thickening"
    BINGHAM_PLASTIC = "bingham_plastic"


class FitQualityWarning(UserWarning):
    """Raised (as a warning) when R^2 does not exceed the 0.95 quality bar."""


@dataclass(frozen=True)
class FlowCurve:
    """One ramp of a stepped flow test.

    Shear rate must be strictly increasing on the up ramp and strictly
    decreasing on the down ramp.
    """

    shear_rate: tuple[float, ...]
    shear_stress: tuple[float, ...]
    hold_time: tuple[float, ...]
    branch: Branch = Branch.DOWN

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch(self.branch))
        rate = tuple(float(x) for x in self.shear_rate)
        stress = tuple(float(x) for x in self.shear_stress)
        hold = tuple(float(x) for x in self.hold_time)
        if not len(rate) == len(stress) == len(hold):
            raise ValidationError("shear_rate, shear_stress and hold_time differ in length")
        if any(not math.isfinite(v) for v in rate + stress + hold):
            raise ValidationError("flow curve contains non-finite values")
        if any(r < 0 for r in rate) or any(s < 0 for s in stress):
            raise ValidationError("shear rate and stress must be >= 0")
        if any(h <= 0 for h in hold):
            raise ValidationError("hold times must be > 0")
        steps = np.diff(rate)
        if self.branch is Branch.UP and np.any(steps <= 0):
            raise ValidationError("up ramp shear rate must be strictly increasing")
        if self.branch is Branch.DOWN and np.any(steps >= 0):
            raise ValidationError("down ramp shear rate must be strictly decreasing")
        object.__setattr__(self, "shear_rate", rate)
        object.__setattr__(self, "shear_stress", stress)
        object.__setattr__(self, "hold_time", hold)

    @classmethod
    def from_arrays(cls, rate, stress, hold=20.0, branch: "Branch | str" = Branch.DOWN):
        rate = np.asarray(rate, dtype=float)
        hold = np.broadcast_to(np.asarray(hold, dtype=float), rate.shape)
        return cls(tuple(rate), tuple(np.asarray(stress, dtype=float)), tuple(hold), Branch(branch))

    def __len__(self):
        return len(self.shear_rate)

    @property
    def rates(self) -> np.ndarray:
        return np.asarray(self.shear_rate)

    @property
    def stresses(self) -> np.ndarray:
        return np.asarray(self.shear_stress)


# -- ingestion -------------------------------------------------------------

def read_flow_csv(path: str | Path) -> dict[Branch, FlowCurve]:
    """Read one run; returns the branches present, keyed by :class:`Branch`."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        return parse_flow_rows(csv.DictReader(fh), origin=str(path))


def parse_flow_rows(rows: Iterable[dict], origin: str = "<rows>") -> dict[Branch, FlowCurve]:
    cols: dict[Branch, list[list[float]]] = {}
    for i, row in enumerate(rows, 2):
        try:
            branch = Branch(row["branch"].strip().lower())
            vals = [float(row[k]) for k in FLOW_CSV_HEADER[:3]]
        except (KeyError, ValueError, AttributeError) as exc:
            raise ValidationError(f"{origin}:{i}: bad flow-curve row ({exc})") from None
        cols.setdefault(branch, []).append(vals)
    if not cols:
        raise EmptyBranch(f"{origin}: no data rows")
    return {b: FlowCurve(*zip(*v), branch=b) for b, v in cols.items()}


def write_flow_csv(path: str | Path, *curves: FlowCurve) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLOW_CSV_HEADER)
        for c in curves:
            for r, s, h in zip(c.shear_rate, c.shear_stress, c.hold_time):
                w.writerow([repr(r), repr(s), repr(h), c.branch.value])


# -- protocol --------------------------------------------------------------

@dataclass(frozen=True)
class ShearProtocol:
    """Stepped-ramp protocol; pre-shear and rest are recorded, not measured."""

    max_rate: float = 100.0
    min_rate: float = 0.0
    step_hold: float = 20.0
    preshear_rate: float = 100.0
    preshear_time: float = 30.0
    rest_time: float = 45.0
    temperature_c: float = 32.0
    rate_tol: float = 1e-6
    hold_tol: float = 1e-6


@dataclass(frozen=True)
class ProtocolReport:
    deviations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.deviations


def validate_protocol(up: FlowCurve | None, down: FlowCurve | None,
                      protocol: ShearProtocol = ShearProtocol()) -> ProtocolReport:
    """Flag departures from the stepped-ramp protocol; data are never rejected."""
    for name, c in (("up", up), ("down", down)):
        if c is None or len(c) == 0:
            raise EmptyBranch(f"{name} branch is empty")
    p = protocol
    dev = []

    def endpoint(label, actual, expected):
        if abs(actual - expected) > p.rate_tol:
            rel = "<" if actual < expected else ">"
            dev.append(f"{label} {actual:g} {rel} {expected:g}")

    endpoint("up ramp start", up.shear_rate[0], p.min_rate)
    endpoint("ramp ceiling", up.shear_rate[-1], p.max_rate)
    endpoint("down ramp start", down.shear_rate[0], p.max_rate)
    endpoint("down ramp end", down.shear_rate[-1], p.min_rate)
    for c in (up, down):
        for i, (r, h) in enumerate(zip(c.shear_rate, c.hold_time)):
            if abs(h - p.step_hold) > p.hold_tol:
                dev.append(f"{c.branch.value} step {i} at {r:g} 1/s held {h:g} s (expected {p.step_hold:g} s)")
    return ProtocolReport(tuple(dev))


# -- least squares ---------------------------------------------------------

def solve_normal_equations(a: np.ndarray, b: np.ndarray, tol: float = PIVOT_TOL) -> np.ndarray:
    """Gaussian elimination with partial pivoting on a small SPD system.

    A pivot below ``tol`` times the largest diagonal entry means the design
    matrix is rank deficient.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    scale = max(float(np.max(np.abs(np.diag(a)))), np.finfo(float).tiny)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) <= tol * scale:
            raise SingularSystem(f"rank-deficient normal equations (pivot {a[p, k]:.3e})")
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        f = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(f, a[k, k:])
        b[k + 1:] -= f * b[k]
    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def polyfit_normal(x, y, degree: int) -> np.ndarray:
    """Least-squares polynomial coefficients, lowest order first.

    The abscissa is scaled to [-1, 1] magnitude before forming the normal
    equations so the quadratic system stays well conditioned.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValidationError("x and y differ in length")
    if len(x) <= degree:
        raise SingularSystem(f"{len(x)} points cannot determine {degree + 1} coefficients")
    s = float(np.max(np.abs(x))) or 1.0
    v = np.vander(x / s, degree + 1, increasing=True)
    coef = solve_normal_equations(v.T @ v, v.T @ y)
    return coef / s ** np.arange(degree + 1)


def r_squared(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-24 * max(1.0, float(np.sum(y ** 2))) else 0.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def classify(mu_p: float, c: float, tol: float = CLASSIFY_TOL) -> Behavior:
    if mu_p == 0.0:
        ratio = 0.0 if c == 0.0 else math.copysign(math.inf, c)
    else:
        ratio = c / mu_p
    if abs(ratio) <= tol:
        return Behavior.BINGHAM_PLASTIC
    return Behavior.SHEAR_THINNING if ratio < 0 else Behavior.SHEAR_THICKENING


@dataclass(frozen=True)
class RheoFit:
    """Fitted flow model.

    For Herschel-Bulkley fits ``c`` holds the consistency K, ``n`` the flow
    index and ``mu_p`` is 0; the behaviour then follows n (< 1 thinning).
    """

    model: Model
    tau0: float
    mu_p: float
    c: float
    r2: float
    behavior: Behavior
    n: float | None = None
    n_points: int = 0
    negative_yield: bool = False

    def predict(self, rate) -> np.ndarray:
        rate = np.asarray(rate, dtype=float)
        if self.model is Model.HERSCHEL_BULKLEY:
            return self.tau0 + self.c * _powr(rate, self.n)
        return self.tau0 + self.mu_p * rate + self.c * rate ** 2

    def as_dict(self) -> dict:
        d = {
            "model": self.model.value,
            "tau0_pa": self.tau0,
            "mu_p_pa_s": self.mu_p,
            "c_pa_s2": self.c,
            "r2": self.r2,
            "behavior": self.behavior.value,
            "n_points": self.n_points,
        }
        if self.model is Model.HERSCHEL_BULKLEY:
            d.update(k_pa_sn=self.c, n=self.n, negative_yield=self.negative_yield)
            del d["c_pa_s2"], d["mu_p_pa_s"]
        return d


def _powr(rate: np.ndarray, n: float) -> np.ndarray:
    out = np.zeros_like(rate)
    pos = rate > 0
    out[pos] = rate[pos] ** n
    return out


def _warn_quality(fit: RheoFit) -> RheoFit:
    if fit.r2 <= R2_QUALITY:
        warnings.warn(f"{fit.model.value} fit R^2 = {fit.r2:.4f} <= {R2_QUALITY}",
                      FitQualityWarning, stacklevel=3)
    return fit


def fit_polynomial_model(rate, stress, model: "Model | str") -> RheoFit:
    """Bingham (degree 1) or Modified Bingham (degree 2) fit on raw arrays."""
    model = Model.parse(model)
    if model is Model.HERSCHEL_BULKLEY:
        raise ValueError("use fit_herschel_bulkley_arrays for HB")
    degree = 2 if model is Model.MODIFIED_BINGHAM else 1
    rate = np.asarray(rate, dtype=float)
    stress = np.asarray(stress, dtype=float)
    coef = polyfit_normal(rate, stress, degree)
    tau0, mu_p = float(coef[0]), float(coef[1])
    c = float(coef[2]) if degree == 2 else 0.0
    yhat = tau0 + mu_p * rate + c * rate ** 2
    return RheoFit(model, tau0, mu_p, c, r_squared(stress, yhat), classify(mu_p, c),
                   n_points=len(rate))


def _require_down(curve: FlowCurve, min_points: int) -> None:
    if curve.branch is not Branch.DOWN:
        raise ValidationError("model fits use the descending (down) ramp")
    if len(curve) < min_points:
        raise ValidationError(f"need >= {min_points} points, got {len(curve)}")


def fit_modified_bingham(curve: FlowCurve) -> RheoFit:
    _require_down(curve, 4)
    return _warn_quality(fit_polynomial_model(curve.rates, curve.stresses, Model.MODIFIED_BINGHAM))


def fit_bingham(curve: FlowCurve) -> RheoFit:
    _require_down(curve, 4)
    return _warn_quality(fit_polynomial_model(curve.rates, curve.stresses, Model.BINGHAM))


def _hb_inner(rate, stress, n):
    """Linear least squares for (tau0, K) at fixed n; returns (tau0, K, sse)."""
    g = _powr(rate, n)
    v = np.column_stack([np.ones_like(g), g])
    coef = solve_normal_equations(v.T @ v, v.T @ stress)
    resid = stress - v @ coef
    return float(coef[0]), float(coef[1]), float(resid @ resid)


def golden_section(f, lo: float, hi: float, tol: float, max_iter: int = 200) -> float:
    """Minimiser of a unimodal ``f`` on [lo, hi] to bracket width ``tol``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if not (math.isfinite(f1) and math.isfinite(f2)):
            raise NoConvergence("objective not finite inside the bracket")
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    else:
        raise NoConvergence(f"golden section did not reach width {tol} in {max_iter} steps")
    # best of the sampled points, including the bracket ends
    cands = [(f1, x1), (f2, x2), (f(a), a), (f(b), b)]
    return min(cands)[1]


def fit_herschel_bulkley_arrays(rate, stress, n_bounds=HB_N_BOUNDS, tol=HB_N_TOL) -> RheoFit:
    rate = np.asarray(rate, dtype=float)
    stress = np.asarray(stress, dtype=float)
    if len(rate) < 5:
        raise ValidationError(f"Herschel-Bulkley needs >= 5 points, got {len(rate)}")
    if np.count_nonzero(rate <= 0) > 1:
        raise ValidationError("at most one zero shear-rate point is allowed for HB")
    if np.count_nonzero(rate > 0) < 2:
        raise SingularSystem("fewer than two positive shear rates")

    n = golden_section(lambda n: _hb_inner(rate, stress, n)[2], *n_bounds, tol=tol)
    tau0, k, _ = _hb_inner(rate, stress, n)
    yhat = tau0 + k * _powr(rate, n)
    behavior = (Behavior.BINGHAM_PLASTIC if abs(n - 1.0) <= tol
                else Behavior.SHEAR_THINNING if n < 1.0 else Behavior.SHEAR_THICKENING)
    return RheoFit(Model.HERSCHEL_BULKLEY, tau0, 0.0, k, r_squared(stress, yhat), behavior,
                   n=n, n_points=len(rate), negative_yield=tau0 < 0)


def fit_herschel_bulkley(curve: FlowCurve) -> RheoFit:
    """tau = tau0 + K rate^n; a negative tau0 is flagged, not raised."""
    _require_down(curve, 5)
    return _warn_quality(fit_herschel_bulkley_arrays(curve.rates, curve.stresses))


FITTERS = {
    Model.BINGHAM: fit_bingham,
    Model.MODIFIED_BINGHAM: fit_modified_bingham,
    Model.HERSCHEL_BULKLEY: fit_herschel_bulkley,
}


def fit(curve: FlowCurve, model: "Model | str" = Model.MODIFIED_BINGHAM) -> RheoFit:
    return FITTERS[Model.parse(model)](curve)


@dataclass(frozen=True)
class FitSummary:
    """Mean and sample standard deviation of repeated-run coefficients."""

    model: Model
    runs: int
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)
    behavior: Behavior = Behavior.BINGHAM_PLASTIC

    def as_dict(self) -> dict:
        return {"model": self.model.value, "runs": self.runs, "mean": dict(self.mean),
                "std": dict(self.std), "behavior": self.behavior.value}


def aggregate_fits(fits: Sequence[RheoFit]) -> FitSummary:
    if not fits:
        raise ValidationError("no fits to aggregate")
    models = {f.model for f in fits}
    if len(models) != 1:
        raise ValidationError("cannot aggregate fits of different models")
    model = models.pop()
    keys = ["tau0", "mu_p", "c", "r2"] + (["n"] if model is Model.HERSCHEL_BULKLEY else [])
    mean, std = {}, {}
    for k in keys:
        vals = [getattr(f, k) for f in fits]
        mean[k] = statistics.fmean(vals)
        std[k] = statistics.stdev(vals) if len(vals) > 1 else 0.0
    if model is Model.HERSCHEL_BULKLEY:
        behavior = (Behavior.SHEAR_THINNING if mean["n"] < 1 else
                    Behavior.SHEAR_THICKENING if mean["n"] > 1 else Behavior.BINGHAM_PLASTIC)
    else:
        behavior = classify(mean["mu_p"], mean["c"])
    return FitSummary(model, len(fits), mean, std, behavior)


# -- thixotropy ------------------------------------------------------------

class LoopSign(str, enum.Enum):
    THIXOTROPIC = "thixotropic"
    RHEOPECTIC = "rheopectic"


@dataclass(frozen=True)
class HysteresisResult:
    loop_area: float        # Pa/s
    sign: LoopSign
    rate_range: tuple[float, float]

    def as_dict(self) -> dict:
        return {"loop_area_pa_per_s": self.loop_area, "sign": self.sign.value,
                "rate_range": list(self.rate_range)}


def hysteresis_area(up: FlowCurve, down: FlowCurve) -> HysteresisResult:
    """Integral of (tau_up - tau_down) over the shared shear-rate range.

    Branch order is taken from the arguments, not from ``branch`` tags, so
    swapping them flips the sign.
    """
    ux, uy = _ascending(up)
    dx, dy = _ascending(down)
    lo, hi = max(ux[0], dx[0]), min(ux[-1], dx[-1])
    if not hi > lo:
        raise NoOverlap(f"shear-rate ranges do not overlap ([{ux[0]}, {ux[-1]}] vs [{dx[0]}, {dx[-1]}])")
    # union of both abscissae: exact for piecewise-linear branches, antisymmetric on swap
    x = np.union1d(ux, dx)
    x = np.concatenate([[lo], x[(x > lo) & (x < hi)], [hi]])
    diff = np.interp(x, ux, uy) - np.interp(x, dx, dy)
    area = float(_trapezoid(diff, x))
    return HysteresisResult(area, LoopSign.THIXOTROPIC if area >= 0 else LoopSign.RHEOPECTIC,
                            (float(lo), float(hi)))


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _ascending(curve: FlowCurve) -> tuple[np.ndarray, np.ndarray]:
    x, y = curve.rates, curve.stresses
    order = np.argsort(x, kind="stable")
    return x[order], y[order]
