"""Seeded experiment drivers with reproducible pass/fail reports.

Every driver takes an ExperimentConfig, runs a deterministic battery
keyed by the config seed, and returns a RunReport: a config echo, one
row per named check (value, bound, comparison, pass/fail), optional
curve data, and a wall clock. Serialized reports are byte-identical
across runs of the same config once the volatile keys are stripped.

The SF_THREADS environment variable caps the worker pool used for
per-seed parallelism; results are always assembled in seed order.
"""

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .divided import DividedDifference
from .errors import UnsupportedConfigError, ValidationError
from .forms import (
    MAX_FORM_ORDER,
    FrechetForm,
    delta_symmetric,
    holder_difference_norms,
    taylor_expand,
    taylor_integral_form,
    trace_identity_residual,
)
from .functions import Monomial, Polynomial, PowerAbs
from .instances import PROFILES, SplitMix64, generate_instance
from .moi import (
    MoiRequest,
    SeparableSymbol,
    algebraic_shift,
    moi_binned,
    moi_exact,
    moi_separable,
    perturbation_identity,
)
from .momenta import MomentumSpec
from .spectral import HermitianMatrix, SchattenExponent, eigendecompose
from .util import canonical_json, fit_loglog_slope, frobenius

MODES = (
    "derivative",
    "taylor-scan",
    "moi-convergence",
    "holder-scan",
    "perturbation-check",
    "selftest",
)

DEFAULT_T_GRID = tuple(float(t) for t in np.logspace(-4, -1, 13))
DEFAULT_N_GRID = (32, 64, 128, 256, 512)

# Central table of default check tolerances; CLI flags override quad_tol,
# everything else is pinned here so reports quote their own bounds.
DEFAULT_TOLERANCES = {
    "quad_tol": 1e-9,
    "oracle_rel": 1e-5,
    "oracle_abs": 5e-5,
    "slope_margin": 0.1,
    "singular_slope_window": 0.15,
    "trace_identity": 1e-7,
    "perturbation_poly": 1e-12,
    "perturbation_power": 1e-6,
    "integral_taylor": 1e-6,
    "separable_cross": 1e-10,
    "algebraic_shift": 1e-10,
    "binned_rate_window": 0.35,
    "hand_case": 1e-12,
}

# Fixed stride separating auxiliary draws (tails, endpoints) from the
# main (H, V) stream of a seed; any large odd constant works, this one
# is pinned for reproducibility.
SEED_STRIDE = 104729


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one experiment run."""

    mode: str
    seed: int = 1
    dim: int = 4
    p: float = 2.5
    profile: str = "generic"
    t_grid: tuple = DEFAULT_T_GRID
    n_grid: tuple = DEFAULT_N_GRID
    quad_tol: float = 1e-9
    order: int = 0
    matrix_path: str = ""
    dir_paths: tuple = ()
    out_dir: str = ""
    fmt: str = "json"
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}; choose from {MODES}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", float(self.p))
        if not 2 <= self.dim <= 64:
            raise ValidationError(f"dim must lie in [2, 64], got {self.dim}")
        if not 1.0 < self.p <= 8.0:
            raise ValidationError(f"p must lie in (1, 8], got {self.p}")
        if self.profile not in PROFILES:
            raise ValidationError(
                f"unknown profile {self.profile!r}; choose from {PROFILES}"
            )
        t_grid = tuple(float(t) for t in self.t_grid)
        if not t_grid or any(t <= 0 for t in t_grid):
            raise ValidationError("t grid must be nonempty and positive")
        object.__setattr__(self, "t_grid", t_grid)
        n_grid = tuple(int(n) for n in self.n_grid)
        if not n_grid or any(n < 1 for n in n_grid) or list(n_grid) != sorted(set(n_grid)):
            raise ValidationError("n grid must be nonempty, positive, strictly increasing")
        object.__setattr__(self, "n_grid", n_grid)
        if not 0.0 < float(self.quad_tol) <= 1e-2:
            raise ValidationError(f"quad_tol must lie in (0, 1e-2], got {self.quad_tol}")
        object.__setattr__(self, "quad_tol", float(self.quad_tol))
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "dir_paths", tuple(str(p) for p in self.dir_paths))
        if self.fmt not in ("json", "csv"):
            raise ValidationError(f"format must be json or csv, got {self.fmt!r}")
        merged = dict(DEFAULT_TOLERANCES)
        merged.update(self.tolerances)
        merged["quad_tol"] = self.quad_tol
        object.__setattr__(self, "tolerances", merged)

    def echo(self):
        """The config fields a report embeds (output paths excluded)."""
        return {
            "mode": self.mode,
            "seed": self.seed,
            "dim": self.dim,
            "p": self.p,
            "profile": self.profile,
            "t_grid": list(self.t_grid),
            "n_grid": list(self.n_grid),
            "quad_tol": self.quad_tol,
            "order": self.order,
            "matrix_path": self.matrix_path,
            "dir_paths": list(self.dir_paths),
            "tolerances": dict(self.tolerances),
        }


class CheckSet:
    """Ordered, uniquely named pass/fail rows."""

    def __init__(self):
        self.rows = []
        self._names = set()

    def add(self, name, value, op, bound):
        if name in self._names:
            raise ValidationError(f"duplicate check name {name!r}")
        self._names.add(name)
        if op == "<=":
            passed = value <= bound
        elif op == ">=":
            passed = value >= bound
        elif op == "in":
            passed = bound[0] <= value <= bound[1]
        elif op == "true":
            passed = bool(value)
        else:
            raise ValidationError(f"unknown check op {op!r}")
        if op == "true":
            row_value, row_bound = bool(value), None
        else:
            row_value = float(value)
            row_bound = (
                [float(bound[0]), float(bound[1])] if op == "in" else float(bound)
            )
        self.rows.append(
            {
                "name": name,
                "value": row_value,
                "bound": row_bound,
                "op": op,
                "passed": bool(passed),
            }
        )

    @property
    def all_passed(self):
        return all(row["passed"] for row in self.rows)


@dataclass
class RunReport:
    """Outcome of one driver run."""

    mode: str
    config: dict
    checks: list
    passed: bool
    data: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def to_dict(self):
        return {
            "mode": self.mode,
            "config": self.config,
            "checks": self.checks,
            "passed": self.passed,
            "data": self.data,
            "wall_clock_s": self.wall_clock_s,
        }

    def to_json(self, drop_volatile=False):
        return canonical_json(self.to_dict(), drop_volatile=drop_volatile)

    def to_csv(self):
        lines = ["name,value,bound,op,passed"]
        for row in self.checks:
            bound = row["bound"]
            if isinstance(bound, list):
                bound = f"{bound[0]!r}..{bound[1]!r}"
            lines.append(
                f"{row['name']},{row['value']!r},{bound!r},{row['op']},{row['passed']}"
            )
        return "\n".join(lines) + "\n"

    def save(self, out_dir, fmt="json"):
        os.makedirs(out_dir, exist_ok=True)
        stem = self.mode.replace("-", "_") + "_report"
        path = os.path.join(out_dir, f"{stem}.{'csv' if fmt == 'csv' else 'json'}")
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w") as fh:
            fh.write(text)
        return path


def thread_count():
    """Worker cap from SF_THREADS (falls back to a small machine default)."""
    raw = os.environ.get("SF_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ValidationError(f"SF_THREADS must be an integer, got {raw!r}") from exc
        return max(1, n)
    return min(8, os.cpu_count() or 1)


def _map_ordered(fn, items):
    """fn over items, parallel when allowed, results in input order."""
    items = list(items)
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def load_matrix(path):
    """Read a Hermitian matrix from its JSON file format."""
    with open(path) as fh:
        payload = json.load(fh)
    return HermitianMatrix.from_dict(payload)


def _write_text(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _finish(config, checks, data, started):
    return RunReport(
        mode=config.mode,
        config=config.echo(),
        checks=checks.rows,
        passed=checks.all_passed,
        data=data,
        wall_clock_s=time.perf_counter() - started,
    )


def run_derivative(config):
    """Evaluate delta^(k) at a matrix from disk along supplied directions."""
    started = time.perf_counter()
    if not config.matrix_path:
        raise ValidationError("derivative mode needs a base matrix file")
    if not config.dir_paths:
        raise ValidationError("derivative mode needs at least one direction file")
    h = load_matrix(config.matrix_path)
    dirs = [load_matrix(path).matrix for path in config.dir_paths]
    k = config.order if config.order > 0 else len(dirs)
    if len(dirs) != k:
        raise ValidationError(f"order {k} needs {k} direction files, got {len(dirs)}")
    form = FrechetForm(
        base=eigendecompose(h),
        exponent=SchattenExponent(config.p),
        order=k,
        quad_tol=config.quad_tol,
    )
    value = delta_symmetric(form, dirs)
    checks = CheckSet()
    checks.add("value_finite", bool(np.isfinite(value)), "true", None)
    data = {"value": value, "p": config.p, "order": k}
    return _finish(config, checks, data, started)


def run_taylor_scan(config):
    """Taylor remainder scan for one seeded instance."""
    started = time.perf_counter()
    tol = config.tolerances
    h, v = generate_instance(config.seed, config.dim, config.profile, config.p)
    report = taylor_expand(
        h.matrix,
        v.matrix,
        config.p,
        t_grid=np.asarray(config.t_grid),
        quad_tol=config.quad_tol,
    )
    checks = CheckSet()
    checks.add(
        "remainder_finite",
        bool(np.all(np.isfinite(report.remainder))),
        "true",
        None,
    )
    if config.profile == "singular":
        window = tol["singular_slope_window"]
        checks.add(
            "slope_window",
            report.slope,
            "in",
            (config.p - window, config.p + window),
        )
    else:
        checks.add("slope_floor", report.slope, ">=", config.p - tol["slope_margin"])
    for entry in report.oracle:
        bound = max(tol["oracle_rel"] * abs(entry["fd"]), tol["oracle_abs"])
        checks.add(f"oracle_k{entry['k']}", entry["abs_diff"], "<=", bound)
    data = {"taylor": report.to_dict()}
    out = _finish(config, checks, data, started)
    if config.out_dir:
        _write_text(config.out_dir, "taylor_report.json", canonical_json(report.to_dict()))
        _write_text(config.out_dir, "taylor_report.csv", report.to_csv())
    return out


def run_moi_convergence(config):
    """Spectral-bin convergence of the operator integral, 10 seeds."""
    started = time.perf_counter()
    tol = config.tolerances
    n_grid = config.n_grid
    symbol = DividedDifference(PowerAbs(config.p), 1)

    def one(seed):
        h, v = generate_instance(seed, config.dim, "generic", config.p)
        dec = eigendecompose(h)
        req = MoiRequest((dec, dec), (v.matrix,), symbol, config.quad_tol)
        exact = moi_exact(req)
        return [frobenius(moi_binned(req, n) - exact) for n in n_grid]

    curves = _map_ordered(one, range(config.seed, config.seed + 10))
    max_curve = np.max(np.asarray(curves), axis=0)

    checks = CheckSet()
    checks.add(
        "max_curve_nonincreasing",
        float(np.max(np.diff(max_curve))) if len(n_grid) > 1 else 0.0,
        "<=",
        1e-12,
    )
    window = tol["binned_rate_window"]
    checks.add(
        "rate",
        fit_loglog_slope(np.asarray(n_grid, dtype=float), max_curve),
        "in",
        (-1.0 - window, -1.0 + window),
    )

    hand = eigendecompose(np.diag([0.0, 1.0]).astype(complex))
    x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    hand_req = MoiRequest(
        (hand, hand), (x,), DividedDifference(Monomial(2), 1), config.quad_tol
    )
    checks.add(
        "on_grid_exact",
        frobenius(moi_binned(hand_req, 2) - moi_exact(hand_req)),
        "<=",
        1e-14,
    )
    const_req = MoiRequest((hand, hand), (x,), lambda *vals: 0.75, config.quad_tol)
    checks.add(
        "constant_symbol",
        max(frobenius(moi_binned(const_req, n) - 0.75 * x) for n in (1, 7, 32, 501)),
        "<=",
        1e-12,
    )
    data = {
        "n_grid": list(n_grid),
        "curves": [[float(e) for e in curve] for curve in curves],
        "max_curve": [float(e) for e in max_curve],
    }
    return _finish(config, checks, data, started)


def run_holder_scan(config):
    """Fractional smoothness of A -> T^{A, tail}(V...), 10 singular seeds."""
    started = time.perf_counter()
    tol = config.tolerances
    exponent = SchattenExponent(config.p)
    m = exponent.m
    if m > MAX_FORM_ORDER:
        raise UnsupportedConfigError(
            f"holder scan supports p <= {MAX_FORM_ORDER + 1}, got p={config.p}"
        )
    alpha = exponent.holder_alpha
    g = PowerAbs(config.p).derivative_model(1)
    t_grid = np.asarray(config.t_grid)

    # Singular tails put a node of the symbol at the kink of the kernel,
    # so the observed exponent saturates at alpha instead of overshooting.
    def one(seed):
        b, w = generate_instance(seed, config.dim, "singular", config.p)
        tails = []
        perts = []
        for j in range(m - 1):
            th, tv = generate_instance(
                seed + SEED_STRIDE * (j + 1), config.dim, "singular", config.p
            )
            tails.append(eigendecompose(th))
            perts.append(tv.matrix)
        norms = holder_difference_norms(
            g,
            m - 1,
            eigendecompose(b),
            w.matrix,
            tails,
            perts,
            t_grid,
            config.p,
            quad_tol=config.quad_tol,
        )
        if norms.size == 0:
            return float("nan"), True
        usable = norms > 1e-12
        if np.count_nonzero(usable) < 2:
            return float("nan"), True
        return fit_loglog_slope(t_grid[usable], norms[usable]), False

    seeds = list(range(config.seed, config.seed + 10))
    results = _map_ordered(one, seeds)
    checks = CheckSet()
    slopes = []
    for seed, (slope, degenerate) in zip(seeds, results):
        slopes.append(slope)
        if degenerate:
            checks.add(f"degenerate_seed{seed}", True, "true", None)
        else:
            checks.add(f"slope_seed{seed}", slope, ">=", alpha - tol["slope_margin"])
    data = {"alpha": alpha, "m": m, "slopes": slopes, "t_grid": list(config.t_grid)}
    return _finish(config, checks, data, started)


_PERTURBATION_POLY = Polynomial((0.25, -1.0, 0.5, 2.0))


def _perturbation_instance(seed, dim, p, m):
    """Deterministic (A, B, tails, perturbations) tuple for one seed."""
    a, va = generate_instance(seed, dim, "generic", p)
    b, vb = generate_instance(seed + SEED_STRIDE, dim, "generic", p)
    tails = []
    perts = [va.matrix, vb.matrix][:m]
    for j in range(m):
        th, tv = generate_instance(seed + SEED_STRIDE * (j + 2), dim, "generic", p)
        tails.append(eigendecompose(th))
        if len(perts) < m:
            perts.append(tv.matrix)
    return a, b, tails, perts


def run_perturbation_check(config):
    """First-variable perturbation identity, 20 seeds, orders m = 1, 2."""
    started = time.perf_counter()
    tol = config.tolerances
    seeds = list(range(config.seed, config.seed + 20))
    checks = CheckSet()
    for m in (1, 2):
        p_m = m + 1.5
        phi_poly = MomentumSpec.from_divided_difference(_PERTURBATION_POLY, m)
        phi_power = MomentumSpec.from_divided_difference(PowerAbs(p_m), m)

        def one(seed, m=m, p_m=p_m, phi_poly=phi_poly, phi_power=phi_power):
            a, b, tails, perts = _perturbation_instance(seed, config.dim, p_m, m)
            return (
                perturbation_identity(phi_poly, a, b, tails, perts, tol=config.quad_tol),
                perturbation_identity(phi_power, a, b, tails, perts, tol=config.quad_tol),
            )

        residuals = _map_ordered(one, seeds)
        checks.add(
            f"poly_m{m}_max_residual",
            max(r[0] for r in residuals),
            "<=",
            tol["perturbation_poly"],
        )
        checks.add(
            f"power_m{m}_max_residual",
            max(r[1] for r in residuals),
            "<=",
            tol["perturbation_power"],
        )

    # By-hand anchor: f(x) = x^2, m = 1 — both sides reduce to (A - B)V.
    a, b, tails, perts = _perturbation_instance(config.seed, config.dim, 2.0, 1)
    hand = perturbation_identity(
        MomentumSpec.from_divided_difference(Monomial(2), 1),
        a,
        b,
        tails,
        perts,
        tol=config.quad_tol,
    )
    checks.add("hand_quadratic_residual", hand, "<=", tol["hand_case"])
    return _finish(config, checks, {}, started)


def _selftest_ps(p):
    ps = [2.5, 3.5]
    if p not in ps:
        ps.append(p)
    return ps


def run_selftest(config):
    """Fixed identity battery: every cross-check the library asserts."""
    started = time.perf_counter()
    tol = config.tolerances
    exponent = SchattenExponent(config.p)
    if exponent.m > MAX_FORM_ORDER:
        raise UnsupportedConfigError(
            f"p={config.p} needs derivative order m={exponent.m}; "
            f"orders above {MAX_FORM_ORDER} (p > {MAX_FORM_ORDER + 1}) are unsupported"
        )
    checks = CheckSet()
    seeds = list(range(config.seed, config.seed + 10))
    short = seeds[:3]
    mid = seeds[:5]

    # Trace identity across the battery exponents.
    for p in _selftest_ps(config.p):
        m = SchattenExponent(p).m
        ks = [k for k in (2, 3) if k <= min(m, MAX_FORM_ORDER)]
        if not ks:
            continue

        def one_trace(seed, p=p, ks=ks):
            h, v = generate_instance(seed, config.dim, "generic", p)
            form = FrechetForm(
                base=eigendecompose(h),
                exponent=SchattenExponent(p),
                order=ks[0],
                quad_tol=config.quad_tol,
            )
            return max(trace_identity_residual(form, v.matrix, k) for k in ks)

        worst = max(_map_ordered(one_trace, seeds))
        checks.add(f"trace_identity_p{p:g}", worst, "<=", tol["trace_identity"])

    # Hand-checkable trace identity: H = diag(0, 1), f = x^3, order 2.
    hand_form = FrechetForm(
        base=eigendecompose(np.diag([0.0, 1.0]).astype(complex)),
        exponent=SchattenExponent(3.0),
        order=2,
        quad_tol=config.quad_tol,
        model=Monomial(3),
    )
    hand_v = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    checks.add(
        "hand_trace_identity",
        trace_identity_residual(hand_form, hand_v, 2),
        "<=",
        tol["hand_case"],
    )

    # Monomial-shift identity on random order-2 integrals.
    def one_shift(seed):
        h, v = generate_instance(seed, config.dim, "generic", 2.5)
        h2, v2 = generate_instance(seed + SEED_STRIDE, config.dim, "generic", 2.5)
        dec, dec2 = eigendecompose(h), eigendecompose(h2)
        req = MoiRequest(
            (dec, dec2, dec),
            (v.matrix, v2.matrix),
            DividedDifference(PowerAbs(2.5), 2),
            config.quad_tol,
        )
        lhs, rhs = algebraic_shift(req, (1, 2, 0))
        return frobenius(lhs - rhs)

    checks.add(
        "algebraic_shift_max",
        max(_map_ordered(one_shift, mid)),
        "<=",
        tol["algebraic_shift"],
    )

    # Separable symbols against the dense tensor path.
    def one_separable(seed):
        h, v = generate_instance(seed, config.dim, "generic", 2.5)
        h2, v2 = generate_instance(seed + SEED_STRIDE, config.dim, "generic", 2.5)
        rng = SplitMix64(seed * 2 + 1)
        terms = []
        for _ in range(3):
            weight = rng.normal()
            models = tuple(
                Polynomial([rng.normal(), rng.normal(), 0.5 * rng.normal()])
                for _ in range(3)
            )
            terms.append((weight, models))
        sym = SeparableSymbol(tuple(terms))
        decs = (eigendecompose(h), eigendecompose(h2), eigendecompose(h))
        perts = (v.matrix, v2.matrix)
        product = moi_separable(sym, decs, perts)
        dense = moi_exact(MoiRequest(decs, perts, sym, config.quad_tol))
        return frobenius(product - dense)

    checks.add(
        "separable_cross_max",
        max(_map_ordered(one_separable, mid)),
        "<=",
        tol["separable_cross"],
    )

    # Integral Taylor formula at small perturbations, d = 3.
    for p in _selftest_ps(config.p):

        def one_integral(seed, p=p):
            h0, v = generate_instance(seed, 3, "generic", p)
            step = 0.3 * v.matrix / frobenius(v.matrix)
            lhs, rhs = taylor_integral_form(
                h0.matrix, h0.matrix + step, p, quad_tol=config.quad_tol
            )
            return abs(lhs - rhs)

        checks.add(
            f"integral_taylor_p{p:g}",
            max(_map_ordered(one_integral, short)),
            "<=",
            tol["integral_taylor"],
        )

    # Perturbation identity, both kernel families.
    for m in (1, 2):
        p_m = m + 1.5
        phi_poly = MomentumSpec.from_divided_difference(_PERTURBATION_POLY, m)
        phi_power = MomentumSpec.from_divided_difference(PowerAbs(p_m), m)

        def one_pert(seed, m=m, p_m=p_m, phi_poly=phi_poly, phi_power=phi_power):
            a, b, tails, perts = _perturbation_instance(seed, config.dim, p_m, m)
            return (
                perturbation_identity(phi_poly, a, b, tails, perts, tol=config.quad_tol),
                perturbation_identity(phi_power, a, b, tails, perts, tol=config.quad_tol),
            )

        residuals = _map_ordered(one_pert, short)
        checks.add(
            f"perturbation_poly_m{m}",
            max(r[0] for r in residuals),
            "<=",
            tol["perturbation_poly"],
        )
        checks.add(
            f"perturbation_power_m{m}",
            max(r[1] for r in residuals),
            "<=",
            tol["perturbation_power"],
        )

    return _finish(config, checks, {}, started)


_DRIVERS = {
    "derivative": run_derivative,
    "taylor-scan": run_taylor_scan,
    "moi-convergence": run_moi_convergence,
    "holder-scan": run_holder_scan,
    "perturbation-check": run_perturbation_check,
    "selftest": run_selftest,
}


def run(config):
    """Dispatch a config to its driver."""
    return _DRIVERS[config.mode](config)
