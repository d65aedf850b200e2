"""Ground-truth and measurement synthesis for the benchmark scenario.

Trajectories are built from the middle outwards: each target's state at the
midpoint step is drawn from a Gaussian, the later states follow the forward
dynamics x' = Fx + w, and the earlier states follow the time-reversed
dynamics x_prev = F^-1 (x - w) with the same process noise law. The full
trajectory is then truncated to the target's [birth, death] window (both
ends inclusive). Steps are 1-based.

Measurements per step are the union of one noisy detection per alive target
(kept with probability p_d) and a Poisson number of clutter points uniform
on the surveillance area, shuffled together.

Records serialize one per line as "<step> <kind> <id> <components...>" with
kind "truth" or "meas" and id -1 for measurements; floats use shortest
round-trip formatting so files are byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import Gaussian, GaussianMixture, LinearGaussianModel, WeightedGaussian


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _cov_factor(cov: np.ndarray) -> np.ndarray:
    """L with L @ L.T = cov for any PSD cov (zero included)."""
    cov = np.asarray(cov, dtype=float)
    w, v = np.linalg.eigh(0.5 * (cov + cov.T))
    if np.min(w) < -1e-9 * max(1.0, float(np.max(np.abs(w)))):
        raise ValueError("covariance is not positive semidefinite")
    return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario description; area is ((x_lo, x_hi), (y_lo, y_hi)) in
    measurement coordinates, births and deaths are inclusive 1-based steps."""

    area: tuple[tuple[float, float], ...]
    num_steps: int
    model: LinearGaussianModel
    midpoint_mean: np.ndarray
    midpoint_cov: np.ndarray
    target_births_deaths: tuple[tuple[int, int], ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "midpoint_mean", np.asarray(self.midpoint_mean, dtype=float)
        )
        object.__setattr__(
            self, "midpoint_cov", np.asarray(self.midpoint_cov, dtype=float)
        )
        object.__setattr__(
            self,
            "area",
            tuple((float(lo), float(hi)) for lo, hi in self.area),
        )
        object.__setattr__(
            self,
            "target_births_deaths",
            tuple((int(b), int(d)) for b, d in self.target_births_deaths),
        )
        if self.num_steps < 1:
            raise ValueError(f"num_steps must be >= 1, got {self.num_steps}")
        for b, d in self.target_births_deaths:
            if not 1 <= b <= d <= self.num_steps:
                raise ValueError(f"bad birth/death window ({b}, {d})")
        for lo, hi in self.area:
            if not hi > lo:
                raise ValueError(f"empty area extent ({lo}, {hi})")

    @property
    def midpoint_step(self) -> int:
        return (self.num_steps + 1) // 2

    def area_measure(self) -> float:
        out = 1.0
        for lo, hi in self.area:
            out *= hi - lo
        return out


@dataclass(frozen=True)
class GroundTruth:
    """steps[k] lists (target id, state) alive at step k+1."""

    num_steps: int
    steps: tuple[tuple[tuple[int, np.ndarray], ...], ...]

    def __post_init__(self):
        if len(self.steps) != self.num_steps:
            raise ValueError(
                f"{len(self.steps)} step entries for {self.num_steps} steps"
            )
        spans: dict[int, list[int]] = {}
        for k, entries in enumerate(self.steps):
            ids = [tid for tid, _ in entries]
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate target id at step {k + 1}")
            for tid in ids:
                spans.setdefault(tid, []).append(k + 1)
        for tid, ks in spans.items():
            if ks != list(range(ks[0], ks[-1] + 1)):
                raise ValueError(f"target {tid} has a gap in its lifetime")

    def at(self, step: int):
        return self.steps[step - 1]

    def positions(self, step: int, indices=(0, 2)) -> list[np.ndarray]:
        return [x[list(indices)] for _, x in self.at(step)]


@dataclass(frozen=True)
class MeasurementSet:
    """steps[k] holds the (unlabeled) measurement vectors of step k+1."""

    num_steps: int
    steps: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        if len(self.steps) != self.num_steps:
            raise ValueError(
                f"{len(self.steps)} step entries for {self.num_steps} steps"
            )

    def at(self, step: int):
        return self.steps[step - 1]


def generate_trajectories(cfg: ScenarioConfig) -> GroundTruth:
    """Midpoint-outwards sampling of every target, truncated to its window."""
    rng = _rng(cfg.seed)
    mid = cfg.midpoint_step
    f = cfg.model.F
    f_inv = np.linalg.inv(f)
    l_mid = _cov_factor(cfg.midpoint_cov)
    l_q = _cov_factor(cfg.model.Q)
    dim = cfg.model.state_dim
    per_step: list[list[tuple[int, np.ndarray]]] = [
        [] for _ in range(cfg.num_steps)
    ]
    for tid, (birth, death) in enumerate(cfg.target_births_deaths):
        states = {mid: cfg.midpoint_mean + l_mid @ rng.standard_normal(dim)}
        for k in range(mid, cfg.num_steps):
            states[k + 1] = f @ states[k] + l_q @ rng.standard_normal(dim)
        for k in range(mid, 1, -1):
            states[k - 1] = f_inv @ (states[k] - l_q @ rng.standard_normal(dim))
        for k in range(birth, death + 1):
            per_step[k - 1].append((tid, states[k]))
    return GroundTruth(cfg.num_steps, tuple(tuple(s) for s in per_step))


def generate_measurements(
    truth: GroundTruth, m: LinearGaussianModel, area, seed
) -> MeasurementSet:
    """Per step: thinned noisy detections of the alive targets plus uniform
    Poisson clutter, in shuffled order."""
    rng = _rng(seed)
    area = tuple((float(lo), float(hi)) for lo, hi in area)
    if len(area) != m.meas_dim:
        raise ValueError(f"area has {len(area)} extents for meas_dim {m.meas_dim}")
    l_r = _cov_factor(m.R)
    steps = []
    for k in range(1, truth.num_steps + 1):
        zs: list[np.ndarray] = []
        for _, x in truth.at(k):
            if rng.random() < m.p_d:
                zs.append(m.H @ x + l_r @ rng.standard_normal(m.meas_dim))
        n_clutter = rng.poisson(m.clutter_rate)
        for _ in range(n_clutter):
            zs.append(
                np.array([rng.uniform(lo, hi) for lo, hi in area])
            )
        order = rng.permutation(len(zs))
        steps.append(tuple(zs[i] for i in order))
    return MeasurementSet(truth.num_steps, tuple(steps))


def write_records(path, truth: GroundTruth | None = None,
                  measurements: MeasurementSet | None = None) -> None:
    """Write truth and/or measurement records, grouped by step."""
    num_steps = 0
    if truth is not None:
        num_steps = max(num_steps, truth.num_steps)
    if measurements is not None:
        num_steps = max(num_steps, measurements.num_steps)
    with open(path, "w", encoding="ascii") as fh:
        for k in range(1, num_steps + 1):
            if truth is not None and k <= truth.num_steps:
                for tid, x in truth.at(k):
                    comps = " ".join(repr(float(v)) for v in x)
                    fh.write(f"{k} truth {tid} {comps}\n")
            if measurements is not None and k <= measurements.num_steps:
                for z in measurements.at(k):
                    comps = " ".join(repr(float(v)) for v in z)
                    fh.write(f"{k} meas -1 {comps}\n")


def read_records(
    path, num_steps: int | None = None
) -> tuple[GroundTruth | None, MeasurementSet | None]:
    """Parse a record file; malformed lines raise ValueError naming the line.

    num_steps pads trailing empty steps; when omitted it is inferred from
    the highest step present. Returns None for a kind with no records.
    """
    truth_rows: dict[int, list[tuple[int, np.ndarray]]] = {}
    meas_rows: dict[int, list[np.ndarray]] = {}
    max_step = 0
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                step = int(parts[0])
                kind = parts[1]
                tid = int(parts[2])
                vec = np.array([float(v) for v in parts[3:]])
                if step < 1 or kind not in ("truth", "meas") or vec.size == 0:
                    raise ValueError
            except (ValueError, IndexError):
                raise ValueError(f"{path}: malformed record on line {lineno}: {line!r}")
            max_step = max(max_step, step)
            if kind == "truth":
                truth_rows.setdefault(step, []).append((tid, vec))
            else:
                meas_rows.setdefault(step, []).append(vec)
    n = num_steps if num_steps is not None else max_step
    if max_step > n:
        raise ValueError(f"{path}: record at step {max_step} past num_steps {n}")
    truth = None
    if truth_rows:
        truth = GroundTruth(
            n, tuple(tuple(truth_rows.get(k, ())) for k in range(1, n + 1))
        )
    meas = None
    if meas_rows or num_steps is not None:
        meas = MeasurementSet(
            n, tuple(tuple(meas_rows.get(k, ())) for k in range(1, n + 1))
        )
    return truth, meas


def reference_model(p_d: float = 0.9, clutter_rate: float = 10.0) -> LinearGaussianModel:
    """The benchmark linear model: near-constant-velocity motion on
    [p_x, v_x, p_y, v_y], position measurements, uniform clutter on the
    300 x 300 area, and a single broad birth component of weight 0.005."""
    eye2 = np.eye(2)
    f1 = np.array([[1.0, 1.0], [0.0, 1.0]])
    q1 = 0.01 * np.array([[1.0 / 3.0, 1.0 / 2.0], [1.0 / 2.0, 1.0]])
    birth = GaussianMixture(
        (
            WeightedGaussian(
                np.log(0.005),
                Gaussian(
                    np.array([100.0, 0.0, 100.0, 0.0]),
                    np.diag([150.0**2, 1.0, 150.0**2, 1.0]),
                ),
            ),
        )
    )
    return LinearGaussianModel(
        F=np.kron(eye2, f1),
        Q=np.kron(eye2, q1),
        H=np.kron(eye2, np.array([[1.0, 0.0]])),
        R=eye2,
        p_s=0.99,
        p_d=p_d,
        clutter_rate=clutter_rate,
        clutter_density=clutter_rate / 90000.0,
        birth=birth,
    )


def reference_scenario(
    seed: int = 0,
    p_d: float = 0.9,
    clutter_rate: float = 10.0,
    num_steps: int = 81,
) -> ScenarioConfig:
    """Four targets on the 300 x 300 area: three alive for the whole window,
    one dying early (step 40 under the default 81 steps)."""
    early_death = min(40, num_steps)
    return ScenarioConfig(
        area=((0.0, 300.0), (0.0, 300.0)),
        num_steps=num_steps,
        model=reference_model(p_d=p_d, clutter_rate=clutter_rate),
        midpoint_mean=np.array([150.0, 0.0, 150.0, 0.0]),
        midpoint_cov=0.1 * np.eye(4),
        target_births_deaths=(
            (1, num_steps),
            (1, num_steps),
            (1, num_steps),
            (1, early_death),
        ),
        seed=seed,
    )
