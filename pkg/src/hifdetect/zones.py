"""Adaptive eigenvalue zones and the online alarm state machine.

Each zone is a polar boundary ``rho(theta)`` around a k-means centroid in the
complex eigenvalue plane. A sample is normal when it falls inside at least
one zone. Zones are refit periodically from in-zone samples only, so data
seen while alarmed never leaks into the definition of normal.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InsufficientDataError
from .estimator import EigenSample

KMEANS_RESTARTS = 5
KMEANS_MAX_ITER = 100


def _kmeanspp(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(pts)
    centers = np.empty((k, 2))
    centers[0] = pts[rng.integers(n)]
    d2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[j] = pts[idx]
        d2 = np.minimum(d2, np.sum((pts - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(pts: np.ndarray, centers: np.ndarray, max_iter: int):
    k = len(centers)
    labels = np.zeros(len(pts), dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        new = centers.copy()
        for j in range(k):
            members = pts[labels == j]
            if len(members):
                new[j] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the worst-served point
                far = np.argmax(d2[np.arange(len(pts)), labels])
                new[j] = pts[far]
        if np.array_equal(new, centers):
            break
        centers = new
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(pts)), labels].sum())
    return labels, centers, inertia


def cluster(samples, k: int, seed: int = 0, n_init: int = KMEANS_RESTARTS,
            max_iter: int = KMEANS_MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """k-means on complex points; returns ``(labels, complex centroids)``."""
    z = np.asarray(samples, dtype=complex)
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if len(z) < k:
        raise InsufficientDataError(f"need at least {k} samples, got {len(z)}")
    pts = np.column_stack([z.real, z.imag])
    if k == 1:
        return np.zeros(len(z), dtype=np.int64), np.array([z.mean()])
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        labels, centers, inertia = _lloyd(pts, _kmeanspp(pts, k, rng), max_iter)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    labels, centers, _ = best
    return labels, centers[:, 0] + 1j * centers[:, 1]


@dataclass(frozen=True)
class DetectorConfig:
    k_clusters: int = 2
    poly_degree: int = 2
    margin: float = 1.5
    confirm_count: int = 3
    update_interval: float = 60.0
    training_min: int = 100
    min_radius_frac: float = 0.01
    seed: int = 0
    holdoff: int = 10  # samples an in-zone estimate waits before it may train a zone

    def __post_init__(self):
        for name in ("k_clusters", "confirm_count", "training_min"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.holdoff < 0:
            raise ConfigurationError("holdoff must be >= 0")
        if self.poly_degree < 0:
            raise ConfigurationError("poly_degree must be >= 0")
        if self.margin < 1:
            raise ConfigurationError("margin must be >= 1")
        if not self.update_interval > 0:
            raise ConfigurationError("update_interval must be > 0")


@dataclass(frozen=True)
class Zone:
    cluster_id: int
    centroid: complex
    coeffs: np.ndarray = field(repr=False)  # highest power first, rho as a function of theta
    floor: float  # radius never undercut by the boundary (95th percentile, or the degenerate disc)
    margin: float
    sample_count: int
    last_update_time: float
    degenerate: bool = False

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def boundary(self, theta) -> np.ndarray:
        fitted = np.polyval(self.coeffs, theta)
        return self.margin * np.maximum(fitted, self.floor)

    def ratio(self, lam) -> np.ndarray:
        d = np.asarray(lam, dtype=complex) - self.centroid
        rho = np.abs(d)
        b = self.boundary(np.angle(d))
        return rho / b


def _fit_one(cid: int, pts: np.ndarray, cfg: DetectorConfig, t: float) -> Zone:
    centroid = complex(pts.mean())
    d = pts - centroid
    rho = np.abs(d)
    if rho.max() == 0.0:
        radius = cfg.min_radius_frac * abs(centroid)
        if radius == 0.0:
            radius = cfg.min_radius_frac
        return Zone(cid, centroid, np.array([0.0]), radius / cfg.margin, cfg.margin, len(pts), t, True)
    theta = np.angle(d)
    # duplicate the outer half of the angle range across the wrap so the fit
    # does not tear at +-pi
    hi, lo = theta > np.pi / 2, theta < -np.pi / 2
    th_ext = np.concatenate([theta, theta[hi] - 2 * np.pi, theta[lo] + 2 * np.pi])
    rho_ext = np.concatenate([rho, rho[hi], rho[lo]])
    coeffs = np.polyfit(th_ext, rho_ext, cfg.poly_degree)
    q95 = float(np.quantile(rho, 0.95, method="higher"))
    return Zone(cid, centroid, coeffs, q95, cfg.margin, len(pts), t)


def fit_zones(clusters: list[np.ndarray], cfg: DetectorConfig, t: float = 0.0) -> list[Zone]:
    zones = []
    for cid, pts in enumerate(clusters):
        pts = np.asarray(pts, dtype=complex)
        if len(pts) < cfg.poly_degree + 2:
            raise InsufficientDataError(
                f"cluster {cid} has {len(pts)} samples, needs {cfg.poly_degree + 2}")
        zones.append(_fit_one(cid, pts, cfg, t))
    return zones


def train_zones(samples, cfg: DetectorConfig, t: float = 0.0) -> list[Zone]:
    """Cluster then fit; clusters too small to fit are dropped."""
    z = np.asarray(samples, dtype=complex)
    labels, _ = cluster(z, min(cfg.k_clusters, len(z)), cfg.seed)
    groups = [z[labels == j] for j in range(labels.max() + 1)]
    groups = [g for g in groups if len(g) >= cfg.poly_degree + 2]
    if not groups:
        raise InsufficientDataError("no cluster large enough to fit a zone")
    return fit_zones(groups, cfg, t)


def classify(lam: complex, zones: list[Zone]) -> tuple[bool, float]:
    """``(in_zone, distance)``; distance is margin-normalised, negative inside."""
    if not zones:
        raise ConfigurationError("detector has no zones")
    dist = min(float(z.ratio(lam)) for z in zones) - 1.0
    return dist <= 0.0, dist


@dataclass(frozen=True)
class DetectionEvent:
    t: float
    line_id: str
    kind: str  # "ALARM" or "CLEAR"
    sample: EigenSample
    distance: float


class ZoneDetector:
    """Per-line detector; feed samples strictly in time order via :meth:`step`."""

    def __init__(self, cfg: DetectorConfig = DetectorConfig(), line_id: str = "line"):
        self.cfg = cfg
        self.line_id = line_id
        self.zones: list[Zone] = []
        self.snapshots: list[tuple[float, list[Zone]]] = []
        self.events: list[DetectionEvent] = []
        self._training: list[complex] = []
        self._since_refit: list[complex] = []
        # in-zone samples waiting out the hold-off; an ALARM throws them away
        # because a drifting estimate is usually inside the zone for a few
        # windows before it leaves
        self._pending: deque[complex] = deque()
        self._skip = 0
        self._last_refit = 0.0
        self._count = 0
        self.alarm_active = False

    @property
    def armed(self) -> bool:
        return bool(self.zones)

    def _refit(self, data, t):
        self.zones = train_zones(np.asarray(data), self.cfg, t)
        self.snapshots.append((t, self.zones))
        self._last_refit = t

    def step(self, sample: EigenSample) -> DetectionEvent | None:
        if sample.withheld:
            return None
        if not self.armed:
            self._training.append(sample.lam)
            if len(self._training) >= self.cfg.training_min:
                self._refit(self._training, sample.t)
                self._training = []
            return None

        in_zone, dist = classify(sample.lam, self.zones)
        event = None
        if in_zone:
            if self.alarm_active:
                self.alarm_active = False
                event = DetectionEvent(sample.t, self.line_id, "CLEAR", sample, dist)
                self._skip = self.cfg.holdoff
            self._count = 0
            if self._skip > 0:
                self._skip -= 1
            else:
                self._hold(sample.lam)
        else:
            self._count += 1
            if self._count == self.cfg.confirm_count and not self.alarm_active:
                self.alarm_active = True
                event = DetectionEvent(sample.t, self.line_id, "ALARM", sample, dist)
                self._pending.clear()
        if event is not None:
            self.events.append(event)

        # zones stay frozen while alarmed
        if not self.alarm_active and sample.t - self._last_refit >= self.cfg.update_interval:
            need = max(self.cfg.k_clusters * (self.cfg.poly_degree + 2), 1)
            if len(self._since_refit) >= need:
                self._refit(self._since_refit, sample.t)
                self._since_refit = []
        return event

    def _hold(self, lam: complex) -> None:
        self._pending.append(lam)
        while len(self._pending) > self.cfg.holdoff:
            self._since_refit.append(self._pending.popleft())

    def run(self, samples) -> list[DetectionEvent]:
        out = []
        for s in samples:
            ev = self.step(s)
            if ev is not None:
                out.append(ev)
        return out


EVENT_CSV_COLUMNS = ("t", "line_id", "kind", "re", "im", "distance")


def write_event_csv(path, events: list[DetectionEvent]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_CSV_COLUMNS)
        for e in events:
            w.writerow([repr(e.t), e.line_id, e.kind, repr(e.sample.lam.real),
                        repr(e.sample.lam.imag), repr(e.distance)])


def write_zone_snapshots(path, snapshots: list[tuple[float, list[Zone]]]) -> None:
    """One line per zone per refit: time, id, centroid, degree, margin, floor, coefficients."""
    with open(path, "w") as fh:
        fh.write("# refit_t cluster_id centroid_re centroid_im degree margin floor coeffs...\n")
        for t, zones in snapshots:
            for z in zones:
                fields = [repr(t), str(z.cluster_id), repr(z.centroid.real), repr(z.centroid.imag),
                          str(z.degree), repr(z.margin), repr(z.floor)]
                fields += [repr(float(c)) for c in z.coeffs]
                fh.write(" ".join(fields) + "\n")


def read_zone_snapshots(path) -> list[tuple[float, list[Zone]]]:
    out: dict[float, list[Zone]] = {}
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            f = line.split()
            t = float(f[0])
            coeffs = np.array([float(c) for c in f[7:]])
            z = Zone(int(f[1]), complex(float(f[2]), float(f[3])), coeffs, float(f[6]), float(f[5]), 0, t)
            out.setdefault(t, []).append(z)
    return list(out.items())
