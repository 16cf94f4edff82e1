"""Stochastic scene generation: array layout, receiver state, clusters.

A scene is one realization of the random environment around a fixed LED
array and a (possibly moving, rotating) receiver. Cluster visibility is
evolved element-by-element across the array with a birth-death process;
each cluster owns a cloud of scatterers, an equivalent surface normal and
an effective reflectance sampled from the bundled material curves.

All randomness flows from a single integer master seed through named
sub-streams (visibility, one per cluster, bounce pairing), so rebuilding
a scene is bit-identical regardless of iteration order or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import geometry, optics
from .errors import DegenerateNormalError, ZeroDistanceError
from .geometry import ArrayOrientation

__all__ = [
    "Cluster",
    "EvolutionParams",
    "ClusterDistribution",
    "LedArray",
    "Receiver",
    "Scene",
    "SceneSnapshot",
    "assign_bounce",
    "build_scene",
    "evolve_visibility",
    "sample_cluster",
    "survival_probability",
]

DEFAULT_ORIENTATION = ArrayOrientation(
    row_azimuth=math.pi / 2,
    row_elevation=0.0,
    col_azimuth=math.pi,
    col_elevation=math.pi / 2,
)


@dataclass(frozen=True)
class LedArray:
    """Rectangular LED array; element (1, 1) sits at the global origin."""

    rows: int = 4
    cols: int = 4
    spacing_h: float = 1.0
    spacing_v: float = 1.0
    orientation: ArrayOrientation = DEFAULT_ORIENTATION
    pattern: object = field(default_factory=optics.LambertianPattern)
    tx_power: float = 1.0

    @cached_property
    def frame(self) -> np.ndarray:
        return geometry.gcs_to_lcs11(self.orientation)

    @cached_property
    def frame_inv(self) -> np.ndarray:
        return geometry.invert_frame(self.frame)

    @cached_property
    def positions(self) -> np.ndarray:
        """(rows, cols, 3) global element positions."""
        out = np.empty((self.rows, self.cols, 3))
        for i in range(self.rows):
            for j in range(self.cols):
                out[i, j] = geometry.led_position(
                    i + 1, j + 1, self.orientation, self.spacing_h, self.spacing_v
                )
        return out

    def element_position(self, i: int, j: int) -> np.ndarray:
        return self.positions[i - 1, j - 1]


@dataclass(frozen=True)
class Receiver:
    """Photodetector head: position, motion, rotation and front-end optics."""

    distance: float = 2.0
    n_pd: int = 1
    theta_pd: float = math.radians(45.0)
    area: float = 1e-4
    azimuth: float = math.pi
    elevation: float = 0.0
    rot_azimuth: float = 0.0
    rot_elevation: float = 0.0
    speed: float = 0.0
    travel_azimuth: float = 0.0
    travel_elevation: float = 0.0
    optics: optics.RxOptics = field(default_factory=optics.RxOptics)

    @property
    def initial_position(self) -> np.ndarray:
        return np.array([self.distance, 0.0, 0.0])

    def position_at(self, t: float) -> np.ndarray:
        step = self.speed * t * geometry.direction(self.travel_azimuth, self.travel_elevation)
        return self.initial_position + step

    def pd_normals(self, t: float) -> list[np.ndarray]:
        return geometry.pd_normals(
            self.n_pd,
            self.theta_pd,
            self.azimuth,
            self.elevation,
            self.rot_azimuth,
            self.rot_elevation,
            t,
        )


@dataclass(frozen=True)
class EvolutionParams:
    """Birth-death rates of cluster visibility across the array (per meter)."""

    birth_rate: float = 80.0
    death_rate: float = 4.0
    correlation_factor: float = 10.0

    def __post_init__(self):
        if self.birth_rate <= 0 or self.death_rate <= 0 or self.correlation_factor <= 0:
            raise ValueError("evolution rates must be positive")

    @property
    def initial_count(self) -> int:
        return int(round(self.birth_rate / self.death_rate))


@dataclass(frozen=True)
class ClusterDistribution:
    """Sampling parameters for cluster placement and scatterer spreads."""

    tx_azimuth_mean: float = 0.0
    tx_azimuth_std: float = math.radians(40.0)
    tx_elevation_mean: float = 0.0
    tx_elevation_std: float = math.radians(40.0)
    rx_azimuth_mean: float = math.pi
    rx_azimuth_std: float = math.radians(40.0)
    rx_elevation_mean: float = 0.0
    rx_elevation_std: float = math.radians(40.0)
    distance_mean: float | None = None
    sigma_ds: float = 1.0
    sigma_as: float = 1.0
    sigma_es: float = 1.0
    scatterers_per_cluster: int = 100
    effective_area: float = 1.0
    sb_ratio: float = 0.9
    speed: float = 0.0
    travel_azimuth: float = 0.0
    travel_elevation: float = 0.0


@dataclass(frozen=True, eq=False)
class Cluster:
    """One realized scattering cluster.

    Angles and distance are relative to the cluster's anchor (the first
    LED element for Tx-side clusters, the initial receiver position for
    Rx-side ones). ``scatterers0`` holds initial global positions.
    """

    side: str
    azimuth: float
    elevation: float
    distance: float
    anchor: np.ndarray
    normal: np.ndarray
    material: str
    reflectance: float
    scatterers0: np.ndarray
    area_per_scatterer: float
    speed: float
    travel_azimuth: float
    travel_elevation: float

    @property
    def center0(self) -> np.ndarray:
        return self.anchor + geometry.sph_to_cart(
            geometry.AnglePair(self.azimuth, self.elevation), self.distance
        )

    @property
    def velocity(self) -> np.ndarray:
        return self.speed * geometry.direction(self.travel_azimuth, self.travel_elevation)


# === birth-death evolution across the array ===

def _step_probability(evo: EvolutionParams, spacing: float, axis_elevation: float) -> float:
    p = math.exp(-evo.birth_rate * spacing * math.cos(axis_elevation) / evo.correlation_factor)
    return min(p, 1.0)


def survival_probability(
    evo: EvolutionParams,
    orientation: ArrayOrientation,
    spacing_h: float,
    spacing_v: float,
    di: int,
    dj: int,
) -> float:
    """Probability that one cluster stays visible across an element offset."""
    p_col = _step_probability(evo, spacing_h, orientation.col_elevation)
    p_row = _step_probability(evo, spacing_v, orientation.row_elevation)
    return p_col ** abs(di) * p_row ** abs(dj)


def evolve_visibility(
    rows: int,
    cols: int,
    spacing_h: float,
    spacing_v: float,
    orientation: ArrayOrientation,
    evo: EvolutionParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Cluster visibility per LED element as a (rows, cols, n_total) mask.

    Element (1, 1) observes round(birth_rate/death_rate) initial clusters.
    Visibility evolves first down the first column, then along each row:
    every visible cluster survives one element step with the recursion
    probability exp(-birth_rate * spacing * cos(axis_elevation) / Dc) and
    Poisson-many new clusters (mean initial_count * (1 - p)) are born and
    carried forward. Column indices beyond the mask are never revisited,
    so the third axis length is the total number of clusters ever born.
    """
    p_col = _step_probability(evo, spacing_h, orientation.col_elevation)
    p_row = _step_probability(evo, spacing_v, orientation.row_elevation)
    n0 = evo.initial_count
    mean_col = n0 * (1.0 - p_col)
    mean_row = n0 * (1.0 - p_row)

    sets: list[list[list[int]]] = [[[] for _ in range(cols)] for _ in range(rows)]
    sets[0][0] = list(range(n0))
    next_id = n0

    def advance(prev: list[int], p: float, mean_new: float) -> list[int]:
        nonlocal next_id
        keep = rng.random(len(prev)) < p
        survivors = [c for c, k in zip(prev, keep) if k]
        born = int(rng.poisson(mean_new))
        fresh = list(range(next_id, next_id + born))
        next_id += born
        return survivors + fresh

    for i in range(1, rows):
        sets[i][0] = advance(sets[i - 1][0], p_col, mean_col)
    for i in range(rows):
        for j in range(1, cols):
            sets[i][j] = advance(sets[i][j - 1], p_row, mean_row)

    mask = np.zeros((rows, cols, next_id), dtype=bool)
    for i in range(rows):
        for j in range(cols):
            mask[i, j, sets[i][j]] = True
    return mask


def assign_bounce(
    n_total: int, sb_ratio: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Mark which Tx-side clusters bounce twice and pair them with Rx-side ones.

    Returns (is_db, partner): ceil(n_total * (1 - sb_ratio)) clusters are
    double-bounce, chosen uniformly; partners cycle round-robin through
    the Rx-side cluster indices. Single-bounce clusters get partner -1.
    """
    if not 0.0 <= sb_ratio <= 1.0:
        raise ValueError("single-bounce ratio must lie in [0, 1]")
    n_db = math.ceil(n_total * (1.0 - sb_ratio))
    is_db = np.zeros(n_total, dtype=bool)
    partner = np.full(n_total, -1, dtype=int)
    if n_db:
        chosen = np.sort(rng.choice(n_total, size=n_db, replace=False))
        is_db[chosen] = True
        partner[chosen] = np.arange(n_db) % max(n_db, 1)
    return is_db, partner


# === cluster sampling ===

def _placement_rotation(azimuth: float, elevation: float) -> np.ndarray:
    ca, sa = math.cos(azimuth), math.sin(azimuth)
    ce, se = math.cos(elevation), math.sin(elevation)
    rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    re = np.array([[ce, 0.0, -se], [0.0, 1.0, 0.0], [se, 0.0, ce]])
    return rz @ re


def sample_cluster(
    side: str,
    dist: ClusterDistribution,
    anchor: np.ndarray,
    distance_mean: float,
    gamma_by_material: dict[str, float],
    material_weights: dict[str, float],
    rng: np.random.Generator,
) -> Cluster:
    """Draw one cluster: angles (wrapped Gaussian), distance (exponential),
    material, equivalent normal and the scatterer cloud.

    Degenerate centers on the LoS axis are redrawn (at most 100 times).
    """
    if side == "tx":
        az_mean, az_std = dist.tx_azimuth_mean, dist.tx_azimuth_std
        el_mean, el_std = dist.tx_elevation_mean, dist.tx_elevation_std
    else:
        az_mean, az_std = dist.rx_azimuth_mean, dist.rx_azimuth_std
        el_mean, el_std = dist.rx_elevation_mean, dist.rx_elevation_std

    for _ in range(100):
        azimuth = float(geometry.wrap_azimuth(az_mean + az_std * rng.standard_normal()))
        elevation = float(
            np.mod(el_mean + el_std * rng.standard_normal() + math.pi, 2.0 * math.pi)
            - math.pi
        )
        distance = float(rng.exponential(distance_mean))
        try:
            normal = geometry.cluster_equivalent_normal(azimuth, elevation, distance)
            break
        except DegenerateNormalError:
            continue
    else:
        raise DegenerateNormalError("could not draw an off-axis cluster center")

    names = list(material_weights)
    weights = np.array([material_weights[k] for k in names], dtype=float)
    material = names[int(rng.choice(len(names), p=weights / weights.sum()))]

    m = dist.scatterers_per_cluster
    offsets = rng.standard_normal((m, 3)) * np.array(
        [dist.sigma_ds, dist.sigma_as, dist.sigma_es]
    )
    local = offsets + np.array([distance, 0.0, 0.0])
    rot = _placement_rotation(azimuth, elevation)
    scatterers = np.asarray(anchor) + local @ rot.T

    return Cluster(
        side=side,
        azimuth=azimuth,
        elevation=elevation,
        distance=distance,
        anchor=np.asarray(anchor, dtype=float),
        normal=normal,
        material=material,
        reflectance=gamma_by_material[material],
        scatterers0=scatterers,
        area_per_scatterer=dist.effective_area / m,
        speed=dist.speed,
        travel_azimuth=dist.travel_azimuth,
        travel_elevation=dist.travel_elevation,
    )


# === the scene ===

@dataclass(frozen=True, eq=False)
class SceneSnapshot:
    """All positions and normals of a scene frozen at one instant."""

    scene: "Scene"
    time: float

    @cached_property
    def rx_position(self) -> np.ndarray:
        return self.scene.receiver.position_at(self.time)

    @cached_property
    def pd_normals(self) -> list[np.ndarray]:
        return self.scene.receiver.pd_normals(self.time)

    @cached_property
    def tx_scatterers(self) -> np.ndarray:
        return (
            self.scene.tx_scatterers0
            + self.scene.tx_velocity[:, None, :] * self.time
        )

    @cached_property
    def rx_scatterers(self) -> np.ndarray:
        if self.scene.rx_scatterers0.size == 0:
            return self.scene.rx_scatterers0
        return (
            self.scene.rx_scatterers0
            + self.scene.rx_velocity[:, None, :] * self.time
        )

    def at(self, dt: float) -> "SceneSnapshot":
        """Snapshot ``dt`` later; exact, since positions are linear in time."""
        return SceneSnapshot(self.scene, self.time + dt)


@dataclass(frozen=True, eq=False)
class Scene:
    """One realization of the random propagation environment."""

    array: LedArray
    receiver: Receiver
    evolution: EvolutionParams
    distribution: ClusterDistribution
    clusters: tuple[Cluster, ...]
    rx_clusters: tuple[Cluster, ...]
    visibility: np.ndarray
    is_db: np.ndarray
    partner: np.ndarray
    seed: int
    fingerprint: str = ""

    # stacked views for fast evaluation
    @cached_property
    def tx_scatterers0(self) -> np.ndarray:
        if not self.clusters:
            return np.zeros((0, 0, 3))
        return np.stack([c.scatterers0 for c in self.clusters])

    @cached_property
    def tx_velocity(self) -> np.ndarray:
        if not self.clusters:
            return np.zeros((0, 3))
        return np.stack([c.velocity for c in self.clusters])

    @cached_property
    def rx_scatterers0(self) -> np.ndarray:
        if not self.rx_clusters:
            return np.zeros((0, 0, 3))
        return np.stack([c.scatterers0 for c in self.rx_clusters])

    @cached_property
    def rx_velocity(self) -> np.ndarray:
        if not self.rx_clusters:
            return np.zeros((0, 3))
        return np.stack([c.velocity for c in self.rx_clusters])

    @cached_property
    def tx_normals(self) -> np.ndarray:
        return np.stack([c.normal for c in self.clusters]) if self.clusters else np.zeros((0, 3))

    @cached_property
    def rx_normals(self) -> np.ndarray:
        return (
            np.stack([c.normal for c in self.rx_clusters])
            if self.rx_clusters
            else np.zeros((0, 3))
        )

    @cached_property
    def tx_gamma(self) -> np.ndarray:
        return np.array([c.reflectance for c in self.clusters])

    @cached_property
    def rx_gamma(self) -> np.ndarray:
        return np.array([c.reflectance for c in self.rx_clusters])

    def at(self, t: float) -> SceneSnapshot:
        return SceneSnapshot(self, t)

    def visible_indices(self, i: int, j: int) -> np.ndarray:
        """Indices of clusters visible at element (i, j); 1-based element."""
        return np.flatnonzero(self.visibility[i - 1, j - 1])


def gamma_table(
    psd_name: str,
    wavelength_lo: float,
    wavelength_hi: float,
    material_weights: dict[str, float],
) -> dict[str, float]:
    """Effective reflectance per material for the configured source spectrum.

    A degenerate wavelength window (lo == hi) means a monochromatic
    source: the reflectance is evaluated pointwise instead of integrated.
    """
    out = {}
    for name in material_weights:
        refl = optics.load_material(name)
        if wavelength_lo == wavelength_hi:
            out[name] = float(refl.value_at(wavelength_lo))
        else:
            psd = optics.load_led_psd(psd_name)
            lo = max(wavelength_lo, psd.support[0])
            hi = min(wavelength_hi, psd.support[1])
            psd = psd.restricted(lo, hi).normalized()
            out[name] = optics.effective_reflectance(psd, refl)
    return out


def build_scene(
    array: LedArray,
    receiver: Receiver,
    evolution: EvolutionParams,
    distribution: ClusterDistribution,
    gamma_by_material: dict[str, float],
    material_weights: dict[str, float],
    seed: int,
    fingerprint: str = "",
) -> Scene:
    """Realize one scene from a master seed.

    Sub-streams: one for the visibility evolution, one per cluster (Tx
    side first, then Rx side), one for the bounce pairing.
    """
    if receiver.distance < 1e-12:
        raise ZeroDistanceError("receiver cannot sit on the first LED element")
    root = np.random.SeedSequence(seed)
    ss_vis, ss_tx, ss_rx, ss_pair = root.spawn(4)

    vis = evolve_visibility(
        array.rows,
        array.cols,
        array.spacing_h,
        array.spacing_v,
        array.orientation,
        evolution,
        np.random.default_rng(ss_vis),
    )
    n_total = vis.shape[2]
    distance_mean = (
        distribution.distance_mean
        if distribution.distance_mean is not None
        else receiver.distance / 2.0
    )

    tx_streams = ss_tx.spawn(n_total)
    clusters = tuple(
        sample_cluster(
            "tx",
            distribution,
            np.zeros(3),
            distance_mean,
            gamma_by_material,
            material_weights,
            np.random.default_rng(s),
        )
        for s in tx_streams
    )

    n_rx = math.ceil(n_total * (1.0 - distribution.sb_ratio))
    rx_streams = ss_rx.spawn(n_rx) if n_rx else []
    rx_clusters = tuple(
        sample_cluster(
            "rx",
            distribution,
            receiver.initial_position,
            distance_mean,
            gamma_by_material,
            material_weights,
            np.random.default_rng(s),
        )
        for s in rx_streams
    )

    is_db, partner = assign_bounce(
        n_total, distribution.sb_ratio, np.random.default_rng(ss_pair)
    )
    return Scene(
        array=array,
        receiver=receiver,
        evolution=evolution,
        distribution=distribution,
        clusters=clusters,
        rx_clusters=rx_clusters,
        visibility=vis,
        is_db=is_db,
        partner=partner,
        seed=seed,
        fingerprint=fingerprint,
    )
