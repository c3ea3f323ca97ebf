"""Periodic spectral grids, fields, transforms and dealiased products.

The continuous space R^d is approximated by a torus of period ``2*pi*m`` per
axis.  Physical frequencies live on the lattice ``n / m`` with integer ``n``
and ``|n|_inf <= K*m``, so every unit frequency cube holds ``m**d`` modes.

Spectral coefficients are stored in *centred* order: array index ``i`` on an
axis corresponds to the integer lattice label ``n = i - K*m``.  Coefficients
are normalised so that ``f(x) = sum_n c_n exp(i x . n/m)``; with the
normalised spatial measure this makes Parseval exact,
``mean(|f|**2) == sum(|c|**2)``.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.fft as sfft

SPATIAL = "spatial"
SPECTRAL = "spectral"

DEFAULT_MEMORY_CAP = 1 << 30  # bytes
_WORK_ARRAYS = 12  # padded arrays alive at once in the heaviest kernel

_MAGIC = b"MODNS1"


class GridError(ValueError):
    """Invalid grid parameters or incompatible grids."""


class HypothesisError(ValueError):
    """Parameters violate the hypothesis of the estimate being evaluated."""


@dataclass(frozen=True)
class SpectralGrid:
    """Torus discretisation with a rational frequency lattice.

    Parameters
    ----------
    d : int
        Spatial dimension, 2 or 3.
    m : int
        Modes per unit frequency cube per axis.  Frequency spacing is ``1/m``.
    K : int
        Cutoff in unit cubes; lattice labels satisfy ``|n|_inf <= K*m``.
    oversample : int
        Padding factor used by dealiased products.
    """

    d: int
    m: int
    K: int
    oversample: int = 2

    @property
    def half(self) -> int:
        """Largest resolved integer label ``K*m``."""
        return self.K * self.m

    @property
    def n_modes(self) -> int:
        """Resolved modes per axis, ``2*K*m + 1``."""
        return 2 * self.half + 1

    @property
    def n_padded(self) -> int:
        """Nominal modes per axis after padding, ``oversample*2*K*m + 1``."""
        return 2 * self.oversample * self.half + 1

    @property
    def fft_padded(self) -> int:
        """FFT length used for padded products (fast length >= ``n_padded``)."""
        return sfft.next_fast_len(self.n_padded)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_modes,) * self.d

    @property
    def period(self) -> float:
        return 2.0 * np.pi * self.m

    @property
    def spacing(self) -> float:
        """Spatial grid step."""
        return self.period / self.n_modes

    def labels(self) -> np.ndarray:
        """Integer lattice labels along one axis, in centred order."""
        return np.arange(-self.half, self.half + 1)

    def axis_frequencies(self) -> np.ndarray:
        """Physical frequencies ``n/m`` along one axis."""
        return self.labels() / self.m

    def frequency_mesh(self) -> list[np.ndarray]:
        """Broadcastable physical frequency components, one per axis."""
        xi = self.axis_frequencies()
        out = []
        for ax in range(self.d):
            shp = [1] * self.d
            shp[ax] = self.n_modes
            out.append(xi.reshape(shp))
        return out

    def label_mesh(self) -> list[np.ndarray]:
        """Broadcastable integer labels, one per axis."""
        n = self.labels()
        out = []
        for ax in range(self.d):
            shp = [1] * self.d
            shp[ax] = self.n_modes
            out.append(n.reshape(shp))
        return out

    def xi_sq(self) -> np.ndarray:
        """Squared Euclidean frequency ``|xi|_2**2`` on the full lattice."""
        return sum(x**2 for x in self.frequency_mesh()) * np.ones(self.shape)

    def xi_l1(self) -> np.ndarray:
        """l1 frequency norm ``|xi|_1`` on the full lattice."""
        return sum(np.abs(x) for x in self.frequency_mesh()) * np.ones(self.shape)

    def spatial_axis(self) -> np.ndarray:
        return np.arange(self.n_modes) * self.spacing

    def spatial_mesh(self) -> list[np.ndarray]:
        x = self.spatial_axis()
        out = []
        for ax in range(self.d):
            shp = [1] * self.d
            shp[ax] = self.n_modes
            out.append(x.reshape(shp))
        return out

    def index_of(self, xi: Sequence[float]) -> tuple[int, ...]:
        """Array index of the lattice point nearest to physical frequency ``xi``."""
        idx = tuple(int(round(float(v) * self.m)) + self.half for v in xi)
        if any(i < 0 or i >= self.n_modes for i in idx):
            raise GridError(f"frequency {tuple(xi)} outside resolved band")
        return idx

    def memory_estimate(self) -> int:
        """Bytes needed by the padded product kernel."""
        return self.fft_padded**self.d * 16 * _WORK_ARRAYS


def make_grid(d: int, m: int, K: int, oversample: int = 2,
              memory_cap: int | None = DEFAULT_MEMORY_CAP) -> SpectralGrid:
    """Build a grid after validating its parameters.

    Raises
    ------
    GridError
        If ``d`` is not 2 or 3, ``m < 4``, ``K < 2``, ``oversample < 2`` or the
        padded working set would exceed ``memory_cap`` bytes.

    Examples
    --------
    >>> g = make_grid(2, 8, 4)
    >>> g.n_modes, g.n_padded
    (65, 129)
    """
    if d not in (2, 3):
        raise GridError(f"dimension must be 2 or 3, got {d}")
    if int(m) != m or m < 4:
        raise GridError(f"m must be an integer >= 4, got {m}")
    if int(K) != K or K < 2:
        raise GridError(f"K must be an integer >= 2, got {K}")
    if int(oversample) != oversample or oversample < 2:
        raise GridError(f"oversample must be an integer >= 2, got {oversample}")
    grid = SpectralGrid(int(d), int(m), int(K), int(oversample))
    if memory_cap is not None and grid.memory_estimate() > memory_cap:
        raise GridError(
            f"grid (d={d}, m={m}, K={K}) needs ~{grid.memory_estimate() / 2**20:.0f} MiB, "
            f"above the cap of {memory_cap / 2**20:.0f} MiB")
    return grid


# ---------------------------------------------------------------------------
# raw array transforms (leading axes are batch axes)


def _axes(d: int) -> tuple[int, ...]:
    return tuple(range(-d, 0))


def to_spectral(values: np.ndarray, d: int) -> np.ndarray:
    """Spatial samples -> centred coefficients, batched over leading axes."""
    ax = _axes(d)
    n_total = np.prod(values.shape[-d:])
    return sfft.fftshift(sfft.fftn(values, axes=ax), axes=ax) / n_total


def to_spatial(coeffs: np.ndarray, d: int) -> np.ndarray:
    """Centred coefficients -> spatial samples, batched over leading axes."""
    ax = _axes(d)
    n_total = np.prod(coeffs.shape[-d:])
    return sfft.ifftn(sfft.ifftshift(coeffs, axes=ax), axes=ax) * n_total


def pad_spectrum(coeffs: np.ndarray, d: int, size: int) -> np.ndarray:
    """Embed a centred spectrum of odd length into a centred array of ``size``."""
    n = coeffs.shape[-1]
    half = n // 2
    out = np.zeros(coeffs.shape[:-d] + (size,) * d, dtype=complex)
    c = size // 2
    sl = (Ellipsis,) + (slice(c - half, c + half + 1),) * d
    out[sl] = coeffs
    return out


def crop_spectrum(coeffs: np.ndarray, d: int, n: int) -> np.ndarray:
    """Inverse of :func:`pad_spectrum`: keep the central ``n`` labels per axis."""
    size = coeffs.shape[-1]
    c = size // 2
    half = n // 2
    sl = (Ellipsis,) + (slice(c - half, c + half + 1),) * d
    return coeffs[sl]


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class Field:
    """Complex scalar field tagged with its representation.

    ``flags`` carries non-fatal diagnostics such as dealiasing truncation or
    an out-of-band block request.
    """

    grid: SpectralGrid
    rep: str
    values: np.ndarray
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.rep not in (SPATIAL, SPECTRAL):
            raise ValueError(f"unknown representation {self.rep!r}")
        if self.values.shape != self.grid.shape:
            raise GridError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        arr = np.asarray(self.values, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def spectral(self) -> np.ndarray:
        """Centred spectral coefficients (transforming if needed)."""
        if self.rep == SPECTRAL:
            return self.values
        return to_spectral(self.values, self.grid.d)

    def spatial(self) -> np.ndarray:
        if self.rep == SPATIAL:
            return self.values
        return to_spatial(self.values, self.grid.d)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self.grid, other.grid)
        return Field(self.grid, SPECTRAL, self.spectral() + other.spectral())

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self.grid, other.grid)
        return Field(self.grid, SPECTRAL, self.spectral() - other.spectral())

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.rep, self.values * complex(c))

    __rmul__ = __mul__

    def with_flags(self, *flags: str) -> "Field":
        return Field(self.grid, self.rep, self.values, self.flags + tuple(flags))


@dataclass(frozen=True, eq=False)
class VectorField:
    """``d`` complex components on one grid.

    ``divergence_free`` is advisory; :func:`divergence_defect` measures it.
    """

    components: tuple[Field, ...]
    divergence_free: bool = False

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a vector field needs at least one component")
        for c in comps[1:]:
            _same_grid(comps[0].grid, c.grid)
        object.__setattr__(self, "components", comps)

    @property
    def grid(self) -> SpectralGrid:
        return self.components[0].grid

    def spectral(self) -> np.ndarray:
        """Stacked coefficients, shape ``(ncomp, *grid.shape)``."""
        return np.stack([c.spectral() for c in self.components])

    @classmethod
    def from_spectral(cls, grid: SpectralGrid, coeffs: np.ndarray,
                      divergence_free: bool = False) -> "VectorField":
        return cls(tuple(Field(grid, SPECTRAL, c) for c in coeffs), divergence_free)


def _same_grid(a: SpectralGrid, b: SpectralGrid) -> None:
    if a != b:
        raise GridError(f"grid mismatch: {a} vs {b}")


def transform(f: Field, target: str) -> Field:
    """Change the representation of ``f`` to ``target``."""
    if target not in (SPATIAL, SPECTRAL):
        raise ValueError(f"unknown representation {target!r}")
    if f.rep == target:
        return f
    vals = f.spectral() if target == SPECTRAL else f.spatial()
    return Field(f.grid, target, vals, f.flags)


def from_function(grid: SpectralGrid, func) -> Field:
    """Sample ``func(*x_mesh)`` on the spatial grid."""
    vals = func(*grid.spatial_mesh()) * np.ones(grid.shape)
    return Field(grid, SPATIAL, vals)


def single_mode(grid: SpectralGrid, xi: Sequence[float], amplitude: complex = 1.0) -> Field:
    """Spectral field with one nonzero coefficient at physical frequency ``xi``."""
    c = np.zeros(grid.shape, dtype=complex)
    c[grid.index_of(xi)] = amplitude
    return Field(grid, SPECTRAL, c)


def zeros(grid: SpectralGrid) -> Field:
    return Field(grid, SPECTRAL, np.zeros(grid.shape, dtype=complex))


def random_field(grid: SpectralGrid, rng: np.random.Generator,
                 decay: float = 0.0) -> Field:
    """Gaussian random coefficients, optionally damped by ``exp(-decay*|xi|_2)``."""
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if decay:
        c = c * np.exp(-decay * np.sqrt(grid.xi_sq()))
    return Field(grid, SPECTRAL, c)


def lp_of_samples(values: np.ndarray, p: float, d: int) -> np.ndarray:
    """Normalised L^p norm of samples over the trailing ``d`` axes."""
    ax = _axes(d)
    a = np.abs(values)
    if np.isinf(p):
        return a.max(axis=ax)
    if p == 2:
        return np.sqrt(np.mean(a * a, axis=ax))
    return np.mean(a**p, axis=ax) ** (1.0 / p)


def lp_norm(f: Field, p: float) -> float:
    """Riemann-sum L^p norm with the normalised torus measure.

    ``p = inf`` returns the maximum modulus.  The constant function has norm 1
    for every ``p``.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(lp_of_samples(f.spatial(), p, f.grid.d))


def vector_lp_norm(u: VectorField, p: float) -> float:
    """L^p norm of the pointwise Euclidean modulus of ``u``."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    vals = to_spatial(u.spectral(), u.grid.d)
    mod = np.sqrt(np.sum(np.abs(vals) ** 2, axis=0))
    return float(lp_of_samples(mod, p, u.grid.d))


# ---------------------------------------------------------------------------
# dealiased products


def product_arrays(a: np.ndarray, b: np.ndarray, grid: SpectralGrid,
                   check_band: bool = True) -> tuple[np.ndarray, float]:
    """Dealiased product of centred spectra, batched over leading axes.

    Returns the truncated product spectrum and the fraction of its l2 energy
    that fell outside the resolved band (0 when nothing was cut).
    """
    d = grid.d
    L = grid.fft_padded
    pa = to_spatial(pad_spectrum(a, d, L), d)
    pb = to_spatial(pad_spectrum(b, d, L), d)
    full = to_spectral(pa * pb, d)
    kept = crop_spectrum(full, d, grid.n_modes)
    lost = 0.0
    if check_band:
        tot = np.sum(np.abs(full) ** 2)
        if tot > 0:
            lost = float(max(tot - np.sum(np.abs(kept) ** 2), 0.0) / tot)
    return np.ascontiguousarray(kept), lost


def support_extent(coeffs: np.ndarray, d: int, tol: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis min and max index of coefficients with modulus above ``tol``."""
    nz = np.argwhere(np.abs(coeffs) > tol)
    if nz.size == 0:
        return np.zeros(d, int), np.full(d, -1)
    return nz.min(axis=0)[-d:], nz.max(axis=0)[-d:]


def product_dealiased(f: Field, g: Field, tol: float = 1e-14) -> Field:
    """Pointwise product computed on the padded grid, truncated to the band.

    The result spectrum equals the exact discrete convolution of the two
    spectra restricted to the resolved band.  When the convolution support
    leaves the resolved band the result carries a ``"band_overflow"`` flag and
    a warning is emitted instead of silently dropping modes.
    """
    _same_grid(f.grid, g.grid)
    grid = f.grid
    a, b = f.spectral(), g.spectral()
    out, lost = product_arrays(a, b, grid)
    flags = ()
    la, ha = support_extent(a, grid.d, tol * max(np.abs(a).max(initial=0), 1e-300))
    lb, hb = support_extent(b, grid.d, tol * max(np.abs(b).max(initial=0), 1e-300))
    if (ha >= 0).all() and (hb >= 0).all():
        # target index of source indices i, j is i + j - half
        lo = la + lb - grid.half
        hi = ha + hb - grid.half
        if (lo < 0).any() or (hi > 2 * grid.half).any():
            flags = (f"band_overflow:{lost:.3e}",)
            warnings.warn(f"product support exceeds the resolved band; "
                          f"{lost:.3e} of the energy truncated", RuntimeWarning, stacklevel=2)
    return Field(grid, SPECTRAL, out, flags)


def brute_convolution(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """O(N^2) direct convolution of two centred spectra, truncated to the band.

    Used as an independent oracle for :func:`product_dealiased`.
    """
    d = a.ndim
    n = a.shape[0]
    half = n // 2
    out = np.zeros_like(a, dtype=complex)
    ia = np.argwhere(a != 0)
    ib = np.argwhere(b != 0)
    for i in ia:
        ai = a[tuple(i)]
        tgt = i[None, :] + ib - half
        ok = np.all((tgt >= 0) & (tgt < n), axis=1)
        for t, j in zip(tgt[ok], ib[ok]):
            out[tuple(t)] += ai * b[tuple(j)]
    return out


# ---------------------------------------------------------------------------
# serialisation

_REP_CODE = {SPATIAL: 0, SPECTRAL: 1}
_CODE_REP = {v: k for k, v in _REP_CODE.items()}
_HEADER = struct.Struct("<6sBIIB")


def field_to_bytes(f: Field) -> bytes:
    """Flat container: magic, d, m, K, rep tag, then little-endian complex64."""
    g = f.grid
    head = _HEADER.pack(_MAGIC, g.d, g.m, g.K, _REP_CODE[f.rep])
    body = np.ascontiguousarray(f.values, dtype="<c8").tobytes(order="C")
    return head + body


def field_from_bytes(buf: bytes, oversample: int = 2) -> Field:
    magic, d, m, K, rep = _HEADER.unpack_from(buf, 0)
    if magic != _MAGIC:
        raise ValueError("not a field container (bad magic)")
    grid = SpectralGrid(d, m, K, oversample)
    n = grid.n_modes**d
    vals = np.frombuffer(buf, dtype="<c8", count=n, offset=_HEADER.size)
    return Field(grid, _CODE_REP[rep], vals.reshape(grid.shape).astype(complex))


def save_field(f: Field, path: str | Path) -> None:
    Path(path).write_bytes(field_to_bytes(f))


def load_field(path: str | Path) -> Field:
    return field_from_bytes(Path(path).read_bytes())


def vector_from_fields(fields: Iterable[Field]) -> VectorField:
    return VectorField(tuple(fields))
