"""Sampling-circuit emulation for the two-point estimator's (xi, w) draw.

Two interchangeable paths produce the estimator's randomness:

* an exact amplitude-vector simulator for tiny register layouts
  (``statevector_prepare`` / ``statevector_apply_h_and_norm`` /
  ``measure_sample``), and
* a classical pipeline sampler (``pipeline_sample``) that draws the same
  bitstrings directly and therefore has EXACTLY the measurement
  distribution of the state-vector path on any layout, including ones
  far beyond simulable size.

Both share one decode: register one holds xi on m1 bits; register two
holds d groups of m2 bits whose sums S_j standardize to
h_j = (2 S_j - m2) / sqrt(m2), and w is h / ||h||.  An all-zero h vector
cannot be normalized; such outcomes are flagged invalid and their exact
probability is exposed (``invalid_probability``) rather than hidden.
At large m2 the h_j approach independent standard Gaussians, so w
approaches the uniform sphere measure the estimator needs.

``emulate_U_g`` / ``emulate_V_g`` run the staged reversible-arithmetic
pipelines that evaluate g_delta(x; w, xi) (and its shared-draw
difference) in fixed-point registers, with black-box F evaluations
counted per stage: 2 for the single pipeline, 4 for the difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .objectives import ObjectiveSpec, XiSample, eval_F
from .smoothing import SmoothingParams

__all__ = [
    "DECODE_CACHE_MAX_QUBITS",
    "RegisterLayout",
    "SampleOutcome",
    "StageTape",
    "StateVector",
    "STATEVECTOR_MAX_QUBITS",
    "emulate_U_g",
    "emulate_V_g",
    "fixed_point_quantize",
    "h_standardize",
    "invalid_probability",
    "measure_sample",
    "measure_sample_batch",
    "pipeline_sample",
    "pipeline_sample_batch",
    "statevector_apply_h_and_norm",
    "statevector_prepare",
]

STATEVECTOR_MAX_QUBITS = 22
# Full per-basis-state decode tables are only cached below this size.
DECODE_CACHE_MAX_QUBITS = 16
_NORM_TOL = 1e-10


@dataclass
class RegisterLayout:
    """Register widths: m1 bits for xi, m2 bits per coordinate, d coordinates.

    frac_bits sets the fixed-point precision of the arithmetic pipelines.
    """

    m1: int
    m2: int
    d: int
    frac_bits: int = 32

    def __post_init__(self) -> None:
        for name in ("m1", "m2", "d", "frac_bits"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer")

    @property
    def total_qubits(self) -> int:
        return self.m1 + self.d * self.m2


@dataclass
class StateVector:
    """Amplitudes over the m1 + d*m2 qubit computational basis.

    decoded_* tables (basis index -> xi / w / validity) are attached by
    statevector_apply_h_and_norm on small layouts; measurement decodes
    on the fly otherwise.
    """

    amplitudes: np.ndarray
    layout: RegisterLayout
    h_applied: bool = False
    decoded_xi: np.ndarray | None = None
    decoded_w: np.ndarray | None = None
    decoded_valid: np.ndarray | None = None


@dataclass
class SampleOutcome:
    """One decoded draw; w is None when the zero-vector outcome occurred.

    rejections counts invalid draws discarded before this one (only the
    resampling pipeline mode makes it nonzero).
    """

    xi: int
    w: np.ndarray | None
    valid: bool
    rejections: int = 0


@dataclass
class StageTape:
    """Records pipeline stages; uf_calls counts black-box F evaluations."""

    stages: list[str] = field(default_factory=list)
    uf_calls: int = 0

    def note(self, stage: str) -> None:
        self.stages.append(stage)
        if stage == "U_F":
            self.uf_calls += 1


# ---------------------------------------------------------------------------
# state preparation and decoding


def _check_norm(amps: np.ndarray) -> None:
    total = float(np.sum(np.abs(amps) ** 2))
    if abs(total - 1.0) > _NORM_TOL:
        raise ValueError(f"state norm {total} deviates from 1 beyond tolerance")


def statevector_prepare(layout: RegisterLayout) -> StateVector:
    """Uniform superposition over all register bits (Hadamard on every qubit)."""
    n = layout.total_qubits
    if n > STATEVECTOR_MAX_QUBITS:
        raise ValueError(f"layout needs {n} qubits, above the {STATEVECTOR_MAX_QUBITS} guard")
    size = 1 << n
    amps = np.full(size, 1.0 / math.sqrt(size), dtype=complex)
    return StateVector(amplitudes=amps, layout=layout)


def h_standardize(bits: np.ndarray, *, uncentered: bool = False) -> float:
    """Map one coordinate's m2 bits to its standardized sum.

    The default (2*sum - m2)/sqrt(m2) has mean 0 and variance 1 under
    uniform bits, so coordinates converge to standard Gaussians as m2
    grows.  uncentered=True evaluates the variant 2*sum - sqrt(m2) for
    inspection; it is not used anywhere downstream.
    """
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size < 1:
        raise ValueError("bits must be a non-empty vector")
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be binary")
    m2 = bits.size
    s = float(np.sum(bits))
    if uncentered:
        return 2.0 * s - math.sqrt(m2)
    return (2.0 * s - m2) / math.sqrt(m2)


def _decode_indices(layout: RegisterLayout, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split basis indices into (xi, per-coordinate bit sums).

    Register one occupies the high m1 bits; coordinate j the j-th group
    of m2 bits from the low end.  Only the sums matter downstream.
    """
    idx = np.asarray(indices, dtype=np.uint64)
    body = np.uint64(layout.d * layout.m2)
    xi = (idx >> body).astype(np.int64)
    rest = idx & np.uint64((1 << int(body)) - 1)
    mask = np.uint64((1 << layout.m2) - 1)
    sums = np.empty((idx.size, layout.d), dtype=np.int64)
    for j in range(layout.d):
        grp = (rest >> np.uint64(j * layout.m2)) & mask
        sums[:, j] = np.bitwise_count(grp).astype(np.int64)
    return xi, sums


def _w_from_sums(sums: np.ndarray, m2: int) -> tuple[np.ndarray, np.ndarray]:
    """Standardize bit sums and normalize rows; exact-zero rows are invalid."""
    h = (2.0 * sums - m2) / math.sqrt(m2)
    norms = np.linalg.norm(h, axis=1)
    valid = norms > 0.0
    W = np.full_like(h, np.nan)
    np.divide(h, norms[:, None], out=W, where=valid[:, None])
    return W, valid


def statevector_apply_h_and_norm(state: StateVector) -> StateVector:
    """Run standardization and normalization on the ancilla registers.

    The arithmetic writes h-values and the norm into ancillas and divides
    the coordinate registers, a basis-relabeling that leaves every
    amplitude magnitude unchanged; the simulator therefore keeps the
    amplitude array and materializes the relabeling as decode tables
    (cached in full on small layouts, recomputed per draw otherwise).
    Basis states whose h vector is exactly zero are marked invalid.
    """
    _check_norm(state.amplitudes)
    layout = state.layout
    out = StateVector(amplitudes=state.amplitudes.copy(), layout=layout, h_applied=True)
    if layout.total_qubits <= DECODE_CACHE_MAX_QUBITS:
        all_idx = np.arange(state.amplitudes.size, dtype=np.uint64)
        xi, sums = _decode_indices(layout, all_idx)
        W, valid = _w_from_sums(sums, layout.m2)
        out.decoded_xi = xi
        out.decoded_w = W
        out.decoded_valid = valid
    return out


# ---------------------------------------------------------------------------
# sampling


def _decode_outcome(layout: RegisterLayout, index: int) -> SampleOutcome:
    xi, sums = _decode_indices(layout, np.array([index], dtype=np.uint64))
    W, valid = _w_from_sums(sums, layout.m2)
    ok = bool(valid[0])
    return SampleOutcome(xi=int(xi[0]), w=W[0] if ok else None, valid=ok)


def measure_sample(state: StateVector, rng: np.random.Generator) -> SampleOutcome:
    """Draw one basis state by Born probabilities and decode (xi, w)."""
    _check_norm(state.amplitudes)
    p = np.abs(state.amplitudes) ** 2
    cum = np.cumsum(p)
    index = int(np.searchsorted(cum, rng.uniform() * cum[-1], side="right"))
    index = min(index, p.size - 1)
    if state.decoded_w is not None:
        ok = bool(state.decoded_valid[index])
        return SampleOutcome(xi=int(state.decoded_xi[index]),
                             w=state.decoded_w[index] if ok else None, valid=ok)
    return _decode_outcome(state.layout, index)


def measure_sample_batch(
    state: StateVector, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized measure_sample: returns (xi, W, valid) arrays of length n."""
    _check_norm(state.amplitudes)
    p = np.abs(state.amplitudes) ** 2
    cum = np.cumsum(p)
    idx = np.searchsorted(cum, rng.uniform(size=n) * cum[-1], side="right")
    idx = np.minimum(idx, p.size - 1).astype(np.uint64)
    xi, sums = _decode_indices(state.layout, idx)
    W, valid = _w_from_sums(sums, state.layout.m2)
    return xi, W, valid


def pipeline_sample_batch(
    layout: RegisterLayout, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw n (xi, w) samples classically; distribution-identical to measurement.

    xi is uniform on m1 bits and each coordinate's bit sum is
    Binomial(m2, 1/2), exactly the marginals the state-vector path
    measures; the decode from sums onward is shared code.
    """
    if layout.m1 <= 62:
        xi = rng.integers(0, 1 << layout.m1, size=n, dtype=np.int64)
    else:
        bits = rng.integers(0, 2, size=(n, layout.m1))
        xi = np.array([int("".join(map(str, row)), 2) for row in bits], dtype=object)
    sums = rng.binomial(layout.m2, 0.5, size=(n, layout.d))
    W, valid = _w_from_sums(sums, layout.m2)
    return xi, W, valid


def pipeline_sample(
    layout: RegisterLayout,
    rng: np.random.Generator,
    *,
    resample: bool = False,
    max_tries: int = 10000,
) -> SampleOutcome:
    """One classical draw of (xi, w).

    By default invalid outcomes are reported, keeping the output
    distribution exactly equal to measure_sample's.  With resample=True
    invalid draws are discarded and counted in the outcome's rejections
    field (the conditional-on-valid distribution).
    """
    rejections = 0
    for _ in range(max_tries):
        xi, W, valid = pipeline_sample_batch(layout, 1, rng)
        if valid[0]:
            return SampleOutcome(xi=int(xi[0]), w=W[0], valid=True, rejections=rejections)
        if not resample:
            return SampleOutcome(xi=int(xi[0]), w=None, valid=False)
        rejections += 1
    raise RuntimeError(f"no valid sample in {max_tries} tries")


def invalid_probability(layout: RegisterLayout) -> float:
    """Exact probability of the zero-vector outcome.

    Each coordinate is zero iff its bit sum hits m2/2 (impossible for
    odd m2), so the probability is Binom(m2, 1/2){m2/2}^d.
    """
    if layout.m2 % 2 == 1:
        return 0.0
    per_coord = math.comb(layout.m2, layout.m2 // 2) / (2.0 ** layout.m2)
    return per_coord ** layout.d


# ---------------------------------------------------------------------------
# fixed-point reversible-arithmetic emulation


def fixed_point_quantize(values: np.ndarray | float, frac_bits: int) -> np.ndarray | float:
    """Round to the nearest multiple of 2^-frac_bits.

    Register contents are represented as float64 holding exact grid
    values, valid while the scaled integers stay below 2^52 (guarded);
    sums and differences of grid values are then exact, mirroring
    reversible integer registers.
    """
    if frac_bits < 1:
        raise ValueError("frac_bits must be >= 1")
    scale = float(1 << frac_bits)
    arr = np.asarray(values, dtype=float)
    limit = 2.0 ** (52 - frac_bits)
    if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) >= limit):
        raise OverflowError(f"value outside fixed-point range (+-2^{52 - frac_bits})")
    snapped = np.rint(arr * scale) / scale
    if np.isscalar(values) or np.ndim(values) == 0:
        return float(snapped)
    return snapped


def _pipeline_core(
    spec: ObjectiveSpec,
    x: np.ndarray,
    params: SmoothingParams,
    xi: XiSample,
    wq: np.ndarray,
    frac_bits: int,
    tape: StageTape | None,
) -> np.ndarray:
    """Quantized diff = F(x + delta w) - F(x - delta w), scaled by d/(2 delta)."""
    q = lambda v: fixed_point_quantize(v, frac_bits)  # noqa: E731
    delta = params.delta
    xq = q(np.asarray(x, dtype=float))
    if tape:
        tape.note("A+")
    x_plus = q(xq + delta * wq)
    if tape:
        tape.note("A-")
    x_minus = q(xq - delta * wq)
    if tape:
        tape.note("U_F")
    f_plus = q(eval_F(spec, x_plus, xi))
    if tape:
        tape.note("U_F")
    f_minus = q(eval_F(spec, x_minus, xi))
    if tape:
        tape.note("sub")
    diff = q(f_plus - f_minus)
    if tape:
        tape.note("Fmul")
    return q(diff * (spec.d / (2.0 * delta)))


def emulate_U_g(
    spec: ObjectiveSpec,
    x: np.ndarray,
    params: SmoothingParams,
    xi: XiSample,
    w: np.ndarray,
    layout: RegisterLayout,
    tape: StageTape | None = None,
) -> np.ndarray:
    """g_delta(x; w, xi) through the staged fixed-point pipeline (2 F calls).

    Agrees with the float evaluation within
    2^(1-frac_bits) * (d / 2 delta) * (1 + ||x|| + L) per coordinate.
    """
    fb = layout.frac_bits
    wq = fixed_point_quantize(np.asarray(w, dtype=float), fb)
    scaled = _pipeline_core(spec, x, params, xi, wq, fb, tape)
    if tape:
        tape.note("mul")
    return fixed_point_quantize(scaled * wq, fb)


def emulate_V_g(
    spec: ObjectiveSpec,
    x: np.ndarray,
    y: np.ndarray,
    params: SmoothingParams,
    xi: XiSample,
    w: np.ndarray,
    layout: RegisterLayout,
    tape: StageTape | None = None,
) -> np.ndarray:
    """g_delta(x; w, xi) - g_delta(y; w, xi) with shared draws (4 F calls).

    x == y gives exactly zero: both branches run the identical
    computation on identical register contents.
    """
    fb = layout.frac_bits
    wq = fixed_point_quantize(np.asarray(w, dtype=float), fb)
    vx = _pipeline_core(spec, x, params, xi, wq, fb, tape)
    vy = _pipeline_core(spec, y, params, xi, wq, fb, tape)
    if tape:
        tape.note("sub")
    diff = fixed_point_quantize(vx - vy, fb)
    if tape:
        tape.note("mul")
    return fixed_point_quantize(diff * wq, fb)
