"""Event-level simulation of a heralded photon-pair source, plus tag-stream I/O.

Simulation model
----------------
Pair emissions are a homogeneous Poisson process. Each pair offers its signal
photon to channel S and its idler photon to a splitter feeding detectors I1
and I2; survival and routing are decided by per-arm transmittances, the
splitter ratio, and detector efficiencies. Detected events get independent
Gaussian timing jitter, each detector adds an independent Poisson background
of dark counts, and timestamps are floored to integer picoseconds. Events
jittered outside [0, duration] are dropped. An optional non-paralyzable dead
time is applied per detector.

Determinism
-----------
Streams are generated in fixed-length time chunks, each from its own child of
``numpy.random.SeedSequence(seed)`` driving a Philox generator, with a fixed
draw order per chunk (pair count, emission times, signal survival, idler
survival+routing, per-channel jitter, per-channel darks). The chunk plan is a
pure function of the model, and per-channel sorting makes the merged output
independent of chunk processing order, so a (model, seed) pair always yields
the same stream.

Tag-file grammar
----------------
Plain text: a first line ``# tagstream v1 duration_s=<float>`` followed by
one ``channel,timestamp_ps`` line per event (channel in {S, I1, I2},
timestamps int64 picoseconds, non-decreasing). Writing then reading a stream
reproduces it exactly.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .photonstats import (
    CountRates,
    LossBudget,
    PhotonStatsError,
    detection_probabilities,
)

CHANNELS = ("S", "I1", "I2")
CHANNEL_CODE = {name: code for code, name in enumerate(CHANNELS)}
TAG_HEADER_PREFIX = "# tagstream v1 duration_s="

# Target expected emissions per generation chunk; chunks are at most 1 s long.
_CHUNK_TARGET_EVENTS = 1_000_000.0


class MonteCarloError(ValueError):
    """Invalid simulation model or stream."""


class ResourceLimitError(RuntimeError):
    """The requested simulation exceeds the configured event budget."""

    def __init__(self, expected_events: float, max_events: float):
        super().__init__(
            f"simulation would draw about {expected_events:.3g} events, above the "
            f"limit of {max_events:.3g}; lower the rate/duration or raise the limit"
        )
        self.expected_events = expected_events
        self.max_events = max_events


class TagFileError(ValueError):
    """Malformed tag-stream file."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        loc = f"{path}:{line}: " if path is not None and line is not None else (f"{path}: " if path else "")
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


def _triple(value, name: str) -> tuple[float, float, float]:
    """Normalize a scalar or 3-sequence (S, I1, I2) to a float triple."""
    if np.isscalar(value):
        t = (float(value),) * 3
    else:
        t = tuple(float(v) for v in value)
        if len(t) != 3:
            raise MonteCarloError(f"{name} must be a scalar or a (S, I1, I2) triple")
    if any(v < 0 for v in t):
        raise MonteCarloError(f"{name} entries must be non-negative")
    return t


@dataclass(frozen=True)
class SourceModel:
    """Physical and acquisition parameters of one simulated run.

    ``jitter_sigma_s``, ``dark_rate_hz`` and ``dead_time_s`` accept a scalar
    (applied to all three detectors) or an (S, I1, I2) triple.
    """

    pair_rate_hz: float
    loss: LossBudget = LossBudget()
    splitter_ratio: float = 0.5
    jitter_sigma_s: tuple[float, float, float] = 50e-12
    dark_rate_hz: tuple[float, float, float] = 100.0
    dead_time_s: tuple[float, float, float] = 0.0
    coincidence_window_s: float = 1e-9
    duration_s: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.pair_rate_hz < 0:
            raise MonteCarloError("pair rate must be non-negative")
        if not (0.0 < self.splitter_ratio < 1.0):
            raise MonteCarloError(f"splitter ratio must be in (0, 1), got {self.splitter_ratio!r}")
        object.__setattr__(self, "jitter_sigma_s", _triple(self.jitter_sigma_s, "jitter_sigma_s"))
        object.__setattr__(self, "dark_rate_hz", _triple(self.dark_rate_hz, "dark_rate_hz"))
        object.__setattr__(self, "dead_time_s", _triple(self.dead_time_s, "dead_time_s"))
        if self.coincidence_window_s < 1e-12:
            raise MonteCarloError("coincidence window must be at least 1 ps")
        if self.duration_s <= 0:
            raise MonteCarloError("duration must be positive")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise MonteCarloError("seed must be an integer")
        if not (0 <= int(self.seed) < 2**64):
            raise MonteCarloError("seed must fit in an unsigned 64-bit integer")

    @classmethod
    def from_brightness(cls, brightness_hz_per_mw: float, pump_mw: float, **kwargs) -> "SourceModel":
        """Build a model from a brightness slope and pump power."""
        if brightness_hz_per_mw < 0 or pump_mw < 0:
            raise MonteCarloError("brightness and pump power must be non-negative")
        return cls(pair_rate_hz=brightness_hz_per_mw * pump_mw, **kwargs)

    def with_pair_rate(self, pair_rate_hz: float) -> "SourceModel":
        return replace(self, pair_rate_hz=pair_rate_hz)


@dataclass(frozen=True, eq=False)
class TagStream:
    """Time-ordered detection events: channel codes (0=S, 1=I1, 2=I2) + int64 ps."""

    channels: np.ndarray
    times_ps: np.ndarray
    duration_s: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        channels = np.ascontiguousarray(self.channels, dtype=np.uint8)
        times = np.ascontiguousarray(self.times_ps, dtype=np.int64)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "times_ps", times)
        if channels.shape != times.shape or channels.ndim != 1:
            raise MonteCarloError("channels and times_ps must be 1-D arrays of equal length")
        if self.duration_s <= 0:
            raise MonteCarloError("duration must be positive")
        if channels.size:
            if channels.max() > 2:
                raise MonteCarloError("channel codes must be 0 (S), 1 (I1) or 2 (I2)")
            if np.any(np.diff(times) < 0):
                raise MonteCarloError("timestamps must be non-decreasing")
            if times[0] < 0 or times[-1] > duration_ps(self.duration_s):
                raise MonteCarloError("timestamps must lie within [0, duration]")

    def __len__(self) -> int:
        return self.times_ps.size

    def channel_times(self, name: str) -> np.ndarray:
        """Sorted timestamps of one channel; "I" merges I1 and I2."""
        if name == "I":
            mask = self.channels != CHANNEL_CODE["S"]
        elif name in CHANNEL_CODE:
            mask = self.channels == CHANNEL_CODE[name]
        else:
            raise MonteCarloError(f"unknown channel {name!r}; expected S, I1, I2 or I")
        return self.times_ps[mask]

    def event_counts(self) -> dict[str, int]:
        return {name: int(np.count_nonzero(self.channels == code)) for name, code in CHANNEL_CODE.items()}


def duration_ps(duration_s: float) -> int:
    return int(math.floor(duration_s * 1e12))


def _chunk_plan(model: SourceModel) -> tuple[int, float]:
    """(number of chunks, chunk length in s); a pure function of the model."""
    total_rate = max(model.pair_rate_hz, sum(model.dark_rate_hz), 1.0)
    chunk_s = min(1.0, _CHUNK_TARGET_EVENTS / total_rate)
    n_chunks = max(1, int(math.ceil(model.duration_s / chunk_s - 1e-9)))
    return n_chunks, chunk_s


def expected_event_count(model: SourceModel) -> float:
    """Expected number of recorded events (pre dead-time), for budgeting."""
    p_s, p_1, p_2 = detection_probabilities(model)
    rate = model.pair_rate_hz * (p_s + p_1 + p_2) + sum(model.dark_rate_hz)
    return rate * model.duration_s


def generate_tags(
    model: SourceModel,
    *,
    max_expected_events: float = 5e8,
    _chunk_order=None,
) -> TagStream:
    """Simulate one acquisition and return the merged, time-ordered stream.

    Raises ResourceLimitError before allocating anything if the expected
    event count exceeds ``max_expected_events``. ``_chunk_order`` permutes
    internal chunk processing (testing hook; the result must not depend on it).
    """
    expected = expected_event_count(model)
    if expected > max_expected_events:
        raise ResourceLimitError(expected, max_expected_events)

    p_s, p_1, p_2 = detection_probabilities(model)
    sig_s = model.jitter_sigma_s
    dur_ps = duration_ps(model.duration_s)

    n_chunks, chunk_s = _chunk_plan(model)
    children = np.random.SeedSequence(model.seed).spawn(n_chunks)
    order = range(n_chunks) if _chunk_order is None else _chunk_order

    parts: tuple[list, list, list] = ([], [], [])
    for k in order:
        t0 = k * chunk_s
        t1 = min(t0 + chunk_s, model.duration_s)
        width = t1 - t0
        if width <= 0:
            continue
        rng = np.random.Generator(np.random.Philox(children[k]))

        # Fixed draw order (see module docstring).
        n_pairs = rng.poisson(model.pair_rate_hz * width)
        t_pairs = t0 + rng.random(n_pairs) * width
        u_sig = rng.random(n_pairs)
        u_idl = rng.random(n_pairs)
        det_s = t_pairs[u_sig < p_s]
        det_1 = t_pairs[u_idl < p_1]
        det_2 = t_pairs[(u_idl >= p_1) & (u_idl < p_1 + p_2)]
        for ch, det in enumerate((det_s, det_1, det_2)):
            jit = rng.normal(0.0, sig_s[ch], det.size)
            parts[ch].append(det + jit)
        for ch, rate in enumerate(model.dark_rate_hz):
            n_dark = rng.poisson(rate * width)
            parts[ch].append(t0 + rng.random(n_dark) * width)

    all_times = []
    all_codes = []
    for ch in range(3):
        t = np.concatenate(parts[ch]) if parts[ch] else np.empty(0)
        t_ps = np.floor(t * 1e12).astype(np.int64)
        t_ps = t_ps[(t_ps >= 0) & (t_ps <= dur_ps)]
        t_ps.sort()
        if model.dead_time_s[ch] > 0:
            dead_ps = int(round(model.dead_time_s[ch] * 1e12))
            t_ps = t_ps[kernels.dead_time_filter(t_ps, dead_ps)]
        all_times.append(t_ps)
        all_codes.append(np.full(t_ps.size, ch, dtype=np.uint8))

    times = np.concatenate(all_times)
    codes = np.concatenate(all_codes)
    order_idx = np.lexsort((codes, times))
    return TagStream(
        channels=codes[order_idx],
        times_ps=times[order_idx],
        duration_s=model.duration_s,
        provenance={"seed": int(model.seed), "pair_rate_hz": model.pair_rate_hz},
    )


@dataclass(frozen=True)
class CoincidenceHistogram:
    """Counts of arrival-time differences (b - a) in equal-width delay bins."""

    bin_width_s: float
    delays_ps: np.ndarray  # int64 bin centers
    counts: np.ndarray  # int64
    pair: tuple[str, str]
    duration_s: float


def coincidence_histogram(
    stream: TagStream,
    a: str = "S",
    b: str = "I",
    *,
    bin_width_s: float = 1e-9,
    span_s: float = 100e-9,
) -> CoincidenceHistogram:
    """Histogram delays t_b - t_a up to +-span_s around zero.

    Bin width and span round to whole picoseconds; each half-open bin
    [c - w/2, c + w/2) covers exactly w integer delays.
    """
    if a == b:
        raise MonteCarloError("histogram channels must differ")
    w_ps = int(round(bin_width_s * 1e12))
    if w_ps < 1:
        raise MonteCarloError("bin width must be at least 1 ps")
    n_half = int(round(span_s / bin_width_s))
    if n_half < 1:
        raise MonteCarloError("span must cover at least one bin on each side")
    t_a = stream.channel_times(a)
    t_b = stream.channel_times(b)
    counts = kernels.delay_histogram(t_a, t_b, w_ps, n_half)
    delays = (np.arange(2 * n_half + 1, dtype=np.int64) - n_half) * w_ps
    return CoincidenceHistogram(
        bin_width_s=w_ps * 1e-12,
        delays_ps=delays,
        counts=counts,
        pair=(a, b),
        duration_s=stream.duration_s,
    )


def window_half_width_ps(window_s: float) -> int:
    """Half-width in ps of the centered acceptance window |delay| <= half."""
    tau_ps = int(round(window_s * 1e12))
    if tau_ps < 1:
        raise MonteCarloError("coincidence window must be at least 1 ps")
    return tau_ps // 2


def count_rates(stream: TagStream, window_s: float = 1e-9) -> CountRates:
    """All singles, pair and heralded-coincidence rates of a stream."""
    half = window_half_width_ps(window_s)
    t_s = stream.channel_times("S")
    t_i = stream.channel_times("I")
    t_1 = stream.channel_times("I1")
    t_2 = stream.channel_times("I2")
    n_si = kernels.count_pairs_in_window(t_s, t_i, half)
    n_s, n_si1, n_si2, n_si1i2 = kernels.herald_window_counts(t_s, t_1, t_2, half)
    d = stream.duration_s
    return CountRates(
        c_s=t_s.size / d,
        c_i=t_i.size / d,
        c_si=n_si / d,
        c_si1=n_si1 / d,
        c_si2=n_si2 / d,
        c_si1i2=n_si1i2 / d,
        duration_s=d,
        window_s=window_s,
    )


def write_tags(stream: TagStream, path) -> None:
    """Write a stream in the tag-file grammar (atomically)."""
    names = np.array(CHANNELS)[stream.channels]
    times = stream.times_ps.astype("U20")
    lines = np.char.add(np.char.add(names, ","), times)
    body = "\n".join(lines.tolist())
    text = TAG_HEADER_PREFIX + repr(float(stream.duration_s)) + "\n"
    if body:
        text += body + "\n"
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_tags(path) -> TagStream:
    """Parse a tag file, with line-precise errors for malformed input."""
    path = os.fspath(path)
    with open(path, "r") as fh:
        header = fh.readline()
        if not header.startswith(TAG_HEADER_PREFIX):
            raise TagFileError(
                f"first line must start with {TAG_HEADER_PREFIX!r}", path=path, line=1
            )
        try:
            duration_s = float(header[len(TAG_HEADER_PREFIX):].strip())
        except ValueError:
            raise TagFileError("header duration is not a number", path=path, line=1) from None
        if duration_s <= 0:
            raise TagFileError("header duration must be positive", path=path, line=1)
        body = fh.read()

    lines = body.splitlines()
    if not lines:
        return TagStream(
            channels=np.empty(0, dtype=np.uint8),
            times_ps=np.empty(0, dtype=np.int64),
            duration_s=duration_s,
            provenance={"origin": path},
        )

    try:
        codes, times = _parse_tag_lines_fast(lines)
    except (ValueError, KeyError, OverflowError):
        codes, times = _parse_tag_lines_slow(lines, path)

    if np.any(np.diff(times) < 0):
        bad = int(np.argmax(np.diff(times) < 0)) + 1
        raise TagFileError(
            f"timestamp {times[bad]} is earlier than its predecessor {times[bad - 1]}",
            path=path,
            line=bad + 2,
        )
    dur_ps = duration_ps(duration_s)
    if times[0] < 0:
        bad = int(np.argmax(times < 0))
        raise TagFileError(f"negative timestamp {times[bad]}", path=path, line=bad + 2)
    if times[-1] > dur_ps:
        bad = int(np.argmax(times > dur_ps))
        raise TagFileError(
            f"timestamp {times[bad]} exceeds the header duration ({dur_ps} ps)",
            path=path,
            line=bad + 2,
        )
    return TagStream(
        channels=codes,
        times_ps=times,
        duration_s=duration_s,
        provenance={"origin": path},
    )


def _parse_tag_lines_fast(lines: list[str]) -> tuple[np.ndarray, np.ndarray]:
    arr = np.array(lines)
    split = np.char.partition(arr, ",")
    names, seps, digits = split[:, 0], split[:, 1], split[:, 2]
    if not np.all(seps == ","):
        raise ValueError("line without comma")
    codes = np.empty(arr.size, dtype=np.uint8)
    seen = np.zeros(arr.size, dtype=bool)
    for name, code in CHANNEL_CODE.items():
        mask = names == name
        codes[mask] = code
        seen |= mask
    if not seen.all():
        raise KeyError("unknown channel name")
    times = digits.astype(np.int64)  # raises ValueError on non-integer text
    return codes, times


def _parse_tag_lines_slow(lines: list[str], path: str) -> tuple[np.ndarray, np.ndarray]:
    codes = np.empty(len(lines), dtype=np.uint8)
    times = np.empty(len(lines), dtype=np.int64)
    for i, line in enumerate(lines):
        lineno = i + 2
        fields = line.split(",")
        if len(fields) != 2:
            raise TagFileError(
                f"expected 'channel,timestamp_ps', got {line!r}", path=path, line=lineno
            )
        name, digits = fields[0].strip(), fields[1].strip()
        if name not in CHANNEL_CODE:
            raise TagFileError(
                f"unknown channel {name!r} (expected S, I1 or I2)", path=path, line=lineno
            )
        try:
            times[i] = int(digits)
        except (ValueError, OverflowError):
            raise TagFileError(
                f"timestamp {digits!r} is not a 64-bit integer", path=path, line=lineno
            ) from None
        codes[i] = CHANNEL_CODE[name]
    return codes, times
