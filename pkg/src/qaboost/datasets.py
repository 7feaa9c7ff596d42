"""Experiment datasets: the names corpus, the bait matrix and synthetic EEG clips.

Labels are always +/-1. Datasets round-trip through CSV with a one-line header
and a final ``label`` column; clips use one CSV column per channel plus a JSON
sidecar holding the sample rate and label.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import ndimage, signal, stats

from .weak import RawColumn, SuffixLetter, ThresholdStump, last_letter

FEMALE = 1
MALE = -1
LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with +/-1 labels.

    ``features`` has one row per observation; entries are real, +/-1 or (for
    the names corpus) strings.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple = ()

    def __post_init__(self):
        features = np.asarray(self.features)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        labels = np.asarray(self.labels).astype(np.int8)
        if features.shape[0] != labels.shape[0]:
            raise ValueError(f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        if labels.size and not np.all(np.abs(labels) == 1):
            raise ValueError("labels must be -1 or +1")
        names = tuple(self.feature_names) or tuple(f"f{j}" for j in range(features.shape[1]))
        if len(names) != features.shape[1]:
            raise ValueError(f"{len(names)} feature names for {features.shape[1]} columns")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    def __len__(self) -> int:
        return self.labels.shape[0]

    def subset(self, rows) -> LabeledDataset:
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(self.features[rows], self.labels[rows], self.feature_names)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([*self.feature_names, "label"])
            for row, y in zip(self.features, self.labels):
                writer.writerow([*(_cell(v) for v in row), int(y)])

    @classmethod
    def from_csv(cls, path, numeric: bool = True) -> LabeledDataset:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[-1] != "label":
                raise ValueError(f"{path}: last header column must be 'label'")
            rows = list(reader)
        for lineno, row in enumerate(rows, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        body = [r[:-1] for r in rows]
        features = np.array(body, dtype=float if numeric else object).reshape(len(rows), len(header) - 1)
        labels = np.array([int(r[-1]) for r in rows], dtype=np.int8)
        return cls(features, labels, tuple(header[:-1]))


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


# ---------------------------------------------------------------- names


def bundled_names_files() -> tuple[Path, Path]:
    """Paths of the bundled (male, female) first-name lists."""
    base = resources.files("qaboost") / "data"
    return Path(str(base / "names_male.txt")), Path(str(base / "names_female.txt"))


def _read_names(path) -> list[str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read names file {path}: {exc}") from exc
    names = [line.strip().lower() for line in text.splitlines() if line.strip()]
    if not names:
        raise ValueError(f"names file {path} is empty")
    return names


def load_names(male_file=None, female_file=None, female_sign: int = FEMALE) -> LabeledDataset:
    """Load two one-name-per-line files; female rows get ``female_sign``.

    Names are trimmed and lowercased; duplicates are kept. Both files default
    to the bundled census lists.
    """
    default_male, default_female = bundled_names_files()
    male = _read_names(male_file or default_male)
    female = _read_names(female_file or default_female)
    features = np.array(male + female, dtype=object).reshape(-1, 1)
    labels = np.concatenate([np.full(len(male), -female_sign), np.full(len(female), female_sign)])
    return LabeledDataset(features, labels, ("name",))


def names_weak_pool(female_sign: int = FEMALE) -> list[SuffixLetter]:
    """The 52 last-letter classifiers: one per (letter, class) pair."""
    return [SuffixLetter(letter, sign) for letter in LETTERS for sign in (female_sign, -female_sign)]


def names_suffix_matrix(data: LabeledDataset) -> np.ndarray:
    """One-hot last-letter matrix (rows x 26) for the classical baselines."""
    last = [last_letter(str(n)) for n in data.features[:, 0]]
    out = np.zeros((len(last), len(LETTERS)))
    for i, ch in enumerate(last):
        j = LETTERS.find(ch)
        if j >= 0:
            out[i, j] = 1.0
    return out


# ---------------------------------------------------------------- bait matrix

LINSEP_ROWS = 1000
LINSEP_COLS = 13
LINSEP_FLIPS = 90


def gen_linsep(seed: int = 0) -> LabeledDataset:
    """1000 x 13 matrix of +/-1 whose first column is the sign of columns 2-10.

    Column 13 copies column 1 with exactly 90 random rows flipped, so it alone
    agrees with the truth on 910 rows. Labels are column 1.
    """
    rng = np.random.default_rng(seed)
    m = rng.choice(np.array([-1, 1], dtype=np.int8), size=(LINSEP_ROWS, LINSEP_COLS))
    m[:, 0] = np.sign(m[:, 1:10].sum(axis=1, dtype=np.int64))
    m[:, 12] = m[:, 0]
    flips = rng.choice(LINSEP_ROWS, size=LINSEP_FLIPS, replace=False)
    m[flips, 12] *= -1
    return LabeledDataset(m, m[:, 0].copy(), tuple(f"c{j}" for j in range(1, LINSEP_COLS + 1)))


def linsep_task(data: LabeledDataset) -> LabeledDataset:
    """Columns 2-13 as features, column 1 as labels."""
    return LabeledDataset(data.features[:, 1:], data.labels, data.feature_names[1:])


def linsep_pool(task: LabeledDataset) -> list[RawColumn]:
    """Each feature column of the task as a weak classifier."""
    return [RawColumn(j, 1, name) for j, name in enumerate(task.feature_names)]


# ---------------------------------------------------------------- synthetic EEG

INTERICTAL = "interictal"
PREICTAL = "preictal"


@dataclass(frozen=True)
class TimeSeriesClip:
    """``data`` is ``(channels, samples)``."""

    data: np.ndarray
    sample_rate: float
    label: str

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.label not in (INTERICTAL, PREICTAL):
            raise ValueError(f"label must be {INTERICTAL!r} or {PREICTAL!r}")
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def samples(self) -> int:
        return self.data.shape[1]

    @property
    def sign(self) -> int:
        return 1 if self.label == PREICTAL else -1

    def to_csv(self, path) -> None:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"ch{c}" for c in range(self.channels)])
            writer.writerows([[repr(float(v)) for v in col] for col in self.data.T])
        meta = {"sample_rate": self.sample_rate, "label": self.label}
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def from_csv(cls, path) -> TimeSeriesClip:
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2).T
        return cls(data, meta["sample_rate"], meta["label"])


@dataclass(frozen=True)
class EegParams:
    """Generator knobs.

    Each channel is band-limited noise mixed with a shared source, plus an
    oscillation at ``band_hz``. Preictal clips get a stronger, more
    phase-locked oscillation and a larger shared-source weight.
    """

    noise_std: float = 1.0
    noise_band_hz: tuple = (0.5, 40.0)
    band_hz: float = 12.0
    interictal_amplitude: float = 0.3
    preictal_amplitude: float = 0.45
    interictal_coupling: float = 0.1
    preictal_coupling: float = 0.25
    interictal_phase_jitter: float = np.pi
    preictal_phase_jitter: float = 1.2


def _band_noise(rng, shape, rate, band):
    white = rng.standard_normal(shape)
    lo, hi = band
    hi = min(hi, 0.45 * rate)
    sos = signal.butter(4, [lo, hi], btype="bandpass", fs=rate, output="sos")
    out = signal.sosfiltfilt(sos, white, axis=-1)
    return out / out.std(axis=-1, keepdims=True)


def gen_synthetic_eeg(
    channels: int = 8,
    seconds: float = 10.0,
    sample_rate: float = 400.0,
    label: str = INTERICTAL,
    seed: int = 0,
    params: EegParams = EegParams(),
) -> TimeSeriesClip:
    """Synthetic multichannel clip; deterministic given ``seed``."""
    if channels < 2:
        raise ValueError("need at least 2 channels")
    n = int(round(seconds * sample_rate))
    rng = np.random.default_rng(seed)
    pre = label == PREICTAL
    t = np.arange(n) / sample_rate
    amp = params.preictal_amplitude if pre else params.interictal_amplitude
    jitter = params.preictal_phase_jitter if pre else params.interictal_phase_jitter
    phase = rng.uniform(0, 2 * np.pi) + rng.uniform(-jitter, jitter, size=(channels, 1))
    data = amp * np.sin(2 * np.pi * params.band_hz * t + phase)
    if params.noise_std > 0:
        rho = params.preictal_coupling if pre else params.interictal_coupling
        private = _band_noise(rng, (channels, n), sample_rate, params.noise_band_hz)
        shared = _band_noise(rng, (1, n), sample_rate, params.noise_band_hz)
        data = data + params.noise_std * (np.sqrt(1 - rho**2) * private + rho * shared)
    return TimeSeriesClip(data, sample_rate, label)


DEFAULT_STATS = ("mean", "median", "max", "argmax", "min", "argmin", "std", "skew", "kurtosis")


@dataclass(frozen=True)
class FeatureConfig:
    """Clip-to-vector pipeline settings.

    ``filter`` is ``"median"``, ``"gaussian"`` or ``None``; ``filter_size`` is
    the median kernel length in samples or the Gaussian sigma. Windows are
    ``window_seconds`` long every ``step_seconds`` (``None`` means one window
    over the whole clip). With ``spectrum`` the statistics are taken on each
    window's DFT magnitude.
    """

    filter: str | None = "median"
    filter_size: float = 5
    window_seconds: float | None = 5.0
    step_seconds: float | None = 2.5
    stats: tuple = DEFAULT_STATS
    quantiles: tuple = (0.1, 0.9)
    spectrum: bool = False
    correlation: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> FeatureConfig:
        d = dict(d)
        for key in ("stats", "quantiles"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def _windows(samples: int, rate: float, cfg: FeatureConfig) -> list[tuple[int, int]]:
    if cfg.window_seconds is None:
        return [(0, samples)]
    width = int(round(cfg.window_seconds * rate))
    if width < 1 or width > samples:
        raise ValueError(f"window of {width} samples does not fit a clip of {samples}")
    step = int(round((cfg.step_seconds or cfg.window_seconds) * rate))
    if step < 1:
        raise ValueError("window step must be at least one sample")
    return [(lo, lo + width) for lo in range(0, samples - width + 1, step)]


def _stat(name: str, x: np.ndarray) -> np.ndarray:
    if name == "mean":
        return x.mean(axis=1)
    if name == "median":
        return np.median(x, axis=1)
    if name == "max":
        return x.max(axis=1)
    if name == "argmax":
        return x.argmax(axis=1).astype(float)
    if name == "min":
        return x.min(axis=1)
    if name == "argmin":
        return x.argmin(axis=1).astype(float)
    if name == "std":
        return x.std(axis=1)
    flat = np.ptp(x, axis=1) == 0
    with np.errstate(all="ignore"), warnings.catch_warnings():
        # constant rows are zeroed below; scipy warns about them first
        warnings.simplefilter("ignore", RuntimeWarning)
        if name == "skew":
            out = stats.skew(x, axis=1)
        elif name == "kurtosis":
            out = stats.kurtosis(x, axis=1)
        else:
            raise ValueError(f"unknown statistic {name!r}")
    return np.where(flat, 0.0, out)


def _filtered(clip: TimeSeriesClip, cfg: FeatureConfig) -> np.ndarray:
    if cfg.filter is None:
        return clip.data
    if cfg.filter == "median":
        return ndimage.median_filter(clip.data, size=(1, int(cfg.filter_size)), mode="nearest")
    if cfg.filter == "gaussian":
        return ndimage.gaussian_filter1d(clip.data, float(cfg.filter_size), axis=1, mode="nearest")
    raise ValueError(f"unknown filter {cfg.filter!r}")


def extract_features(clip: TimeSeriesClip, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Filter, window, summarize each channel, then append channel correlations.

    Layout is window-major, then channel, then statistic (named statistics
    followed by quantiles); the lower triangle of the Pearson correlation
    matrix of the filtered clip comes last.
    """
    if cfg.correlation and clip.channels < 2:
        raise ValueError("correlation features need at least 2 channels")
    x = _filtered(clip, cfg)
    parts = []
    for lo, hi in _windows(clip.samples, clip.sample_rate, cfg):
        w = x[:, lo:hi]
        if cfg.spectrum:
            w = np.abs(np.fft.rfft(w, axis=1))
        cols = [_stat(name, w) for name in cfg.stats]
        cols += [np.quantile(w, q, axis=1) for q in cfg.quantiles]
        parts.append(np.column_stack(cols).ravel())
    if cfg.correlation:
        with np.errstate(all="ignore"):
            corr = np.corrcoef(x)
        rows, cols = np.tril_indices(clip.channels, k=-1)
        parts.append(np.nan_to_num(corr[rows, cols], nan=0.0))
    return np.concatenate(parts)


def feature_names(clip: TimeSeriesClip, cfg: FeatureConfig = FeatureConfig()) -> tuple[str, ...]:
    """Names matching the layout of :func:`extract_features`."""
    stat_names = [*cfg.stats, *(f"q{q:g}" for q in cfg.quantiles)]
    names = [
        f"w{w}:ch{c}:{s}"
        for w in range(len(_windows(clip.samples, clip.sample_rate, cfg)))
        for c in range(clip.channels)
        for s in stat_names
    ]
    if cfg.correlation:
        rows, cols = np.tril_indices(clip.channels, k=-1)
        names += [f"corr:{i}-{j}" for i, j in zip(rows, cols)]
    return tuple(names)


def clip_dataset(clips, cfg: FeatureConfig = FeatureConfig()) -> LabeledDataset:
    """Stack the feature vectors of ``clips`` into a real-valued dataset."""
    clips = list(clips)
    features = np.vstack([extract_features(c, cfg) for c in clips])
    labels = np.array([c.sign for c in clips], dtype=np.int8)
    return LabeledDataset(features, labels, feature_names(clips[0], cfg))


@dataclass(frozen=True)
class Binarizer:
    """Per-feature median thresholds and polarities learned on a training split."""

    stumps: tuple = field(default_factory=tuple)
    feature_names: tuple = ()

    def transform(self, data: LabeledDataset) -> LabeledDataset:
        x = np.asarray(data.features, dtype=float)
        cols = [s.predict(x) for s in self.stumps]
        binary = np.column_stack(cols) if cols else np.zeros((len(data), 0), dtype=np.int8)
        return LabeledDataset(binary, data.labels, self.feature_names)


def fit_binarizer(data: LabeledDataset, train_rows=None) -> Binarizer:
    """Learn one threshold stump per real feature from ``train_rows``.

    The threshold is the training median, moved down to the midpoint below it
    when nothing lies strictly above the median. Polarity makes the stump's
    training correlation with the labels nonnegative. A feature constant on
    the training rows yields a degenerate stump with fixed output.
    """
    rows = np.arange(len(data)) if train_rows is None else np.asarray(train_rows)
    x = np.asarray(data.features, dtype=float)[rows]
    y = data.labels[rows].astype(float)
    stumps = []
    for j in range(x.shape[1]):
        col = x[:, j]
        values = np.unique(col)
        if values.size < 2:
            value = float(values[0]) if values.size else 0.0
            stumps.append(ThresholdStump(j, value, 1, degenerate=True))
            continue
        thr = float(np.median(col))
        if thr >= values[-1]:
            thr = float((values[-2] + values[-1]) / 2)
        votes = np.where(col > thr, 1.0, -1.0)
        polarity = 1 if float(votes @ y) >= 0 else -1
        stumps.append(ThresholdStump(j, thr, polarity))
    names = tuple(f"{name}>thr" for name in data.feature_names)
    return Binarizer(tuple(stumps), names)


def binarize_features(data: LabeledDataset, method: str = "median", train_rows=None):
    """Threshold every real feature; returns ``(binary_dataset, stump_pool)``.

    The stump pool acts on the original real features and reproduces the
    columns of the binary dataset.
    """
    if method != "median":
        raise ValueError(f"unknown binarization method {method!r}")
    binarizer = fit_binarizer(data, train_rows)
    return binarizer.transform(data), list(binarizer.stumps)
