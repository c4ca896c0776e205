"""Flat ``key = value`` scenario files.

Keys use dotted sections (``uncertainty.delta_db``, ``pulse.rolloff``,
``sweep.axis`` ...); ``#`` starts a comment.  The same format is written
back as ``# key = value`` header lines in every CSV this package emits, and
:func:`parse_header` recovers the run configuration from those lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .montecarlo import PROFILES, EnergyCalibration, SweepAxis, TrialConfig
from .stats_core import SignalModel
from .waveform import ChannelKind, Hypothesis, PulseShape, SyncMode, UncertaintyModel, parse_enum


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    trial: TrialConfig
    axis: SweepAxis = SweepAxis.SNR_DB
    values: tuple[float, ...] = ()
    profile: str = "desk"


def _bool(text: str) -> bool:
    key = text.strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    text = text.strip()
    if "**" in text:
        base, exp = text.split("**", 1)
        return int(base) ** int(exp)
    if "^" in text:
        base, exp = text.split("^", 1)
        return int(base) ** int(exp)
    return int(text, 0)


def parse_values(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    if ":" in text and "," not in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] == 0:
            raise ValueError("range must be start:stop:step with nonzero step")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(max(count, 0)))
    return tuple(float(v) for v in text.split(",") if v.strip())


# key -> (parser, TrialConfig field or run-level name)
_KEYS = {
    "hypothesis": lambda v: parse_enum(Hypothesis, v),
    "model": SignalModel.parse,
    "snr_db": float,
    "n": _int,
    "channel": lambda v: parse_enum(ChannelKind, v),
    "uncertainty.delta_db": float,
    "pulse.shaping": _bool,
    "pulse.rolloff": float,
    "pulse.oversampling": _int,
    "pulse.length": _int,
    "sync": lambda v: parse_enum(SyncMode, v),
    "target_pf": float,
    "trials": _int,
    "seed": _int,
    "sigma2": float,
    "energy.calibration": lambda v: parse_enum(EnergyCalibration, v),
    "detector.remove_mean": _bool,
    "sweep.axis": lambda v: parse_enum(SweepAxis, v),
    "sweep.values": parse_values,
    "profile": lambda v: _profile(v),
}


def _profile(text: str) -> str:
    key = text.strip().lower()
    if key not in PROFILES:
        raise ValueError(f"unknown profile {text!r} (expected desk or paper)")
    return key


def read_pairs(text: str, source: str = "<config>") -> dict[str, tuple[object, int]]:
    """Parse lines into ``{key: (value, line_number)}``."""
    out: dict[str, tuple[object, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", source, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", source, lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", source, lineno)
        try:
            out[key] = (_KEYS[key](value), lineno)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", source, lineno) from None
    return out


def build(
    pairs: dict[str, tuple[object, int]],
    source: str = "<config>",
    profile: str | None = None,
    seed: int | None = None,
) -> RunConfig:
    """Resolve parsed pairs into a :class:`RunConfig`.

    The profile supplies ``n`` and ``trials`` unless the file sets them;
    an explicit ``profile`` argument overrides the file's choice.
    """
    get = lambda key, default=None: pairs[key][0] if key in pairs else default  # noqa: E731
    prof = profile or get("profile", "desk")
    prof_n, prof_trials = PROFILES[prof]
    pulse_kw = {}
    for key, name in (("pulse.rolloff", "rolloff"), ("pulse.oversampling", "oversampling"),
                      ("pulse.length", "length")):
        if key in pairs:
            pulse_kw[name] = get(key)
    kwargs = dict(
        hypothesis=get("hypothesis", Hypothesis.H1),
        model=get("model", SignalModel.QPSK),
        snr_db=get("snr_db", -10.0),
        n=get("n", prof_n),
        channel=get("channel", ChannelKind.AWGN),
        pulse_shaping=get("pulse.shaping", False),
        sync=get("sync", SyncMode.SYNCHRONIZED),
        target_pf=get("target_pf", 0.1),
        trials=get("trials", prof_trials),
        seed=get("seed", 0) if seed is None else seed,
        sigma2=get("sigma2", 1.0),
        energy_calibration=get("energy.calibration", EnergyCalibration.WORST_CASE),
        remove_mean=get("detector.remove_mean", False),
    )
    if kwargs["hypothesis"] is Hypothesis.H0 and "model" not in pairs:
        kwargs["model"] = SignalModel.NOISE_ONLY
    try:
        kwargs["uncertainty"] = UncertaintyModel(get("uncertainty.delta_db", 0.0))
        kwargs["pulse"] = PulseShape(**pulse_kw)
        trial = TrialConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), source) from None
    axis = get("sweep.axis", SweepAxis.SNR_DB)
    if "sweep.values" in pairs:
        values = get("sweep.values")
        if not values:
            raise ConfigError("sweep.values is empty", source, pairs["sweep.values"][1])
    else:
        values = (_axis_value(trial, axis),)
    return RunConfig(trial, axis, tuple(values), prof)


def _axis_value(trial: TrialConfig, axis: SweepAxis) -> float:
    if axis is SweepAxis.SNR_DB:
        return trial.snr_db
    if axis is SweepAxis.N:
        return float(trial.n)
    return trial.uncertainty.delta_db


def load(text: str, source: str = "<config>", profile: str | None = None,
         seed: int | None = None) -> RunConfig:
    return build(read_pairs(text, source), source, profile, seed)


def _num(x: float) -> str:
    return repr(float(x))


def dump(run: RunConfig) -> list[str]:
    """Fully resolved ``key = value`` lines; :func:`load` inverts this."""
    t = run.trial
    return [
        f"profile = {run.profile}",
        f"hypothesis = {t.hypothesis.value}",
        f"model = {t.model.value}",
        f"snr_db = {_num(t.snr_db)}",
        f"n = {t.n}",
        f"channel = {t.channel.value}",
        f"uncertainty.delta_db = {_num(t.uncertainty.delta_db)}",
        f"pulse.shaping = {str(t.pulse_shaping).lower()}",
        f"pulse.rolloff = {_num(t.pulse.rolloff)}",
        f"pulse.oversampling = {t.pulse.oversampling}",
        f"pulse.length = {t.pulse.length}",
        f"sync = {t.sync.value}",
        f"target_pf = {_num(t.target_pf)}",
        f"trials = {t.trials}",
        f"seed = {t.seed}",
        f"sigma2 = {_num(t.sigma2)}",
        f"energy.calibration = {t.energy_calibration.value}",
        f"detector.remove_mean = {str(t.remove_mean).lower()}",
        f"sweep.axis = {run.axis.value}",
        "sweep.values = " + ", ".join(_num(v) for v in run.values),
    ]


def parse_header(text: str) -> RunConfig:
    """Recover the run configuration from a CSV's ``# key = value`` header."""
    lines = []
    for raw in text.splitlines():
        if not raw.startswith("#"):
            break
        body = raw[1:].strip()
        if "=" in body:
            lines.append(body)
    return load("\n".join(lines), "<header>")


def with_trial(run: RunConfig, **changes) -> RunConfig:
    return replace(run, trial=replace(run.trial, **changes))
