"""Game parameters, strategy enumerations and config loading."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path


PARAM_NAMES = ("b_u", "c_u", "b_c", "c_c", "c_i", "q")


class UserStrategy(enum.IntEnum):
    ALLD = 0
    BMEDIA = 1
    GMEDIA = 2
    ALLC = 3

    @property
    def label(self):
        return _USER_LABELS[self]


class CreatorStrategy(enum.IntEnum):
    UNSAFE = 0  # D
    SAFE = 1  # C

    @property
    def label(self):
        return _CREATOR_LABELS[self]


_USER_LABELS = {
    UserStrategy.ALLD: "AllD",
    UserStrategy.BMEDIA: "BMedia",
    UserStrategy.GMEDIA: "GMedia",
    UserStrategy.ALLC: "AllC",
}
_CREATOR_LABELS = {CreatorStrategy.UNSAFE: "D", CreatorStrategy.SAFE: "C"}


class ParameterError(ValueError):
    pass


class ParameterWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GameParams:
    """Payoff and media-quality parameters of the creator/user game.

    b_u: user benefit from adopting a safe product
    c_u: user loss from adopting an unsafe product
    b_c: creator benefit when the product is adopted
    c_c: extra cost of producing safe AI (may be negative)
    c_i: cost of an informed (good media) recommendation
    q:   probability that a good-media recommendation is correct
    """

    b_u: float = 0.4
    c_u: float = 0.8
    b_c: float = 0.4
    c_c: float = 0.1
    c_i: float = 0.1
    q: float = 0.9

    def as_array(self):
        import numpy as np

        return np.array([self.b_u, self.c_u, self.b_c, self.c_c, self.c_i, self.q], dtype=float)

    def to_dict(self):
        return asdict(self)

    def with_(self, **changes):
        return replace(self, **changes)

    def scaled(self, factor):
        """All payoff magnitudes multiplied by ``factor`` (q untouched)."""
        return replace(
            self,
            b_u=self.b_u * factor,
            c_u=self.c_u * factor,
            b_c=self.b_c * factor,
            c_c=self.c_c * factor,
            c_i=self.c_i * factor,
        )


DEFAULT_PARAMS = GameParams()
# parameter set behind the bistable trajectories (oscillation vs collapse)
OSCILLATION_PARAMS = GameParams(b_u=0.4, c_u=0.8, b_c=0.4, c_c=0.2, c_i=0.05, q=0.9)
# all-defector start experiment
ESCAPE_PARAMS = GameParams(b_u=0.4, c_u=0.8, b_c=0.4, c_c=0.1, c_i=0.05, q=0.9)


def validate_params(p: GameParams) -> GameParams:
    """Return ``p`` unchanged if every field is finite and in range.

    Raises ParameterError otherwise. A ``c_u <= b_u`` setting only warns,
    since cost sweeps legitimately cross that line.
    """
    for f in fields(p):
        v = getattr(p, f.name)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParameterError(f"{f.name} must be a real number, got {v!r}")
        if not math.isfinite(v):
            raise ParameterError(f"{f.name} must be finite, got {v!r}")
    if not 0.0 <= p.q <= 1.0:
        raise ParameterError(f"q must lie in [0, 1], got {p.q}")
    for name in ("b_u", "c_u", "b_c", "c_i"):
        if getattr(p, name) < 0:
            raise ParameterError(f"{name} must be >= 0, got {getattr(p, name)}")
    if p.c_u <= p.b_u:
        warnings.warn(
            f"c_u={p.c_u} <= b_u={p.b_u}: outside the modelled regime c_u > b_u",
            ParameterWarning,
            stacklevel=2,
        )
    return p


def parse_kv_text(text):
    """Parse flat ``key = value`` / ``key: value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                break
        else:
            raise ParameterError(f"line {lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def load_config(path) -> dict:
    """Read a flat key-value config file into a dict of strings."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read config file {path}: {exc}") from exc
    return parse_kv_text(text)


def params_from_mapping(mapping, base: GameParams = DEFAULT_PARAMS) -> GameParams:
    """Overlay the game-parameter keys of ``mapping`` onto ``base``."""
    changes = {}
    for name in PARAM_NAMES:
        if name in mapping and mapping[name] is not None:
            try:
                changes[name] = float(mapping[name])
            except (TypeError, ValueError) as exc:
                raise ParameterError(f"{name}: not a number: {mapping[name]!r}") from exc
    return validate_params(replace(base, **changes))
