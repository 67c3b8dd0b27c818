"""Conditioning vocabulary: circulation/plane/angle tuples and their prompt sentences."""

from __future__ import annotations

import math
from dataclasses import dataclass

CIRCULATIONS = ("AC", "PC", "OTHER")
PLANES = ("A", "B")

# Canonical C-arm orientations: Plane A is the posteroanterior detector at
# (0, 0) degrees, Plane B the lateral detector at (-90, 0).
CANONICAL_ANGLES = {"A": (0.0, 0.0), "B": (-90.0, 0.0)}

_CIRCULATION_PHRASE = {"AC": "an anterior", "PC": "a posterior"}

PROMPT_TEMPLATE = ("This is {article_circulation} DSA scan taken in Plane {plane}, "
                   "with a primary angle of {primary}° and a secondary angle "
                   "of {secondary}°.")


class ConditionError(ValueError):
    """Invalid condition fields."""


def _format_angle(value: float) -> str:
    if float(value) == int(value):
        return str(int(value))
    return f"{value:g}"


@dataclass(frozen=True)
class ConditionSpec:
    """One circulation-plane-angle conditioning setting plus its prompt."""

    circulation: str
    plane: str
    primary_angle_deg: float
    secondary_angle_deg: float
    prompt: str

    def __post_init__(self):
        if self.circulation not in ("AC", "PC"):
            raise ConditionError(f"circulation must be AC or PC, got {self.circulation!r}")
        if self.plane not in PLANES:
            raise ConditionError(f"plane must be one of {PLANES}, got {self.plane!r}")
        want = CANONICAL_ANGLES[self.plane]
        got = (self.primary_angle_deg, self.secondary_angle_deg)
        if got != want:
            raise ConditionError(
                f"plane {self.plane} requires canonical angles {want}, got {got}")
        rendered = _render(self.circulation, self.plane,
                           self.primary_angle_deg, self.secondary_angle_deg)
        if self.prompt != rendered:
            raise ConditionError(
                f"prompt does not match the template rendering:\n"
                f"  got:  {self.prompt!r}\n  want: {rendered!r}")

    @property
    def key(self) -> str:
        return f"{self.circulation}-{self.plane}"


def _render(circulation: str, plane: str, primary: float, secondary: float) -> str:
    return PROMPT_TEMPLATE.format(
        article_circulation=_CIRCULATION_PHRASE[circulation], plane=plane,
        primary=_format_angle(primary), secondary=_format_angle(secondary))


def render_prompt(spec: ConditionSpec) -> str:
    """Deterministic template instantiation of a condition's metadata sentence."""
    return _render(spec.circulation, spec.plane,
                   spec.primary_angle_deg, spec.secondary_angle_deg)


def canonical_condition(circulation: str, plane: str) -> ConditionSpec:
    """The ConditionSpec for one of the four published settings."""
    if circulation not in ("AC", "PC"):
        raise ConditionError(f"circulation must be AC or PC, got {circulation!r}")
    if plane not in PLANES:
        raise ConditionError(f"plane must be one of {PLANES}, got {plane!r}")
    primary, secondary = CANONICAL_ANGLES[plane]
    return ConditionSpec(circulation=circulation, plane=plane,
                         primary_angle_deg=primary, secondary_angle_deg=secondary,
                         prompt=_render(circulation, plane, primary, secondary))


def condition_from_key(key: str) -> ConditionSpec:
    """Parse the CLI shorthand 'AC-A', 'PC-B', ... into its ConditionSpec."""
    parts = key.split("-")
    if len(parts) != 2:
        raise ConditionError(f"condition key must look like 'AC-A', got {key!r}")
    return canonical_condition(parts[0], parts[1])


CANONICAL_CONDITIONS = tuple(
    canonical_condition(circ, plane) for circ in ("AC", "PC") for plane in ("A", "B"))

CANONICAL_KEYS = tuple(c.key for c in CANONICAL_CONDITIONS)

ANGLE_TOLERANCE_DEG = 5.0

OTHERS = "OTHERS"


def bin_angles(primary_deg: float, secondary_deg: float):
    """Snap an angle pair to a canonical bin, or OTHERS.

    Returns (0.0, 0.0) when both angles are within +/-5 degrees of (0, 0),
    (-90.0, 0.0) when within +/-5 of (-90, 0); the 5-degree boundary is
    inclusive on both sides. Anything else maps to OTHERS.
    """
    for value, name in ((primary_deg, "primary"), (secondary_deg, "secondary")):
        if not math.isfinite(value):
            raise ConditionError(f"{name} angle must be finite, got {value!r}")
    for bin_angles_pair in ((0.0, 0.0), (-90.0, 0.0)):
        if (abs(primary_deg - bin_angles_pair[0]) <= ANGLE_TOLERANCE_DEG
                and abs(secondary_deg - bin_angles_pair[1]) <= ANGLE_TOLERANCE_DEG):
            return bin_angles_pair
    return OTHERS
