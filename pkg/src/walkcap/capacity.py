"""Three-level pedestrian carrying-capacity calculus.

PCC (physical) = area / area_per_pedestrian * rotation_factor
RCC (real)     = PCC * product(corrective factors)
ECC (effective)= RCC * management_capacity

Each corrective factor is 1 - limiting_magnitude / total_magnitude, a
fraction in [0, 1]. Results are real numbers; rounding is left to the
presentation layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


# Default parametrization: 2 m2 per pedestrian for a comfortable visit,
# a 10h day / 4h mean visit rotation, Lisbon temperature (290/365) and
# rainfall ((365-65)/365) corrective factors, and 77.75% management capacity.
DEFAULT_AREA_PER_PEDESTRIAN_M2 = 2.0
DEFAULT_ROTATION_FACTOR = 2.5
DEFAULT_CORRECTIVE_FACTORS = (
    ("temperature", 0.7945),
    ("precipitation", 0.8219),
)
DEFAULT_MANAGEMENT_CAPACITY = 0.7775


class CapacityParamError(ValueError):
    """A capacity parameter is outside its valid range."""

    def __init__(self, field_name: str, message: str):
        super().__init__(message)
        self.field_name = field_name


def _check(condition: bool, field_name: str, message: str) -> None:
    if not condition:
        raise CapacityParamError(field_name, message)


@dataclass(frozen=True)
class CapacityParams:
    """User parameters for the capacity chain.

    corrective_factors is a list of (label, fraction) pairs; labels are
    carried through for reporting only.
    """

    area_per_pedestrian_m2: float = DEFAULT_AREA_PER_PEDESTRIAN_M2
    rotation_factor: float = DEFAULT_ROTATION_FACTOR
    corrective_factors: tuple[tuple[str, float], ...] = DEFAULT_CORRECTIVE_FACTORS
    management_capacity: float = DEFAULT_MANAGEMENT_CAPACITY

    def __post_init__(self):
        object.__setattr__(self, "corrective_factors",
                           tuple((str(label), float(value)) for label, value in self.corrective_factors))
        _check(math.isfinite(self.area_per_pedestrian_m2) and self.area_per_pedestrian_m2 > 0,
               "area_per_pedestrian_m2",
               f"area per pedestrian must be > 0, got {self.area_per_pedestrian_m2}")
        _check(math.isfinite(self.rotation_factor) and self.rotation_factor > 0,
               "rotation_factor",
               f"rotation factor must be > 0, got {self.rotation_factor}")
        for label, value in self.corrective_factors:
            _check(math.isfinite(value) and 0.0 <= value <= 1.0,
                   "corrective_factors",
                   f"corrective factor {label!r} must be in [0, 1], got {value}")
        _check(math.isfinite(self.management_capacity) and 0.0 <= self.management_capacity <= 1.0,
               "management_capacity",
               f"management capacity must be in [0, 1], got {self.management_capacity}")


@dataclass(frozen=True)
class CapacityReport:
    """Capacity chain outputs plus the inputs they were computed from."""

    walkable_area_m2: float
    params: CapacityParams
    pcc: float
    rcc: float
    ecc: float

    def to_dict(self) -> dict:
        return {
            "inputs": {
                "walkable_area_m2": self.walkable_area_m2,
                "area_per_pedestrian_m2": self.params.area_per_pedestrian_m2,
                "rotation_factor": self.params.rotation_factor,
                "corrective_factors": [
                    {"label": label, "value": value}
                    for label, value in self.params.corrective_factors
                ],
                "management_capacity": self.params.management_capacity,
            },
            "pcc": self.pcc,
            "rcc": self.rcc,
            "ecc": self.ecc,
        }


def rotation_factor(usable_hours: float, mean_visit_hours: float) -> float:
    """Permissible visits per day: usable daily hours over mean visit length."""
    _check(usable_hours > 0, "usable_hours",
           f"usable hours must be > 0, got {usable_hours}")
    _check(mean_visit_hours > 0, "mean_visit_hours",
           f"mean visit hours must be > 0, got {mean_visit_hours}")
    _check(mean_visit_hours <= usable_hours, "mean_visit_hours",
           f"mean visit ({mean_visit_hours}h) cannot exceed usable hours ({usable_hours}h)")
    return usable_hours / mean_visit_hours


def corrective_factor(limiting_magnitude: float, total_magnitude: float) -> float:
    """1 - limiting/total: the fraction of the total magnitude not limited."""
    _check(total_magnitude > 0, "total_magnitude",
           f"total magnitude must be > 0, got {total_magnitude}")
    _check(0 <= limiting_magnitude <= total_magnitude, "limiting_magnitude",
           f"limiting magnitude must be in [0, {total_magnitude}], got {limiting_magnitude}")
    return 1.0 - limiting_magnitude / total_magnitude


def pcc(area_m2: float, params: CapacityParams) -> float:
    """Physical carrying capacity: visitors/day the area physically holds."""
    _check(area_m2 >= 0, "walkable_area_m2", f"area must be >= 0, got {area_m2}")
    return area_m2 / params.area_per_pedestrian_m2 * params.rotation_factor


def rcc(pcc_value: float, corrective_factors) -> float:
    """Real carrying capacity: PCC scaled by the product of corrective factors."""
    product = 1.0
    for item in corrective_factors:
        value = item[1] if isinstance(item, (tuple, list)) else item
        _check(0.0 <= value <= 1.0, "corrective_factors",
               f"corrective factor must be in [0, 1], got {value}")
        product *= value
    return pcc_value * product


def ecc(rcc_value: float, management_capacity: float) -> float:
    """Effective carrying capacity: RCC scaled by management capacity."""
    _check(0.0 <= management_capacity <= 1.0, "management_capacity",
           f"management capacity must be in [0, 1], got {management_capacity}")
    return rcc_value * management_capacity


def assess(result, params: CapacityParams) -> CapacityReport:
    """Chain PCC -> RCC -> ECC for a walkable-area result.

    `result` is anything with a walkable_area_m2 attribute, or a bare number.
    """
    area = getattr(result, "walkable_area_m2", result)
    pcc_value = pcc(area, params)
    rcc_value = rcc(pcc_value, params.corrective_factors)
    ecc_value = ecc(rcc_value, params.management_capacity)
    return CapacityReport(
        walkable_area_m2=float(area),
        params=params,
        pcc=pcc_value,
        rcc=rcc_value,
        ecc=ecc_value,
    )
