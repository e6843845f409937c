# Sample-set factories for testing
from .samples import (
    SampleGenerator,
    point_mass,
    random_rotation,
    rotate,
)

__all__ = [
    "SampleGenerator",
    "point_mass",
    "random_rotation",
    "rotate",
]
