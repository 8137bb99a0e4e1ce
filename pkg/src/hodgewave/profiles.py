"""Named analytic initial conditions, with exact solutions where known.

Each profile returns vertex samples ``(u0, v0)``; profiles with a closed-form
solution also provide the exact momentum ``omega = rho * u_t`` at time ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .metric import MaterialFields

__all__ = ["Profile", "PROFILES", "get_profile", "standing_wave_x", "gaussian_bump", "sphere_l1"]


@dataclass(frozen=True)
class Profile:
    name: str
    initial: Callable  # (points, materials, **params) -> (u0, v0)
    exact_omega: Callable | None = None  # (points, materials, t, **params) -> omega

    def __call__(self, points, materials, **params):
        return self.initial(np.asarray(points, dtype=float), materials, **params)


def _wave_speed(materials: MaterialFields) -> float:
    rho, young = materials.rho, materials.young
    if np.ptp(rho) or np.ptp(young):
        raise ValueError("analytic profile needs constant materials")
    return float(np.sqrt(young[0] / rho[0]))


def _x_extent(points):
    x = points[:, 0]
    return float(x.min()), float(x.max() - x.min())


def _sw_initial(points, materials, mode: int = 1):
    x0, lx = _x_extent(points)
    u0 = np.cos(mode * np.pi * (points[:, 0] - x0) / lx)
    return u0, np.zeros(len(points))


def _sw_omega(points, materials, t, mode: int = 1):
    x0, lx = _x_extent(points)
    k = mode * np.pi / lx
    c = _wave_speed(materials)
    return -materials.rho * c * k * np.cos(k * (points[:, 0] - x0)) * np.sin(c * k * t)


standing_wave_x = Profile("standing_wave_x", _sw_initial, _sw_omega)
"""``u = cos(k (x - x0)) cos(c k t)`` with ``k = mode*pi/Lx`` over the mesh's x-extent."""


def _gauss_initial(points, materials, center=None, width: float = 0.1, amplitude: float = 1.0):
    if center is None:
        center = 0.5 * (points.min(axis=0) + points.max(axis=0))
    center = np.broadcast_to(np.asarray(center, dtype=float), points.shape[1:])
    r2 = np.sum((points - center) ** 2, axis=1)
    return amplitude * np.exp(-r2 / (2.0 * width**2)), np.zeros(len(points))


gaussian_bump = Profile("gaussian_bump", _gauss_initial)
"""Gaussian displacement at rest, centred on the bounding box by default."""


def _sphere_initial(points, materials):
    if points.shape[1] < 3:
        raise ValueError("sphere_l1 needs 3D coordinates")
    return points[:, 2].copy(), np.zeros(len(points))


def _sphere_omega(points, materials, t):
    # -Laplace-Beltrami z = 2 z on the unit sphere
    c = _wave_speed(materials)
    w = c * np.sqrt(2.0)
    return -materials.rho * w * points[:, 2] * np.sin(w * t)


sphere_l1 = Profile("sphere_l1", _sphere_initial, _sphere_omega)
"""``u = z cos(sqrt(2) c t)`` on the unit sphere."""


PROFILES = {p.name: p for p in (standing_wave_x, gaussian_bump, sphere_l1)}


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; known: {', '.join(PROFILES)}") from None
