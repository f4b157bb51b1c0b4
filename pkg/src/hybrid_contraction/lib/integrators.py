"""Step-wise ODE integrators with dense output, used to build trajectory arcs one step at a time."""

import logging
from collections.abc import Callable
from typing import override

import numpy as np
import numpy.typing as npt
from scipy.integrate import DOP853
from scipy.integrate import RK45
from scipy.integrate import DenseOutput
from scipy.integrate import OdeSolver
from scipy.interpolate import CubicHermiteSpline

from .arrays import Vector
from .config import IntegratorOptions

logger = logging.getLogger(__name__)

type RightHandSide = Callable[[float, Vector], Vector]


class HermiteDenseOutput(DenseOutput):
    """Cubic Hermite interpolant between two step endpoints, matching values and slopes at both ends."""

    def __init__(  # noqa: PLR0913 # the two endpoints with their values and slopes
        self, t_old: float, t: float, y_old: Vector, f_old: Vector, y: Vector, f: Vector
    ):
        super().__init__(t_old, t)
        self._dim = y.shape[0]
        self._spline: CubicHermiteSpline | None = None
        if self._dim > 0 and t != t_old:
            self._spline = CubicHermiteSpline(
                np.array([t_old, t]), np.vstack([y_old, y]), np.vstack([f_old, f]), axis=0
            )
        self._y_old = y_old

    @override
    def _call_impl(self, t: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        times = np.asarray(t, dtype=np.float64)
        if self._spline is None:
            if times.ndim == 0:
                return self._y_old.copy()
            return np.repeat(self._y_old[:, np.newaxis], times.shape[0], axis=1)
        values = np.asarray(self._spline(times), dtype=np.float64)
        if times.ndim == 0:
            return values
        return values.T


class FixedStepRK4(OdeSolver):
    """Classical fourth-order Runge-Kutta with a fixed step, truncated at the integration bound.

    Unlike the base solver, zero-dimensional states still advance one step at a time, so guards that depend only on
    time are checked along the way.
    """

    def __init__(  # noqa: PLR0913 # mirrors the scipy solver signature plus the step length
        self,
        fun: RightHandSide,
        t0: float,
        y0: Vector,
        t_bound: float,
        *,
        step: float,
        vectorized: bool = False,
    ):
        super().__init__(fun, t0, y0, t_bound, vectorized)
        assert step > 0.0, f"Fixed step must be positive, not {step}"
        self.h = step
        self.f = self.fun(self.t, self.y)
        self._t_old_step = self.t
        self._y_old_step = self.y.copy()
        self._f_old_step = self.f.copy()

    @override
    def step(self) -> str | None:
        if self.status != "running":
            raise RuntimeError("Attempt to step on a failed or finished solver.")
        if self.t == self.t_bound:
            self.t_old = self.t
            self.status = "finished"
            return None
        t = self.t
        success, message = self._step_impl()
        if not success:
            self.status = "failed"
            return message
        self.t_old = t
        if self.direction * (self.t - self.t_bound) >= 0:
            self.status = "finished"
        return message

    @override
    def _step_impl(self) -> tuple[bool, str | None]:
        t, y = self.t, self.y
        h = min(self.h, self.t_bound - t)
        if self.t_bound - (t + h) < 1e-12 * self.h:
            h = self.t_bound - t
        k1 = self.f
        k2 = self.fun(t + h / 2, y + h / 2 * k1)
        k3 = self.fun(t + h / 2, y + h / 2 * k2)
        k4 = self.fun(t + h, y + h * k3)
        y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t_new = self.t_bound if h == self.t_bound - t else t + h
        f_new = self.fun(t_new, y_new)
        self._t_old_step, self._y_old_step, self._f_old_step = t, y, k1
        self.t, self.y, self.f = t_new, y_new, f_new
        return True, None

    @override
    def _dense_output_impl(self) -> HermiteDenseOutput:
        return HermiteDenseOutput(self._t_old_step, self.t, self._y_old_step, self._f_old_step, self.y, self.f)


def make_stepper(
    fun: RightHandSide, t0: float, y0: Vector, t_bound: float, options: IntegratorOptions
) -> OdeSolver:
    """A solver positioned at (t0, y0) that advances toward t_bound one step per ``step()`` call."""
    state = np.asarray(y0, dtype=np.float64)
    if state.shape[0] == 0:
        return FixedStepRK4(fun, t0, state, t_bound, step=options.zero_dim_step)
    match options.method:
        case "RK4":
            return FixedStepRK4(fun, t0, state, t_bound, step=options.fixed_step)
        case "RK45":
            return RK45(fun, t0, state, t_bound, rtol=options.rtol, atol=options.atol, max_step=options.max_step)
        case "DOP853":
            return DOP853(fun, t0, state, t_bound, rtol=options.rtol, atol=options.atol, max_step=options.max_step)


def integrator_order(options: IntegratorOptions) -> int:
    match options.method:
        case "RK4":
            return 4
        case "RK45":
            return 5
        case "DOP853":
            return 8
