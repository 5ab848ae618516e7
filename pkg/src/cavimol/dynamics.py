"""Time-domain engine: mean-field equations of motion and experiment drivers.

The 3-level (probe only) and 4-level (probe + control, leaky) systems share
one right-hand side; the 3-level mode folds the extra dark decay into the
|g'> channel and runs with the control field off.  State layout is a packed
12-float vector::

    [Re a, Im a, r_gg, r_ee, r_g'g', r_g'', Re r_ge, Im r_ge,
     Re r_gg', Im r_gg', Re r_g'e, Im r_g'e]

Two integrator backends sit behind :func:`integrate`: an adaptive embedded
Dormand-Prince 5(4) stepper (jit-compiled when numba is available) used for
long scans, and scipy's DOP853 as the general-purpose/reference path.  Tests
cross-validate the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import physparams
from .model import MeanFieldState, Model, RingdownResult, ScanResult

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap


class NumericalError(RuntimeError):
    """Base class for integrator failures (CLI exit status 2)."""


class StiffnessError(NumericalError):
    """Step size underflowed; message names the dominant rate."""


class NonConvergenceError(NumericalError):
    """Steady state not reached within the allowed settle time."""


@dataclass(frozen=True)
class IntegratorTolerances:
    rtol: float = 1e-9
    atol: float = 1e-12


@dataclass(frozen=True)
class ScanSpec:
    """Piecewise-constant detuning ramp: hold each step for ``dwell`` seconds.

    ``pa_pc_offset``/``delta_ra`` of None take the locked values from the
    model's drive settings.
    """

    start: float              # first probe-cavity detuning (rad/s)
    stop: float
    steps: int = 200
    dwell: float = 0.5e-6     # s
    pa_pc_offset: float | None = None   # fixed Delta_pa - Delta_pc (rad/s)
    delta_ra: float | None = None       # fixed control detuning (rad/s)

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("scan needs at least 2 steps")
        if self.dwell <= 0:
            raise ValueError("dwell must be > 0")
        if not self.stop > self.start:
            raise ValueError("scan detunings must be strictly increasing")

    @property
    def span(self) -> float:
        return self.stop - self.start

    @property
    def duration(self) -> float:
        return self.steps * self.dwell

    @property
    def scan_rate(self) -> float:
        return self.span / self.duration


@dataclass(frozen=True)
class SteadyStateCriterion:
    """Steady when the state stops moving: over an integration chunk spanning
    many characteristic times, max_i |dy_i| / max(|y_i|, floor*||y||_inf)
    must fall below rel_tol.  The floor keeps slaved near-zero components
    (whose residual motion is integrator noise) from blocking convergence."""

    rel_tol: float = 1e-6
    floor: float = 1e-3
    max_settle: float = 0.02   # s


# ---------------------------------------------------------------------------
# packed state and right-hand side

N_VARS = 12


def pack_state(state: MeanFieldState) -> np.ndarray:
    return np.array([
        state.alpha.real, state.alpha.imag,
        state.rho_gg, state.rho_ee, state.rho_gpgp, state.rho_gpp,
        state.rho_ge.real, state.rho_ge.imag,
        state.rho_ggp.real, state.rho_ggp.imag,
        state.rho_gpe.real, state.rho_gpe.imag,
    ])


def unpack_state(y) -> MeanFieldState:
    return MeanFieldState(
        alpha=complex(y[0], y[1]),
        rho_gg=float(y[2]), rho_ee=float(y[3]),
        rho_gpgp=float(y[4]), rho_gpp=float(y[5]),
        rho_ge=complex(y[6], y[7]),
        rho_ggp=complex(y[8], y[9]),
        rho_gpe=complex(y[10], y[11]),
    )


@njit(cache=True)
def _rhs12(t, y, p):
    """Mean-field equations of motion; p packs the (constant) coefficients."""
    kap = p[0]; dpc = p[1]; dpa = p[2]; dra = p[3]; eta = p[4]
    g0 = p[5]; g0nc = p[6]; g1 = p[7]; g2 = p[8]; g3 = p[9]
    gt = p[10]; ggg = p[11]; om = p[12]

    alpha = complex(y[0], y[1])
    rgg = y[2]; ree = y[3]; rpp = y[4]
    rge = complex(y[6], y[7])
    rgp = complex(y[8], y[9])
    rpe = complex(y[10], y[11])

    dalpha = -(kap - 1j * dpc) * alpha - 1j * g0nc * rge - eta
    drge = (-0.5 * gt + 1j * dpa) * rge - 1j * g0 * alpha * (rgg - ree) - 1j * om * rgp
    drgp = (-ggg + 1j * (dpa - dra)) * rgp + 1j * g0 * alpha * rpe.conjugate() - 1j * om * rge
    drpe = (-0.5 * gt + 1j * dra) * rpe - 1j * g0 * alpha * rgp.conjugate() - 1j * om * (rpp - ree)

    pump = -2.0 * g0 * (y[0] * y[7] - y[1] * y[6])   # i g (a* r_ge - c.c.)
    ctrl = -2.0 * om * y[11]                          # i Om (r_g'e - c.c.)

    out = np.empty(12)
    out[0] = dalpha.real
    out[1] = dalpha.imag
    out[2] = g1 * ree - pump
    out[3] = -gt * ree + pump + ctrl
    out[4] = g2 * ree - ctrl
    out[5] = g3 * ree
    out[6] = drge.real
    out[7] = drge.imag
    out[8] = drgp.real
    out[9] = drgp.imag
    out[10] = drpe.real
    out[11] = drpe.imag
    return out


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 6))
_DP_A[1, 0] = 1 / 5
_DP_A[2, :2] = (3 / 40, 9 / 40)
_DP_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_DP_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_DP_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_DP_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_DP_B5 = _DP_A[6].copy()
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = np.append(_DP_B5, 0.0) - _DP_B4


@njit(cache=True)
def _advance(y, t0, t1, p, rtol, atol, h_init, t_rec, rec):
    """Adaptive DP5(4) march from t0 to t1, storing states at t_rec (sorted,
    inside (t0, t1]).  Mutates y to the final state.  Returns
    (status, n_accepted, n_rejected); status 1 = step-size underflow."""
    a = _DP_A
    b = _DP_B5
    e = _DP_E
    c = _DP_C
    t = t0
    irec = 0
    nrec = t_rec.shape[0]
    h_ctrl = h_init
    k = np.empty((7, N_VARS))
    k[0] = _rhs12(t, y, p)
    naccept = 0
    nreject = 0
    while t < t1:
        next_stop = t1
        if irec < nrec and t_rec[irec] < next_stop:
            next_stop = t_rec[irec]
        h = h_ctrl
        if h > next_stop - t:
            h = next_stop - t
        if t + h == t:
            return 1, naccept, nreject
        # stages 2..6
        for i in range(1, 6):
            yi = y.copy()
            for j in range(i):
                yi += (h * a[i, j]) * k[j]
            k[i] = _rhs12(t + c[i] * h, yi, p)
        ynew = y + h * (b[0] * k[0] + b[2] * k[2] + b[3] * k[3]
                        + b[4] * k[4] + b[5] * k[5])
        k[6] = _rhs12(t + h, ynew, p)
        errv = h * (e[0] * k[0] + e[2] * k[2] + e[3] * k[3]
                    + e[4] * k[4] + e[5] * k[5] + e[6] * k[6])
        err = 0.0
        for i in range(N_VARS):
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (errv[i] / sc) ** 2
        err = math.sqrt(err / N_VARS)
        if err <= 1.0:
            t_new = t + h
            if abs(t_new - next_stop) <= 4.0 * 2.220446049250313e-16 * abs(next_stop):
                t_new = next_stop
            t = t_new
            y[:] = ynew
            k[0] = k[6]   # FSAL
            naccept += 1
            if irec < nrec and t >= t_rec[irec]:
                rec[irec] = ynew
                irec += 1
            fac = 6.0 if err == 0.0 else min(6.0, max(0.2, 0.9 * err ** -0.2))
            h_ctrl = h * fac
        else:
            nreject += 1
            h_ctrl = h * max(0.2, 0.9 * err ** -0.2)
            if t + h_ctrl == t:
                return 1, naccept, nreject
    while irec < nrec:   # record times coinciding with t1
        rec[irec] = y
        irec += 1
    return 0, naccept, nreject


@dataclass(frozen=True)
class PackedRhs:
    """Coefficient bundle for the shared kernel; also usable as f(t, y)."""

    p: np.ndarray
    rates: tuple[tuple[str, float], ...]

    def __call__(self, t, y):
        return _rhs12(t, y, self.p)

    @property
    def fastest_rate(self) -> float:
        return max(v for _, v in self.rates)

    def dominant_rate(self) -> tuple[str, float]:
        return max(self.rates, key=lambda kv: kv[1])


def make_packed_rhs(model: Model, mode: str, delta_pc: float | None = None,
                    delta_pa: float | None = None, delta_ra: float | None = None,
                    eta: float | None = None) -> PackedRhs:
    """Bundle model coefficients for the kernel.

    mode "vrs": 3-level semantics, control off and gamma3 folded into the
    |g'> channel so Gamma_t = Gamma_1 + Gamma_2.  mode "eit": full 4-level.
    """
    lv, cv, dr, en = model.levels, model.cavity, model.drive, model.ensemble
    if mode == "vrs":
        g2, g3, om = lv.gamma2 + lv.gamma3, 0.0, 0.0
    elif mode == "eit":
        g2, g3, om = lv.gamma2, lv.gamma3, dr.omega_control
    else:
        raise ValueError(f"unknown mode {mode!r}")
    dpc = dr.delta_pc if delta_pc is None else delta_pc
    dpa = dr.delta_pa if delta_pa is None else delta_pa
    dra = dr.delta_ra if delta_ra is None else delta_ra
    eta_val = dr.eta if eta is None else eta
    gt = lv.gamma1 + g2 + g3
    p = np.array([cv.kappa_t, dpc, dpa, dra, eta_val, cv.g0,
                  cv.g0 * en.n_c, lv.gamma1, g2, g3, gt,
                  lv.gamma_gg_prime, om])
    rates = (("kappa_t", cv.kappa_t), ("gamma_t", gt), ("omega_control", abs(om)),
             ("g0*sqrt(n_c)", cv.g0 * math.sqrt(en.n_c)),
             ("delta_pc", abs(dpc)), ("delta_pa", abs(dpa)), ("delta_ra", abs(dra)))
    return PackedRhs(p=p, rates=rates)


def rhs_vrs(state: MeanFieldState, model: Model, t: float = 0.0) -> MeanFieldState:
    """d(state)/dt for the 3-level probe-only system (control terms off)."""
    rhs = make_packed_rhs(model, mode="vrs")
    return unpack_state(_rhs12(t, pack_state(state), rhs.p))


def rhs_eit(state: MeanFieldState, model: Model, t: float = 0.0) -> MeanFieldState:
    """d(state)/dt for the leaky 4-level probe+control system."""
    rhs = make_packed_rhs(model, mode="eit")
    return unpack_state(_rhs12(t, pack_state(state), rhs.p))


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray   # (len(t), 12)

    @property
    def final_state(self) -> MeanFieldState:
        return unpack_state(self.y[-1])

    def states(self) -> list[MeanFieldState]:
        return [unpack_state(row) for row in self.y]


def integrate(rhs, state0, duration: float,
              tolerances: IntegratorTolerances | None = None,
              sample_times=None, method: str = "auto",
              t0: float = 0.0, fastest_rate: float | None = None) -> Trajectory:
    """Adaptive integration with local error control and dense sampling.

    ``rhs`` is a PackedRhs (fast path) or any callable f(t, y12).
    ``sample_times`` are absolute times in (t0, t0+duration]; default records
    the endpoint only.  Raises StiffnessError on step-size underflow, naming
    the dominant rate.
    """
    if duration <= 0:
        raise ValueError("duration must be > 0")
    tol = tolerances or IntegratorTolerances()
    y0 = pack_state(state0) if isinstance(state0, MeanFieldState) \
        else np.asarray(state0, dtype=float).copy()
    t1 = t0 + duration
    t_rec = np.array([t1]) if sample_times is None \
        else np.asarray(sample_times, dtype=float)
    if np.any(np.diff(t_rec) <= 0) or t_rec[0] <= t0 or t_rec[-1] > t1 * (1 + 1e-15):
        raise ValueError("sample_times must be increasing and inside (t0, t0+duration]")
    packed = isinstance(rhs, PackedRhs)
    if method == "auto":
        method = "rk45" if packed else "dop853"

    if method == "rk45":
        if not packed:
            raise ValueError("rk45 backend requires a PackedRhs")
        rate = rhs.fastest_rate if fastest_rate is None else fastest_rate
        h0 = min(duration / 10.0, 0.01 / max(rate, 1.0 / duration))
        y = y0.copy()
        rec = np.empty((len(t_rec), N_VARS))
        status, _, _ = _advance(y, t0, t1, rhs.p, tol.rtol, tol.atol, h0,
                                t_rec, rec)
        if status != 0:
            name, val = rhs.dominant_rate()
            raise StiffnessError(
                f"step size underflow; dominant rate {name} = {val:.3e} rad/s")
        return Trajectory(t=t_rec, y=rec)

    if method == "dop853":
        sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853",
                        rtol=tol.rtol, atol=tol.atol, t_eval=t_rec)
        if not sol.success:
            extra = ""
            if packed:
                name, val = rhs.dominant_rate()
                extra = f"; dominant rate {name} = {val:.3e} rad/s"
            raise StiffnessError(f"integrator failed: {sol.message}{extra}")
        return Trajectory(t=sol.t, y=sol.y.T)

    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# experiment drivers

def _ground_state() -> np.ndarray:
    y = np.zeros(N_VARS)
    y[2] = 1.0
    return y


def _resolve_lock(model: Model, scan: ScanSpec) -> tuple[float, float]:
    offset = scan.pa_pc_offset if scan.pa_pc_offset is not None \
        else model.drive.delta_pa - model.drive.delta_pc
    dra = scan.delta_ra if scan.delta_ra is not None else model.drive.delta_ra
    return offset, dra


def _run_scan(model: Model, scan: ScanSpec, mode: str,
              tolerances: IntegratorTolerances | None,
              method: str) -> ScanResult:
    offset, dra = _resolve_lock(model, scan)
    detunings = np.linspace(scan.start, scan.stop, scan.steps)
    cols = {name: np.empty(scan.steps) for name in
            ("p_out", "n_bar", "rho_gg", "rho_ee", "rho_gpgp", "rho_gpp")}
    y = _ground_state()
    cv = model.cavity
    wavelength = model.levels.lambda_transition
    for i, d in enumerate(detunings):
        rhs = make_packed_rhs(model, mode=mode, delta_pc=d, delta_pa=d + offset,
                              delta_ra=dra)
        traj = integrate(rhs, y, scan.dwell, tolerances=tolerances, method=method)
        y = traj.y[-1]
        alpha = complex(y[0], y[1])
        cols["p_out"][i] = physparams.output_power(
            alpha, cv.kappa_r2, wavelength, convention=model.flux_convention)
        cols["n_bar"][i] = abs(alpha) ** 2
        cols["rho_gg"][i] = y[2]
        cols["rho_ee"][i] = y[3]
        cols["rho_gpgp"][i] = y[4]
        cols["rho_gpp"][i] = y[5]
    metadata = {
        "mode": mode, "n_c": model.ensemble.n_c, "g0": cv.g0,
        "pa_pc_offset": offset, "delta_ra": dra,
        "steps": scan.steps, "dwell_s": scan.dwell,
        "span_rad_s": scan.span,
        "model_snapshot": model.snapshot,
    }
    return ScanResult(detuning=detunings, mode=mode, scan_rate=scan.scan_rate,
                      dwell=scan.dwell, metadata=metadata,
                      final_state=unpack_state(y), **cols)


def run_vrs_scan(model: Model, scan: ScanSpec,
                 tolerances: IntegratorTolerances | None = None,
                 method: str = "auto") -> ScanResult:
    """Continuous probe scan over the 3-level system, all population in |g>
    at the start; the final |g'> population is the per-scan loss fraction."""
    return _run_scan(model, scan, "vrs", tolerances, method)


def run_eit_scan(model: Model, scan: ScanSpec,
                 tolerances: IntegratorTolerances | None = None,
                 method: str = "auto") -> ScanResult:
    """Probe scan across the EIT window of the leaky 4-level system; |g'>
    and |g''> populations are recorded separately."""
    return _run_scan(model, scan, "eit", tolerances, method)


def fastest_rate(model: Model, mode: str = "eit") -> float:
    return make_packed_rhs(model, mode=mode).fastest_rate


def settle_to_steady(model: Model, criterion: SteadyStateCriterion | None = None,
                     tolerances: IntegratorTolerances | None = None,
                     mode: str = "eit", initial=None,
                     method: str = "auto") -> tuple[MeanFieldState, float]:
    """Integrate from the all-ground dark state (or ``initial``) at fixed
    detunings until the criterion is met; returns (state, settle_time)."""
    crit = criterion or SteadyStateCriterion()
    rhs = make_packed_rhs(model, mode=mode)
    tau_c = 1.0 / rhs.fastest_rate
    y = _ground_state() if initial is None else (
        pack_state(initial) if isinstance(initial, MeanFieldState)
        else np.asarray(initial, dtype=float).copy())
    t = 0.0
    chunk = 50.0 * tau_c
    while t < crit.max_settle:
        chunk = min(chunk, crit.max_settle - t)
        y_prev = y.copy()
        traj = integrate(rhs, y, chunk, tolerances=tolerances, method=method)
        y = traj.y[-1]
        t += chunk
        scale = np.maximum(np.abs(y), crit.floor * max(1.0, np.max(np.abs(y))))
        if np.max(np.abs(y - y_prev) / scale) <= crit.rel_tol:
            return unpack_state(y), t
        chunk *= 1.6
    raise NonConvergenceError(
        f"no steady state within {crit.max_settle:.3e} s "
        f"(criterion rel_tol={crit.rel_tol:g})")


def run_ringdown(model: Model, criterion: SteadyStateCriterion | None = None,
                 observe_duration: float | None = None, cycles: int = 1,
                 samples: int = 400,
                 tolerances: IntegratorTolerances | None = None,
                 method: str = "auto") -> RingdownResult:
    """Settle to steady state, switch the probe off, record the decay.

    Requires all detunings zero (two-photon resonant ring-down scheme).
    With cycles > 1 the settle/decay sequence repeats, populations carried
    over, so losses accumulate as in a photon-counting experiment.
    """
    from . import analytics  # deferred: analytics does not import dynamics

    dr = model.drive
    tiny = 1e-9 * model.cavity.kappa_t
    if max(abs(dr.delta_pc), abs(dr.delta_pa), abs(dr.delta_ra)) > tiny:
        raise ValueError("ring-down scheme requires delta_pa = delta_pc = delta_ra = 0")
    if observe_duration is None:
        rate = analytics.eit_fwhm(model.cavity.g0, model.ensemble.n_c,
                                  dr.omega_control, model.cavity.kappa_t,
                                  model.levels.gamma_t)
        observe_duration = 6.0 / rate
    t_rec = np.linspace(0.0, observe_duration, samples)
    rhs_off = make_packed_rhs(model, mode="eit", eta=0.0)
    cv = model.cavity
    wavelength = model.levels.lambda_transition

    p_out_cycles = np.empty((cycles, samples))
    rho_gpgp_end = np.empty(cycles)
    rho_gpp_end = np.empty(cycles)
    y = _ground_state()
    steady_p_out = steady_n_bar = settle_time = 0.0
    for cyc in range(cycles):
        state, t_settle = settle_to_steady(model, criterion, tolerances,
                                           mode="eit", initial=y, method=method)
        y = pack_state(state)
        if cyc == 0:
            settle_time = t_settle
            steady_n_bar = state.n_bar
            steady_p_out = physparams.output_power(
                state.alpha, cv.kappa_r2, wavelength,
                convention=model.flux_convention)
        p_out_cycles[cyc, 0] = physparams.output_power(
            complex(y[0], y[1]), cv.kappa_r2, wavelength,
            convention=model.flux_convention)
        traj = integrate(rhs_off, y, observe_duration, tolerances=tolerances,
                         sample_times=t_rec[1:], method=method)
        for j, row in enumerate(traj.y, start=1):
            p_out_cycles[cyc, j] = physparams.output_power(
                complex(row[0], row[1]), cv.kappa_r2, wavelength,
                convention=model.flux_convention)
        y = traj.y[-1].copy()
        rho_gpgp_end[cyc] = y[4]
        rho_gpp_end[cyc] = y[5]
    metadata = {
        "n_c": model.ensemble.n_c, "g0": cv.g0,
        "observe_duration_s": observe_duration, "samples": samples,
        "model_snapshot": model.snapshot,
    }
    return RingdownResult(t=t_rec, p_out=p_out_cycles[0],
                          p_out_cycles=p_out_cycles,
                          steady_p_out=steady_p_out, steady_n_bar=steady_n_bar,
                          settle_time=settle_time,
                          rho_gpgp_cycles=rho_gpgp_end,
                          rho_gpp_cycles=rho_gpp_end, cycles=cycles,
                          metadata=metadata, final_state=unpack_state(y))


# ---------------------------------------------------------------------------
# default scan windows

def vrs_auto_span(model: Model, factor: float = 4.0) -> tuple[float, float]:
    """Symmetric window +/- factor*g0*sqrt(N_c), widened to cover the bare
    cavity line when the collective coupling is small."""
    half = max(factor * model.cavity.g0 * math.sqrt(model.ensemble.n_c),
               6.0 * model.cavity.kappa_t)
    return -half, half


def eit_auto_span(model: Model, halfwidths: float = 6.0) -> tuple[float, float]:
    """Symmetric window of +/- halfwidths HWHMs of the transparency peak."""
    from . import analytics

    fwhm = analytics.eit_fwhm(model.cavity.g0, model.ensemble.n_c,
                              model.drive.omega_control, model.cavity.kappa_t,
                              model.levels.gamma_t)
    half = halfwidths * 0.5 * fwhm
    return -half, half
