"""Spiking implementation of a TPAM network.

A Hermitian weight matrix is compiled into leaky integrate-and-fire
neurons coupled by delay synapses. The phase of each weight becomes a
conduction delay, its magnitude a synaptic gain. An inhibitory population
with uniform routing delays cancels the mean excitatory drive and supplies
the activity-proportional threshold. Time is in seconds and voltages are
normalized (rest = reset = 0, spike threshold = 1 unless stated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import core


class ConfigError(ValueError):
    pass


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class LifParams:
    """Leaky integrate-and-fire parameters, ``C dV/dt = g_l (E_l - V) + I``."""

    C: float = 0.05
    g_l: float = 1.0
    E_l: float = 0.0
    V_theta: float = 1.0
    V_r: float = 0.0
    tau_ref: float = 0.0

    def __post_init__(self):
        if not self.V_theta > self.V_r:
            raise ConfigError("V_theta must exceed V_r")
        if self.tau_ref < 0:
            raise ConfigError("tau_ref must be nonnegative")
        if not self.C / self.g_l > 0:
            raise ConfigError("membrane time constant must be positive")

    @property
    def tau_m(self) -> float:
        return self.C / self.g_l

    @classmethod
    def with_tau(cls, tau_m: float, tau_ref: float = 0.0, **kw) -> "LifParams":
        g_l = kw.pop("g_l", 1.0)
        return cls(C=tau_m * g_l, g_l=g_l, tau_ref=tau_ref, **kw)


@dataclass(frozen=True)
class DelaySynapse:
    pre: int
    post: int
    magnitude: float
    delay: float
    tau_s: float
    sign: str = "excitatory"


@dataclass
class SpikeRaster:
    """Spike events as parallel arrays sorted by time."""

    ids: np.ndarray
    times: np.ndarray
    duration: float
    T: float = 0.2

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.times = np.asarray(self.times, dtype=float)
        order = np.lexsort((self.ids, self.times))
        self.ids, self.times = self.ids[order], self.times[order]

    @classmethod
    def empty(cls, duration: float = 0.0, T: float = 0.2) -> "SpikeRaster":
        return cls(np.zeros(0, np.int64), np.zeros(0), duration, T)

    @property
    def events(self) -> list[tuple[int, float]]:
        return list(zip(self.ids.tolist(), self.times.tolist()))

    def __len__(self):
        return self.ids.size

    def window(self, start: float, length: float) -> "SpikeRaster":
        keep = (self.times >= start) & (self.times < start + length)
        return SpikeRaster(self.ids[keep], self.times[keep], self.duration, self.T)

    def neuron_times(self, i: int) -> np.ndarray:
        return self.times[self.ids == i]


@dataclass
class SpikingNetwork:
    """Compiled network. Excitatory synapses are stored densely as gain and
    delay matrices indexed ``[post, pre]``; a zero gain means no synapse."""

    T: float
    N: int
    exc: LifParams
    inh: LifParams
    N_inh: int
    gain: np.ndarray
    delay: np.ndarray
    tau_exc: float
    tau_inh: float
    w_ei: float
    w_ie: np.ndarray
    delay_ei: float = 0.0
    delay_ie: float = 0.0
    theta: float = 0.6
    cue_width: float = 0.01
    readout_gain: np.ndarray | None = None
    readout_delay: np.ndarray | None = None
    readout: LifParams | None = None
    readout_bias: float = 0.0
    bias: float | np.ndarray = 0.0
    meta: dict = field(default_factory=dict)

    def synapses(self) -> list[DelaySynapse]:
        post, pre = np.nonzero(self.gain)
        return [
            DelaySynapse(int(j), int(i), float(self.gain[i, j]), float(self.delay[i, j]), self.tau_exc)
            for i, j in zip(post, pre)
        ]

    @property
    def n_readout(self) -> int:
        return 0 if self.readout_gain is None else self.readout_gain.shape[0]


@dataclass(frozen=True)
class Gains:
    """Loop gains of the compiled network.

    ``exc`` is the synaptic current jump per unit ``|W_ij|``. ``ei`` is the
    E-to-I weight, which sets the operating point of the interneurons.
    ``balance`` scales the inhibitory charge that cancels the mean excitatory
    charge of each synapse, ``threshold`` converts ``theta`` into extra
    inhibitory charge per excitatory spike (in units of one unit-weight
    synapse). ``latency`` (in cycles) is subtracted from every excitatory delay
    before wrapping, to compensate for integration lag.
    """

    exc: float = 2.0
    ei: float = 1.0
    balance: float = 1.0
    threshold: float = 1.0
    latency: float = 0.05

    def __post_init__(self):
        if self.exc <= 0 or self.ei <= 0:
            raise ConfigError("exc and ei gains must be positive")
        if self.balance < 0 or self.threshold < 0:
            raise ConfigError("balance and threshold gains must be nonnegative")


def phase_to_spikes(z: np.ndarray, T: float = 0.2, offset: float = 0.0, n_cycles: int = 1) -> SpikeRaster:
    """One spike per cycle at ``offset + phase/(2 pi) * T + k T`` for active units."""
    if T <= 0:
        raise ConfigError("T must be positive")
    z = np.asarray(z, dtype=np.complex128)
    active = np.flatnonzero(z)
    phase = np.mod(np.angle(z[active]), 2 * np.pi)
    base = offset + phase / (2 * np.pi) * T
    ids = np.tile(active, n_cycles)
    times = (base[None, :] + T * np.arange(n_cycles)[:, None]).ravel()
    return SpikeRaster(ids, times, offset + n_cycles * T, T)


def estimate_period(raster: SpikeRaster, T0: float) -> float:
    """Least-squares common period of the spike trains, one spike per cycle.

    Each neuron gets its own intercept; cycle indices come from rounding
    intervals to the initial guess ``T0``.
    """
    num = den = 0.0
    for i in np.unique(raster.ids):
        t = raster.neuron_times(i)
        if t.size < 2:
            continue
        n = np.concatenate([[0], np.cumsum(np.maximum(1, np.round(np.diff(t) / T0)))])
        dn, dt = n - n.mean(), t - t.mean()
        num += float(dn @ dt)
        den += float(dn @ dn)
    return num / den if den > 0 else T0


def spikes_to_phasor(
    raster: SpikeRaster,
    window_start: float,
    window_len: float,
    n: int | None = None,
    freq_estimate: float | None = None,
) -> np.ndarray:
    """Complex state encoded by the spikes inside a window.

    Each spiking neuron maps to the unit phasor of its circular-mean spike
    phase relative to ``window_start``; silent neurons map to 0.
    """
    if window_len <= 0:
        raise ConfigError("decode window must have positive length")
    n = int(raster.ids.max()) + 1 if n is None and len(raster) else (n or 0)
    z = np.zeros(n, dtype=np.complex128)
    win = raster.window(window_start, window_len)
    keep = win.ids < n
    win = SpikeRaster(win.ids[keep], win.times[keep], win.duration, win.T)
    if not len(win):
        return z
    period = 1.0 / freq_estimate if freq_estimate else estimate_period(win, raster.T)
    ph = np.exp(2j * np.pi * (win.times - window_start) / period)
    acc = np.zeros(n, dtype=np.complex128)
    np.add.at(acc, win.ids, ph)
    on = acc != 0
    z[on] = acc[on] / np.abs(acc[on])
    return z


def wrap_delay(phase: np.ndarray, T: float, lo: float = 0.5, hi: float = 1.5) -> np.ndarray:
    """Delay ``phase/(2 pi) * T`` shifted by whole cycles into ``[lo T, hi T]``."""
    d = np.mod(np.asarray(phase, dtype=float), 2 * np.pi) / (2 * np.pi) * T
    d = np.where(d < lo * T - 1e-12, d + T, d)
    return np.where(d > hi * T + 1e-12, d - T, d)


def lif_ifr(params: LifParams, I):
    """Firing rate of a LIF neuron under constant drive ``I``.

    ``I`` is in voltage units (the steady-state potential ``E_l + I/g_l``
    without spiking). Below threshold the rate is zero.
    """
    x = params.E_l + np.asarray(I, dtype=float) / params.g_l
    g = 1.0 / params.tau_m
    out = np.zeros_like(x)
    on = x > params.V_theta
    t_spike = np.log((x[on] - params.V_r) / (x[on] - params.V_theta)) / g + params.tau_ref
    out[on] = 1.0 / t_spike
    return out if out.ndim else float(out)


def lif_linearization(params: LifParams) -> tuple[float, float]:
    """Slope and intercept of the large-drive asymptote of the IFR (no refractoriness)."""
    g = 1.0 / params.tau_m
    span = params.V_theta - params.V_r
    return g / span, -g * (params.V_theta + params.V_r) / (2 * span)


def psc_kernel(t, T: float = 0.2, tau_exc: float | None = None, tau_inh: float | None = None,
               inh_weight: float = 1.0) -> np.ndarray:
    """Net current from one presynaptic spike at ``t = 0``.

    Direct excitation decays with ``tau_exc``. The inhibitory route (a linear
    interneuron behind an excitatory synapse, feeding back through a slow
    inhibitory synapse) is the convolution of the two exponentials, scaled so
    that with ``inh_weight = 1`` both lobes carry the same charge.
    """
    tau_e = 0.5 * T if tau_exc is None else tau_exc
    tau_i = T if tau_inh is None else tau_inh
    t = np.asarray(t, dtype=float)
    tp = np.maximum(t, 0.0)
    exc = np.exp(-tp / tau_e)
    if math.isclose(tau_e, tau_i):
        inh = tp / tau_e * np.exp(-tp / tau_e)
    else:
        inh = tau_e / (tau_i - tau_e) * (np.exp(-tp / tau_i) - np.exp(-tp / tau_e))
    return np.where(t >= 0, exc - inh_weight * inh, 0.0)


def isolated_neurons(params: LifParams, drive, T: float = 0.2) -> SpikingNetwork:
    """Uncoupled excitatory cells, each with a constant input current."""
    drive = np.atleast_1d(np.asarray(drive, dtype=float))
    n = drive.size
    return SpikingNetwork(
        T=T, N=n, exc=params, inh=LifParams.with_tau(0.1 * T), N_inh=1,
        gain=np.zeros((n, n)), delay=np.zeros((n, n)), tau_exc=0.5 * T, tau_inh=T,
        w_ei=0.0, w_ie=np.zeros(n), bias=drive,
    )


def compile_network(
    W: np.ndarray,
    T: float = 0.2,
    theta: float = 0.6,
    gains: Gains | None = None,
    N_inh: int | None = None,
    exc_params: LifParams | None = None,
    inh_params: LifParams | None = None,
    delay_ei: float = 0.0,
    delay_ie: float = 0.0,
) -> SpikingNetwork:
    """Lower a Hermitian TPAM weight matrix onto delay-coupled LIF neurons."""
    W = np.asarray(W, dtype=np.complex128)
    core.check_hermitian(W)
    if np.any(np.diag(W) != 0):
        raise core.SymmetryError("weight matrix must have a zero diagonal")
    if T <= 0:
        raise ConfigError("T must be positive")
    N = W.shape[0]
    gains = gains or Gains()
    N_inh = N_inh or max(1, N // 10)
    exc_params = exc_params or LifParams.with_tau(0.25 * T, 0.6 * T)
    inh_params = inh_params or LifParams.with_tau(0.1 * T, 0.0)
    mag = np.abs(W)
    delay = wrap_delay(np.angle(W) - 2 * np.pi * gains.latency, T)
    delay = np.where(mag > 0, delay, 0.0)
    tau_exc, tau_inh = 0.5 * T, T
    # Interneurons run in their linear regime: each excitatory spike yields
    # m * ei * tau_exc interneuron spikes, so this many units of routed
    # inhibitory charge reach every excitatory cell per unit I-to-E weight.
    m, _ = lif_linearization(inh_params)
    route = m * gains.ei * tau_exc * tau_inh
    target = gains.exc * tau_exc * (gains.balance * mag.mean(axis=1) + gains.threshold * theta)
    return SpikingNetwork(
        T=T, N=N, exc=exc_params, inh=inh_params, N_inh=N_inh,
        gain=gains.exc * mag, delay=delay,
        tau_exc=tau_exc, tau_inh=tau_inh,
        w_ei=gains.ei, w_ie=target / route, delay_ei=delay_ei, delay_ie=delay_ie,
        theta=theta, cue_width=T / 20, meta={"gains": gains},
    )


@dataclass
class Traces:
    """Per-step recordings for a subset of excitatory neurons."""

    ids: np.ndarray
    t: np.ndarray
    V: np.ndarray
    I_exc: np.ndarray
    I_inh: np.ndarray
    I_ext: np.ndarray

    def to_csv(self, path, comment: str | None = None) -> None:
        cols = ["time_s"]
        blocks = [self.t[:, None]]
        for name, arr in (("V", self.V), ("I_exc", self.I_exc), ("I_inh", self.I_inh), ("I_ext", self.I_ext)):
            cols += [f"{name}_{i}" for i in self.ids]
            blocks.append(arr)
        note = "".join(f"# {ln}\n" for ln in comment.splitlines()) if comment else ""
        np.savetxt(path, np.hstack(blocks), delimiter=",", header=note + ",".join(cols), comments="", fmt="%.9g")


def _cue_amplitude(params: LifParams, width: float) -> float:
    # four times the drive that just reaches threshold at the end of the pulse
    need = (params.V_theta - params.E_l) * params.g_l / (1.0 - math.exp(-width / params.tau_m))
    return 4.0 * need


def simulate(
    net: SpikingNetwork,
    initial_raster: SpikeRaster | None,
    duration: float,
    dt: float | None = None,
    record=None,
) -> tuple[SpikeRaster, Traces | None]:
    """Integrate the network with exponential Euler on a fixed grid.

    Cue events become rectangular current pulses of width ``T/20``, strong
    enough to force one spike. Spikes are stamped at the end of the step in
    which the membrane crosses threshold. Readout cells, if attached, appear
    in the raster with ids ``N .. N + D - 1``.
    """
    T = net.T
    dt = T / 1000 if dt is None else dt
    if dt > T / 500 * (1 + 1e-9):
        raise ConfigError(f"dt={dt:g} is too coarse; need dt <= T/500 = {T / 500:g}")
    if duration <= 0:
        raise ConfigError("duration must be positive")
    n_steps = int(round(duration / dt))
    N, Ni = net.N, net.N_inh
    ex, ih = net.exc, net.inh

    d_steps = np.rint(net.delay / dt).astype(np.int64)
    L = int(d_steps.max(initial=0)) + 2
    buf = np.zeros((L, N))
    rows = np.arange(N)
    pre_post = [np.flatnonzero(net.gain[:, j]) for j in range(N)]
    d_ei, d_ie = int(round(net.delay_ei / dt)), int(round(net.delay_ie / dt))
    Lr = max(d_ei, d_ie) + 2
    ring_ei, ring_ie = np.zeros(Lr), np.zeros(Lr)

    D = net.n_readout
    if D:
        ro = net.readout
        rd_steps = np.rint(net.readout_delay / dt).astype(np.int64)
        Lo = int(rd_steps.max(initial=0)) + 2
        buf_o = np.zeros((Lo, D))
        ro_post = [np.flatnonzero(net.readout_gain[:, j]) for j in range(N)]
        Vo = np.full(D, ro.E_l)
        s_out = np.zeros(D)
        dec_m_o = math.exp(-dt / ro.tau_m)
        ref_until_o = np.full(D, -1)
        ref_steps_o = int(math.ceil(ro.tau_ref / dt - 1e-9))

    amp = _cue_amplitude(ex, net.cue_width)
    w_steps = max(1, int(round(net.cue_width / dt)))
    cue_on: dict[int, list[int]] = {}
    if initial_raster is not None and len(initial_raster):
        if initial_raster.ids.max() >= N:
            raise ConfigError("cue raster refers to neurons outside the network")
        for i, t in zip(initial_raster.ids, initial_raster.times):
            k = int(round(t / dt))
            for kk in range(k, k + w_steps):
                cue_on.setdefault(kk, []).append(int(i))

    dec_m_e, dec_m_i = math.exp(-dt / ex.tau_m), math.exp(-dt / ih.tau_m)
    dec_se, dec_si = math.exp(-dt / net.tau_exc), math.exp(-dt / net.tau_inh)

    V = np.full(N, ex.E_l)
    Vi = np.full(Ni, ih.E_l)
    s_exc = np.zeros(N)
    s_ei = s_ie = 0.0
    ref_until = np.full(N, -1)
    ref_until_i = np.full(Ni, -1)
    ref_steps = int(math.ceil(ex.tau_ref / dt - 1e-9))
    ref_steps_i = int(math.ceil(ih.tau_ref / dt - 1e-9))

    rec = None if record is None else np.asarray(record, dtype=np.int64)
    if rec is not None:
        tr = {k: np.zeros((n_steps, rec.size)) for k in ("V", "I_exc", "I_inh", "I_ext")}
    spk_ids: list[np.ndarray] = []
    spk_t: list[np.ndarray] = []
    I_ext = np.zeros(N)

    for n in range(n_steps):
        slot = n % L
        s_exc *= dec_se
        s_exc += buf[slot]
        buf[slot] = 0.0
        r = n % Lr
        s_ei = s_ei * dec_se + ring_ei[r]
        s_ie = s_ie * dec_si + ring_ie[r]
        ring_ei[r] = ring_ie[r] = 0.0

        cued = cue_on.get(n)
        if cued:
            I_ext[:] = 0.0
            I_ext[cued] = amp
        elif n - 1 in cue_on:
            I_ext[:] = 0.0

        Vinf = ex.E_l + (s_exc - net.w_ie * s_ie + I_ext + net.bias) / ex.g_l
        V = Vinf + (V - Vinf) * dec_m_e
        V[ref_until > n] = ex.V_r
        fired = np.flatnonzero(V >= ex.V_theta)

        Vinf_i = ih.E_l + s_ei / ih.g_l
        Vi = Vinf_i + (Vi - Vinf_i) * dec_m_i
        Vi[ref_until_i > n] = ih.V_r
        fired_i = np.flatnonzero(Vi >= ih.V_theta)

        if rec is not None:
            tr["V"][n] = V[rec]
            tr["I_exc"][n] = s_exc[rec]
            tr["I_inh"][n] = net.w_ie[rec] * s_ie
            tr["I_ext"][n] = I_ext[rec]

        if D:
            so = n % Lo
            s_out *= dec_se
            s_out += buf_o[so]
            buf_o[so] = 0.0
            Vinf_o = ro.E_l + (s_out + net.readout_bias) / ro.g_l
            Vo = Vinf_o + (Vo - Vinf_o) * dec_m_o
            Vo[ref_until_o > n] = ro.V_r
            fired_o = np.flatnonzero(Vo >= ro.V_theta)
            if fired_o.size:
                Vo[fired_o] = ro.V_r
                ref_until_o[fired_o] = n + 1 + ref_steps_o
                spk_ids.append(N + fired_o)
                spk_t.append(np.full(fired_o.size, (n + 1) * dt))

        if fired.size:
            V[fired] = ex.V_r
            ref_until[fired] = n + 1 + ref_steps
            spk_ids.append(fired)
            spk_t.append(np.full(fired.size, (n + 1) * dt))
            for j in fired:
                post = pre_post[j]
                buf[(n + 1 + d_steps[post, j]) % L, post] += net.gain[post, j]
            ring_ei[(n + 1 + d_ei) % Lr] += net.w_ei * fired.size
            if D:
                for j in fired:
                    post = ro_post[j]
                    buf_o[(n + 1 + rd_steps[post, j]) % Lo, post] += net.readout_gain[post, j]
        if fired_i.size:
            Vi[fired_i] = ih.V_r
            ref_until_i[fired_i] = n + 1 + ref_steps_i
            ring_ie[(n + 1 + d_ie) % Lr] += fired_i.size / Ni

        if n % 1000 == 0 and not (np.all(np.isfinite(V)) and math.isfinite(s_ie)):
            raise SimulationError(f"non-finite state at t={n * dt:.4f}s")

    ids = np.concatenate(spk_ids) if spk_ids else np.zeros(0, np.int64)
    times = np.concatenate(spk_t) if spk_t else np.zeros(0)
    raster = SpikeRaster(ids, times, n_steps * dt, T)
    traces = None
    if rec is not None:
        traces = Traces(rec, (np.arange(n_steps) + 1) * dt, tr["V"], tr["I_exc"], tr["I_inh"], tr["I_ext"])
    return raster, traces


def attach_readout(net: SpikingNetwork, W_out: np.ndarray, gain: float = 1.0, bias: float = 0.0,
                   params: LifParams | None = None) -> SpikingNetwork:
    """Add a linear readout population computing ``W_out z``.

    Each readout cell integrates delay synapses from the excitatory cells
    (delays from the weight phases, as in the recurrent network) and fires
    without refractoriness, so the first harmonic of its rate carries the
    complex readout value.
    """
    W_out = np.asarray(W_out, dtype=np.complex128)
    if W_out.ndim != 2 or W_out.shape[1] != net.N:
        raise core.DimensionError(f"readout weights must be D x {net.N}, got {W_out.shape}")
    mag = np.abs(W_out)
    delay = np.where(mag > 0, wrap_delay(np.angle(W_out), net.T), 0.0)
    return replace(
        net,
        readout_gain=gain * mag,
        readout_delay=delay,
        readout=params or LifParams.with_tau(0.1 * net.T, 0.0),
        readout_bias=bias,
    )


def readout_response(raster: SpikeRaster, N: int, D: int, window_start: float, window_len: float,
                     period: float | None = None) -> np.ndarray:
    """First Fourier coefficient of each readout cell's spike train per second.

    The period defaults to the one estimated from the excitatory spikes.
    """
    win = raster.window(window_start, window_len)
    if period is None:
        exc = win.ids < N
        period = estimate_period(SpikeRaster(win.ids[exc], win.times[exc], win.duration, win.T), raster.T)
    out = np.zeros(D, dtype=np.complex128)
    sel = (win.ids >= N) & (win.ids < N + D)
    np.add.at(out, win.ids[sel] - N, np.exp(2j * np.pi * (win.times[sel] - window_start) / period))
    return out / window_len


SPIKING_KEY = ("N", "K", "theta", "M")
SPIKING_METRICS = {"similarity": "similarity", "ideal_similarity": "ideal", "active": "active", "period": "period"}
SPIKING_FIELDS = ("N", "K", "theta", "M", "trial", "similarity", "ideal_similarity", "active", "period", "spikes")


@dataclass(frozen=True)
class SpikingCapacityConfig:
    """Settings for a spiking capacity sweep (one stored-pattern cue per trial)."""

    N: int = 500
    K: int = 25
    Ms: tuple = (50, 100, 200, 250, 300, 400)
    T: float = 0.2
    theta: float = 0.6
    duration: float = 5.0
    decode_cycles: int = 5
    dt: float | None = None
    trials: int = 4
    seed: int = 0
    N_inh: int | None = None
    gains: Gains = Gains()

    def validate(self) -> None:
        if self.decode_cycles <= 0:
            raise ConfigError("decode window must span at least one cycle")
        if self.decode_cycles * self.T > self.duration:
            raise ConfigError("decode window is longer than the simulation")
        if not 0 < self.K <= self.N:
            raise ConfigError("need 0 < K <= N")


def random_sparse_phasors(N: int, K: int, M: int, rng: np.random.Generator) -> np.ndarray:
    """M x N patterns with exactly K active unit phasors of uniform phase."""
    S = np.zeros((M, N), dtype=np.complex128)
    for m in range(M):
        idx = rng.choice(N, K, replace=False)
        S[m, idx] = np.exp(2j * np.pi * rng.random(K))
    return S


def spiking_trial(cfg: SpikingCapacityConfig, M: int, trial: int) -> dict:
    """Store M patterns, cue pattern 0 with its spike raster, decode the end."""
    from .rng import stream

    S = random_sparse_phasors(cfg.N, cfg.K, M, stream(cfg.seed, "spiking", trial, M))
    W = core.learn_conjugate_outer(S)
    net = compile_network(W, cfg.T, cfg.theta, cfg.gains, N_inh=cfg.N_inh)
    cue = phase_to_spikes(S[0], cfg.T, offset=0.05 * cfg.T)
    raster, _ = simulate(net, cue, cfg.duration, cfg.dt)
    span = cfg.decode_cycles * cfg.T
    z = spikes_to_phasor(raster, cfg.duration - span, span, n=cfg.N)
    ideal = core.recall(W, S[0], core.ThresholdPolicy.constant(cfg.theta * cfg.K), max_iters=100).final
    win = raster.window(cfg.duration - span, span)
    return {
        "N": cfg.N, "K": cfg.K, "M": M, "trial": trial, "theta": cfg.theta,
        "similarity": core.similarity(z, S[0]),
        "ideal_similarity": core.similarity(ideal, S[0]),
        "active": int(np.count_nonzero(z)),
        "period": estimate_period(win, cfg.T) if len(win) else float("nan"),
        "spikes": len(raster),
    }


def run_spiking_capacity(cfg: SpikingCapacityConfig, workers: int = 1):
    """Similarity of the spiking network and of the matching fixed-threshold
    TPAM for each load in ``cfg.Ms``."""
    from concurrent.futures import ThreadPoolExecutor

    from .capacity import CapacityReport

    cfg.validate()
    jobs = [(M, t) for M in cfg.Ms for t in range(cfg.trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(lambda a: spiking_trial(cfg, *a), jobs))
    else:
        rows = [spiking_trial(cfg, *a) for a in jobs]
    return CapacityReport(rows, key=SPIKING_KEY, metrics=SPIKING_METRICS, fields=SPIKING_FIELDS)
