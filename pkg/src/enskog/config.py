"""Experiment configuration: INI parsing, validation, serialization.

The format is flat key = value lines under four section headers ([run],
[kernel], [initial], [experiment]), chosen so configs diff cleanly in
experiment logs.  Parsing validates every field against the kernel
parameter domains and reports ALL violations at once, naming the
constraint each value broke.  Environment variables with the ENSKOG_
prefix override file values (ENSKOG_KERNEL_GAMMA=1.0 sets [kernel]
gamma); command-line flags override both.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from .bounds import ENVELOPE_REGIMES
from .kernels import (
    TRUNCATION_MODES,
    VELOCITY_FORMS,
    AngularMeasure,
    KernelSuite,
    SpatialKernel,
    Truncation,
    VelocityKernel,
)
from .particles import INITIAL_LAWS, InitialLaw, SimConfig

ENV_PREFIX = "ENSKOG_"

EXPERIMENT_KINDS = ("run", "sweep", "residual", "povzner", "chaos", "envelope")
PSI_KINDS = ("bump", "component", "speed2")

_SECTIONS = ("run", "kernel", "initial", "experiment")

_MISSING = object()


class ConfigError(Exception):
    """Raised with the complete list of config violations, not just one."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"invalid configuration:\n{lines}")


@dataclass(frozen=True)
class RunConfig:
    """Validated experiment description, ready to expand into SimConfigs."""

    kind: str
    n: int
    d: int
    t_end: float
    seeds: tuple
    checkpoints: tuple | None
    kernels: KernelSuite
    initial: InitialLaw
    out: str = "out"
    jobs: int = 1
    drift_tol: float = 1e-8
    ns: tuple = ()
    moment_orders: tuple = (2.0,)
    psi_kind: str = "bump"
    psi_radius: float = 4.0
    psi_clamp: float = 64.0
    psi_width: float = 16.0
    envelope_regime: str = ""
    povzner_samples: int = 10_000

    def sim_config(self, n: int | None = None, seed: int | None = None) -> SimConfig:
        return SimConfig(
            n=self.n if n is None else int(n),
            d=self.d,
            t_end=self.t_end,
            seed=self.seeds[0] if seed is None else int(seed),
            checkpoints=self.checkpoints,
            kernels=self.kernels,
            initial=self.initial,
        )


def apply_env_overrides(cp: configparser.ConfigParser, env) -> None:
    """Fold ENSKOG_SECTION_KEY environment entries into the parsed file."""
    for name, value in sorted(env.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX) :]
        section, _, key = rest.partition("_")
        section = section.lower()
        key = key.lower()
        if section not in _SECTIONS or not key:
            continue
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value)


class _Reader:
    """Typed section/key access that accumulates violation messages."""

    def __init__(self, cp: configparser.ConfigParser):
        self.cp = cp
        self.errors: list[str] = []

    def fail(self, message: str) -> None:
        self.errors.append(message)

    def raw(self, section, key, default=_MISSING):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key)
        return default

    def value(self, section, key, conv, default=_MISSING, check=None, domain=""):
        raw = self.raw(section, key)
        if raw is _MISSING:
            if default is _MISSING:
                self.fail(f"missing required key {section}.{key}")
                return None
            return default
        try:
            val = conv(raw)
        except (TypeError, ValueError):
            self.fail(f"{section}.{key} = {raw!r} is not a valid {conv.__name__}")
            return None
        if check is not None and not check(val):
            self.fail(f"{section}.{key} = {raw} violates {domain}")
            return None
        return val

    def floats(self, section, key, default=_MISSING):
        raw = self.raw(section, key)
        if raw is _MISSING:
            if default is _MISSING:
                self.fail(f"missing required key {section}.{key}")
                return None
            return default
        try:
            return tuple(float(tok) for tok in raw.split())
        except ValueError:
            self.fail(f"{section}.{key} = {raw!r} is not a list of numbers")
            return None

    def ints(self, section, key, default=_MISSING):
        raw = self.raw(section, key)
        if raw is _MISSING:
            if default is _MISSING:
                self.fail(f"missing required key {section}.{key}")
                return None
            return default
        try:
            return tuple(int(tok) for tok in raw.split())
        except ValueError:
            self.fail(f"{section}.{key} = {raw!r} is not a list of integers")
            return None


def parse_config(text: str, env=None) -> RunConfig:
    """Parse and validate a config; raise ConfigError listing every problem."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"unparseable config file: {exc}"]) from exc
    if env is not None:
        apply_env_overrides(cp, env)
    r = _Reader(cp)

    n = r.value("run", "n", int, check=lambda x: x >= 1, domain="n >= 1")
    d = r.value("run", "d", int, default=3, check=lambda x: x >= 3, domain="d >= 3")
    t_end = r.value("run", "t_end", float, check=lambda x: x > 0, domain="t_end > 0")
    seeds = r.ints("run", "seed")
    if seeds is not None and len(seeds) == 0:
        r.fail("run.seed must list at least one seed")
        seeds = None
    checkpoints = r.floats("run", "checkpoints", default=None)
    jobs = r.value("run", "jobs", int, default=1,
                   check=lambda x: x >= 1, domain="jobs >= 1")
    drift_tol = r.value("run", "drift_tol", float, default=1e-8,
                        check=lambda x: x > 0, domain="drift_tol > 0")
    out = r.raw("run", "out", default="out")

    form = r.value("kernel", "form", str, default="power-law",
                   check=lambda x: x in VELOCITY_FORMS,
                   domain=f"form in {VELOCITY_FORMS}")
    gamma = r.value("kernel", "gamma", float, default=0.0,
                    check=lambda x: -1.0 < x <= 2.0, domain="gamma in (-1, 2]")
    c_sigma = r.value("kernel", "c_sigma", float, default=1.0,
                      check=lambda x: x >= 1.0, domain="c_sigma >= 1")
    nu = r.value("kernel", "nu", float, default=0.5,
                 check=lambda x: 0.0 < x < 2.0, domain="nu in (0, 2)")
    theta_min = r.value("kernel", "theta_min", float, default=0.1,
                        check=lambda x: 0.0 < x < math.pi,
                        domain="theta_min in (0, pi)")
    rho = r.value("kernel", "rho", float, default=1.0,
                  check=lambda x: x > 0, domain="rho > 0")
    trunc_mode = r.value("kernel", "truncation", str, default="pairwise-clip",
                         check=lambda x: x in TRUNCATION_MODES,
                         domain=f"truncation in {TRUNCATION_MODES}")
    m = r.value("kernel", "m", float, default=10.0,
                check=lambda x: x >= 1.0, domain="m >= 1")

    law = r.value("initial", "law", str, default="gaussian",
                  check=lambda x: x in INITIAL_LAWS,
                  domain=f"law in {INITIAL_LAWS}")
    temperature = r.value("initial", "temperature", float, default=1.0,
                          check=lambda x: x > 0, domain="temperature > 0")
    position_scale = r.value("initial", "position_scale", float, default=1.0,
                             check=lambda x: x > 0, domain="position_scale > 0")
    radius = r.value("initial", "radius", float, default=1.0,
                     check=lambda x: x > 0, domain="radius > 0")
    tail_index = r.value("initial", "tail_index", float, default=1.8,
                         check=lambda x: x > 1.0, domain="tail_index > 1")

    kind = r.value("experiment", "kind", str, default="run",
                   check=lambda x: x in EXPERIMENT_KINDS,
                   domain=f"kind in {EXPERIMENT_KINDS}")
    ns = r.ints("experiment", "ns", default=())
    moment_orders = r.floats("experiment", "ps", default=(2.0,))
    psi_kind = r.value("experiment", "psi", str, default="bump",
                       check=lambda x: x in PSI_KINDS,
                       domain=f"psi in {PSI_KINDS}")
    psi_radius = r.value("experiment", "psi_radius", float, default=4.0,
                         check=lambda x: x > 0, domain="psi_radius > 0")
    psi_clamp = r.value("experiment", "psi_clamp", float, default=64.0,
                        check=lambda x: x > 0, domain="psi_clamp > 0")
    psi_width = r.value("experiment", "psi_width", float, default=16.0,
                        check=lambda x: x > 0, domain="psi_width > 0")
    envelope_regime = r.raw("experiment", "regime", default="")
    povzner_samples = r.value("experiment", "samples", int, default=10_000,
                              check=lambda x: x >= 1, domain="samples >= 1")

    if checkpoints is not None and t_end is not None:
        if any(b < a for a, b in zip(checkpoints, checkpoints[1:])):
            r.fail("run.checkpoints must be nondecreasing")
        elif checkpoints and (checkpoints[0] < 0.0 or checkpoints[-1] > t_end):
            r.fail("run.checkpoints must lie inside [0, t_end]")
    if form == "maxwellian" and gamma not in (0.0, None):
        r.fail("kernel.gamma must be omitted or 0 for the maxwellian form")
    if moment_orders is not None and any(p < 0 for p in moment_orders):
        r.fail("experiment.ps entries violate p >= 0")
    if kind == "envelope" and not envelope_regime:
        r.fail("experiment.regime is required for envelope experiments")
    if envelope_regime and envelope_regime not in ENVELOPE_REGIMES:
        r.fail(
            f"experiment.regime = {envelope_regime} violates "
            f"regime in {ENVELOPE_REGIMES}"
        )

    if r.errors:
        raise ConfigError(r.errors)

    kernels = KernelSuite(
        velocity=VelocityKernel(form=form, gamma=gamma, c_sigma=c_sigma),
        angular=AngularMeasure("power-law", nu=nu, theta_min=theta_min),
        spatial=SpatialKernel(rho=rho),
        truncation=Truncation(trunc_mode, m=m),
    )
    initial = InitialLaw(
        kind=law,
        temperature=temperature,
        position_scale=position_scale,
        radius=radius,
        tail_index=tail_index,
    )
    return RunConfig(
        kind=kind, n=n, d=d, t_end=t_end, seeds=seeds, checkpoints=checkpoints,
        kernels=kernels, initial=initial, out=out, jobs=jobs, drift_tol=drift_tol,
        ns=ns, moment_orders=moment_orders, psi_kind=psi_kind,
        psi_radius=psi_radius, psi_clamp=psi_clamp, psi_width=psi_width,
        envelope_regime=envelope_regime, povzner_samples=povzner_samples,
    )


def serialize_config(cfg: RunConfig) -> str:
    """Render a RunConfig back to the INI format (parse round-trips)."""
    vel = cfg.kernels.velocity
    ang = cfg.kernels.angular
    lines = [
        "[run]",
        f"n = {cfg.n}",
        f"d = {cfg.d}",
        f"t_end = {cfg.t_end!r}",
        f"seed = {' '.join(str(s) for s in cfg.seeds)}",
    ]
    if cfg.checkpoints is not None:
        lines.append(f"checkpoints = {' '.join(repr(c) for c in cfg.checkpoints)}")
    lines += [
        f"jobs = {cfg.jobs}",
        f"drift_tol = {cfg.drift_tol!r}",
        f"out = {cfg.out}",
        "",
        "[kernel]",
        f"form = {vel.form}",
        f"gamma = {vel.gamma!r}",
        f"c_sigma = {vel.c_sigma!r}",
        f"nu = {ang.nu!r}",
        f"theta_min = {ang.theta_min!r}",
        f"rho = {cfg.kernels.spatial.rho!r}",
        f"truncation = {cfg.kernels.truncation.mode}",
        f"m = {cfg.kernels.truncation.m!r}",
        "",
        "[initial]",
        f"law = {cfg.initial.kind}",
        f"temperature = {cfg.initial.temperature!r}",
        f"position_scale = {cfg.initial.position_scale!r}",
        f"radius = {cfg.initial.radius!r}",
        f"tail_index = {cfg.initial.tail_index!r}",
        "",
        "[experiment]",
        f"kind = {cfg.kind}",
    ]
    if cfg.ns:
        lines.append(f"ns = {' '.join(str(x) for x in cfg.ns)}")
    lines += [
        f"ps = {' '.join(repr(p) for p in cfg.moment_orders)}",
        f"psi = {cfg.psi_kind}",
        f"psi_radius = {cfg.psi_radius!r}",
        f"psi_clamp = {cfg.psi_clamp!r}",
        f"psi_width = {cfg.psi_width!r}",
    ]
    if cfg.envelope_regime:
        lines.append(f"regime = {cfg.envelope_regime}")
    lines.append(f"samples = {cfg.povzner_samples}")
    return "\n".join(lines) + "\n"
