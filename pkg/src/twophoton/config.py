"""Strict JSON run configuration.

Every section is optional except ``schema_version``; missing keys take the
library defaults and the filled-in document is available through
:meth:`RunConfig.effective`.  Unknown keys, wrong types and out-of-range
values raise :class:`ConfigurationError` naming the offending key path.

A bath ``temperature`` of ``null`` switches the phonon coupling off, which
is also how sweep and spectrum temperature lists spell a phonon-free run.
"""
import json
from dataclasses import asdict, dataclass, fields, replace

from .bath import NO_PHONONS, BathSpec, SystemParams
from .errors import ConfigurationError
from .scan import SweepConfig

SCHEMA_VERSION = 1

_NUMBER = (int, float)


def _field_defaults(cls, skip=()):
    return {f.name: f.default for f in fields(cls) if f.name not in skip}


_EVOLVE = {"t_max": 400.0, "dt": 0.02, "neg_tol": 1e-6, "close_tail": True}
_SPECTRUM = {"temperatures": [None, 5.0, 10.0, 20.0], "omega_min": -8.0,
             "omega_max": 8.0, "omega_points": 600, "t_max": 400.0, "dt": 0.05,
             "method": "trapezoid", "neg_tol": 1e-6}
_RESONANCE = {"interval": [-20.0, 20.0]}
_SWEEP = dict(_field_defaults(SweepConfig, skip=("system", "bath", "generator", "n_max")),
              temperatures=[None])

_TYPES = {
    "system": {name: _NUMBER for name in _field_defaults(SystemParams)},
    "bath": {"alpha_p": _NUMBER, "omega_b": _NUMBER, "temperature": _NUMBER + (type(None),),
             "energy_scale": _NUMBER, "omega_cutoff_factor": _NUMBER,
             "omega_points": int, "tau_max": _NUMBER + (type(None),), "tau_step": _NUMBER},
    "evolve": {"t_max": _NUMBER, "dt": _NUMBER, "neg_tol": _NUMBER, "close_tail": bool},
    "sweep": {"temperatures": list, "delta2_min": _NUMBER, "delta2_max": _NUMBER,
              "delta2_points": int, "exclude_below": _NUMBER,
              "band_generator": (str, type(None)), "method": str, "t_max": _NUMBER,
              "dt": _NUMBER, "neg_tol": _NUMBER},
    "spectrum": {"temperatures": list, "omega_min": _NUMBER, "omega_max": _NUMBER,
                 "omega_points": int, "t_max": _NUMBER, "dt": _NUMBER, "method": str,
                 "neg_tol": _NUMBER},
    "resonance": {"interval": list},
}
_TOP = {"schema_version", "generator", "n_max", "output_dir"} | set(_TYPES)


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    bath: BathSpec
    phonons: bool
    generator: str
    n_max: int
    evolve: dict
    sweep: SweepConfig
    spectrum: dict
    resonance: dict
    output_dir: str

    @property
    def active_bath(self):
        return self.bath if self.phonons else NO_PHONONS

    def with_generator(self, generator):
        if generator is None:
            return self
        _check_choice(generator, ("full", "approx"), "generator")
        return replace(self, generator=generator,
                       sweep=replace(self.sweep, generator=generator))

    def effective(self):
        """Fully populated document equivalent to this configuration."""
        bath = asdict(self.bath)
        if not self.phonons:
            bath["temperature"] = None
        sweep = asdict(self.sweep)
        for k in ("system", "bath", "generator", "n_max"):
            sweep.pop(k)
        sweep["temperatures"] = list(self.sweep.temperatures)
        return {"schema_version": SCHEMA_VERSION, "generator": self.generator,
                "n_max": self.n_max, "output_dir": self.output_dir,
                "system": asdict(self.system), "bath": bath,
                "evolve": dict(self.evolve), "sweep": sweep,
                "spectrum": dict(self.spectrum), "resonance": dict(self.resonance)}


def _check_choice(value, choices, path):
    if value not in choices:
        raise ConfigurationError(f"{path}: expected one of {list(choices)}, got {value!r}")


def _check_section(doc, name):
    section = doc.get(name, {})
    if not isinstance(section, dict):
        raise ConfigurationError(f"{name}: expected an object")
    types = _TYPES[name]
    for key, value in section.items():
        path = f"{name}.{key}"
        if key not in types:
            raise ConfigurationError(f"{path}: unknown key")
        allowed = types[key]
        # bool is an int subclass; never accept it for numbers
        if isinstance(value, bool) and allowed is not bool:
            raise ConfigurationError(f"{path}: expected a number, got {value!r}")
        if not isinstance(value, allowed):
            raise ConfigurationError(f"{path}: wrong type {type(value).__name__}")
    return section


def _temperatures(values, path):
    out = []
    for k, t in enumerate(values):
        if t is not None and (isinstance(t, bool) or not isinstance(t, _NUMBER) or t < 0):
            raise ConfigurationError(f"{path}[{k}]: temperature must be null or >= 0 K")
        out.append(None if t is None else float(t))
    if not out:
        raise ConfigurationError(f"{path}: at least one temperature is required")
    return tuple(out)


def _build(cls, kwargs, path):
    try:
        return cls(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def config_from_dict(doc):
    if not isinstance(doc, dict):
        raise ConfigurationError("config: top level must be an object")
    for key in doc:
        if key not in _TOP:
            raise ConfigurationError(f"{key}: unknown key")
    if "schema_version" not in doc:
        raise ConfigurationError("schema_version: required field is missing")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigurationError(
            f"schema_version: unsupported version {doc['schema_version']!r} "
            f"(this build reads {SCHEMA_VERSION})")
    generator = doc.get("generator", "full")
    _check_choice(generator, ("full", "approx"), "generator")
    n_max = doc.get("n_max", 3)
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 2:
        raise ConfigurationError(f"n_max: expected an integer >= 2, got {n_max!r}")
    output_dir = doc.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigurationError("output_dir: expected a string")

    sections = {name: _check_section(doc, name) for name in _TYPES}
    system = _build(SystemParams, {k: float(v) for k, v in sections["system"].items()},
                    "system")
    bath_doc = dict(sections["bath"])
    phonons = True
    if "temperature" in bath_doc and bath_doc["temperature"] is None:
        phonons = False
        bath_doc.pop("temperature")
    bath = _build(BathSpec, bath_doc, "bath")

    evolve = {**_EVOLVE, **sections["evolve"]}
    _positive(evolve, ("t_max", "dt", "neg_tol"), "evolve")

    sweep_doc = {**_SWEEP, **sections["sweep"]}
    sweep_doc["temperatures"] = _temperatures(sweep_doc["temperatures"], "sweep.temperatures")
    _positive(sweep_doc, ("t_max", "dt", "neg_tol", "delta2_points"), "sweep")
    sweep = _build(SweepConfig, dict(sweep_doc, system=system, bath=bath,
                                     generator=generator, n_max=n_max), "sweep")

    spectrum = {**_SPECTRUM, **sections["spectrum"]}
    spectrum["temperatures"] = list(_temperatures(spectrum["temperatures"],
                                                  "spectrum.temperatures"))
    _positive(spectrum, ("t_max", "dt", "neg_tol", "omega_points"), "spectrum")
    _check_choice(spectrum["method"], ("trapezoid", "resolvent"), "spectrum.method")
    if spectrum["omega_max"] <= spectrum["omega_min"]:
        raise ConfigurationError("spectrum.omega_max: must exceed omega_min")

    resonance = {**_RESONANCE, **sections["resonance"]}
    iv = resonance["interval"]
    if (len(iv) != 2 or not all(isinstance(x, _NUMBER) and not isinstance(x, bool) for x in iv)
            or iv[1] <= iv[0]):
        raise ConfigurationError("resonance.interval: expected [low, high] with low < high")
    return RunConfig(system, bath, phonons, generator, n_max, evolve, sweep,
                     spectrum, resonance, output_dir)


def _positive(section, keys, path):
    for k in keys:
        if not section[k] > 0:
            raise ConfigurationError(f"{path}.{k}: must be > 0, got {section[k]!r}")


def parse_config(text):
    """Parse and validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config: invalid JSON ({exc})") from None
    return config_from_dict(doc)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
