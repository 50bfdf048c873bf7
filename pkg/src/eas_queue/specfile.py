"""Model specification files.

A spec is an INI document::

    [arrival]
    domain = discrete          ; or continuous
    kind = geometric           ; finite | geometric | deterministic
    p = 0.2                    ; continuous kinds: exponential | deterministic | erlang

    [batch]
    pmf = 1:0.4, 2:0.3, 3:0.3

    [service]
    mu = 0.5                   ; per-slot probability, or the rate in continuous time

    [capacity]
    kind = finite              ; finite | geometric
    pmf = 1:0.4, 2:0.6

    [output]                   ; optional
    n_max = 30

    [simulation]               ; optional
    slots = 10000000
    seed = 1

Arrival parameters by kind: ``finite`` takes ``pmf``, ``geometric`` takes
``p``, discrete ``deterministic`` takes an integer ``d``, continuous
``deterministic`` a real ``d``, ``exponential`` takes ``rate`` and
``erlang`` takes ``k`` and ``rate``. Capacity ``geometric`` takes ``p``.
Unknown sections or keys are rejected so typos do not pass silently.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from typing import Optional, Union

from .ctlimit import CtModel, Deterministic, Erlang, Exponential
from .errors import InvalidPmf, ModelSpecError, Unstable
from .pgf import FinitePmf, Geometric, NegBinomial, QueueModel

AnyModel = Union[QueueModel, CtModel]

_ALLOWED = {
    "arrival": {"domain", "kind", "pmf", "p", "d", "rate", "k"},
    "batch": {"pmf"},
    "service": {"mu"},
    "capacity": {"kind", "pmf", "p"},
    "output": {"n_max"},
    "simulation": {"slots", "seed"},
}
_REQUIRED = ("arrival", "batch", "service", "capacity")


@dataclass(frozen=True)
class ModelSpec:
    model: AnyModel
    n_max: Optional[int] = None
    slots: Optional[int] = None
    seed: Optional[int] = None

    @property
    def continuous(self) -> bool:
        return isinstance(self.model, CtModel)


def _float(sec, key: str) -> float:
    field = f"{sec.name}.{key}"
    if key not in sec:
        raise ModelSpecError("missing key", field)
    try:
        return float(sec[key])
    except ValueError:
        raise ModelSpecError(f"{sec[key]!r} is not a number", field) from None


def _int(sec, key: str) -> int:
    field = f"{sec.name}.{key}"
    if key not in sec:
        raise ModelSpecError("missing key", field)
    try:
        return int(sec[key])
    except ValueError:
        raise ModelSpecError(f"{sec[key]!r} is not an integer", field) from None


def parse_pmf(text: str, field: str) -> FinitePmf:
    """``"1:0.4, 2:0.6"`` to a :class:`FinitePmf`."""
    points, masses = [], []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            k, v = item.split(":")
            points.append(int(k))
            masses.append(float(v))
        except ValueError:
            raise ModelSpecError(f"cannot read {item!r} as size:mass", field) from None
    try:
        return FinitePmf(tuple(points), tuple(masses))
    except InvalidPmf as exc:
        raise ModelSpecError(str(exc), field) from None


def _checked(field: str, build):
    try:
        return build()
    except Unstable:
        raise
    except (InvalidPmf, ValueError) as exc:
        raise ModelSpecError(str(exc), field) from None


def _arrival(sec):
    domain = sec.get("domain", "discrete").strip()
    kind = sec.get("kind", "").strip()
    if domain == "discrete":
        if kind == "finite":
            if "pmf" not in sec:
                raise ModelSpecError("missing key", "arrival.pmf")
            return parse_pmf(sec["pmf"], "arrival.pmf")
        if kind == "geometric":
            p = _float(sec, "p")
            return _checked("arrival.p", lambda: Geometric(p))
        if kind == "deterministic":
            d = _int(sec, "d")
            return _checked("arrival.d", lambda: FinitePmf((d,), (1.0,)))
        raise ModelSpecError(f"{kind!r} is not a discrete kind", "arrival.kind")
    if domain == "continuous":
        if kind == "exponential":
            rate = _float(sec, "rate")
            return _checked("arrival.rate", lambda: Exponential(rate))
        if kind == "deterministic":
            d = _float(sec, "d")
            return _checked("arrival.d", lambda: Deterministic(d))
        if kind == "erlang":
            k, rate = _int(sec, "k"), _float(sec, "rate")
            return _checked("arrival.k", lambda: Erlang(k, rate))
        raise ModelSpecError(f"{kind!r} is not a continuous kind", "arrival.kind")
    raise ModelSpecError(f"{domain!r} must be discrete or continuous", "arrival.domain")


def _capacity(sec):
    kind = sec.get("kind", "").strip()
    if kind == "finite":
        if "pmf" not in sec:
            raise ModelSpecError("missing key", "capacity.pmf")
        return parse_pmf(sec["pmf"], "capacity.pmf")
    if kind == "geometric":
        p = _float(sec, "p")
        return _checked("capacity.p", lambda: Geometric(p))
    raise ModelSpecError(f"{kind!r} must be finite or geometric", "capacity.kind")


def parse_spec(text: str) -> ModelSpec:
    """Parse spec text. Raises :class:`ModelSpecError` naming the field;
    an unstable model raises :class:`Unstable` instead."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ModelSpecError(f"malformed spec: {exc}") from None
    for name in cp.sections():
        if name not in _ALLOWED:
            raise ModelSpecError(f"unknown section [{name}]", name)
        extra = set(cp[name]) - _ALLOWED[name]
        if extra:
            key = sorted(extra)[0]
            raise ModelSpecError("unknown key", f"{name}.{key}")
    for name in _REQUIRED:
        if name not in cp:
            raise ModelSpecError(f"missing section [{name}]", name)

    arrival = _arrival(cp["arrival"])
    if "pmf" not in cp["batch"]:
        raise ModelSpecError("missing key", "batch.pmf")
    batch = parse_pmf(cp["batch"]["pmf"], "batch.pmf")
    mu = _float(cp["service"], "mu")
    capacity = _capacity(cp["capacity"])

    if isinstance(arrival, (Exponential, Deterministic, Erlang)):
        model = _checked("service.mu", lambda: CtModel(arrival, batch, mu, capacity))
    else:
        model = _checked("service.mu", lambda: QueueModel(arrival, batch, mu, capacity))

    def optional(section, key):
        return _int(cp[section], key) if section in cp and key in cp[section] else None

    n_max, slots, seed = optional("output", "n_max"), optional("simulation", "slots"), optional("simulation", "seed")
    if n_max is not None and n_max < 0:
        raise ModelSpecError("must be non-negative", "output.n_max")
    if slots is not None and slots < 1:
        raise ModelSpecError("must be positive", "simulation.slots")
    return ModelSpec(model, n_max, slots, seed)


def load_spec(path) -> ModelSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelSpecError(f"cannot read spec file {path}: {exc.strerror}", "path") from None
    return parse_spec(text)


def _pmf_text(pmf: FinitePmf) -> str:
    return ", ".join(f"{p}:{m!r}" for p, m in zip(pmf.points, pmf.masses))


def _arrival_lines(arrival) -> list[str]:
    if isinstance(arrival, Geometric):
        return ["domain = discrete", "kind = geometric", f"p = {arrival.p!r}"]
    if isinstance(arrival, FinitePmf):
        if len(arrival.points) == 1:
            return ["domain = discrete", "kind = deterministic", f"d = {arrival.points[0]}"]
        return ["domain = discrete", "kind = finite", f"pmf = {_pmf_text(arrival)}"]
    if isinstance(arrival, Exponential):
        return ["domain = continuous", "kind = exponential", f"rate = {arrival.rate!r}"]
    if isinstance(arrival, Deterministic):
        return ["domain = continuous", "kind = deterministic", f"d = {arrival.d!r}"]
    if isinstance(arrival, Erlang):
        return ["domain = continuous", "kind = erlang", f"k = {arrival.k}", f"rate = {arrival.rate!r}"]
    if isinstance(arrival, NegBinomial):
        raise ModelSpecError("negative binomial arrivals have no spec-file form", "arrival.kind")
    raise TypeError(f"unsupported arrival {type(arrival).__name__}")


def emit_spec(spec: ModelSpec) -> str:
    """Normalized spec text; :func:`parse_spec` maps it back to an equal model."""
    m = spec.model
    mu = m.mu_hat if isinstance(m, CtModel) else m.mu
    if isinstance(m.capacity, Geometric):
        cap = ["kind = geometric", f"p = {m.capacity.p!r}"]
    else:
        cap = ["kind = finite", f"pmf = {_pmf_text(m.capacity)}"]
    parts = [
        ["[arrival]", *_arrival_lines(m.arrival)],
        ["[batch]", f"pmf = {_pmf_text(m.batch)}"],
        ["[service]", f"mu = {mu!r}"],
        ["[capacity]", *cap],
    ]
    if spec.n_max is not None:
        parts.append(["[output]", f"n_max = {spec.n_max}"])
    sim = [f"{k} = {v}" for k, v in (("slots", spec.slots), ("seed", spec.seed)) if v is not None]
    if sim:
        parts.append(["[simulation]", *sim])
    return "\n\n".join("\n".join(p) for p in parts) + "\n"
