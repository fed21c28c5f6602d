"""Contact scenes: a domain paired with a contact form and numerics knobs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domains import Domain, lie_tower
from .errors import EmptyDomain, SceneValidationError
from .forms import ContactForm, reeb_field, reeb_field_many, top_form_value_many

__all__ = ["NumericsConfig", "ContactScene", "ContactCheckReport",
           "contact_check", "load_scene", "scene_from_dict", "validate_point"]


def validate_point(p, n: int) -> np.ndarray:
    """Check that p is a finite coordinate vector of length 2n+1."""
    p = np.asarray(p, dtype=float)
    if p.shape != (2 * n + 1,):
        raise SceneValidationError(
            f"point has shape {p.shape}, expected ({2 * n + 1},)")
    if not np.all(np.isfinite(p)):
        raise SceneValidationError(f"point has non-finite entries: {p}")
    return p


@dataclass
class NumericsConfig:
    """Shared numerical thresholds; lengths are relative to the domain scale."""

    tangency_tau: float = 1e-7     # threshold on Lie-tower values
    eps_hit_rel: float = 1e-10     # |h| tolerance at a boundary hit
    lie_step_rel: float = 1e-4     # finite-difference step of the Lie tower
    ode_rtol: float = 1e-11
    ode_atol: float = 1e-13
    max_time_factor: float = 20.0  # trajectory bail-out, in units of scale
    dense_substeps: int = 12       # event-scan samples per accepted RK step


@dataclass
class ContactScene:
    """Domain + contact form + derived Reeb field."""

    n: int
    domain: Domain
    form: ContactForm
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    seed: int = 0
    name: str = "scene"

    def __post_init__(self):
        if self.domain.dim != 2 * self.n + 1:
            raise SceneValidationError(
                f"domain dimension {self.domain.dim} != 2n+1 for n={self.n}")

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def scale(self) -> float:
        return self.domain.scale

    @property
    def tau(self) -> float:
        return self.numerics.tangency_tau * max(1.0, self.scale)

    @property
    def eps_hit(self) -> float:
        return self.numerics.eps_hit_rel * max(1.0, self.scale)

    def reeb(self, p) -> np.ndarray:
        return reeb_field(self.form, p)

    def reeb_many(self, P) -> np.ndarray:
        return reeb_field_many(self.form, P)

    @property
    def vertical_reeb(self) -> bool:
        """True when the Reeb field is exactly d/dz (darboux/radial builtins)."""
        return self.form.kind in ("darboux", "radial")

    def lie_tower(self, p, depth: int) -> list:
        return lie_tower(self.domain, self.reeb, p, depth,
                         self.numerics.lie_step_rel)

    def with_form(self, form: ContactForm, name: Optional[str] = None) -> "ContactScene":
        return ContactScene(self.n, self.domain, form, self.numerics,
                            self.seed, name or self.name)


@dataclass
class ContactCheckReport:
    min_value: float
    argmin: np.ndarray
    n_samples: int
    accepted: bool


def sample_interior(domain: Domain, n_samples: int, rng,
                    max_draws: int = 10**6) -> np.ndarray:
    """Rejection-sample interior points uniformly from the bounding box."""
    lo, hi = domain.bbox[:, 0], domain.bbox[:, 1]
    out = []
    got = 0
    drawn = 0
    chunk = max(4096, 2 * n_samples)
    while got < n_samples:
        if drawn >= max_draws:
            if got == 0:
                raise EmptyDomain(
                    f"no interior point in {max_draws} draws for {domain.kind}")
            break
        take = min(chunk, max_draws - drawn)
        P = lo + (hi - lo) * rng.random((take, domain.dim))
        drawn += take
        mask = domain.h(P) < 0.0
        hits = P[mask]
        if hits.size:
            out.append(hits[: n_samples - got])
            got += min(hits.shape[0], n_samples - got)
    return np.concatenate(out, axis=0)


def contact_check(form: ContactForm, domain: Domain, n_samples: int = 1000,
                  seed: int = 0) -> ContactCheckReport:
    """Minimum of beta ^ (dbeta)^n over sampled interior points.

    The form is accepted when the minimum is strictly positive.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    P = sample_interior(domain, n_samples, rng)
    vals = top_form_value_many(form, P)
    i = int(np.argmin(vals))
    return ContactCheckReport(float(vals[i]), P[i], P.shape[0], bool(vals[i] > 0.0))


# -- scene files ---------------------------------------------------------------


def scene_from_dict(doc: dict, skip_check: bool = False) -> ContactScene:
    """Build a scene from a parsed scene file.

    Format: {"n": 1, "domain": {"kind": "ellipsoid", "axes": [2,2,2]},
             "form": {"kind": "darboux"}, "charts": "auto", "seed": 0}.
    "charts": "auto" keeps the builtin chart set; an explicit list is not
    supported in files (charts are API-level objects).
    """
    try:
        n = int(doc["n"])
        domain = Domain.from_spec(doc["domain"])
        form_spec = dict(doc.get("form", {"kind": "darboux"}))
        form_spec.setdefault("n", n)
        form = ContactForm.from_spec(form_spec)
    except (KeyError, ValueError, TypeError) as exc:
        raise SceneValidationError(str(exc)) from exc

    charts = doc.get("charts", "auto")
    if charts != "auto":
        raise SceneValidationError('only "charts": "auto" is supported in files')

    numerics = NumericsConfig()
    for key, val in doc.get("numerics", {}).items():
        if not hasattr(numerics, key):
            raise SceneValidationError(f"unknown numerics key {key!r}")
        setattr(numerics, key, float(val))

    scene = ContactScene(n, domain, form, numerics,
                         seed=int(doc.get("seed", 0)),
                         name=str(doc.get("name", "scene")))
    if not skip_check:
        rep = contact_check(form, domain, n_samples=256, seed=scene.seed)
        if not rep.accepted:
            raise SceneValidationError(
                f"contact check failed: min top-form value {rep.min_value:g}")
    return scene


def load_scene(path, skip_check: bool = False) -> ContactScene:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return scene_from_dict(doc, skip_check=skip_check)
