"""INI-style run configuration.

Example::

    [domain]
    xmin = -1
    xmax = 1
    ymin = -1
    ymax = 1
    n_sub = 64

    [physics]
    k0 = 10
    omega = 50
    beta11 = 10
    beta12 = 9
    beta22 = 9

    [run]
    stages = A2, J2
    switch_tol = 1e-4
    final_tol = 1e-12
    reference_energy = 38.214314227545884

    [J2]
    shift = adaptive
    freeze_after = 2

Stage sections (named after the stage token, e.g. ``[A1]``) override
``switch_tol``, ``max_iters``, ``shift``, ``sigma`` and ``freeze_after``.
"""

import configparser
import re
from dataclasses import asdict, dataclass, field
from importlib import resources

from .assembly import PhysicsParams
from .errors import ConfigurationError
from .mesh import RectDomain

STAGE_RE = re.compile(r"^\s*([AJ])([12])\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class StageConfig:
    method: str
    order: int
    switch_tol: float = 1e-4
    max_iters: int = 5000
    shift: str = "adaptive"
    sigma: float = None
    freeze_after: int = 2

    @property
    def tag(self):
        return f"{self.method}{self.order}"


@dataclass(frozen=True)
class RunConfig:
    domain: RectDomain
    physics: PhysicsParams
    stages: tuple
    final_tol: float = 1e-12
    reference_energy: float = None
    reference_tol: float = 1e-12
    output_dir: str = "out"
    spectral: bool = False
    spectral_k: int = 3
    spectral_sigma: float = None
    line_search_evals: int = 20
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.stages:
            raise ConfigurationError("at least one stage is required")
        orders = [s.order for s in self.stages]
        if orders != sorted(orders):
            raise ConfigurationError("stage orders must be non-decreasing (P1 before P2)")
        for s in self.stages:
            if s.method == "J" and s.order != 2:
                raise ConfigurationError("J stages run on P2 spaces")
            if s.method == "J" and s.shift == "fixed" and s.sigma is None:
                raise ConfigurationError(f"stage {s.tag}: a fixed shift needs sigma")

    def to_dict(self):
        d = asdict(self)
        d.pop("source")
        d["physics"].pop("extra_potential")
        return d


def parse_stages(text, defaults=None, sections=None):
    """Parse ``"A1, A2, J2"`` into :class:`StageConfig` objects."""
    defaults = defaults or {}
    sections = sections or {}
    stages = []
    for tok in [t for t in re.split(r"[,\s]+", text.strip()) if t]:
        m = STAGE_RE.match(tok)
        if not m:
            raise ConfigurationError(f"bad stage token {tok!r}; expected A1, A2 or J2")
        method, order = m.group(1).upper(), int(m.group(2))
        kw = dict(defaults)
        sec = sections.get(f"{method}{order}")
        if sec is not None:
            kw.update(_stage_options(sec))
        stages.append(StageConfig(method, order, **kw))
    return tuple(stages)


def _stage_options(sec):
    out = {}
    if "switch_tol" in sec:
        out["switch_tol"] = sec.getfloat("switch_tol")
    if "max_iters" in sec:
        out["max_iters"] = sec.getint("max_iters")
    if "shift" in sec:
        shift = sec.get("shift").strip().lower()
        if shift not in ("adaptive", "fixed"):
            raise ConfigurationError(f"shift must be 'adaptive' or 'fixed', got {shift!r}")
        out["shift"] = shift
    if "sigma" in sec:
        out["sigma"] = sec.getfloat("sigma")
    if "freeze_after" in sec:
        v = sec.get("freeze_after").strip().lower()
        out["freeze_after"] = None if v in ("none", "never") else int(v)
    return out


def _opt_float(sec, key):
    if sec is None or key not in sec or not sec.get(key).strip():
        return None
    return sec.getfloat(key)


def load_config(path=None, text=None, stages_override=None, output_dir=None):
    """Read a :class:`RunConfig` from ``path`` (or the string ``text``)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        if text is not None:
            cp.read_string(text)
            source = text
        else:
            with open(path) as fh:
                source = fh.read()
            cp.read_string(source, source=str(path))
    except (configparser.Error, OSError) as exc:
        raise ConfigurationError(f"cannot read config: {exc}") from exc
    try:
        dom = cp["domain"] if cp.has_section("domain") else {}
        domain = RectDomain(
            xmin=float(dom.get("xmin", -1.0)), xmax=float(dom.get("xmax", 1.0)),
            ymin=float(dom.get("ymin", -1.0)), ymax=float(dom.get("ymax", 1.0)),
            n_sub=int(dom.get("n_sub", 256)),
        )
        ph = cp["physics"] if cp.has_section("physics") else None
        getf = (lambda k: ph.getfloat(k, 0.0)) if ph is not None else (lambda k: 0.0)
        physics = PhysicsParams(
            delta=getf("delta"), omega=getf("omega"), k0=getf("k0"),
            beta11=getf("beta11"), beta12=getf("beta12"), beta22=getf("beta22"),
            potential_shift_enabled=ph.getboolean("potential_shift", True) if ph is not None else True,
        )
        run = cp["run"] if cp.has_section("run") else None
        rget = run.get if run is not None else (lambda k, d=None: d)
        defaults = {}
        if run is not None and "switch_tol" in run:
            defaults["switch_tol"] = run.getfloat("switch_tol")
        if run is not None and "max_iters" in run:
            defaults["max_iters"] = run.getint("max_iters")
        stage_text = stages_override or rget("stages", "A2, J2")
        sections = {name.upper(): cp[name] for name in cp.sections()}
        stages = parse_stages(stage_text, defaults, sections)
        return RunConfig(
            domain=domain,
            physics=physics,
            stages=stages,
            final_tol=float(rget("final_tol", 1e-12)),
            reference_energy=_opt_float(run, "reference_energy"),
            reference_tol=float(rget("reference_tol", 1e-12)),
            output_dir=output_dir or rget("output_dir", "out"),
            spectral=run.getboolean("spectral", False) if run is not None else False,
            spectral_k=int(rget("spectral_k", 3)),
            spectral_sigma=_opt_float(run, "spectral_sigma"),
            line_search_evals=int(rget("line_search_evals", 20)),
            source=source,
        )
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid config value: {exc}") from exc


def preset_path(name):
    """Path of a bundled preset (``k0_10``, ``k0_50`` or ``decoupled``)."""
    name = name if name.endswith(".cfg") else name + ".cfg"
    ref = resources.files("sogpe") / "presets" / name
    if not ref.is_file():
        raise ConfigurationError(f"no preset named {name!r}")
    return ref
