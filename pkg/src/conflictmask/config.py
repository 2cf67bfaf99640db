"""Flat key=value experiment configuration.

A config is plain text, one ``key = value`` per line, with ``#`` comment
lines and blank lines ignored. Unknown keys are rejected with the line
they appeared on. Every key has a documented default, and the resolved
("effective") config is echoed into summary.json so any run can be
reproduced from its own output.
"""

from dataclasses import dataclass, field

from .formats import fmt_float

STRATEGY_TOKENS = ("soco", "hard", "none")
MODEL_TOKENS = ("quadratic", "mlp")


class ConfigError(ValueError):
    """Carries one diagnostic string per problem found."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def _parse_int(raw: str) -> int:
    return int(raw.strip())


def _parse_float(raw: str) -> float:
    v = float(raw.strip())
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError("non-finite value")
    return v


def _parse_str(raw: str) -> str:
    return raw.strip()


def _parse_ratio_list(raw: str) -> list:
    parts = [p.strip() for p in raw.split(",") if p.strip() != ""]
    if not parts:
        raise ValueError("empty list")
    return [_parse_float(p) for p in parts]


# key -> (parser, default); None default means "derived later"
SCHEMA = {
    "n_tasks": (_parse_int, 4),
    "dim": (_parse_int, 64),
    "conflict_ratios": (_parse_ratio_list, None),
    "model": (_parse_str, "quadratic"),
    "epochs": (_parse_int, 300),
    "lr": (_parse_float, 0.2),
    "strategy": (_parse_str, "soco"),
    "seed": (_parse_int, 0),
    "lambda": (_parse_float, 1.0),
    "alpha": (_parse_float, 20.0),
    "q1": (_parse_float, 0.05),
    "q3": (_parse_float, 0.95),
    "beta_left_max": (_parse_float, 20.0),
    "beta_right_max": (_parse_float, 30.0),
    "beta_min": (_parse_float, 5.0),
    "init_sparsity": (_parse_float, 0.2),
    "mask_interval": (_parse_int, 10),
    "hard_sparsity": (_parse_float, 0.2),
    "hard_swap_frac": (_parse_float, 0.01),
    "success_frac": (_parse_float, 0.05),
    "out_dir": (_parse_str, "results"),
}


@dataclass
class ExperimentConfig:
    n_tasks: int = 4
    dim: int = 64
    conflict_ratios: list = field(default_factory=list)
    model: str = "quadratic"
    epochs: int = 300
    lr: float = 0.2
    strategy: str = "soco"
    seed: int = 0
    lam: float = 1.0
    alpha: float = 20.0
    q1: float = 0.05
    q3: float = 0.95
    beta_left_max: float = 20.0
    beta_right_max: float = 30.0
    beta_min: float = 5.0
    init_sparsity: float = 0.2
    mask_interval: int = 10
    hard_sparsity: float = 0.2
    hard_swap_frac: float = 0.01
    success_frac: float = 0.05
    out_dir: str = "results"

    def strategies(self) -> list:
        return [s.strip() for s in self.strategy.split(",") if s.strip()]

    def effective_dict(self) -> dict:
        """All keys with resolved values, in schema order."""
        out = {}
        for key in SCHEMA:
            attr = "lam" if key == "lambda" else key
            v = getattr(self, attr)
            out[key] = list(v) if isinstance(v, (list, tuple)) else v
        return out


def default_conflict_ratios(n_tasks: int) -> list:
    """Evenly spaced targets from 0.10 to 0.40."""
    if n_tasks == 1:
        return [0.0]
    lo, hi = 0.10, 0.40
    return [lo + (hi - lo) * i / (n_tasks - 1) for i in range(n_tasks)]


def _validate(cfg: ExperimentConfig) -> list:
    errs = []
    if cfg.n_tasks < 1:
        errs.append("n_tasks must be >= 1")
    if cfg.dim < 1:
        errs.append("dim must be >= 1")
    if len(cfg.conflict_ratios) != cfg.n_tasks:
        errs.append(
            f"conflict_ratios has {len(cfg.conflict_ratios)} entries for {cfg.n_tasks} tasks"
        )
    for r in cfg.conflict_ratios:
        if not (0.0 <= r <= 1.0):
            errs.append(f"conflict ratio {fmt_float(r)} outside [0, 1]")
    if cfg.model not in MODEL_TOKENS:
        errs.append(f"model must be one of {'|'.join(MODEL_TOKENS)}, got '{cfg.model}'")
    if cfg.epochs < 1:
        errs.append("epochs must be >= 1")
    if cfg.lr <= 0:
        errs.append("lr must be > 0")
    toks = cfg.strategies()
    if not toks:
        errs.append("strategy must name at least one of soco|hard|none")
    for t in toks:
        if t not in STRATEGY_TOKENS:
            errs.append(f"unknown strategy '{t}'")
    if len(set(toks)) != len(toks):
        errs.append("strategy list contains duplicates")
    if cfg.lam < 0:
        errs.append("lambda must be >= 0")
    if cfg.alpha <= 0:
        errs.append("alpha must be > 0")
    if not (0.0 < cfg.q1 < cfg.q3 < 1.0):
        errs.append("need 0 < q1 < q3 < 1")
    if cfg.beta_min > min(cfg.beta_left_max, cfg.beta_right_max):
        errs.append("beta_min must not exceed either beta max")
    if not (0.0 <= cfg.init_sparsity < 1.0):
        errs.append("init_sparsity must lie in [0, 1)")
    if cfg.mask_interval < 1:
        errs.append("mask_interval must be >= 1")
    if not (0.0 <= cfg.hard_sparsity < 1.0):
        errs.append("hard_sparsity must lie in [0, 1)")
    if not (0.0 <= cfg.hard_swap_frac <= 1.0):
        errs.append("hard_swap_frac must lie in [0, 1]")
    if cfg.success_frac <= 0:
        errs.append("success_frac must be > 0")
    return errs


def load_config(text: str = "", overrides=()) -> ExperimentConfig:
    """Parse config text plus key=value overrides into a validated config.

    Raises :class:`ConfigError` listing every problem, each tagged with
    the config line or override it came from.
    """
    raw: dict = {}
    errs: list = []

    def take(key: str, value: str, where: str):
        key = key.strip()
        if key not in SCHEMA:
            errs.append(f"{where}: unknown key '{key}'")
            return
        parser, _ = SCHEMA[key]
        try:
            raw[key] = parser(value)
        except ValueError:
            errs.append(f"{where}: invalid value for '{key}': '{value.strip()}'")

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            errs.append(f"line {lineno}: expected 'key = value', got '{stripped}'")
            continue
        key, value = stripped.split("=", 1)
        take(key, value, f"line {lineno}")

    for ov in overrides:
        if "=" not in ov:
            errs.append(f"override '{ov}': expected 'key=value'")
            continue
        key, value = ov.split("=", 1)
        take(key, value, f"override '{ov}'")

    if errs:
        raise ConfigError(errs)

    kwargs = {}
    for key, (_, default) in SCHEMA.items():
        attr = "lam" if key == "lambda" else key
        if key in raw:
            kwargs[attr] = raw[key]
        elif default is not None:
            kwargs[attr] = default
    cfg = ExperimentConfig(**kwargs)
    if "conflict_ratios" not in raw:
        cfg.conflict_ratios = default_conflict_ratios(cfg.n_tasks)

    errs = _validate(cfg)
    if errs:
        raise ConfigError(errs)
    return cfg


def config_text_from_effective(effective: dict) -> str:
    """Render an effective-config echo back into loadable config text."""
    lines = []
    for key, v in effective.items():
        if isinstance(v, (list, tuple)):
            value = ",".join(fmt_float(x) for x in v)
        elif isinstance(v, float):
            value = fmt_float(v)
        else:
            value = str(v)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
