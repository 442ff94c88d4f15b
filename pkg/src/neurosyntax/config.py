"""Run configuration: a flat key-value text file.

Lines are "key = value"; '#' starts a comment.  Paths resolve relative
to the config file.  Per-subject inputs use "subject.<id>.fmri" and
"subject.<id>.parcels" keys.  The run hash covers every semantic field
(not the output directory or job count) and is embedded in every
artifact this run writes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


DEFAULT_HIERARCHY = (
    "PU",
    "PU+CM",
    "PU+CM+PD",
    "PU+CM+PD+CC+CI+INC+DEP",
    "PU+CM+PD+CC+CI+INC+DEP+SEM",
)


def default_pairwise() -> tuple[str, ...]:
    pairs = []
    bases = ("CC", "CI", "DEP")
    for i, x in enumerate(bases):
        for y in bases[i + 1 :]:
            pairs.append(f"{x}+{y}-{x}")
            pairs.append(f"{x}+{y}-{y}")
    return tuple(pairs)


@dataclass
class RunConfig:
    trees: str = ""
    conllu: str = ""
    timing: str = ""
    frequency: str = ""
    embeddings: str = ""  # word-level contextual embeddings (BMAT) for SEM
    glove: str = ""  # probe targets (BMAT, words x 300)
    out: str = "out"
    seed: int = 0
    spaces: tuple[str, ...] = ("PU", "CM", "PD", "CC", "CI", "INC", "DEP")
    tr: float = 1.5
    n_tr: int = 282
    n_delays: int = 8
    resample_mode: str = "lanczos"
    lanczos_lobes: int = 3
    lambda_grid: tuple[float, ...] = (1e-3, 1e-2, 1e-1)
    validation_fraction: float = 0.2
    folds: int = 4
    block_size: int = 10
    n_permutations: int = 5000
    n_bootstrap: int = 5000
    fdr_q: float = 0.05
    fdr_scope: str = "global"  # or "per_analysis"
    subtree_dim: int = 250
    subtree_mode: str = "hashed_production_counts"
    sem_dim: int = 250
    beam_width: int = 10
    pcfg_smoothing: float = 0.1
    gcn_layers: int = 2
    gcn_hidden: int = 250
    gcn_epochs: int = 20
    gcn_lr: float = 0.05
    pu_mark: str = "previous"
    study_individual: tuple[str, ...] = ()
    study_hierarchical: tuple[str, ...] = DEFAULT_HIERARCHY
    study_pairwise: tuple[str, ...] = field(default_factory=default_pairwise)
    subjects: dict[str, dict[str, str]] = field(default_factory=dict)
    jobs: int = 1
    base_dir: str = "."

    def __post_init__(self):
        for space in self.spaces:
            if space not in ("PU", "CM", "PD", "CC", "CI", "INC", "DEP", "SEM"):
                raise ConfigError(f"unknown feature space {space!r}")
        if self.fdr_scope not in ("global", "per_analysis"):
            raise ConfigError(f"unknown fdr_scope {self.fdr_scope!r}")
        if not self.study_individual:
            self.study_individual = tuple(self.spaces)

    def path(self, value: str) -> Path:
        return (Path(self.base_dir) / value).resolve()

    def out_dir(self) -> Path:
        return Path(self.base_dir) / self.out

    def run_hash(self) -> str:
        # covers data-processing fields only: study lists, output location,
        # and parallelism do not change any matrix this run produces
        skip = {
            "out", "jobs", "base_dir",
            "study_individual", "study_hierarchical", "study_pairwise",
        }
        payload = {}
        for f in fields(self):
            if f.name in skip:
                continue
            payload[f.name] = getattr(self, f.name)
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_TUPLE_KEYS = {
    "spaces": str,
    "lambda_grid": float,
    "study_individual": str,
    "study_hierarchical": str,
    "study_pairwise": str,
}
_INT_KEYS = {
    "seed", "n_tr", "n_delays", "lanczos_lobes", "folds", "block_size",
    "n_permutations", "n_bootstrap", "subtree_dim", "sem_dim", "beam_width",
    "gcn_layers", "gcn_hidden", "gcn_epochs", "jobs",
}
_FLOAT_KEYS = {
    "tr", "fdr_q", "gcn_lr", "pcfg_smoothing", "validation_fraction",
}
_STR_KEYS = {
    "trees", "conllu", "timing", "frequency", "embeddings", "glove", "out",
    "resample_mode", "fdr_scope", "subtree_mode", "pu_mark",
}


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    values: dict = {"base_dir": base_dir}
    subjects: dict[str, dict[str, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("subject."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in ("fmri", "parcels"):
                raise ConfigError(f"line {lineno}: bad subject key {key!r}")
            subjects.setdefault(parts[1], {})[parts[2]] = value
        elif key in _TUPLE_KEYS:
            cast = _TUPLE_KEYS[key]
            sep = ";" if key.startswith("study_") else ","
            values[key] = tuple(
                cast(item.strip()) for item in value.split(sep) if item.strip()
            )
        elif key in _INT_KEYS:
            values[key] = int(value)
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        elif key in _STR_KEYS:
            values[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    for sid, entries in subjects.items():
        if "fmri" not in entries or "parcels" not in entries:
            raise ConfigError(f"subject {sid}: needs both fmri and parcels paths")
    values["subjects"] = subjects
    return RunConfig(**values)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=str(path.parent))


def parse_group(spec: str) -> tuple[str, ...]:
    """"CC+PD" -> ("CC", "PD")."""
    spaces = tuple(s.strip() for s in spec.split("+") if s.strip())
    if not spaces:
        raise ConfigError(f"empty feature group in {spec!r}")
    return spaces


def parse_pair(spec: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """"CC+DEP-CC" -> (("CC","DEP"), ("CC",))."""
    if "-" not in spec:
        raise ConfigError(f"pair spec {spec!r} needs LEFT-RIGHT")
    left, right = spec.split("-", 1)
    return parse_group(left), parse_group(right)


def group_name(spaces: tuple[str, ...]) -> str:
    return "+".join(spaces)
