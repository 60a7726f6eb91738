"""Candidate-formula generation and the generate/validate/evaluate loop.

The built-in source is a weighted context-free grammar over the formula
DSL with a temperature knob: alternative probabilities go as
weight^(1/T), so low temperatures lock onto the heaviest derivation and
high temperatures flatten the choice. The grammar carries explicit
error-injection productions (an unbalanced parenthesis, an undefined
symbol, a stray operator) whose relative probability grows with
temperature, which makes the diversity-versus-validity trade-off a
testable property instead of a model artifact.

An external text-generation service can stand in for the grammar through
a small HTTP client; its output feeds the same validation pipeline.
"""

import json
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
import requests

from .channel import ChannelConfig
from .dsl.corpus import CorpusEntry, load_corpus
from .dsl.symbols import SymbolTable, default_symbol_table
from .dsl.validation import CLASSES, CLASS_VALID, ValidationReport, classify, validate
from .errors import ConfigError, GenerationSourceError
from .metrics import MetricsParams, MetricsReport, compare
from .synth import SchemeConfig

_PLACEHOLDER = re.compile(r"<([A-Za-z_][A-Za-z0-9_]*)>")
_TOKENISH = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+(?:\.\d+)?|\S")


@dataclass(frozen=True)
class ProductionAlt:
    production: str
    weight: float

    @property
    def nonterminals(self) -> tuple[str, ...]:
        return tuple(_PLACEHOLDER.findall(self.production))

    @property
    def is_terminal(self) -> bool:
        return not self.nonterminals


@dataclass(frozen=True)
class GrammarConfig:
    rules: dict[str, tuple[ProductionAlt, ...]]
    temperature: float = 0.8
    max_tokens: int = 128
    max_depth: int = 10
    seed: int = 0
    start: str = "start"

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.start not in self.rules:
            raise ConfigError(f"start symbol {self.start!r} has no rule")
        for name, alts in self.rules.items():
            if not alts:
                raise ConfigError(f"nonterminal {name!r} has no alternatives")
            for alt in alts:
                if alt.weight <= 0:
                    raise ConfigError(f"weights must be positive ({name!r})")
                for ref in alt.nonterminals:
                    if ref not in self.rules:
                        raise ConfigError(
                            f"production for {name!r} references unknown <{ref}>"
                        )
        unproductive = set(self.rules) - set(self.expansion_depths())
        if unproductive:
            raise ConfigError(
                f"nonterminals cannot finish expanding: {sorted(unproductive)}"
            )

    def expansion_depths(self) -> dict[str, int]:
        """Fewest expansion levels needed to finish each nonterminal."""
        depths: dict[str, int] = {}
        changed = True
        while changed:
            changed = False
            for name, alts in self.rules.items():
                for alt in alts:
                    if all(ref in depths for ref in alt.nonterminals):
                        cost = (
                            0
                            if alt.is_terminal
                            else 1 + max(depths[r] for r in alt.nonterminals)
                        )
                        if cost < depths.get(name, cost + 1):
                            depths[name] = cost
                            changed = True
        return depths


def load_grammar(path: str | Path | None = None, **overrides) -> GrammarConfig:
    """Load a grammar definition file; None loads the bundled default."""
    if path is None:
        path = Path(resources.files("modwave") / "data" / "grammar.json")
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    if not isinstance(raw, dict):
        raise ConfigError("grammar file must map nonterminals to alternatives")
    rules = {}
    for name, alts in raw.items():
        rules[name] = tuple(
            ProductionAlt(str(a["production"]), float(a["weight"])) for a in alts
        )
    return GrammarConfig(rules=rules, **overrides)


def _pick(
    alts: tuple[ProductionAlt, ...], temperature: float, rng: np.random.Generator
) -> ProductionAlt:
    weights = np.array([alt.weight for alt in alts])
    if temperature < 1e-6:
        return alts[int(np.argmax(weights))]
    logits = np.log(weights) / temperature
    logits -= logits.max()
    probs = np.exp(logits)
    probs /= probs.sum()
    return alts[int(rng.choice(len(alts), p=probs))]


def _token_count(text: str) -> int:
    return len(_TOKENISH.findall(text))


def sample_formula(config: GrammarConfig, rng=None) -> str:
    """Draw one formula string from the grammar; deterministic per seed."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    budget = [config.max_tokens]
    depths = config.expansion_depths()

    def alt_depth(alt: ProductionAlt) -> int:
        if alt.is_terminal:
            return 0
        return 1 + max(depths[r] for r in alt.nonterminals)

    def expand(name: str, depth: int) -> str:
        alts = config.rules[name]
        if depth >= config.max_depth or budget[0] < 24:
            # fall back to the shallowest alternatives so expansion finishes
            best = min(alt_depth(a) for a in alts)
            alts = tuple(a for a in alts if alt_depth(a) == best)
        alt = _pick(alts, config.temperature, rng)
        out = alt.production
        budget[0] -= _token_count(_PLACEHOLDER.sub("", out))
        while True:
            match = _PLACEHOLDER.search(out)
            if match is None:
                return out
            inner = expand(match.group(1), depth + 1)
            out = out[: match.start()] + inner + out[match.end() :]

    text = expand(config.start, 0)
    return re.sub(r"\s+", " ", text).strip()


@dataclass
class GeneratedItem:
    index: int
    formula: str | None
    classification: str | None
    report: ValidationReport | None = None
    source_error: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "formula": self.formula,
            "classification": self.classification,
            "report": None if self.report is None else self.report.to_dict(),
            "source_error": self.source_error,
        }


@dataclass
class GenerationBatchReport:
    total: int
    valid: int
    class_counts: dict[str, int]
    items: list[GeneratedItem]
    temperature: float | None
    seed: int | None
    source_errors: int = 0

    @property
    def valid_fraction(self) -> float:
        return self.valid / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "valid": self.valid,
            "valid_fraction": self.valid_fraction,
            "class_counts": dict(self.class_counts),
            "source_errors": self.source_errors,
            "temperature": self.temperature,
            "seed": self.seed,
            "items": [item.to_dict() for item in self.items],
        }


def _tally(items: list[GeneratedItem]) -> tuple[dict[str, int], int, int]:
    counts = {name: 0 for name in CLASSES}
    errors = 0
    for item in items:
        if item.classification is not None:
            counts[item.classification] += 1
        if item.source_error is not None:
            errors += 1
    return counts, counts[CLASS_VALID], errors


def _derive_seed(master: int, index: int) -> int:
    seq = np.random.SeedSequence([int(master), int(index)])
    return int(seq.generate_state(1, np.uint64)[0] % (2**63))


def generate_batch(
    n: int, config: GrammarConfig, table: SymbolTable | None = None
) -> GenerationBatchReport:
    """Sample, validate and classify n formulas from the grammar."""
    if n < 0:
        raise ConfigError("batch size must be non-negative")
    table = table or default_symbol_table()
    items = []
    for index in range(n):
        rng = np.random.default_rng(_derive_seed(config.seed, index))
        text = sample_formula(config, rng=rng)
        report = validate(text, table)
        items.append(
            GeneratedItem(
                index=index,
                formula=text,
                classification=classify(report),
                report=report,
            )
        )
    counts, valid, errors = _tally(items)
    return GenerationBatchReport(
        total=n,
        valid=valid,
        class_counts=counts,
        items=items,
        temperature=config.temperature,
        seed=config.seed,
        source_errors=errors,
    )


# ---------------------------------------------------------------------------
# external generation service


def external_generate(
    endpoint: str,
    prompt: str,
    temperature: float = 0.8,
    max_tokens: int = 128,
    timeout: float = 5.0,
    session=None,
) -> str:
    """POST {prompt, temperature, max_tokens}, expect {"text": ...}.

    One retry on transport errors or 5xx replies; every failure surfaces
    as GenerationSourceError so batch runs can isolate it.
    """
    poster = session or requests
    payload = {"prompt": prompt, "temperature": temperature, "max_tokens": max_tokens}
    last: Exception | None = None
    for _attempt in range(2):
        try:
            response = poster.post(endpoint, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            last = exc
            continue
        if 500 <= response.status_code < 600:
            last = GenerationSourceError(
                "status", f"server returned {response.status_code}"
            )
            continue
        if response.status_code != 200:
            raise GenerationSourceError(
                "status", f"server returned {response.status_code}"
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise GenerationSourceError(
                "malformed-response", f"reply is not JSON: {exc}"
            ) from exc
        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str):
            raise GenerationSourceError(
                "malformed-response", "reply JSON lacks a string 'text' field"
            )
        return text
    if isinstance(last, GenerationSourceError):
        raise last
    raise GenerationSourceError("network", f"endpoint unreachable: {last}")


def generate_batch_external(
    n: int,
    endpoint: str,
    prompts: list[str],
    temperature: float = 0.8,
    max_tokens: int = 128,
    timeout: float = 5.0,
    table: SymbolTable | None = None,
    session=None,
) -> GenerationBatchReport:
    """Batch generation through the HTTP client.

    Per-call failures are recorded on their item; collected results are
    never discarded because a later call failed.
    """
    if not prompts:
        raise ConfigError("external generation needs at least one prompt")
    table = table or default_symbol_table()
    items = []
    for index in range(n):
        prompt = prompts[index % len(prompts)]
        try:
            text = external_generate(
                endpoint,
                prompt,
                temperature=temperature,
                max_tokens=max_tokens,
                timeout=timeout,
                session=session,
            )
        except GenerationSourceError as exc:
            items.append(
                GeneratedItem(
                    index=index,
                    formula=None,
                    classification=None,
                    source_error=str(exc),
                )
            )
            continue
        report = validate(text, table)
        items.append(
            GeneratedItem(
                index=index,
                formula=text,
                classification=classify(report),
                report=report,
            )
        )
    counts, valid, errors = _tally(items)
    return GenerationBatchReport(
        total=n,
        valid=valid,
        class_counts=counts,
        items=items,
        temperature=temperature,
        seed=None,
        source_errors=errors,
    )


# ---------------------------------------------------------------------------
# generate -> validate -> evaluate pipeline


def _fixture_report(
    entries: list[CorpusEntry], table: SymbolTable
) -> GenerationBatchReport:
    items = []
    for index, entry in enumerate(entries):
        report = validate(entry.formula, table)
        items.append(
            GeneratedItem(
                index=index,
                formula=entry.formula,
                classification=classify(report),
                report=report,
            )
        )
    counts, valid, errors = _tally(items)
    return GenerationBatchReport(
        total=len(entries),
        valid=valid,
        class_counts=counts,
        items=items,
        temperature=None,
        seed=None,
        source_errors=errors,
    )


def pipeline_run(
    source: GrammarConfig | str | Path | list[CorpusEntry],
    n: int,
    channel: ChannelConfig,
    base_config: SchemeConfig,
    params: MetricsParams = MetricsParams(),
    master_seed: int = 0,
    table: SymbolTable | None = None,
) -> tuple[list[MetricsReport], GenerationBatchReport]:
    """Generate (or load) formulas, validate them all, and push the valid
    ones through synthesis, channel and metrics.

    `source` is a GrammarConfig, a fixture corpus path, or a pre-loaded
    entry list. Returns the metric rows for valid formulas plus the batch
    report covering everything generated.
    """
    table = table or default_symbol_table()
    if isinstance(source, GrammarConfig):
        batch = generate_batch(n, replace(source, seed=master_seed), table)
        named = [
            (f"g{item.index}", item.formula)
            for item in batch.items
            if item.classification == CLASS_VALID
        ]
    else:
        entries = source if isinstance(source, list) else load_corpus(source)
        batch = _fixture_report(entries, table)
        named = [
            (entries[item.index].id, item.formula)
            for item in batch.items
            if item.classification == CLASS_VALID
        ]

    configs = [
        replace(
            base_config,
            scheme=f"formula:{name}",
            formula_text=formula,
        )
        for name, formula in named
    ]
    rows = compare(configs, channel, params=params, master_seed=master_seed)
    return rows, batch
