"""Run configuration: INI files with a [run] section and one section per command.

Grid values accept three forms:

* a single number or arithmetic expression (``0.5``, ``pi/4``)
* a comma-separated list (``0, 0.5, 1, 2``)
* an inclusive range ``start:stop:step`` (``0:3:0.05``, ``0:pi/2:pi/64``)

Expressions may use ``pi``, ``+ - * /``, ``**`` and parentheses.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .measurement import CoarseGraining

COMMANDS = ("single", "sequence", "rotation", "thermal", "scaling", "compare")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    raise ConfigError(f"unsupported expression element {ast.dump(node)}")


def parse_number(text: str) -> float:
    text = text.strip()
    if not text:
        raise ConfigError("empty number")
    try:
        value = _eval_node(ast.parse(text, mode="eval"))
    except (SyntaxError, ZeroDivisionError, OverflowError) as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{text!r} is not finite")
    return value


def parse_grid(text: str) -> list[float]:
    """Expand a grid specification into an ordered list of floats."""
    text = text.strip()
    if not text:
        raise ConfigError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range {text!r} must be start:stop:step")
        start, stop, step = (parse_number(p) for p in parts)
        if step <= 0:
            raise ConfigError("range step must be positive")
        if stop < start:
            raise ConfigError("range stop is below start")
        count = (stop - start) / step
        n = round(count)
        if abs(count - n) > 1e-9 * max(1.0, count):
            n = math.floor(count)
        if n > 1_000_000:
            raise ConfigError("grid too large")
        return [start + i * step for i in range(n + 1)]
    return [parse_number(p) for p in text.split(",")]


def parse_int_grid(text: str) -> list[int]:
    vals = parse_grid(text)
    out = [int(round(v)) for v in vals]
    if any(abs(a - b) > 1e-9 for a, b in zip(vals, out)):
        raise ConfigError(f"{text!r} must contain integers")
    return out


def parse_coarse_graining(text: str) -> CoarseGraining | None:
    """``none``, ``photodiode`` or ``bins:e0,e1,...`` for intervals starting at the given edges."""
    text = text.strip().lower()
    if text in ("", "none"):
        return None
    if text == "photodiode":
        return CoarseGraining.photodiode()
    if text.startswith("bins:"):
        edges = parse_int_grid(text[5:])
        try:
            return CoarseGraining.intervals(edges)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown coarse_graining {text!r}")


@dataclass
class RunConfig:
    command: str
    section: dict
    output_dir: Path = Path("out")
    seed: int = 0
    source: str = ""
    extras: dict = field(default_factory=dict)

    def get(self, key: str, default=None):
        return self.section.get(key, default)

    def grid(self, key: str, default: str | None = None) -> list[float]:
        raw = self.section.get(key, default)
        if raw is None:
            raise ConfigError(f"[{self.command}] needs '{key}'")
        return parse_grid(raw)

    def int_grid(self, key: str, default: str | None = None) -> list[int]:
        raw = self.section.get(key, default)
        if raw is None:
            raise ConfigError(f"[{self.command}] needs '{key}'")
        return parse_int_grid(raw)

    def number(self, key: str, default: float | None = None) -> float:
        raw = self.section.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"[{self.command}] needs '{key}'")
            return float(default)
        return parse_number(raw)

    def optional_number(self, key: str) -> float | None:
        raw = self.section.get(key)
        return None if raw is None or not raw.strip() else parse_number(raw)

    def flag(self, key: str, default: bool = False) -> bool:
        raw = self.section.get(key)
        if raw is None:
            return default
        val = raw.strip().lower()
        if val in ("1", "yes", "true", "on"):
            return True
        if val in ("0", "no", "false", "off"):
            return False
        raise ConfigError(f"'{key}' must be a boolean, got {raw!r}")


def load_config(path, command: str | None = None) -> RunConfig:
    """Read an INI config; ``command`` selects the section (default: [run] command)."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    run = dict(parser["run"]) if parser.has_section("run") else {}
    cmd = command or run.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown or missing command {cmd!r}; expected one of {', '.join(COMMANDS)}")
    if run.get("command") and command and run["command"] != command:
        raise ConfigError(f"config is for '{run['command']}', not '{command}'")
    if not parser.has_section(cmd):
        raise ConfigError(f"config has no [{cmd}] section")
    seed = run.get("seed", "0").strip()
    try:
        seed_val = int(seed)
    except ValueError:
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= seed_val < 2**64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    out = Path(run.get("output_dir", "out"))
    return RunConfig(cmd, dict(parser[cmd]), out, seed_val, str(path))
