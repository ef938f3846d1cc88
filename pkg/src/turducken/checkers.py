"""Executability checkers: external compiler commands and the in-core parse
proxy, plus order-preserving parallel fan-out.

A checker is any callable ``(source_text) -> CheckOutcome`` with a
``checker_id`` attribute.  External checkers write each candidate to its own
fresh temp directory, substitute the file path into the command template and
run it without a shell.  A command that cannot be spawned at all raises
:class:`CheckerUnavailableError` rather than returning executable=False, so
environments without the compiler skip instead of silently passing.
"""

from __future__ import annotations

import concurrent.futures
import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field

from .errors import CheckerUnavailableError, GrammarNotFoundError
from .grammar import available_grammars, parse
from .syntax_tree import DEFAULT_ERROR_KINDS, has_error

# Scaffold templates wrap a bare snippet into a compilable unit; the {body}
# slot is replaced verbatim.
PYTHON_SCAFFOLD = "{body}\n"
JAVA_SCAFFOLD = (
    "public class Candidate {\n"
    "    public static void main(String[] args) throws Exception {\n"
    "{body}\n"
    "    }\n"
    "}\n"
)

_DIAGNOSTIC_LIMIT = 4000


@dataclass(frozen=True)
class CheckOutcome:
    executable: bool
    diagnostics: str
    duration_ms: float
    checker_id: str

    def __post_init__(self):
        if self.duration_ms < 0:
            raise ValueError("duration must be non-negative")


@dataclass(frozen=True)
class ExternalCheckerConfig:
    """How to invoke an external compiler.

    ``command_template`` must contain the ``{file}`` placeholder exactly
    once; it is split shell-style and executed directly (no shell).
    ``workdir_template`` optionally names a directory copied into each fresh
    check dir (e.g. a build-tool project skeleton); ``scaffold_template``
    optionally wraps the snippet via its ``{body}`` slot.
    """

    command_template: str
    file_extension: str = ".py"
    success_exit_codes: frozenset[int] = frozenset({0})
    timeout_ms: float = 10_000.0
    workdir_template: str | None = None
    scaffold_template: str | None = None
    file_name: str = "candidate"
    env_overrides: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.command_template.count("{file}") != 1:
            raise ValueError("command_template must contain {file} exactly once")
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")


class ExternalChecker:
    """Compile-check via an external command per :class:`ExternalCheckerConfig`."""

    def __init__(self, cfg: ExternalCheckerConfig, checker_id: str | None = None):
        self.cfg = cfg
        self.checker_id = checker_id or f"cmd:{shlex.split(cfg.command_template)[0]}"

    def __call__(self, source_text: str) -> CheckOutcome:
        return check_external(self.cfg, source_text, checker_id=self.checker_id)


def check_external(
    cfg: ExternalCheckerConfig, source_text: str, checker_id: str | None = None
) -> CheckOutcome:
    """Run the configured command on the candidate; executable iff the exit
    code is in the success set within the timeout."""
    checker_id = checker_id or f"cmd:{shlex.split(cfg.command_template)[0]}"
    workdir = tempfile.mkdtemp(prefix="turducken-check-")
    started = time.perf_counter()
    try:
        if cfg.workdir_template:
            shutil.copytree(cfg.workdir_template, workdir, dirs_exist_ok=True)
        body = source_text
        if cfg.scaffold_template is not None:
            body = cfg.scaffold_template.replace("{body}", source_text)
        path = os.path.join(workdir, cfg.file_name + cfg.file_extension)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(body)
        argv = [arg.replace("{file}", path) for arg in shlex.split(cfg.command_template)]
        env = dict(os.environ)
        env.update(cfg.env_overrides)
        try:
            proc = subprocess.run(
                argv,
                capture_output=True,
                text=True,
                timeout=cfg.timeout_ms / 1000.0,
                cwd=workdir,
                env=env,
            )
        except subprocess.TimeoutExpired:
            return CheckOutcome(
                executable=False,
                diagnostics=f"timeout after {cfg.timeout_ms:.0f} ms",
                duration_ms=_elapsed_ms(started),
                checker_id=checker_id,
            )
        except (FileNotFoundError, PermissionError) as exc:
            raise CheckerUnavailableError(f"cannot spawn {argv[0]!r}: {exc}") from exc
        diagnostics = ((proc.stdout or "") + (proc.stderr or ""))[:_DIAGNOSTIC_LIMIT]
        return CheckOutcome(
            executable=proc.returncode in cfg.success_exit_codes,
            diagnostics=diagnostics,
            duration_ms=_elapsed_ms(started),
            checker_id=checker_id,
        )
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def _elapsed_ms(started: float) -> float:
    return (time.perf_counter() - started) * 1000.0


class ParseChecker:
    """Offline proxy: executable iff the parse tree carries no error sentinel.

    Weaker than a real compile check but needs no toolchain.
    """

    def __init__(self, grammar_id: str = "mini_python", error_kinds: frozenset[str] = DEFAULT_ERROR_KINDS):
        if grammar_id not in available_grammars():
            raise GrammarNotFoundError(
                f"unknown grammar {grammar_id!r}; available: {', '.join(available_grammars())}"
            )
        self.grammar_id = grammar_id
        self.error_kinds = error_kinds
        self.checker_id = f"parse:{grammar_id}"

    def __call__(self, source_text: str) -> CheckOutcome:
        started = time.perf_counter()
        tree = parse(source_text, self.grammar_id)
        return CheckOutcome(
            executable=not has_error(tree, self.error_kinds),
            diagnostics="",
            duration_ms=_elapsed_ms(started),
            checker_id=self.checker_id,
        )


def check_parse(source_text: str, grammar_id: str = "mini_python") -> CheckOutcome:
    return ParseChecker(grammar_id)(source_text)


class AcceptAllChecker:
    """Stub that marks everything executable; for demos and wiring tests."""

    checker_id = "accept-all"

    def __call__(self, source_text: str) -> CheckOutcome:
        return CheckOutcome(executable=True, diagnostics="", duration_ms=0.0, checker_id=self.checker_id)


def parallel_check_all(checker, candidates, max_workers: int | None = None) -> list[CheckOutcome]:
    """Check every candidate concurrently; outcomes are returned in input
    order regardless of completion order.

    Per-candidate failures are recorded in their outcome and never abort the
    batch; only :class:`CheckerUnavailableError` propagates (a missing
    compiler is systemic, not a property of one candidate).
    """
    candidates = list(candidates)
    if not candidates:
        return []
    max_workers = max_workers or min(len(candidates), os.cpu_count() or 4)
    checker_id = getattr(checker, "checker_id", "checker")

    def run_one(source: str) -> CheckOutcome:
        started = time.perf_counter()
        try:
            return checker(source)
        except CheckerUnavailableError:
            raise
        except Exception as exc:  # noqa: BLE001 - recorded per candidate
            return CheckOutcome(
                executable=False,
                diagnostics=f"checker error: {exc!r}",
                duration_ms=_elapsed_ms(started),
                checker_id=checker_id,
            )

    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run_one, candidates))
