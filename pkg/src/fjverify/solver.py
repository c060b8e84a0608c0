"""External SMT solver processes: discovery, one-shot runs, and sessions.

The solver is any executable that accepts SMT-LIB2 v2.6 text on standard
input and answers on standard output. Discovery prefers a native ``z3``
binary and falls back to the bundled Node.js driver for the ``z3-solver``
npm package (Z3 compiled to WebAssembly). Both back ends receive a small
prelude selecting Z3's legacy simplex core, which is dramatically faster on
these unrolled-dynamics problems; the prelude is driver configuration, not
part of the emitted scripts.

Interactive sessions synchronize on an echo marker: each write ends with
``(echo "[[sync]]")`` and the reader consumes lines until the marker comes
back. Incremental check-sat / get-value / blocking-clause loops run in one
process, which matters because the WASM back end pays about a second of
startup per process.
"""

from __future__ import annotations

import functools
import os
import queue
import re
import shlex
import shutil
import subprocess
import threading
from dataclasses import dataclass
from importlib import resources

SYNC_MARKER = "[[sync]]"
SYNC_LINE = f'(echo "{SYNC_MARKER}")'
DEFAULT_TIMEOUT_S = 300

Z3_PRELUDE = ("(set-option :smt.arith.solver 2)",)


class SolverNotFoundError(RuntimeError):
    pass


class SolverOutputError(RuntimeError):
    pass


class SolverTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    command: tuple[str, ...]
    prelude: tuple[str, ...] = ()
    name: str = "solver"

    def describe(self) -> str:
        return f"{self.name}: {' '.join(self.command)}"


def bundled_shim_path() -> str:
    return str(resources.files("fjverify.solvers").joinpath("z3wasm.js"))


def discover_solver(command: str | None = None) -> SolverConfig:
    """Resolve the solver command: explicit > $FJVERIFY_SOLVER > z3 > bundled shim."""
    spec = command or os.environ.get("FJVERIFY_SOLVER")
    if spec:
        argv = tuple(shlex.split(spec))
        prelude = Z3_PRELUDE if any("z3" in part for part in argv) else ()
        return SolverConfig(command=argv, prelude=prelude, name="configured")
    z3 = shutil.which("z3")
    if z3:
        return SolverConfig(command=(z3, "-smt2", "-in"), prelude=Z3_PRELUDE, name="z3")
    node = shutil.which("node")
    if node:
        shim = bundled_shim_path()
        return SolverConfig(command=(node, shim), prelude=Z3_PRELUDE, name="z3-wasm")
    raise SolverNotFoundError(
        "no SMT solver found: install z3, or node plus the z3-solver npm package, "
        "or set FJVERIFY_SOLVER")


@functools.lru_cache(maxsize=8)
def have_solver(command: str | None = None) -> bool:
    try:
        cfg = discover_solver(command)
    except SolverNotFoundError:
        return False
    if cfg.name == "z3-wasm":
        # the shim needs the npm package to actually resolve
        probe = subprocess.run(
            list(cfg.command), input='(check-sat)\n', capture_output=True,
            text=True, timeout=120)
        return probe.returncode == 0 and "sat" in probe.stdout
    return True


@dataclass
class SolverResult:
    status: str  # sat | unsat | unknown
    model_text: str | None
    raw: str


_STATUS_RE = re.compile(r"^(sat|unsat|unknown)\s*$", re.MULTILINE)


def _parse_one_shot(raw: str) -> SolverResult:
    m = _STATUS_RE.search(raw)
    if not m:
        raise SolverOutputError(f"no sat/unsat/unknown in solver output:\n{raw[:2000]}")
    status = m.group(1)
    model_text = raw[m.end():].strip() if status == "sat" else None
    return SolverResult(status=status, model_text=model_text or None, raw=raw)


def run_solver(script: str, solver: SolverConfig | str | None = None,
               timeout_s: int = DEFAULT_TIMEOUT_S) -> SolverResult:
    """One-shot run: feed a complete script, return verdict and model text.

    A timeout or an explicit solver "unknown" both come back as status
    ``unknown``; spawn failures and unparseable output raise.
    """
    cfg = solver if isinstance(solver, SolverConfig) else discover_solver(solver)
    payload = "\n".join([*cfg.prelude, script])
    try:
        proc = subprocess.Popen(
            list(cfg.command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.PIPE, text=True)
    except OSError as e:
        raise SolverNotFoundError(f"cannot launch {cfg.describe()}: {e}") from e
    try:
        out, err = proc.communicate(payload, timeout=timeout_s)
    except subprocess.TimeoutExpired:
        proc.kill()
        proc.wait()
        return SolverResult(status="unknown", model_text=None, raw="(timeout)")
    if proc.returncode != 0 and not _STATUS_RE.search(out):
        raise SolverOutputError(
            f"{cfg.describe()} exited with {proc.returncode}: {err[:2000]}")
    return _parse_one_shot(out)


class SmtSession:
    """A persistent interactive solver process.

    ``exchange`` writes commands followed by the sync echo and returns the
    lines produced before the marker. On timeout the process is killed and
    the session becomes unusable.
    """

    def __init__(self, solver: SolverConfig | str | None = None):
        self.config = solver if isinstance(solver, SolverConfig) else discover_solver(solver)
        try:
            self._proc = subprocess.Popen(
                list(self.config.command), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True, bufsize=1)
        except OSError as e:
            raise SolverNotFoundError(f"cannot launch {self.config.describe()}: {e}") from e
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self.dead = False
        if self.config.prelude:
            self.exchange("\n".join(self.config.prelude))

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(None)

    def exchange(self, text: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> list[str]:
        if self.dead:
            raise RuntimeError("solver session is no longer usable")
        self._proc.stdin.write(text + "\n" + SYNC_LINE + "\n")
        self._proc.stdin.flush()
        lines: list[str] = []
        while True:
            try:
                line = self._lines.get(timeout=timeout_s)
            except queue.Empty:
                self.kill()
                raise SolverTimeout(f"no reply within {timeout_s}s") from None
            if line is None:
                self.kill()
                raise SolverOutputError("solver process ended mid-exchange")
            if line.strip() == SYNC_MARKER:
                return lines
            lines.append(line)

    def check_sat(self, timeout_s: float = DEFAULT_TIMEOUT_S) -> str:
        lines = [l for l in self.exchange("(check-sat)", timeout_s) if l.strip()]
        if not lines or lines[-1] not in ("sat", "unsat", "unknown"):
            raise SolverOutputError(f"unexpected check-sat reply: {lines!r}")
        return lines[-1]

    def get_int_values(self, names: list[str], timeout_s: float = DEFAULT_TIMEOUT_S) -> dict[str, int]:
        reply = " ".join(self.exchange(f"(get-value ({' '.join(names)}))", timeout_s))
        pairs = dict(re.findall(r"\(\s*([A-Za-z0-9_]+)\s+(-?\d+)\s*\)", reply))
        missing = [n for n in names if n not in pairs]
        if missing:
            raise SolverOutputError(f"values missing from reply for {missing}: {reply[:500]}")
        return {n: int(pairs[n]) for n in names}

    def assert_text(self, text: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> None:
        out = self.exchange(text, timeout_s)
        errors = [l for l in out if "error" in l]
        if errors:
            raise SolverOutputError(f"solver rejected input: {errors[:3]}")

    def reset(self) -> None:
        self.exchange("(reset)")
        if self.config.prelude:
            self.exchange("\n".join(self.config.prelude))

    def kill(self) -> None:
        self.dead = True
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def close(self) -> None:
        if not self.dead and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self.dead = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def parse_define_fun_ints(model_text: str) -> dict[str, int]:
    """Extract integer-valued define-funs from a (get-model) block."""
    out: dict[str, int] = {}
    for name, neg, digits in re.findall(
            r"\(define-fun\s+([A-Za-z0-9_]+)\s*\(\)\s*Int\s*(?:\(\s*-\s*(\d+)\s*\)|(-?\d+))",
            model_text):
        out[name] = -int(neg) if neg else int(digits)
    return out
