"""Solver portfolio: configuration, dispatch, resource limits.

Two backend kinds. `z3wasm` drives the z3 wasm build through a persistent
node worker (one process per configuration, scripts streamed over a line
protocol), which amortizes the wasm startup cost across a whole bench run.
`process` runs an arbitrary external solver per goal from a command
template with a `{script}` placeholder, under OS resource limits.

A goal counts as discharged when any configured solver answers unsat for
its negation. Verdict lists are sorted by (goal, solver) so reports do not
depend on scheduling.

The registry file is TOML, read by a small built-in reader covering the
subset the registry needs (tables, strings, integers, booleans, string
arrays); the interpreter this targets predates tomllib.
"""

from __future__ import annotations

import json
import os
import queue
import re
import shutil
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

_WORKER = Path(__file__).parent / "data" / "z3worker.mjs"


class SolverError(Exception):
    pass


@dataclass(frozen=True)
class SolverConfig:
    name: str
    kind: str = "z3wasm"          # z3wasm | process
    options: tuple = ()           # z3wasm: global params, name=value
    command: str = ""             # process: template, {script} {timeout_ms}
    timeout_secs: float = 60.0
    memory_mb: int = 6000

    def __post_init__(self):
        if self.timeout_secs <= 0 or self.memory_mb <= 0:
            raise SolverError("limits must be positive: %s" % self.name)
        if self.kind not in ("z3wasm", "process"):
            raise SolverError("unknown solver kind %r" % self.kind)
        if self.kind == "process" and "{script}" not in self.command:
            raise SolverError("%s: command needs a {script} placeholder"
                              % self.name)


@dataclass
class Verdict:
    goal: str
    solver: str
    status: str                   # valid | countermodel | unknown | timeout | error
    time_s: float
    detail: str = ""

    def as_dict(self):
        d = {"goal": self.goal, "solver": self.solver,
             "status": self.status, "time_s": round(self.time_s, 3)}
        if self.detail:
            d["detail"] = self.detail
        return d


DEFAULT_CONFIGS = (
    SolverConfig("z3-em", "z3wasm",
                 ("smt.auto_config=false", "smt.mbqi=false",
                  "smt.ematching=true")),
    SolverConfig("z3-auto", "z3wasm", ()),
)


# ------------------------------------------------------------ registry

_KEY = re.compile(r"^[A-Za-z0-9_-]+$")


def read_toml(text: str) -> dict:
    """Tables, string/int/bool values and flat string arrays; enough for
    the solver registry."""
    root: dict = {}
    cur = root
    for lno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise SolverError("line %d: bad table header" % lno)
            cur = root
            for part in line[1:-1].strip().split("."):
                part = part.strip()
                if not _KEY.match(part):
                    raise SolverError("line %d: bad table name" % lno)
                cur = cur.setdefault(part, {})
                if not isinstance(cur, dict):
                    raise SolverError("line %d: table clashes with value"
                                      % lno)
            continue
        if "=" not in line:
            raise SolverError("line %d: expected key = value" % lno)
        key, _, val = line.partition("=")
        key = key.strip()
        if not _KEY.match(key):
            raise SolverError("line %d: bad key %r" % (lno, key))
        cur[key] = _toml_value(val.strip(), lno)
    return root


def _toml_value(v: str, lno: int):
    if v.startswith('"'):
        if not v.endswith('"') or len(v) < 2:
            raise SolverError("line %d: unterminated string" % lno)
        body = v[1:-1]
        if '"' in body.replace('\\"', ""):
            raise SolverError("line %d: trailing junk after string" % lno)
        return body.replace('\\"', '"').replace("\\\\", "\\")
    if v.startswith("["):
        if not v.endswith("]"):
            raise SolverError("line %d: arrays must be single-line" % lno)
        inner = v[1:-1].strip()
        if not inner:
            return []
        out = []
        for item in _split_array(inner, lno):
            out.append(_toml_value(item, lno))
        return out
    if v in ("true", "false"):
        return v == "true"
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        raise SolverError("line %d: bad value %r" % (lno, v))


def _split_array(inner: str, lno: int) -> list:
    out, cur, instr, esc = [], [], False, False
    for ch in inner:
        if instr:
            cur.append(ch)
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                instr = False
        elif ch == '"':
            cur.append(ch)
            instr = True
        elif ch == ",":
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if instr:
        raise SolverError("line %d: unterminated string in array" % lno)
    tail = "".join(cur).strip()
    if tail:
        out.append(tail)
    return out


def load_config(path: Optional[str] = None):
    """Configs plus default limits from a registry file; built-in
    portfolio when no path is given."""
    if path is None:
        return list(DEFAULT_CONFIGS)
    data = read_toml(Path(path).read_text())
    limits = data.get("limits", {})
    t = float(limits.get("timeout_secs", 60))
    m = int(limits.get("memory_mb", 6000))
    solvers = data.get("solver", {})
    if not isinstance(solvers, dict) or not solvers:
        raise SolverError("%s: no [solver.<name>] tables" % path)
    out = []
    for name in solvers:
        sec = solvers[name]
        out.append(SolverConfig(
            name,
            kind=sec.get("kind", "z3wasm"),
            options=tuple(sec.get("options", ())),
            command=sec.get("command", ""),
            timeout_secs=float(sec.get("timeout_secs", t)),
            memory_mb=int(sec.get("memory_mb", m)),
        ))
    return out


# ------------------------------------------------------------ z3 worker

class _Z3Worker:
    """One persistent node process running the wasm solver."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.proc = None
        self.seq = 0
        self.warnings: list = []

    def start(self):
        opts = list(self.cfg.options)
        names = [o.split("=", 1)[0] for o in opts]
        if "memory_max_size" not in names:
            opts.append("memory_max_size=%d" % self.cfg.memory_mb)
        self.proc = subprocess.Popen(
            ["node", str(_WORKER)] + opts,
            stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True)
        msg = self._read(deadline=time.monotonic() + 120)
        while msg is not None and msg.get("id") == -1:
            self.warnings.append(msg.get("detail", "worker warning"))
            msg = self._read(deadline=time.monotonic() + 120)
        if msg is None or msg.get("status") != "ready":
            self.stop()
            raise SolverError("%s: z3 worker failed to start"
                              % self.cfg.name)

    def stop(self):
        if self.proc is not None:
            self.proc.kill()
            self.proc.wait()
            self.proc = None

    def _read(self, deadline: float) -> Optional[dict]:
        """Next protocol line, or None on worker death/deadline."""
        timer = None
        wait = deadline - time.monotonic()
        if wait <= 0:
            return None
        timer = threading.Timer(wait, self.proc.kill)
        timer.start()
        try:
            while True:
                line = self.proc.stdout.readline()
                if not line:
                    return None
                if line.startswith("@@verkit@@"):
                    try:
                        return json.loads(line[len("@@verkit@@"):])
                    except ValueError:
                        return None
        finally:
            timer.cancel()

    def solve(self, script: str) -> tuple:
        """(status, time_s, detail); restarts the worker after a death."""
        timeout = self.cfg.timeout_secs
        for attempt in (0, 1):
            if self.proc is None or self.proc.poll() is not None:
                self.start()
            self.seq += 1
            req = {"id": self.seq, "script": script,
                   "timeout_ms": int(timeout * 1000)}
            t0 = time.monotonic()
            try:
                self.proc.stdin.write(json.dumps(req) + "\n")
                self.proc.stdin.flush()
            except (BrokenPipeError, OSError):
                self.stop()
                continue
            msg = self._read(deadline=t0 + timeout + 15)
            dt = time.monotonic() - t0
            if msg is None:
                self.stop()
                if dt >= timeout:
                    return ("timeout", min(dt, timeout), "")
                continue
            if msg.get("id") != self.seq:
                self.stop()
                continue
            status = msg.get("status", "error")
            dt = msg.get("time_ms", dt * 1000) / 1000.0
            if status == "unsat":
                return ("valid", dt, "")
            if status == "sat":
                return ("countermodel", dt, "")
            if status == "unknown":
                if dt >= timeout * 0.9:
                    return ("timeout", min(dt, timeout), "")
                return ("unknown", dt, "")
            return ("error", dt, msg.get("detail", ""))
        return ("error", 0.0, "worker died twice")


class _ProcessSolver:
    """Command-template solver, one subprocess per goal."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.warnings: list = []

    def start(self):
        pass

    def stop(self):
        pass

    def solve(self, script: str) -> tuple:
        cfg = self.cfg
        with tempfile.NamedTemporaryFile(
                "w", suffix=".smt2", delete=False) as f:
            f.write(script)
            path = f.name
        cmd = cfg.command.format(
            script=path, timeout_ms=int(cfg.timeout_secs * 1000),
            timeout_s=int(cfg.timeout_secs))
        limit_as = cfg.memory_mb << 20

        def limits():
            try:
                import resource
                resource.setrlimit(resource.RLIMIT_AS, (limit_as, limit_as))
            except Exception:
                pass

        t0 = time.monotonic()
        try:
            cp = subprocess.run(
                cmd, shell=True, capture_output=True, text=True,
                timeout=cfg.timeout_secs + 10, preexec_fn=limits)
            out = cp.stdout
        except subprocess.TimeoutExpired:
            return ("timeout", cfg.timeout_secs, "")
        finally:
            os.unlink(path)
        dt = time.monotonic() - t0
        last = None
        for line in out.splitlines():
            tok = line.strip()
            if tok in ("sat", "unsat", "unknown"):
                last = tok
        if last == "unsat":
            return ("valid", dt, "")
        if last == "sat":
            return ("countermodel", dt, "")
        if last == "unknown":
            status = "timeout" if dt >= cfg.timeout_secs * 0.9 else "unknown"
            return (status, dt, "")
        err = (cp.stderr or out).strip().splitlines()
        return ("error", dt, err[-1][:200] if err else "no solver output")


# ------------------------------------------------------------ portfolio

class Portfolio:
    """Runs goals against every configured solver. Workers are created
    lazily, one pool per z3wasm config, `jobs` wide."""

    def __init__(self, configs=None, jobs: int = 1):
        self.configs = list(configs) if configs else list(DEFAULT_CONFIGS)
        if len({c.name for c in self.configs}) != len(self.configs):
            raise SolverError("duplicate solver names")
        self.jobs = max(1, jobs)
        self._pools: dict = {}
        self._lock = threading.Lock()

    # -- lifecycle

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        for pool in self._pools.values():
            while True:
                try:
                    pool.get_nowait().stop()
                except queue.Empty:
                    break
        self._pools.clear()

    def validate(self) -> list:
        """Fail fast on unresolvable solvers; returns warnings."""
        warnings = []
        for cfg in self.configs:
            if cfg.kind == "process":
                exe = cfg.command.split()[0]
                if shutil.which(exe) is None:
                    raise SolverError("%s: %r not found on PATH"
                                      % (cfg.name, exe))
            else:
                if shutil.which("node") is None:
                    raise SolverError("%s: node not found on PATH"
                                      % cfg.name)
                if not _WORKER.exists():
                    raise SolverError("worker script missing: %s" % _WORKER)
                warnings.append(
                    "%s: memory limit enforced by the solver's own "
                    "allocator cap, not an OS rlimit" % cfg.name)
        return warnings

    # -- scheduling

    def _worker(self, cfg: SolverConfig):
        with self._lock:
            pool = self._pools.setdefault(cfg.name, queue.Queue())
        try:
            return pool.get_nowait()
        except queue.Empty:
            if cfg.kind == "process":
                return _ProcessSolver(cfg)
            return _Z3Worker(cfg)

    def _release(self, cfg: SolverConfig, worker):
        self._pools[cfg.name].put(worker)

    def _run_one(self, goal_name: str, script: str,
                 cfg: SolverConfig) -> Verdict:
        w = self._worker(cfg)
        try:
            status, dt, detail = w.solve(script)
        finally:
            self._release(cfg, w)
        return Verdict(goal_name, cfg.name, status, dt, detail)

    def solve_goal(self, goal_name: str, script: str,
                   first_only: bool = False) -> list:
        """All solvers on one goal, config order; `first_only` stops at
        the first valid answer."""
        out = []
        for cfg in self.configs:
            v = self._run_one(goal_name, script, cfg)
            out.append(v)
            if first_only and v.status == "valid":
                break
        return out

    def run(self, items, first_only: bool = False) -> list:
        """items: [(goal_name, script)]. Returns verdicts sorted by
        (goal, solver) regardless of scheduling."""
        verdicts = []
        if self.jobs == 1:
            for goal_name, script in items:
                verdicts.extend(self.solve_goal(goal_name, script,
                                                first_only))
        else:
            with ThreadPoolExecutor(max_workers=self.jobs) as ex:
                futs = [ex.submit(self.solve_goal, g, s, first_only)
                        for g, s in items]
                for f in futs:
                    verdicts.extend(f.result())
        order = {c.name: i for i, c in enumerate(self.configs)}
        verdicts.sort(key=lambda v: (v.goal, order[v.solver]))
        return verdicts


def discharged(verdicts) -> dict:
    """goal -> True when any solver proved it."""
    out: dict = {}
    for v in verdicts:
        out[v.goal] = out.get(v.goal, False) or v.status == "valid"
    return out
