"""Manifest runner: reproducible, resumable batch pipelines.

A manifest is a JSON file

    {
      "config": "path/to/config.json",   # optional, injected as --config
      "seed": 42,
      "out_dir": "runs/demo",
      "steps": [
        {"name": "synth-a", "command": "synth",
         "args": {"power-mw": 2.0, "prefix": "a"},
         "inputs": [], "outputs": ["a_high_ifg.rkf", ...]},
        ...
      ]
    }

Step args map CLI flags (without the leading dashes) to values; boolean
true means the flag is present.  Output paths are relative to out_dir and
input paths relative to the manifest.  Each step draws its own seed from
the manifest seed through a named substream, so reruns are byte-identical
and independent steps stay decoupled.

A step is skipped when its stamp (command, args, config content, declared
input content, derived seed) and all recorded output hashes are unchanged.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import ConfigError
from .utils import atomic_write_text, file_sha256, substream_seed

STATE_FILE = ".rydkerr_state.json"


def _args_to_argv(command: str, args: dict, out_dir: Path,
                  config: str | None, seed: int) -> list[str]:
    argv = [command, "--out", str(out_dir)]
    if config and "config" not in args:
        argv += ["--config", config]
    if "seed" not in args:
        argv += ["--seed", str(seed)]
    for key, value in args.items():
        flag = f"--{key}"
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif isinstance(value, list):
            for item in value:
                argv += [flag, str(item)]
        else:
            argv += [flag, str(value)]
    return argv


def _step_stamp(command: str, args: dict, config_path: str | None,
                input_paths: list[Path], seed: int) -> str:
    digest = hashlib.sha256()
    digest.update(command.encode())
    digest.update(json.dumps(args, sort_keys=True).encode())
    digest.update(str(seed).encode())
    if config_path:
        digest.update(file_sha256(config_path).encode())
    for path in input_paths:
        digest.update(str(path).encode())
        digest.update(file_sha256(path).encode())
    return digest.hexdigest()


def run_manifest(manifest_path, force: bool = False) -> int:
    from . import cli  # deferred to avoid an import cycle

    manifest_path = Path(manifest_path)
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    for key in ("out_dir", "steps"):
        if key not in manifest:
            raise ConfigError(f"manifest is missing the '{key}' key")
    base = manifest_path.parent
    out_dir = Path(manifest["out_dir"])
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    master_seed = int(manifest.get("seed", 0))
    config = manifest.get("config")
    if config:
        config = str(base / config) if not Path(config).is_absolute() else config

    state_path = out_dir / STATE_FILE
    state = {}
    if state_path.exists():
        with open(state_path, "r", encoding="utf-8") as fh:
            state = json.load(fh)

    names = [step.get("name") for step in manifest["steps"]]
    if len(set(names)) != len(names) or None in names:
        raise ConfigError("every manifest step needs a unique 'name'")

    failures = 0
    for step in manifest["steps"]:
        name = step["name"]
        command = step.get("command")
        if command not in ("spectrum", "synth", "extract", "fit"):
            raise ConfigError(f"step {name}: unknown command {command!r}")
        args = dict(step.get("args", {}))
        seed = substream_seed(master_seed, name)
        inputs = [base / p if not Path(p).is_absolute() else Path(p)
                  for p in step.get("inputs", [])]
        outputs = [out_dir / p for p in step.get("outputs", [])]
        missing = [p for p in inputs if not p.exists()]
        if missing:
            raise ConfigError(f"step {name}: missing inputs {missing}")

        stamp = _step_stamp(command, args, config, inputs, seed)
        recorded = state.get(name, {})
        if (not force and recorded.get("stamp") == stamp
                and all(Path(p).exists() and file_sha256(p) == h
                        for p, h in recorded.get("outputs", {}).items())):
            print(f"[{name}] up to date, skipped")
            continue

        argv = _args_to_argv(command, args, out_dir, config, seed)
        print(f"[{name}] rydkerr {' '.join(argv)}")
        code = cli.main(argv)
        if code != 0:
            print(f"[{name}] failed with exit code {code}")
            failures += 1
            state.pop(name, None)
            break
        out_hashes = {str(p): file_sha256(p) for p in outputs if p.exists()}
        state[name] = {"stamp": stamp, "outputs": out_hashes}
        atomic_write_text(state_path, json.dumps(state, indent=2, sort_keys=True) + "\n")

    receipt = {"seed": master_seed, "completed": sorted(state),
               "failures": failures}
    atomic_write_text(out_dir / "manifest_receipt.json",
                      json.dumps(receipt, indent=2, sort_keys=True) + "\n")
    return 0 if failures == 0 else 1
