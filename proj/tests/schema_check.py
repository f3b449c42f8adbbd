"""Runs every CLI command on the bundled map and validates its JSON output against data/schemas."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource


def main() -> int:
    cli, data = pathlib.Path(sys.argv[1]), pathlib.Path(sys.argv[2])
    schemas = {p.name: json.loads(p.read_text()) for p in (data / "schemas").glob("*.schema.json")}
    registry = Registry().with_resources(
        [(name, Resource.from_contents(s)) for name, s in schemas.items()]
        + [("semworld/1", Resource.from_contents(schemas["world.schema.json"]))]
    )

    def check(name: str, doc) -> None:
        jsonschema.Draft202012Validator(schemas[name], registry=registry).validate(doc)

    failures = 0

    def case(label: str, fn) -> None:
        nonlocal failures
        try:
            fn()
            print(f"ok   {label}")
        except Exception as exc:  # report and keep going
            failures += 1
            print(f"FAIL {label}: {exc}")

    def run(*args: str, expect: int = 0) -> subprocess.CompletedProcess:
        proc = subprocess.run([str(cli), *args], capture_output=True, text=True)
        if proc.returncode != expect:
            raise RuntimeError(f"exit {proc.returncode} (want {expect}): {proc.stderr.strip()}")
        return proc

    with tempfile.TemporaryDirectory() as tmp:
        t = pathlib.Path(tmp)
        pgm = data / "two_rooms.pgm"
        truth = data / "two_rooms.json"

        case("bundled world", lambda: check("world.schema.json", json.loads(truth.read_text())))

        def extract():
            run("extract", "--map", str(pgm), "--out", str(t / "w.json"), "--trace", str(t / "trace.ndjson"),
                "--iters", "2000", "--seed", "3")
            check("world.schema.json", json.loads((t / "w.json").read_text()))
            check("metrics.schema.json", json.loads((t / "w.metrics.json").read_text()))
            lines = (t / "trace.ndjson").read_text().splitlines()
            if not lines:
                raise RuntimeError("empty trace")
            for line in lines:
                check("trace.schema.json", json.loads(line))

        case("extract world, metrics and trace", extract)
        case("score report", lambda: check(
            "metrics.schema.json", json.loads(run("score", "--map", str(pgm), "--world", str(truth)).stdout)))
        case("detections", lambda: check(
            "detections.schema.json", json.loads(run("detect", "--map", str(pgm)).stdout)))

        def synth_copy():
            run("synth", "--world", str(truth), "--out", str(t / "s.pgm"), "--world-out", str(t / "s.json"))
            check("world.schema.json", json.loads((t / "s.json").read_text()))

        case("synth world copy", synth_copy)
        case("io error report", lambda: check(
            "error.schema.json",
            json.loads(run("extract", "--map", str(t / "missing.pgm"), "--out", str(t / "x.json"), expect=2).stderr)))

    print(f"{failures} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
