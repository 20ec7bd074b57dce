import json
import subprocess
import sys

LEXICON = (
    "Sartaj Aziz\tPER\n"
    "Sara\tPER\n"
    "Multan\tLOC\n"
    "Lahore\tLOC\n"
    "State Bank\tORG\n"
)


def spawn_sidecar(*args: str) -> subprocess.Popen:
    return subprocess.Popen(
        [sys.executable, "-m", "scorer_sidecar", *args],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
    )


def roundtrip(proc: subprocess.Popen, record: dict) -> dict:
    proc.stdin.write((json.dumps(record) + "\n").encode())
    proc.stdin.flush()
    line = proc.stdout.readline()
    assert line, "sidecar closed the stream instead of answering"
    return json.loads(line)
