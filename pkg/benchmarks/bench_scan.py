"""Benchmark the keyword-scanning kernel: compiled extension vs pure Python.

Generates a deterministic synthetic corpus resembling Java and YAML
sources, scans it for a fixed keyword set with both backends, verifies
they agree, and reports throughput.

    python3 benchmarks/bench_scan.py [--mb 8] [--repeats 5]
"""
import argparse
import random
import time

from dfdscan import _scan_py

try:
    from dfdscan import _scan
except ImportError:
    _scan = None

KEYWORDS = [
    "@FeignClient",
    "BCryptPasswordEncoder",
    "spring.data.mongodb.host",
    "RestTemplate",
    "@EnableZuulProxy",
    "password",
    "kafka",
    "server.port",
]

FILLER = [
    "public class %s implements Serializable {",
    "    private final %s %s;",
    "    return new ResponseEntity<>(%s, HttpStatus.OK);",
    "    logger.info(\"%s\");",
    "spring:",
    "  application:",
    "    name: %s",
    "  datasource:",
    "    url: jdbc:mysql://%s:3306/db",
    "       - %s",
]


def build_corpus(megabytes: float, rng: random.Random) -> str:
    target = int(megabytes * 1024 * 1024)
    words = ["order", "account", "gateway", "config", "billing", "user", "audit"]
    out = []
    size = 0
    while size < target:
        template = rng.choice(FILLER)
        name = "%s%s" % (rng.choice(words), rng.randrange(1000))
        line = template.replace("%s", name)
        if rng.random() < 0.02:
            line += "  // " + rng.choice(KEYWORDS)
        if rng.random() < 0.01:
            line += " " + rng.choice(KEYWORDS)
        out.append(line)
        size += len(line) + 1
    return "\n".join(out)


def line_starts_of(text: str) -> list[int]:
    starts = [0]
    for line in text.split("\n")[:-1]:
        starts.append(starts[-1] + len(line) + 1)
    return starts


def run(scan, text, starts, repeats):
    best = float("inf")
    matches = 0
    for _ in range(repeats):
        started = time.perf_counter()
        matches = 0
        for keyword in KEYWORDS:
            matches += len(scan(text, keyword, starts))
        best = min(best, time.perf_counter() - started)
    return best, matches


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mb", type=float, default=8.0, help="corpus size in MiB")
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats, best wins")
    parser.add_argument("--seed", type=int, default=20260822)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    text = build_corpus(args.mb, rng)
    starts = line_starts_of(text)
    scanned_mb = len(text) * len(KEYWORDS) / (1024 * 1024)
    print(
        "corpus: %.1f MiB, %d lines, %d keywords (%.1f MiB scanned per pass)"
        % (len(text) / (1024 * 1024), len(starts), len(KEYWORDS), scanned_mb)
    )

    pure_time, pure_matches = run(_scan_py.scan, text, starts, args.repeats)
    print(
        "pure python : %8.1f ms  %7.1f MiB/s  (%d matches)"
        % (pure_time * 1000, scanned_mb / pure_time, pure_matches)
    )

    if _scan is None:
        print("compiled    : not built (pip install -e . rebuilds it)")
        return 0

    for keyword in KEYWORDS:
        if _scan.scan(text, keyword, starts) != _scan_py.scan(text, keyword, starts):
            print("BACKENDS DISAGREE on %r" % keyword)
            return 1

    fast_time, fast_matches = run(_scan.scan, text, starts, args.repeats)
    print(
        "compiled    : %8.1f ms  %7.1f MiB/s  (%d matches)"
        % (fast_time * 1000, scanned_mb / fast_time, fast_matches)
    )
    print("speedup     : %.1fx" % (pure_time / fast_time))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
