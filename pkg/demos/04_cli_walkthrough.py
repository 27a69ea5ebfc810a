"""The command line tool: generate a stream, replay it, compare with static baselines."""
import json
import tempfile
from pathlib import Path

from dyncoreset.cli import main

tmp = Path(tempfile.mkdtemp())
stream = tmp / "stream.txt"
out = tmp / "run.jsonl"

# a stream of inserts and deletes with a query every 200 ops
main(["gen", "random_mix", "--n", "1000", "--k", "3", "--seed", "2", "--query-every", "200", "--out", str(stream)])
print(stream.read_text().splitlines()[:3])

# replay it; --no-timing makes the output byte-reproducible
main(["run", str(stream), "--k", "3", "--exact", "--no-timing", "--out", str(out)])
records = [json.loads(line) for line in out.read_text().splitlines()]
for r in records:
    if r["type"] == "query":
        print("query at op %d: size %d coreset %d estimated %.1f exact %.1f"
              % (r["index"], r["size"], r["coreset_size"], r["estimated_cost"], r["exact_cost"]))
print("summary:", records[-1])

# the bench subcommand reruns the stream against a static solver
bench = tmp / "bench.json"
main(["bench", str(stream), "--k", "3", "--cap", "20", "--out", str(bench)])
print(json.dumps(json.loads(bench.read_text()), indent=1)[:600])
