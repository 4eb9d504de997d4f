"""
The command-line pipeline on a small corpus
===========================================

Runs ``python3 -m qablueprint`` over the worked example in a scratch
directory: annotate, serialize, parse the targets back as if they were model
decodes, edit the plans, evaluate and print corpus statistics.  Each step
reads JSONL and writes JSONL, so intermediate files can be inspected.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

data = json.loads((Path(__file__).parent / "data" / "shelby.json").read_text())
work = Path(tempfile.mkdtemp(prefix="qablueprint-demo-"))
(work / "corpus.jsonl").write_text(json.dumps(data["record"]) + "\n")
(work / "fixtures.json").write_text(json.dumps(data["fixtures"]))
print("working in", work)


def run(*args):
    cmd = [sys.executable, "-m", "qablueprint", "--mock-fixtures", str(work / "fixtures.json"), *args]
    result = subprocess.run(cmd, cwd=work, capture_output=True, text=True)
    print(f"\n$ qablueprint {' '.join(args)}  -> exit {result.returncode}")
    if result.stderr.strip():
        print(result.stderr.strip())
    return result


def head(name, n=2):
    for line in (work / name).read_text().splitlines()[:n]:
        print("  " + line[:160] + (" ..." if len(line) > 160 else ""))


###############################################################################
# Annotate: the record gains a blueprint and its per-sentence grouping.
run("annotate", "corpus.jsonl", "-o", "annotated.jsonl")
row = json.loads((work / "annotated.jsonl").read_text())
print("  blueprint answers:", [p["answer"] for p in row["blueprint"]])
print("  sentence plans:", row["sentence_plans"])

###############################################################################
# Serialize iterative targets and parse them back.
run("serialize", "annotated.jsonl", "--variant", "iterative", "-o", "targets.jsonl")
head("targets.jsonl", 3)
run("parse", "targets.jsonl", "--variant", "iterative", "-o", "parsed.jsonl")
head("parsed.jsonl")

###############################################################################
# A decode that lost its summary marker is kept as a flagged placeholder and
# reported in the sidecar; the exit status is 2.
(work / "broken.jsonl").write_text(json.dumps({"example_id": "shelby", "text": "Plan: Ford; Who?"}) + "\n")
run("parse", "broken.jsonl", "--variant", "e2e", "-o", "broken.parsed.jsonl")
head("broken.parsed.jsonl.errors.jsonl")

###############################################################################
# Keep one pair per sentence and write prompts for regeneration.
run("control", "parsed.jsonl", "--corpus", "corpus.jsonl", "--q1", "-o", "q1.jsonl")
for line in (work / "q1.prompts.jsonl").read_text().splitlines():
    print("  prefix:", json.loads(line)["prefix"])

###############################################################################
# Evaluate the parsed output against the annotated references.  The mock
# entailment model only accepts sentences copied verbatim from the input, and
# this summary paraphrases, so faithfulness comes out 0.
run("evaluate", "parsed.jsonl", "annotated.jsonl", "-o", "reports.jsonl")
print((work / "aggregate.json").read_text())

###############################################################################
# Corpus statistics.
print(run("stats", "annotated.jsonl").stdout)
