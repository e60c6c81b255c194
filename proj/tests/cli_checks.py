#!/usr/bin/env python3
"""CLI behaviour: exit codes, pipelines, determinism and plot files.

usage: cli_checks.py <fuzzeval binary> <data dir> <work dir>
"""

import csv
import io
import json
import os
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET

CLI, DATA, WORK = sys.argv[1], sys.argv[2], sys.argv[3]
FIXTURE = os.path.join(DATA, "fixture.csv")
failures = []


def run(*args, stdin=None, env=None):
    e = dict(os.environ)
    e.pop("FUZZEVAL_SEED", None)
    if env:
        e.update(env)
    return subprocess.run([CLI, *args], input=stdin, capture_output=True, text=True, env=e, timeout=600)


def check(name, cond, extra=""):
    print(("ok   " if cond else "FAIL ") + name + (f"  ({extra})" if extra and not cond else ""))
    if not cond:
        failures.append(name)


def rows(text):
    return list(csv.reader(io.StringIO(text)))


shutil.rmtree(WORK, ignore_errors=True)
os.makedirs(WORK)


def work(name):
    return os.path.join(WORK, name)


# exit codes
check("help exits 0", run("--help").returncode == 0)
check("unknown subcommand is a usage error", run("frobnicate").returncode == 1)
check("missing required option is a usage error", run("compare", FIXTURE).returncode == 1)
check("missing file is a data error", run("validate", work("nope.csv")).returncode == 2)

with open(FIXTURE) as f:
    fixture_text = f.read()
lines = fixture_text.splitlines()
dup = "\n".join(lines + [lines[1]]) + "\n"
with open(work("dup.csv"), "w") as f:
    f.write(dup)
r = run("validate", work("dup.csv"))
check("duplicate trial is a data error", r.returncode == 2, r.stderr)
check("validate names the duplicate", "duplicate" in (r.stdout + r.stderr).lower(), r.stdout)
r = run("validate", FIXTURE)
check("fixture validates", r.returncode == 0 and r.stdout.startswith("ok: 1056 rows"), r.stdout + r.stderr)

# too few rows for the model
with open(work("tiny.csv"), "w") as f:
    f.write("\n".join(lines[:9]) + "\n")
r = run("regress", work("tiny.csv"), "--boot-reps", "100")
check("underdetermined regression is a compute error", r.returncode == 3, r.stderr)

# synth | regress pipeline
synth = run("synth", "--fixture")
check("synth to stdout", synth.returncode == 0 and synth.stdout == fixture_text)
reg = run("regress", "-", "--boot-reps", "300", "--seed", "5", stdin=synth.stdout)
table = rows(reg.stdout)
check("regress prints header and 20 terms", reg.returncode == 0 and table[0][0] == "term" and len(table) - 1 >= 20,
      reg.stderr)
check("regress summary on stderr", "R2 " in reg.stderr and "Durbin-Watson" in reg.stderr)
again = run("regress", "-", "--boot-reps", "300", "--seed", "5", "--threads", "3", stdin=synth.stdout)
check("regress is deterministic across runs and threads", again.stdout == reg.stdout)
env_seed = run("regress", FIXTURE, "--boot-reps", "300", env={"FUZZEVAL_SEED": "5"})
check("FUZZEVAL_SEED supplies the default seed", env_seed.stdout == reg.stdout)
other = run("regress", FIXTURE, "--boot-reps", "300", "--seed", "6")
check("different seed changes the intervals", other.stdout != reg.stdout)

# predict from a saved fit
fit = work("fit.json")
r = run("regress", FIXTURE, "--boot-reps", "100", "--fit-json", fit)
check("fit JSON written", r.returncode == 0 and os.path.exists(fit), r.stderr)
intercept = float([row for row in table if row[0] == "intercept"][0][1])
p = run("predict", fit, "--fuzzer", "libfuzzer")
got = float(p.stdout.strip().split(",")[1])
check("predict at reference levels equals the intercept", abs(got - intercept) < 1e-9, p.stdout)
p = run("predict", fit, "--fuzzer", "libfuzzer", "--versus", "aflplusplus", "--vary", "program_text_bytes")
out = dict(line.split(",", 1) for line in p.stdout.strip().splitlines())
check("crossover reported", p.returncode == 0 and "crossover_rank" in out and "ahead_above" in out, p.stdout)
p2 = run("predict", fit, "--fuzzer", "libfuzzer", "--set", "program_text_bytes=" + out["crossover_rank"])
p3 = run("predict", fit, "--fuzzer", "aflplusplus", "--set", "program_text_bytes=" + out["crossover_rank"])
a = float(p2.stdout.split(",")[1])
b = float(p3.stdout.split(",")[1])
check("predictions meet at the crossover", abs(a - b) < 1e-6, f"{a} vs {b}")
check("bad --set is a usage error", run("predict", fit, "--fuzzer", "afl", "--set", "x").returncode == 1)

# compare
r = run("compare", FIXTURE, "--program", "prog01")
t = rows(r.stdout)
check("compare table", r.returncode == 0 and t[0] == ["fuzzer", "versus", "a12", "magnitude", "p", "significant"]
      and len(t) == 13, r.stdout)
a12 = {(x[0], x[1]): float(x[2]) for x in t[1:]}
check("A12 is complementary", all(abs(a12[(i, j)] + a12[(j, i)] - 1) < 1e-12 for (i, j) in a12))
check("unknown program is a data error", run("compare", FIXTURE, "--program", "nope").returncode == 2)

# correlate with plot output
plots = work("corr")
r = run("correlate", FIXTURE, "--out-dir", plots)
t = rows(r.stdout)
check("correlate table", r.returncode == 0 and t[0] == ["property", "scope", "rho", "observations"], r.stderr)
sc = rows(open(os.path.join(plots, "scatter_init_coverage.csv")).read())
check("scatter CSV schema", sc[0] == ["property_rank", "perf_rank", "program", "fuzzer"] and len(sc) == 1057)
mn = rows(open(os.path.join(plots, "means_init_coverage.csv")).read())
check("means CSV schema", mn[0] == ["property_rank", "mean_perf_rank"] and len(mn) > 1)
svg = ET.parse(os.path.join(plots, "scatter_init_coverage.svg")).getroot()
ns = "{http://www.w3.org/2000/svg}"
pts = [c for c in svg.iter(ns + "circle") if c.get("class") == "pt"]
check("SVG parses with one circle per point", len(pts) == 1056, str(len(pts)))

# slopes
sl = work("slopes")
os.makedirs(sl)
r = run("slopes", FIXTURE, "--property", "init_coverage", "--boot-reps", "200", "--out-dir", sl)
t = rows(r.stdout)
check("slopes table", r.returncode == 0 and len(t) == 5 and t[0][3] == "slope", r.stderr)
lines_csv = rows(open(os.path.join(sl, "slopes_init_coverage_lines.csv")).read())
ok = True
for row in lines_csv[1:]:
    x0, y0, x1, y1, a0, b0 = map(float, row[1:7])
    ok &= abs(y0 - (a0 + b0 * x0)) < 1e-9 and abs(y1 - (a0 + b0 * x1)) < 1e-9
check("slope line endpoints lie on the fitted line", ok and len(lines_csv) == 5)
check("unknown property is a usage error", run("slopes", FIXTURE, "--property", "nope").returncode == 1)

# props
manifest = work("manifest.csv")
with open(manifest, "w") as f:
    f.write("seed_id,size_bytes,exec_ns,covered\na,100,10,1;2\nb,300,30,2;3\n")
r = run("props", "corpus", manifest)
props = dict(line.split("=") for line in r.stdout.split())
check("corpus properties", props.get("seed_count") == "2" and props.get("mean_seed_bytes") == "200"
      and props.get("mean_exec_ns") == "20" and props.get("init_coverage") == "3", r.stdout)
od = os.path.join(DATA, "objdump")
r = run("props", "program", "--headers", os.path.join(od, "sample.headers.txt"),
        "--disasm", os.path.join(od, "sample.disasm.txt"))
props = dict(line.split("=") for line in r.stdout.split())
want = json.load(open(os.path.join(od, "sample.expected.json")))
check("program properties", props.get("program_text_bytes") == str(want["text_bytes"]), r.stdout)

# sample-corpus
pool = work("pool.txt")
with open(pool, "w") as f:
    f.write("\n".join(f"seed{i}" for i in range(500)) + "\n")
s1 = run("sample-corpus", pool, "--seed", "3").stdout.split()
s2 = run("sample-corpus", pool, "--seed", "3").stdout.split()
check("sample-corpus is seeded and duplicate-free", s1 == s2 and len(set(s1)) == len(s1) and len(s1) >= 1)

# report
rd = work("report")
r = run("report", FIXTURE, "--boot-reps", "200", "--seed", "9", "--out-dir", rd)
check("report exits 0", r.returncode == 0, r.stderr)
rep = json.load(open(os.path.join(rd, "report.json")))
check("report JSON lists its plot files",
      all(os.path.exists(os.path.join(rd, p)) for p in rep["plot_files"]) and len(rep["plot_files"]) == 23)
check("report text matches stdout", open(os.path.join(rd, "report.txt")).read() == r.stdout)

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
