"""Runs every CLI subcommand on simulated data and validates the JSON outputs."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

itr, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])


def schema(name):
    return json.loads((schema_dir / f"{name}.schema.json").read_text())


def run(*args):
    proc = subprocess.run([itr, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"itr {' '.join(args)} failed ({proc.returncode}): {proc.stderr}")
    return proc.stdout


def check(name, doc):
    jsonschema.Draft202012Validator(schema(name)).validate(doc)
    print(f"ok {name}")


with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    sim = tmp / "sim"
    check("sim_meta", json.loads(run("simulate", "--out-dir", str(sim), "--seed", "2", "--n-general", "5000",
                                      "--n-target", "1000")))
    check("sim_meta", json.loads((sim / "sim_meta.json").read_text()))
    src, tgt = str(sim / "source.csv"), str(sim / "target.csv")
    check("calibration", json.loads(run("calibrate", "--source", src, "--target", tgt, "--out", str(tmp / "w.csv"))))
    check("ate", json.loads(run("estimate", "--source", src)))
    ga = json.loads(run("optimize", "--source", src, "--target", tgt, "--generations", "5", "--population-size", "30",
                        "--restarts", "1", "--rule-out", str(tmp / "rule.json")))
    check("ga_result", ga)
    check("rule", json.loads((tmp / "rule.json").read_text()))
    check("value", json.loads(run("value", "--rule", str(tmp / "rule.json"), "--source", src, "--target", tgt)))
    check("importance", json.loads(run("importance", "--rule", str(tmp / "rule.json"), "--data", tgt)))

    cfg = {"simulation": {"n_general": 5000, "n_target": 1000, "seed": 3},
           "ga": {"population_size": 30, "generations": 5, "restarts": 1},
           "output_dir": str(tmp / "run")}
    (tmp / "run.json").write_text(json.dumps(cfg))
    run("run", "--config", str(tmp / "run.json"), "--plot-data")
    report = json.loads((tmp / "run" / "report.json").read_text())
    check("report", report)
    check("run_config", report["config"])
    check("rule", json.loads((tmp / "run" / "rule.json").read_text()))

    bad = {"source": str(tmp / "missing.csv"), "output_dir": str(tmp / "bad")}
    (tmp / "bad.json").write_text(json.dumps(bad))
    proc = subprocess.run([itr, "run", "--config", str(tmp / "bad.json")], capture_output=True, text=True)
    assert proc.returncode == 2, proc.returncode
    check("report", json.loads((tmp / "bad" / "report.json").read_text()))
