"""End-to-end checks of the momentest executable.

usage: cli_test.py <momentest> <corpus dir> <report schema>
"""

import json
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

EXE, CORPUS, SCHEMA = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("MOMENTEST_SEED", None)
    full_env.update(env or {})
    return subprocess.run([EXE, *map(str, args)], capture_output=True, text=True, env=full_env)


class ExitCodes(unittest.TestCase):
    def test_success(self):
        self.assertEqual(run("validate", "--program", CORPUS / "vasicek.pp").returncode, 0)

    def test_rejected_verdict_is_still_success(self):
        r = run("run", "--program", CORPUS / "uniform.pp", "--var", "u", "--m", "6", "--support", "0,1")
        self.assertEqual(r.returncode, 0)
        self.assertEqual(json.loads(r.stdout)["verdicts"]["A_ME"], "NOT_REJECTED")

    def test_m_one_is_a_validation_error(self):
        r = run("run", "--program", CORPUS / "vasicek.pp", "--var", "r", "--m", "1")
        self.assertEqual(r.returncode, 2)
        err = json.loads(r.stderr)["error"]
        self.assertEqual(err["kind"], "ValidationError")
        self.assertEqual(err["stage"], "config")

    def test_syntax_error(self):
        with tempfile.TemporaryDirectory() as d:
            bad = Path(d) / "bad.pp"
            bad.write_text("x := 0 while true { x := x + }")
            r = run("validate", "--program", bad)
            self.assertEqual(r.returncode, 2)
            self.assertEqual(json.loads(r.stderr)["error"]["kind"], "SyntaxError")

    def test_unknown_flag(self):
        self.assertEqual(run("sample", "--program", CORPUS / "vasicek.pp", "--bogus").returncode, 2)

    def test_stage_failure(self):
        with tempfile.TemporaryDirectory() as d:
            prog = Path(d) / "blowup.pp"
            prog.write_text("x := 2 while true { x := x*x }")
            r = run("run", "--program", prog, "--var", "x", "--source", "empirical", "--n", "20")
            self.assertEqual(r.returncode, 1)
            err = json.loads(r.stderr)["error"]
            self.assertEqual(err["stage"], "sample")
            self.assertEqual(err["kind"], "NumericOverflow")

    def test_support_not_covering_the_spread(self):
        r = run("run", "--program", CORPUS / "vasicek.pp", "--var", "r", "--support", "5,6")
        self.assertEqual(r.returncode, 2)
        self.assertEqual(json.loads(r.stderr)["error"]["stage"], "estimate")

    def test_error_file_in_out_dir(self):
        with tempfile.TemporaryDirectory() as d:
            r = run("run", "--program", CORPUS / "vasicek.pp", "--var", "r", "--m", "1", "--out", d)
            self.assertEqual(r.returncode, 2)
            err = json.loads((Path(d) / "error.json").read_text())["error"]
            self.assertEqual(err["kind"], "ValidationError")


class Stages(unittest.TestCase):
    def test_vasicek_moments(self):
        r = run("moments", "--program", CORPUS / "vasicek.pp", "--var", "r", "--n", "100", "--m", "2")
        self.assertEqual(r.returncode, 0)
        values = json.loads(r.stdout)["values"]
        self.assertAlmostEqual(values[0], 0.2, places=12)
        self.assertAlmostEqual(values[1], 0.093333333333333, places=12)

    def test_sample_is_deterministic(self):
        args = ("sample", "--program", CORPUS / "vasicek.pp", "--n", "100", "--e", "3", "--seed", "7")
        a, b = run(*args), run(*args)
        self.assertEqual(a.returncode, 0)
        self.assertEqual(a.stdout, b.stdout)
        self.assertEqual(len(a.stdout.strip().splitlines()), 5)
        self.assertNotEqual(a.stdout, run(*args[:-1], "8").stdout)

    def test_seed_from_environment(self):
        args = ("sample", "--program", CORPUS / "vasicek.pp", "--e", "4")
        self.assertEqual(run(*args, "--seed", "9").stdout, run(*args, env={"MOMENTEST_SEED": "9"}).stdout)

    def test_gc_from_two_moments_is_gaussian(self):
        with tempfile.TemporaryDirectory() as d:
            m = Path(d) / "m.json"
            m.write_text(json.dumps({"var": "r", "values": [0.2, 0.04 + 0.16 / 3]}))
            r = run("estimate", "--moments", m, "--method", "gc")
            self.assertEqual(r.returncode, 0)
            est = json.loads(r.stdout)["estimate"]
            self.assertEqual(est["kind"], "GC")
            self.assertAlmostEqual(est["mu"], 0.2, places=14)
            self.assertAlmostEqual(est["sigma2"], 0.16 / 3, places=14)


class Composition(unittest.TestCase):
    def chain_matches_run(self, name, var, m, extra=()):
        program = CORPUS / f"{name}.pp"
        with tempfile.TemporaryDirectory() as d:
            full, chain = Path(d) / "run", Path(d) / "chain"
            common = ("--seed", "4", *extra)
            self.assertEqual(
                run("run", "--program", program, "--var", var, "--m", m, "--out", full, *common).returncode, 0)
            steps = [
                ("sample", "--program", program, "--out", chain, *common),
                ("moments", "--program", program, "--var", var, "--m", "8", "--out", chain, *common),
                ("estimate", "--moments", chain / "moments.json", "--samples", chain / "samples.csv",
                 "--var", var, "--m", m, "--out", chain, *common),
                ("gof", "--samples", chain / "samples.csv", "--var", var, "--me", chain / "estimate_me.json",
                 "--gc", chain / "estimate_gc.json", "--out", chain, *common),
            ]
            for step in steps:
                r = run(*step)
                self.assertEqual(r.returncode, 0, r.stderr)
            for f in ("samples.csv", "moments.json", "estimate_me.json", "estimate_gc.json", "gof.json"):
                self.assertEqual((chain / f).read_bytes(), (full / f).read_bytes(), f)

    def test_vasicek(self):
        self.chain_matches_run("vasicek", "r", "2")

    def test_pdp(self):
        self.chain_matches_run("pdp", "x", "3")

    def test_uniform_with_support(self):
        self.chain_matches_run("uniform", "u", "6", ("--support", "0,1"))


class Report(unittest.TestCase):
    def test_schema(self):
        import jsonschema

        schema = json.loads(SCHEMA.read_text())
        cases = [("vasicek", "r", "2", ()), ("pdp", "x", "3", ()), ("binomial", "x", "2", ()),
                 ("uniform", "u", "6", ("--support", "0,1"))]
        for name, var, m, extra in cases:
            r = run("run", "--program", CORPUS / f"{name}.pp", "--var", var, "--m", m, *extra)
            self.assertEqual(r.returncode, 0, r.stderr)
            jsonschema.validate(json.loads(r.stdout), schema)

    def test_threads_do_not_change_the_report(self):
        args = ("run", "--program", CORPUS / "stutteringp.pp", "--var", "s", "--seed", "3")
        self.assertEqual(run(*args, "--threads", "1").stdout, run(*args, "--threads", "4").stdout)


if __name__ == "__main__":
    unittest.main(argv=sys.argv[:1], verbosity=2)
