"""End-to-end checks of the fbcrs binary.

Usage: test_cli.py FBCRS_BINARY DATA_DIR SCHEMA_DIR
"""

import csv
import io
import json
import os
import subprocess
import sys
import tempfile
import unittest

import jsonschema

BINARY = DATA = SCHEMAS = None


def run(*args, env=None):
    """Runs the binary; stdout keeps its raw line endings."""
    full_env = dict(os.environ)
    full_env.pop("FBCRS_SEED", None)
    if env:
        full_env.update(env)
    res = subprocess.run([BINARY, *args], capture_output=True, env=full_env, timeout=300)
    res.stdout = res.stdout.decode()
    res.stderr = res.stderr.decode()
    return res


def data(name):
    return os.path.join(DATA, name)


def load_schema(name):
    with open(os.path.join(SCHEMAS, name)) as f:
        return json.load(f)


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text, newline="")))


class ReportSchema(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.validator = jsonschema.Draft202012Validator(load_schema("report.schema.json"))

    def check(self, *args):
        res = run(*args, "--format", "json")
        self.assertEqual(res.returncode, 0, res.stderr)
        doc = json.loads(res.stdout)
        self.validator.validate(doc)
        return doc

    def test_constants(self):
        doc = self.check("constants")
        values = {row["name"]: row["value"] for row in doc["rows"]}
        self.assertAlmostEqual(values["fb-crs"], 0.622459331202, places=12)

    def test_lp_solve(self):
        doc = self.check("lp-solve", "--instance", data("single_unit_two_halves.json"), "--dual")
        self.assertAlmostEqual(doc["lpopt"], 0.75, places=9)
        self.assertEqual(len(doc["c_f"]), 2)

    def test_simulate_single_unit(self):
        doc = self.check("simulate-single-unit", "--instance", data("single_unit_uniform_11.json"),
                         "--trials", "20000", "--seed", "3")
        self.assertEqual(doc["inactive_acceptances"], 0)

    def test_simulate_knapsack_exact_and_mc(self):
        doc = self.check("simulate-knapsack", "--instance", data("knapsack_two_atoms.json"),
                         "--monitor")
        self.assertEqual(doc["monitor_violations"], 0)
        self.check("simulate-knapsack", "--instance", data("knapsack_two_atoms.json"),
                   "--mode", "mc", "--trials", "20000", "--seed", "1", "--replicas", "2000")

    def test_ration(self):
        doc = self.check("ration", "--instance", data("rationing_two_unit_agents.json"),
                         "--beta", data("beta_two_agents.json"))
        for row in doc["rows"]:
            self.assertAlmostEqual(row["expected_service"], 0.375, places=9)
        doc = self.check("ration", "--instance", data("rationing_with_type_one.json"))
        self.assertEqual(doc["path"], "knapsack")

    def test_dual_certificate(self):
        doc = self.check("dual-certificate", "--n", "3", "--rho", "1")
        self.assertTrue(doc["feasible"])
        self.assertAlmostEqual(doc["objective"], 1.12585, places=5)

    def test_sweep(self):
        for kind in ("lpopt", "dual-gap", "knapsack-min"):
            doc = self.check("sweep", "--kind", kind, "--n", "5,11", "--rho", "0.5,1")
            self.assertEqual(len(doc["rows"]), 4)

    def test_schema_rejects_missing_fields(self):
        with self.assertRaises(jsonschema.ValidationError):
            self.validator.validate({"command": "lp-solve", "rows": [], "warnings": []})


class InstanceSchema(unittest.TestCase):
    def test_shipped_instances_validate(self):
        validator = jsonschema.Draft202012Validator(load_schema("instance.schema.json"))
        count = 0
        for name in sorted(os.listdir(DATA)):
            with open(data(name)) as f:
                doc = json.load(f)
            if "kind" in doc:
                validator.validate(doc)
                count += 1
        self.assertGreater(count, 0)

    def test_rejects_bad_instance(self):
        validator = jsonschema.Draft202012Validator(load_schema("instance.schema.json"))
        with self.assertRaises(jsonschema.ValidationError):
            validator.validate({"kind": "single_unit", "x": [1.5]})


class Csv(unittest.TestCase):
    def test_crlf_and_header(self):
        res = run("lp-solve", "--instance", data("single_unit_two_halves.json"), "--format", "csv")
        self.assertEqual(res.returncode, 0, res.stderr)
        self.assertTrue(res.stdout.endswith("\r\n"))
        lines = res.stdout.split("\r\n")
        self.assertEqual(lines[0], "element,x,c_f,c_b,pair_mean")
        rows = parse_csv(res.stdout)
        self.assertEqual(len(rows), 2)
        self.assertAlmostEqual(float(rows[0]["c_f"]), 1.0)

    def test_quoted_fields_parse(self):
        res = run("constants")
        self.assertEqual(res.returncode, 0, res.stderr)
        rows = parse_csv(res.stdout)
        self.assertIn("1/(1+e^(-1/2))", [r["closed_form"] for r in rows])
        widths = {len(r) for r in csv.reader(io.StringIO(res.stdout, newline=""))}
        self.assertEqual(len(widths), 1)

    def test_output_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "out.csv")
            res = run("sweep", "--kind", "lpopt", "--n", "3", "--rho", "1", "-o", path)
            self.assertEqual(res.returncode, 0, res.stderr)
            self.assertEqual(res.stdout, "")
            with open(path, newline="") as f:
                self.assertEqual(len(parse_csv(f.read())), 1)


class Seeds(unittest.TestCase):
    ARGS = ("simulate-single-unit", "--instance", "", "--trials", "30000")

    def args(self, *extra):
        out = list(self.ARGS)
        out[2] = data("single_unit_mixed.json")
        return out + list(extra)

    def test_same_seed_same_output_across_workers(self):
        a = run(*self.args("--seed", "11", "--workers", "1"))
        b = run(*self.args("--seed", "11", "--workers", "4"))
        self.assertEqual(a.returncode, 0, a.stderr)
        self.assertEqual(a.stdout, b.stdout)

    def test_environment_seed_is_the_fallback(self):
        flag = run(*self.args("--seed", "21"))
        env = run(*self.args(), env={"FBCRS_SEED": "21"})
        other = run(*self.args(), env={"FBCRS_SEED": "22"})
        self.assertEqual(flag.stdout, env.stdout)
        self.assertNotEqual(env.stdout, other.stdout)
        both = run(*self.args("--seed", "21"), env={"FBCRS_SEED": "22"})
        self.assertEqual(both.stdout, flag.stdout)

    def test_bad_environment_seed(self):
        res = run(*self.args(), env={"FBCRS_SEED": "abc"})
        self.assertEqual(res.returncode, 3)


class ExitCodes(unittest.TestCase):
    def test_infeasible_beta(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "beta.json")
            with open(path, "w") as f:
                json.dump([0.6, 0.6], f)
            res = run("ration", "--instance", data("rationing_two_unit_agents.json"),
                      "--beta", path)
        self.assertEqual(res.returncode, 3)
        self.assertTrue(res.stderr)

    def test_trials_rejected_in_exact_mode(self):
        res = run("ration", "--instance", data("rationing_two_unit_agents.json"),
                  "--trials", "1000")
        self.assertEqual(res.returncode, 3)

    def test_infeasible_plan(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "plan.json")
            with open(path, "w") as f:
                json.dump({"c_f": [1.0, 1.0], "c_b": [1.0, 1.0]}, f)
            res = run("simulate-single-unit", "--instance", data("single_unit_two_halves.json"),
                      "--plan", path, "--trials", "100")
        self.assertEqual(res.returncode, 3)

    def test_wrong_instance_kind(self):
        res = run("lp-solve", "--instance", data("knapsack_two_atoms.json"))
        self.assertEqual(res.returncode, 3)

    def test_malformed_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "bad.json")
            with open(path, "w") as f:
                f.write("{not json")
            res = run("lp-solve", "--instance", path)
        self.assertEqual(res.returncode, 3)

    def test_even_certificate_size(self):
        self.assertEqual(run("dual-certificate", "--n", "4").returncode, 3)

    def test_unknown_flag(self):
        self.assertEqual(run("sweep", "--bogus").returncode, 3)

    def test_help_is_success(self):
        res = run("--help")
        self.assertEqual(res.returncode, 0)
        self.assertIn("ration", res.stdout)


if __name__ == "__main__":
    if len(sys.argv) < 4:
        sys.exit(__doc__)
    BINARY, DATA, SCHEMAS = sys.argv[1:4]
    unittest.main(argv=[sys.argv[0], "-v"])
