"""Run every scenario in demos/configs through the command-line runner.

Outputs land in demos/out/<config name>/ and the exit code of each run is
printed.  flow_negative_bad_f.ini is expected to fail validation (exit 2).

    python3 demos/run_all_configs.py
"""

from pathlib import Path

from crqflow.cli import main

HERE = Path(__file__).parent
SCENARIO = {"basis_check": "basis-check", "center": "center", "ineq": "ineq", "nm": "nm",
            "green": "green"}

for cfg in sorted((HERE / "configs").glob("*.ini")):
    scenario = SCENARIO.get(cfg.stem, "flow-run")
    code = main([scenario, "--config", str(cfg), "--out", str(HERE / "out" / cfg.stem), "--threads", "2"])
    print(f"{cfg.name:32} {scenario:12} exit {code}")
