"""Every verification suite passes on flat space and fails once the frame is nudged by 1e-2."""

import io
import json
import tempfile
from pathlib import Path

from lorentzlie.cli import run
from lorentzlie.scenes import builtin_document, perturb_document
from lorentzlie.suites import SUITES

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "nudged.json"
    path.write_text(json.dumps(perturb_document(builtin_document("minkowski-cartesian"), 2, 2, 1e-2)))
    print(f"{'suite':22} clean  nudged")
    for suite in SUITES:
        codes = []
        for scene in ("minkowski-cartesian", str(path)):
            out = io.StringIO()
            codes.append(run(["verify", "--scene", scene, "--suite", suite, "--grid", "5"], out, io.StringIO()))
        print(f"{suite:22} {codes[0]:5}  {codes[1]:6}")
print("exit 0 is a pass, 1 a failed check")
